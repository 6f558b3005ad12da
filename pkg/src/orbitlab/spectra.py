"""Spectra, gap regimes and the closed-form density side of the main estimate."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalue list lambda_1 <= ... <= lambda_n (n >= 1).

    Inputs are sorted on construction; the objects defined here are Weyl
    invariant so nothing is lost.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.atleast_1d(np.asarray(self.values, dtype=float)).ravel())
        if v.size < 1:
            raise ValueError("a spectrum needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def trace(self) -> float:
        return float(math.fsum(self.values))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    @property
    def spread(self) -> float:
        return float(self.values[-1] - self.values[0])

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.values)

    def is_tracefree(self) -> bool:
        return abs(self.trace) < 1e-12 * (1.0 + self.norm)

    def is_regular(self) -> bool:
        return bool(np.all(self.gaps > 0))

    def tracefree_part(self) -> "Spectrum":
        return Spectrum(self.values - self.trace / self.n)

    def scaled(self, t: float) -> "Spectrum":
        return Spectrum(t * self.values)

    def to_json(self) -> str:
        return json.dumps([float(x) for x in self.values])

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("spectrum JSON must be an array of numbers")
        return cls(np.array(data, dtype=float))

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_spectrum(s) -> Spectrum:
    return s if isinstance(s, Spectrum) else Spectrum(s)


def log_prime(x):
    """log'(x) = log(2 + x) for x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("log_prime is defined for x >= 0")
    out = np.log(2.0 + x)
    return float(out) if out.ndim == 0 else out


def L_n(s) -> float:
    """The logarithmic factor L_n(lambda) of the main estimate."""
    lam = as_spectrum(s).values
    n = lam.size
    if n < 2:
        raise ValueError("L_n needs n >= 2")
    if n == 2:
        return 1.0
    norm = float(np.linalg.norm(lam))
    main = log_prime(norm / (1.0 + abs(lam[1]) + abs(lam[n - 2])))
    out = main ** (n - 2)
    if n == 4:
        out *= log_prime(norm / (1.0 + abs(lam[0] - lam[1]) + abs(lam[2] - lam[3])))
    return float(out)


def tilde_beta(s) -> float:
    """prod over positive roots of (1 + |<lambda, alpha>|), i.e. prod_{i<j} (1 + |l_i - l_j|)."""
    lam = as_spectrum(s).values
    i, j = np.triu_indices(lam.size, k=1)
    return float(np.prod(1.0 + np.abs(lam[i] - lam[j])))


def A_n(s) -> float:
    """(1 + ||lambda||)^(-n+1) L_n(lambda)."""
    sp = as_spectrum(s)
    return float((1.0 + sp.norm) ** (1 - sp.n) * L_n(sp))


class RegimeKind(str, enum.Enum):
    ONE_GAP = "OneGap"
    ONE_GAP_4_2 = "OneGapExceptional4_2"
    TWO_GAP = "TwoGap"
    TWO_GAP_1_NM1 = "TwoGapExceptional1_nm1"
    GENERIC = "Generic"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RegimeTag:
    kind: RegimeKind
    I: int
    J: int | None
    d: float
    gaps: tuple = field(default=())

    def to_dict(self) -> dict:
        return {"kind": str(self.kind), "I": self.I, "J": self.J, "d": self.d,
                "gaps": list(self.gaps)}


def classify_regime(s) -> RegimeTag:
    """Place lambda in the one-large-gap / two-large-gaps case analysis.

    Gap indices are 1-based, matching lambda_1..lambda_n.  Ties for the
    largest gap go to the smallest index.
    """
    sp = as_spectrum(s)
    n = sp.n
    if n < 3:
        raise ValueError("classify_regime needs n >= 3")
    gaps = sp.gaps
    d = sp.spread
    if not d > 0:
        raise ValueError("degenerate spectrum: all eigenvalues equal")
    order = sorted(range(n - 1), key=lambda i: (-gaps[i], i))
    big = order[0]
    gap_tuple = tuple(float(g) for g in gaps)
    if gaps[big] > (1.0 - 1.0 / (100 * n)) * d:
        kind = RegimeKind.ONE_GAP_4_2 if (n, big + 1) == (4, 2) else RegimeKind.ONE_GAP
        return RegimeTag(kind, big + 1, None, d, gap_tuple)
    second = order[1]
    i, j = sorted((big + 1, second + 1))
    kind = RegimeKind.TWO_GAP_1_NM1 if (i, j) == (1, n - 1) else RegimeKind.TWO_GAP
    return RegimeTag(kind, i, j, d, gap_tuple)


def trace_reduce(s) -> Spectrum | None:
    """Tracefree spectrum with the same concentration probability at radius 1.

    Returns None when |Tr lambda| > sqrt(n), where the probability is zero.
    """
    sp = as_spectrum(s)
    n = sp.n
    tr = sp.trace
    if sp.is_tracefree():
        return sp
    if abs(tr) > math.sqrt(n):
        return None
    rem = 1.0 - tr * tr / n
    if rem <= 0.0:
        # |Tr| = sqrt(n): the admissible ball has radius zero
        return None
    return Spectrum((sp.values - tr / n) / math.sqrt(rem))
