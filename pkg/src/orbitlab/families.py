"""Spectrum families for regime sweeps, each checked against its regime tag."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectra import RegimeKind, RegimeTag, Spectrum, classify_regime

FAMILIES = ("generic", "one-gap", "one-gap-4-2", "two-gap", "two-gap-1-nm1")

EXPECTED_KINDS = {
    "generic": {RegimeKind.TWO_GAP, RegimeKind.TWO_GAP_1_NM1},
    "one-gap": {RegimeKind.ONE_GAP},
    "one-gap-4-2": {RegimeKind.ONE_GAP_4_2},
    "two-gap": {RegimeKind.TWO_GAP},
    "two-gap-1-nm1": {RegimeKind.TWO_GAP_1_NM1},
}

# fixed inner splitting of the (-a, -a+eps, a-eps, a) family
EPS_4_2 = 0.01


class FamilyMismatch(ValueError):
    """A generated spectrum does not carry the regime its family promises."""


def _centered(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v - v.mean()


def _cluster(m: int, spacing: float) -> np.ndarray:
    return (np.arange(m) - 0.5 * (m - 1)) * spacing


def family_spectrum(family: str, n: int, T: float, seed: int = 0) -> Spectrum:
    """Representative tracefree spectrum of the given family at scale T."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if n < 3:
        raise ValueError("families need n >= 3")
    if not T > 0:
        raise ValueError("scale T must be positive")
    if family == "generic":
        rng = np.random.default_rng(seed)
        while True:
            gaps = rng.uniform(0.0, 1.0, size=n - 1)
            if gaps.min() > 0 and gaps.max() <= 3.0 * gaps.min():
                break
        lam = _centered(np.concatenate([[0.0], np.cumsum(gaps)]))
        lam *= T / np.linalg.norm(lam)
    elif family == "one-gap":
        lam = np.empty(n)
        lam[0] = -(n - 1) * T / n
        lam[1:] = T / n + _cluster(n - 1, T / (1000.0 * n))
    elif family == "one-gap-4-2":
        if n != 4:
            raise ValueError("one-gap-4-2 exists only for n = 4")
        lam = np.array([-T, -T + EPS_4_2, T - EPS_4_2, T])
    elif family == "two-gap":
        if n < 4:
            raise ValueError("for n = 3 every two-gap spectrum is the (1, n-1) case")
        small = T / (1000.0 * n)
        gaps = np.concatenate([[T, T], np.full(n - 3, small)])
        lam = _centered(np.concatenate([[0.0], np.cumsum(gaps)]))
    else:  # two-gap-1-nm1
        lam = np.concatenate([[-T], _cluster(n - 2, T / (1000.0 * n)), [T]])
    return Spectrum(lam)


def validate(family: str, s: Spectrum) -> RegimeTag:
    tag = classify_regime(s)
    if tag.kind not in EXPECTED_KINDS[family]:
        raise FamilyMismatch(f"family {family} produced {tag.kind} for {list(s.values)}")
    return tag


@dataclass
class SweepSpec:
    family: str
    n: int
    grid: list
    seed: int = 0
    n_samples: int = 10**6
    target_ci: float | None = None
    budget: int = 10**8
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        self.grid = [float(t) for t in self.grid]
        if not self.grid or any(not t > 0 for t in self.grid):
            raise ValueError("grid must be a nonempty list of positive scales")
        # n_samples = 0 means "skip Monte Carlo"
        if self.n_samples < 0 or self.budget < 1:
            raise ValueError("n_samples must be >= 0 and budget positive")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {"family", "n", "grid", "seed", "n_samples", "target_ci", "budget"}
        return cls(**{k: v for k, v in d.items() if k in known},
                   extra={k: v for k, v in d.items() if k not in known})

    def spectra(self):
        """Yield (T, spectrum, tag); refuses the whole sweep on a mislabeled member."""
        out = []
        for i, T in enumerate(self.grid):
            s = family_spectrum(self.family, self.n, T, seed=self.seed + i)
            out.append((T, s, validate(self.family, s)))
        return out
