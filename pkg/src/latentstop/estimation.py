"""Sample generation, empirical moments, and concentration-bound quantities."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .frechet import GaussianModel, Spectrum, eigh_desc


@dataclass(frozen=True, eq=False)
class SampleSet:
    """n i.i.d. draws as rows; seed 0 marks externally supplied data."""

    data: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"data must be a non-empty n x D matrix, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def sample_gaussian(model: GaussianModel, n: int, seed: int) -> SampleSet:
    """Draw n rows of O Lambda^{1/2} z with z standard normal, deterministically."""
    if n < 1:
        raise ValueError("need at least one sample")
    D = model.dim
    z = rng.normal_rows(seed, rng.DATA_STREAM, 0, n, D)
    scale = np.sqrt(model.eigenvalues.as_array())
    return SampleSet(data=(z * scale) @ model.eigenvectors.T, seed=seed)


def empirical_variances(s: SampleSet) -> Spectrum:
    """Per-component second moments (1/n) sum x_id^2, sorted descending.

    The sort permutation is recorded on the returned spectrum, and
    was_reordered reports whether the empirical ordering disagreed with the
    component order of the data.
    """
    second_moments = np.mean(s.data**2, axis=0)
    return Spectrum.from_unsorted(second_moments, flavor="estimated")


def empirical_covariance(s: SampleSet) -> GaussianModel:
    """(1/n) X^T X, eigendecomposed with the deterministic sign convention."""
    cov = (s.data.T @ s.data) / s.n
    return eigh_desc(cov, flavor="estimated")


def epsilon_u(n: int, D: int, u: float, Cuniv: float = 1.0) -> float:
    """Covariance-concentration radius (8 Cuniv / 3)(sqrt((D+u)/n) + (D+u)/n).

    The universal constant of the underlying bound is unspecified in the
    source; it is exposed as Cuniv (default 1) and only scales the radius.
    """
    if n < 1:
        raise ValueError("sample count must be positive")
    if D < 1:
        raise ValueError("dimension must be positive")
    if u < 0:
        raise ValueError("tail parameter must be non-negative")
    if not Cuniv > 0:
        raise ValueError("Cuniv must be positive")
    ratio = (D + u) / n
    return (8.0 * Cuniv / 3.0) * (math.sqrt(ratio) + ratio)


def s_of_sigma(spec: Spectrum) -> float:
    """sum_d max(sigma_d, sigma_d^2), where sigma_d = sqrt(variance_d).

    Callers choose whether to pass the true or the estimated spectrum; the
    two readings coexist in the source analysis and are not reconciled here.
    """
    return float(sum(max(sig, sig * sig) for sig in spec.sigmas))


def chi2_deviation_bound(n: int, eps: float) -> float:
    """Upper bound 2 exp(-eps^2 n / (4(eps+1))) on P[|sigma_hat^2 - sigma^2| > eps sigma^2]."""
    if n < 1:
        raise ValueError("sample count must be positive")
    if not eps > 0:
        raise ValueError("relative error must be positive")
    return 2.0 * math.exp(-eps * eps * n / (4.0 * (eps + 1.0)))


def save_samples_csv(s: SampleSet, path: str) -> None:
    """Write rows under a `x1,...,xD` header with round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(s.dim)])
        for row in s.data:
            writer.writerow([repr(float(v)) for v in row])


def load_samples_csv(path: str) -> SampleSet:
    """Read a SampleSet written by save_samples_csv; seed is 0 (external data)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header != [f"x{j + 1}" for j in range(len(header))]:
            raise ValueError(f"{path}: expected header x1,...,xD, got {header!r}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return SampleSet(data=np.array(rows, dtype=float), seed=0)
