"""Centered Gaussian models and the squared Frechet (Wasserstein-2) distance.

Covers the general covariance form
    d^2 = |mu1 - mu2|^2 + tr(S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2})
and the commuting diagonal specialization sum_i (sqrt(v_i) - sqrt(w_i))^2,
plus construction of the projected-and-diffused diagonal covariance that the
partition and stopping analysis is built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .schedule import NoiseSchedule

# negative eigenvalues within this slack are round-off and clamp to zero;
# anything below it means the input was not PSD
_PSD_SLACK = -1e-10
_SYM_TOL = 1e-9

_FLAVORS = ("true", "estimated")


@dataclass(frozen=True)
class Spectrum:
    """Per-component variances of a centered diagonal Gaussian, sorted descending.

    flavor records whether the numbers are ground truth ("true") or empirical
    estimates ("estimated"); the tag is documentation for downstream formulas
    and does not change behavior.  Unsorted input is rejected; use
    from_unsorted to sort and keep the applied permutation.
    """

    variances: tuple[float, ...]
    flavor: str = "true"
    permutation: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.variances)
        if len(vals) < 1:
            raise ValueError("a spectrum needs at least one component")
        if self.flavor not in _FLAVORS:
            raise ValueError(f"flavor must be one of {_FLAVORS}, got {self.flavor!r}")
        for v in vals:
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"variances must be finite and non-negative, got {v!r}")
        if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
            raise ValueError("variances must be sorted non-increasing (see from_unsorted)")
        object.__setattr__(self, "variances", vals)

    @classmethod
    def from_unsorted(cls, values, flavor: str = "estimated") -> "Spectrum":
        """Sort descending (stable, so ties keep input order) and record the permutation."""
        vals = [float(v) for v in values]
        order = sorted(range(len(vals)), key=lambda i: -vals[i])
        return cls(tuple(vals[i] for i in order), flavor, permutation=tuple(order))

    @property
    def was_reordered(self) -> bool:
        """True when from_unsorted actually had to move a component."""
        return self.permutation is not None and self.permutation != tuple(range(len(self.permutation)))

    @property
    def sigmas(self) -> tuple[float, ...]:
        return tuple(math.sqrt(v) for v in self.variances)

    def as_array(self) -> np.ndarray:
        return np.array(self.variances, dtype=float)

    def __len__(self) -> int:
        return len(self.variances)


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Centered Gaussian given by its covariance and eigendecomposition.

    covariance = eigenvectors @ diag(eigenvalues) @ eigenvectors.T with the
    eigenvalues descending; columns of eigenvectors follow the deterministic
    sign convention of eigh_desc.
    """

    covariance: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: Spectrum

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @classmethod
    def from_spectrum(cls, spec: Spectrum) -> "GaussianModel":
        """Axis-aligned model with the given diagonal."""
        cov = np.diag(spec.as_array())
        vecs = np.eye(len(spec))
        cov.flags.writeable = False
        vecs.flags.writeable = False
        return cls(covariance=cov, eigenvectors=vecs, eigenvalues=spec)

    @classmethod
    def from_covariance(cls, M: np.ndarray, flavor: str = "estimated") -> "GaussianModel":
        return eigh_desc(M, flavor=flavor)


def _check_symmetric(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if M.shape[0] > 0:
        gap = float(np.max(np.abs(M - M.T)))
        if gap > _SYM_TOL:
            raise ValueError(f"{name} is not symmetric (max asymmetry {gap:.3e})")
    return 0.5 * (M + M.T)


def _clamped_psd_eigh(M: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigendecomposition with round-off negatives clamped to zero."""
    w, V = np.linalg.eigh(M)
    if w.size and float(w[0]) < _PSD_SLACK:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return np.maximum(w, 0.0), V


def eigh_desc(M: np.ndarray, flavor: str = "estimated") -> GaussianModel:
    """Symmetric PSD eigendecomposition, eigenvalues descending, signs fixed.

    Sign convention: in each eigenvector, the entry of largest absolute value
    (lowest index on ties) is made non-negative, so the factorization is
    deterministic up to degenerate eigenspaces.  Raises LinAlgError if the
    underlying eigensolver fails to converge.
    """
    sym = _check_symmetric(M, "covariance")
    w, V = _clamped_psd_eigh(sym, "covariance")
    w = w[::-1]
    V = V[:, ::-1]
    for j in range(V.shape[1]):
        pivot = int(np.argmax(np.abs(V[:, j])))
        if V[pivot, j] < 0.0:
            V[:, j] = -V[:, j]
    cov = sym.copy()
    cov.flags.writeable = False
    V = np.ascontiguousarray(V)
    V.flags.writeable = False
    return GaussianModel(
        covariance=cov,
        eigenvectors=V,
        eigenvalues=Spectrum.from_unsorted(w, flavor=flavor),
    )


def _psd_sqrt(M: np.ndarray, name: str) -> np.ndarray:
    w, V = _clamped_psd_eigh(M, name)
    return (V * np.sqrt(w)) @ V.T


def frechet_sq_general(
    S1: np.ndarray,
    S2: np.ndarray,
    mu1: np.ndarray | None = None,
    mu2: np.ndarray | None = None,
) -> float:
    """Squared Frechet distance between N(mu1, S1) and N(mu2, S2).

    The whole pipeline works with centered Gaussians, so the means default to
    zero; the mean term is included for completeness.
    """
    A = _check_symmetric(S1, "S1")
    B = _check_symmetric(S2, "S2")
    if A.shape != B.shape:
        raise ValueError(f"covariance shapes differ: {A.shape} vs {B.shape}")
    root_B = _psd_sqrt(B, "S2")
    inner = root_B @ A @ root_B
    w, _ = _clamped_psd_eigh(0.5 * (inner + inner.T), "S2^(1/2) S1 S2^(1/2)")
    value = float(np.trace(A) + np.trace(B) - 2.0 * np.sum(np.sqrt(w)))
    if mu1 is not None or mu2 is not None:
        m1 = np.zeros(A.shape[0]) if mu1 is None else np.asarray(mu1, dtype=float)
        m2 = np.zeros(A.shape[0]) if mu2 is None else np.asarray(mu2, dtype=float)
        value += float(np.sum((m1 - m2) ** 2))
    return max(value, 0.0)


def frechet_sq_diag(v: Spectrum, w: Spectrum) -> float:
    """Commuting diagonal case: sum_i (sqrt(v_i) - sqrt(w_i))^2."""
    if len(v) != len(w):
        raise ValueError(f"spectra lengths differ: {len(v)} vs {len(w)}")
    return float(sum((a - b) ** 2 for a, b in zip(v.sigmas, w.sigmas)))


def diffused_cov_diag(s: NoiseSchedule, t: float, spec: Spectrum, d: int) -> Spectrum:
    """Diagonal covariance of the projected forward marginal at time t.

    Components up to d carry a_t^2 + b_t^2 * variance, the rest are zeroed by
    the projection.  Equivalently this is the law of the backward process at
    backward time T - t.
    """
    D = len(spec)
    if not 1 <= d <= D:
        raise ValueError(f"projection dimension must be in 1..{D}, got {d}")
    if not 0.0 <= t <= s.T:
        raise ValueError(f"time must lie in [0, T={s.T}], got {t}")
    a2 = float(s.a2(t))
    b2 = float(s.b2(t))
    head = tuple(a2 + b2 * v for v in spec.variances[:d])
    return Spectrum(head + (0.0,) * (D - d), flavor=spec.flavor)
