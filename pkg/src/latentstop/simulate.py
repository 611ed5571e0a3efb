"""Euler-Maruyama simulation of the forward and backward SDEs.

The forward pass integrates dX = -w^2 X dt + sqrt(2 w^2) dW on [0, T]; the
backward pass integrates dX = w^2 (X + 2 s(X)) dt + sqrt(2 w^2) dW in backward
time with the exact, plug-in, or capped diagonal score.  These simulators are
the stochastic oracle for the closed forms, so they deliberately use plain EM
stepping (no exact-transition shortcuts) and draw every increment from the
counter-based stream layer: trajectory i at step k sees the same normals no
matter how rows are chunked.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .estimation import SampleSet, empirical_covariance
from .frechet import GaussianModel, Spectrum, frechet_sq_general
from .schedule import NoiseSchedule

SCORE_KINDS = ("exact", "plugin", "capped")
BASIS_KINDS = ("axis", "eigen")

_DEFAULT_CHUNK = 65536


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Monte-Carlo run description.

    spectrum carries the variances the score is built from: the true ones for
    score_kind "exact", the estimated ones for "plugin" and "capped".  The
    capped kind needs cap > 1, an OU schedule, and always starts the backward
    pass from a standard Gaussian; exact/plugin start from the diffused law
    N(0, a_T^2 I + b_T^2 diag(spectrum)) unless start_standard is set.
    """

    schedule: NoiseSchedule
    spectrum: Spectrum
    steps: int = 1000
    trajectories: int = 10000
    seed: int = 1
    score_kind: str = "plugin"
    cap: float | None = None
    projection_dim: int | None = None
    basis: str = "axis"
    eigenvectors: np.ndarray | None = None
    stop_time: float | None = None
    start_standard: bool = False

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("need at least one step")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.score_kind not in SCORE_KINDS:
            raise ValueError(f"score_kind must be one of {SCORE_KINDS}, got {self.score_kind!r}")
        if self.basis not in BASIS_KINDS:
            raise ValueError(f"basis must be one of {BASIS_KINDS}, got {self.basis!r}")
        D = len(self.spectrum)
        d = D if self.projection_dim is None else self.projection_dim
        if not 1 <= d <= D:
            raise ValueError(f"projection dimension must be in 1..{D}, got {d}")
        if self.basis == "eigen":
            if self.eigenvectors is None:
                raise ValueError("eigen basis requires eigenvectors")
            if np.asarray(self.eigenvectors).shape != (D, D):
                raise ValueError("eigenvectors must be D x D")
        stop = self.schedule.T if self.stop_time is None else self.stop_time
        if not 0.0 <= stop <= self.schedule.T:
            raise ValueError(f"stop_time must lie in [0, T={self.schedule.T}], got {stop}")
        if self.score_kind == "capped":
            if self.cap is None or not self.cap > 1.0:
                raise ValueError("capped score requires cap > 1")
            if self.schedule.kind != "ou":
                raise ValueError("capped score is defined for the OU schedule only")
            object.__setattr__(self, "start_standard", True)

    @property
    def dim(self) -> int:
        return len(self.spectrum)

    @property
    def latent_dim(self) -> int:
        return self.dim if self.projection_dim is None else self.projection_dim

    @property
    def resolved_stop(self) -> float:
        return self.schedule.T if self.stop_time is None else float(self.stop_time)


@dataclass(frozen=True, eq=False)
class SimResult:
    """Final samples plus (time, samples) snapshots, all in ambient coordinates."""

    final: SampleSet
    final_time: float
    snapshots: tuple[tuple[float, SampleSet], ...]


def _snapshot_indices(times, dt: float, k_stop: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for t in times:
        idx = int(round(float(t) / dt))
        if not 0 <= idx <= k_stop:
            raise ValueError(f"snapshot time {t} outside the integrated range")
        out.setdefault(idx, idx * dt)
    return out


def simulate_forward(
    cfg: SimConfig,
    init: SampleSet,
    snapshot_times: tuple[float, ...] = (),
    chunk_rows: int = _DEFAULT_CHUNK,
) -> SimResult:
    """Forward EM pass over [0, T] starting from the given rows.

    Snapshot times are realized on the step grid (nearest grid point).
    """
    s = cfg.schedule
    K = cfg.steps
    dt = s.T / K
    if init.dim != cfg.dim:
        raise ValueError(f"init dimension {init.dim} does not match spectrum dimension {cfg.dim}")
    n = init.n
    snaps = _snapshot_indices(snapshot_times, dt, K)

    collected: dict[int, list[np.ndarray]] = {idx: [] for idx in snaps}
    finals: list[np.ndarray] = []
    for row0 in range(0, n, chunk_rows):
        X = np.array(init.data[row0 : row0 + chunk_rows], dtype=float)
        rows = X.shape[0]
        for k in range(K + 1):
            if k in collected:
                collected[k].append(X.copy())
            if k == K:
                break
            w2 = float(s.w2(k * dt))
            if w2 == 0.0:
                continue  # degenerate weight: no drift, no noise, no stream draw
            Z = rng.normal_rows(cfg.seed, rng.FORWARD_STREAM, k, rows, cfg.dim, row_start=row0)
            X = X - dt * w2 * X + math.sqrt(2.0 * w2 * dt) * Z
        finals.append(X)

    snapshots = tuple(
        (snaps[idx], SampleSet(np.vstack(collected[idx]), seed=cfg.seed))
        for idx in sorted(snaps)
    )
    return SimResult(
        final=SampleSet(np.vstack(finals), seed=cfg.seed), final_time=s.T, snapshots=snapshots
    )


def _score_scale(cfg: SimConfig, forward_time: float, variances: np.ndarray) -> np.ndarray:
    """Per-component weight m(s) of the diagonal score -m x at forward time s."""
    a2 = float(cfg.schedule.a2(forward_time))
    b2 = float(cfg.schedule.b2(forward_time))
    denom = a2 + b2 * variances
    with np.errstate(divide="ignore"):
        m = 1.0 / denom
    if cfg.score_kind == "capped":
        m = np.minimum(cfg.cap, m)
    return m


def _embed(cfg: SimConfig, X: np.ndarray) -> np.ndarray:
    """Map latent rows back to ambient coordinates via the transposed projection."""
    d = cfg.latent_dim
    if cfg.basis == "eigen":
        return X @ cfg.eigenvectors[:, :d].T
    out = np.zeros((X.shape[0], cfg.dim))
    out[:, :d] = X
    return out


def simulate_backward(
    cfg: SimConfig,
    snapshot_times: tuple[float, ...] = (),
    chunk_rows: int = _DEFAULT_CHUNK,
) -> SimResult:
    """Backward EM pass from backward time 0 to the configured stop time.

    Integration runs in the d-dimensional latent space; outputs are embedded
    back to ambient coordinates.  The stop and snapshot times are realized on
    the step grid.
    """
    s = cfg.schedule
    K = cfg.steps
    dt = s.T / K
    d = cfg.latent_dim
    variances = cfg.spectrum.as_array()[:d]
    k_stop = int(round(cfg.resolved_stop / dt))
    snaps = _snapshot_indices(snapshot_times, dt, k_stop)

    aT2 = s.a2_T
    bT2 = 1.0 - aT2
    init_scale = np.ones(d) if cfg.start_standard else np.sqrt(aT2 + bT2 * variances)

    collected: dict[int, list[np.ndarray]] = {idx: [] for idx in snaps}
    finals: list[np.ndarray] = []
    for row0 in range(0, cfg.trajectories, chunk_rows):
        rows = min(chunk_rows, cfg.trajectories - row0)
        X = rng.normal_rows(cfg.seed, rng.INIT_STREAM, 0, rows, d, row_start=row0) * init_scale
        for k in range(k_stop + 1):
            if k in collected:
                collected[k].append(_embed(cfg, X))
            if k == k_stop:
                break
            forward_time = s.T - k * dt
            w2 = float(s.w2(forward_time))
            m = _score_scale(cfg, forward_time, variances)
            Z = rng.normal_rows(cfg.seed, rng.BACKWARD_STREAM, k, rows, d, row_start=row0)
            X = X + dt * w2 * (1.0 - 2.0 * m) * X + math.sqrt(2.0 * w2 * dt) * Z
        finals.append(_embed(cfg, X))

    snapshots = tuple(
        (snaps[idx], SampleSet(np.vstack(collected[idx]), seed=cfg.seed))
        for idx in sorted(snaps)
    )
    return SimResult(
        final=SampleSet(np.vstack(finals), seed=cfg.seed),
        final_time=k_stop * dt,
        snapshots=snapshots,
    )


def empirical_frechet(samples: SampleSet, target: GaussianModel) -> float:
    """Squared Frechet distance between the fitted sample Gaussian and the target."""
    if samples.n <= samples.dim:
        raise ValueError(f"degenerate sample: n={samples.n} rows for D={samples.dim} dimensions")
    fitted = empirical_covariance(samples)
    return frechet_sq_general(fitted.covariance, target.covariance)


def write_snapshot_csv(
    path: str,
    rows: "list[tuple[float, int, float, float, float]]",
    comments: tuple[str, ...] = (),
) -> None:
    """Rows (t, component, empirical_variance, analytic_variance, stderr)."""
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "component", "empirical_variance", "analytic_variance", "stderr"])
        for t, comp, emp, ana, se in rows:
            writer.writerow([repr(float(t)), comp, repr(float(emp)), repr(float(ana)), repr(float(se))])
