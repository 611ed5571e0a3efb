"""Constrained score matching: capped minimizer, terminal variances, d_min.

The hypothesis class caps the per-component score weight at C > 1; the
minimizer of the score-matching objective is then

    m_hat_d(t) = min(C, 1 / (a_t^2 + b_t^2 vhat_d)),

and the backward process driven by the capped score has per-component
variance V_t solving  dV/dt = 2 (1 - 2 m_hat_d(T - t)) V + 2  from V_0 = 1.
This module provides the closed-form terminal variance, a fixed-step RK4
integrator of the same ODE as an independent oracle, and the d1/d2/d_min
projection-dimension analysis.  Closed forms assume the OU schedule; the cap
C = +inf (math.inf) disables the constraint exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .frechet import Spectrum
from .schedule import NoiseSchedule, inv_a2, make_ou_schedule


@dataclass(frozen=True)
class ConstrainedScore:
    """Capped score-matching minimizer for a fixed estimated spectrum.

    t_prime[d-1] is the backward time at which component d's weight hits the
    cap; the cap is active on backward [t'_d, T] and never active when
    t'_d = T.
    """

    cap: float
    est_spec: Spectrum
    T: float
    t_prime: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.cap > 1.0:
            raise ValueError(f"the cap must exceed 1, got {self.cap}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"final time T must be positive, got {self.T}")
        if len(self.t_prime) != len(self.est_spec):
            raise ValueError("t_prime must have one entry per component")

    @property
    def dim(self) -> int:
        return len(self.est_spec)


def t_prime(C: float, sigma_hat_sq: float, s: NoiseSchedule) -> float:
    """Cap-crossing time: solves C = 1/(a^2 + b^2 vhat) at forward time T - t'.

    Returns T when the cap never binds (C >= 1/vhat, or vhat >= 1).
    """
    if not C > 1.0:
        raise ValueError(f"the cap must exceed 1, got {C}")
    if sigma_hat_sq < 0.0:
        raise ValueError("variance must be non-negative")
    if sigma_hat_sq >= 1.0:
        return s.T
    if sigma_hat_sq > 0.0 and C >= 1.0 / sigma_hat_sq:
        return s.T
    inv_c = 0.0 if math.isinf(C) else 1.0 / C
    return s.T - inv_a2(s, (inv_c - sigma_hat_sq) / (1.0 - sigma_hat_sq))


def make_constrained_score(cap: float, est_spec: Spectrum, T: float) -> ConstrainedScore:
    """Build the minimizer for an estimated spectrum under the OU schedule."""
    s = make_ou_schedule(T)
    primes = tuple(t_prime(cap, v, s) for v in est_spec.variances)
    return ConstrainedScore(cap=float(cap), est_spec=est_spec, T=float(T), t_prime=primes)


def m_hat(cs: ConstrainedScore, d: int, t: float) -> float:
    """Capped weight min(C, 1/(a_t^2 + b_t^2 vhat_d)) at forward time t."""
    if not 1 <= d <= cs.dim:
        raise ValueError(f"dimension must be in 1..{cs.dim}, got {d}")
    if not 0.0 <= t <= cs.T:
        raise ValueError(f"time must lie in [0, T={cs.T}], got {t}")
    vhat = cs.est_spec.variances[d - 1]
    denom = -math.expm1(-2.0 * t) + math.exp(-2.0 * t) * vhat
    uncapped = math.inf if denom == 0.0 else 1.0 / denom
    return min(cs.cap, uncapped)


def terminal_variance_closed(cs: ConstrainedScore, d: int) -> float:
    """Terminal variance V_T of component d under the capped backward flow.

    Branches on whether the cap ever binds: for t' = T the uncapped form

        V_T = vhat (1 - 2 q e^{-2T} + q e^{-4T}) / (1 - 2 q e^{-2T} + q^2 e^{-4T}),

    with q = 1 - vhat, and otherwise the capped phase contributes a relaxation
    toward 1/(2C-1) with rate 4C - 2 over backward [t', T].
    """
    if not 1 <= d <= cs.dim:
        raise ValueError(f"dimension must be in 1..{cs.dim}, got {d}")
    vhat = cs.est_spec.variances[d - 1]
    tp = cs.t_prime[d - 1]
    T = cs.T
    q = 1.0 - vhat
    e2T = math.exp(-2.0 * T)
    if tp == T:
        num = vhat * (1.0 - 2.0 * q * e2T + q * e2T * e2T)
        den = 1.0 - 2.0 * q * e2T + q * q * e2T * e2T
        return num / den
    C = cs.cap
    decay = math.exp((2.0 - 4.0 * C) * (T - tp))
    relax = (1.0 - decay) / (2.0 * C - 1.0)
    base = 1.0 - q * e2T
    start = (1.0 - q * math.exp(-2.0 * (T - tp))) / base
    carry = (1.0 - 2.0 * q * e2T + q * math.exp(-2.0 * (T + tp))) / base
    return relax + decay * start * carry


def _stage_coefficient(cs: ConstrainedScore, vhat: float, t: np.ndarray) -> np.ndarray:
    """ODE coefficient g(t) = 2 (1 - 2 m_hat(T - t)) on an array of backward times."""
    s = cs.T - t
    denom = -np.expm1(-2.0 * s) + np.exp(-2.0 * s) * vhat
    with np.errstate(divide="ignore"):
        uncapped = 1.0 / denom
    m = np.minimum(cs.cap, uncapped)
    return 2.0 * (1.0 - 2.0 * m)


def _rk4_affine_segment(
    cs: ConstrainedScore, vhat: float, t0: float, t1: float, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step affine maps V -> alpha V + beta of classical RK4 on [t0, t1].

    The ODE is linear in V, so one RK4 step is an affine map; evaluating the
    stages at V = 0 and V = 1 recovers (alpha, beta) without re-deriving the
    algebra.  Stage coefficients are precomputed on the knot/midpoint grid.
    """
    dt = (t1 - t0) / n
    knots = t0 + dt * np.arange(n + 1)
    mids = knots[:-1] + 0.5 * dt
    g0 = _stage_coefficient(cs, vhat, knots[:-1])
    gh = _stage_coefficient(cs, vhat, mids)
    g1 = _stage_coefficient(cs, vhat, knots[1:])

    def one_step(V: float) -> np.ndarray:
        k1 = g0 * V + 2.0
        k2 = gh * (V + 0.5 * dt * k1) + 2.0
        k3 = gh * (V + 0.5 * dt * k2) + 2.0
        k4 = g1 * (V + dt * k3) + 2.0
        return V + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    beta = one_step(0.0)
    alpha = one_step(1.0) - beta
    return alpha, beta


def _ode_segments(cs: ConstrainedScore, d: int, steps: int) -> list[tuple[float, float, int]]:
    if steps < 1000:
        raise ValueError(f"need at least 1000 integration steps, got {steps}")
    vhat = cs.est_spec.variances[d - 1]
    if math.isinf(cs.cap) and vhat == 0.0:
        raise ValueError("uncapped coefficient is singular at the data end for a zero variance")
    tp = cs.t_prime[d - 1]
    T = cs.T
    if tp <= 0.0 or tp >= T:
        return [(0.0, T, steps)]
    # split at the cap-crossing kink so each segment is smooth
    n1 = min(max(int(round(steps * tp / T)), 1), steps - 1)
    return [(0.0, tp, n1), (tp, T, steps - n1)]


def variance_ode_path(
    cs: ConstrainedScore, d: int, steps: int = 10000
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 path of the component-d variance over backward [0, T], from V_0 = 1."""
    if not 1 <= d <= cs.dim:
        raise ValueError(f"dimension must be in 1..{cs.dim}, got {d}")
    vhat = cs.est_spec.variances[d - 1]
    ts: list[float] = [0.0]
    vs: list[float] = [1.0]
    V = 1.0
    for t0, t1, n in _ode_segments(cs, d, steps):
        alpha, beta = _rk4_affine_segment(cs, vhat, t0, t1, n)
        dt = (t1 - t0) / n
        for k, (a, b) in enumerate(zip(alpha.tolist(), beta.tolist()), start=1):
            V = a * V + b
            ts.append(t0 + k * dt)
            vs.append(V)
    return np.array(ts), np.array(vs)


def variance_ode_numeric(cs: ConstrainedScore, d: int, steps: int = 10000) -> float:
    """Terminal variance by classical fixed-step RK4; independent oracle for
    terminal_variance_closed."""
    if not 1 <= d <= cs.dim:
        raise ValueError(f"dimension must be in 1..{cs.dim}, got {d}")
    vhat = cs.est_spec.variances[d - 1]
    V = 1.0
    for t0, t1, n in _ode_segments(cs, d, steps):
        alpha, beta = _rk4_affine_segment(cs, vhat, t0, t1, n)
        for a, b in zip(alpha.tolist(), beta.tolist()):
            V = a * V + b
    return V


def d1_d2(true_spec: Spectrum, est_spec: Spectrum, C: float) -> tuple[int, int]:
    """Bracket [d1, d2] for the optimal projection dimension under the cap C.

    d1 = max{d : 1/C <= vhat_d} (1 if the set is empty) and
    d2 = min{d : 1/(2C-1) >= 4 sigma_d^2} (D if empty); d2 uses the true
    spectrum.
    """
    if len(true_spec) != len(est_spec):
        raise ValueError(f"spectra lengths differ: {len(true_spec)} vs {len(est_spec)}")
    if not C > 1.0:
        raise ValueError(f"the cap must exceed 1, got {C}")
    D = len(true_spec)
    inv_c = 0.0 if math.isinf(C) else 1.0 / C
    d1 = 1
    for d in range(1, D + 1):
        if inv_c <= est_spec.variances[d - 1]:
            d1 = d
    threshold = 0.0 if math.isinf(C) else 1.0 / (2.0 * C - 1.0)
    d2 = D
    for d in range(D, 0, -1):
        if threshold >= 4.0 * true_spec.variances[d - 1]:
            d2 = d
        else:
            break
    return d1, d2


@dataclass(frozen=True)
class DMinResult:
    """Exhaustive projection-dimension search: argmin and the full table."""

    d_min: int
    distances: tuple[float, ...]
    terminal_variances: tuple[float, ...]


def d_min_search(cs: ConstrainedScore, true_spec: Spectrum) -> DMinResult:
    """Exhaustive argmin over d of the terminal distance

        dist(d) = sum_{j<=d} (sqrt(V_j) - sigma_j)^2 + sum_{j>d} sigma_j^2,

    with V_j from terminal_variance_closed; smallest d wins ties."""
    if len(true_spec) != cs.dim:
        raise ValueError(f"spectra lengths differ: {len(true_spec)} vs {cs.dim}")
    D = cs.dim
    V = [terminal_variance_closed(cs, j) for j in range(1, D + 1)]
    sig = true_spec.sigmas
    distances = []
    for d in range(1, D + 1):
        head = sum((math.sqrt(V[j]) - sig[j]) ** 2 for j in range(d))
        tail = sum(sig[j] ** 2 for j in range(d, D))
        distances.append(head + tail)
    d_min = min(range(1, D + 1), key=lambda d: distances[d - 1])
    return DMinResult(d_min=d_min, distances=tuple(distances), terminal_variances=tuple(V))


def write_distance_table(
    path: str, result: DMinResult, true_spec: Spectrum, comments: tuple[str, ...] = ()
) -> None:
    """Rows (d, sqrt_V, sigma, frechet_sq): per-component terminal scales and
    the distance for projection dimension d."""
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["d", "sqrt_V", "sigma", "frechet_sq"])
        for d in range(1, len(result.distances) + 1):
            writer.writerow([
                d,
                repr(math.sqrt(result.terminal_variances[d - 1])),
                repr(true_spec.sigmas[d - 1]),
                repr(result.distances[d - 1]),
            ])
