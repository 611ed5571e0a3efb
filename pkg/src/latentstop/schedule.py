"""Variance-preserving noise schedules and time remappings.

A schedule is the pair of squared amplitudes (a_t^2, b_t^2) of the forward
SDE marginals, with b_t^2 = 1 - a_t^2, together with the final time T and an
extended inverse of t -> a_t^2 that clamps out-of-range arguments to the
endpoints.  Only the Ornstein-Uhlenbeck instance (unit drift weight,
a_t^2 = 1 - e^{-2t}) is built in; the generic constructor accepts any
strictly increasing a_t^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

# tolerance for the generic bisection inverse, in a^2-space
_INV_TOL = 1e-12


@dataclass(frozen=True)
class NoiseSchedule:
    """Forward noise amplitudes: a2(t) grows from 0, b2(t) = 1 - a2(t) decays.

    w2 is the squared drift weight of the forward SDE
    dX_t = -w_t^2 X_t dt + sqrt(2 w_t^2) dW_t, needed only by simulators.
    inv_a2_exact, when given, is the analytic inverse of a2 on [0, a2(T)];
    otherwise inv_a2 falls back to bisection.
    """

    T: float
    a2: Callable[[ArrayLike], ArrayLike]
    b2: Callable[[ArrayLike], ArrayLike]
    w2: Callable[[ArrayLike], ArrayLike]
    inv_a2_exact: Callable[[float], float] | None = None
    kind: str = "generic"

    @property
    def a2_T(self) -> float:
        """Largest attainable squared signal amplitude, a2(T) < 1."""
        return float(self.a2(self.T))


def _as_float_or_array(x: np.ndarray):
    return x if x.ndim else float(x)


def _ou_a2(t: ArrayLike) -> ArrayLike:
    return _as_float_or_array(-np.expm1(-2.0 * np.asarray(t, dtype=float)))


def _ou_b2(t: ArrayLike) -> ArrayLike:
    return _as_float_or_array(np.exp(-2.0 * np.asarray(t, dtype=float)))


def _ou_w2(t: ArrayLike) -> ArrayLike:
    t = np.asarray(t, dtype=float)
    return _as_float_or_array(np.ones_like(t))


def make_ou_schedule(T: float) -> NoiseSchedule:
    """Ornstein-Uhlenbeck schedule: a2(t) = 1 - e^{-2t}, inverse -ln(1-x)/2."""
    if not (isinstance(T, (int, float)) and math.isfinite(T) and T > 0):
        raise ValueError(f"final time T must be a positive finite real, got {T!r}")
    return NoiseSchedule(
        T=float(T),
        a2=_ou_a2,
        b2=_ou_b2,
        w2=_ou_w2,
        inv_a2_exact=lambda x: -0.5 * math.log1p(-x),
        kind="ou",
    )


def make_schedule(
    T: float,
    a2: Callable[[ArrayLike], ArrayLike],
    w2: Callable[[ArrayLike], ArrayLike],
    kind: str = "generic",
) -> NoiseSchedule:
    """Generic variance-preserving schedule; the inverse uses bisection."""
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"final time T must be a positive finite real, got {T!r}")
    b2 = lambda t: _as_float_or_array(1.0 - np.asarray(a2(t), dtype=float))
    return NoiseSchedule(T=float(T), a2=a2, b2=b2, w2=w2, inv_a2_exact=None, kind=kind)


def _bisect_inverse(s: NoiseSchedule, x: float) -> float:
    lo, hi = 0.0, s.T
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = float(s.a2(mid))
        if abs(val - x) <= _INV_TOL:
            return mid
        if val < x:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * math.ulp(hi):
            break
    return 0.5 * (lo + hi)


def inv_a2(s: NoiseSchedule, x: float) -> float:
    """Extended inverse of a2: 0 below range, T above range (including +inf)."""
    if math.isnan(x):
        raise ValueError("inv_a2 argument must not be NaN")
    if x < 0.0:
        return 0.0
    if x > s.a2_T:
        return s.T
    t = s.inv_a2_exact(x) if s.inv_a2_exact is not None else _bisect_inverse(s, x)
    return min(max(t, 0.0), s.T)


def log_snr(s: NoiseSchedule, t: ArrayLike) -> ArrayLike:
    """ln(b_t^2 / a_t^2); defined for t in (0, T] since a_0 = 0."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("log_snr is undefined at t <= 0 (a2(0) = 0)")
    if np.any(arr > s.T):
        raise ValueError(f"time beyond the schedule horizon T={s.T}")
    return _as_float_or_array(np.log(np.asarray(s.b2(arr)) / np.asarray(s.a2(arr))))


def logsnr_time_grid(s: NoiseSchedule, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Forward times whose log-SNR values are uniform on [logsnr(T*1e-4), logsnr(T)].

    Returns (times ascending, matching log-SNR values descending).
    """
    if n_points < 2:
        raise ValueError("need at least two grid points")
    lo = float(log_snr(s, s.T))
    hi = float(log_snr(s, s.T * 1e-4))
    snr = np.linspace(hi, lo, n_points)
    # ln(b2/a2) = L  with b2 = 1 - a2  =>  a2 = 1/(1+e^L)
    a2_vals = 1.0 / (1.0 + np.exp(snr))
    times = np.array([inv_a2(s, x) for x in a2_vals])
    return times, snr
