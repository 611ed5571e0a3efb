"""Optimal-dimension time partitions, the monotonicity test, and optimal stopping.

Everything here analyzes the closed-form squared distance between the true
centered Gaussian and the d-dimensional projected backward marginal,

    f(d, x) = sum_{j<=d} (sqrt(x + (1-x) vhat_j) - sigma_j)^2 + sum_{j>d} sigma_j^2,

where x = a^2 evaluated at the forward time T - t matching backward time t.
All boundary computations work in x-space and map through the extended
inverse once; the division convention num/(den)_+ with den <= 0 evaluates to
+inf, 0 or -inf by the sign of num, which the extended inverse then clamps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .frechet import Spectrum, diffused_cov_diag, frechet_sq_diag
from .schedule import NoiseSchedule, inv_a2, log_snr

PARTITION_VARIANTS = ("exact", "plug-in", "robust-lower", "robust-upper")

# bisection tolerance for root finding, in a^2-space
_ROOT_TOL = 1e-12


@dataclass(frozen=True)
class TimePartition:
    """Boundaries t_1..t_{D+1}; dimension d is optimal on [t_d, t_{d+1}).

    well_ordered reports whether the boundaries came out non-decreasing (for
    the plug-in variant this is the well-ordering event, not a guarantee);
    has_ties flags equal adjacent variances, where interval assignment is not
    unique and the smallest optimal dimension is the convention.
    """

    boundaries: tuple[float, ...]
    variant: str
    u: float | None = None
    well_ordered: bool = True
    has_ties: bool = False

    def __post_init__(self) -> None:
        if self.variant not in PARTITION_VARIANTS:
            raise ValueError(f"variant must be one of {PARTITION_VARIANTS}, got {self.variant!r}")
        if len(self.boundaries) < 2:
            raise ValueError("a partition needs at least two boundaries")
        object.__setattr__(self, "boundaries", tuple(float(b) for b in self.boundaries))

    @property
    def dims(self) -> int:
        return len(self.boundaries) - 1


@dataclass(frozen=True)
class RobustPartitions:
    """Bracketing partitions: each unknown exact boundary lies between the
    lower and upper curve, so dimension d is guaranteed optimal on
    [upper_d, lower_{d+1})."""

    lower: TimePartition  # earliest admissible boundary times
    upper: TimePartition  # latest admissible boundary times
    interleaved: bool


@dataclass(frozen=True)
class StoppingResult:
    """Optimal early-stopping offset delta for a fixed latent dimension.

    The backward pass should stop at time T - delta.  root_a2 is the root of
    the distance-derivative equation in a^2-space (NaN when the curve is
    monotone and delta = 0); clamped marks a root pushed to the boundary.
    """

    delta: float
    stop_time: float
    root_a2: float
    condition_sum: float
    monotone: bool
    clamped: bool


def div_plus(num: float, den: float) -> float:
    """num / (den)_+ with the convention (den)_+ = 0 -> signed infinity (0 for num = 0)."""
    if den > 0.0:
        return num / den
    if num > 0.0:
        return math.inf
    if num < 0.0:
        return -math.inf
    return 0.0


def _check_dims(true_spec: Spectrum, est_spec: Spectrum, d: int) -> None:
    if len(true_spec) != len(est_spec):
        raise ValueError(f"spectra lengths differ: {len(true_spec)} vs {len(est_spec)}")
    if not 1 <= d <= len(true_spec):
        raise ValueError(f"dimension must be in 1..{len(true_spec)}, got {d}")


def distance_sq_at(
    s: NoiseSchedule, true_spec: Spectrum, est_spec: Spectrum, d: int, t: float
) -> float:
    """f(d, x) at backward time t, composed from the diffused-covariance form."""
    _check_dims(true_spec, est_spec, d)
    diffused = diffused_cov_diag(s, s.T - t, est_spec, d)
    return frechet_sq_diag(diffused, true_spec)


def distance_sq_grid(true_spec: Spectrum, est_spec: Spectrum, x: np.ndarray) -> np.ndarray:
    """f(d, x) for every d at once; rows follow x, columns are d = 1..D.

    x is the squared signal amplitude a^2 at the forward time matching each
    backward time of interest; vectorized independently of distance_sq_at so
    the two paths cross-check each other.
    """
    if len(true_spec) != len(est_spec):
        raise ValueError(f"spectra lengths differ: {len(true_spec)} vs {len(est_spec)}")
    x = np.asarray(x, dtype=float)[:, None]
    vhat = est_spec.as_array()[None, :]
    sig = np.array(true_spec.sigmas)[None, :]
    head_terms = (np.sqrt(x + (1.0 - x) * vhat) - sig) ** 2
    head = np.cumsum(head_terms, axis=1)
    tail = np.concatenate([np.cumsum((sig**2)[:, ::-1], axis=1)[:, ::-1][:, 1:], np.zeros((1, 1))], axis=1)
    return head + tail


def _has_adjacent_ties(spec: Spectrum) -> bool:
    v = spec.variances
    return any(v[i] == v[i + 1] for i in range(len(v) - 1))


def exact_partition(s: NoiseSchedule, spec: Spectrum) -> TimePartition:
    """Boundaries t_d = T - inv(3 sigma_d^2 / (1 - sigma_d^2)_+) for d = 2..D.

    t_1 = 0 and t_{D+1} = T by convention.  sigma_d = 0 gives t_d = T and
    sigma_d >= 1 gives t_d = 0 through the division and clamping conventions.
    """
    bounds = [0.0]
    for v in spec.variances[1:]:
        bounds.append(s.T - inv_a2(s, div_plus(3.0 * v, 1.0 - v)))
    bounds.append(s.T)
    return TimePartition(
        boundaries=tuple(bounds),
        variant="exact",
        well_ordered=all(a <= b for a, b in zip(bounds, bounds[1:])),
        has_ties=_has_adjacent_ties(spec),
    )


def plugin_partition(
    s: NoiseSchedule, true_spec: Spectrum, est_spec: Spectrum
) -> TimePartition:
    """Boundaries that mix true and estimated variances:

        t_d = T - inv((4 sigma_d^2 - vhat_d) / (1 - vhat_d)_+),  d = 2..D.

    A negative numerator sends the boundary to T.  well_ordered reports
    whether the computed boundaries are monotone, which holds with high
    probability but is not guaranteed for a bad draw.
    """
    if len(true_spec) != len(est_spec):
        raise ValueError(f"spectra lengths differ: {len(true_spec)} vs {len(est_spec)}")
    bounds = [0.0]
    for v, vhat in zip(true_spec.variances[1:], est_spec.variances[1:]):
        bounds.append(s.T - inv_a2(s, div_plus(4.0 * v - vhat, 1.0 - vhat)))
    bounds.append(s.T)
    return TimePartition(
        boundaries=tuple(bounds),
        variant="plug-in",
        well_ordered=all(a <= b for a, b in zip(bounds, bounds[1:])),
        has_ties=_has_adjacent_ties(true_spec) or _has_adjacent_ties(est_spec),
    )


def monotonicity_condition(
    true_spec: Spectrum, est_spec: Spectrum, d: int
) -> tuple[float, bool]:
    """Sign test for the distance curve at dimension d over backward time.

    Returns (sum, sum >= 0) for sum_{j<=d} (1 - sigma_j/sigmahat_j)(1 - vhat_j);
    a non-negative sum means the curve is non-increasing all the way to T.
    The ratio at sigma = sigmahat = 0 is taken as 0 so a trailing zero
    subspace contributes +1 per component.
    """
    _check_dims(true_spec, est_spec, d)
    total = 0.0
    for sig, vhat in zip(true_spec.sigmas[:d], est_spec.variances[:d]):
        sighat = math.sqrt(vhat)
        if sighat == 0.0:
            if sig > 0.0:
                raise ValueError("sigma > 0 with sigma_hat = 0 makes the ratio undefined")
            ratio = 0.0
        else:
            ratio = sig / sighat
        total += (1.0 - ratio) * (1.0 - vhat)
    return total, total >= 0.0


def _stopping_root(
    s: NoiseSchedule, sigmas: tuple[float, ...], vhats: tuple[float, ...]
) -> StoppingResult:
    """Shared root-finder over g(x) = sum (1 - sigma/sqrt(x + (1-x) vhat))(1 - vhat)."""

    def g(x: float) -> float:
        total = 0.0
        for sig, vhat in zip(sigmas, vhats):
            level = math.sqrt(x + (1.0 - x) * vhat)
            if level == 0.0:
                if sig > 0.0:
                    return -math.inf
                ratio = 0.0
            else:
                ratio = sig / level
            total += (1.0 - ratio) * (1.0 - vhat)
        return total

    g0 = g(0.0)
    if g0 >= 0.0:
        return StoppingResult(
            delta=0.0, stop_time=s.T, root_a2=math.nan,
            condition_sum=g0, monotone=True, clamped=False,
        )
    hi = s.a2_T
    if g(hi) < 0.0:
        # derivative negative over the whole range: minimum at x = a2(T), t = 0
        return StoppingResult(
            delta=s.T, stop_time=0.0, root_a2=hi,
            condition_sum=g0, monotone=False, clamped=True,
        )
    lo = 0.0
    while hi - lo > _ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return StoppingResult(
        delta=inv_a2(s, root), stop_time=s.T - inv_a2(s, root), root_a2=root,
        condition_sum=g0, monotone=False, clamped=False,
    )


def stopping_time(
    s: NoiseSchedule, true_spec: Spectrum, est_spec: Spectrum, d: int
) -> StoppingResult:
    """Optimal stopping offset for dimension d with per-component true sigmas.

    The distance curve at fixed d is convex in x = a^2, so its minimizer over
    backward time is either the endpoint (monotone case, delta = 0) or the
    unique root of the derivative, found by bisection in x-space.
    """
    _check_dims(true_spec, est_spec, d)
    return _stopping_root(s, true_spec.sigmas[:d], est_spec.variances[:d])


def optimal_stopping_delta(
    s: NoiseSchedule, sigma: float, est_spec: Spectrum, d0: int
) -> StoppingResult:
    """Stopping offset in the isotropic setting diag(sigma^2, ..., sigma^2, 0, .., 0).

    sigma is the common standard deviation of the first d0 components.  The
    backward pass should stop at time T - delta; a monotone curve gives
    delta = 0 by convention.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 1 <= d0 <= len(est_spec):
        raise ValueError(f"d0 must be in 1..{len(est_spec)}, got {d0}")
    return _stopping_root(s, (sigma,) * d0, est_spec.variances[:d0])


def robust_partition(
    s: NoiseSchedule, est_spec: Spectrum, Ssigma: float, eps_u: float, u: float | None = None
) -> RobustPartitions:
    """Estimation-robust interval boundaries from estimated variances only.

    For d = 2..D the bracket around the unknown exact boundary is

        T - inv((vhat_d +/- 4 S eps + 2 sighat_d sqrt(vhat_d +/- 4 S eps)) / (1 - vhat_d)_+)

    with +4 S eps giving the lower curve and -4 S eps the upper one, so
    dimension d is guaranteed optimal on [upper_d, lower_{d+1}).  Requires the
    perturbed variances to stay non-negative; at eps_u = 0 both curves reduce
    to the plug-in-style boundaries with argument 3 vhat / (1 - vhat).
    """
    if eps_u < 0.0:
        raise ValueError("eps_u must be non-negative")
    if Ssigma < 0.0:
        raise ValueError("Ssigma must be non-negative")
    shift = 4.0 * Ssigma * eps_u
    for vhat in est_spec.variances:
        if vhat > 0.0 and vhat - shift < 0.0:
            raise ValueError(
                f"eps_u too large: variance {vhat} minus 4*S*eps_u = {vhat - shift} is negative"
            )
    lower = [0.0]
    upper = [0.0]
    for vhat in est_spec.variances[1:]:
        sighat = math.sqrt(vhat)
        # bigger argument -> earlier time, so the +shift curve is the lower one
        arg_lo = div_plus(vhat + shift + 2.0 * sighat * math.sqrt(vhat + shift), 1.0 - vhat)
        arg_hi = div_plus(vhat - shift + 2.0 * sighat * math.sqrt(max(vhat - shift, 0.0)), 1.0 - vhat)
        lower.append(s.T - inv_a2(s, arg_lo))
        upper.append(s.T - inv_a2(s, arg_hi))
    lower.append(s.T)
    upper.append(s.T)
    # interleaving: 0 < lower_2 < upper_2 < lower_3 < ... < lower_D < upper_D < T
    merged: list[float] = [0.0]
    for lo, up in zip(lower[1:-1], upper[1:-1]):
        merged.extend((lo, up))
    merged.append(s.T)
    interleaved = all(a < b for a, b in zip(merged, merged[1:]))
    ties = _has_adjacent_ties(est_spec)
    return RobustPartitions(
        lower=TimePartition(tuple(lower), "robust-lower", u=u,
                            well_ordered=all(a <= b for a, b in zip(lower, lower[1:])),
                            has_ties=ties),
        upper=TimePartition(tuple(upper), "robust-upper", u=u,
                            well_ordered=all(a <= b for a, b in zip(upper, upper[1:])),
                            has_ties=ties),
        interleaved=interleaved,
    )


def optimal_dim_at(s: NoiseSchedule, part: TimePartition, t: float) -> int:
    """Dimension owning time t: the largest d whose interval start is <= t.

    Intervals are half-open [t_d, t_{d+1}); t = T belongs to the last one.
    """
    if not 0.0 <= t <= s.T:
        raise ValueError(f"time must lie in [0, T={s.T}], got {t}")
    best = 1
    for d in range(1, part.dims + 1):
        if part.boundaries[d - 1] <= t:
            best = d
    return best


def write_partition_csv(
    path: str,
    parts: "list[TimePartition] | tuple[TimePartition, ...]",
    s: NoiseSchedule,
    comments: tuple[str, ...] = (),
) -> None:
    """Rows (d, boundary_time, boundary_logsnr, variant, u) for each partition.

    boundary_logsnr remaps the boundary through the forward time T - t_d; the
    t_d = T boundary maps to +inf.
    """
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["d", "boundary_time", "boundary_logsnr", "variant", "u"])
        for part in parts:
            for d, t in enumerate(part.boundaries, start=1):
                forward = s.T - t
                snr = math.inf if forward <= 0.0 else float(log_snr(s, forward))
                writer.writerow([
                    d,
                    repr(float(t)),
                    repr(snr),
                    part.variant,
                    "" if part.u is None else repr(float(part.u)),
                ])
