"""Per-cycle parameter sampling inside a bounded box.

Three samplers share the box-containment contract: bounded uniform,
truncated Gaussian (rejection from the unconstrained Gaussian), and an
affine-invariant ensemble MCMC (Goodman-Weare stretch move) targeting the
bounded uniform density. A bootstrap resampler stabilizes the systolic
interval from measured peak-to-peak values.
"""

from __future__ import annotations

from dataclasses import dataclass

import logging

import numpy as np
from scipy.stats import truncnorm

from .errors import ParameterError, SamplingError
from .heart import THETA_DIM, THETA_FIELDS, CycleTheta

logger = logging.getLogger(__name__)

STRETCH_SCALE = 2.0  # standard stretch-move tuning


@dataclass(frozen=True)
class ParamBounds:
    """Componentwise box [lower, upper]; 5-dim for CycleTheta, any dim internally."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ParameterError("bounds must be 1-D arrays of equal length")
        if not np.all(lo < hi):
            raise ParameterError("lower bounds must be strictly below upper bounds")

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def range(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x >= self.lower) & (x <= self.upper), axis=1)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    @classmethod
    def from_ranges(cls, **ranges) -> "ParamBounds":
        """Build a theta box from keyword (lo, hi) pairs in THETA_FIELDS order."""
        missing = set(THETA_FIELDS) - set(ranges)
        if missing:
            raise ParameterError(f"missing bounds for {sorted(missing)}")
        lo = np.array([ranges[f][0] for f in THETA_FIELDS], dtype=float)
        hi = np.array([ranges[f][1] for f in THETA_FIELDS], dtype=float)
        return cls(lo, hi)


@dataclass(frozen=True)
class PriorSpec:
    """Which within-box prior to sample from, plus its hyperparameters."""

    kind: str = "uniform"
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    walkers: int = 32
    steps: int = 500
    burn_in: int = 200

    def __post_init__(self):
        if self.kind not in ("uniform", "truncated_gaussian", "ensemble_mcmc"):
            raise ParameterError(f"unknown prior kind {self.kind!r}")
        if self.std is not None and np.any(np.asarray(self.std) <= 0):
            raise ParameterError("prior std must be > 0")
        if self.steps <= self.burn_in:
            raise ParameterError("steps must exceed burn_in")


def _thetas_from_matrix(samples: np.ndarray) -> list[CycleTheta]:
    return [CycleTheta.from_array(row) for row in samples]


def sample_theta_matrix(prior: PriorSpec, bounds: ParamBounds, n: int, seed) -> np.ndarray:
    """Sample n vectors inside the box; rows ordered by draw."""
    if n < 1:
        raise ParameterError("need n >= 1 samples")
    rng = np.random.default_rng(seed)
    d = bounds.dim
    if prior.kind == "uniform":
        return rng.uniform(bounds.lower, bounds.upper, size=(n, d))
    if prior.kind == "truncated_gaussian":
        mean = bounds.midpoint if prior.mean is None else np.asarray(prior.mean, dtype=float)
        std = bounds.range / 4.0 if prior.std is None else np.asarray(prior.std, dtype=float)
        mean, std = np.broadcast_to(mean, (d,)), np.broadcast_to(std, (d,))
        # a mean sitting many deviations outside the box leaves (effectively)
        # no prior mass inside it: the regime where rejection sampling from
        # N(mean, std) would starve below 0.1% acceptance
        gap = np.maximum(np.maximum(bounds.lower - mean, mean - bounds.upper), 0.0)
        if np.any(gap > 6.0 * std):
            raise SamplingError(
                "truncated-Gaussian prior mis-specified: mean lies more than 6 std "
                "outside the box (rejection acceptance below 0.1%)"
            )
        out = np.empty((n, d))
        for i in range(d):
            a = (bounds.lower[i] - mean[i]) / std[i]
            b = (bounds.upper[i] - mean[i]) / std[i]
            out[:, i] = truncnorm.rvs(a, b, loc=mean[i], scale=std[i], size=n,
                                      random_state=rng)
        return out
    # ensemble_mcmc: run long enough to flatten at least n post-burn-in samples
    steps = max(prior.steps, prior.burn_in + int(np.ceil(n / prior.walkers)))
    flat = stretch_move_uniform(bounds, prior.walkers, steps, prior.burn_in, rng)
    return flat[:n]


def sample_thetas(prior: PriorSpec, bounds: ParamBounds, n: int, seed) -> list[CycleTheta]:
    if bounds.dim != THETA_DIM:
        raise ParameterError(f"theta sampling needs a {THETA_DIM}-dim box, got {bounds.dim}")
    return _thetas_from_matrix(sample_theta_matrix(prior, bounds, n, seed))


def stretch_move_uniform(bounds: ParamBounds, walkers: int, steps: int, burn_in: int,
                         seed, a: float = STRETCH_SCALE) -> np.ndarray:
    """Goodman-Weare stretch move targeting the uniform density on the box.

    Proposal for walker j with partner k: y = x_k + z*(x_j - x_k), with z
    drawn from g(z) ~ 1/sqrt(z) on [1/a, a]; acceptance min(1, z^(d-1))
    when y stays inside the box, 0 otherwise. Walkers update in two halves
    so each proposal uses the current complementary ensemble. Returns the
    post-burn-in samples flattened to shape ((steps-burn_in)*walkers, d).
    """
    d = bounds.dim
    if walkers < 2 * d or walkers < 4:
        raise ParameterError(f"need walkers >= max(2*dim, 4) = {max(2 * d, 4)}, got {walkers}")
    if walkers % 2:
        raise ParameterError("walker count must be even")
    if steps <= burn_in:
        raise ParameterError("steps must exceed burn_in")
    rng = np.random.default_rng(seed)
    x = rng.uniform(bounds.lower, bounds.upper, size=(walkers, d))
    halves = (np.arange(walkers // 2), np.arange(walkers // 2, walkers))
    kept = np.empty((steps - burn_in, walkers, d))
    steps_since_accept = 0
    accepted_total = 0
    for step in range(steps):
        accepted_this_step = 0
        for own, other in ((halves[0], halves[1]), (halves[1], halves[0])):
            m = own.size
            z = (1.0 + (a - 1.0) * rng.random(m)) ** 2 / a
            partners = x[other[rng.integers(0, other.size, m)]]
            proposal = partners + z[:, None] * (x[own] - partners)
            inside = bounds.contains(proposal)
            accept = inside & (rng.random(m) < z ** (d - 1))
            x[own[accept]] = proposal[accept]
            accepted_this_step += int(accept.sum())
        accepted_total += accepted_this_step
        steps_since_accept = 0 if accepted_this_step else steps_since_accept + 1
        if steps_since_accept >= 100:
            raise SamplingError("ensemble sampler stuck: no acceptance over 100 consecutive steps")
        if step >= burn_in:
            kept[step - burn_in] = x
    rate = accepted_total / (steps * walkers)
    logger.info("stretch move: dim=%d walkers=%d acceptance rate %.3f", d, walkers, rate)
    return kept.reshape(-1, d)


def ensemble_mcmc_sample(bounds: ParamBounds, walkers: int, steps: int, burn_in: int,
                         seed) -> list[CycleTheta]:
    if bounds.dim != THETA_DIM:
        raise ParameterError(f"theta sampling needs a {THETA_DIM}-dim box, got {bounds.dim}")
    flat = stretch_move_uniform(bounds, walkers, steps, burn_in, seed)
    return _thetas_from_matrix(flat)


def bootstrap_delta_t(measured, n: int, seed) -> np.ndarray:
    """Resample n systolic intervals with replacement from the measured set."""
    measured = np.asarray(measured, dtype=float)
    if measured.size == 0:
        raise ParameterError("cannot bootstrap from an empty measurement set")
    if n < 1:
        raise ParameterError("need n >= 1 draws")
    rng = np.random.default_rng(seed)
    return rng.choice(measured, size=n, replace=True)


def integrated_autocorr_time(chain: np.ndarray, max_lag: int | None = None) -> float:
    """Integrated autocorrelation time of a 1-D chain (initial-positive-sum).

    Used for effective-sample-size accounting in the sampler diagnostics.
    """
    x = np.asarray(chain, dtype=float)
    x = x - x.mean()
    n = x.size
    if n < 4:
        return 1.0
    spec = np.fft.rfft(x, 2 * n)
    acov = np.fft.irfft(spec * np.conj(spec))[:n].real / n
    if acov[0] <= 0:
        return 1.0
    rho = acov / acov[0]
    limit = max_lag or n // 2
    tau = 1.0
    for lag in range(1, limit):
        if rho[lag] <= 0:
            break
        tau += 2.0 * rho[lag]
    return max(tau, 1.0)
