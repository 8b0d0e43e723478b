"""Core denoising-diffusion math: schedules, forward noising, reverse sampling.

Everything here is plain numpy and independent of any network architecture.
Images are C×H×W float arrays in [-1, 1]; noise fields are standard-normal
arrays of the same shape.

Conventions (timesteps are 1-based, t = 1..T):

    beta_t            noise blended in at step t
    alpha_bar_t       prod_{s<=t} (1 - beta_s), with alpha_bar_0 := 1
    forward (step)    y_t = sqrt(1-beta_t) y_{t-1} + sqrt(beta_t) eps_t
    forward (closed)  y_t = sqrt(alpha_bar_t) y_0 + sqrt(1-alpha_bar_t) eps
    posterior         q(y_{t-1} | y_t, y_0) is Gaussian with
                        mean = (1-alpha_bar_{t-1})/(1-alpha_bar_t) * sqrt(1-beta_t) * y_t
                             + sqrt(alpha_bar_{t-1}) * beta_t / (1-alpha_bar_t) * y_0
                        var  = beta_t (1-alpha_bar_{t-1}) / (1-alpha_bar_t)
    reverse step      y_{t-1} = y_t / sqrt(1-beta_t)
                             - beta_t / (sqrt(1-alpha_bar_t) sqrt(1-beta_t)) * eps_hat
                             + sigma_t z

sigma_t is the posterior standard deviation (sqrt of the posterior variance
above), so sigma_1 = 0 and the last reverse step is deterministic.

All functions are pure; randomness enters only through explicit seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NoiseSchedule",
    "make_linear_schedule",
    "forward_sample",
    "iterative_forward",
    "estimate_y0",
    "posterior_params",
    "reverse_step",
    "ancestral_sample",
    "ancestral_sample_batch",
]


@dataclass(frozen=True)
class NoiseSchedule:
    """Precomputed beta / alpha_bar / sigma sequences for T timesteps.

    Arrays are float64 and 0-indexed internally; use ``beta(t)`` etc. with
    1-based t, matching the equations above.
    """

    betas: np.ndarray
    alphas_bar: np.ndarray
    sigmas: np.ndarray

    @property
    def timesteps(self) -> int:
        return len(self.betas)

    def _check_t(self, t: int) -> int:
        t = int(t)
        if not 1 <= t <= self.timesteps:
            raise IndexError(f"timestep {t} outside 1..{self.timesteps}")
        return t

    def beta(self, t: int) -> float:
        return float(self.betas[self._check_t(t) - 1])

    def alpha_bar(self, t: int) -> float:
        """Cumulative signal factor; alpha_bar(0) is 1 by convention."""
        if t == 0:
            return 1.0
        return float(self.alphas_bar[self._check_t(t) - 1])

    def sigma(self, t: int) -> float:
        """Posterior standard deviation at step t; sigma(1) == 0."""
        return float(self.sigmas[self._check_t(t) - 1])


def make_linear_schedule(
    timesteps: int, beta_start: float = 1e-4, beta_end: float = 0.02
) -> NoiseSchedule:
    """Build a schedule with betas linearly spaced over [beta_start, beta_end].

    The running product for alpha_bar is carried out in float64 so that long
    schedules (T in the hundreds) keep full precision.
    """
    if timesteps < 1:
        raise ValueError(f"timesteps must be >= 1, got {timesteps}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError(
            f"betas must satisfy 0 < beta_start <= beta_end < 1, "
            f"got ({beta_start}, {beta_end})"
        )
    if timesteps == 1:
        betas = np.array([beta_start], dtype=np.float64)
    else:
        betas = np.linspace(beta_start, beta_end, timesteps, dtype=np.float64)
    alphas_bar = np.cumprod(1.0 - betas)
    # sigma_t^2 = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t); the t=1
    # term is exactly 0 because alpha_bar_0 = 1.
    prev = np.concatenate([[1.0], alphas_bar[:-1]])
    sigmas = np.sqrt(betas * (1.0 - prev) / (1.0 - alphas_bar))
    return NoiseSchedule(betas=betas, alphas_bar=alphas_bar, sigmas=sigmas)


def _as_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def forward_sample(y0, t: int, eps, schedule: NoiseSchedule) -> np.ndarray:
    """Draw y_t directly from y_0: sqrt(alpha_bar_t) y_0 + sqrt(1-alpha_bar_t) eps."""
    y0 = _as_array(y0, "y0")
    eps = _as_array(eps, "eps")
    if y0.shape != eps.shape:
        raise ValueError(f"shape mismatch: y0 {y0.shape} vs eps {eps.shape}")
    a = schedule.alpha_bar(schedule._check_t(t))
    return np.sqrt(a) * y0 + np.sqrt(1.0 - a) * eps


def iterative_forward(
    y0, t: int, eps_seq: Sequence[np.ndarray], schedule: NoiseSchedule
) -> np.ndarray:
    """Apply the stepwise forward chain for s = 1..t with the given noises.

    Distributionally equivalent to ``forward_sample`` when each eps is a
    fresh standard-normal draw; useful for verifying that equivalence.
    """
    schedule._check_t(t)
    if len(eps_seq) != t:
        raise ValueError(f"need exactly {t} noise fields, got {len(eps_seq)}")
    y = _as_array(y0, "y0")
    for s in range(1, t + 1):
        eps = _as_array(eps_seq[s - 1], f"eps_seq[{s - 1}]")
        if eps.shape != y.shape:
            raise ValueError(f"eps_seq[{s - 1}] shape {eps.shape} != {y.shape}")
        b = schedule.beta(s)
        y = np.sqrt(1.0 - b) * y + np.sqrt(b) * eps
    return y


def estimate_y0(y_t, t: int, eps_hat, schedule: NoiseSchedule) -> np.ndarray:
    """Invert the closed-form forward draw given a noise estimate.

    y_0 ≈ (y_t - sqrt(1-alpha_bar_t) eps_hat) / sqrt(alpha_bar_t), valid at
    every step (the single-step inverse of the closed-form marginal).
    """
    y_t = _as_array(y_t, "y_t")
    eps_hat = _as_array(eps_hat, "eps_hat")
    if y_t.shape != eps_hat.shape:
        raise ValueError(f"shape mismatch: y_t {y_t.shape} vs eps_hat {eps_hat.shape}")
    a = schedule.alpha_bar(schedule._check_t(t))
    return (y_t - np.sqrt(1.0 - a) * eps_hat) / np.sqrt(a)


def posterior_params(
    y_t, y0, t: int, schedule: NoiseSchedule
) -> tuple[np.ndarray, float]:
    """Mean and scalar variance of the Gaussian posterior q(y_{t-1} | y_t, y_0).

    At t = 1 the mean is exactly y_0 and the variance exactly 0.
    """
    y_t = _as_array(y_t, "y_t")
    y0 = _as_array(y0, "y0")
    if y_t.shape != y0.shape:
        raise ValueError(f"shape mismatch: y_t {y_t.shape} vs y0 {y0.shape}")
    b = schedule.beta(t)
    a_t = schedule.alpha_bar(t)
    a_prev = schedule.alpha_bar(t - 1)
    coef_yt = (1.0 - a_prev) / (1.0 - a_t) * np.sqrt(1.0 - b)
    coef_y0 = np.sqrt(a_prev) * b / (1.0 - a_t)
    mean = coef_yt * y_t + coef_y0 * y0
    variance = b * (1.0 - a_prev) / (1.0 - a_t)
    return mean, float(variance)


def reverse_step(y_t, t: int, eps_hat, z, schedule: NoiseSchedule) -> np.ndarray:
    """One reverse iteration from y_t to y_{t-1}.

    Substituting the estimated y_0 into the posterior mean collapses to

        y_{t-1} = y_t / sqrt(1-beta_t)
                - beta_t / (sqrt(1-alpha_bar_t) sqrt(1-beta_t)) * eps_hat
                + sigma_t * z

    z is ignored at t = 1, where sigma_1 = 0 makes the step deterministic.
    """
    y_t = _as_array(y_t, "y_t")
    eps_hat = _as_array(eps_hat, "eps_hat")
    if y_t.shape != eps_hat.shape:
        raise ValueError(f"shape mismatch: y_t {y_t.shape} vs eps_hat {eps_hat.shape}")
    b = schedule.beta(t)
    a_t = schedule.alpha_bar(t)
    mean = y_t / np.sqrt(1.0 - b) - (b / (np.sqrt(1.0 - a_t) * np.sqrt(1.0 - b))) * eps_hat
    if t == 1:
        return mean
    z = _as_array(z, "z")
    if z.shape != y_t.shape:
        raise ValueError(f"shape mismatch: y_t {y_t.shape} vs z {z.shape}")
    return mean + schedule.sigma(t) * z


Predictor = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


def ancestral_sample(
    predict: Predictor,
    x_cond: np.ndarray,
    schedule: NoiseSchedule,
    seed,
    channels: int = 3,
) -> np.ndarray:
    """Run the full reverse chain from pure noise, conditioned on x_cond.

    ``predict(x_cond, y_t, t)`` must return a noise estimate with the same
    shape as y_t. The result is clamped to [-1, 1]. Given the same seed the
    output is bit-identical across calls.
    """
    x_cond = np.asarray(x_cond, dtype=np.float64)
    h, w = x_cond.shape[-2:]
    shape = (channels, h, w)
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(shape)
    for t in range(schedule.timesteps, 0, -1):
        eps_hat = np.asarray(predict(x_cond, y, t), dtype=np.float64)
        if eps_hat.shape != shape:
            raise ValueError(
                f"predictor returned shape {eps_hat.shape}, expected {shape}"
            )
        z = rng.standard_normal(shape) if t > 1 else None
        y = reverse_step(y, t, eps_hat, z, schedule)
    return np.clip(y, -1.0, 1.0)


BatchPredictor = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


def ancestral_sample_batch(
    predict_batch: BatchPredictor,
    x_conds: np.ndarray,
    schedule: NoiseSchedule,
    seed: int,
    channels: int = 3,
) -> np.ndarray:
    """Batched ancestral sampling with one predictor call per timestep.

    Item i uses the noise stream seeded by (seed, i), so the result for each
    item equals ``ancestral_sample(..., seed=(seed, i))`` whenever the batch
    predictor is itemwise-consistent with the single-sample one.
    """
    x_conds = np.asarray(x_conds, dtype=np.float64)
    n = x_conds.shape[0]
    h, w = x_conds.shape[-2:]
    shape = (n, channels, h, w)
    rngs = [np.random.default_rng((seed, i)) for i in range(n)]
    y = np.stack([r.standard_normal(shape[1:]) for r in rngs])
    for t in range(schedule.timesteps, 0, -1):
        eps_hat = np.asarray(predict_batch(x_conds, y, t), dtype=np.float64)
        if eps_hat.shape != shape:
            raise ValueError(
                f"predictor returned shape {eps_hat.shape}, expected {shape}"
            )
        b = schedule.beta(t)
        a_t = schedule.alpha_bar(t)
        y = y / np.sqrt(1.0 - b) - (b / (np.sqrt(1.0 - a_t) * np.sqrt(1.0 - b))) * eps_hat
        if t > 1:
            z = np.stack([r.standard_normal(shape[1:]) for r in rngs])
            y = y + schedule.sigma(t) * z
    return np.clip(y, -1.0, 1.0)
