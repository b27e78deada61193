"""Sampling-based trajectory inference over state sequences (MPPI).

The planner keeps a candidate trajectory, repeatedly perturbs it with
temporally smooth Gaussian noise, scores every perturbed sample, and replaces
the candidate with the weight-averaged sample, where weights are the
exponentiated negative scores. Index 0 is clamped to the start state
throughout, so the result is always conditioned on where the agent actually
is.

Smoothness comes from drawing noise with covariance ``scale^2 * (A^T A)^-1``
for the second-order finite-difference matrix ``A`` whose final two rows are
removed, which leaves the end of the horizon unconstrained: noise variance
grows toward the end of the trajectory, so plans explore widely where they
are least committed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .energy import (
    EnergyModel,
    fixed_goal_scores,
    goal_scores,
    reward_scores,
    trajectory_energies,
)

SCORE_MODES = ("gaussian-goal", "fixed-goal", "reward", "prior-only")


@dataclass(frozen=True)
class PlannerConfig:
    """MPPI hyperparameters.

    ``noise_scale`` multiplies the smooth-noise covariance directly and is
    decayed geometrically by ``noise_decay`` each iteration, which anneals the
    candidate from coarse exploration to fine convergence.
    """

    num_samples: int = 200
    num_iterations: int = 20
    horizon: int = 20
    noise_scale: float = 0.02
    goal_weight: float = 1.0
    score_mode: str = "gaussian-goal"
    temperature: float = 1.0
    noise_decay: float = 0.92

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.num_iterations < 0:
            raise ValueError("num_iterations must be >= 0")
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if not self.noise_scale > 0:
            raise ValueError("noise_scale must be positive")
        if self.goal_weight < 0:
            raise ValueError("goal_weight must be non-negative")
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not 0 < self.noise_decay <= 1:
            raise ValueError("noise_decay must lie in (0, 1]")


def finite_difference_matrix(horizon: int) -> np.ndarray:
    """Second-order finite-difference (acceleration) matrix over the horizon.

    Rows slide the stencil (1, -2, 1) along the diagonal; the first two rows
    pin the start of the trajectory and the two rows that would pin the end
    are dropped. The result is unit-diagonal lower-triangular, so ``A^T A``
    is symmetric positive definite.
    """
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    a = np.zeros((horizon, horizon))
    a[0, 0] = 1.0
    a[1, 0] = -2.0
    a[1, 1] = 1.0
    for i in range(2, horizon):
        a[i, i - 2 : i + 1] = (1.0, -2.0, 1.0)
    return a


class SmoothNoiseGen:
    """Draws zero-mean noise with covariance ``scale^2 * (A^T A)^-1`` per column.

    ``A`` is unit-lower-triangular with a fixed three-term stencil, so
    solving ``A y = z`` is the forward recurrence
    ``y_t = z_t + 2 y_{t-1} - y_{t-2}`` (a discrete double integration of
    white noise), vectorized over all columns at once.
    """

    def __init__(self, horizon: int, state_dim: int):
        if state_dim < 1:
            raise ValueError("state_dim must be >= 1")
        self.horizon = horizon
        self.state_dim = state_dim
        self.factor = finite_difference_matrix(horizon)
        self.precision = self.factor.T @ self.factor

    def covariance(self) -> np.ndarray:
        inv = np.linalg.solve(self.factor, np.eye(self.horizon))
        return inv @ inv.T

    def sample(self, scale: float, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """One (T, d) perturbation, or a (n, T, d) batch when ``n`` is given."""
        if scale < 0:
            raise ValueError("scale must be non-negative")
        count = 1 if n is None else n
        z = rng.standard_normal((self.horizon, count * self.state_dim)) * scale
        y = np.empty_like(z)
        y[0] = z[0]
        if self.horizon > 1:
            y[1] = z[1] + 2.0 * y[0]
        for t in range(2, self.horizon):
            y[t] = z[t] + 2.0 * y[t - 1] - y[t - 2]
        out = y.reshape(self.horizon, count, self.state_dim).transpose(1, 0, 2)
        return out[0] if n is None else out


def sample_smooth_noise(
    gen: SmoothNoiseGen, scale: float, rng: np.random.Generator
) -> np.ndarray:
    return gen.sample(scale, rng)


def mppi_weights(scores: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Normalized exponentiated negative scores (stabilized by the minimum)."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a non-empty 1-D array")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    # exponent floor keeps negligible weights out of the subnormal range,
    # where arithmetic slows down by orders of magnitude on some hosts
    w = np.exp(np.maximum(-(scores - scores.min()) / temperature, -650.0))
    return w / w.sum()


def _score_samples(
    model: EnergyModel,
    samples: np.ndarray,
    target: np.ndarray | Callable[[np.ndarray], np.ndarray] | None,
    config: PlannerConfig,
) -> np.ndarray:
    if config.score_mode == "gaussian-goal":
        return goal_scores(model, samples, target, config.goal_weight)
    if config.score_mode == "fixed-goal":
        return fixed_goal_scores(model, samples, target)
    if config.score_mode == "reward":
        return reward_scores(model, samples, target)
    return trajectory_energies(model, samples)


def _check_target(config: PlannerConfig, target, state_dim: int):
    if config.score_mode in ("gaussian-goal", "fixed-goal"):
        target = np.asarray(target, dtype=float)
        if target.shape != (state_dim,):
            raise ValueError(f"goal shape {target.shape} != ({state_dim},)")
        return target
    if config.score_mode == "reward":
        if not callable(target):
            raise ValueError("reward score_mode needs a callable target")
        return target
    return None


def plan(
    model: EnergyModel,
    s_start: np.ndarray,
    target: np.ndarray | Callable[[np.ndarray], np.ndarray] | None,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Infer a (horizon, state_dim) trajectory starting at ``s_start``.

    The candidate starts as the constant trajectory at the start state. Each
    iteration draws ``num_samples`` smooth perturbations of the candidate,
    re-clamps their first state, scores them according to ``score_mode``
    (``target`` is a goal vector, a vectorized reward function, or None for
    prior-only), and averages them under the MPPI weights. Samples with
    non-finite scores get weight zero; if every score is non-finite the
    planner raises.

    Deterministic given the model, inputs and generator state.
    """
    s_start = np.asarray(s_start, dtype=float)
    if s_start.shape != (model.state_dim,):
        raise ValueError(f"start shape {s_start.shape} != ({model.state_dim},)")
    target = _check_target(config, target, model.state_dim)

    gen = SmoothNoiseGen(config.horizon, model.state_dim)
    candidate = np.tile(s_start, (config.horizon, 1))
    scale = config.noise_scale
    for _ in range(config.num_iterations):
        noise = gen.sample(scale, rng, n=config.num_samples)
        samples = candidate[None, :, :] + noise
        samples[:, 0, :] = s_start
        scores = _score_samples(model, samples, target, config)
        finite = np.isfinite(scores)
        if not finite.any():
            raise ValueError("all sampled trajectories scored non-finite")
        weights = np.zeros(len(scores))
        weights[finite] = mppi_weights(scores[finite], config.temperature)
        candidate = np.einsum("n,ntd->td", weights, samples)
        candidate[0] = s_start
        scale *= config.noise_decay
    return candidate
