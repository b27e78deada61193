"""Transition energies, trajectory scores, and the contrastive objective.

Data conventions used throughout the package:

* a state is a float vector of length ``state_dim``;
* a transition pair packs two consecutive states into one row of length
  ``2 * state_dim`` (``pack_pairs`` builds such rows);
* a trajectory is a (T, state_dim) array with T >= 2, and a batch of
  trajectories is (n, T, state_dim).

All scoring functions are pure: lower score means higher trajectory
probability. The scalar energy of a transition is the network output on the
concatenated pair, and a trajectory's energy is the sum over its consecutive
pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .nn import (
    MlpGrads,
    MlpParams,
    add_grads,
    backward,
    forward_cached,
    mlp_forward,
    mlp_init,
)


@dataclass
class EnergyModel:
    """A scalar energy network over packed transition pairs."""

    net: MlpParams
    state_dim: int

    def __post_init__(self) -> None:
        if self.state_dim <= 0:
            raise ValueError("state_dim must be positive")
        if self.net.in_dim != 2 * self.state_dim:
            raise ValueError(
                f"network in_dim {self.net.in_dim} != 2 * state_dim {2 * self.state_dim}"
            )
        if self.net.out_dim != 1:
            raise ValueError("energy network must have scalar output")


def make_energy_model(
    state_dim: int,
    rng: np.random.Generator,
    hidden_sizes: tuple[int, ...] = (128, 128, 128),
) -> EnergyModel:
    dims = [2 * state_dim, *hidden_sizes, 1]
    return EnergyModel(mlp_init(dims, rng), state_dim)


def pack_pairs(s_from: np.ndarray, s_to: np.ndarray) -> np.ndarray:
    """Concatenate from/to states (single vectors or batches) into pair rows."""
    s_from = np.asarray(s_from, dtype=float)
    s_to = np.asarray(s_to, dtype=float)
    if s_from.shape != s_to.shape:
        raise ValueError(f"state shapes differ: {s_from.shape} vs {s_to.shape}")
    return np.concatenate([s_from, s_to], axis=-1)


def check_trajectory(traj: np.ndarray, state_dim: int | None = None) -> np.ndarray:
    traj = np.asarray(traj, dtype=float)
    if traj.ndim != 2 or traj.shape[0] < 2:
        raise ValueError("a trajectory is a (T, state_dim) array with T >= 2")
    if state_dim is not None and traj.shape[1] != state_dim:
        raise ValueError(f"trajectory state_dim {traj.shape[1]} != expected {state_dim}")
    if not np.isfinite(traj).all():
        raise ValueError("trajectory contains non-finite entries")
    return traj


def collate(traj: np.ndarray) -> np.ndarray:
    """Split a trajectory of T states into its T-1 consecutive pair rows."""
    traj = check_trajectory(traj)
    return pack_pairs(traj[:-1], traj[1:])


def _collate_batch(trajs: np.ndarray) -> np.ndarray:
    # (n, T, d) -> (n * (T-1), 2d), pairs of trajectory i contiguous.
    return np.concatenate([trajs[:, :-1, :], trajs[:, 1:, :]], axis=2).reshape(
        trajs.shape[0] * (trajs.shape[1] - 1), 2 * trajs.shape[2]
    )


def transition_energies(model: EnergyModel, pairs: np.ndarray) -> np.ndarray:
    """Energies of a (n, 2*state_dim) batch of packed pairs."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2 * model.state_dim:
        raise ValueError(f"expected (n, {2 * model.state_dim}) pair batch, got {pairs.shape}")
    return mlp_forward(model.net, pairs)[:, 0]


def transition_energy(model: EnergyModel, pair: np.ndarray) -> float:
    pair = np.asarray(pair, dtype=float)
    if pair.shape != (2 * model.state_dim,):
        raise ValueError(f"expected pair of length {2 * model.state_dim}, got {pair.shape}")
    return float(mlp_forward(model.net, pair)[0])


def trajectory_energies(model: EnergyModel, trajs: np.ndarray) -> np.ndarray:
    """Summed pair energies of a (n, T, state_dim) trajectory batch."""
    trajs = np.asarray(trajs, dtype=float)
    if trajs.ndim != 3 or trajs.shape[1] < 2 or trajs.shape[2] != model.state_dim:
        raise ValueError(f"expected (n, T>=2, {model.state_dim}) batch, got {trajs.shape}")
    n, T, _ = trajs.shape
    energies = transition_energies(model, _collate_batch(trajs))
    return energies.reshape(n, T - 1).sum(axis=1)


def trajectory_energy(model: EnergyModel, traj: np.ndarray) -> float:
    traj = check_trajectory(traj, model.state_dim)
    return float(trajectory_energies(model, traj[None, :, :])[0])


def _check_goal(model: EnergyModel, goal: np.ndarray) -> np.ndarray:
    goal = np.asarray(goal, dtype=float)
    if goal.shape != (model.state_dim,):
        raise ValueError(f"goal shape {goal.shape} != ({model.state_dim},)")
    return goal


def goal_scores(
    model: EnergyModel, trajs: np.ndarray, goal: np.ndarray, goal_weight: float = 1.0
) -> np.ndarray:
    """Trajectory energy plus a quadratic end-state penalty (Gaussian goal)."""
    goal = _check_goal(model, goal)
    if goal_weight < 0:
        raise ValueError("goal_weight must be non-negative")
    trajs = np.asarray(trajs, dtype=float)
    penalty = ((trajs[:, -1, :] - goal) ** 2).sum(axis=1)
    return trajectory_energies(model, trajs) + goal_weight * penalty


def goal_score(
    model: EnergyModel, traj: np.ndarray, goal: np.ndarray, goal_weight: float = 1.0
) -> float:
    traj = check_trajectory(traj, model.state_dim)
    return float(goal_scores(model, traj[None], goal, goal_weight)[0])


def fixed_goal_scores(model: EnergyModel, trajs: np.ndarray, goal: np.ndarray) -> np.ndarray:
    """Trajectory energy where the goal enters as one more transition pair."""
    goal = _check_goal(model, goal)
    trajs = np.asarray(trajs, dtype=float)
    tail = pack_pairs(trajs[:, -1, :], np.broadcast_to(goal, trajs[:, -1, :].shape))
    return trajectory_energies(model, trajs) + transition_energies(model, tail)


def fixed_goal_score(model: EnergyModel, traj: np.ndarray, goal: np.ndarray) -> float:
    traj = check_trajectory(traj, model.state_dim)
    return float(fixed_goal_scores(model, traj[None], goal)[0])


def reward_scores(
    model: EnergyModel, trajs: np.ndarray, reward: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """Energy minus accumulated reward, so lower still means more probable.

    ``reward`` must map a (..., state_dim) array of states to (...) values.
    """
    trajs = np.asarray(trajs, dtype=float)
    rewards = np.asarray(reward(trajs), dtype=float)
    if rewards.shape != trajs.shape[:2]:
        raise ValueError(f"reward output shape {rewards.shape} != {trajs.shape[:2]}")
    return trajectory_energies(model, trajs) - rewards.sum(axis=1)


def reward_score(
    model: EnergyModel, traj: np.ndarray, reward: Callable[[np.ndarray], np.ndarray]
) -> float:
    traj = check_trajectory(traj, model.state_dim)
    return float(reward_scores(model, traj[None], reward)[0])


def _pad_to(pairs: np.ndarray, size: int) -> np.ndarray:
    # Deterministic cyclic resampling keeps the loss pure and runs replayable.
    if pairs.shape[0] == size:
        return pairs
    reps = -(-size // pairs.shape[0])
    return np.tile(pairs, (reps, 1))[:size]


def contrastive_loss_and_grads(
    model: EnergyModel,
    positives: np.ndarray,
    negatives: np.ndarray,
    l2_coeff: float = 1.0,
) -> tuple[float, MlpGrads]:
    """Mean of ``l2*(E+^2 + E-^2) + E+ - E-`` over the batch, with exact grads.

    Positive pairs are observed transitions whose energy is pushed down;
    negative pairs come from the model's own plans and are pushed up. The
    squared terms keep energies from drifting. Unequal batch sizes are
    reconciled by cyclically resampling the smaller batch.
    """
    positives = np.atleast_2d(np.asarray(positives, dtype=float))
    negatives = np.atleast_2d(np.asarray(negatives, dtype=float))
    if positives.shape[0] == 0 or negatives.shape[0] == 0:
        raise ValueError("both batches must be non-empty")
    width = 2 * model.state_dim
    if positives.shape[1] != width or negatives.shape[1] != width:
        raise ValueError(f"pair rows must have width {width}")
    n = max(positives.shape[0], negatives.shape[0])
    positives = _pad_to(positives, n)
    negatives = _pad_to(negatives, n)

    e_pos, cache_pos = forward_cached(model.net, positives)
    e_neg, cache_neg = forward_cached(model.net, negatives)
    e_pos = e_pos[:, 0]
    e_neg = e_neg[:, 0]
    loss = float(np.mean(l2_coeff * (e_pos**2 + e_neg**2) + e_pos - e_neg))

    cot_pos = ((2.0 * l2_coeff * e_pos + 1.0) / n)[:, None]
    cot_neg = ((2.0 * l2_coeff * e_neg - 1.0) / n)[:, None]
    grads_pos, _ = backward(model.net, cache_pos, cot_pos)
    grads_neg, _ = backward(model.net, cache_neg, cot_neg)
    return loss, add_grads(grads_pos, grads_neg)


def sample_negative_pairs(
    model: EnergyModel,
    seed_pairs: np.ndarray,
    rng: np.random.Generator,
    num_samples: int = 16,
    num_iters: int = 5,
    scale: float = 0.05,
    temperature: float = 1.0,
) -> np.ndarray:
    """Draw low-energy pairs from the model by iterated perturb-and-reweight.

    Each seed row is refined independently: perturb it with isotropic
    Gaussian noise, weight the perturbations by exponentiated negative
    energy, and move to the weighted average. Used to generate negatives
    when training on a static dataset, where no planned trajectories exist.
    """
    seeds = np.atleast_2d(np.asarray(seed_pairs, dtype=float))
    b, width = seeds.shape
    if width != 2 * model.state_dim:
        raise ValueError(f"pair rows must have width {2 * model.state_dim}")
    current = seeds.copy()
    for _ in range(num_iters):
        noise = rng.normal(0.0, scale, size=(b, num_samples, width))
        candidates = current[:, None, :] + noise
        energies = transition_energies(model, candidates.reshape(b * num_samples, width))
        energies = energies.reshape(b, num_samples)
        shifted = -(energies - energies.min(axis=1, keepdims=True)) / temperature
        weights = np.exp(np.maximum(shifted, -650.0))
        weights /= weights.sum(axis=1, keepdims=True)
        current = np.einsum("bn,bnw->bw", weights, candidates)
    return current
