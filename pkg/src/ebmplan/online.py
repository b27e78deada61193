"""Online energy-model training against a live environment.

One training iteration plans a trajectory with the current model, executes it
through ground-truth inverse dynamics until the real state deviates from the
plan by more than a threshold, and then takes one contrastive step: the
executed real transitions are positives, the attempted planned transitions up
to the deviation are negatives, each mixed with samples from its replay
buffer. When execution tracks the plan exactly the fresh positives and
negatives coincide and cancel, so only planning errors drive learning.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .energy import (
    EnergyModel,
    collate,
    contrastive_loss_and_grads,
    make_energy_model,
)
from .envs import EnvSpec, occupancy_cells, vectorized_reward
from .nn import AdamHyper, AdamState, adam_step, init_adam_state
from .planner import PlannerConfig, plan


class ReplayBuffer:
    """Bounded FIFO of packed transition-pair rows with uniform resampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: deque[np.ndarray] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._entries)

    def add(self, rows: np.ndarray) -> None:
        for row in np.atleast_2d(np.asarray(rows, dtype=float)):
            self._entries.append(row.copy())

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n rows uniformly with replacement; requires a non-empty buffer."""
        if len(self._entries) == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._entries), size=n)
        return np.stack([self._entries[i] for i in idx])

    def as_array(self) -> np.ndarray:
        return np.stack(list(self._entries)) if self._entries else np.empty((0, 0))


@dataclass(frozen=True)
class OnlineConfig:
    """Knobs of the online training loop (planner settings ride along)."""

    planner: PlannerConfig = field(default_factory=PlannerConfig)
    deviation_threshold: float = 0.1
    batch_size: int | None = None
    buffer_capacity: int = 2000
    env_step_budget: int = 5000
    episode_length: int = 50
    goal_tolerance: float = 0.05
    hidden_sizes: tuple[int, ...] = (64, 64)
    adam: AdamHyper = field(default_factory=AdamHyper)
    l2_coeff: float = 1.0
    occupancy_cell: float = 0.1

    def __post_init__(self) -> None:
        if not self.deviation_threshold > 0:
            raise ValueError("deviation_threshold must be positive")
        if self.env_step_budget < 0:
            raise ValueError("env_step_budget must be non-negative")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 when given")


def execute_plan(
    spec: EnvSpec, state: np.ndarray, planned: np.ndarray, deviation_threshold: float
) -> tuple[np.ndarray, np.ndarray]:
    """Follow a planned trajectory until reality drifts away from it.

    Each step feeds the next planned state through the environment's inverse
    dynamics and executes the resulting action. Execution stops after the
    first transition whose real outcome is farther than ``deviation_threshold``
    from the planned state; that transition is kept, so the returned real
    trajectory and the matching planned prefix always have equal length.
    """
    state = np.asarray(state, dtype=float)
    planned = np.asarray(planned, dtype=float)
    if planned.ndim != 2 or planned.shape[0] < 2:
        raise ValueError("planned trajectory must be (T>=2, state_dim)")
    if not np.array_equal(planned[0], state):
        raise ValueError("planned trajectory must start at the current state")
    real = [state]
    for t in range(planned.shape[0] - 1):
        action = spec.inverse_dynamics(real[-1], planned[t + 1])
        nxt = spec.step(real[-1], action)
        real.append(np.asarray(nxt, dtype=float))
        if np.linalg.norm(real[-1] - planned[t + 1]) > deviation_threshold:
            break
    executed = len(real)
    return np.stack(real), planned[:executed].copy()


def _cut_at_goal(
    spec: EnvSpec,
    goal: np.ndarray | None,
    tolerance: float,
    real: np.ndarray,
    prefix: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    # Drop transitions past the first goal hit so the episode ends exactly there.
    if goal is None:
        return real, prefix
    for i in range(1, real.shape[0]):
        if spec.reward(real[i], goal) >= -tolerance:
            return real[: i + 1], prefix[: i + 1]
    return real, prefix


@dataclass
class OnlineStepResult:
    model: EnergyModel
    adam_state: AdamState
    state: np.ndarray
    real_traj: np.ndarray
    plan_prefix: np.ndarray
    loss: float


def online_train_step(
    spec: EnvSpec,
    model: EnergyModel,
    adam_state: AdamState,
    state: np.ndarray,
    goal: np.ndarray | None,
    buffers: tuple[ReplayBuffer, ReplayBuffer],
    config: OnlineConfig,
    rng: np.random.Generator,
    max_horizon: int | None = None,
    stop_at_goal: bool = False,
) -> OnlineStepResult:
    """One plan/execute/train iteration; buffers are appended in place.

    Fresh executed pairs join the positive batch and fresh planned pairs the
    negative batch, each padded with an equal number of replay samples (none
    while a buffer is still empty). ``max_horizon`` truncates execution, e.g.
    at an episode boundary.
    """
    b_pos, b_neg = buffers
    if config.planner.score_mode == "reward":
        target = vectorized_reward(spec, goal)
    elif config.planner.score_mode == "prior-only":
        target = None
    else:
        target = goal
    planned = plan(model, state, target, config.planner, rng)
    if max_horizon is not None and max_horizon + 1 < planned.shape[0]:
        planned = planned[: max_horizon + 1]
    real, prefix = execute_plan(spec, state, planned, config.deviation_threshold)
    if stop_at_goal:
        real, prefix = _cut_at_goal(spec, goal, config.goal_tolerance, real, prefix)

    fresh_pos = collate(real)
    fresh_neg = collate(prefix)
    n_replay = config.batch_size if config.batch_size is not None else fresh_pos.shape[0]
    pos_batch = fresh_pos
    neg_batch = fresh_neg
    if len(b_pos) > 0:
        pos_batch = np.concatenate([fresh_pos, b_pos.sample(n_replay, rng)])
    if len(b_neg) > 0:
        neg_batch = np.concatenate([fresh_neg, b_neg.sample(n_replay, rng)])

    loss, grads = contrastive_loss_and_grads(model, pos_batch, neg_batch, config.l2_coeff)
    net, new_adam = adam_step(model.net, grads, adam_state, config.adam)
    b_pos.add(fresh_pos)
    b_neg.add(fresh_neg)
    return OnlineStepResult(
        model=EnergyModel(net, model.state_dim),
        adam_state=new_adam,
        state=real[-1].copy(),
        real_traj=real,
        plan_prefix=prefix,
        loss=loss,
    )


@dataclass
class OnlineMetricsRow:
    step: int
    episode: int
    score: float
    loss: float
    executed: int
    occupancy: int


@dataclass
class OnlineResult:
    model: object
    episode_scores: list[float]
    metrics: list[OnlineMetricsRow]


def _online_driver(
    spec: EnvSpec,
    goal: np.ndarray | None,
    config: OnlineConfig,
    rng: np.random.Generator,
    step_fn: Callable[[np.ndarray, int, np.random.Generator], tuple[np.ndarray, np.ndarray, float]],
) -> tuple[list[float], list[OnlineMetricsRow]]:
    """Episode bookkeeping shared by the energy-model and baseline loops.

    ``step_fn(state, max_horizon, rng)`` performs one plan/execute/learn
    iteration and returns the executed real trajectory, the matching planned
    prefix, and the training loss. Episodes reset to the start state after
    ``episode_length`` transitions or on reaching the goal; only completed
    episodes enter the score series, and an episode's score sums the reward
    of every state reached by an executed transition.
    """
    state = spec.start_state.copy()
    steps_total = 0
    episode_idx = 0
    episode_steps = 0
    episode_return = 0.0
    episode_scores: list[float] = []
    metrics: list[OnlineMetricsRow] = []
    # occupancy counts cells entered by executed transitions
    visited: set[tuple[int, int]] = set()
    while steps_total < config.env_step_budget:
        max_h = min(
            config.env_step_budget - steps_total, config.episode_length - episode_steps
        )
        real, _, loss = step_fn(state, max_h, rng)
        executed = real.shape[0] - 1
        if goal is not None:
            episode_return += sum(spec.reward(real[i], goal) for i in range(1, real.shape[0]))
        episode_steps += executed
        steps_total += executed
        visited |= occupancy_cells(real[1:], config.occupancy_cell)
        state = real[-1]
        reached = goal is not None and spec.reward(state, goal) >= -config.goal_tolerance
        metrics.append(
            OnlineMetricsRow(
                step=steps_total,
                episode=episode_idx,
                score=episode_return,
                loss=loss,
                executed=executed,
                occupancy=len(visited),
            )
        )
        if episode_steps >= config.episode_length or reached:
            episode_scores.append(episode_return)
            episode_idx += 1
            episode_steps = 0
            episode_return = 0.0
            state = spec.start_state.copy()
    return episode_scores, metrics


def online_train(
    spec: EnvSpec,
    goal: np.ndarray | None,
    config: OnlineConfig,
    rng: np.random.Generator,
    model: EnergyModel | None = None,
) -> OnlineResult:
    """Train an energy model online until the environment step budget is spent.

    ``goal`` may be None for goal-free (prior-only) exploration, in which case
    episode scores are zero and only the occupancy column is informative.
    Returns the trained model plus per-episode scores and per-update metrics.
    """
    if model is None:
        model = make_energy_model(spec.state_dim, rng, config.hidden_sizes)
    adam_state = init_adam_state(model.net)
    buffers = (ReplayBuffer(config.buffer_capacity), ReplayBuffer(config.buffer_capacity))
    holder = {"model": model, "adam": adam_state}

    def step_fn(state, max_h, step_rng):
        result = online_train_step(
            spec,
            holder["model"],
            holder["adam"],
            state,
            goal,
            buffers,
            config,
            step_rng,
            max_horizon=max_h,
            stop_at_goal=True,
        )
        holder["model"] = result.model
        holder["adam"] = result.adam_state
        return result.real_traj, result.plan_prefix, result.loss

    episode_scores, metrics = _online_driver(spec, goal, config, rng, step_fn)
    return OnlineResult(model=holder["model"], episode_scores=episode_scores, metrics=metrics)
