"""Comparison agents: an action-conditioned forward model planned over action
sequences, a uniform-random policy, and recursive-least-squares inverse
dynamics.

The forward model predicts the next state from the current state and action
and is trained by mean squared error. Its planner runs the same
perturb-and-reweight loop as the state-space planner, but the noise lives in
action space and candidate action sequences are rolled through the model to
obtain the predicted states that get scored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .energy import pack_pairs
from .envs import EnvSpec
from .nn import (
    AdamHyper,
    AdamState,
    MlpParams,
    adam_step,
    backward,
    forward_cached,
    init_adam_state,
    mlp_forward,
    mlp_init,
)
from .online import (
    OnlineConfig,
    OnlineResult,
    ReplayBuffer,
    _online_driver,
    execute_plan,
    _cut_at_goal,
)
from .planner import PlannerConfig, SmoothNoiseGen, mppi_weights


@dataclass
class ActionFFModel:
    """Deterministic next-state predictor ``s' = net(s, a)``."""

    net: MlpParams
    state_dim: int
    action_dim: int

    def __post_init__(self) -> None:
        if self.net.in_dim != self.state_dim + self.action_dim:
            raise ValueError(
                f"network in_dim {self.net.in_dim} != state_dim + action_dim "
                f"{self.state_dim + self.action_dim}"
            )
        if self.net.out_dim != self.state_dim:
            raise ValueError("network out_dim must equal state_dim")


def make_action_ff(
    state_dim: int,
    action_dim: int,
    rng: np.random.Generator,
    hidden_sizes: tuple[int, ...] = (128, 128, 128),
) -> ActionFFModel:
    dims = [state_dim + action_dim, *hidden_sizes, state_dim]
    return ActionFFModel(mlp_init(dims, rng), state_dim, action_dim)


def ff_predict(model: ActionFFModel, state: np.ndarray, action: np.ndarray) -> np.ndarray:
    """Next-state prediction for single vectors or aligned (n, d) batches."""
    state = np.asarray(state, dtype=float)
    action = np.asarray(action, dtype=float)
    if state.shape[-1] != model.state_dim or action.shape[-1] != model.action_dim:
        raise ValueError(
            f"expected state dim {model.state_dim} and action dim {model.action_dim}, "
            f"got {state.shape} and {action.shape}"
        )
    return mlp_forward(model.net, pack_pairs(state, action))


def ff_mse_loss_and_grads(model: ActionFFModel, states, actions, next_states):
    """Mean squared prediction error over the batch and its exact gradients."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    next_states = np.atleast_2d(np.asarray(next_states, dtype=float))
    n = states.shape[0]
    if n == 0:
        raise ValueError("batch must be non-empty")
    pred, cache = forward_cached(model.net, pack_pairs(states, actions))
    err = pred - next_states
    loss = float(np.mean(err**2))
    # d loss / d pred for mean over n * state_dim entries
    grads, _ = backward(model.net, cache, 2.0 * err / err.size)
    return loss, grads


def ff_train_step(
    model: ActionFFModel,
    batch: tuple[np.ndarray, np.ndarray, np.ndarray],
    hyper: AdamHyper,
    adam_state: AdamState,
) -> tuple[ActionFFModel, AdamState, float]:
    """One Adam step on the mean squared next-state prediction error."""
    states, actions, next_states = batch
    loss, grads = ff_mse_loss_and_grads(model, states, actions, next_states)
    net, new_state = adam_step(model.net, grads, adam_state, hyper)
    return ActionFFModel(net, model.state_dim, model.action_dim), new_state, loss


def _rollout(model: ActionFFModel, s_start: np.ndarray, action_seqs: np.ndarray) -> np.ndarray:
    # action_seqs: (n, H, action_dim) -> predicted states (n, H + 1, state_dim)
    n, horizon, _ = action_seqs.shape
    states = np.empty((n, horizon + 1, model.state_dim))
    states[:, 0, :] = s_start
    for t in range(horizon):
        states[:, t + 1, :] = ff_predict(model, states[:, t, :], action_seqs[:, t, :])
    return states


def ff_plan(
    model: ActionFFModel,
    s_start: np.ndarray,
    goal: np.ndarray,
    config: PlannerConfig,
    rng: np.random.Generator,
    action_clip: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Plan a (horizon-1, action_dim) action sequence by MPPI in action space.

    Sampled action sequences are perturbed with the smooth-noise generator,
    clipped by ``action_clip`` (the environment's admissible-action
    projection; must accept batches), rolled through the model, and scored by squared distance of
    the predicted final state to the goal. Returns the weighted-average
    action sequence together with its own model rollout, so the returned
    trajectory is exactly the prediction for the returned actions.
    """
    s_start = np.asarray(s_start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if s_start.shape != (model.state_dim,):
        raise ValueError(f"start shape {s_start.shape} != ({model.state_dim},)")
    if goal.shape != (model.state_dim,):
        raise ValueError(f"goal shape {goal.shape} != ({model.state_dim},)")
    if action_clip is None:
        action_clip = lambda a: a
    horizon = config.horizon - 1
    gen = SmoothNoiseGen(horizon, model.action_dim) if horizon >= 2 else None
    candidate = np.zeros((horizon, model.action_dim))
    scale = config.noise_scale
    for _ in range(config.num_iterations):
        if gen is not None:
            noise = gen.sample(scale, rng, n=config.num_samples)
        else:
            noise = rng.normal(0.0, scale, size=(config.num_samples, horizon, model.action_dim))
        samples = action_clip(candidate[None, :, :] + noise)
        predicted = _rollout(model, s_start, samples)
        scores = ((predicted[:, -1, :] - goal) ** 2).sum(axis=1)
        finite = np.isfinite(scores)
        if not finite.any():
            raise ValueError("all sampled action sequences scored non-finite")
        weights = np.zeros(len(scores))
        weights[finite] = mppi_weights(scores[finite], config.temperature)
        candidate = np.einsum("n,nha->ha", weights, samples)
        scale *= config.noise_decay
    return candidate, _rollout(model, s_start, candidate[None])[0]


def random_policy(spec: EnvSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the environment's admissible action set."""
    if spec.kind in ("particle", "maze"):
        # uniform over the step ball: direction uniform, radius ~ sqrt(u)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        radius = spec.action_bound * np.sqrt(rng.uniform())
        return radius * np.array([np.cos(angle), np.sin(angle)])
    return rng.uniform(-spec.action_bound, spec.action_bound, size=spec.action_dim)


# ---------------------------------------------------------------------------
# recursive least squares inverse dynamics


@dataclass
class RlsState:
    """Linear map from (s, s', 1) features to actions, updated recursively."""

    weights: np.ndarray  # (action_dim, 2 * state_dim + 1)
    precision: np.ndarray  # shared feature inverse-covariance accumulator
    forgetting: float = 1.0


def rls_init(
    state_dim: int, action_dim: int, prior_scale: float = 1e7, forgetting: float = 1.0
) -> RlsState:
    if not 0 < forgetting <= 1:
        raise ValueError("forgetting factor must lie in (0, 1]")
    n_features = 2 * state_dim + 1
    return RlsState(
        weights=np.zeros((action_dim, n_features)),
        precision=prior_scale * np.eye(n_features),
        forgetting=forgetting,
    )


def _rls_features(s: np.ndarray, s_next: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(s, dtype=float), np.asarray(s_next, dtype=float), [1.0]])


def rls_update(state: RlsState, s: np.ndarray, s_next: np.ndarray, a: np.ndarray) -> RlsState:
    """Standard RLS update fitting ``a ~ W (s, s', 1)``."""
    phi = _rls_features(s, s_next)
    lam = state.forgetting
    p_phi = state.precision @ phi
    gain = p_phi / (lam + phi @ p_phi)
    residual = np.asarray(a, dtype=float) - state.weights @ phi
    new_weights = state.weights + np.outer(residual, gain)
    new_precision = (state.precision - np.outer(gain, p_phi)) / lam
    # symmetrize against floating-point drift
    new_precision = 0.5 * (new_precision + new_precision.T)
    return RlsState(new_weights, new_precision, lam)


def rls_infer(state: RlsState, s: np.ndarray, s_next: np.ndarray) -> np.ndarray:
    return state.weights @ _rls_features(s, s_next)


# ---------------------------------------------------------------------------
# online training of the baseline


def online_train_action_ff(
    spec: EnvSpec,
    goal: np.ndarray,
    config: OnlineConfig,
    rng: np.random.Generator,
    model: ActionFFModel | None = None,
) -> OnlineResult:
    """Run the forward-model baseline through the identical online loop.

    Plans in action space, executes the predicted trajectory through inverse
    dynamics with the same deviation-triggered stopping, and fits the model by
    mean squared error on the executed transitions plus replay samples.
    """
    if model is None:
        model = make_action_ff(spec.state_dim, spec.action_dim, rng, config.hidden_sizes)
    adam_state = init_adam_state(model.net)
    buffer = ReplayBuffer(config.buffer_capacity)
    holder = {"model": model, "adam": adam_state}

    def step_fn(state, max_h, step_rng):
        _, predicted = ff_plan(
            holder["model"], state, goal, config.planner, step_rng, spec.clip_action
        )
        if max_h + 1 < predicted.shape[0]:
            predicted = predicted[: max_h + 1]
        real, prefix = execute_plan(spec, state, predicted, config.deviation_threshold)
        real, prefix = _cut_at_goal(spec, goal, config.goal_tolerance, real, prefix)
        # re-derive the commands execute_plan applied (env clipping included),
        # so each (s, a, s') triple matches an observed transition
        actions = np.stack(
            [
                spec.clip_action(spec.inverse_dynamics(real[i], prefix[i + 1]))
                for i in range(real.shape[0] - 1)
            ]
        )
        fresh = np.concatenate([real[:-1], actions, real[1:]], axis=1)
        batch = fresh
        n_replay = config.batch_size if config.batch_size is not None else fresh.shape[0]
        if len(buffer) > 0:
            batch = np.concatenate([fresh, buffer.sample(n_replay, step_rng)])
        s_dim, a_end = spec.state_dim, spec.state_dim + spec.action_dim
        new_model, new_adam, loss = ff_train_step(
            holder["model"],
            (batch[:, :s_dim], batch[:, s_dim:a_end], batch[:, a_end:]),
            config.adam,
            holder["adam"],
        )
        holder["model"] = new_model
        holder["adam"] = new_adam
        buffer.add(fresh)
        return real, prefix, loss

    episode_scores, metrics = _online_driver(spec, goal, config, rng, step_fn)
    return OnlineResult(model=holder["model"], episode_scores=episode_scores, metrics=metrics)
