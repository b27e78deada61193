"""Config-driven experiment runners and their CSV/SVG outputs.

Every experiment kind is reproducible: a fixed config plus seed list yields
bit-identical CSV files. Per-seed outputs are written to temporary files and
atomically renamed, then merged in seed order. Wall-clock timings go to the
run log, never into metrics files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import (
    ActionFFModel,
    ff_plan,
    ff_train_step,
    make_action_ff,
    online_train_action_ff,
    random_policy,
)
from .energy import (
    EnergyModel,
    contrastive_loss_and_grads,
    make_energy_model,
    pack_pairs,
    sample_negative_pairs,
    transition_energies,
)
from .envs import (
    EnvSpec,
    MazeLayout,
    load_maze_layout,
    make_env,
    maze_env,
    occupancy_cells,
    vectorized_reward,
)
from .nn import AdamHyper, adam_step, init_adam_state, load_mlp, save_mlp
from .online import OnlineConfig, online_train
from .planner import PlannerConfig, plan
from .svg import write_heatmap_svg

PRETRAIN_MODES = ("shuffled", "sequential-repeated")
EXPERIMENT_KINDS = (
    "pretrain",
    "online",
    "eval",
    "explore",
    "obstacle-gen",
    "ablation-correlated",
    "diversity",
    "heatmap",
)

CSV_HEADERS = {
    "online": ("seed", "step", "episode", "score", "loss", "executed", "occupancy"),
    "episodes": ("seed", "episode", "score"),
    "eval": ("seed", "episode", "score"),
    "explore": ("seed", "step", "occupancy"),
    "pretrain": ("seed", "step", "loss"),
    "obstacle-gen": ("seed", "model", "condition", "episode", "score"),
    "ablation-correlated": ("seed", "model", "mode", "episode", "score"),
    "diversity": ("seed", "horizon", "spread"),
}


# ---------------------------------------------------------------------------
# csv plumbing


def _format_cell(value) -> str:
    # plain-float repr round-trips exactly and avoids numpy scalar reprs
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | Path, header: tuple[str, ...], rows) -> None:
    """Write rows atomically: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    lines = [",".join(header)]
    lines += [",".join(_format_cell(v) for v in row) for row in rows]
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def merge_seed_rows(per_seed_rows: dict[int, list[tuple]]) -> list[tuple]:
    merged: list[tuple] = []
    for seed in sorted(per_seed_rows):
        merged.extend(per_seed_rows[seed])
    return merged


# ---------------------------------------------------------------------------
# datasets and pretraining


def gen_random_dataset(
    spec: EnvSpec, n: int, rng: np.random.Generator, reset_every: int = 100
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Roll a uniform-random policy, resetting periodically, into (s, a, s')."""
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    states = np.empty((n, spec.state_dim))
    actions = np.empty((n, spec.action_dim))
    next_states = np.empty((n, spec.state_dim))
    state = spec.start_state.copy()
    for i in range(n):
        if i > 0 and i % reset_every == 0:
            state = spec.start_state.copy()
        action = random_policy(spec, rng)
        nxt = spec.step(state, action)
        states[i] = state
        actions[i] = action
        next_states[i] = nxt
        state = nxt
    return states, actions, next_states


@dataclass
class PretrainResult:
    model: object
    losses: list[tuple[int, float]]  # (step, loss) every log interval


def pretrain_action_ff(
    dataset: tuple[np.ndarray, np.ndarray, np.ndarray],
    mode: str,
    steps: int,
    rng: np.random.Generator,
    hidden_sizes: tuple[int, ...] = (64, 64),
    adam: AdamHyper = AdamHyper(),
    batch_size: int = 64,
    repeat_factor: int = 100,
    log_every: int = 100,
) -> PretrainResult:
    states, acts, next_states = dataset
    if states.shape[0] == 0:
        raise ValueError("dataset must be non-empty")
    if mode not in PRETRAIN_MODES:
        raise ValueError(f"mode must be one of {PRETRAIN_MODES}")
    model = make_action_ff(states.shape[1], acts.shape[1], rng, hidden_sizes)
    adam_state = init_adam_state(model.net)
    n = states.shape[0]
    losses = []
    for step in range(steps):
        if mode == "shuffled":
            idx = rng.integers(0, n, size=batch_size)
        else:
            # walk the dataset in order, each datapoint held for
            # repeat_factor consecutive updates
            idx = np.array([(step // repeat_factor) % n])
        model, adam_state, loss = ff_train_step(
            model, (states[idx], acts[idx], next_states[idx]), adam, adam_state
        )
        if step % log_every == 0 or step == steps - 1:
            losses.append((step, loss))
    return PretrainResult(model, losses)


def pretrain_energy_model(
    dataset: tuple[np.ndarray, np.ndarray, np.ndarray],
    mode: str,
    steps: int,
    rng: np.random.Generator,
    hidden_sizes: tuple[int, ...] = (64, 64),
    adam: AdamHyper = AdamHyper(),
    batch_size: int = 64,
    repeat_factor: int = 100,
    l2_coeff: float = 1.0,
    negative_scale: float = 0.1,
    log_every: int = 100,
) -> PretrainResult:
    """Contrastive pretraining on a static dataset, no replay buffer.

    Positives come from the dataset; negatives are drawn fresh from the
    current model around each positive batch by perturb-and-reweight.
    """
    states, _, next_states = dataset
    if states.shape[0] == 0:
        raise ValueError("dataset must be non-empty")
    if mode not in PRETRAIN_MODES:
        raise ValueError(f"mode must be one of {PRETRAIN_MODES}")
    pairs = pack_pairs(states, next_states)
    model = make_energy_model(states.shape[1], rng, hidden_sizes)
    adam_state = init_adam_state(model.net)
    n = pairs.shape[0]
    losses = []
    for step in range(steps):
        if mode == "shuffled":
            positives = pairs[rng.integers(0, n, size=batch_size)]
        else:
            positives = pairs[[(step // repeat_factor) % n]]
        negatives = sample_negative_pairs(model, positives, rng, scale=negative_scale)
        loss, grads = contrastive_loss_and_grads(model, positives, negatives, l2_coeff)
        net, adam_state = adam_step(model.net, grads, adam_state, adam)
        model = EnergyModel(net, model.state_dim)
        if step % log_every == 0 or step == steps - 1:
            losses.append((step, loss))
    return PretrainResult(model, losses)


def pretrain(model_kind: str, dataset, mode: str, steps: int, rng, **kwargs) -> PretrainResult:
    if model_kind == "ebm":
        return pretrain_energy_model(dataset, mode, steps, rng, **kwargs)
    if model_kind == "action-ff":
        return pretrain_action_ff(dataset, mode, steps, rng, **kwargs)
    raise ValueError(f"unknown model kind {model_kind!r}")


# ---------------------------------------------------------------------------
# evaluation


def _plan_target(spec: EnvSpec, goal: np.ndarray, config: PlannerConfig):
    if config.score_mode == "reward":
        return vectorized_reward(spec, goal)
    if config.score_mode == "prior-only":
        return None
    return goal


def run_policy_episode(
    spec: EnvSpec,
    goal: np.ndarray,
    policy,
    episode_length: int,
) -> float:
    """One fixed-length episode under ``policy(state) -> action``.

    The score sums the reward of every state the agent occupies when acting,
    starting with the start state; the state reached by the final step is not
    scored.
    """
    state = spec.start_state.copy()
    total = 0.0
    for _ in range(episode_length):
        total += spec.reward(state, goal)
        state = spec.step(state, policy(state))
    return total


def evaluate_model(
    model,
    spec: EnvSpec,
    goal: np.ndarray,
    planner_config: PlannerConfig,
    episodes: int,
    episode_length: int,
    rng: np.random.Generator,
) -> list[float]:
    """Fixed-length episodes, re-planning every step and taking one action."""
    goal = np.asarray(goal, dtype=float)

    if isinstance(model, EnergyModel):
        target = _plan_target(spec, goal, planner_config)

        def policy(state):
            traj = plan(model, state, target, planner_config, rng)
            return spec.inverse_dynamics(state, traj[1])

    else:

        def policy(state):
            actions, _ = ff_plan(model, state, goal, planner_config, rng, spec.clip_action)
            return actions[0]

    return [run_policy_episode(spec, goal, policy, episode_length) for _ in range(episodes)]


def run_eval(
    model,
    spec: EnvSpec,
    goal: np.ndarray,
    planner_config: PlannerConfig,
    episodes: int,
    episode_length: int,
    seeds: list[int],
) -> float:
    """Mean episode score over episodes and seeds."""
    all_scores = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        all_scores.extend(
            evaluate_model(model, spec, goal, planner_config, episodes, episode_length, rng)
        )
    return float(np.mean(all_scores))


def run_obstacle_gen(
    ebm_model,
    ff_model,
    spec: EnvSpec,
    goal: np.ndarray,
    obstacle: tuple[float, float, float, float],
    planner_config: PlannerConfig,
    episodes: int,
    episode_length: int,
    seeds: list[int],
) -> tuple[float, float]:
    """Mean scores of both planners in the environment with an added wall.

    Both models must have been trained on the obstacle-free environment; the
    energy model plans in state space and is executed against the blocking
    dynamics, the forward model plans in action space.
    """
    blocked = maze_env(MazeLayout((tuple(obstacle),)), start=tuple(spec.start_state))
    score_ebm = run_eval(ebm_model, blocked, goal, planner_config, episodes,
                         episode_length, seeds)
    score_ff = run_eval(ff_model, blocked, goal, planner_config, episodes,
                        episode_length, seeds)
    return score_ebm, score_ff


# ---------------------------------------------------------------------------
# exploration


def run_explore(
    policy_kind: str,
    spec: EnvSpec,
    budget: int,
    cell_size: float,
    seed: int,
    online_config: OnlineConfig | None = None,
) -> list[tuple[int, int]]:
    """Occupancy-versus-step series for one seed.

    ``random`` rolls the uniform policy; ``ebm-prior`` trains an energy model
    online with prior-only (goal-free) planning and reads occupancy off its
    metrics. Occupancy counts distinct cells entered by executed transitions.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    if policy_kind == "random":
        episode_length = online_config.episode_length if online_config else 50
        state = spec.start_state.copy()
        visited: set = set()
        series = []
        for step in range(1, budget + 1):
            if (step - 1) > 0 and (step - 1) % episode_length == 0:
                state = spec.start_state.copy()
            state = spec.step(state, random_policy(spec, rng))
            visited |= occupancy_cells(state[None, :], cell_size)
            series.append((step, len(visited)))
        return series
    if policy_kind == "ebm-prior":
        if online_config is None:
            raise ValueError("ebm-prior exploration needs an online config")
        config = _replace_online(
            online_config,
            planner=PlannerConfig(
                **{**_planner_dict(online_config.planner), "score_mode": "prior-only"}
            ),
            env_step_budget=budget,
            occupancy_cell=cell_size,
        )
        result = online_train(spec, None, config, rng)
        return [(row.step, row.occupancy) for row in result.metrics]
    raise ValueError(f"unknown exploration policy {policy_kind!r}")


def _planner_dict(config: PlannerConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(config)}


def _online_dict(config: OnlineConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(config)}


def _replace_online(config: OnlineConfig, **updates) -> OnlineConfig:
    data = _online_dict(config)
    data.update(updates)
    return OnlineConfig(**data)


# ---------------------------------------------------------------------------
# diversity and heatmaps


def run_diversity(
    model: EnergyModel,
    s_start: np.ndarray,
    goal: np.ndarray,
    horizons: list[int],
    trial_seeds: list[int],
    planner_config: PlannerConfig,
) -> dict[int, float]:
    """Mean pairwise distance between plan midpoints, per horizon."""
    if len(trial_seeds) < 2:
        raise ValueError("need at least two trials")
    spreads = {}
    for horizon in horizons:
        config = PlannerConfig(**{**_planner_dict(planner_config), "horizon": horizon})
        midpoints = []
        for trial_seed in trial_seeds:
            rng = np.random.default_rng(trial_seed)
            traj = plan(model, s_start, goal, config, rng)
            midpoints.append(traj[horizon // 2])
        midpoints = np.stack(midpoints)
        diffs = midpoints[:, None, :] - midpoints[None, :, :]
        dists = np.linalg.norm(diffs, axis=-1)
        m = len(trial_seeds)
        spreads[horizon] = float(dists[np.triu_indices(m, k=1)].mean())
    return spreads


def energy_heatmap(
    model: EnergyModel,
    resolution: int,
    bounds: tuple[float, float] = (-1.0, 1.0),
    displacement: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Transition energies at zero (or fixed) displacement over a 2-D grid.

    Row index follows y and column index x, both increasing with coordinate.
    """
    if model.state_dim != 2:
        raise ValueError("heatmaps are only defined for 2-D state spaces")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    lo, hi = bounds
    centers = lo + (np.arange(resolution) + 0.5) * (hi - lo) / resolution
    xs, ys = np.meshgrid(centers, centers)
    points = np.stack([xs.ravel(), ys.ravel()], axis=1)
    pairs = pack_pairs(points, points + np.asarray(displacement, dtype=float))
    return transition_energies(model, pairs).reshape(resolution, resolution)


# ---------------------------------------------------------------------------
# experiment config


@dataclass
class ExperimentConfig:
    """Flat, JSON-loadable description of one experiment run."""

    kind: str
    env: str = "particle"
    env_options: dict = field(default_factory=dict)
    model: str = "ebm"
    goal: list[float] | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: str = "results"
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    online: dict = field(default_factory=dict)
    hidden_sizes: tuple[int, ...] = (64, 64)
    learning_rate: float = 1e-3
    # pretraining / ablation / obstacle
    dataset_size: int = 20000
    dataset_reset_every: int = 400
    pretrain_steps: int = 3000
    pretrain_batch: int = 48
    ff_learning_rate: float = 3e-3
    repeat_factor: int = 100
    negative_scale: float = 0.1
    # evaluation
    episodes: int = 3
    episode_length: int = 50
    model_checkpoint: str | None = None
    # explore
    explore_policy: str = "ebm-prior"
    budget: int = 2000
    cell_size: float = 0.1
    # diversity
    horizons: list[int] = field(default_factory=lambda: [10, 20, 40])
    trials: int = 16
    # heatmap
    resolution: int = 40
    heatmap_displacement: tuple[float, float] = (0.0, 0.0)
    # obstacle-gen
    obstacle: tuple[float, float, float, float] = (0.28, -0.22, 0.38, 0.26)

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.model not in ("ebm", "action-ff"):
            raise ValueError(f"unknown model kind {self.model!r}")

    def make_env(self) -> EnvSpec:
        options = dict(self.env_options)
        if self.env == "maze" and "walls" in options:
            options["layout"] = MazeLayout(tuple(tuple(w) for w in options.pop("walls")))
        if self.env == "maze" and "walls_file" in options:
            options["layout"] = load_maze_layout(options.pop("walls_file"))
        if "start" in options:
            options["start"] = tuple(options["start"])
        return make_env(self.env, **options)

    def online_config(self) -> OnlineConfig:
        extra = dict(self.online)
        extra.setdefault("hidden_sizes", tuple(self.hidden_sizes))
        extra.setdefault("adam", AdamHyper(learning_rate=self.learning_rate))
        extra.setdefault("episode_length", self.episode_length)
        if isinstance(extra.get("adam"), dict):
            extra["adam"] = AdamHyper(**extra["adam"])
        if "hidden_sizes" in extra:
            extra["hidden_sizes"] = tuple(extra["hidden_sizes"])
        return OnlineConfig(planner=self.planner, **extra)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(data.get("planner"), dict):
            data["planner"] = PlannerConfig(**data["planner"])
        for key in ("hidden_sizes", "heatmap_displacement", "obstacle"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# orchestration


def _log(quiet: bool, message: str) -> None:
    if not quiet:
        print(message, flush=True)


def _load_model(config: ExperimentConfig, spec: EnvSpec):
    if config.model_checkpoint is None:
        raise ValueError(f"experiment {config.kind!r} needs model_checkpoint")
    net = load_mlp(config.model_checkpoint)
    if config.model == "ebm":
        return EnergyModel(net, spec.state_dim)
    return ActionFFModel(net, spec.state_dim, spec.action_dim)


def _goal_array(config: ExperimentConfig, spec: EnvSpec) -> np.ndarray:
    if config.goal is None:
        raise ValueError(f"experiment {config.kind!r} needs a goal")
    goal = np.asarray(config.goal, dtype=float)
    if goal.shape != (spec.state_dim,):
        raise ValueError(f"goal shape {goal.shape} != ({spec.state_dim},)")
    return goal


def run_experiment(config: ExperimentConfig, quiet: bool = False) -> Path:
    """Run one experiment for all its seeds and write merged CSV outputs.

    Returns the output directory. Every file written is a pure function of
    the config contents.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = config.make_env()
    runner = _RUNNERS[config.kind]
    runner(config, spec, out_dir, quiet)
    return out_dir


def _run_online(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    goal = _goal_array(config, spec)
    online_config = config.online_config()
    metric_rows: dict[int, list[tuple]] = {}
    episode_rows: dict[int, list[tuple]] = {}
    for seed in config.seeds:
        rng = np.random.default_rng(seed)
        if config.model == "ebm":
            result = online_train(spec, goal, online_config, rng)
        else:
            result = online_train_action_ff(spec, goal, online_config, rng)
        metric_rows[seed] = [
            (seed, m.step, m.episode, m.score, m.loss, m.executed, m.occupancy)
            for m in result.metrics
        ]
        episode_rows[seed] = [
            (seed, i, score) for i, score in enumerate(result.episode_scores)
        ]
        save_mlp(result.model.net, out_dir / f"model_{config.model}_seed{seed}.npz")
        _log(quiet, f"online[{config.model}] seed {seed}: "
                    f"{len(result.episode_scores)} episodes")
    write_csv(out_dir / "metrics.csv", CSV_HEADERS["online"], merge_seed_rows(metric_rows))
    write_csv(out_dir / "episodes.csv", CSV_HEADERS["episodes"], merge_seed_rows(episode_rows))


def _run_pretrain(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    rows: dict[int, list[tuple]] = {}
    for seed in config.seeds:
        rng = np.random.default_rng(seed)
        dataset = gen_random_dataset(spec, config.dataset_size, rng, config.dataset_reset_every)
        result = pretrain(
            config.model,
            dataset,
            "shuffled",
            config.pretrain_steps,
            rng,
            hidden_sizes=tuple(config.hidden_sizes),
            adam=AdamHyper(learning_rate=config.learning_rate),
            batch_size=config.pretrain_batch,
            **({"negative_scale": config.negative_scale} if config.model == "ebm" else {}),
        )
        rows[seed] = [(seed, step, loss) for step, loss in result.losses]
        save_mlp(result.model.net, out_dir / f"model_{config.model}_seed{seed}.npz")
        _log(quiet, f"pretrain[{config.model}] seed {seed}: final loss {result.losses[-1][1]:.5f}")
    write_csv(out_dir / "pretrain.csv", CSV_HEADERS["pretrain"], merge_seed_rows(rows))


def _run_eval(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    goal = _goal_array(config, spec)
    model = _load_model(config, spec)
    rows: dict[int, list[tuple]] = {}
    for seed in config.seeds:
        rng = np.random.default_rng(seed)
        scores = evaluate_model(
            model, spec, goal, config.planner, config.episodes, config.episode_length, rng
        )
        rows[seed] = [(seed, i, s) for i, s in enumerate(scores)]
        _log(quiet, f"eval seed {seed}: mean score {np.mean(scores):.3f}")
    write_csv(out_dir / "eval.csv", CSV_HEADERS["eval"], merge_seed_rows(rows))


def _run_explore(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    online_config = config.online_config()
    rows: dict[int, list[tuple]] = {}
    for seed in config.seeds:
        series = run_explore(
            config.explore_policy, spec, config.budget, config.cell_size, seed, online_config
        )
        rows[seed] = [(seed, step, occ) for step, occ in series]
        _log(quiet, f"explore[{config.explore_policy}] seed {seed}: "
                    f"final occupancy {series[-1][1]}")
    write_csv(out_dir / "explore.csv", CSV_HEADERS["explore"], merge_seed_rows(rows))


def _pretrain_for_comparison(config: ExperimentConfig, model_kind: str, mode: str, dataset, seed):
    # fresh generator per model so both train from the same entropy stream
    lr = config.learning_rate if model_kind == "ebm" else config.ff_learning_rate
    extra = {"negative_scale": config.negative_scale} if model_kind == "ebm" else {}
    return pretrain(
        model_kind, dataset, mode, config.pretrain_steps,
        np.random.default_rng(seed + 17),
        hidden_sizes=tuple(config.hidden_sizes),
        adam=AdamHyper(learning_rate=lr),
        batch_size=config.pretrain_batch,
        repeat_factor=config.repeat_factor,
        **extra,
    ).model


def _run_obstacle(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    if spec.kind != "particle":
        raise ValueError("obstacle generalization runs on the particle environment")
    goal = _goal_array(config, spec)
    start = tuple(spec.start_state)
    blocked_spec = maze_env(MazeLayout((config.obstacle,)), start=start)
    rows: dict[int, list[tuple]] = {}
    for seed in config.seeds:
        dataset = gen_random_dataset(
            spec, config.dataset_size, np.random.default_rng(seed), config.dataset_reset_every
        )
        seed_rows = []
        for name in ("ebm", "action-ff"):
            model = _pretrain_for_comparison(config, name, "shuffled", dataset, seed)
            for condition, env in (("open", spec), ("obstacle", blocked_spec)):
                scores = evaluate_model(
                    model, env, goal, config.planner, config.episodes,
                    config.episode_length, np.random.default_rng(seed + 1),
                )
                seed_rows += [(seed, name, condition, i, s) for i, s in enumerate(scores)]
                _log(quiet, f"obstacle seed {seed} {name}/{condition}: "
                            f"mean {np.mean(scores):.3f}")
        rows[seed] = seed_rows
    write_csv(out_dir / "obstacle.csv", CSV_HEADERS["obstacle-gen"], merge_seed_rows(rows))


def _run_ablation(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    goal = _goal_array(config, spec)
    rows: dict[int, list[tuple]] = {}
    for seed in config.seeds:
        dataset = gen_random_dataset(
            spec, config.dataset_size, np.random.default_rng(seed), config.dataset_reset_every
        )
        seed_rows = []
        for model_kind in ("ebm", "action-ff"):
            for mode in PRETRAIN_MODES:
                model = _pretrain_for_comparison(config, model_kind, mode, dataset, seed)
                scores = evaluate_model(
                    model, spec, goal, config.planner, config.episodes,
                    config.episode_length, np.random.default_rng(seed + 1),
                )
                seed_rows += [(seed, model_kind, mode, i, s) for i, s in enumerate(scores)]
                _log(quiet, f"ablation seed {seed} {model_kind}/{mode}: "
                            f"mean {np.mean(scores):.3f}")
        rows[seed] = seed_rows
    write_csv(
        out_dir / "ablation.csv", CSV_HEADERS["ablation-correlated"], merge_seed_rows(rows)
    )


def _run_diversity(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    goal = _goal_array(config, spec)
    rows: dict[int, list[tuple]] = {}
    for seed in config.seeds:
        rng = np.random.default_rng(seed)
        if config.model_checkpoint is not None:
            model = _load_model(config, spec)
        else:
            model = make_energy_model(spec.state_dim, rng, tuple(config.hidden_sizes))
        trial_seeds = [int(v) for v in np.random.SeedSequence(seed).generate_state(config.trials)]
        spreads = run_diversity(
            model, spec.start_state, goal, list(config.horizons), trial_seeds, config.planner
        )
        rows[seed] = [(seed, h, spreads[h]) for h in config.horizons]
        _log(quiet, f"diversity seed {seed}: " +
             " ".join(f"T{h}={spreads[h]:.3f}" for h in config.horizons))
    write_csv(out_dir / "diversity.csv", CSV_HEADERS["diversity"], merge_seed_rows(rows))


def _run_heatmap(config: ExperimentConfig, spec: EnvSpec, out_dir: Path, quiet: bool) -> None:
    if config.model_checkpoint is not None:
        model = _load_model(config, spec)
    else:
        model = make_energy_model(
            spec.state_dim, np.random.default_rng(config.seeds[0]), tuple(config.hidden_sizes)
        )
    matrix = energy_heatmap(
        model, config.resolution, displacement=tuple(config.heatmap_displacement)
    )
    rows = [tuple(float(v) for v in row) for row in matrix]
    header = tuple(f"x{i}" for i in range(config.resolution))
    write_csv(out_dir / "heatmap.csv", header, rows)
    write_heatmap_svg(matrix, out_dir / "heatmap.svg")
    _log(quiet, f"heatmap: {config.resolution}x{config.resolution} grid written")


_RUNNERS = {
    "online": _run_online,
    "pretrain": _run_pretrain,
    "eval": _run_eval,
    "explore": _run_explore,
    "obstacle-gen": _run_obstacle,
    "ablation-correlated": _run_ablation,
    "diversity": _run_diversity,
    "heatmap": _run_heatmap,
}
