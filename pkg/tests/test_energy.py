import numpy as np
import pytest

from ebmplan.energy import (
    EnergyModel,
    collate,
    contrastive_loss_and_grads,
    fixed_goal_score,
    goal_score,
    make_energy_model,
    pack_pairs,
    reward_score,
    sample_negative_pairs,
    trajectory_energies,
    trajectory_energy,
    transition_energies,
    transition_energy,
)
from ebmplan.nn import AdamHyper, adam_step, init_adam_state, mlp_forward
from oracles import fd_param_grads, max_rel_error, naive_mlp_forward


def seeded_model(seed, state_dim=2, hidden=(8, 8)):
    return make_energy_model(state_dim, np.random.default_rng(seed), hidden)


def zero_model(state_dim=2):
    model = seeded_model(0, state_dim)
    for w in model.net.weights:
        w[:] = 0.0
    return model


def random_traj(seed, length, state_dim=2):
    return np.random.default_rng(seed).normal(size=(length, state_dim))


def test_zero_model_energy_is_zero():
    model = zero_model()
    assert transition_energy(model, np.array([0.3, -0.1, 0.2, 0.9])) == 0.0


def test_transition_energy_is_forward_on_concatenation():
    model = seeded_model(4)
    a, b = np.array([0.1, 0.2]), np.array([-0.4, 0.5])
    pair = pack_pairs(a, b)
    assert transition_energy(model, pair) == float(mlp_forward(model.net, pair)[0])


def test_transition_energy_matches_naive_reference():
    model = seeded_model(17)
    pair = np.array([0.25, -0.5, 0.75, 0.1])
    expected = naive_mlp_forward(model.net, pair)[0]
    assert np.isclose(transition_energy(model, pair), expected, rtol=1e-12)


def test_transition_energy_dimension_mismatch_raises():
    model = seeded_model(1)
    with pytest.raises(ValueError):
        transition_energy(model, np.zeros(3))
    with pytest.raises(ValueError):
        transition_energies(model, np.zeros((5, 3)))


def test_energy_model_validates_dimensions():
    net = seeded_model(0, state_dim=3).net
    with pytest.raises(ValueError):
        EnergyModel(net, state_dim=2)


def test_trajectory_energy_single_pair():
    model = seeded_model(5)
    traj = random_traj(2, 2)
    assert np.isclose(
        trajectory_energy(model, traj),
        transition_energy(model, pack_pairs(traj[0], traj[1])),
        rtol=1e-12,
    )


def test_trajectory_energy_zero_model_and_length_check():
    model = zero_model()
    assert trajectory_energy(model, random_traj(3, 7)) == 0.0
    with pytest.raises(ValueError):
        trajectory_energy(model, random_traj(3, 7)[:1])


def test_trajectory_energy_splits_at_shared_endpoint():
    model = seeded_model(6)
    traj = random_traj(8, 9)
    k = 4
    total = trajectory_energy(model, traj)
    left = trajectory_energy(model, traj[: k + 1])
    right = trajectory_energy(model, traj[k:])
    assert np.isclose(total, left + right, rtol=1e-10)


def test_goal_score_at_goal_equals_trajectory_energy():
    model = seeded_model(7)
    traj = random_traj(4, 5)
    assert np.isclose(
        goal_score(model, traj, traj[-1]), trajectory_energy(model, traj), rtol=1e-12
    )


def test_goal_score_zero_model_unit_distance():
    model = zero_model()
    traj = np.zeros((4, 2))
    goal = np.array([1.0, 0.0])
    assert goal_score(model, traj, goal, goal_weight=1.0) == 1.0


def test_goal_score_componentwise_oracle():
    model = seeded_model(8)
    traj = random_traj(9, 6)
    goal = np.array([0.2, -0.7])
    w = 2.5
    expected = trajectory_energy(model, traj) + w * float(((traj[-1] - goal) ** 2).sum())
    assert np.isclose(goal_score(model, traj, goal, w), expected, rtol=1e-12)


def test_goal_score_zero_weight_is_trajectory_energy():
    model = seeded_model(9)
    traj = random_traj(10, 4)
    assert goal_score(model, traj, np.array([5.0, 5.0]), 0.0) == trajectory_energy(model, traj)


def test_fixed_goal_score_zero_model_and_two_term_expansion():
    assert fixed_goal_score(zero_model(), random_traj(1, 3), np.zeros(2)) == 0.0
    model = seeded_model(10)
    traj = random_traj(11, 2)
    goal = np.array([0.4, 0.4])
    expected = transition_energy(model, pack_pairs(traj[0], traj[1])) + transition_energy(
        model, pack_pairs(traj[1], goal)
    )
    assert np.isclose(fixed_goal_score(model, traj, goal), expected, rtol=1e-12)


def test_fixed_goal_score_term_by_term_oracle():
    model = seeded_model(12)
    traj = random_traj(13, 5)
    goal = np.array([-0.3, 0.9])
    expected = sum(
        transition_energy(model, pack_pairs(traj[t], traj[t + 1])) for t in range(4)
    ) + transition_energy(model, pack_pairs(traj[-1], goal))
    assert np.isclose(fixed_goal_score(model, traj, goal), expected, rtol=1e-10)


def test_reward_score_zero_reward_is_trajectory_energy():
    model = seeded_model(14)
    traj = random_traj(15, 6)
    zero_reward = lambda states: np.zeros(states.shape[:-1])
    assert np.isclose(
        reward_score(model, traj, zero_reward), trajectory_energy(model, traj), rtol=1e-12
    )


def test_reward_score_zero_model_is_negative_reward_sum():
    traj = random_traj(16, 5)
    reward = lambda states: states[..., 0]
    assert np.isclose(
        reward_score(zero_model(), traj, reward), -traj[:, 0].sum(), rtol=1e-12
    )


def test_reward_score_term_by_term_oracle():
    model = seeded_model(18)
    traj = random_traj(19, 4)
    reward = lambda states: np.sin(states[..., 0]) + states[..., 1] ** 2
    energies = sum(
        transition_energy(model, pack_pairs(traj[t], traj[t + 1])) for t in range(3)
    )
    rewards = sum(float(np.sin(s[0]) + s[1] ** 2) for s in traj)
    assert np.isclose(reward_score(model, traj, reward), energies - rewards, rtol=1e-10)


def test_contrastive_identical_batches_reduce_to_squared_terms():
    model = seeded_model(20)
    batch = np.random.default_rng(21).normal(size=(6, 4))
    loss, _ = contrastive_loss_and_grads(model, batch, batch)
    energies = transition_energies(model, batch)
    assert np.isclose(loss, float(np.mean(2.0 * energies**2)), rtol=1e-12)


def test_contrastive_zero_model_loss_and_grads():
    model = zero_model()
    rng = np.random.default_rng(22)
    pos = rng.normal(size=(5, 4))
    neg = rng.normal(size=(5, 4))
    loss, grads = contrastive_loss_and_grads(model, pos, neg)
    assert loss == 0.0
    # at zero energy the squared terms contribute nothing: gradients equal the
    # mean gradient of E(x+) - E(x-)
    numeric = fd_param_grads(
        lambda p: float(
            np.mean(
                mlp_forward(p, pos)[:, 0] - mlp_forward(p, neg)[:, 0]
            )
        ),
        model.net,
    )
    assert max_rel_error(grads, numeric) < 1e-4


def test_contrastive_gradients_match_finite_differences():
    from ebmplan.energy import contrastive_loss_and_grads as loss_fn

    for seed in range(3):
        model = seeded_model(seed + 30, hidden=(6, 6))
        rng = np.random.default_rng(seed + 40)
        pos = rng.normal(size=(4, 4))
        neg = rng.normal(size=(4, 4))
        _, analytic = loss_fn(model, pos, neg)
        numeric = fd_param_grads(
            lambda p: loss_fn(EnergyModel(p, 2), pos, neg)[0], model.net
        )
        assert max_rel_error(analytic, numeric) < 1e-4


def test_contrastive_empty_batch_raises():
    model = seeded_model(1)
    with pytest.raises(ValueError):
        contrastive_loss_and_grads(model, np.empty((0, 4)), np.ones((2, 4)))


def test_contrastive_unequal_batches_pad_cyclically():
    model = seeded_model(33)
    rng = np.random.default_rng(34)
    pos = rng.normal(size=(2, 4))
    neg = rng.normal(size=(5, 4))
    loss, _ = contrastive_loss_and_grads(model, pos, neg)
    padded = np.concatenate([pos, pos, pos])[:5]
    expected, _ = contrastive_loss_and_grads(model, padded, neg)
    assert np.isclose(loss, expected, rtol=1e-12)


def test_contrastive_loss_decreases_over_small_steps():
    model = seeded_model(50, hidden=(16, 16))
    rng = np.random.default_rng(51)
    pos = rng.normal(size=(8, 4))
    neg = rng.normal(size=(8, 4)) + 2.0
    hyper = AdamHyper(learning_rate=1e-4)
    adam = init_adam_state(model.net)
    losses = []
    for _ in range(11):
        loss, grads = contrastive_loss_and_grads(model, pos, neg)
        losses.append(loss)
        net, adam = adam_step(model.net, grads, adam, hyper)
        model = EnergyModel(net, model.state_dim)
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_one_step_reduces_positive_negative_gap():
    model = seeded_model(60, hidden=(16, 16))
    rng = np.random.default_rng(61)
    pos = rng.normal(size=(8, 4))
    neg = rng.normal(size=(8, 4)) + 1.5

    def gap(m):
        return float(
            transition_energies(m, pos).mean() - transition_energies(m, neg).mean()
        )

    before = gap(model)
    _, grads = contrastive_loss_and_grads(model, pos, neg)
    net, _ = adam_step(model.net, grads, init_adam_state(model.net), AdamHyper(1e-4))
    assert gap(EnergyModel(net, 2)) < before


def test_collate_examples():
    traj = np.arange(10, dtype=float).reshape(5, 2)
    pairs = collate(traj)
    assert pairs.shape == (4, 4)
    for i in range(4):
        assert np.array_equal(pairs[i], np.concatenate([traj[i], traj[i + 1]]))
    assert collate(traj[:2]).shape == (1, 4)
    with pytest.raises(ValueError):
        collate(traj[:1])


def test_collate_concatenation_bookkeeping():
    rng = np.random.default_rng(70)
    a = rng.normal(size=(4, 2))
    b = rng.normal(size=(3, 2))
    joined = np.concatenate([a, b])
    expected = np.concatenate(
        [collate(a), pack_pairs(a[-1], b[0])[None, :], collate(b)]
    )
    assert np.allclose(collate(joined), expected, rtol=1e-15)


def test_sample_negative_pairs_moves_toward_lower_energy():
    model = seeded_model(80, hidden=(16, 16))
    rng = np.random.default_rng(81)
    seeds = rng.normal(size=(32, 4))
    negatives = sample_negative_pairs(model, seeds, rng, num_samples=24, num_iters=8, scale=0.2)
    assert negatives.shape == seeds.shape
    before = transition_energies(model, seeds).mean()
    after = transition_energies(model, negatives).mean()
    assert after < before


def test_sample_negative_pairs_deterministic():
    model = seeded_model(82)
    seeds = np.random.default_rng(83).normal(size=(4, 4))
    a = sample_negative_pairs(model, seeds, np.random.default_rng(9))
    b = sample_negative_pairs(model, seeds, np.random.default_rng(9))
    assert np.array_equal(a, b)
