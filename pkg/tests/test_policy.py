import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ranho.nn import ParamStore, Tape, backward
from ranho.nn import tensor as T
from ranho.nn.gradcheck import numeric_grad, relative_error
from ranho.policy import (MaskedActorCritic, apply_mask_renormalize,
                          compute_masks, compute_reward)
from ranho.sim import ConfigError, MaskConfig
from ranho.sim.radio import RadioSample


def sample_with(rsrp: dict, serving=0):
    s = RadioSample(ue_id=0, timestamp=0, serving_cell=serving)
    s.rsrp_dbm = dict(rsrp)
    s.rsrq_db = {c: -10.0 for c in rsrp}
    s.sinr_db = {c: 10.0 for c in rsrp}
    return s


CFG = MaskConfig(rsrp_threshold_dbm=-100.0, load_threshold=0.8)


def test_mask_all_rules_pass():
    radio = sample_with({0: -70.0, 1: -80.0})
    m = compute_masks(0, True, radio, np.array([0.2, 0.3]), CFG)
    assert m.target[1] == 1.0 and m.ho_allowed


def test_mask_unreported_cell_blocked_regardless():
    radio = sample_with({0: -70.0, 1: -80.0})           # cell 2 unreported
    m = compute_masks(0, True, radio, np.array([0.0, 0.0, 0.0]), CFG)
    assert m.target[2] == 0.0
    assert m.reported[2] == 0.0


def test_mask_load_rule():
    radio = sample_with({0: -70.0, 1: -80.0})
    m = compute_masks(0, True, radio, np.array([0.2, 0.9]), CFG)
    assert m.target[1] == 0.0 and m.load[1] == 0.0


def test_mask_rsrp_rule_uses_raw_dbm():
    radio = sample_with({0: -70.0, 1: -101.0})
    m = compute_masks(0, True, radio, np.array([0.2, 0.2]), CFG)
    assert m.target[1] == 0.0 and m.signal[1] == 0.0


def test_mask_serving_cell_never_a_target():
    radio = sample_with({0: -70.0, 1: -80.0})
    m = compute_masks(0, True, radio, np.array([0.0, 0.0]), CFG)
    assert m.target[0] == 0.0


def test_mask_not_idle_forbids_handover():
    radio = sample_with({0: -70.0, 1: -80.0})
    m = compute_masks(0, False, radio, np.array([0.2, 0.2]), CFG)
    assert m.any_valid and not m.ho_allowed


# ---------------------------------------------------------------------------
# renormalization


def test_renormalize_arithmetic():
    probs = T.const([[0.5, 0.3, 0.2]])
    out = apply_mask_renormalize(probs, np.array([1.0, 0.0, 1.0]))
    assert np.allclose(out.data, [[0.7142857142857143, 0.0, 0.2857142857142857]])


def test_renormalize_full_mask_identity():
    probs = T.const([[0.5, 0.3, 0.2]])
    out = apply_mask_renormalize(probs, np.ones(3))
    assert np.allclose(out.data, probs.data)


def test_renormalize_single_valid_action():
    out = apply_mask_renormalize(T.const([[0.5, 0.3, 0.2]]), np.array([0.0, 1.0, 0.0]))
    assert np.allclose(out.data, [[0.0, 1.0, 0.0]])


def test_renormalize_zero_mass_is_contract_violation():
    with pytest.raises(T.ContractError):
        apply_mask_renormalize(T.const([[0.5, 0.5]]), np.zeros(2))


@given(st.lists(st.floats(0.01, 10.0), min_size=3, max_size=6),
       st.data())
def test_renormalize_sums_to_one_and_widening_monotone(weights, data):
    w = np.array(weights)
    probs = T.const((w / w.sum())[None, :])
    n = len(weights)
    bits = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    mask = np.array(bits, dtype=float)
    if mask.sum() == 0:
        mask[0] = 1.0
    out = apply_mask_renormalize(probs, mask)
    assert abs(out.data.sum() - 1.0) < 1e-12
    assert np.all(out.data.reshape(-1)[mask == 0.0] == 0.0)
    # widening the mask never increases previously valid probabilities
    if mask.min() == 0.0:
        widened = mask.copy()
        widened[np.argmin(widened)] = 1.0
        out2 = apply_mask_renormalize(probs, widened)
        prev = mask == 1.0
        assert np.all(out2.data.reshape(-1)[prev] <= out.data.reshape(-1)[prev] + 1e-15)


# ---------------------------------------------------------------------------
# actor-critic behaviour


def make_policy(n_cells=4, seed=0):
    store = ParamStore(seed=seed)
    return store, MaskedActorCritic(store, n_cells=n_cells)


def test_all_zero_mask_forces_stay():
    _, pol = make_policy()
    obs = np.random.default_rng(0).normal(size=(3, 32))
    mask = np.zeros((3, 4))
    out = pol.actor_forward(obs, mask, np.zeros(3))
    assert np.allclose(out.p_ho.data, np.tile([1.0, 0.0], (3, 1)))
    actions = pol.sample(out, np.random.default_rng(1))
    assert np.all(actions[:, 0] == 0)


def test_masked_targets_never_sampled_100k():
    _, pol = make_policy(n_cells=5, seed=3)
    rng = np.random.default_rng(42)
    obs = rng.normal(size=(100_000, 32))
    mask = np.zeros((100_000, 5))
    cols = rng.integers(0, 5, size=(100_000, 2))
    mask[np.arange(100_000), cols[:, 0]] = 1.0
    mask[np.arange(100_000), cols[:, 1]] = 1.0
    out = pol.actor_forward(obs, mask, np.ones(100_000))
    actions = pol.sample(out, rng)
    drawn_mask_bits = mask[np.arange(100_000), actions[:, 1]]
    assert np.all(drawn_mask_bits == 1.0)
    sums = out.p_target.data.sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) < 1e-12


def test_masked_gradient_identity_against_two_path_form():
    # autodiff gradient of log(renormalized pi[a]) must equal the gradient of
    # log pi[a] - log sum(pi * M) computed as a separate graph, to 1e-10
    store, pol = make_policy(n_cells=5, seed=7)
    rng = np.random.default_rng(11)
    worst = 0.0
    for case in range(100):
        obs = rng.normal(size=(1, 32))
        mask = np.zeros((1, 5))
        valid = rng.choice(5, size=rng.integers(1, 5), replace=False)
        mask[0, valid] = 1.0
        action = int(rng.choice(valid))

        def path_a(tape):
            out = pol.actor_forward(obs, mask, np.ones(1), tape)
            return T.tsum(T.log(T.take_per_row(out.p_target, [action], tape), tape), tape=tape)

        def path_b(tape):
            out = pol.actor_forward(obs, mask, np.ones(1), tape)
            raw = out.p_target_raw
            lp = T.log(T.take_per_row(raw, [action], tape), tape)
            denom = T.tsum(T.mul(raw, T.const(mask), tape), axis=-1, tape=tape)
            return T.tsum(T.sub(lp, T.log(denom, tape), tape), tape=tape)

        grads = []
        for path in (path_a, path_b):
            store.zero_grad()
            tape = Tape(store)
            backward(tape, path(tape))
            grads.append(np.concatenate([p.grad.reshape(-1) for p in store.group("actor")]))
        worst = max(worst, np.max(np.abs(grads[0] - grads[1])))
    assert worst < 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_masked_log_prob_gradcheck(seed):
    store, pol = make_policy(n_cells=4, seed=seed + 20)
    rng = np.random.default_rng(seed)
    obs = rng.normal(size=(2, 32))
    mask = np.array([[0.0, 1.0, 1.0, 0.0], [1.0, 1.0, 0.0, 1.0]])
    actions = np.array([[1, 2], [0, 0]])

    def build(tape):
        out = pol.actor_forward(obs, mask, np.ones(2), tape)
        return T.tsum(pol.log_prob(out, actions, tape), tape=tape)

    tape = Tape(store)
    store.zero_grad()
    backward(tape, build(tape))
    worst = 0.0
    for name in ("pi.h0.w", "pi.target.w", "pi.ho.w", "pi.ln0.gain"):
        p = store.params[name]
        analytic = p.grad.copy()
        numeric = numeric_grad(lambda: build(None).item(), p)
        worst = max(worst, relative_error(analytic, numeric))
    assert worst < 1e-5


def test_critic_zero_weights_zero_value():
    store, pol = make_policy()
    for p in store.group("critic"):
        p.data[...] = 0.0
    v = pol.critic_forward(np.ones((3, 32)), np.ones((3, 32)))
    assert np.allclose(v.data, 0.0)


def test_critic_pure_function():
    _, pol = make_policy(seed=5)
    obs = np.random.default_rng(2).normal(size=(2, 32))
    g = np.random.default_rng(3).normal(size=(2, 32))
    assert np.array_equal(pol.critic_forward(obs, g).data,
                          pol.critic_forward(obs, g).data)


@pytest.mark.parametrize("seed", range(3))
def test_critic_gradcheck(seed):
    store, pol = make_policy(seed=seed + 40)
    rng = np.random.default_rng(seed)
    obs = rng.normal(size=(3, 32))
    g = rng.normal(size=(3, 32))

    def build(tape):
        v = pol.critic_forward(obs, g, tape)
        return T.tsum(T.mul(v, v, tape), tape=tape)

    tape = Tape(store)
    store.zero_grad()
    backward(tape, build(tape))
    worst = 0.0
    for name in ("vf.h0.w", "vf.out.w", "vf.ln1.bias"):
        p = store.params[name]
        numeric = numeric_grad(lambda: build(None).item(), p)
        worst = max(worst, relative_error(p.grad.copy(), numeric))
    assert worst < 1e-5


def test_entropy_of_forced_rows_is_zero():
    _, pol = make_policy()
    out = pol.actor_forward(np.zeros((2, 32)), np.zeros((2, 4)), np.zeros(2))
    h = pol.entropy(out)
    assert np.allclose(h.data, 0.0)


# ---------------------------------------------------------------------------
# reward


def test_reward_examples():
    r = compute_reward(18.0, 12.0, 20.0)
    assert r.regret == pytest.approx(0.5)
    assert r.reward == pytest.approx(-0.5)
    assert compute_reward(10.0, 5.0, 20.0).regret == 0.0
    assert compute_reward(12.0, 8.0, 20.0).regret == 0.0   # boundary tau == D


def test_reward_requires_positive_requirement():
    with pytest.raises(ConfigError):
        compute_reward(1.0, 1.0, 0.0)
