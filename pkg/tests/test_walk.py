import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwrng.walk import (
    BasisPoint,
    CoinOperator,
    FlipOperator,
    MeasurementMode,
    WalkConfig,
    WalkState,
    apply_coin,
    apply_memory,
    apply_shift,
    distribution,
    evolve,
    fidelity_with,
    generalized_coin_matrix,
    initial_state,
    mode_dimension,
)

SQ2 = 1.0 / math.sqrt(2.0)


def config(P, kappa, T, coin=None, flip=FlipOperator.I, initial=None):
    return WalkConfig(P=P, kappa=kappa, T=T, coin=coin or CoinOperator.hadamard(), flip=flip, initial=initial)


def random_state(cfg, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=cfg.dim) + 1j * rng.normal(size=cfg.dim)
    return WalkState(amps / np.linalg.norm(amps), cfg)


# -- index layout -------------------------------------------------------------

def test_all_zeros_point_is_index_zero():
    assert BasisPoint(0, (0,)).index(3) == 0
    assert BasisPoint(0, (0, 0, 0)).index(5) == 0


def test_index_is_position_major_big_endian_coins():
    # (x, c_0, c_1) -> x*4 + 2*c_0 + c_1, the active coin c_1 least significant
    assert BasisPoint(2, (1, 0)).index(3) == 2 * 4 + 2
    assert BasisPoint(1, (0, 1)).index(3) == 1 * 4 + 1
    assert BasisPoint(4, (1,)).index(5) == 9


def test_index_roundtrip_is_bijective():
    P, kappa = 5, 3
    seen = set()
    for i in range(P * 2**kappa):
        pt = BasisPoint.from_index(i, P, kappa)
        assert pt.index(P) == i
        seen.add((pt.x, pt.coins))
    assert len(seen) == P * 2**kappa


def test_index_rejects_out_of_range_labels():
    with pytest.raises(ValueError):
        BasisPoint(3, (0,)).index(3)
    with pytest.raises(ValueError):
        BasisPoint(0, (2,)).index(3)
    with pytest.raises(ValueError):
        BasisPoint.from_index(24, 3, 3)


# -- config validation --------------------------------------------------------

def test_config_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        config(1, 1, 0)
    with pytest.raises(ValueError):
        config(3, 0, 0)
    with pytest.raises(ValueError):
        config(3, 1, -1)
    with pytest.raises(ValueError):
        config(3, 2, 0, initial=BasisPoint(0, (0,)))  # coin count mismatch


def test_coin_operator_rejects_unknown_kind():
    with pytest.raises(ValueError):
        CoinOperator("walsh")


# -- initial_state ------------------------------------------------------------

def test_initial_state_identity_flip_is_basis_state():
    st0 = initial_state(config(3, 1, 0))
    assert st0.amplitudes[0] == 1.0
    assert np.count_nonzero(st0.amplitudes) == 1


def test_initial_state_x_flip_splits_active_coin():
    st0 = initial_state(config(3, 1, 0, flip=FlipOperator.X))
    expect = np.zeros(6, dtype=complex)
    expect[BasisPoint(0, (0,)).index(3)] = SQ2
    expect[BasisPoint(0, (1,)).index(3)] = SQ2
    np.testing.assert_allclose(st0.amplitudes, expect, atol=1e-15)


def test_initial_state_y_flip_puts_i_on_active_one():
    st0 = initial_state(config(3, 2, 0, flip=FlipOperator.Y))
    expect = np.zeros(12, dtype=complex)
    expect[BasisPoint(0, (0, 0)).index(3)] = SQ2
    expect[BasisPoint(0, (0, 1)).index(3)] = 1j * SQ2
    np.testing.assert_allclose(st0.amplitudes, expect, atol=1e-15)


def test_initial_state_respects_custom_start_point():
    st0 = initial_state(config(5, 2, 0, initial=BasisPoint(3, (1, 0))))
    assert st0.amplitudes[BasisPoint(3, (1, 0)).index(5)] == 1.0


# -- individual operators -----------------------------------------------------

def test_hadamard_coin_on_active_zero():
    st0 = initial_state(config(5, 1, 0))
    out = apply_coin(st0, CoinOperator.hadamard())
    expect = np.zeros(10, dtype=complex)
    expect[0] = SQ2
    expect[1] = SQ2
    np.testing.assert_allclose(out.amplitudes, expect, atol=1e-15)


def test_hadamard_coin_is_involution():
    cfg = config(4, 2, 0)
    state = random_state(cfg, 7)
    twice = apply_coin(apply_coin(state, CoinOperator.hadamard()), CoinOperator.hadamard())
    np.testing.assert_allclose(twice.amplitudes, state.amplitudes, atol=1e-12)


def test_zero_angle_general_coin_is_identity():
    cfg = config(3, 2, 0)
    state = random_state(cfg, 11)
    out = apply_coin(state, CoinOperator.generalized(0.0, 0.0))
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)


@given(theta=st.floats(0.0, math.pi), phi=st.floats(0.0, math.pi))
def test_general_coin_is_unitary(theta, phi):
    u = generalized_coin_matrix(theta, phi)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)


def test_flip_matrices_are_unitary():
    for flip in FlipOperator:
        u = flip.matrix()
        np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-15)


def test_shift_moves_by_active_coin():
    # (|0,0> + |0,1>)/sqrt2 with P=5 -> (|1,0> + |4,1>)/sqrt2
    cfg = config(5, 1, 0)
    amps = np.zeros(10, dtype=complex)
    amps[BasisPoint(0, (0,)).index(5)] = SQ2
    amps[BasisPoint(0, (1,)).index(5)] = SQ2
    out = apply_shift(WalkState(amps, cfg))
    expect = np.zeros(10, dtype=complex)
    expect[BasisPoint(1, (0,)).index(5)] = SQ2
    expect[BasisPoint(4, (1,)).index(5)] = SQ2
    np.testing.assert_allclose(out.amplitudes, expect, atol=1e-15)


def test_shift_wraps_around_the_cycle():
    cfg = config(3, 1, 0, initial=BasisPoint(2, (0,)))
    out = apply_shift(initial_state(cfg))
    assert out.amplitudes[BasisPoint(0, (0,)).index(3)] == 1.0


def test_shift_applied_P_times_is_identity():
    cfg = config(5, 2, 0)
    state = random_state(cfg, 3)
    out = state
    for _ in range(cfg.P):
        out = apply_shift(out)
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-12)


def test_memory_rotation_is_identity_for_single_coin():
    cfg = config(4, 1, 0)
    state = random_state(cfg, 5)
    np.testing.assert_array_equal(apply_memory(state).amplitudes, state.amplitudes)


def test_memory_rotation_moves_active_coin_to_front():
    # coins (0,1,1) -> (1,0,1)
    cfg = config(2, 3, 0, initial=BasisPoint(0, (0, 1, 1)))
    out = apply_memory(initial_state(cfg))
    assert out.amplitudes[BasisPoint(0, (1, 0, 1)).index(2)] == 1.0


def test_memory_rotation_has_order_kappa():
    cfg = config(3, 3, 0)
    state = random_state(cfg, 13)
    out = state
    for _ in range(cfg.kappa):
        out = apply_memory(out)
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)


@given(seed=st.integers(0, 2**32 - 1), kappa=st.integers(1, 3), P=st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_each_stage_preserves_norm(seed, kappa, P):
    cfg = config(P, kappa, 0)
    state = random_state(cfg, seed)
    for stage in (
        lambda s: apply_coin(s, CoinOperator.hadamard()),
        lambda s: apply_coin(s, CoinOperator.generalized(0.7, 1.9)),
        apply_shift,
        apply_memory,
    ):
        assert abs(stage(state).norm() - 1.0) < 1e-12


# -- evolve -------------------------------------------------------------------

def test_evolve_zero_steps_is_initial_state():
    cfg = config(3, 2, 0, flip=FlipOperator.X)
    np.testing.assert_array_equal(evolve(cfg).amplitudes, initial_state(cfg).amplitudes)


def test_one_step_single_coin_walk():
    # coin then shift; kappa=1 has no memory rotation
    out = evolve(config(5, 1, 1))
    expect = np.zeros(10, dtype=complex)
    expect[BasisPoint(1, (0,)).index(5)] = SQ2
    expect[BasisPoint(4, (1,)).index(5)] = SQ2
    np.testing.assert_allclose(out.amplitudes, expect, atol=1e-15)


def test_one_step_two_coin_walk_rotates_coins():
    # after the shift the rotation turns coins (0,1) into (1,0)
    out = evolve(config(3, 2, 1))
    expect = np.zeros(12, dtype=complex)
    expect[BasisPoint(1, (0, 0)).index(3)] = SQ2
    expect[BasisPoint(2, (1, 0)).index(3)] = SQ2
    np.testing.assert_allclose(out.amplitudes, expect, atol=1e-15)


def test_evolve_is_deterministic():
    cfg = config(5, 2, 37, coin=CoinOperator.generalized(0.9, 0.4), flip=FlipOperator.Y)
    np.testing.assert_array_equal(evolve(cfg).amplitudes, evolve(cfg).amplitudes)


def test_long_evolution_keeps_norm():
    cfg = config(11, 3, 500)
    assert abs(evolve(cfg).norm() - 1.0) < 1e-10


# -- dense-operator oracle ----------------------------------------------------

def dense_step_matrix(P, kappa, coin_matrix):
    """Walk operator assembled entry by entry from the update rules."""
    nc = 2**kappa
    dim = P * nc
    C = np.zeros((dim, dim), dtype=complex)
    S = np.zeros((dim, dim), dtype=complex)
    M = np.zeros((dim, dim), dtype=complex)
    for x in range(P):
        for code in range(nc):
            i = x * nc + code
            active = code & 1
            for a in (0, 1):
                C[x * nc + ((code & ~1) | a), i] += coin_matrix[a, active]
            x2 = (x + (1 if active == 0 else -1)) % P
            S[x2 * nc + code, i] = 1.0
            bits = [(code >> (kappa - 1 - j)) & 1 for j in range(kappa)]
            rotated = [bits[-1]] + bits[:-1]
            code2 = 0
            for b in rotated:
                code2 = (code2 << 1) | b
            M[x * nc + code2, i] = 1.0
    return M @ S @ C


@pytest.mark.parametrize("P,kappa,T,coin,flip", [
    (3, 1, 4, CoinOperator.hadamard(), FlipOperator.I),
    (5, 1, 7, CoinOperator.generalized(1.1, 0.3), FlipOperator.X),
    (4, 2, 10, CoinOperator.hadamard(), FlipOperator.Y),
    (5, 2, 9, CoinOperator.generalized(0.5, 2.2), FlipOperator.I),
])
def test_factored_evolution_matches_dense_operator(P, kappa, T, coin, flip):
    cfg = WalkConfig(P=P, kappa=kappa, T=T, coin=coin, flip=flip)
    W = dense_step_matrix(P, kappa, coin.matrix())
    vec = np.zeros(cfg.dim, dtype=complex)
    vec[0] = 1.0
    full_flip = np.kron(np.eye(cfg.dim // 2), flip.matrix())
    vec = np.linalg.matrix_power(W, T) @ (full_flip @ vec)
    np.testing.assert_allclose(evolve(cfg).amplitudes, vec, atol=1e-10)


# -- distributions ------------------------------------------------------------

def test_unevolved_basis_state_is_point_mass():
    dist = distribution(initial_state(config(3, 2, 0)), MeasurementMode.ALL)
    assert dist.max_outcome() == (0, 1.0)
    assert dist.d == 12


def test_position_marginal_of_one_step_walk():
    dist = distribution(evolve(config(5, 1, 1)), MeasurementMode.POSITION_ONLY)
    np.testing.assert_allclose(dist.probs, [0.0, 0.5, 0.0, 0.0, 0.5], atol=1e-15)


def test_mode_dimensions():
    assert mode_dimension(5, 3, MeasurementMode.ALL) == 40
    assert mode_dimension(5, 3, MeasurementMode.MEMORY_ONLY) == 20
    assert mode_dimension(5, 3, MeasurementMode.POSITION_ONLY) == 5
    assert mode_dimension(5, 1, MeasurementMode.MEMORY_ONLY) == 5


@given(seed=st.integers(0, 2**32 - 1), kappa=st.integers(1, 4), P=st.integers(2, 7))
@settings(max_examples=60, deadline=None)
def test_marginals_are_consistent(seed, kappa, P):
    cfg = config(P, kappa, 0)
    state = random_state(cfg, seed)
    full = distribution(state, MeasurementMode.ALL)
    mem = distribution(state, MeasurementMode.MEMORY_ONLY)
    pos = distribution(state, MeasurementMode.POSITION_ONLY)
    assert full.d == cfg.dim and mem.d == cfg.dim // 2 and pos.d == P
    for dist in (full, mem, pos):
        assert abs(dist.probs.sum() - 1.0) < 1e-10
        assert dist.probs.min() >= 0.0
    np.testing.assert_allclose(full.probs.reshape(-1, 2).sum(axis=1), mem.probs, atol=1e-10)
    np.testing.assert_allclose(full.probs.reshape(P, -1).sum(axis=1), pos.probs, atol=1e-10)


def test_single_coin_memory_marginal_equals_position_marginal():
    state = evolve(config(7, 1, 23))
    mem = distribution(state, MeasurementMode.MEMORY_ONLY)
    pos = distribution(state, MeasurementMode.POSITION_ONLY)
    np.testing.assert_array_equal(mem.probs, pos.probs)


# -- fidelity -----------------------------------------------------------------

def test_fidelity_of_identical_states_is_one():
    state = random_state(config(4, 2, 0), 17)
    assert fidelity_with(state, state) == pytest.approx(1.0)


def test_fidelity_of_orthogonal_basis_states_is_zero():
    cfg = config(3, 1, 0)
    a = initial_state(cfg)
    b = initial_state(config(3, 1, 0, initial=BasisPoint(1, (0,))))
    assert fidelity_with(a, b) == 0.0


def test_fidelity_of_basis_state_with_even_split_is_half():
    cfg = config(3, 1, 0)
    a = initial_state(cfg)
    b = initial_state(config(3, 1, 0, flip=FlipOperator.X))
    assert fidelity_with(a, b) == pytest.approx(0.5)


def test_fidelity_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity_with(initial_state(config(3, 1, 0)), initial_state(config(5, 1, 0)))
