import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import E1, E2
from qrg import channels as ch
from qrg import linalg as la
from qrg.errors import ArgumentError, CovarianceError
from qrg.freesets import CFlexibleFreeSet, PolytopeFreeSet
from qrg.games import (
    ChannelEnsemble,
    GroupAction,
    covariance_check,
    covariant_optimal_success,
    cyclic_action,
    effective_operator,
    is_covariant_measurement,
    optimal_success,
    success_probability,
    sup_over_free,
    symmetrize_measurement,
)
from test_channels import random_channel


def cyclic_game(rng, n, din=2):
    base = random_channel(rng, din, n)
    x, _ = la.generalized_pauli(n)
    maps = [ch.conjugate_output(base, np.linalg.matrix_power(x, k)) for k in range(1, n + 1)]
    return ChannelEnsemble([1 / n] * n, maps, labels=tuple(range(1, n + 1)))


def random_povm(rng, d, k):
    raw = [la.random_ginibre_density(d, rng) for _ in range(k)]
    w = la.psd_inv_sqrt(sum(raw))
    return ch.Measurement(tuple(w @ r @ w for r in raw))


def test_ensemble_validation():
    idm = ch.identity_map(2)
    with pytest.raises(ArgumentError):
        ChannelEnsemble([0.6, 0.6], [idm, idm])
    with pytest.raises(ArgumentError):
        ChannelEnsemble([0.5, 0.5], [idm, ch.identity_map(3)])
    with pytest.raises(ArgumentError):
        ChannelEnsemble([0.5, 0.5], [idm, ch.scaled(idm, 0.5)])


def test_ensemble_json_round_trip(rng):
    g = cyclic_game(rng, 3)
    back = ChannelEnsemble.from_json(g.to_json())
    assert back.priors == g.priors
    assert all(np.array_equal(a.choi, b.choi) for a, b in zip(back.channels, g.channels))


def test_orthogonal_game_value_one():
    x, _ = la.generalized_pauli(2)
    prep = ch.compose(ch.preparation_map(E1), ch.trace_map(2))
    g = ChannelEnsemble([0.5, 0.5], [prep, ch.conjugate_output(prep, x)])
    assert abs(optimal_success(np.eye(2) / 2, g).value - 1) <= 1e-7


def test_identical_channels_value_is_max_prior(rng):
    m = random_channel(rng, 2, 2)
    g = ChannelEnsemble([0.1, 0.6, 0.3], [m, m, m])
    assert abs(optimal_success(la.random_ginibre_density(2, rng), g).value - 0.6) <= 1e-7


def test_cyclic_action_is_valid():
    act = cyclic_action(5)
    assert act.identity == 5 and act.inverse(2) == 3
    assert act.product(4, 3) == 2


def test_group_action_rejects_non_homomorphism():
    x, _ = la.generalized_pauli(3)
    labels = (1, 2, 3)
    unitaries = [np.eye(3), x, x]  # breaks U_1 U_1 = U_2 ... order
    table = {(a, b): la.mod_index(a + b, 3) for a in labels for b in labels}
    with pytest.raises(ArgumentError):
        GroupAction(labels, unitaries, table, 3, generators=(1,))


def test_effective_operator_reproduces_success(rng):
    g = cyclic_game(rng, 3)
    povm = random_povm(rng, 3, 3)
    rho = la.random_ginibre_density(2, rng)
    assert np.isclose(la.inner(effective_operator(povm, g), rho),
                      success_probability(rho, povm, g))


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 4))
def test_symmetrization_preserves_success(seed, n):
    rng = np.random.default_rng(seed)
    g = cyclic_game(rng, n)
    act = cyclic_action(n)
    povm = ch.Measurement(random_povm(rng, n, n).effects, act.labels)
    sym = symmetrize_measurement(povm, act, g)
    rho = la.random_ginibre_density(2, rng)
    assert abs(success_probability(rho, sym, g) - success_probability(rho, povm, g)) <= 1e-12
    assert ch.validate_povm(sym).passed
    assert is_covariant_measurement(sym, act)[0]


def test_symmetrization_rejects_noncovariant_game(rng):
    maps = [random_channel(rng, 2, 3) for _ in range(3)]
    g = ChannelEnsemble([1 / 3] * 3, maps, labels=(1, 2, 3))
    rep = covariance_check(g, cyclic_action(3))
    assert not rep.covariant and rep.worst_pair is not None
    povm = ch.Measurement(ch.computational_povm(3).effects, (1, 2, 3))
    with pytest.raises(CovarianceError):
        symmetrize_measurement(povm, cyclic_action(3), g)


def test_covariant_optimum_matches_general(rng):
    g = cyclic_game(rng, 3)
    rho = la.random_ginibre_density(2, rng)
    lower, upper, _ = covariant_optimal_success(rho, g, cyclic_action(3))
    full = optimal_success(rho, g, method="sdp").value
    assert lower <= full + 1e-7 and full <= upper + 1e-7
    assert upper - lower <= 1e-6


def test_sup_over_polytope_hits_generator(rng):
    g = cyclic_game(rng, 3)
    f = PolytopeFreeSet((E1, E2, np.eye(2) / 2))
    sup = sup_over_free(f, g)
    assert sup.mode == "exact"
    for _ in range(10):
        w = rng.dirichlet(np.ones(3))
        omega = sum(p * s for p, s in zip(w, f.generators))
        assert optimal_success(omega, g).value <= sup.value + 1e-7


def test_seesaw_lower_bound_is_attained_by_a_member(rng):
    maps = [random_channel(rng, 4, 2) for _ in range(2)]
    g = ChannelEnsemble([0.5, 0.5], maps)
    f = CFlexibleFreeSet(2, 2, (E1, np.eye(2) / 2))
    sup = sup_over_free(f, g, restarts=2)
    assert sup.mode == "seesaw_lower_bound"
    assert abs(optimal_success(sup.state, g).value - sup.value) <= 1e-6


def test_fixed_measurement_domination(rng):
    from qrg.solvers import robustness

    f = PolytopeFreeSet((la.random_density(2, rng), np.eye(2) / 2))
    rho = la.random_pure_state(2, rng)
    cert = robustness(rho, f)
    omega = cert.free_state(f)
    for _ in range(5):
        g = cyclic_game(rng, 3)
        povm = random_povm(rng, 3, 3)
        lhs = success_probability(rho, povm, g)
        assert lhs <= (1 + cert.lambda_star) * success_probability(omega, povm, g) + 1e-6


def test_splitting_a_channel_never_helps(rng):
    a, b = random_channel(rng, 2, 2), random_channel(rng, 2, 2)
    rho = la.random_ginibre_density(2, rng)
    split = optimal_success(rho, ChannelEnsemble([0.3, 0.2, 0.5], [a, a, b])).value
    merged = optimal_success(rho, ChannelEnsemble([0.5, 0.5], [a, b])).value
    # any split POVM yields a merged one by adding the two effects
    assert split <= merged + 1e-9


def test_symmetrized_optimal_povm_stays_optimal(rng):
    g = cyclic_game(rng, 4)
    act = cyclic_action(4)
    rho = la.random_ginibre_density(2, rng)
    cert = optimal_success(rho, g, method="sdp")
    sym = symmetrize_measurement(ch.Measurement(cert.povm.effects, act.labels), act, g)
    assert abs(success_probability(rho, sym, g) - cert.value) <= 1e-6
