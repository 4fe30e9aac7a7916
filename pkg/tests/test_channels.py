import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrg import channels as ch
from qrg import linalg as la
from qrg.errors import ArgumentError


def random_channel(rng, din, dout, kraus=2):
    ks = [rng.normal(size=(dout, din)) + 1j * rng.normal(size=(dout, din)) for _ in range(kraus)]
    w = la.psd_inv_sqrt(sum(k.conj().T @ k for k in ks))
    return ch.from_kraus([k @ w for k in ks], din, dout)


def test_identity_choi_is_phi():
    assert np.allclose(ch.identity_map(3).choi, la.max_entangled(3))
    assert ch.identity_map(3).kind == "cptp"


def test_choi_ordering_input_then_output():
    # replacement channel rho -> Tr(rho) sigma has Choi I_in (x) sigma
    sigma = np.diag([0.25, 0.75]).astype(complex)
    m = ch.compose(ch.preparation_map(sigma), ch.trace_map(3))
    assert np.allclose(m.choi, np.kron(np.eye(3), sigma))


def test_classification_levels():
    assert ch.CPMap(2, 2, 0.5 * la.max_entangled(2)).kind == "tni"
    bad = -np.eye(4)
    with pytest.raises(ArgumentError):
        ch.CPMap(2, 2, bad)


def test_declared_kind_downgrade_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        m = ch.CPMap(2, 2, 0.5 * la.max_entangled(2), "cptp")
    assert m.kind == "tni" and w and m.notes


def test_apply_matches_kraus(rng):
    ks = [rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2)) for _ in range(2)]
    w = la.psd_inv_sqrt(sum(k.conj().T @ k for k in ks))
    ks = [k @ w for k in ks]
    m = ch.from_kraus(ks, 2, 3)
    rho = la.random_ginibre_density(2, rng)
    assert np.allclose(ch.apply(m, rho), sum(k @ rho @ k.conj().T for k in ks))
    assert m.kind == "cptp"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_adjoint_duality(seed):
    rng = np.random.default_rng(seed)
    m = random_channel(rng, 2, 3)
    rho = la.random_ginibre_density(2, rng)
    y = la.hermitian_part(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    assert np.isclose(la.inner(ch.apply(m, rho), y), la.inner(rho, ch.apply_adjoint(m, y)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_ancilla_matches_tensor_with_identity(seed):
    rng = np.random.default_rng(seed)
    m = random_channel(rng, 2, 2)
    rho = la.random_ginibre_density(6, rng)
    big = ch.tensor(m, ch.identity_map(3))
    assert np.allclose(ch.apply_with_ancilla(m, rho, 3), ch.apply(big, rho))
    y = la.random_ginibre_density(6, rng)
    assert np.allclose(ch.apply_adjoint_with_ancilla(m, y, 3), ch.apply_adjoint(big, y))


def test_compose_and_conjugate_output(rng):
    a, b = random_channel(rng, 2, 2), random_channel(rng, 2, 2)
    rho = la.random_ginibre_density(2, rng)
    assert np.allclose(ch.apply(ch.compose(b, a), rho), ch.apply(b, ch.apply(a, rho)))
    u = la.random_unitary(2, rng)
    got = ch.apply(ch.conjugate_output(a, u), rho)
    assert np.allclose(got, u @ ch.apply(a, rho) @ u.conj().T)


def test_functional_map_is_tni():
    e = np.diag([1.0, 0.3])
    m = ch.functional_map(e)
    assert m.out_dim == 1 and m.kind == "tni"
    assert np.isclose(ch.apply(m, np.eye(2) / 2)[0, 0], 0.65)


def test_cpmap_json_round_trip(rng):
    m = random_channel(rng, 2, 3)
    back = ch.CPMap.from_json(m.to_json())
    assert np.array_equal(back.choi, m.choi) and back.kind == m.kind


def test_measurement_validation():
    assert ch.validate_povm(ch.computational_povm(3)).passed
    bad = ch.Measurement((np.diag([1.0, 0.0]), np.diag([0.0, 0.5])))
    assert not ch.validate_povm(bad).passed
    with pytest.raises(ArgumentError):
        ch.Measurement(())


def test_measurement_json_round_trip():
    m = ch.Measurement(ch.computational_povm(2).effects, ((1, 2), (2, 1)))
    back = ch.Measurement.from_json(m.to_json())
    assert back.labels == m.labels
    assert all(np.array_equal(a, b) for a, b in zip(back.effects, m.effects))


def test_subchannel_collection_requires_channel_sum():
    half = ch.scaled(ch.identity_map(2), 0.5)
    assert len(ch.SubchannelCollection((half, half))) == 2
    with pytest.raises(ArgumentError):
        ch.SubchannelCollection((half,))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_choi_kraus_function_routes_agree(seed):
    rng = np.random.default_rng(seed)
    ks = [rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2)) for _ in range(3)]
    direct = lambda s: sum(k @ s @ k.conj().T for k in ks)
    rho = la.random_ginibre_density(2, rng)
    a = ch.apply(ch.from_kraus(ks, 2, 3), rho)
    b = ch.apply(ch.from_function(direct, 2, 3), rho)
    assert la.max_abs(a - direct(rho)) <= 1e-10 and la.max_abs(b - direct(rho)) <= 1e-10


def test_kind_monotone_and_preserved(rng):
    chan = random_channel(rng, 2, 2)
    tni = ch.scaled(chan, 0.7)
    for m, kinds in ((chan, ("cptp", "tni", "cp")), (tni, ("tni", "cp"))):
        assert all(m.satisfies(k) for k in kinds)
    assert not tni.satisfies("cptp")
    assert ch.tensor(chan, chan).kind == "cptp"
    assert ch.compose(chan, chan).kind == "cptp"
    assert ch.tensor(chan, tni).kind == "tni" and ch.compose(tni, chan).kind == "tni"
    assert la.min_eigenvalue(ch.tensor(tni, tni).choi) >= -1e-12
