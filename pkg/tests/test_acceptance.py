"""Acceptance criteria 1-10.

Each test prints one ``criterion k: PASS|FAIL`` line; the lines are
repeated in the pytest terminal summary.  Run standalone with
``python3 tests/test_acceptance.py``.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import E1, E2, MINUS, PLUS, record  # noqa: E402
from qrg import channels as ch  # noqa: E402
from qrg import constructions as cons  # noqa: E402
from qrg import linalg as la  # noqa: E402
from qrg.certify import InstanceSpec, run_campaign  # noqa: E402
from qrg.freesets import PolytopeFreeSet  # noqa: E402
from qrg.games import (  # noqa: E402
    ChannelEnsemble,
    cyclic_action,
    is_covariant_measurement,
    optimal_success,
    success_probability,
    sup_over_free,
    symmetrize_measurement,
)
from qrg.solvers import robustness  # noqa: E402


def _line(result, name):
    return next(l for l in result.ledger if l.name == name)


@pytest.fixture(scope="module")
def thm1_campaign():
    specs = [InstanceSpec(seed=s, target="thm1", dim_a=2 if s < 50 else 3,
                          state_kind="random-pure" if s % 2 else "random-mixed")
             for s in range(100)]
    return run_campaign(specs)


def test_c01_witness_game_ratio_equals_one_plus_robustness(thm1_campaign):
    worst = 0.0
    ok = len(thm1_campaign.results) == 100
    for r in thm1_campaign.results:
        gens = len(random_generators(r.seed, 2 if r.seed < 50 else 3))
        ok &= r.status == "pass" and 2 <= gens <= 5
        line = _line(r, "ratio_equals_1_plus_R")
        rel = abs(line.value - line.bound) / line.bound
        ok &= rel <= 1e-4
        worst = max(worst, rel)
    assert record(1, ok, f"100 instances, worst |ratio-(1+R)|/(1+R) = {worst:.2e} (<= 1e-4)")


def random_generators(seed, d):
    from qrg.certify import random_instance

    _, f = random_instance(InstanceSpec(seed=seed, target="thm1", dim_a=d))
    assert any(np.allclose(g, np.eye(d) / d) for g in f.generators)
    return f.generators


def test_c02_robustness_duality(thm1_campaign):
    gap = cs = 0.0
    for r in thm1_campaign.results:
        gap = max(gap, _line(r, "duality_gap").value)
        cs = max(cs, _line(r, "cs_weights").value, _line(r, "cs_operator").value)
    ok = gap <= 1e-6 and cs <= 1e-6
    assert record(2, ok, f"max gap {gap:.2e}, max complementary-slackness residual {cs:.2e} (<= 1e-6)")


def test_c03_analytic_anchor():
    f = PolytopeFreeSet((E1, E2))
    cert = robustness(PLUS, f)
    comp = cons.compile_thm1(PLUS, f, cert)
    num = optimal_success(PLUS, comp.game, method="sdp").value
    den = sup_over_free(f, comp.game, method="sdp").value
    ratio = num / den
    tau = cert.noise_state(PLUS, f)
    ok = (abs(cert.lambda_star - 1) <= 1e-6 and abs(ratio - 2) <= 1e-4
          and np.allclose(tau, MINUS, atol=1e-5) and np.allclose(cert.dual_witness, 2 * PLUS, atol=1e-5))
    assert record(3, ok, f"lambda* = {cert.lambda_star:.9f}, ratio = {ratio:.9f}, "
                         f"tau ~ |-><-|, x ~ 2|+><+|")


def test_c04_max_entangled_identities():
    from test_constructions import zigzag_direct

    rng = np.random.default_rng(4)
    worst_t = worst_z = 0.0
    for k in range(1000):
        d = 2 + k % 2
        r, s = la.random_ginibre_density(d, rng), la.random_ginibre_density(d, rng)
        lhs = np.trace(la.max_entangled(d) @ np.kron(r, s))
        worst_t = max(worst_t, abs(lhs - np.trace(s.T @ r)))
    for k in range(1000):
        da, dc = 2 + k % 2, 2 + (k // 2) % 2
        s = la.random_ginibre_density(da * dc, rng)
        r = la.random_ginibre_density(da * dc, rng)
        worst_z = max(worst_z, abs(zigzag_direct(s, r, da, dc) - la.inner(s, r)))
    ok = worst_t <= 1e-10 and worst_z <= 1e-10
    assert record(4, ok, f"1000+1000 instances, transpose identity {worst_t:.1e}, zigzag {worst_z:.1e}")


def test_c05_covariant_symmetrization():
    from test_channels import random_channel

    rng = np.random.default_rng(5)
    d_ps = d_cov = d_flat = 0.0
    valid = True
    for k in range(100):
        n = 2 + k % 4
        base = random_channel(rng, 2, n)
        x, _ = la.generalized_pauli(n)
        maps = [ch.conjugate_output(base, np.linalg.matrix_power(x, j)) for j in range(1, n + 1)]
        game = ChannelEnsemble([1 / n] * n, maps, labels=tuple(range(1, n + 1)))
        act = cyclic_action(n)
        raw = [la.random_ginibre_density(n, rng) for _ in range(n)]
        w = la.psd_inv_sqrt(sum(raw))
        povm = ch.Measurement(tuple(w @ r @ w for r in raw), act.labels)
        sym = symmetrize_measurement(povm, act, game)
        sigma = la.random_ginibre_density(2, rng)
        d_ps = max(d_ps, abs(success_probability(sigma, sym, game) - success_probability(sigma, povm, game)))
        valid &= ch.validate_povm(sym, 1e-12).passed
        d_cov = max(d_cov, is_covariant_measurement(sym, act)[1])
        per_g = [la.inner(e, ch.apply(m, sigma)) for e, m in zip(sym.effects, maps)]
        d_flat = max(d_flat, max(per_g) - min(per_g))
    ok = d_ps <= 1e-12 and valid and d_cov <= 1e-12 and d_flat <= 1e-10
    assert record(5, ok, f"100 pairs, P_S drift {d_ps:.1e}, covariance {d_cov:.1e}, "
                         f"per-element spread {d_flat:.1e}")


def test_c06_ancilla_game_structure():
    spec = InstanceSpec(seed=6, target="appc", dim_a=2, dim_c=2, epsilon=0.0, samples=50)
    r = run_campaign([spec]).results[0]
    names = ["channels_cp", "covariance_residual", "psi_completeness", "psi_gamma_is_identity",
             "gamma_pairing_identity"]
    vals = {n: _line(r, n).value for n in names}
    ok = (r.status == "pass" and vals["channels_cp"] >= -1e-9 and vals["covariance_residual"] <= 1e-9
          and vals["psi_completeness"] <= 1e-10 and vals["psi_gamma_is_identity"] <= 1e-10
          and vals["gamma_pairing_identity"] <= 1e-8 and r.data["samples"] == 50)
    assert record(6, ok, f"N={r.data['N']}, |G|={r.data['group_order']}, min eig(Choi) "
                         f"{vals['channels_cp']:.1e}, covariance {vals['covariance_residual']:.1e}, "
                         f"pairing {vals['gamma_pairing_identity']:.1e}")


def test_c07_ancilla_game_certified_bound():
    specs = [InstanceSpec(seed=s, target="thm2", dim_a=2, dim_c=2, epsilon=eps)
             for eps in (0.05, 0.0) for s in range(25)]
    rep = run_campaign(specs)
    worst_ratio = min(_line(r, "certified_ratio").margin for r in rep.results)
    worst_anc = min(_line(r, "ancilla_value_le_bound").margin for r in rep.results)
    gens_ok = all(2 <= len(random_instance_gens(s)) <= 3 for s in range(25))
    ok = rep.all_passed and len(rep.results) == 50 and worst_ratio >= -1e-6 and worst_anc >= -1e-6 and gens_ok
    assert record(7, ok, f"50 runs (eps 0.05 and 0), worst ratio-bound margin {worst_ratio:.2e}, "
                         f"worst ancilla margin {worst_anc:.2e}")


def random_instance_gens(seed):
    from qrg.certify import random_instance

    _, f = random_instance(InstanceSpec(seed=seed, target="thm2"))
    assert any(np.allclose(g, np.eye(2) / 2) for g in f.a_generators)
    return f.a_generators


def test_c08_divergence_games(tmp_path):
    f = PolytopeFreeSet((E1,))
    ratios = {n: cons.compile_divergence(PLUS, f, n).achieved_ratio for n in (4, 8, 16, 32, 64)}
    ok = all(r >= (n - 1) / 2 - 1e-6 for n, r in ratios.items())
    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps({"state": la.matrix_to_json(PLUS), "free_set": f.to_json()}))
    res = subprocess.run([sys.executable, "-m", "qrg", "robustness", "-i", str(inst)],
                         capture_output=True, text=True)
    ok &= res.returncode == 2 and json.loads(res.stdout)["kind"] == "infinite_robustness"
    assert record(8, ok, "ratios " + ", ".join(f"N={n}: {r:.6f}" for n, r in ratios.items())
                  + f"; CLI exit {res.returncode}")


def test_c09_bound_resource():
    spec = InstanceSpec(seed=9, target="cor1", dim_a=2, state_kind="explicit",
                        state=la.matrix_to_json(np.eye(2) / 2),
                        free_set=PolytopeFreeSet((E1, E2)).to_json(), games=20)
    r = run_campaign([spec]).results[0]
    ratios = [l.value for l in r.ledger if l.name.endswith("_ratio_le_1_plus_R")]
    ok = (r.status == "pass" and r.lambda_star <= 1e-7 and len(ratios) == 20
          and max(ratios) <= 1 + 1e-5 and r.classification == "bound_resource")
    assert record(9, ok, f"lambda*_coF = {r.lambda_star:.1e}, max ratio over 20 games = {max(ratios):.8f}")


def test_c10_determinism():
    specs = [InstanceSpec(seed=s, target=t) for s, t in
             [(3, "thm1"), (1, "cor1"), (2, "thm2"), (4, "appd"), (1, "thm1")]]
    a = run_campaign(specs).dumps()
    b = run_campaign(specs).dumps()
    c = run_campaign(list(reversed(specs))).dumps()
    d = run_campaign(specs, workers=2).dumps()
    ok = a == b == c == d
    assert record(10, ok, f"reruns byte-identical ({len(a)} bytes), worker count and order invariant")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
