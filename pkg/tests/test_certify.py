import json

import numpy as np
import pytest

from qrg import linalg as la
from qrg.certify import (
    CampaignReport,
    InstanceSpec,
    LedgerLine,
    load_campaign,
    random_instance,
    run_campaign,
    specs_from_flags,
)
from qrg.errors import ArgumentError
from qrg.freesets import support_space


def test_ledger_margins():
    assert LedgerLine("a", 1.0, ">=", 0.5, 0.0).margin == 0.5
    assert LedgerLine("b", 1.0, "<=", 0.5, 0.0).margin == -0.5
    assert not LedgerLine("b", 1.0, "<=", 0.5, 0.1).passed
    assert LedgerLine("c", 1.0, "==", 1.0 + 1e-9, 1e-8).passed
    assert not LedgerLine("d", float("nan"), ">=", 0.0, 1.0).passed


def test_spec_validation_and_round_trip():
    s = InstanceSpec(seed=3, target="appd", n_values=[4, 8])
    assert InstanceSpec.from_json(json.loads(json.dumps(s.to_json()))) == s
    with pytest.raises(ArgumentError):
        InstanceSpec(seed=1, target="thm9")
    with pytest.raises(ArgumentError):
        InstanceSpec(seed=1, tol=1e-2)
    with pytest.raises(ArgumentError):
        InstanceSpec.from_json({"seed": 1, "colour": "red"})


@pytest.mark.parametrize("target,dims", [("thm1", (2, 2)), ("thm1", (3, 2)), ("thm2", (2, 2)),
                                         ("appd", (3, 2))])
def test_random_instance_is_seeded_and_valid(target, dims):
    spec = InstanceSpec(seed=11, target=target, dim_a=dims[0], dim_c=dims[1],
                        state_kind="random-mixed")
    r1, f1 = random_instance(spec)
    r2, f2 = random_instance(spec)
    assert np.array_equal(r1, r2)
    la.as_density(r1)
    if target != "appd":
        assert support_space(f1).full
    else:
        assert not support_space(f1).full


def test_generators_include_maximally_mixed():
    _, f = random_instance(InstanceSpec(seed=4, dim_a=3))
    assert any(np.allclose(g, np.eye(3) / 3) for g in f.generators)
    assert 2 <= len(f.generators) <= 5


def test_thm1_campaign_ledger_contents():
    rep = run_campaign(specs_from_flags("thm1", seed=0, count=3, tol=1e-6))
    assert rep.all_passed
    for r in rep.results:
        names = {l.name for l in r.ledger}
        assert "ratio_equals_1_plus_R" in names and "duality_gap" in names


def test_appd_campaign_growth_line():
    rep = run_campaign([InstanceSpec(seed=2, target="appd", dim_a=2)])
    assert rep.all_passed
    r = rep.results[0]
    assert r.classification == "infinite"
    line = next(l for l in r.ledger if l.name == "N64_ratio_growth")
    assert line.bound == pytest.approx(63 * r.data["leak"])


def test_empty_campaign():
    rep = run_campaign([])
    assert rep.passed == 0 and rep.results == []
    assert json.loads(rep.dumps())["count"] == 0


def test_instance_errors_are_recorded_not_raised():
    spec = InstanceSpec(seed=1, target="thm1", dim_a=2, state_kind="explicit",
                        state=la.matrix_to_json(np.diag([0.0, 1.0])),
                        free_set={"type": "polytope",
                                  "generators": [la.matrix_to_json(np.diag([1.0, 0.0]))]})
    rep = run_campaign([spec, InstanceSpec(seed=0)])
    assert [r.status for r in rep.results] == ["pass", "error"]
    assert "infinite" in rep.results[1].error


def test_report_order_is_by_seed():
    specs = [InstanceSpec(seed=s, target="appd") for s in (5, 1, 3)]
    rep = run_campaign(specs)
    assert [r.seed for r in rep.results] == [1, 3, 5]


def test_report_json_is_deterministic_and_timing_optional():
    specs = specs_from_flags("cor1", seed=7, count=2, games=3)
    a, b = run_campaign(specs), run_campaign(specs)
    assert a.dumps() == b.dumps()
    assert "timing" not in json.loads(a.dumps())
    assert "timing" in json.loads(a.dumps(include_timing=True))


def test_csv_summary():
    rep = run_campaign(specs_from_flags("thm1", seed=0, count=2))
    rows = rep.to_csv().strip().split("\n")
    assert rows[0] == "seed,target,status,lambda_star,gap,ratio,margin"
    assert len(rows) == 3


def test_load_campaign_defaults():
    specs = load_campaign({"defaults": {"target": "thm2", "epsilon": 0.0},
                           "instances": [{"seed": 1}, {"seed": 2, "epsilon": 0.05}]})
    assert [s.epsilon for s in specs] == [0.0, 0.05]
    with pytest.raises(ArgumentError):
        load_campaign({"nope": []})


def test_pretty_report_mentions_every_line():
    rep = run_campaign(specs_from_flags("thm1", seed=3, count=1))
    text = rep.pretty()
    assert all(l.name in text for l in rep.results[0].ledger)
    assert isinstance(rep, CampaignReport)
