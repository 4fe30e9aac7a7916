"""Seeded certification campaigns.

Each instance runs one pipeline and records every certified inequality as a
:class:`LedgerLine` with a signed margin.  An instance passes when all of
its lines do.  Reports are merged in a content-derived order, so worker
count and input order never change the JSON.  Timings stay out of the JSON
unless explicitly requested.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import channels as ch
from . import constructions as cons
from . import linalg as la
from .errors import ArgumentError, ConstructionError, QRGError
from .freesets import CFlexibleFreeSet, FreeSet, PolytopeFreeSet, freeset_from_json, in_S_T
from .games import (
    ChannelEnsemble,
    covariance_check,
    optimal_success,
    seesaw,
    sup_over_free,
    symmetrize_measurement,
)
from .solvers import DEFAULT_TOL, InfiniteRobustness, robustness

log = logging.getLogger(__name__)

TARGETS = ("thm1", "cor1", "thm2", "appc", "appd")
STATE_KINDS = ("random-pure", "random-mixed", "hull-mixture", "explicit")
REPORT_SCHEMA = 1


@dataclass
class InstanceSpec:
    """Everything needed to rebuild an instance and its pipeline.

    ``generators`` counts free generators (A-side generators for
    C-flexible targets) including the maximally mixed one; ``None`` draws
    it from the seed.  ``state``/``free_set`` carry explicit JSON payloads.
    """

    seed: int
    target: str = "thm1"
    dim_a: int = 2
    dim_c: int = 2
    generators: int | None = None
    state_kind: str = "random-pure"
    state: dict | None = None
    free_set: dict | None = None
    epsilon: float = 0.05
    tol: float = DEFAULT_TOL
    n_values: tuple = (4, 8, 16, 32, 64)
    samples: int = 50
    games: int = 20

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ArgumentError(f"unknown target {self.target!r}; choose from {TARGETS}")
        if self.state_kind not in STATE_KINDS:
            raise ArgumentError(f"unknown state kind {self.state_kind!r}")
        if self.state_kind == "explicit" and self.state is None:
            raise ArgumentError("explicit state kind needs a state payload")
        if not 1e-10 <= self.tol <= 1e-4:
            raise ArgumentError("tol must lie in [1e-10, 1e-4]")
        if self.epsilon < 0:
            raise ArgumentError("epsilon must be non-negative")
        if self.dim_a < 1 or self.dim_c < 1:
            raise ArgumentError("dimensions must be positive")
        self.seed = int(self.seed)
        self.n_values = tuple(int(n) for n in self.n_values)

    def to_json(self) -> dict:
        out = asdict(self)
        out["n_values"] = list(self.n_values)
        return out

    @classmethod
    def from_json(cls, obj) -> "InstanceSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ArgumentError(f"unknown instance-spec fields: {sorted(extra)}")
        if "seed" not in obj:
            raise ArgumentError("instance spec needs a seed")
        return cls(**obj)


# --------------------------------------------------------------------------
# instance generation


def _pick_count(rng, lo, hi, given):
    return int(given) if given is not None else int(rng.integers(lo, hi + 1))


def random_instance(spec: InstanceSpec) -> tuple[np.ndarray, FreeSet]:
    """Seeded ``(rho, F)``.  Polytope targets get random mixed generators plus
    ``I/d``; C-flexible targets get random mixed A-side generators plus
    ``I/d_A``; divergence targets get rank-deficient pure generators."""
    rng = np.random.default_rng(spec.seed)
    if spec.free_set is not None:
        f = freeset_from_json(spec.free_set)
    elif spec.target in ("thm1", "cor1"):
        d = spec.dim_a
        k = _pick_count(rng, 2, 5, spec.generators)
        gens = [la.random_density(d, rng) for _ in range(k - 1)]
        f = PolytopeFreeSet(tuple(gens + [np.eye(d, dtype=complex) / d]))
    elif spec.target in ("thm2", "appc"):
        da, dc = spec.dim_a, spec.dim_c
        k = _pick_count(rng, 2, 3, spec.generators)
        gens = [la.random_density(da, rng) for _ in range(k - 1)]
        f = CFlexibleFreeSet(da, dc, tuple(gens + [np.eye(da, dtype=complex) / da]))
    else:
        d = spec.dim_a
        if d < 2:
            raise ArgumentError("divergence instances need dim_a >= 2")
        k = _pick_count(rng, 1, d - 1, spec.generators)
        if k >= d:
            raise ArgumentError("divergence instances need fewer pure generators than dim_a")
        f = PolytopeFreeSet(tuple(la.random_pure_state(d, rng) for _ in range(k)))

    d = f.dim
    if spec.state_kind == "explicit":
        rho = la.as_density(la.matrix_from_json(spec.state))
    elif spec.state_kind == "random-pure":
        rho = la.random_pure_state(d, rng)
    elif spec.state_kind == "random-mixed":
        rho = la.random_density(d, rng)
    else:
        if not isinstance(f, PolytopeFreeSet):
            raise ArgumentError("hull-mixture states need a polytope free set")
        w = rng.dirichlet(np.ones(len(f.generators)))
        rho = la.hermitian_part(sum(p * g for p, g in zip(w, f.generators)))
    if rho.shape[0] != d:
        raise ArgumentError(f"state dimension {rho.shape[0]} != free-set dimension {d}")
    return rho, f


# --------------------------------------------------------------------------
# ledgers


@dataclass
class LedgerLine:
    """``value (relation) bound`` with tolerance; ``margin >= -tol`` passes.

    ``relation`` is ``">="``, ``"<="`` or ``"=="`` (two-sided, margin is
    ``-|value - bound|``).
    """

    name: str
    value: float
    relation: str
    bound: float
    tol: float

    @property
    def margin(self) -> float:
        if self.relation == ">=":
            return self.value - self.bound
        if self.relation == "<=":
            return self.bound - self.value
        return -abs(self.value - self.bound)

    @property
    def passed(self) -> bool:
        m = self.margin
        return bool(np.isfinite(m) and m >= -self.tol)

    def to_json(self) -> dict:
        return {"name": self.name, "value": _num(self.value), "relation": self.relation,
                "bound": _num(self.bound), "tol": self.tol, "margin": _num(self.margin),
                "passed": self.passed}

    def pretty(self) -> str:
        mark = "ok " if self.passed else "FAIL"
        return (f"  [{mark}] {self.name}: {self.value:.10e} {self.relation} "
                f"{self.bound:.10e}  margin {self.margin:+.3e} (tol {self.tol:.0e})")


def _num(v):
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass
class InstanceResult:
    index: int
    seed: int
    target: str
    status: str
    classification: str | None = None
    lambda_star: float | None = None
    gap: float | None = None
    ratio: float | None = None
    ledger: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    error: str | None = None
    seconds: float = 0.0

    @property
    def worst_margin(self) -> float | None:
        return min((l.margin for l in self.ledger), default=None)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "target": self.target,
            "status": self.status,
            "classification": self.classification,
            "lambda_star": _num(self.lambda_star) if self.lambda_star is not None else None,
            "gap": self.gap,
            "ratio": _num(self.ratio) if self.ratio is not None else None,
            "worst_margin": self.worst_margin,
            "ledger": [l.to_json() for l in self.ledger],
            "data": self.data,
            "error": self.error,
        }


class _Ledger(list):
    def add(self, name, value, relation, bound, tol):
        self.append(LedgerLine(name, float(value), relation, float(bound), float(tol)))


# --------------------------------------------------------------------------
# pipelines


def _classify(rho, f, ledger, tol):
    """Run the robustness solve and check the finite/infinite split against support membership."""
    res = robustness(rho, f, tol)
    inside = in_S_T(rho, f)
    infinite = isinstance(res, InfiniteRobustness)
    ledger.add("classification_consistent", float(infinite != inside), "==", 1.0, 0.0)
    return res


def _duality_lines(cert, ledger):
    sr = cert.slack_report
    ledger.add("duality_gap", cert.gap, "<=", 1e-6, 0.0)
    ledger.add("cs_weights", abs(sr["cs_weights"]), "<=", 1e-6, 0.0)
    ledger.add("cs_operator", abs(sr["cs_operator"]), "<=", 1e-6, 0.0)
    ledger.add("primal_feasible", sr["primal_min_eig"], ">=", 0.0, 1e-9)
    ledger.add("dual_psd", sr["dual_min_eig"], ">=", 0.0, 1e-9)
    ledger.add("dual_overlap", sr["dual_max_overlap"], "<=", 1.0, 1e-9)


def _pipeline_thm1(spec, rho, f, out: InstanceResult, ledger: _Ledger):
    cert = _classify(rho, f, ledger, spec.tol)
    if isinstance(cert, InfiniteRobustness):
        out.classification = "infinite"
        out.lambda_star = math.inf
        raise ArgumentError("instance has infinite robustness; use the appd target")
    out.classification = "finite"
    out.lambda_star, out.gap = cert.lambda_star, cert.gap
    _duality_lines(cert, ledger)
    comp = cons.compile_thm1(rho, f, cert)
    num = optimal_success(rho, comp.game, spec.tol, method="sdp")
    den = sup_over_free(f, comp.game, spec.tol, method="sdp")
    ratio = num.value / den.value
    out.ratio = ratio
    target = 1.0 + cert.lambda_star
    ledger.add("ratio_equals_1_plus_R", ratio, "==", target, 1e-4 * target)
    ledger.add("ratio_vs_dual_objective", ratio, "==", 1.0 + cert.lower, 1e-4 * target)
    ledger.add("designed_ratio", comp.designed_value(rho) / den.value, ">=",
               la.inner(cert.dual_witness, rho), 1e-5)
    ledger.add("free_sup_equals_witness", den.value, "==", comp.witness_value, 1e-6)
    if any(la.max_abs(g - np.eye(f.dim) / f.dim) < 1e-12 for g in f.generators):
        ledger.add("flag_count_bound", comp.N, "<=", math.ceil(1 + f.dim), 0.0)
    if comp.N <= 16:
        cov = covariance_check(comp.game, comp.action)
        ledger.add("covariance_residual", cov.worst_residual, "<=", 0.0, 1e-9)
    out.data.update(N=comp.N, witness_value=comp.witness_value, numerator=num.value,
                    denominator=den.value, numerator_gap=num.gap)
    return cert, comp


def _random_game(rng, d, n) -> ChannelEnsemble:
    maps = []
    for _ in range(n):
        k = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(2)]
        s = sum(a.conj().T @ a for a in k)
        w = la.psd_inv_sqrt(s)
        maps.append(ch.from_kraus([a @ w for a in k], d, d))
    p = rng.dirichlet(np.ones(n))
    return ChannelEnsemble(p, maps)


def _pipeline_cor1(spec, rho, f, out, ledger):
    rng = np.random.default_rng([spec.seed, 1])
    cert = _classify(rho, f, ledger, spec.tol)
    if isinstance(cert, InfiniteRobustness):
        out.classification = "infinite"
        raise ArgumentError("instance has infinite robustness; use the appd target")
    out.classification = "finite"
    out.lambda_star, out.gap = cert.lambda_star, cert.gap
    _duality_lines(cert, ledger)
    in_list = any(la.max_abs(rho - g) <= 1e-12 for g in f.generators)
    out.data["rho_in_generator_list"] = in_list
    games = []
    if cert.lambda_star > 1e-7:
        comp = cons.compile_thm1(rho, f, cert)
        games.append(comp.game)
    games += [_random_game(rng, f.dim, int(rng.integers(2, 4))) for _ in range(spec.games)]
    worst = 0.0
    for k, game in enumerate(games):
        num = optimal_success(rho, game, spec.tol).value
        den = sup_over_free(f, game, spec.tol)
        ratio = num / den.value
        ledger.add(f"game{k}_ratio_le_1_plus_R", ratio, "<=", 1 + cert.lambda_star, 1e-5)
        # the hull adds nothing: random mixtures never beat the best generator
        mix = rng.dirichlet(np.ones(len(f.generators)))
        omega = la.hermitian_part(sum(p * g for p, g in zip(mix, f.generators)))
        ledger.add(f"game{k}_hull_mixture", optimal_success(omega, game, spec.tol).value,
                   "<=", den.value, 1e-7)
        worst = max(worst, ratio)
    if cert.lambda_star <= 1e-7 and not in_list:
        ledger.add("bound_resource_max_ratio", worst, "<=", 1.0, 1e-5)
        out.classification = "bound_resource"
    out.ratio = worst


def _pipeline_thm2(spec, rho, f, out, ledger):
    cert = _classify(rho, f, ledger, spec.tol)
    if isinstance(cert, InfiniteRobustness):
        out.classification = "infinite"
        raise ArgumentError("instance has infinite robustness")
    out.classification = "finite"
    out.lambda_star, out.gap = cert.lambda_star, cert.gap
    _duality_lines(cert, ledger)
    comp = cons.compile_appc_subchannels(cert, f, spec.epsilon)
    cons.compile_appc_game(comp, validate=False)
    psi = comp.psi_value(rho)
    dc = comp.dim_c
    ledger.add("psi_value_equals_witness", dc * psi, "==", la.inner(comp.e, rho), 1e-9)
    bound = comp.denominator_bound
    ratio = psi / bound
    out.ratio = ratio
    ledger.add("certified_ratio", ratio, ">=", (1 + cert.lambda_star) / (1 + spec.epsilon), 1e-6)
    opt = cons.appc_optimal_success(rho, comp, spec.tol)
    ledger.add("ancilla_value_le_bound", opt.value, "<=", (1 + cert.lambda_star) * bound, 1e-6)
    ledger.add("ancilla_value_ge_psi", opt.upper, ">=", psi, 1e-7)

    def evaluate(state):
        r = cons.appc_optimal_success(state, comp, spec.tol)
        return r.value, r

    lower, _ = seesaw(f, comp.game, evaluate, restarts=2, seed=spec.seed, max_iter=10,
                      effective=lambda r: r.effective_operator())
    ledger.add("free_seesaw_le_bound", lower, "<=", bound, 1e-6)
    # post-processing the ancilla never helps
    rng = np.random.default_rng([spec.seed, 2])
    chan = _random_game(rng, dc, 1).channel(0)
    moved = ch.apply(ch.tensor(ch.identity_map(comp.dim_a), chan), rho)
    ledger.add("ancilla_channel_monotone", cons.appc_optimal_success(moved, comp, spec.tol).value,
               "<=", opt.upper, 1e-7)
    out.data.update(N=comp.N, epsilon=spec.epsilon, epsilon_prime=comp.epsilon_prime,
                    c_scale=comp.c_scale, witness_value=comp.witness_value,
                    psi_value=psi, denominator_bound=bound, ancilla_value=opt.value,
                    free_seesaw=lower)


def _random_povm(rng, d, k) -> ch.Measurement:
    raw = []
    for _ in range(k):
        g = rng.normal(size=(d, 2)) + 1j * rng.normal(size=(d, 2))
        raw.append(g @ g.conj().T)
    w = la.psd_inv_sqrt(sum(raw))
    return ch.Measurement(tuple(la.hermitian_part(w @ r @ w) for r in raw))


def _pipeline_appc(spec, rho, f, out, ledger):
    rng = np.random.default_rng([spec.seed, 3])
    cert = _classify(rho, f, ledger, spec.tol)
    if isinstance(cert, InfiniteRobustness):
        out.classification = "infinite"
        raise ArgumentError("instance has infinite robustness")
    out.classification = "finite"
    out.lambda_star, out.gap = cert.lambda_star, cert.gap
    comp = cons.compile_appc_subchannels(cert, f, spec.epsilon)
    cons.compile_appc_game(comp)
    da, dc, n = comp.dim_a, comp.dim_c, comp.N
    sub = comp.subchannels
    trc_e = la.ptrace_last(comp.e, da, dc)
    worst_tr = worst_sum = worst_phi = 0.0
    for _ in range(10):
        s = la.random_ginibre_density(da, rng)
        worst_tr = max(worst_tr, abs(np.trace(ch.apply(sub[0], s)).real - la.inner(s, trc_e)))
        worst_sum = max(worst_sum, abs(sum(np.trace(ch.apply(m, s)).real for m in sub.maps)
                                       - 1.0))
        r = la.random_ginibre_density(da * dc, rng)
        lhs = cons.phi_overlap(ch.apply_with_ancilla(sub[0], r, dc), dc)
        worst_phi = max(worst_phi, abs(lhs - comp.c_scale * la.inner(cert.dual_witness, r)))
    ledger.add("first_subchannel_trace", worst_tr, "<=", 0.0, 1e-10)
    ledger.add("subchannels_trace_preserving", worst_sum, "<=", 0.0, 1e-10)
    ledger.add("phi_transfer_identity", worst_phi, "<=", 0.0, 1e-9)

    game = comp.game
    min_choi = min(la.min_eigenvalue(game.channel(k).choi) for k in range(len(game)))
    ledger.add("channels_cp", min_choi, ">=", 0.0, 1e-9)
    tp = max(game.channel(k).report["tp_residual"] for k in range(len(game)))
    ledger.add("channels_tp", tp, "<=", 0.0, 1e-9)
    cov = covariance_check(game, comp.action, pairwise=len(game) <= 48)
    ledger.add("covariance_residual", cov.worst_residual, "<=", 0.0, 1e-9)
    psi = comp.psi_measurement()
    ledger.add("psi_completeness", la.max_abs(sum(psi.effects) - np.eye(psi.dim)), "<=", 0.0,
               1e-10)
    gam = cons.extract_gamma(psi, n, dc)
    dev = max(ch.choi_distance(gam[0], ch.identity_map(dc)),
              max((la.max_abs(g.choi) for g in gam.maps[1:]), default=0.0))
    ledger.add("psi_gamma_is_identity", dev, "<=", 0.0, 1e-10)
    lhs = cons.phi_overlap(ch.apply_with_ancilla(sub[0], rho, dc), dc)
    ledger.add("psi_value_identity", dc * comp.psi_value(rho), "==", lhs, 1e-9)

    worst_pair = 0.0
    for _ in range(spec.samples):
        r = la.random_ginibre_density(da * dc, rng)
        raw = _random_povm(rng, game.effect_dim, len(game))
        raw = ch.Measurement(raw.effects, game.labels)
        sym = symmetrize_measurement(cons.dephase(raw, n), comp.action)
        gammas = cons.extract_gamma(sym, n, dc, check=False)
        from .games import success_probability

        rhs = dc * success_probability(r, sym, game)
        worst_pair = max(worst_pair, abs(cons.gamma_pairing(sub, gammas, r, dc) - rhs))
    ledger.add("gamma_pairing_identity", worst_pair, "<=", 0.0, 1e-8)
    out.data.update(N=n, group_order=len(game), samples=spec.samples)


def _pipeline_appd(spec, rho, f, out, ledger):
    res = _classify(rho, f, ledger, spec.tol)
    if not isinstance(res, InfiniteRobustness):
        out.classification = "finite"
        out.lambda_star = res.lambda_star
        raise ArgumentError("instance has finite robustness; use the thm1 target")
    out.classification = "infinite"
    out.lambda_star = math.inf
    ledger.add("leak_positive", res.overlap, ">=", 0.0, 0.0)
    prev = None
    ratios = {}
    for n in sorted(spec.n_values):
        g = cons.compile_divergence(rho, f, n, spec.tol)
        ledger.add(f"N{n}_ratio_growth", g.achieved_ratio, ">=", (n - 1) * g.leak, 1e-6)
        if prev is not None and n == 2 * prev[0]:
            ledger.add(f"N{n}_doubling", g.achieved_ratio, ">=", 2 * prev[1], 1e-6)
        prev = (n, g.achieved_ratio)
        ratios[str(n)] = g.achieved_ratio
    out.ratio = prev[1] if prev else None
    out.data.update(leak=res.overlap, ratios=ratios)


_PIPELINES = {
    "thm1": _pipeline_thm1,
    "cor1": _pipeline_cor1,
    "thm2": _pipeline_thm2,
    "appc": _pipeline_appc,
    "appd": _pipeline_appd,
}


def run_instance(spec: InstanceSpec, index: int = 0) -> InstanceResult:
    out = InstanceResult(index, spec.seed, spec.target, "error")
    ledger = _Ledger()
    t0 = time.perf_counter()
    try:
        rho, f = random_instance(spec)
        _PIPELINES[spec.target](spec, rho, f, out, ledger)
        out.status = "pass" if all(l.passed for l in ledger) else "fail"
    except ConstructionError:
        log.error("construction bug at seed %s", spec.seed)
        raise
    except (QRGError, ValueError) as exc:
        out.error = f"{type(exc).__name__}: {exc}"
        out.status = "error"
    out.ledger = list(ledger)
    out.seconds = time.perf_counter() - t0
    return out


def _run_indexed(args):
    return run_instance(*args)


# --------------------------------------------------------------------------
# campaigns


@dataclass
class CampaignReport:
    specs: list
    results: list

    @property
    def passed(self) -> int:
        return sum(r.status == "pass" for r in self.results)

    @property
    def failed(self) -> int:
        return len(self.results) - self.passed

    @property
    def all_passed(self) -> bool:
        return self.failed == 0

    @property
    def worst_margin(self) -> float | None:
        ms = [r.worst_margin for r in self.results if r.worst_margin is not None]
        return min(ms) if ms else None

    def timing(self) -> dict:
        secs = [r.seconds for r in self.results]
        if not secs:
            return {"total": 0.0, "mean": 0.0, "max": 0.0}
        return {"total": sum(secs), "mean": sum(secs) / len(secs), "max": max(secs)}

    def to_json(self, include_timing: bool = False) -> dict:
        out = {
            "schema_version": REPORT_SCHEMA,
            "kind": "campaign_report",
            "count": len(self.results),
            "passed": self.passed,
            "failed": self.failed,
            "worst_margin": self.worst_margin,
            "specs": [s.to_json() for s in self.specs],
            "results": [r.to_json() for r in self.results],
        }
        if include_timing:
            out["timing"] = self.timing()
        return out

    def dumps(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_json(include_timing), indent=2, sort_keys=True,
                          allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seed", "target", "status", "lambda_star", "gap", "ratio", "margin"])
        for r in self.results:
            w.writerow([r.seed, r.target, r.status,
                        "" if r.lambda_star is None else repr(float(r.lambda_star)),
                        "" if r.gap is None else repr(float(r.gap)),
                        "" if r.ratio is None else repr(float(r.ratio)),
                        "" if r.worst_margin is None else repr(float(r.worst_margin))])
        return buf.getvalue()

    def pretty(self) -> str:
        lines = [f"campaign: {self.passed}/{len(self.results)} passed"]
        for r in self.results:
            head = f"seed {r.seed} [{r.target}] {r.status}"
            if r.lambda_star is not None:
                head += f"  lambda*={r.lambda_star:.10g}"
            if r.ratio is not None:
                head += f"  ratio={r.ratio:.10g}"
            lines.append(head)
            if r.error:
                lines.append(f"  error: {r.error}")
            lines.extend(l.pretty() for l in r.ledger)
        return "\n".join(lines) + "\n"


def run_campaign(specs, workers: int = 1) -> CampaignReport:
    """Run every spec; results come back sorted by seed, then target, then
    the canonical spec JSON, so neither input order nor worker count
    changes the report."""
    specs = [s if isinstance(s, InstanceSpec) else InstanceSpec.from_json(s) for s in specs]
    jobs = [(s, i) for i, s in enumerate(specs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [run_instance(s, i) for s, i in jobs]
    order = sorted(range(len(specs)), key=lambda i: (
        specs[i].seed, specs[i].target, json.dumps(specs[i].to_json(), sort_keys=True), i))
    return CampaignReport([specs[i] for i in order], [results[i] for i in order])


def specs_from_flags(target: str, seed: int = 0, count: int = 1, **kw) -> list[InstanceSpec]:
    """Consecutive seeds ``seed .. seed+count-1`` sharing the other settings."""
    if count < 0:
        raise ArgumentError("count must be non-negative")
    kw = {k: v for k, v in kw.items() if v is not None}
    return [InstanceSpec(seed=seed + i, target=target, **kw) for i in range(count)]


def load_campaign(obj) -> list[InstanceSpec]:
    """Campaign JSON: ``{"instances": [...], "defaults": {...}}`` or a bare list."""
    if isinstance(obj, list):
        items, defaults = obj, {}
    else:
        try:
            items = obj["instances"]
        except (KeyError, TypeError) as exc:
            raise ArgumentError("campaign JSON needs an 'instances' list") from exc
        defaults = obj.get("defaults", {})
    return [InstanceSpec.from_json({**defaults, **item}) for item in items]
