"""Certified conic solvers.

Everything here reduces to one canonical primal/dual pair of linear matrix
inequalities (see :class:`LMIProblem`).  Two interior-point backends are
available: CVXOPT's dense primal-dual SDP solver (default; one solve yields
both points) and Clarabel through cvxpy (primal and dual solved as two
separate programs).  The raw points are then repaired to exact feasibility
by problem-specific maps, and the reported gap is recomputed from the
repaired points.  Solver-reported objectives are never trusted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import os

import cvxopt
import cvxpy as cp
import numpy as np

from . import linalg as la
from .channels import Measurement
from .errors import ArgumentError, NumericalError
from .freesets import (
    CFlexibleFreeSet,
    FreeSet,
    PolytopeFreeSet,
    in_S_T,
    support_space,
)

DEFAULT_TOL = 1e-7
MAX_PSD_DIM = 256

_CLARABEL_OPTS = dict(
    tol_gap_abs=1e-11,
    tol_gap_rel=1e-11,
    tol_feas=1e-11,
    tol_ktratio=1e-9,
    max_iter=400,
)
_CVXOPT_OPTS = dict(abstol=1e-10, reltol=1e-10, feastol=1e-9, maxiters=50,
                    show_progress=False)
# looser settings tried before handing over to Clarabel
_CVXOPT_RETRY = dict(abstol=1e-8, reltol=1e-8, feastol=1e-8)
BACKENDS = ("cvxopt", "clarabel")


def default_backend() -> str:
    name = os.environ.get("QRG_BACKEND", "cvxopt").lower()
    if name not in BACKENDS:
        raise ArgumentError(f"QRG_BACKEND must be one of {BACKENDS}, got {name!r}")
    return name


# --------------------------------------------------------------------------
# canonical LMI pair


@dataclass(frozen=True, eq=False)
class LMIBlock:
    """One block ``F0 + sum_i y_i F_i >= 0``.

    ``fmat`` has shape ``(n*n, m)``; column ``i`` is ``F_i`` flattened in row
    major order.  Blocks may share the same ``fmat`` object.
    """

    f0: np.ndarray
    fmat: np.ndarray

    @property
    def size(self) -> int:
        return self.f0.shape[0]


@dataclass(frozen=True, eq=False)
class LMIProblem:
    """Primal: minimise ``c.y + offset`` s.t. every block is PSD.

    Dual: maximise ``offset - sum_b Tr(F0_b Z_b)`` s.t.
    ``sum_b Tr(F_{b,i} Z_b) = c_i`` and ``Z_b >= 0``.
    """

    c: np.ndarray
    blocks: tuple
    offset: float = 0.0

    @property
    def m(self) -> int:
        return len(self.c)


@dataclass(eq=False)
class LMIResult:
    status: str
    y: np.ndarray | None
    Z: list | None
    primal_value: float
    dual_value: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: dict = field(default_factory=dict)
    ray: object = None


def _block_expr(block: LMIBlock, y, cache: dict):
    key = id(block.fmat)
    if key not in cache:
        cache[key] = block.fmat @ y
    n = block.size
    return block.f0 + cp.reshape(cache[key], (n, n), order="C")


def _solve(problem: cp.Problem):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            problem.solve(solver="CLARABEL", **_CLARABEL_OPTS)
        except cp.error.SolverError as exc:
            raise NumericalError(f"conic solver failed: {exc}") from exc
    stats = problem.solver_stats
    return problem.status, (stats.num_iters if stats is not None else None)


def primal_residual(problem: LMIProblem, y) -> float:
    """Most negative eigenvalue over all blocks at ``y`` (0 if feasible)."""
    worst = 0.0
    for b in problem.blocks:
        n = b.size
        s = b.f0 + (b.fmat @ y).reshape(n, n)
        worst = min(worst, la.min_eigenvalue(s))
    return -worst


def dual_residual(problem: LMIProblem, Z) -> float:
    eq = np.zeros(problem.m)
    neg = 0.0
    for b, z in zip(problem.blocks, Z):
        eq = eq + np.real(b.fmat.conj().T @ z.reshape(-1))
        neg = min(neg, la.min_eigenvalue(z))
    return max(float(np.max(np.abs(eq - problem.c))) if problem.m else 0.0, -neg)


def lmi_solve(problem: LMIProblem, backend: str | None = None) -> LMIResult:
    """Solve the canonical pair with the chosen backend (env ``QRG_BACKEND``)."""
    backend = default_backend() if backend is None else backend
    if backend not in BACKENDS:
        raise ArgumentError(f"unknown backend {backend!r}")
    if any(b.size > MAX_PSD_DIM for b in problem.blocks):
        raise ArgumentError(f"PSD block larger than {MAX_PSD_DIM}")
    m = problem.m
    if not problem.blocks:
        if np.any(np.asarray(problem.c) != 0):
            return LMIResult("unbounded", None, None, -np.inf, -np.inf, np.nan,
                             0.0, 0.0)
        return LMIResult("optimal", np.zeros(m), [], problem.offset, problem.offset,
                         0.0, 0.0, 0.0)
    if backend == "cvxopt" and m > 0:
        return _solve_cvxopt(problem)
    return _solve_clarabel(problem)


def _finish(problem: LMIProblem, yv, Zv, status: str, iters: dict) -> LMIResult:
    pval = float(problem.c @ yv + problem.offset)
    dval = float(problem.offset - sum(la.inner(b.f0, z) for b, z in zip(problem.blocks, Zv)))
    return LMIResult(status, yv, Zv, pval, dval, pval - dval,
                     primal_residual(problem, yv), dual_residual(problem, Zv), iters)


def _embed_columns(block: LMIBlock, real: bool) -> tuple[np.ndarray, np.ndarray]:
    """Column-major vecs of the (real-embedded) block matrices for CVXOPT."""
    n = block.size
    f0 = np.asarray(block.f0, dtype=complex)
    fm = block.fmat.toarray() if hasattr(block.fmat, "toarray") else np.asarray(block.fmat)
    mats = fm.T.reshape(-1, n, n)
    if real:
        h = f0.real.reshape(-1, order="F")
        g = -mats.real.transpose(0, 2, 1).reshape(len(mats), -1)
        return h, g.T
    def emb(a):
        re, im = a.real, a.imag
        return np.block([[re, -im], [im, re]])
    h = emb(f0).reshape(-1, order="F")
    top = np.concatenate([mats.real, -mats.imag], axis=2)
    bot = np.concatenate([mats.imag, mats.real], axis=2)
    big = np.concatenate([top, bot], axis=1)
    g = -big.transpose(0, 2, 1).reshape(len(mats), -1)
    return h, g.T


def _solve_cvxopt(problem: LMIProblem) -> LMIResult:
    Gs, hs, real_flags = [], [], []
    for b in problem.blocks:
        fm = b.fmat.toarray() if hasattr(b.fmat, "toarray") else np.asarray(b.fmat)
        real = not (np.any(np.imag(b.f0)) or np.any(np.imag(fm)))
        h, g = _embed_columns(b, real)
        n = b.size if real else 2 * b.size
        Gs.append(cvxopt.matrix(np.ascontiguousarray(g, dtype=float)))
        hs.append(cvxopt.matrix(h.reshape(n, n, order="F").astype(float)))
        real_flags.append(real)
    c = cvxopt.matrix(np.asarray(problem.c, dtype=float))
    # near-degenerate programs can stall or hit a zero pivot; Clarabel is
    # slower on large blocks but steadier, so it serves as the last resort
    sol = None
    for extra in ({}, _CVXOPT_RETRY):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                sol = cvxopt.solvers.sdp(c, Gs=Gs, hs=hs, options=dict(_CVXOPT_OPTS, **extra))
            except (ArithmeticError, ValueError):
                sol = None
        if sol is not None and sol["status"] != "unknown":
            break
    if sol is None or sol["status"] == "unknown":
        return _solve_clarabel(problem)
    status = sol["status"]
    iters = {"primal": sol.get("iterations"), "dual": sol.get("iterations"),
             "backend": "cvxopt"}
    if status == "primal infeasible":
        return LMIResult("infeasible", None, None, np.inf, np.inf, np.nan, np.inf,
                         np.inf, iters)
    if status == "dual infeasible":
        return LMIResult("unbounded", None, None, -np.inf, -np.inf, np.nan, np.inf,
                         np.inf, iters)
    if sol["x"] is None or sol["zs"] is None:
        raise NumericalError(f"conic solver returned no point ({status})", iterations=iters)
    yv = np.array(sol["x"], dtype=float).reshape(-1)
    Zv = []
    for b, z, real in zip(problem.blocks, sol["zs"], real_flags):
        w = np.array(z, dtype=float)
        if real:
            Zv.append(la.hermitian_part(w.astype(complex)))
            continue
        n = b.size
        a, bb, cc, d = w[:n, :n], w[:n, n:], w[n:, :n], w[n:, n:]
        # Re Tr(H Z) = Tr(emb(H) W) for Z = (A + D) + i (C - B)
        Zv.append(la.hermitian_part((a + d) + 1j * (cc - bb)))
    return _finish(problem, yv, Zv, "optimal" if status == "optimal" else "inaccurate", iters)


def _solve_clarabel(problem: LMIProblem) -> LMIResult:
    m = problem.m
    y = cp.Variable(m)
    cache: dict = {}
    cons = [_block_expr(b, y, cache) >> 0 for b in problem.blocks]
    prim = cp.Problem(cp.Minimize(problem.c @ y + problem.offset), cons)
    pstatus, pit = _solve(prim)

    zs = [cp.Variable((b.size, b.size), hermitian=True) for b in problem.blocks]
    lhs = 0
    obj = problem.offset
    for b, z in zip(problem.blocks, zs):
        lhs = lhs + cp.real(b.fmat.conj().T @ cp.vec(z, order="C"))
        obj = obj - cp.real(cp.trace(b.f0 @ z))
    dual = cp.Problem(cp.Maximize(obj), [lhs == problem.c] + [z >> 0 for z in zs])
    dstatus, dit = _solve(dual)

    iters = {"primal": pit, "dual": dit, "backend": "clarabel"}
    if pstatus in ("infeasible", "infeasible_inaccurate") or dstatus in (
        "unbounded", "unbounded_inaccurate"):
        return LMIResult("infeasible", None, None, np.inf, np.inf, np.nan, np.inf,
                         np.inf, iters)
    if pstatus in ("unbounded", "unbounded_inaccurate") or dstatus in (
        "infeasible", "infeasible_inaccurate"):
        return LMIResult("unbounded", None, None, -np.inf, -np.inf, np.nan, np.inf,
                         np.inf, iters)
    if y.value is None or any(z.value is None for z in zs):
        raise NumericalError(f"conic solver returned no point ({pstatus}/{dstatus})",
                             iterations=iters)

    yv = np.asarray(y.value, dtype=float)
    Zv = [la.hermitian_part(np.asarray(z.value, dtype=complex)) for z in zs]
    status = "optimal" if pstatus == "optimal" and dstatus == "optimal" else "inaccurate"
    return _finish(problem, yv, Zv, status, iters)


def _basis_fmat(basis: np.ndarray) -> np.ndarray:
    k, n, _ = basis.shape
    return basis.reshape(k, n * n).T.copy()


# --------------------------------------------------------------------------
# robustness


@dataclass(eq=False)
class RobustnessCertificate:
    """Certified value of the generalised robustness.

    ``lambda_star`` is the objective at a feasible primal point (an upper
    bound), ``lower`` the objective at a feasible dual point; ``gap`` is
    their difference.
    """

    lambda_star: float
    lower: float
    gap: float
    primal_weights: list
    dual_witness: np.ndarray
    slack_report: dict
    free_set_type: str
    tol: float
    iterations: dict = field(default_factory=dict)

    @property
    def upper(self) -> float:
        return self.lambda_star

    def mixture(self, f: FreeSet) -> np.ndarray:
        """``sum_i t_i omega_i`` (polytope) or ``sum_i alpha_i (x) X_i``."""
        return _primal_mixture(f, self.primal_weights)

    def free_state(self, f: FreeSet) -> np.ndarray:
        """The free state ``(rho + lambda tau)/(1 + lambda)`` of the primal point."""
        m = self.mixture(f)
        return m / np.trace(m).real

    def noise_state(self, rho, f: FreeSet) -> np.ndarray | None:
        if self.lambda_star <= 0:
            return None
        tau = self.mixture(f) - np.asarray(rho, dtype=complex)
        return la.hermitian_part(tau / np.trace(tau).real)

    def to_json(self) -> dict:
        if self.free_set_type == "polytope":
            weights = [float(t) for t in self.primal_weights]
        else:
            weights = [la.matrix_to_json(x) for x in self.primal_weights]
        return {
            "kind": "robustness_certificate",
            "lambda_star": self.lambda_star,
            "lower": self.lower,
            "gap": self.gap,
            "primal_weights": weights,
            "dual_witness": la.matrix_to_json(self.dual_witness),
            "slack_report": dict(self.slack_report),
            "free_set_type": self.free_set_type,
            "tol": self.tol,
            "iterations": dict(self.iterations),
        }

    @classmethod
    def from_json(cls, obj) -> "RobustnessCertificate":
        if obj["free_set_type"] == "polytope":
            weights = [float(t) for t in obj["primal_weights"]]
        else:
            weights = [la.matrix_from_json(x) for x in obj["primal_weights"]]
        return cls(
            float(obj["lambda_star"]), float(obj["lower"]), float(obj["gap"]), weights,
            la.matrix_from_json(obj["dual_witness"]), dict(obj["slack_report"]),
            obj["free_set_type"], float(obj["tol"]), dict(obj.get("iterations", {})),
        )


@dataclass(eq=False)
class InfiniteRobustness:
    """Returned when ``supp rho`` leaves the support space of the free set.

    ``projector`` annihilates every free state while ``overlap = Tr(P rho)``
    is positive, so ``x = s P`` is a dual-feasible ray with objective
    ``s * overlap - 1`` growing without bound.
    """

    projector: np.ndarray
    overlap: float

    @property
    def divergence_witness(self) -> np.ndarray:
        return self.projector

    def to_json(self) -> dict:
        return {
            "kind": "infinite_robustness",
            "lambda_star": "inf",
            "overlap": self.overlap,
            "projector": la.matrix_to_json(self.projector),
        }

    @classmethod
    def from_json(cls, obj) -> "InfiniteRobustness":
        return cls(la.matrix_from_json(obj["projector"]), float(obj["overlap"]))


def _primal_mixture(f: FreeSet, weights) -> np.ndarray:
    if isinstance(f, PolytopeFreeSet):
        return la.hermitian_part(sum(t * g for t, g in zip(weights, f.generators)))
    return la.hermitian_part(sum(np.kron(a, x) for a, x in zip(f.a_generators, weights)))


def _check_tol(tol: float):
    if not 1e-10 <= tol <= 1e-4:
        raise ArgumentError(f"tol must lie in [1e-10, 1e-4], got {tol}")


def robustness(rho, f: FreeSet, tol: float = DEFAULT_TOL):
    """Generalised robustness of ``rho`` with respect to the free set ``f``.

    Returns a :class:`RobustnessCertificate`, or :class:`InfiniteRobustness`
    when the support condition fails.  Raises :class:`NumericalError` if the
    certified gap exceeds ``tol``.
    """
    _check_tol(tol)
    rho = la.as_density(rho)
    if rho.shape[0] != f.dim:
        raise ArgumentError(f"state dimension {rho.shape[0]} != free-set dimension {f.dim}")
    supp = support_space(f)
    if not in_S_T(rho, f):
        return InfiniteRobustness(supp.projector, la.inner(supp.projector, rho))
    if isinstance(f, PolytopeFreeSet):
        cert = _robustness_polytope(rho, f, supp)
    else:
        cert = _robustness_cflex(rho, f)
    cert.tol = tol
    if cert.gap > tol:
        raise NumericalError(
            f"robustness gap {cert.gap:.3e} exceeds tol {tol:.1e}",
            lower=cert.lower, upper=cert.lambda_star, iterations=cert.iterations,
        )
    return cert


def _best_direction(gens):
    """Convex weights ``w`` maximising ``lambda_min(sum_i w_i g_i)`` among the
    vertices and the barycentre; returns ``(w, lambda_min)``."""
    k = len(gens)
    candidates = [np.eye(k)[i] for i in range(k)] + [np.full(k, 1.0 / k)]
    scored = [(la.min_eigenvalue(sum(w * g for w, g in zip(c, gens))), i)
              for i, c in enumerate(candidates)]
    mu, i = max(scored)
    return candidates[i], mu


def _robustness_polytope(rho, f: PolytopeFreeSet, supp) -> RobustnessCertificate:
    q = supp.basis
    gens = [la.hermitian_part(q.conj().T @ g @ q) for g in f.generators]
    r = la.hermitian_part(q.conj().T @ rho @ q)
    n, k = r.shape[0], len(gens)

    fmat_main = np.stack([g.reshape(-1) for g in gens], axis=1)
    fmat_nonneg = np.zeros((k * k, k), dtype=complex)
    for i in range(k):
        fmat_nonneg[i * k + i, i] = 1.0
    prob = LMIProblem(
        np.ones(k),
        (LMIBlock(-r, fmat_main), LMIBlock(np.zeros((k, k), dtype=complex), fmat_nonneg)),
        offset=-1.0,
    )
    res = lmi_solve(prob)
    if res.status not in ("optimal", "inaccurate"):
        raise NumericalError(f"robustness program reported {res.status}")

    # primal repair: push sum t_i w_i - rho back into the PSD cone along the
    # uniform mixture, which is positive definite on the support space
    t = np.clip(res.y, 0.0, None)
    direction, mu = _best_direction(gens)
    for _ in range(3):
        delta = -la.min_eigenvalue(sum(ti * g for ti, g in zip(t, gens)) - r)
        if delta <= 0:
            break
        t = t + direction * (delta * (1 + 1e-9) + 1e-15) / mu
    upper = float(np.sum(t) - 1.0)

    # dual repair: project onto PSD and rescale so max_i Tr(x w_i) = 1
    x = la.psd_projection(res.Z[0])
    s = max(la.inner(x, g) for g in gens)
    if s > 0:
        x = x / s
    lower = la.inner(x, r) - 1.0
    if lower < 0.0:
        x = np.eye(n, dtype=complex)
        lower = la.inner(x, r) - 1.0

    x_full = la.hermitian_part(q @ x @ q.conj().T)
    overlaps = np.array([la.inner(x_full, g) for g in f.generators])
    resid_op = sum(ti * g for ti, g in zip(t, f.generators)) - rho
    slack = {
        "primal_min_eig": la.min_eigenvalue(sum(ti * g for ti, g in zip(t, gens)) - r),
        "dual_min_eig": la.min_eigenvalue(x),
        "dual_max_overlap": float(overlaps.max()),
        "cs_weights": float(np.max(t * (1.0 - overlaps))),
        "cs_operator": la.inner(x_full, resid_op),
        "support_rank": int(n),
        "raw_primal_residual": res.primal_residual,
        "raw_dual_residual": res.dual_residual,
    }
    return RobustnessCertificate(
        upper, lower, upper - lower, [float(v) for v in t], x_full, slack,
        "polytope", DEFAULT_TOL, res.iterations,
    )


def _robustness_cflex(rho, f: CFlexibleFreeSet) -> RobustnessCertificate:
    da, dc = f.dim_a, f.dim_c
    mix_a = sum(f.a_generators) / len(f.a_generators)
    w, v = np.linalg.eigh(mix_a)
    qa = v[:, w > 1e-9 * w[-1]]
    ra = qa.shape[1]
    alphas = [la.hermitian_part(qa.conj().T @ a @ qa) for a in f.a_generators]
    qfull = np.kron(qa, np.eye(dc))
    r = la.hermitian_part(qfull.conj().T @ rho @ qfull)
    k = len(alphas)
    basis = la.hermitian_basis(dc)
    nb = len(basis)
    m = k * nb

    fmat_main = np.zeros((ra * dc * ra * dc, m), dtype=complex)
    c = np.zeros(m)
    blocks = []
    for i, a in enumerate(alphas):
        fx = np.zeros((dc * dc, m), dtype=complex)
        for j, e in enumerate(basis):
            col = i * nb + j
            fmat_main[:, col] = np.kron(a, e).reshape(-1)
            fx[:, col] = e.reshape(-1)
            c[col] = np.trace(e).real
        blocks.append(LMIBlock(np.zeros((dc, dc), dtype=complex), fx))
    prob = LMIProblem(c, (LMIBlock(-r, fmat_main),) + tuple(blocks), offset=-1.0)
    res = lmi_solve(prob)
    if res.status not in ("optimal", "inaccurate"):
        raise NumericalError(f"robustness program reported {res.status}")

    xs = [la.psd_projection(np.einsum("k,kij->ij", res.y[i * nb:(i + 1) * nb], basis))
          for i in range(k)]
    mu = la.min_eigenvalue(sum(alphas) / k)
    for _ in range(3):
        delta = -la.min_eigenvalue(sum(np.kron(a, x) for a, x in zip(alphas, xs)) - r)
        if delta <= 0:
            break
        bump = (delta * (1 + 1e-9) + 1e-15) / (mu * k)
        xs = [x + bump * np.eye(dc) for x in xs]
    upper = float(sum(np.trace(x).real for x in xs) - 1.0)

    def c_side(x, a):
        return la.ptrace_first(np.kron(a, np.eye(dc)) @ x, a.shape[0], dc)

    x = la.psd_projection(res.Z[0])
    s = max(la.max_eigenvalue(c_side(x, a)) for a in alphas)
    if s > 0:
        x = x / s
    lower = la.inner(x, r) - 1.0
    if lower < 0.0:
        x = np.eye(ra * dc, dtype=complex)
        lower = la.inner(x, r) - 1.0

    x_full = la.hermitian_part(qfull @ x @ qfull.conj().T)
    resid_op = _primal_mixture(f, xs) - rho
    slack = {
        "primal_min_eig": la.min_eigenvalue(
            sum(np.kron(a, xx) for a, xx in zip(alphas, xs)) - r),
        "dual_min_eig": la.min_eigenvalue(x),
        "dual_max_overlap": max(la.max_eigenvalue(c_side(x_full, a)) for a in f.a_generators),
        "cs_weights": float(max(
            la.inner(xx, np.eye(dc) - c_side(x_full, a)) for a, xx in zip(f.a_generators, xs))),
        "cs_operator": la.inner(x_full, resid_op),
        "support_rank": int(ra * dc),
        "raw_primal_residual": res.primal_residual,
        "raw_dual_residual": res.dual_residual,
    }
    return RobustnessCertificate(
        upper, lower, upper - lower, xs, x_full, slack, "c_flexible", DEFAULT_TOL,
        res.iterations,
    )


# --------------------------------------------------------------------------
# minimum-error discrimination


@dataclass(eq=False)
class DiscriminationCertificate:
    povm: Measurement
    value: float
    upper: float
    dual_Y: np.ndarray
    gap: float
    optimality_residual: float
    iterations: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": "discrimination_certificate",
            "value": self.value,
            "upper": self.upper,
            "gap": self.gap,
            "optimality_residual": self.optimality_residual,
            "povm": self.povm.to_json(),
            "dual_Y": la.matrix_to_json(self.dual_Y),
            "iterations": dict(self.iterations),
        }

    @classmethod
    def from_json(cls, obj) -> "DiscriminationCertificate":
        return cls(
            Measurement.from_json(obj["povm"]), float(obj["value"]), float(obj["upper"]),
            la.matrix_from_json(obj["dual_Y"]), float(obj["gap"]),
            float(obj["optimality_residual"]), dict(obj.get("iterations", {})),
        )


def repair_povm(effects: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Map near-POVMs to exact POVMs: clip to PSD then whiten by the sum."""
    eff = [la.psd_projection(e) for e in effects]
    w = la.psd_inv_sqrt(sum(eff))
    return [la.hermitian_part(w @ e @ w) for e in eff]


def _diagonal_discrimination(weighted, labels) -> DiscriminationCertificate:
    # commuting diagonal states: guess the largest weighted diagonal entry
    diag = np.array([np.diag(w).real for w in weighted])
    best = np.argmax(diag, axis=0)
    d = diag.shape[1]
    effects = [np.diag((best == n).astype(float)).astype(complex) for n in range(len(weighted))]
    y = np.diag(diag.max(axis=0)).astype(complex)
    value = float(diag.max(axis=0).sum())
    return DiscriminationCertificate(
        Measurement(tuple(effects), tuple(labels) if labels is not None else ()),
        value, value, y, 0.0, 0.0, {"method": "diagonal"},
    )


def min_error_discrimination(weighted_states: Sequence, tol: float = DEFAULT_TOL,
                             labels: Sequence | None = None,
                             method: str = "auto") -> DiscriminationCertificate:
    """Optimal average success probability for ``[(p_n, rho_n), ...]``.

    ``method="auto"`` takes the exact classical shortcut when every state is
    diagonal; ``"sdp"`` always runs the semidefinite program.
    """
    if method not in ("auto", "sdp"):
        raise ArgumentError(f"unknown method {method!r}")
    _check_tol(tol)
    if not weighted_states:
        raise ArgumentError("need at least one weighted state")
    priors = np.array([float(p) for p, _ in weighted_states])
    states = [la.as_hermitian(s, rtol=1e-10) for _, s in weighted_states]
    d = states[0].shape[0]
    if any(s.shape != (d, d) for s in states):
        raise ArgumentError("all states must share a dimension")
    if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-10:
        raise ArgumentError("priors must be non-negative and sum to 1")
    weighted = [p * s for p, s in zip(priors, states)]

    if len(weighted) == 1:
        povm = Measurement((np.eye(d, dtype=complex),), labels or ())
        val = np.trace(weighted[0]).real
        return DiscriminationCertificate(povm, val, val, weighted[0].copy(), 0.0, 0.0)
    if method == "auto" and all(
        la.max_abs(w - np.diag(np.diag(w))) == 0.0 for w in weighted
    ):
        return _diagonal_discrimination(weighted, labels)

    basis = la.hermitian_basis(d)
    fmat = _basis_fmat(basis)
    c = np.array([np.trace(e).real for e in basis])
    prob = LMIProblem(c, tuple(LMIBlock(-w, fmat) for w in weighted))
    res = lmi_solve(prob)
    if res.status not in ("optimal", "inaccurate"):
        raise NumericalError(f"discrimination program reported {res.status}")

    y = la.hermitian_part(np.einsum("k,kij->ij", res.y, basis))
    shift = max(0.0, max(-la.min_eigenvalue(y - w) for w in weighted))
    y = y + shift * (1 + 1e-9) * np.eye(d)
    upper = float(np.trace(y).real)

    effects = repair_povm(res.Z)
    value = float(sum(la.inner(e, w) for e, w in zip(effects, weighted)))
    lag = sum(e @ w for e, w in zip(effects, weighted))
    cert = DiscriminationCertificate(
        Measurement(tuple(effects), tuple(labels) if labels is not None else ()),
        value, upper, y, upper - value, la.max_abs(lag - lag.conj().T), res.iterations,
    )
    if cert.gap > tol:
        raise NumericalError(
            f"discrimination gap {cert.gap:.3e} exceeds tol {tol:.1e}",
            lower=value, upper=upper, iterations=res.iterations,
        )
    return cert
