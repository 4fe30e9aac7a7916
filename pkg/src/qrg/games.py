"""Channel-discrimination games.

A game is a list of channels with prior probabilities.  With an ancilla of
dimension ``N_C`` the input lives on ``A (x) C`` and channel ``n`` acts as
``L_n (x) id_C``.

Group actions carry explicit multiplication tables so that label arithmetic
is exact; the unitaries only need to compose up to a global phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from . import channels as ch
from . import linalg as la
from .channels import CPMap, Measurement
from .errors import ArgumentError, CovarianceError
from .freesets import CFlexibleFreeSet, FreeSet, PolytopeFreeSet, max_witness_value
from .solvers import (
    DEFAULT_TOL,
    DiscriminationCertificate,
    LMIBlock,
    LMIProblem,
    lmi_solve,
    min_error_discrimination,
    repair_povm,
)

COVARIANCE_TOL = 1e-9


class ChannelEnsemble:
    """Priors and CPTP channels sharing input/output dimensions.

    Subclasses may generate channels lazily by overriding :meth:`channel`
    and :meth:`output_state`.
    """

    def __init__(self, priors: Sequence[float], channels: Sequence[CPMap],
                 ancilla_dim: int | None = None, labels: Sequence[Hashable] = (),
                 validate: bool = True):
        self.priors = tuple(float(p) for p in priors)
        self._channels = tuple(channels) if channels is not None else None
        self.ancilla_dim = None if ancilla_dim in (None, 1) else int(ancilla_dim)
        self.labels = tuple(labels) if labels else tuple(range(1, len(self.priors) + 1))
        if len(self.labels) != len(self.priors):
            raise ArgumentError("one label per channel is required")
        if validate:
            self._validate()

    def _validate(self):
        p = np.array(self.priors)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ArgumentError("priors must be non-negative and sum to 1")
        if self._channels is not None:
            if len(self._channels) != len(self.priors):
                raise ArgumentError("one prior per channel is required")
            first = self._channels[0]
            for c in self._channels:
                if c.kind != "cptp":
                    raise ArgumentError("every channel in a game must be CPTP")
                if (c.in_dim, c.out_dim) != (first.in_dim, first.out_dim):
                    raise ArgumentError("channels must share input/output dimensions")

    def __len__(self):
        return len(self.priors)

    def channel(self, i: int) -> CPMap:
        return self._channels[i]

    @property
    def channels(self) -> list[CPMap]:
        return [self.channel(i) for i in range(len(self))]

    @property
    def in_dim(self) -> int:
        return self.channel(0).in_dim

    @property
    def out_dim(self) -> int:
        return self.channel(0).out_dim

    @property
    def state_dim(self) -> int:
        return self.in_dim * (self.ancilla_dim or 1)

    @property
    def effect_dim(self) -> int:
        return self.out_dim * (self.ancilla_dim or 1)

    def label_index(self, label) -> int:
        return self.labels.index(label)

    def output_state(self, i: int, rho) -> np.ndarray:
        if self.ancilla_dim:
            return ch.apply_with_ancilla(self.channel(i), rho, self.ancilla_dim)
        return ch.apply(self.channel(i), rho)

    def adjoint_effect(self, i: int, effect) -> np.ndarray:
        if self.ancilla_dim:
            return ch.apply_adjoint_with_ancilla(self.channel(i), effect, self.ancilla_dim)
        return ch.apply_adjoint(self.channel(i), effect)

    def weighted_outputs(self, rho) -> list:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.state_dim, self.state_dim):
            raise ArgumentError(
                f"state dimension {rho.shape[0]} does not match game input {self.state_dim}"
            )
        return [(p, self.output_state(i, rho)) for i, p in enumerate(self.priors)]

    def to_json(self) -> dict:
        out = {
            "priors": list(self.priors),
            "channels": [c.to_json() for c in self.channels],
        }
        if self.ancilla_dim:
            out["ancilla_dim"] = self.ancilla_dim
        return out

    @classmethod
    def from_json(cls, obj) -> "ChannelEnsemble":
        try:
            return cls(obj["priors"], [CPMap.from_json(c) for c in obj["channels"]],
                       obj.get("ancilla_dim"))
        except KeyError as exc:
            raise ArgumentError(f"game JSON missing field {exc}") from exc


# --------------------------------------------------------------------------
# group actions


class GroupAction:
    """Unitary action ``g -> U_g (.) U_g^dagger`` of a finite group.

    ``table`` maps ``(g, h)`` to ``gh``; it may also be a callable.
    ``unitaries`` is a sequence aligned with ``labels`` or a callable
    ``label -> matrix`` (large actions are built on demand).  With
    ``generators`` the homomorphism check runs on ``(g, s)`` pairs only,
    which implies it for all pairs.
    """

    def __init__(self, labels: Sequence[Hashable], unitaries, table, identity: Hashable,
                 generators: Sequence[Hashable] = (), validate: bool = True):
        self.labels = tuple(labels)
        self.identity = identity
        self.generators = tuple(generators)
        self._index = {g: i for i, g in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise ArgumentError("group labels must be distinct")
        if callable(unitaries):
            self._unitary_fn = unitaries
            self._unitaries = None
        else:
            self._unitaries = tuple(np.asarray(u, dtype=complex) for u in unitaries)
            if len(self._unitaries) != len(self.labels):
                raise ArgumentError("one unitary per label is required")
            self._unitary_fn = None
        self._table = table if callable(table) else dict(table).__getitem__
        self._dim = self.unitary(identity).shape[0]
        self._inverse = {}
        for g in self.labels:
            for h in self.labels:
                if self._safe_product(g, h) == identity:
                    self._inverse[g] = h
                    break
        if validate:
            self.validate()

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def unitaries(self) -> tuple:
        if self._unitaries is None:
            return tuple(self.unitary(g) for g in self.labels)
        return self._unitaries

    def unitary(self, g) -> np.ndarray:
        if self._unitary_fn is not None:
            if g not in self._index:
                raise ArgumentError(f"unknown group element {g!r}")
            return np.asarray(self._unitary_fn(g), dtype=complex)
        return self._unitaries[self._index[g]]

    def _safe_product(self, g, h):
        try:
            return self._table((g, h))
        except KeyError:
            return None

    def product(self, g, h):
        return self._table((g, h))

    def inverse(self, g):
        return self._inverse[g]

    def act(self, g, op) -> np.ndarray:
        u = self.unitary(g)
        return u @ op @ u.conj().T

    def validate(self, sample: int = 2000) -> float:
        """Check the group axioms and the projective homomorphism; return the
        worst unitary residual."""
        labels = set(self.labels)
        for g in self.labels:
            for h in self.labels:
                if self._safe_product(g, h) not in labels:
                    raise ArgumentError(f"multiplication table not closed at ({g}, {h})")
            if self.product(self.identity, g) != g or self.product(g, self.identity) != g:
                raise ArgumentError(f"identity law fails at {g}")
            if g not in self._inverse:
                raise ArgumentError(f"element {g} has no inverse")
        rng = np.random.default_rng(0)
        n = len(self.labels)
        for _ in range(min(sample, n ** 3)):
            a, b, c = (self.labels[i] for i in rng.integers(n, size=3))
            if self.product(self.product(a, b), c) != self.product(a, self.product(b, c)):
                raise ArgumentError(f"associativity fails at ({a}, {b}, {c})")
        if la.max_abs(self.unitary(self.identity) - np.eye(self.dim)) > 1e-9:
            raise ArgumentError("identity element must act by the identity matrix")
        partners = self.generators or self.labels
        gens = {s: self.unitary(s) for s in partners}
        worst = 0.0
        for g in self.labels:
            ug = self.unitary(g)
            la.check_unitary(ug, tol=1e-9)
            for s, us in gens.items():
                worst = max(worst, _phase_residual(ug @ us, self.unitary(self.product(g, s))))
        if worst > COVARIANCE_TOL:
            raise ArgumentError(f"unitaries do not represent the group (residual {worst:.2e})")
        return worst


def _phase_residual(a: np.ndarray, b: np.ndarray) -> float:
    """``min_theta ||a - e^{i theta} b||_max`` for unitaries (channel distance proxy)."""
    z = np.trace(b.conj().T @ a)
    phase = z / abs(z) if abs(z) > 1e-12 else 1.0
    return la.max_abs(a - phase * b)


def cyclic_action(n: int) -> GroupAction:
    """Cyclic group ``{1..n}`` with product ``<m+k>_n``, identity ``n`` and
    ``U_k = X^k`` for the shift ``X`` of order ``n``."""
    x, _ = la.generalized_pauli(n)
    labels = tuple(range(1, n + 1))
    unitaries = [np.linalg.matrix_power(x, k) for k in labels]
    table = {(a, b): la.mod_index(a + b, n) for a in labels for b in labels}
    return GroupAction(labels, unitaries, table, n, generators=(1,))


# --------------------------------------------------------------------------
# success probabilities


def success_probability(rho, povm: Measurement, game: ChannelEnsemble) -> float:
    outs = game.weighted_outputs(rho)
    if len(povm) != len(outs):
        raise ArgumentError(f"POVM has {len(povm)} effects but game has {len(outs)} channels")
    if povm.dim != game.effect_dim:
        raise ArgumentError(f"POVM dimension {povm.dim} != output dimension {game.effect_dim}")
    return float(sum(p * la.inner(e, s) for e, (p, s) in zip(povm.effects, outs)))


def optimal_success(rho, game: ChannelEnsemble, tol: float = DEFAULT_TOL,
                    method: str = "auto") -> DiscriminationCertificate:
    """Optimal success probability; ``.value`` and ``.povm`` on the result."""
    return min_error_discrimination(game.weighted_outputs(rho), tol, labels=game.labels,
                                    method=method)


def effective_operator(povm: Measurement, game: ChannelEnsemble) -> np.ndarray:
    """``M`` with ``P_S(sigma, povm) = Tr(M sigma)`` for every input ``sigma``."""
    return la.hermitian_part(sum(p * game.adjoint_effect(i, e)
                                 for i, (p, e) in enumerate(zip(game.priors, povm.effects))))


# --------------------------------------------------------------------------
# covariance


@dataclass(frozen=True)
class CovarianceReport:
    covariant: bool
    worst_residual: float
    worst_pair: tuple | None


def _output_action(game: ChannelEnsemble, action: GroupAction) -> Callable:
    """``g -> V_g`` acting on the channel output, stripping ``(x) I_C``."""
    if action.dim == game.out_dim:
        return action.unitary
    anc = game.ancilla_dim or 1
    if action.dim != game.out_dim * anc:
        raise ArgumentError(
            f"action dimension {action.dim} does not match game output {game.out_dim}"
        )

    def strip(g):
        u = action.unitary(g)
        v = la.ptrace_last(u, game.out_dim, anc) / anc
        if la.max_abs(np.kron(v, np.eye(anc)) - u) > 1e-10:
            raise ArgumentError("action does not factor as V (x) I on the ancilla")
        return v

    return strip


def covariance_check(game: ChannelEnsemble, action: GroupAction,
                     tol: float = COVARIANCE_TOL, pairwise: bool | None = None
                     ) -> CovarianceReport:
    """Max over ``(g, h)`` of ``||J(L_gh) - J(U_g o L_h)||``.

    For large groups (``pairwise=None`` and ``|G| > 48``) only ``h = e`` is
    compared, which suffices once ``action`` is validated as a representation:
    ``L_gh = U_gh L_e = U_g U_h L_e = U_g L_h``.
    """
    if set(game.labels) != set(action.labels):
        raise ArgumentError("game labels must coincide with group labels")
    p = np.array(game.priors)
    if np.max(np.abs(p - p.mean())) > 1e-12:
        raise ArgumentError("covariant games need uniform priors")
    out_unitary = _output_action(game, action)
    if pairwise is None:
        pairwise = len(action) <= 48
    partners = action.labels if pairwise else (action.identity,)
    worst, worst_pair = 0.0, None
    for h in partners:
        base = game.channel(game.label_index(h))
        for g in action.labels:
            target = game.channel(game.label_index(action.product(g, h)))
            moved = ch.conjugate_output(base, out_unitary(g))
            r = ch.choi_distance(target, moved)
            if r > worst:
                worst, worst_pair = r, (g, h)
    return CovarianceReport(worst <= tol, worst, worst_pair)


def is_covariant_measurement(povm: Measurement, action: GroupAction,
                             tol: float = COVARIANCE_TOL) -> tuple[bool, float]:
    eff = dict(zip(povm.labels, povm.effects))
    worst = 0.0
    for g in action.labels:
        for h in action.labels:
            worst = max(worst, la.max_abs(eff[action.product(g, h)] - action.act(g, eff[h])))
    return worst <= tol, worst


def symmetrize_measurement(povm: Measurement, action: GroupAction,
                           game: ChannelEnsemble | None = None) -> Measurement:
    """Group average ``Pi_g = |G|^-1 sum_h U_h Pi_{h^-1 g} U_h^dagger``.

    The game (if given) is checked for covariance first.
    """
    if game is not None:
        rep = covariance_check(game, action)
        if not rep.covariant:
            raise CovarianceError(
                f"game is not covariant: residual {rep.worst_residual:.2e} at pair "
                f"{rep.worst_pair}", pair=rep.worst_pair, residual=rep.worst_residual)
    if set(povm.labels) != set(action.labels):
        raise ArgumentError("POVM outcomes must be labelled by group elements")
    if povm.dim != action.dim:
        raise ArgumentError(f"POVM dimension {povm.dim} != action dimension {action.dim}")
    eff = dict(zip(povm.labels, povm.effects))
    n = len(action)
    out = []
    for g in action.labels:
        acc = np.zeros((povm.dim, povm.dim), dtype=complex)
        for h in action.labels:
            acc += action.act(h, eff[action.product(action.inverse(h), g)])
        out.append(la.hermitian_part(acc / n))
    return Measurement(tuple(out), action.labels)


def covariant_optimal_success(rho, game: ChannelEnsemble, action: GroupAction,
                              tol: float = DEFAULT_TOL) -> tuple[float, float, Measurement]:
    """Optimal success over covariant POVMs via a single seed effect.

    Maximises ``Tr[E L_e(rho)]`` over ``E >= 0`` with
    ``sum_g U_g E U_g^dagger = I``; returns ``(lower, upper, povm)`` where
    the POVM is the orbit of the (repaired) seed.
    """
    d = action.dim
    if d != game.effect_dim:
        raise ArgumentError("action must act on the full measured space")
    target = game.output_state(game.label_index(action.identity), rho)
    basis = la.hermitian_basis(d)
    # F_i = sum_g U_g^dagger E_i U_g so that Tr(F_i E) = Tr(E_i twirl(E))
    fm = np.zeros((d * d, len(basis)), dtype=complex)
    for i, e in enumerate(basis):
        f = sum(u.conj().T @ e @ u for u in action.unitaries)
        fm[:, i] = f.reshape(-1)
    c = np.array([np.trace(e).real for e in basis])
    res = lmi_solve(LMIProblem(c, (LMIBlock(-target, fm),)))
    seed = la.psd_projection(res.Z[0])
    effects = repair_povm([action.act(g, seed) for g in action.labels])
    povm = Measurement(tuple(effects), action.labels)
    ordered = Measurement(tuple(dict(zip(action.labels, effects))[l] for l in game.labels),
                          game.labels)
    lower = success_probability(rho, ordered, game)
    y = la.hermitian_part(np.einsum("k,kij->ij", res.y, basis))
    twirl_y = sum(u.conj().T @ y @ u for u in action.unitaries)
    shift = max(0.0, -la.min_eigenvalue(twirl_y - target))
    upper = float(np.trace(y).real + shift * d / len(action) * (1 + 1e-9))
    return lower, upper, povm


# --------------------------------------------------------------------------
# suprema over free sets


@dataclass
class SupResult:
    value: float
    mode: str
    lower: float
    upper: float | None = None
    argmax: int | None = None
    restarts: int = 0
    state: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"value": self.value, "mode": self.mode, "lower": self.lower,
                "upper": self.upper, "argmax": self.argmax, "restarts": self.restarts}


def sup_over_free(f: FreeSet, game: ChannelEnsemble, tol: float = DEFAULT_TOL,
                  restarts: int = 5, seed: int = 0, witness_bound: float | None = None,
                  evaluator: Callable | None = None, method: str = "auto") -> SupResult:
    """``sup_{omega in F} P_S(omega)`` for the game.

    Polytopes are exact (``P_S`` is convex in the state, so the supremum sits
    at a generator).  C-flexible sets get a see-saw lower bound; the
    analytic ``witness_bound`` is carried as the upper bound when supplied.
    ``evaluator(state) -> (value, povm)`` overrides the optimal-success solver.
    """
    if f.dim != game.state_dim:
        raise ArgumentError(f"free-set dimension {f.dim} != game input {game.state_dim}")
    solve = evaluator or (lambda s: _value_povm(optimal_success(s, game, tol, method)))
    if isinstance(f, PolytopeFreeSet):
        vals = [solve(g)[0] for g in f.generators]
        i = int(np.argmax(vals))
        return SupResult(vals[i], "exact", vals[i], vals[i], i, 0, f.generators[i])
    lower, state = seesaw(f, game, solve, restarts=restarts, seed=seed)
    return SupResult(lower, "seesaw_lower_bound", lower, witness_bound, None, restarts, state)


def _value_povm(cert: DiscriminationCertificate):
    return cert.value, cert.povm


def seesaw(f: CFlexibleFreeSet, game: ChannelEnsemble, solve: Callable,
           restarts: int = 5, seed: int = 0, max_iter: int = 50, atol: float = 1e-10,
           effective: Callable | None = None) -> tuple[float, np.ndarray]:
    """Alternate optimal measurement and best free input; best of ``restarts``."""
    rng = np.random.default_rng(seed)
    eff = effective or (lambda povm: effective_operator(povm, game))
    starts = [f.sample(rng) for _ in range(max(restarts, 1))]
    best_val, best_state = -np.inf, None
    for state in starts:
        val, povm = solve(state)
        for _ in range(max_iter):
            wm = max_witness_value(eff(povm), f)
            new_val, new_povm = solve(wm.omega)
            if new_val <= val + atol:
                if new_val > val:
                    val, state = new_val, wm.omega
                break
            val, povm, state = new_val, new_povm, wm.omega
        if val > best_val:
            best_val, best_state = val, state
    return float(best_val), best_state


# --------------------------------------------------------------------------
# reports


@dataclass
class GameReport:
    numerator: float
    denominator: float
    ratio: float
    mode: str
    covariant_c: float | None = None
    robustness: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("numerator", "denominator"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 1 + 1e-9:
                raise ArgumentError(f"{name} {v} is not a probability")

    def to_json(self) -> dict:
        return {
            "numerator": self.numerator,
            "denominator": self.denominator,
            "ratio": self.ratio,
            "mode": self.mode,
            "covariant_c": self.covariant_c,
            "robustness": self.robustness,
            **self.extra,
        }


def evaluate_game(rho, f: FreeSet, game: ChannelEnsemble, tol: float = DEFAULT_TOL,
                  robustness: float | None = None, method: str = "auto") -> GameReport:
    num = optimal_success(rho, game, tol, method)
    den = sup_over_free(f, game, tol, method=method)
    return GameReport(num.value, den.value, num.value / den.value, den.mode,
                      robustness=robustness)
