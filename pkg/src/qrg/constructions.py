"""Compilers from robustness certificates to explicit discrimination games.

Three families are produced:

* witness games: ``N`` channels that write ``Tr(e sigma)`` onto a flag
  ``|n><n|`` and spread the remainder uniformly over the other flags;
* ancilla-assisted games on ``A (x) C`` built from subchannels ``A -> C``
  and twirled by ``X~^i (x) X^q Z^r`` (flag shift times a Weyl operator);
* divergence games, the witness family fed with the projector onto the
  complement of the free-state support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import channels as ch
from . import linalg as la
from .channels import CPMap, Measurement, SubchannelCollection
from .errors import (
    ArgumentError,
    ConstructionError,
    CovarianceError,
    DegenerateWitnessError,
    InstanceTooLargeError,
    PreconditionError,
)
from .freesets import (
    CFlexibleFreeSet,
    FreeSet,
    PolytopeFreeSet,
    in_S_T,
    max_witness_value,
    support_space,
)
from .games import ChannelEnsemble, GroupAction, cyclic_action, is_covariant_measurement
from .solvers import (
    DEFAULT_TOL,
    LMIBlock,
    LMIProblem,
    RobustnessCertificate,
    lmi_solve,
)

SCHEMA_VERSION = 1
DEGENERATE_TOL = 1e-10
CERT_GAP_TOL = 1e-6
# 1 + 1/t is snapped to the nearest integer when this close (relative)
N_SNAP_RTOL = 1e-9


def flag_count(threshold: float, cap: int | None = None, what: str = "Tr(e w*)") -> int:
    """Smallest ``N >= 2`` with ``1/(N-1) <= threshold``."""
    if threshold <= DEGENERATE_TOL:
        raise DegenerateWitnessError(f"{what} = {threshold:.3e} is too small to compile a game")
    v = 1.0 + 1.0 / threshold
    if abs(v - round(v)) <= N_SNAP_RTOL * v:
        v = float(round(v))
    n = max(2, math.ceil(v))
    cap = la.n_max() if cap is None else cap
    if n > cap:
        raise InstanceTooLargeError(
            f"game needs N = {n} flags (> cap {cap}); {what} = {threshold:.6g}"
        )
    return n


def witness_channels(e, n: int) -> list[CPMap]:
    """``L_k(s) = Tr(e s)|k><k| + (1 - Tr(e s))/(n-1) (I - |k><k|)`` for k = 1..n."""
    e = la.as_hermitian(e, rtol=1e-10)
    if n < 2:
        raise ArgumentError("witness games need at least two channels")
    d = e.shape[0]
    et = e.T
    rest = np.eye(d) - et
    out = []
    for k in range(1, n + 1):
        p = la.basis_projector(k, n)
        choi = np.kron(et, p) + np.kron(rest, np.eye(n) - p) / (n - 1)
        out.append(CPMap(d, n, choi, "cptp"))
    return out


def witness_game(e, n: int) -> ChannelEnsemble:
    return ChannelEnsemble([1.0 / n] * n, witness_channels(e, n))


def witness_game_value(t: float, n: int) -> float:
    """Exact optimal success of the witness game on an input with ``Tr(e s) = t``."""
    return max(t, (1.0 - t) / (n - 1))


def _check_certificate(cert):
    if not isinstance(cert, RobustnessCertificate):
        raise PreconditionError("a finite robustness certificate is required")
    if cert.gap > CERT_GAP_TOL:
        raise PreconditionError(
            f"certificate gap {cert.gap:.2e} exceeds {CERT_GAP_TOL:.0e}; re-solve with a tighter tol"
        )


# --------------------------------------------------------------------------
# witness (single-system) games


@dataclass
class Thm1Compilation:
    e: np.ndarray
    x_norm: float
    omega_star: np.ndarray
    omega_index: int
    witness_value: float
    N: int
    game: ChannelEnsemble
    designed_povm: Measurement
    action: GroupAction = field(repr=False)

    def designed_value(self, rho) -> float:
        """Success of the computational-basis POVM: ``Tr(e rho)`` exactly."""
        from .games import success_probability

        return success_probability(rho, self.designed_povm, self.game)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "witness_game",
            "e": la.matrix_to_json(self.e),
            "x_norm": self.x_norm,
            "omega_star": la.matrix_to_json(self.omega_star),
            "omega_index": self.omega_index,
            "witness_value": self.witness_value,
            "N": self.N,
            "game": self.game.to_json(),
            "designed_povm": self.designed_povm.to_json(),
            "tolerances": {"degenerate": DEGENERATE_TOL, "certificate_gap": CERT_GAP_TOL,
                           "n_snap_rtol": N_SNAP_RTOL},
        }


def compile_thm1(rho, f: FreeSet, cert: RobustnessCertificate,
                 n_cap: int | None = None) -> Thm1Compilation:
    """Witness game whose ratio reaches ``1 + lambda*``."""
    _check_certificate(cert)
    rho = la.as_density(rho)
    x = la.hermitian_part(cert.dual_witness)
    if x.shape != rho.shape or x.shape[0] != f.dim:
        raise ArgumentError("certificate, state and free set disagree on dimension")
    norm = la.max_eigenvalue(x)
    if norm <= DEGENERATE_TOL:
        raise DegenerateWitnessError("dual witness vanishes")
    e = x / norm
    wm = max_witness_value(e, f)
    n = flag_count(wm.value, n_cap)
    game = witness_game(e, n)
    return Thm1Compilation(e, norm, wm.omega, wm.index, wm.value, n, game,
                           ch.computational_povm(n), cyclic_action(n))


# --------------------------------------------------------------------------
# ancilla-assisted construction


def transfer_map(e, dim_a: int, dim_c: int) -> CPMap:
    """``X -> Tr_{A C}[(e (x) I_C)(X (x) Phi_C)]`` from A to C.

    Its Choi matrix (input (x) output ordering) is ``e^T``.
    """
    e = la.as_hermitian(e, rtol=1e-10)
    if e.shape[0] != dim_a * dim_c:
        raise ArgumentError(f"operator must act on A (x) C of dimension {dim_a * dim_c}")
    return CPMap(dim_a, dim_c, e.T)


def phi_overlap(state, dim_c: int) -> float:
    """``Tr[Phi_C state]`` for a state on ``C (x) C``."""
    return float(np.real(np.vdot(la.max_entangled(dim_c), np.asarray(state))))


@dataclass
class AppCCompilation:
    e: np.ndarray
    c_scale: float
    tau: np.ndarray
    N: int
    epsilon: float
    epsilon_prime: float
    witness_value: float
    omega_star: np.ndarray
    dim_a: int
    dim_c: int
    subchannels: SubchannelCollection
    lambda_star: float
    game: "AppCGame | None" = field(default=None, repr=False)
    psi: Measurement | None = field(default=None, repr=False)
    action: GroupAction | None = field(default=None, repr=False)

    @property
    def denominator_bound(self) -> float:
        """Upper bound on the best free success probability."""
        return (self.witness_value + self.epsilon_prime) / self.dim_c

    def psi_value(self, rho) -> float:
        """``P_S(rho, Psi)`` on the compiled game.

        Uses the explicit POVM when the game is small, otherwise the orbit
        identity ``P_S = Tr[Psi_111 (L_111 (x) id)(rho)]``.
        """
        if self.game is None:
            raise ConstructionError("game not compiled yet")
        if len(self.game) * self.game.effect_dim <= 4096:
            from .games import success_probability

            return success_probability(rho, self.psi_measurement(), self.game)
        out = self.game.output_state(0, rho)
        return la.inner(_psi_seed(self.N, self.dim_c), out)

    def psi_measurement(self) -> Measurement:
        if self.psi is None:
            self.psi = appc_psi(self.N, self.dim_c)
        return self.psi

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "ancilla_game",
            "e": la.matrix_to_json(self.e),
            "c_scale": self.c_scale,
            "tau": la.matrix_to_json(self.tau),
            "N": self.N,
            "epsilon": self.epsilon,
            "epsilon_prime": self.epsilon_prime,
            "witness_value": self.witness_value,
            "omega_star": la.matrix_to_json(self.omega_star),
            "dims": {"A": self.dim_a, "C": self.dim_c},
            "lambda_star": self.lambda_star,
            "subchannels": [m.to_json() for m in self.subchannels.maps],
            "denominator_bound": self.denominator_bound,
            "priors": "uniform 1/(N*C^2)",
        }


def compile_appc_subchannels(cert: RobustnessCertificate, f: CFlexibleFreeSet,
                             epsilon: float, tau=None, n_cap: int | None = None
                             ) -> AppCCompilation:
    """Subchannels ``A -> C``: the transfer map of ``e`` on flag 1, the rest
    spread as ``tau o a / (N-1)`` where ``a`` is the leftover trace."""
    _check_certificate(cert)
    if not isinstance(f, CFlexibleFreeSet):
        raise PreconditionError("ancilla compilation needs a C-flexible free set")
    epsilon = float(epsilon)
    if not epsilon >= 0:
        raise ArgumentError("epsilon must be non-negative")
    da, dc = f.dim_a, f.dim_c
    x = la.hermitian_part(cert.dual_witness)
    xa = la.ptrace_last(x, da, dc)
    norm = la.spectral_norm(xa)
    if norm <= DEGENERATE_TOL:
        raise DegenerateWitnessError("reduced dual witness vanishes")
    e = x / norm
    c_scale = 1.0 / norm
    tau = np.eye(dc, dtype=complex) / dc if tau is None else la.as_density(tau)
    if tau.shape != (dc, dc):
        raise ArgumentError(f"tau must be a state on C (dimension {dc})")
    wm = max_witness_value(e, f)
    if epsilon > 0:
        eps_p = epsilon * c_scale
        n = flag_count(eps_p, n_cap, what="epsilon'")
    else:
        eps_p = 0.0
        n = flag_count(wm.value, n_cap)
    first = transfer_map(e, da, dc)
    leftover = np.eye(da) - la.ptrace_last(e, da, dc)
    leftover = la.hermitian_part(leftover)
    if la.min_eigenvalue(leftover) < -1e-9:
        raise ConstructionError("Tr_C e exceeds the identity; witness normalisation failed")
    spread = CPMap(da, dc, np.kron(leftover.T, tau) / (n - 1))
    sub = SubchannelCollection(tuple([first] + [spread] * (n - 1)))
    return AppCCompilation(e, c_scale, tau, n, epsilon, eps_p, wm.value, wm.omega, da, dc,
                           sub, cert.lambda_star)


def _flag_shift(n: int, i: int) -> np.ndarray:
    return np.roll(np.eye(n, dtype=complex), i % n, axis=0)


def _appc_unitary(n: int, dc: int, label, ancilla: bool) -> np.ndarray:
    i, q, r = label
    u = np.kron(_flag_shift(n, i), la.weyl(q, r, dc))
    return np.kron(u, np.eye(dc)) if ancilla else u


def appc_labels(n: int, dc: int) -> list[tuple]:
    return [(i, q, r) for i in range(1, n + 1) for q in range(1, dc + 1)
            for r in range(1, dc + 1)]


def appc_action(n: int, dc: int, ancilla: bool = True, validate: bool = True) -> GroupAction:
    """``Z_N x Z_C x Z_C`` acting by ``X~^i (x) X^q Z^r`` (``(x) I_C`` when ``ancilla``).

    Identity ``(N, C, C)``; products add labels cyclically.
    """
    def table(pair):
        (i, q, r), (i2, q2, r2) = pair
        if not (1 <= i <= n and 1 <= i2 <= n and 1 <= q <= dc and 1 <= q2 <= dc
                and 1 <= r <= dc and 1 <= r2 <= dc):
            raise KeyError(pair)
        return (la.mod_index(i + i2, n), la.mod_index(q + q2, dc), la.mod_index(r + r2, dc))

    return GroupAction(
        appc_labels(n, dc),
        lambda g: _appc_unitary(n, dc, g, ancilla),
        table, (n, dc, dc),
        generators=((1, dc, dc), (n, 1, dc), (n, dc, 1)),
        validate=validate,
    )


class AppCGame(ChannelEnsemble):
    """Channels ``L_iqr = W [sum_n |n><n| (x) L~_n] W^dagger`` with
    ``W = X~^(i-1) (x) X^(q-1) Z^(r-1)``, generated on demand.

    Outputs on ``B (x) C (x) C'`` are obtained by permuting flag blocks and
    conjugating with the Weyl operator, without building the channels.
    """

    def __init__(self, sub: SubchannelCollection, dim_c: int):
        if sub.out_dim != dim_c:
            raise ArgumentError(f"subchannels must output on C (dimension {dim_c})")
        self.sub = sub
        self.n = len(sub)
        self.dim_c = dim_c
        labels = appc_labels(self.n, dim_c)
        super().__init__([1.0 / len(labels)] * len(labels), None, dim_c, labels,
                         validate=False)
        self._base_choi = None

    @property
    def in_dim(self) -> int:
        return self.sub.in_dim

    @property
    def out_dim(self) -> int:
        return self.n * self.dim_c

    def _shift(self, label) -> np.ndarray:
        i, q, r = label
        return np.kron(_flag_shift(self.n, i - 1), la.weyl(q - 1, r - 1, self.dim_c))

    def base_channel(self) -> CPMap:
        if self._base_choi is None:
            da, dc, n = self.in_dim, self.dim_c, self.n
            choi = np.zeros((da, n, dc, da, n, dc), dtype=complex)
            for k, m in enumerate(self.sub.maps):
                choi[:, k, :, :, k, :] = m.choi.reshape(da, dc, da, dc)
            self._base_choi = choi.reshape(da * n * dc, da * n * dc)
        return CPMap(self.in_dim, self.out_dim, self._base_choi)

    def channel(self, idx: int) -> CPMap:
        return ch.conjugate_output(self.base_channel(), self._shift(self.labels[idx]))

    def flag_blocks(self, rho) -> list[np.ndarray]:
        """``(L~_n (x) id_C)(rho)`` for each flag ``n``."""
        return [ch.apply_with_ancilla(m, rho, self.dim_c) for m in self.sub.maps]

    def output_state(self, idx: int, rho, blocks=None) -> np.ndarray:
        blocks = self.flag_blocks(rho) if blocks is None else blocks
        i, q, r = self.labels[idx]
        w = np.kron(la.weyl(q - 1, r - 1, self.dim_c), np.eye(self.dim_c))
        dcc = self.dim_c ** 2
        out = np.zeros((self.n * dcc, self.n * dcc), dtype=complex)
        for k, b in enumerate(blocks):
            j = (k + i - 1) % self.n
            out[j * dcc:(j + 1) * dcc, j * dcc:(j + 1) * dcc] = w @ b @ w.conj().T
        return out

    def weighted_outputs(self, rho) -> list:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.state_dim, self.state_dim):
            raise ArgumentError(
                f"state dimension {rho.shape[0]} does not match game input {self.state_dim}"
            )
        blocks = self.flag_blocks(rho)
        return [(p, self.output_state(k, rho, blocks)) for k, p in enumerate(self.priors)]

    def to_json(self) -> dict:
        return {
            "priors": list(self.priors),
            "channels": [self.channel(k).to_json() for k in range(len(self))],
            "ancilla_dim": self.dim_c,
        }


def _psi_seed(n: int, dc: int) -> np.ndarray:
    return np.kron(la.basis_projector(1, n), la.max_entangled(dc) / dc)


def appc_psi(n: int, dc: int) -> Measurement:
    """Orbit of ``|1><1| (x) Phi_C / N_C`` under the flag-shift/Weyl twirl."""
    seed = _psi_seed(n, dc)
    labels = appc_labels(n, dc)
    effects = []
    for i, q, r in labels:
        w = np.kron(np.kron(_flag_shift(n, i - 1), la.weyl(q - 1, r - 1, dc)), np.eye(dc))
        effects.append(la.hermitian_part(w @ seed @ w.conj().T))
    m = Measurement(tuple(effects), tuple(labels))
    rep = ch.validate_povm(m)
    if not rep.passed:
        raise ConstructionError(f"designed measurement invalid: {rep}")
    return m


def compile_appc_game(comp: AppCCompilation, validate: bool = True) -> AppCCompilation:
    """Attach the twirled game, the designed measurement and the group action."""
    game = AppCGame(comp.subchannels, comp.dim_c)
    comp.game = game
    comp.action = appc_action(comp.N, comp.dim_c, ancilla=True, validate=validate)
    if len(game) * game.effect_dim <= 4096:
        comp.psi = appc_psi(comp.N, comp.dim_c)
    return comp


def dephase(povm: Measurement, n: int) -> Measurement:
    """Keep only the diagonal flag blocks of each effect."""
    d = povm.dim
    if d % n:
        raise ArgumentError(f"POVM dimension {d} is not a multiple of {n}")
    rest = d // n
    out = []
    for e in povm.effects:
        blocks = np.zeros_like(e)
        for k in range(n):
            s = slice(k * rest, (k + 1) * rest)
            blocks[s, s] = e[s, s]
        out.append(blocks)
    return Measurement(tuple(out), povm.labels)


def extract_gamma(povm_sym: Measurement, n: int, dc: int, check: bool = True
                  ) -> SubchannelCollection:
    """Subchannels on C read off the seed effect ``Pi_(1,1,1)``:
    ``G_n(s) = N_C Tr_{C C'}[(I (x) M_n)(Phi_C (x) s)]`` with
    ``M_n = <n| Pi_111 |n>``."""
    if povm_sym.dim != n * dc * dc:
        raise ArgumentError(f"POVM dimension {povm_sym.dim} != {n}*{dc}^2")
    if check:
        ok, res = is_covariant_measurement(povm_sym, appc_action(n, dc, validate=False))
        if not ok:
            raise CovarianceError(f"measurement is not covariant (residual {res:.2e})",
                                  residual=res)
        worst = max(la.max_abs(a - b) for a, b in
                    zip(dephase(povm_sym, n).effects, povm_sym.effects))
        if worst > 1e-9:
            raise PreconditionError(f"measurement is not flag-dephased (residual {worst:.2e})")
    seed = dict(zip(povm_sym.labels, povm_sym.effects))[(1, 1, 1)]
    dcc = dc * dc
    phi = la.max_entangled(dc)
    prof = la.DimensionProfile(("C1", "C2", "C3"), (dc, dc, dc))
    maps = []
    for k in range(n):
        m = seed[k * dcc:(k + 1) * dcc, k * dcc:(k + 1) * dcc]
        big = np.kron(np.eye(dc), m)

        def gamma(s, big=big):
            return dc * la.partial_trace(big @ np.kron(phi, s), prof, ("C1",))

        maps.append(ch.from_function(gamma, dc, dc))
    return SubchannelCollection(tuple(maps))


def gamma_pairing(sub: SubchannelCollection, gammas: SubchannelCollection, rho,
                  dc: int) -> float:
    """``sum_n Tr[Phi_C (L~_n (x) G_n)(rho)]``."""
    return float(sum(phi_overlap(ch.apply(ch.tensor(lam, gam), rho), dc)
                     for lam, gam in zip(sub.maps, gammas.maps)))


@dataclass
class ReducedOptimum:
    value: float
    upper: float
    gap: float
    seeds: tuple = field(repr=False)
    maps: tuple = field(default=(), repr=False)
    dim_c: int = 1
    iterations: dict = field(default_factory=dict)

    def effective_operator(self) -> np.ndarray:
        """``M`` on ``A (x) C`` with ``Tr(M sigma)`` the success of this POVM on ``sigma``."""
        return la.hermitian_part(sum(ch.apply_adjoint_with_ancilla(m, z, self.dim_c)
                                     for m, z in zip(self.maps, self.seeds)))

    def to_json(self) -> dict:
        return {"value": self.value, "upper": self.upper, "gap": self.gap,
                "iterations": dict(self.iterations)}


def appc_optimal_success(rho, comp: AppCCompilation, tol: float = DEFAULT_TOL
                         ) -> ReducedOptimum:
    """Optimal success on the ancilla game.

    Restricting to covariant, flag-dephased POVMs is lossless, and such a
    POVM is fixed by blocks ``M_n >= 0`` on ``C (x) C'`` with
    ``N_C sum_n Tr_C M_n = I``.  Flags with identical subchannels are merged.
    """
    dc = comp.dim_c
    rho = la.as_density(rho)
    groups: list[list[int]] = []
    for k, m in enumerate(comp.subchannels.maps):
        for g in groups:
            if m is comp.subchannels.maps[g[0]] or \
                    la.max_abs(m.choi - comp.subchannels.maps[g[0]].choi) == 0.0:
                g.append(k)
                break
        else:
            groups.append([k])
    # the value is sum_n Tr[M_n R_n]; merged flags share R_n and sum their M_n
    targets = [la.hermitian_part(ch.apply_with_ancilla(comp.subchannels.maps[g[0]], rho, dc))
               for g in groups]
    basis = la.hermitian_basis(dc)
    fmat = np.stack([dc * np.kron(np.eye(dc), b).reshape(-1) for b in basis], axis=1)
    c = np.array([np.trace(b).real for b in basis])
    res = lmi_solve(LMIProblem(c, tuple(LMIBlock(-t, fmat) for t in targets)))
    if res.status not in ("optimal", "inaccurate"):
        from .errors import NumericalError

        raise NumericalError(f"reduced discrimination program reported {res.status}")
    # dual repair: project blocks, then rescale the constraint operator to I
    seeds = [la.psd_projection(z) for z in res.Z]
    total = dc * sum(la.ptrace_first(z, dc, dc) for z in seeds)
    whiten = la.psd_inv_sqrt(total)
    seeds = [np.kron(np.eye(dc), whiten) @ z @ np.kron(np.eye(dc), whiten) for z in seeds]
    value = float(sum(la.inner(z, t) for z, t in zip(seeds, targets)))
    y = la.hermitian_part(np.einsum("k,kij->ij", res.y, basis))
    # raising y by s*I lifts every constraint by dc*s and costs dc*s
    shift = max(0.0, max(-la.min_eigenvalue(dc * np.kron(np.eye(dc), y) - t)
                         for t in targets))
    upper = float(np.trace(y).real + shift * (1 + 1e-9))
    reps = tuple(comp.subchannels.maps[g[0]] for g in groups)
    return ReducedOptimum(value, upper, upper - value, tuple(seeds), reps, dc, res.iterations)


# --------------------------------------------------------------------------
# divergence games


@dataclass
class DivergenceGame:
    P: np.ndarray
    N: int
    game: ChannelEnsemble
    leak: float
    numerator: float
    designed_numerator: float
    denominator: float
    achieved_ratio: float

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "divergence_game",
            "P": la.matrix_to_json(self.P),
            "N": self.N,
            "leak": self.leak,
            "numerator": self.numerator,
            "designed_numerator": self.designed_numerator,
            "denominator": self.denominator,
            "achieved_ratio": self.achieved_ratio,
            "bound": (self.N - 1) * self.leak,
        }


def compile_divergence(rho, f: PolytopeFreeSet, n: int, tol: float = DEFAULT_TOL
                       ) -> DivergenceGame:
    """Witness game on the complement projector; its ratio grows like ``(N-1) Tr(P rho)``."""
    from .games import optimal_success, sup_over_free, success_probability

    rho = la.as_density(rho)
    if rho.shape[0] != f.dim:
        raise ArgumentError(f"state dimension {rho.shape[0]} != free-set dimension {f.dim}")
    if not 2 <= n <= la.n_max():
        raise ArgumentError(f"N must lie in [2, {la.n_max()}]")
    if in_S_T(rho, f):
        raise ArgumentError(
            "state lies in the free-state support space; robustness is finite, "
            "use the robustness/witness-game path instead"
        )
    proj = support_space(f).projector
    leak = la.inner(proj, rho)
    game = witness_game(proj, n)
    num = optimal_success(rho, game, tol).value
    designed = success_probability(rho, ch.computational_povm(n), game)
    den = sup_over_free(f, game, tol).value
    return DivergenceGame(proj, n, game, leak, num, designed, den, num / den)
