"""Free-state set models.

Two families are supported:

``PolytopeFreeSet``
    the convex hull of a finite list of density matrices.  Any linear
    functional attains its maximum at a generator, which makes suprema over
    the set exactly computable.

``CFlexibleFreeSet``
    states ``sum_i p_i alpha_i (x) beta_i`` with fixed A-side generators
    ``alpha_i`` and arbitrary C-side states ``beta_i``.  The set is closed
    under every channel (and, after normalisation, every trace-non-increasing
    CP map) acting on C.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels as ch
from . import linalg as la
from .errors import ArgumentError

SUPPORT_RTOL = 1e-9
MEMBERSHIP_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class PolytopeFreeSet:
    generators: tuple

    def __post_init__(self):
        gens = tuple(la.as_density(g) for g in self.generators)
        if not gens:
            raise ArgumentError("free set needs at least one generator")
        d = gens[0].shape[0]
        if any(g.shape != (d, d) for g in gens):
            raise ArgumentError("generators must share a dimension")
        object.__setattr__(self, "generators", gens)

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0]

    def __len__(self):
        return len(self.generators)

    def contains(self, rho, tol: float = MEMBERSHIP_TOL) -> bool:
        from .solvers import InfiniteRobustness, robustness

        res = robustness(rho, self)
        return not isinstance(res, InfiniteRobustness) and res.lambda_star <= tol

    def to_json(self) -> dict:
        return {"type": "polytope", "generators": [la.matrix_to_json(g) for g in self.generators]}


@dataclass(frozen=True, eq=False)
class CFlexibleFreeSet:
    dim_a: int
    dim_c: int
    a_generators: tuple

    def __post_init__(self):
        gens = tuple(la.as_density(g) for g in self.a_generators)
        if not gens:
            raise ArgumentError("free set needs at least one A-side generator")
        if any(g.shape != (self.dim_a, self.dim_a) for g in gens):
            raise ArgumentError(f"A-side generators must be {self.dim_a}x{self.dim_a}")
        if self.dim_c < 1:
            raise ArgumentError("dim_c must be positive")
        object.__setattr__(self, "dim_a", int(self.dim_a))
        object.__setattr__(self, "dim_c", int(self.dim_c))
        object.__setattr__(self, "a_generators", gens)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_c

    @property
    def profile(self) -> la.DimensionProfile:
        return la.DimensionProfile(("A", "C"), (self.dim_a, self.dim_c))

    def sample(self, rng: np.random.Generator, terms: int | None = None) -> np.ndarray:
        """A random member: random weights, generators and C-side states."""
        terms = len(self.a_generators) if terms is None else terms
        p = rng.dirichlet(np.ones(terms))
        idx = rng.integers(len(self.a_generators), size=terms)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for w, i in zip(p, idx):
            beta = la.random_ginibre_density(self.dim_c, rng)
            out += w * np.kron(self.a_generators[i], beta)
        return la.hermitian_part(out)

    def contains(self, rho, tol: float = MEMBERSHIP_TOL) -> bool:
        from .solvers import InfiniteRobustness, robustness

        res = robustness(rho, self)
        return not isinstance(res, InfiniteRobustness) and res.lambda_star <= tol

    def to_json(self) -> dict:
        return {
            "type": "c_flexible",
            "dims": {"A": self.dim_a, "C": self.dim_c},
            "a_generators": [la.matrix_to_json(g) for g in self.a_generators],
        }


FreeSet = PolytopeFreeSet | CFlexibleFreeSet


def freeset_from_json(obj) -> FreeSet:
    kind = obj.get("type")
    try:
        if kind == "polytope":
            return PolytopeFreeSet(tuple(la.matrix_from_json(g) for g in obj["generators"]))
        if kind == "c_flexible":
            dims = obj["dims"]
            return CFlexibleFreeSet(
                int(dims["A"]), int(dims["C"]),
                tuple(la.matrix_from_json(g) for g in obj["a_generators"]),
            )
    except KeyError as exc:
        raise ArgumentError(f"free-set JSON missing field {exc}") from exc
    raise ArgumentError(f"unknown free-set type {kind!r}")


# --------------------------------------------------------------------------
# support space


@dataclass(frozen=True, eq=False)
class SupportSpace:
    basis: np.ndarray
    projector: np.ndarray

    @property
    def dim(self) -> int:
        return self.projector.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def full(self) -> bool:
        return self.rank == self.dim


def _range_of(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(la.hermitian_part(m))
    cut = SUPPORT_RTOL * max(w[-1], 0.0)
    return v[:, w > cut]


def support_space(f: FreeSet) -> SupportSpace:
    """Span of the supports of all free states and the projector onto its complement."""
    if isinstance(f, CFlexibleFreeSet):
        mix_a = sum(f.a_generators) / len(f.a_generators)
        mixture = np.kron(mix_a, np.eye(f.dim_c) / f.dim_c)
    else:
        mixture = sum(f.generators) / len(f.generators)
    basis = _range_of(mixture)
    proj = np.eye(f.dim, dtype=complex) - basis @ basis.conj().T
    return SupportSpace(basis, la.hermitian_part(proj))


def in_S_T(rho, f: FreeSet, tol: float = SUPPORT_RTOL) -> bool:
    """True iff ``supp rho`` lies inside the support space of the free set."""
    rho = la.as_density(rho)
    if rho.shape[0] != f.dim:
        raise ArgumentError(f"state dimension {rho.shape[0]} != free-set dimension {f.dim}")
    p = support_space(f).projector
    return la.inner(p, rho) <= tol


# --------------------------------------------------------------------------
# witness maximisation


@dataclass(frozen=True, eq=False)
class WitnessMax:
    value: float
    index: int
    omega: np.ndarray
    beta: np.ndarray | None = None


def max_witness_value(e, f: FreeSet) -> WitnessMax:
    """Maximise ``Tr(e omega)`` over the free set.

    Ties go to the lowest generator index; for C-flexible sets the C-side
    state is the top eigenvector returned by ``numpy.linalg.eigh``.
    """
    e = la.as_hermitian(e, rtol=1e-10)
    if e.shape[0] != f.dim:
        raise ArgumentError(f"witness dimension {e.shape[0]} != free-set dimension {f.dim}")
    if isinstance(f, PolytopeFreeSet):
        vals = [la.inner(e, g) for g in f.generators]
        i = int(np.argmax(vals))
        return WitnessMax(vals[i], i, f.generators[i])
    best = None
    for i, alpha in enumerate(f.a_generators):
        red = la.ptrace_first(np.kron(alpha, np.eye(f.dim_c)) @ e, f.dim_a, f.dim_c)
        w, v = np.linalg.eigh(la.hermitian_part(red))
        if best is None or w[-1] > best[0]:
            best = (float(w[-1]), i, v[:, -1])
    val, i, vec = best
    beta = np.outer(vec, vec.conj())
    return WitnessMax(val, i, np.kron(f.a_generators[i], beta), beta)


def apply_channel_closure(f: PolytopeFreeSet, channels: Sequence[ch.CPMap],
                          dim_a: int, dim_c: int) -> PolytopeFreeSet:
    """Add ``(id_A (x) E)(omega)`` for every generator and listed channel on C.

    The result is an inner approximation of the channel closure; robustness
    against it is an upper bound on robustness against the full closure.
    """
    if dim_a * dim_c != f.dim:
        raise ArgumentError(f"dims {dim_a}x{dim_c} do not match free-set dimension {f.dim}")
    swap_levels = [dim_a, dim_c]
    gens = list(f.generators)
    for chan in channels:
        if chan.kind != "cptp" or chan.in_dim != dim_c or chan.out_dim != dim_c:
            raise ArgumentError("closure channels must be CPTP maps on C")
        for g in f.generators:
            # (id_A (x) E)(g) = swap o (E (x) id_A) o swap
            sw = la.permute_subsystems(g, swap_levels, [1, 0])
            out = ch.apply_with_ancilla(chan, sw, dim_a)
            out = la.permute_subsystems(out, [dim_c, dim_a], [1, 0])
            out = la.hermitian_part(out)
            if not any(la.max_abs(out - h) <= 1e-12 for h in gens):
                gens.append(out)
    return PolytopeFreeSet(tuple(gens))
