"""Completely positive maps in Choi form, measurements, and subchannels.

Choi convention (input tensor output)::

    J = sum_{i,j} |i><j| (x) L(|i><j|)

so that ``L(rho) = Tr_in[(rho^T (x) I) J]``.  Worked 2x2 example: the
identity channel on a qubit has ``J = |Phi><Phi|`` with
``|Phi> = |11> + |22>``, i.e. ones at the four corners of the 4x4 matrix.

The kind of a map (``"cptp"``, ``"tni"`` or ``"cp"``) is always re-derived
from the Choi matrix; a declared kind that does not hold is downgraded and
the downgrade is recorded in ``CPMap.notes``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg as la
from .errors import ArgumentError

KINDS = ("cp", "tni", "cptp")
_RANK = {k: i for i, k in enumerate(KINDS)}

TP_TOL = 1e-9


def weakest(*kinds: str) -> str:
    return min(kinds, key=_RANK.__getitem__)


def classify_choi(choi: np.ndarray, in_dim: int, out_dim: int) -> tuple[str, dict]:
    """Return the strongest kind the Choi matrix satisfies plus the residuals."""
    lam = la.min_eigenvalue(choi)
    tol = la.psd_tolerance(choi)
    if lam < -tol:
        raise ArgumentError(f"Choi matrix is not PSD (min eigenvalue {lam:.3e})")
    marg = la.ptrace_last(choi, in_dim, out_dim)
    tp_res = la.max_abs(marg - np.eye(in_dim))
    tni_margin = la.min_eigenvalue(np.eye(in_dim) - marg)
    report = {"choi_min_eig": lam, "tp_residual": tp_res, "tni_margin": tni_margin}
    if tp_res <= TP_TOL:
        return "cptp", report
    if tni_margin >= -TP_TOL:
        return "tni", report
    return "cp", report


@dataclass(frozen=True, eq=False)
class CPMap:
    in_dim: int
    out_dim: int
    choi: np.ndarray
    kind: str | None = None
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        in_dim, out_dim = int(self.in_dim), int(self.out_dim)
        if in_dim < 1 or out_dim < 1:
            raise ArgumentError("map dimensions must be positive")
        choi = la.as_hermitian(self.choi, rtol=1e-10)
        if choi.shape[0] != in_dim * out_dim:
            raise ArgumentError(
                f"Choi matrix of size {choi.shape[0]} does not match {in_dim}x{out_dim}"
            )
        actual, report = classify_choi(choi, in_dim, out_dim)
        notes = tuple(self.notes)
        declared = self.kind
        if declared is not None:
            declared = declared.lower()
            if declared not in KINDS:
                raise ArgumentError(f"unknown map kind {self.kind!r}")
            if _RANK[declared] > _RANK[actual]:
                msg = f"declared kind {declared} does not hold; downgraded to {actual}"
                warnings.warn(msg, stacklevel=3)
                notes = notes + (msg,)
        object.__setattr__(self, "in_dim", in_dim)
        object.__setattr__(self, "out_dim", out_dim)
        object.__setattr__(self, "choi", choi)
        object.__setattr__(self, "kind", actual)
        object.__setattr__(self, "notes", notes)
        object.__setattr__(self, "_report", report)

    @property
    def report(self) -> dict:
        return dict(self._report)

    def satisfies(self, kind: str) -> bool:
        return _RANK[self.kind] >= _RANK[kind.lower()]

    def __call__(self, state) -> np.ndarray:
        return apply(self, state)

    def to_json(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "choi": la.matrix_to_json(self.choi),
            "kind": self.kind,
        }

    @classmethod
    def from_json(cls, obj) -> "CPMap":
        try:
            return cls(
                int(obj["in_dim"]),
                int(obj["out_dim"]),
                la.matrix_from_json(obj["choi"]),
                obj.get("kind"),
            )
        except KeyError as exc:
            raise ArgumentError(f"CP map JSON missing field {exc}") from exc


def _choi4(m: CPMap) -> np.ndarray:
    return m.choi.reshape(m.in_dim, m.out_dim, m.in_dim, m.out_dim)


# --------------------------------------------------------------------------
# constructors


def from_function(f: Callable[[np.ndarray], np.ndarray], in_dim: int, out_dim: int,
                  kind: str | None = None) -> CPMap:
    """Build the Choi matrix of a linear map by evaluating it on matrix units."""
    j = np.zeros((in_dim, out_dim, in_dim, out_dim), dtype=complex)
    for a in range(in_dim):
        for b in range(in_dim):
            unit = np.zeros((in_dim, in_dim), dtype=complex)
            unit[a, b] = 1.0
            j[a, :, b, :] = np.asarray(f(unit), dtype=complex).reshape(out_dim, out_dim)
    return CPMap(in_dim, out_dim, j.reshape(in_dim * out_dim, in_dim * out_dim), kind)


def from_kraus(kraus: Sequence, in_dim: int, out_dim: int) -> CPMap:
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    if not ops:
        raise ArgumentError("at least one Kraus operator is required")
    for k in ops:
        if k.shape != (out_dim, in_dim):
            raise ArgumentError(
                f"Kraus operator shape {k.shape} != ({out_dim}, {in_dim})"
            )
    phi = np.eye(in_dim, dtype=complex).reshape(in_dim * in_dim)
    choi = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=complex)
    for k in ops:
        v = np.kron(np.eye(in_dim), k) @ phi
        choi += np.outer(v, v.conj())
    return CPMap(in_dim, out_dim, choi)


def identity_map(d: int) -> CPMap:
    return CPMap(d, d, la.max_entangled(d))


def unitary_map(u) -> CPMap:
    u = la.check_unitary(u)
    d = u.shape[0]
    return from_kraus([u], d, d)


def depolarizing_map(d: int) -> CPMap:
    """Completely depolarising channel ``rho -> Tr(rho) I/d``."""
    return CPMap(d, d, np.eye(d * d, dtype=complex) / d)


def functional_map(e) -> CPMap:
    """Scalar-output map ``sigma -> Tr(e sigma)`` (CP iff ``e >= 0``)."""
    e = la.as_hermitian(e)
    return CPMap(e.shape[0], 1, e.T.copy())


def trace_map(d: int) -> CPMap:
    return functional_map(np.eye(d))


def preparation_map(state) -> CPMap:
    """One-dimensional-input map ``1 -> state``."""
    s = la.as_hermitian(state)
    return CPMap(1, s.shape[0], s)


def scaled(m: CPMap, c: float) -> CPMap:
    if c < 0:
        raise ArgumentError("scale factor must be non-negative")
    return CPMap(m.in_dim, m.out_dim, c * m.choi)


def map_sum(maps: Sequence[CPMap]) -> CPMap:
    first = maps[0]
    for m in maps:
        if (m.in_dim, m.out_dim) != (first.in_dim, first.out_dim):
            raise ArgumentError("cannot add maps with different dimensions")
    return CPMap(first.in_dim, first.out_dim, sum(m.choi for m in maps))


# --------------------------------------------------------------------------
# operations


def apply(m: CPMap, state) -> np.ndarray:
    s = np.asarray(state, dtype=complex)
    if s.shape != (m.in_dim, m.in_dim):
        raise ArgumentError(f"state shape {s.shape} does not match map input {m.in_dim}")
    return np.einsum("ij,ibjc->bc", s, _choi4(m))


def apply_with_ancilla(m: CPMap, state, ancilla_dim: int) -> np.ndarray:
    """``(m (x) id_C)(state)`` for ``state`` on ``in (x) C``."""
    s = np.asarray(state, dtype=complex)
    dc = int(ancilla_dim)
    if s.shape != (m.in_dim * dc, m.in_dim * dc):
        raise ArgumentError(
            f"state shape {s.shape} does not match input {m.in_dim} with ancilla {dc}"
        )
    s4 = s.reshape(m.in_dim, dc, m.in_dim, dc)
    out = np.einsum("acAC,abAB->bcBC", s4, _choi4(m))
    d = m.out_dim * dc
    return out.reshape(d, d)


def apply_adjoint(m: CPMap, y) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.shape != (m.out_dim, m.out_dim):
        raise ArgumentError(f"operator shape {y.shape} does not match map output {m.out_dim}")
    return np.einsum("cb,ibjc->ji", y, _choi4(m))


def apply_adjoint_with_ancilla(m: CPMap, y, ancilla_dim: int) -> np.ndarray:
    """``(m (x) id_C)^dagger(y)`` for ``y`` on ``out (x) C``."""
    dc = int(ancilla_dim)
    y4 = np.asarray(y, dtype=complex).reshape(m.out_dim, dc, m.out_dim, dc)
    # Tr[y (m (x) id)(s)] = sum s[a,c,A,C] J[a,b,A,B] y[B,C,b,c]
    out = np.einsum("abAB,BCbc->acAC", _choi4(m), y4)
    d = m.in_dim * dc
    # out[a,c,A,C] multiplies s[a,c,A,C]; the adjoint is its transpose
    return out.reshape(d, d).T


def tensor(a: CPMap, b: CPMap) -> CPMap:
    k = np.kron(a.choi, b.choi)
    k = la.permute_subsystems(k, [a.in_dim, a.out_dim, b.in_dim, b.out_dim], [0, 2, 1, 3])
    return CPMap(a.in_dim * b.in_dim, a.out_dim * b.out_dim, k, weakest(a.kind, b.kind))


def adjoint(m: CPMap) -> CPMap:
    return from_function(lambda y: apply_adjoint(m, y), m.out_dim, m.in_dim)


def compose(second: CPMap, first: CPMap) -> CPMap:
    """``second o first``."""
    if first.out_dim != second.in_dim:
        raise ArgumentError(
            f"cannot compose: output {first.out_dim} != input {second.in_dim}"
        )
    return from_function(lambda x: apply(second, apply(first, x)),
                         first.in_dim, second.out_dim, weakest(first.kind, second.kind))


def conjugate_output(m: CPMap, u) -> CPMap:
    """``U m(.) U^dagger`` computed on the Choi matrix."""
    big = np.kron(np.eye(m.in_dim), u)
    return CPMap(m.in_dim, m.out_dim, big @ m.choi @ big.conj().T, m.kind)


def choi_distance(a: CPMap, b: CPMap) -> float:
    return la.spectral_norm(a.choi - b.choi)


# --------------------------------------------------------------------------
# measurements and subchannels


@dataclass(frozen=True, eq=False)
class Measurement:
    effects: tuple
    labels: tuple = ()

    def __post_init__(self):
        effects = tuple(la.as_hermitian(e, rtol=1e-10) for e in self.effects)
        if not effects:
            raise ArgumentError("a measurement needs at least one effect")
        d = effects[0].shape[0]
        if any(e.shape != (d, d) for e in effects):
            raise ArgumentError("all effects must share a dimension")
        labels = tuple(self.labels) if self.labels else tuple(range(1, len(effects) + 1))
        if len(labels) != len(effects):
            raise ArgumentError("one label per effect is required")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self):
        return len(self.effects)

    def __getitem__(self, i):
        return self.effects[i]

    def to_json(self) -> dict:
        return {
            "labels": [list(l) if isinstance(l, tuple) else l for l in self.labels],
            "effects": [la.matrix_to_json(e) for e in self.effects],
        }

    @classmethod
    def from_json(cls, obj) -> "Measurement":
        labels = tuple(tuple(l) if isinstance(l, list) else l for l in obj.get("labels", ()))
        return cls(tuple(la.matrix_from_json(e) for e in obj["effects"]), labels)


@dataclass(frozen=True)
class PovmReport:
    min_eigenvalues: tuple
    identity_residual: float
    passed: bool


POVM_TOL = 1e-9


def validate_povm(m: Measurement, tol: float = POVM_TOL) -> PovmReport:
    mins = tuple(la.min_eigenvalue(e) for e in m.effects)
    total = sum(m.effects)
    res = la.spectral_norm(total - np.eye(m.dim))
    passed = res <= tol and all(v >= -tol for v in mins)
    return PovmReport(mins, res, bool(passed))


def computational_povm(d: int) -> Measurement:
    return Measurement(tuple(la.basis_projector(n, d) for n in range(1, d + 1)))


@dataclass(frozen=True, eq=False)
class SubchannelCollection:
    maps: tuple

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ArgumentError("subchannel collection is empty")
        dims = {(m.in_dim, m.out_dim) for m in maps}
        if len(dims) != 1:
            raise ArgumentError("subchannels must share input/output dimensions")
        total = map_sum(maps)
        if total.kind != "cptp":
            raise ArgumentError(
                f"subchannels do not sum to a channel (TP residual "
                f"{total.report['tp_residual']:.3e})"
            )
        object.__setattr__(self, "maps", maps)

    @property
    def in_dim(self) -> int:
        return self.maps[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.maps[0].out_dim

    def __len__(self):
        return len(self.maps)

    def __getitem__(self, i) -> CPMap:
        return self.maps[i]

    def total(self) -> CPMap:
        return map_sum(self.maps)
