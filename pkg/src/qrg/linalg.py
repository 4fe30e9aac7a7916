"""Dense complex Hermitian linear algebra.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  The
helpers here validate the usual invariants (Hermitian, PSD, unit trace,
unitary) and implement the tensor calculus used by the rest of the package.

Basis labels exposed through the API are 1-based: ``basis_ket(1, d)`` is the
first computational basis vector.  Storage is the usual 0-based numpy layout.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, InstanceTooLargeError, NumericalError

#: Largest total dimension any tensor product may reach.
MAX_TOTAL_DIM = 4096
#: Default cap on the number of outcomes/levels of compiled games.
DEFAULT_N_MAX = 256

HERMITIAN_RTOL = 1e-12
DENSITY_TOL = 1e-10
UNITARY_TOL = 1e-10
PSD_RTOL = 1e-9


def n_max() -> int:
    """Game-size cap, overridable with the ``QRG_NMAX`` environment variable."""
    raw = os.environ.get("QRG_NMAX")
    if raw is None:
        return DEFAULT_N_MAX
    try:
        value = int(raw)
    except ValueError as exc:
        raise ArgumentError(f"QRG_NMAX must be an integer, got {raw!r}") from exc
    if value < 2:
        raise ArgumentError("QRG_NMAX must be at least 2")
    return value


# --------------------------------------------------------------------------
# validation


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ArgumentError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ArgumentError("matrix has non-finite entries")
    return a


def max_abs(m) -> float:
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def is_hermitian(m, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(m, dtype=complex)
    return max_abs(a - a.conj().T) <= rtol * max(1.0, max_abs(a))


def as_hermitian(m, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate Hermiticity and return the exactly Hermitian part."""
    a = as_matrix(m)
    if not is_hermitian(a, rtol):
        raise ArgumentError(
            f"matrix is not Hermitian (residual {max_abs(a - a.conj().T):.3e})"
        )
    return hermitian_part(a)


def hermitian_part(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    return (a + a.conj().T) / 2


def psd_tolerance(m) -> float:
    return PSD_RTOL * max(1.0, spectral_norm(m))


def is_psd(m, tol: float | None = None) -> bool:
    h = hermitian_part(m)
    if tol is None:
        tol = psd_tolerance(h)
    return min_eigenvalue(h) >= -tol


def as_density(m, tol: float = DENSITY_TOL) -> np.ndarray:
    h = as_hermitian(m)
    lam = min_eigenvalue(h)
    if lam < -tol:
        raise ArgumentError(f"density matrix has negative eigenvalue {lam:.3e}")
    tr = np.trace(h).real
    if abs(tr - 1.0) > tol:
        raise ArgumentError(f"density matrix has trace {tr!r}")
    return h


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    a = as_matrix(u)
    res = max_abs(a.conj().T @ a - np.eye(a.shape[0]))
    if res > tol:
        raise ArgumentError(f"matrix is not unitary (residual {res:.3e})")
    return a


# --------------------------------------------------------------------------
# spectra


def _eigvalsh(h) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(hermitian_part(h))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigensolver did not converge: {exc}") from exc


def min_eigenvalue(h) -> float:
    return float(_eigvalsh(h)[0])


def max_eigenvalue(h) -> float:
    return float(_eigvalsh(h)[-1])


def spectral_norm(m) -> float:
    a = np.asarray(m, dtype=complex)
    if is_hermitian(a):
        w = _eigvalsh(a)
        return float(max(abs(w[0]), abs(w[-1])))
    return float(np.linalg.norm(a, 2))


def trace_norm(h) -> float:
    return float(np.sum(np.abs(_eigvalsh(h))))


def psd_sqrt(h) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(h))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_inv_sqrt(h, floor: float = 1e-300) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(h))
    if w[0] <= floor:
        raise NumericalError("matrix is singular; inverse square root undefined")
    return (v / np.sqrt(w)) @ v.conj().T


def psd_projection(h) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (clip negative eigenvalues)."""
    w, v = np.linalg.eigh(hermitian_part(h))
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


# --------------------------------------------------------------------------
# tensor calculus


def kron(a, b, cap: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    cap = MAX_TOTAL_DIM if cap is None else cap
    if a.shape[0] * b.shape[0] > cap:
        raise InstanceTooLargeError(
            f"tensor product dimension {a.shape[0] * b.shape[0]} exceeds cap {cap}"
        )
    return np.kron(a, b)


def kron_all(*ms, cap: int | None = None) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in ms:
        out = kron(out, m, cap=cap)
    return out


@dataclass(frozen=True)
class DimensionProfile:
    """Ordered labelled subsystem dimensions, e.g. ``A:2, C:3``."""

    labels: tuple
    levels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        levels = tuple(int(v) for v in self.levels)
        if len(labels) != len(levels) or not labels:
            raise ArgumentError("labels and levels must be non-empty and equal length")
        if len(set(labels)) != len(labels):
            raise ArgumentError(f"duplicate subsystem labels {labels}")
        if any(v < 1 for v in levels):
            raise ArgumentError(f"every level must be >= 1, got {levels}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def of(cls, **levels) -> "DimensionProfile":
        return cls(tuple(levels), tuple(levels.values()))

    @property
    def total(self) -> int:
        return int(np.prod(self.levels))

    def level(self, label) -> int:
        return self.levels[self.index(label)]

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ArgumentError(f"unknown subsystem label {label!r}") from None


def partial_trace(m, profile: DimensionProfile, keep: Iterable) -> np.ndarray:
    """Trace out every subsystem of ``profile`` not listed in ``keep``.

    Kept subsystems stay in profile order.  Keeping nothing returns the
    scalar trace as a 1x1 matrix.
    """
    a = np.asarray(m, dtype=complex)
    if a.shape != (profile.total, profile.total):
        raise ArgumentError(
            f"matrix shape {a.shape} does not match profile total {profile.total}"
        )
    keep_idx = sorted({profile.index(lbl) for lbl in keep})
    k = len(profile.levels)
    t = a.reshape(profile.levels + profile.levels)
    # einsum subscripts: row axes 0..k-1, column axes k..2k-1
    row = list(range(k))
    col = [i + k if i in keep_idx else i for i in range(k)]
    out_sub = [i for i in keep_idx] + [i + k for i in keep_idx]
    r = np.einsum(t, row + col, out_sub)
    d = int(np.prod([profile.levels[i] for i in keep_idx])) if keep_idx else 1
    return np.asarray(r).reshape(d, d)


def ptrace_last(m, d_first: int, d_last: int) -> np.ndarray:
    """Trace out the second factor of a bipartite operator."""
    t = np.asarray(m, dtype=complex).reshape(d_first, d_last, d_first, d_last)
    return np.einsum("ijkj->ik", t)


def ptrace_first(m, d_first: int, d_last: int) -> np.ndarray:
    """Trace out the first factor of a bipartite operator."""
    t = np.asarray(m, dtype=complex).reshape(d_first, d_last, d_first, d_last)
    return np.einsum("ijil->jl", t)


def permute_subsystems(m, levels: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator: new factor ``k`` is old ``order[k]``."""
    levels = list(levels)
    k = len(levels)
    t = np.asarray(m, dtype=complex).reshape(levels + levels)
    t = t.transpose(list(order) + [k + i for i in order])
    d = int(np.prod(levels))
    return t.reshape(d, d)


# --------------------------------------------------------------------------
# named operators


def basis_ket(n: int, d: int) -> np.ndarray:
    """Computational basis vector |n>, 1-based."""
    if not 1 <= n <= d:
        raise ArgumentError(f"basis label {n} outside 1..{d}")
    v = np.zeros(d, dtype=complex)
    v[n - 1] = 1.0
    return v


def basis_projector(n: int, d: int) -> np.ndarray:
    v = basis_ket(n, d)
    return np.outer(v, v.conj())


def mod_index(n: int, modulus: int) -> int:
    """Representative of ``n`` in ``{1, ..., modulus}``."""
    if modulus < 1:
        raise ArgumentError("modulus must be positive")
    return (int(n) - 1) % modulus + 1


def generalized_pauli(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Shift and clock matrices with X|n> = |n+1> and Z|n> = exp(2 pi i n/d)|n>.

    Labels run over ``n = 1..d`` so, e.g., for ``d = 2`` the clock matrix is
    ``diag(-1, 1)``.
    """
    if d < 1:
        raise ArgumentError("dimension must be positive")
    x = np.zeros((d, d), dtype=complex)
    for n in range(1, d + 1):
        x[mod_index(n + 1, d) - 1, n - 1] = 1.0
    phases = np.exp(2j * np.pi * np.arange(1, d + 1) / d)
    # exact values for the common real phases
    phases = np.where(np.isclose(phases, 1.0, atol=1e-15), 1.0, phases)
    phases = np.where(np.isclose(phases, -1.0, atol=1e-15), -1.0, phases)
    z = np.diag(phases).astype(complex)
    return x, z


def weyl(q: int, r: int, d: int) -> np.ndarray:
    """``X^q Z^r`` for the generalized Pauli pair of order ``d``."""
    x, z = generalized_pauli(d)
    return np.linalg.matrix_power(x, q % d) @ np.linalg.matrix_power(z, r % d)


def max_entangled(d: int) -> np.ndarray:
    """Unnormalised maximally entangled projector ``|Phi><Phi|`` with
    ``|Phi> = sum_n |n>|n>``; its trace is ``d``."""
    if d < 1:
        raise ArgumentError("dimension must be positive")
    v = np.eye(d, dtype=complex).reshape(d * d)
    return np.outer(v, v)


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of d x d Hermitian matrices, shape (d*d, d, d)."""
    out = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1.0
        out.append(e)
    s = 1 / np.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = s
            out.append(e)
            f = np.zeros((d, d), dtype=complex)
            f[j, k] = -1j * s
            f[k, j] = 1j * s
            out.append(f)
    return np.array(out)


def hermitian_coords(h, basis: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("kij,ij->k", basis.conj(), np.asarray(h, dtype=complex)))


def inner(a, b) -> float:
    """Real part of ``Tr(a b)`` for Hermitian arguments."""
    return float(np.real(np.einsum("ij,ji->", a, b)))


# --------------------------------------------------------------------------
# random draws (seeded through a numpy Generator)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def default_spectrum(d: int) -> np.ndarray:
    # (0.6, 0.3, 0.1, 0.1/3, 0.1/9, ...) truncated to d and renormalised
    s = np.array([0.6, 0.3, 0.1] + [0.1 / 3**k for k in range(1, max(d - 2, 1))])[:d]
    return s / s.sum()


def random_density(d: int, rng: np.random.Generator, spectrum=None) -> np.ndarray:
    """Fixed spectrum conjugated by a Haar-random unitary."""
    s = default_spectrum(d) if spectrum is None else np.asarray(spectrum, dtype=float)
    if s.shape != (d,) or np.any(s < 0):
        raise ArgumentError("spectrum must be a non-negative vector of length d")
    s = s / s.sum()
    u = random_unitary(d, rng)
    return hermitian_part((u * s) @ u.conj().T)


def random_ginibre_density(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = g @ g.conj().T
    return hermitian_part(r / np.trace(r).real)


# --------------------------------------------------------------------------
# JSON


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=complex)
    return {
        "dim": int(a.shape[0]),
        "re": [[float(x) for x in row] for row in a.real],
        "im": [[float(x) for x in row] for row in a.imag],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArgumentError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ArgumentError(
            f"matrix JSON declares dim {dim} but has shapes {re.shape}, {im.shape}"
        )
    return as_matrix(re + 1j * im)
