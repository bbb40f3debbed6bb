"""Single-site positive maps and their action on chosen sites of a state.

A map is stored as its ``d^2 x d^2`` superoperator ``S`` in the
column-stacking convention ``vec(L(X)) = S @ vec(X)``, where ``vec``
stacks the columns of ``X``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .qcore import STATE_TOL, HermitianOperator, SystemShape, max_asymmetry

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def vec(x) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape(-1, order="F")


def unvec(v, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


def matrix_unit(d: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def superoperator_from(fn: Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    """Tabulate a linear map on ``d x d`` matrices over the matrix-unit basis."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for i in range(d):
            s[:, i + j * d] = vec(fn(matrix_unit(d, i, j)))
    return s


def _choi_matrix(superop: np.ndarray, d: int) -> np.ndarray:
    c = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            out = unvec(superop @ vec(matrix_unit(d, i, j)), d)
            c += np.kron(matrix_unit(d, i, j), out)
    return c / d


@dataclass(frozen=True, eq=False)
class SingleSiteMap:
    """Hermiticity-preserving linear map on one ``d``-dimensional site.

    ``kind`` names the underlying map before any post-unitary
    ("transposition", "reduction", "identity" or "custom"); it lets
    callers look up known constants such as the minimum output eigenvalue.
    """

    dim: int
    superoperator: np.ndarray
    label: str
    kind: str = "custom"
    post_unitary: np.ndarray | None = None
    trace_preserving: bool = field(init=False)

    def __post_init__(self):
        d = int(self.dim)
        s = np.array(self.superoperator, dtype=complex)
        if s.shape != (d * d, d * d):
            raise ValueError(f"superoperator must be {d * d}x{d * d}, got {s.shape}")
        asym = max_asymmetry(_choi_matrix(s, d))
        if asym > STATE_TOL:
            raise ValueError(f"map {self.label!r} is not Hermiticity preserving "
                             f"(Choi asymmetry {asym:.3e})")
        s.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "superoperator", s)
        # Tr[L(E_ij)] == Tr[E_ij] on every matrix unit
        tr_row = vec(np.eye(d)).conj() @ s
        tp = bool(np.allclose(tr_row, vec(np.eye(d)).conj(), atol=1e-12))
        object.__setattr__(self, "trace_preserving", tp)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return unvec(self.superoperator @ vec(x), self.dim)

    def tensor(self) -> np.ndarray:
        """Superoperator as ``T[i_out, j_out, i_in, j_in]`` with ``X[i, j]`` indexing."""
        d = self.dim
        # column stacking: flat index i + j*d, so C-order reshape yields (j, i)
        return self.superoperator.reshape(d, d, d, d).transpose(1, 0, 3, 2)

    def equals(self, other: "SingleSiteMap", atol: float = 1e-12) -> bool:
        return self.dim == other.dim and np.allclose(
            self.superoperator, other.superoperator, rtol=0, atol=atol)


@dataclass(frozen=True)
class LindbladSpec:
    gammas: tuple[float, float, float]

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        if len(g) != 3 or not all(np.isfinite(g)):
            raise ValueError(f"need three finite Lindblad coefficients, got {self.gammas}")
        object.__setattr__(self, "gammas", g)


def _check_dim(d: int):
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")


def identity_map(d: int = 2) -> SingleSiteMap:
    _check_dim(d)
    return SingleSiteMap(d, np.eye(d * d), "identity", kind="identity")


def transposition_map(d: int = 2) -> SingleSiteMap:
    _check_dim(d)
    return SingleSiteMap(d, superoperator_from(lambda x: x.T, d), "transposition",
                         kind="transposition")


def reduction_map(d: int = 2) -> SingleSiteMap:
    _check_dim(d)
    s = superoperator_from(lambda x: np.trace(x) * np.eye(d) - x, d)
    return SingleSiteMap(d, s, "reduction", kind="reduction")


def _classify(superop: np.ndarray, d: int) -> str:
    for ref in (transposition_map(d), reduction_map(d), identity_map(d)):
        if np.allclose(superop, ref.superoperator, rtol=0, atol=1e-12):
            return ref.kind
    return "custom"


def from_lindblad(spec: LindbladSpec | Iterable[float]) -> SingleSiteMap:
    """Qubit map ``X -> X + sum_i g_i (s_i X s_i - X)`` built from Pauli generators."""
    if not isinstance(spec, LindbladSpec):
        spec = LindbladSpec(tuple(spec))
    paulis = (PAULI["x"], PAULI["y"], PAULI["z"])

    def generated(x):
        out = x.copy()
        for g, s in zip(spec.gammas, paulis):
            out = out + g * (s @ x @ s.conj().T - 0.5 * (s.conj().T @ s @ x + x @ s.conj().T @ s))
        return out

    s = superoperator_from(generated, 2)
    g1, g2, g3 = spec.gammas
    return SingleSiteMap(2, s, f"lindblad({g1:g},{g2:g},{g3:g})", kind=_classify(s, 2))


def _is_unitary(u: np.ndarray, tol: float = STATE_TOL) -> bool:
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def compose_unitary_after(m: SingleSiteMap, u, name: str | None = None) -> SingleSiteMap:
    """The map ``X -> U L(X) U^dag``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (m.dim, m.dim):
        raise ValueError(f"unitary must be {m.dim}x{m.dim}, got {u.shape}")
    if not _is_unitary(u):
        raise ValueError("post-map operator is not unitary")
    # vec(U Y U^dag) = (conj(U) kron U) vec(Y)
    s = np.kron(u.conj(), u) @ m.superoperator
    prior = m.post_unitary if m.post_unitary is not None else np.eye(m.dim)
    label = f"{name or 'U'}∘{m.label}"
    return SingleSiteMap(m.dim, s, label, kind=m.kind, post_unitary=u @ prior)


def apply_on_sites(m: SingleSiteMap, sites: Iterable[int], rho) -> HermitianOperator:
    """Apply ``m`` on each listed site and the identity elsewhere."""
    shape = rho.shape
    sites = shape.check_sites(sites)
    for s in sites:
        if shape.local_dims[s] != m.dim:
            raise ValueError(f"site {s} has dimension {shape.local_dims[s]}, "
                             f"map acts on dimension {m.dim}")
    out = apply_matrix(m, sites, rho.matrix, shape)
    return HermitianOperator(shape, out)


def apply_matrix(m: SingleSiteMap, sites: tuple[int, ...], matrix: np.ndarray,
                 shape: SystemShape) -> np.ndarray:
    """Unchecked core of :func:`apply_on_sites` on a raw matrix."""
    if not sites:
        return np.array(matrix, dtype=complex)
    n = shape.n_sites
    dims = shape.local_dims
    t = np.asarray(matrix).reshape(dims + dims)
    kernel = m.tensor()
    for s in sites:
        # contract the (row s, col s) index pair with T[a, b, i, j]
        t = np.tensordot(kernel, t, axes=([2, 3], [s, n + s]))
        # new leading axes (a, b) go back to positions s and n + s
        t = np.moveaxis(t, [0, 1], [s, n + s])
    d = shape.total_dim
    return t.reshape(d, d)


def choi(m: SingleSiteMap) -> HermitianOperator:
    """``(id ⊗ L)|phi+><phi+|`` with ``|phi+> = sum_i |ii> / sqrt(d)``."""
    return HermitianOperator(SystemShape((m.dim, m.dim)), _choi_matrix(m.superoperator, m.dim))


def is_completely_positive(m: SingleSiteMap, tol: float = STATE_TOL) -> bool:
    return bool(np.linalg.eigvalsh(choi(m).matrix)[0] >= -tol)
