"""Dense complex matrix algebra with tensor-site bookkeeping.

Sites are indexed from 0 and site 0 is the leftmost (most significant)
tensor factor, so ``|pqr>`` has ``p`` on site 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

STATE_TOL = 1e-10
SPECTRAL_TOL = 1e-9


def max_asymmetry(m: np.ndarray) -> float:
    """Largest entrywise ``|M - M^dagger|``."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def _as_square(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class SystemShape:
    local_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if not dims:
            raise ValueError("a system needs at least one site")
        if any(d < 2 for d in dims):
            raise ValueError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "local_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "SystemShape":
        return cls((2,) * n)

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    @property
    def total_dim(self) -> int:
        return prod(self.local_dims)

    def check_sites(self, sites: Iterable[int]) -> tuple[int, ...]:
        sites = tuple(int(s) for s in sites)
        for s in sites:
            if not 0 <= s < self.n_sites:
                raise ValueError(f"site {s} out of range for {self.n_sites} sites")
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site in {sites}")
        return sites


class HermitianOperator:
    """A Hermitian matrix on a multi-site system; not necessarily positive."""

    __slots__ = ("shape", "matrix")

    def __init__(self, shape: SystemShape, matrix, tol: float = STATE_TOL):
        m = _as_square(matrix)
        if m.shape[0] != shape.total_dim:
            raise ValueError(
                f"matrix dimension {m.shape[0]} does not match shape {shape.local_dims}")
        asym = max_asymmetry(m)
        if asym > tol:
            raise ValueError(f"operator is not Hermitian: max |M - M^dag| = {asym:.3e}")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self.shape = shape
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def scaled(self, alpha: float) -> "HermitianOperator":
        return HermitianOperator(self.shape, alpha * self.matrix)

    def __repr__(self):
        return f"{type(self).__name__}(local_dims={self.shape.local_dims})"


class DensityOperator(HermitianOperator):
    """Unit-trace positive semidefinite operator with site structure."""

    __slots__ = ()

    def __init__(self, shape: SystemShape, matrix, tol: float = STATE_TOL):
        super().__init__(shape, matrix, tol)
        tr = np.trace(self.matrix).real
        if abs(tr - 1.0) > tol:
            raise ValueError(f"density operator must have unit trace, got {tr:.12g}")
        lam_min = float(np.linalg.eigvalsh(self.matrix)[0])
        if lam_min < -tol:
            raise ValueError(f"density operator is not PSD: min eigenvalue {lam_min:.3e}")

    @classmethod
    def from_ket(cls, shape: SystemShape, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(shape, np.outer(psi, psi.conj()))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def eig_hermitian(h, tol: float = STATE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Ascending real eigenvalues and orthonormal eigenvectors (as columns).

    Raises ``ValueError`` reporting the max asymmetry when ``h`` is not
    Hermitian within ``tol``.
    """
    m = h.matrix if isinstance(h, HermitianOperator) else _as_square(h)
    asym = max_asymmetry(m)
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian: max |M - M^dag| = {asym:.3e}")
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def power_sums(eigenvalues, n_max: int) -> np.ndarray:
    """``[sum(lam**1), ..., sum(lam**n_max)]``."""
    lam = np.asarray(eigenvalues, dtype=float)
    powers = np.cumprod(np.broadcast_to(lam, (n_max, lam.size)), axis=0)
    return powers.sum(axis=1)


def trace_power(h, n: int) -> float:
    """``Tr[h^n]`` as the power sum of the spectrum."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lam, _ = eig_hermitian(h)
    return float(power_sums(lam, n)[-1])


def partial_trace(rho: HermitianOperator, keep: Iterable[int]):
    """Reduce ``rho`` to the sites in ``keep`` (kept in ascending order)."""
    shape = rho.shape
    keep = sorted(shape.check_sites(keep))
    if not keep:
        raise ValueError("keep set must be non-empty")
    n = shape.n_sites
    dims = shape.local_dims
    t = rho.matrix.reshape(dims + dims)
    row = list(range(n))
    col = [k if k not in keep else n + k for k in range(n)]
    out = [k for k in keep] + [n + k for k in keep]
    reduced = np.einsum(t, row + col, out)
    kdims = tuple(dims[k] for k in keep)
    d = prod(kdims)
    cls = DensityOperator if isinstance(rho, DensityOperator) else HermitianOperator
    return cls(SystemShape(kdims), reduced.reshape(d, d))


def embed_site_operator(op, sites: Sequence[int], shape: SystemShape) -> np.ndarray:
    """Full-space matrix acting as ``op`` on ``sites`` (in that order), identity elsewhere."""
    sites = shape.check_sites(sites)
    op = np.asarray(op, dtype=complex)
    sub = prod(shape.local_dims[s] for s in sites)
    if op.shape != (sub, sub):
        raise ValueError(f"operator shape {op.shape} does not match sites {sites} (dim {sub})")
    rest = [k for k in range(shape.n_sites) if k not in sites]
    rest_dim = prod(shape.local_dims[k] for k in rest)
    full = np.kron(op, np.eye(rest_dim))
    order = list(sites) + rest
    dims = [shape.local_dims[k] for k in order]
    n = shape.n_sites
    t = full.reshape(dims + dims)
    # axis i of t holds site order[i]; invert that.
    inv = [order.index(k) for k in range(n)]
    t = t.transpose(inv + [n + i for i in inv])
    d = shape.total_dim
    return t.reshape(d, d)
