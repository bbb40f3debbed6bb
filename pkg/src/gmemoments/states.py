"""State factories: GHZ/W families, noise mixtures, Werner states and random generators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gme import canonical_bipartitions
from .qcore import DensityOperator, SystemShape


def _basis_ket(n: int, bits: str) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def ghz(n: int) -> DensityOperator:
    """``(|0...0> + |1...1>)/sqrt(2)`` on ``n`` qubits."""
    if n < 2:
        raise ValueError("GHZ needs n >= 2")
    psi = _basis_ket(n, "0" * n) + _basis_ket(n, "1" * n)
    return DensityOperator.from_ket(SystemShape.qubits(n), psi)


def w_state(n: int) -> DensityOperator:
    """Equal superposition of the ``n`` single-excitation basis states."""
    if n < 3:
        raise ValueError("W state needs n >= 3")
    psi = sum(_basis_ket(n, "0" * k + "1" + "0" * (n - k - 1)) for k in range(n))
    return DensityOperator.from_ket(SystemShape.qubits(n), psi)


def w3() -> DensityOperator:
    return w_state(3)


def maximally_mixed(shape: SystemShape) -> DensityOperator:
    d = shape.total_dim
    return DensityOperator(shape, np.eye(d) / d)


def _check_mu(mu: float):
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {mu}")


def white_noise_mix(rho: DensityOperator, mu: float) -> DensityOperator:
    """``mu * rho + (1 - mu) * I / dim``."""
    _check_mu(mu)
    d = rho.dim
    return DensityOperator(rho.shape, mu * rho.matrix + (1 - mu) * np.eye(d) / d)


def convex_mix(rho1: DensityOperator, rho2: DensityOperator, mu: float) -> DensityOperator:
    """``mu * rho1 + (1 - mu) * rho2``."""
    _check_mu(mu)
    if rho1.shape != rho2.shape:
        raise ValueError(f"shape mismatch: {rho1.shape.local_dims} vs {rho2.shape.local_dims}")
    return DensityOperator(rho1.shape, mu * rho1.matrix + (1 - mu) * rho2.matrix)


def bell_phi_plus() -> DensityOperator:
    return DensityOperator.from_ket(SystemShape.qubits(2), [1, 0, 0, 1])


def werner_2qubit(w: float) -> DensityOperator:
    """``w |phi+><phi+| + (1 - w) I/4``; PPT exactly for ``w <= 1/3``."""
    return white_noise_mix(bell_phi_plus(), w)


def product_state(*factors: DensityOperator) -> DensityOperator:
    dims = sum((f.shape.local_dims for f in factors), ())
    m = np.eye(1)
    for f in factors:
        m = np.kron(m, f.matrix)
    return DensityOperator(SystemShape(dims), m)


def _haar_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def random_pure(shape: SystemShape, seed: int) -> DensityOperator:
    rng = np.random.default_rng(seed)
    return DensityOperator.from_ket(shape, _haar_ket(shape.total_dim, rng))


def random_density(shape: SystemShape, seed: int) -> DensityOperator:
    """``G G^dag / Tr`` with ``G`` a square complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    d = shape.total_dim
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return DensityOperator(shape, m / np.trace(m).real)


def split_product_ket(psi_a: np.ndarray, psi_b: np.ndarray, a_side, shape: SystemShape) -> np.ndarray:
    """State vector of ``psi_a`` on sites ``a_side`` times ``psi_b`` on the rest."""
    n = shape.n_sites
    a_side = list(a_side)
    b_side = [k for k in range(n) if k not in a_side]
    order = a_side + b_side
    t = np.kron(psi_a, psi_b).reshape([shape.local_dims[k] for k in order])
    t = t.transpose([order.index(k) for k in range(n)])
    return t.ravel()


def random_biseparable(n: int, terms: int, seed: int, local_dim: int = 2) -> DensityOperator:
    """Dirichlet-weighted mixture of products across uniformly chosen bipartitions.

    Each side of a term is a Haar-random pure state, so a term can be
    entangled inside its ``A`` or ``Ā`` side.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    rng = np.random.default_rng(seed)
    shape = SystemShape((local_dim,) * n)
    parts = canonical_bipartitions(n)
    weights = rng.dirichlet(np.ones(terms))
    m = np.zeros((shape.total_dim,) * 2, dtype=complex)
    for w in weights:
        bp = parts[rng.integers(len(parts))]
        psi_a = _haar_ket(local_dim ** len(bp.a_side), rng)
        psi_b = _haar_ket(local_dim ** len(bp.b_side), rng)
        psi = split_product_ket(psi_a, psi_b, bp.a_side, shape)
        m += w * np.outer(psi, psi.conj())
    return DensityOperator(shape, m)


@dataclass(frozen=True)
class StateFamily:
    label: str
    parameter_name: str
    generator: Callable[[float], DensityOperator]
    parameter_range: tuple[float, float] = (0.0, 1.0)

    def __call__(self, value: float) -> DensityOperator:
        lo, hi = self.parameter_range
        if not lo <= value <= hi:
            raise ValueError(f"{self.parameter_name} = {value} outside [{lo}, {hi}]")
        return self.generator(value)


def _families() -> dict[str, StateFamily]:
    g3, g4, w = ghz(3), ghz(4), w3()
    return {
        "noisy-ghz3": StateFamily("noisy-ghz3", "mu", lambda mu: white_noise_mix(g3, mu)),
        "noisy-ghz4": StateFamily("noisy-ghz4", "mu", lambda mu: white_noise_mix(g4, mu)),
        "noisy-w3": StateFamily("noisy-w3", "mu", lambda mu: white_noise_mix(w, mu)),
        "ghz-w-mixture": StateFamily("ghz-w-mixture", "mu", lambda mu: convex_mix(g3, w, mu)),
        "werner": StateFamily("werner", "w", werner_2qubit),
    }


FAMILIES = _families()


def uniform_local_dim(rho: DensityOperator) -> int:
    dims = set(rho.shape.local_dims)
    if len(dims) != 1:
        raise ValueError(f"mixed local dimensions {rho.shape.local_dims}")
    return dims.pop()
