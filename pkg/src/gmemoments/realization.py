"""Moments of the transposition GME map as expectations of multi-copy observables.

A product ``Tr[Phi_{i_1}(rho) ... Phi_{i_n}(rho)]`` of partially transposed
copies equals ``Tr[rho^{⊗n} O]`` for an operator ``O`` that factors over
the parties: each party carries an operator on its ``n`` copies, which is a
cyclic permutation of the copies when that party is never transposed and
a product of SWAP and ``phi_hat`` factors otherwise.

Full-space operators use copy-major ordering: all sites of copy 1, then
all sites of copy 2, and so on. Term indices are 0-based positions in
``g.bipartitions``; index ``len(g.bipartitions)`` is the constant term
``c * Tr[rho] * I``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .gme import GmeMap
from .qcore import STATE_TOL, DensityOperator, SystemShape, embed_site_operator, max_asymmetry

MAX_ASSEMBLED_DIM = 4096


def swap_op(d: int = 2) -> np.ndarray:
    """Exchange operator ``|ab> -> |ba>`` on two ``d``-dimensional copies."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    s = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            s[b * d + a, a * d + b] = 1.0
    return s


def phi_hat(d: int = 2) -> np.ndarray:
    """Twice the two-qubit Bell projector, ``sum_ij |ii><jj|``."""
    if d != 2:
        raise ValueError("phi_hat is defined for qubits only")
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1.0
    return np.outer(v, v)


def on_copies(op2: np.ndarray, pair: tuple[int, int], n: int, d: int = 2) -> np.ndarray:
    """Place a two-copy operator on copies ``pair`` (0-based) of ``n`` copies."""
    return embed_site_operator(op2, pair, SystemShape((d,) * n))


def _cyclic_permutation(n: int, d: int, shift: int) -> np.ndarray:
    """``|a_1 ... a_n> -> |a_{1+shift} ... a_{n+shift}>`` (indices mod n)."""
    dim = d ** n
    p = np.zeros((dim, dim), dtype=complex)
    for digits in itertools.product(range(d), repeat=n):
        src = int(np.ravel_multi_index(digits, (d,) * n))
        moved = tuple(digits[(k + shift) % n] for k in range(n))
        p[np.ravel_multi_index(moved, (d,) * n), src] = 1.0
    return p


def cyclic_swaps(n: int, direction: str, d: int = 2) -> np.ndarray:
    """Cyclic copy permutation on ``n`` copies.

    ``forward`` sends ``|abc> -> |bca>`` and is the factor of an untransposed
    party; ``backward`` is its inverse and belongs to a party transposed in
    every copy. For ``n = 3`` both are the two-SWAP products
    ``forward = SWAP_13 SWAP_23`` and ``backward = SWAP_12 SWAP_23``.
    """
    if n < 2:
        raise ValueError("need at least two copies")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    if n == 3:
        sw = swap_op(d)
        first = (0, 2) if direction == "forward" else (0, 1)
        return on_copies(sw, first, 3, d) @ on_copies(sw, (1, 2), 3, d)
    return _cyclic_permutation(n, d, 1 if direction == "forward" else -1)


def three_copy_factor(transposed: Iterable[int]) -> np.ndarray:
    """Per-party qubit operator on three copies for a given set of transposed copies.

    The single-copy cases are the ``Y`` (copy 0), ``X`` (copy 1) and ``Z``
    (copy 2) operators built from ``phi_hat`` and SWAP; the two-copy cases
    use one ``phi_hat`` and one SWAP.
    """
    key = frozenset(transposed)
    if not key <= {0, 1, 2}:
        raise ValueError(f"copies must be in {{0, 1, 2}}, got {sorted(key)}")
    sw, ph = swap_op(2), phi_hat(2)
    c = lambda op, pair: on_copies(op, pair, 3)
    table = {
        frozenset(): lambda: cyclic_swaps(3, "forward"),
        frozenset({0, 1, 2}): lambda: cyclic_swaps(3, "backward"),
        frozenset({0}): lambda: c(ph, (0, 2)) @ c(sw, (1, 2)),
        frozenset({1}): lambda: c(ph, (0, 1)) @ c(ph, (1, 2)),
        frozenset({2}): lambda: c(ph, (1, 2)) @ c(ph, (0, 2)),
        frozenset({0, 1}): lambda: c(ph, (0, 2)) @ c(sw, (0, 1)),
        frozenset({0, 2}): lambda: c(ph, (1, 2)) @ c(sw, (0, 2)),
        frozenset({1, 2}): lambda: c(ph, (0, 1)) @ c(sw, (1, 2)),
    }
    return table[key]()


@lru_cache(maxsize=256)
def _party_factor(transposed: frozenset, n: int, d: int) -> np.ndarray:
    """``sum_p ⊗_k chi_k(|p_k><p_{k-1}|)`` with ``p_0 = p_n``; ``chi_k`` transposes iff ``k`` is listed."""
    dim = d ** n
    out = np.zeros((dim, dim), dtype=complex)
    for p in itertools.product(range(d), repeat=n):
        row, col = [], []
        for k in range(n):
            ket, bra = p[k], p[k - 1]
            if k in transposed:
                ket, bra = bra, ket
            row.append(ket)
            col.append(bra)
        out[np.ravel_multi_index(row, (d,) * n), np.ravel_multi_index(col, (d,) * n)] += 1.0
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MultiCopyObservable:
    """Operator on ``copies`` copies of an ``n_parties``-site state, stored per party."""

    copies: int
    local_dim: int
    party_factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        dim = self.local_dim ** self.copies
        for f in self.party_factors:
            if f.shape != (dim, dim):
                raise ValueError(f"party factor has shape {f.shape}, expected {(dim, dim)}")

    @property
    def n_parties(self) -> int:
        return len(self.party_factors)

    @property
    def dim(self) -> int:
        return self.local_dim ** (self.copies * self.n_parties)

    def assembled(self) -> np.ndarray:
        """Full matrix in copy-major site order; capped at ``MAX_ASSEMBLED_DIM``."""
        if self.dim > MAX_ASSEMBLED_DIM:
            raise ValueError(f"assembled dimension {self.dim} exceeds the dense cap "
                             f"{MAX_ASSEMBLED_DIM}")
        n, N, d = self.copies, self.n_parties, self.local_dim
        full = np.eye(1)
        for f in self.party_factors:
            full = np.kron(full, f)
        t = full.reshape((d,) * (2 * n * N))
        # party-major axis u*n + k  ->  copy-major axis k*N + u
        perm = [u * n + k for k in range(n) for u in range(N)]
        t = t.transpose(perm + [n * N + a for a in perm])
        return t.reshape(self.dim, self.dim)

    def hermitian_part(self) -> "HermitianObservable":
        m = self.assembled()
        return HermitianObservable(self.copies, 0.5 * (m + m.conj().T))


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    """An assembled Hermitian operator on ``copies`` copies."""

    copies: int
    matrix: np.ndarray


def _copy_product(rho: DensityOperator, copies: int) -> np.ndarray:
    out = np.eye(1)
    for _ in range(copies):
        out = np.kron(out, rho.matrix)
    return out


def expectation_complex(obs: MultiCopyObservable | HermitianObservable,
                        rho: DensityOperator) -> complex:
    """``Tr[rho^{⊗n} O]`` without a reality check.

    A single product term such as ``Tr[Phi_1 Phi_2 Phi_3]`` is complex in
    general; only its sum with the reversed product is real.
    """
    if isinstance(obs, HermitianObservable):
        return complex(np.trace(_copy_product(rho, obs.copies) @ obs.matrix))
    return _factored_expectation(obs, rho)


def _real(val: complex, imag_tol: float, what: str = "expectation") -> float:
    if abs(val.imag) >= imag_tol:
        raise ValueError(f"{what} has imaginary part {val.imag:.3e}")
    return float(val.real)


def expectation(obs: MultiCopyObservable | HermitianObservable, rho: DensityOperator,
                imag_tol: float = 1e-9) -> float:
    """Real ``Tr[rho^{⊗n} O]``; raises when the imaginary part is not negligible."""
    return _real(expectation_complex(obs, rho), imag_tol)


_SPARSE_TERM_LIMIT = 1 << 20


def _factored_expectation(obs: MultiCopyObservable, rho: DensityOperator) -> complex:
    n, d = obs.copies, obs.local_dim
    N = obs.n_parties
    if rho.shape.local_dims != (d,) * N:
        raise ValueError(f"state shape {rho.shape.local_dims} does not match observable "
                         f"({N} parties of dimension {d})")
    nonzeros = [np.nonzero(f) for f in obs.party_factors]
    if prod(len(r) for r, _ in nonzeros) <= _SPARSE_TERM_LIMIT:
        return _sparse_expectation(obs, rho, nonzeros)
    r = rho.matrix.reshape((d,) * (2 * N))
    # labels: x(k, u) rows of copy k, y(k, u) columns of copy k
    x = lambda k, u: k * N + u
    y = lambda k, u: n * N + k * N + u
    operands = []
    for k in range(n):
        operands += [r, [x(k, u) for u in range(N)] + [y(k, u) for u in range(N)]]
    for u, f in enumerate(obs.party_factors):
        # Tr[R O] = sum R[x, y] O[y, x]
        operands += [f.reshape((d,) * (2 * n)),
                     [y(k, u) for k in range(n)] + [x(k, u) for k in range(n)]]
    return complex(np.einsum(*operands, [], optimize="greedy"))


def _sparse_expectation(obs: MultiCopyObservable, rho: DensityOperator, nonzeros) -> complex:
    """Sum over the nonzero entries of every party factor.

    Each combination of one entry ``O_u[y_u, x_u]`` per party fixes the row
    ``x`` and column ``y`` of every copy, contributing
    ``prod_u O_u[y_u, x_u] * prod_k rho[x_k, y_k]``.
    """
    n, d, N = obs.copies, obs.local_dim, obs.n_parties
    copy_digits = (d,) * n
    weight = np.ones(1, dtype=complex)
    rows = np.zeros((1, n), dtype=np.int64)   # per-copy row index of rho
    cols = np.zeros((1, n), dtype=np.int64)
    for f, (yi, xi) in zip(obs.party_factors, nonzeros):
        vals = f[yi, xi]
        xd = np.array(np.unravel_index(xi, copy_digits)).T   # (nnz, n) site digit per copy
        yd = np.array(np.unravel_index(yi, copy_digits)).T
        weight = (weight[:, None] * vals[None, :]).ravel()
        rows = (rows[:, None, :] * d + xd[None, :, :]).reshape(-1, n)
        cols = (cols[:, None, :] * d + yd[None, :, :]).reshape(-1, n)
    m = rho.matrix
    return complex(np.sum(weight * np.prod(m[rows, cols], axis=1)))


def _require_self_dual(g: GmeMap):
    if g.base.kind != "transposition" or g.base.post_unitary is not None:
        raise ValueError("multi-copy realization is implemented for the plain "
                         f"transposition base only, got {g.base.label!r}")


def _check_string(i_string: Sequence[int], g: GmeMap) -> tuple[int, ...]:
    s = tuple(int(i) for i in i_string)
    if not s:
        raise ValueError("term string must be non-empty")
    K = len(g.bipartitions)
    for i in s:
        if i == K:
            raise ValueError("strings containing the constant term reduce to lower orders; "
                             "use moment_via_operators")
        if not 0 <= i < K:
            raise ValueError(f"term index {i} out of range 0..{K - 1}")
    return s


def build_term_observable(i_string: Sequence[int], g: GmeMap) -> MultiCopyObservable:
    """Observable whose expectation on ``rho^{⊗n}`` is ``Tr[prod_k Phi_{i_k}(rho)]``."""
    _require_self_dual(g)
    s = _check_string(i_string, g)
    n, N, d = len(s), g.n_sites, g.base.dim
    if d ** (n * N) > MAX_ASSEMBLED_DIM:
        raise ValueError(f"{n} copies of {N} sites give dimension {d ** (n * N)} "
                         f"> dense cap {MAX_ASSEMBLED_DIM}")
    factors = []
    for u in range(N):
        transposed = frozenset(k for k, i in enumerate(s) if u in g.bipartitions[i].a_side)
        factors.append(_party_factor(transposed, n, d))
    return MultiCopyObservable(n, d, tuple(factors))


def _require_closed_form_config(g: GmeMap):
    _require_self_dual(g)
    if g.n_sites != 3 or g.base.dim != 2:
        raise ValueError("closed-form realization needs three qubits")
    if abs(g.c - 1.0) > 1e-12:
        raise ValueError(f"closed-form constants assume c = 1, got c = {g.c:g}")


def _two_copy_term(i: int, j: int) -> MultiCopyObservable:
    """``Tr[Phi_i Phi_j]``: SWAP on every party, or phi_hat on parties ``i`` and ``j``."""
    sw, ph = swap_op(2), phi_hat(2)
    factors = tuple(ph if (i != j and u in (i, j)) else sw for u in range(3))
    return MultiCopyObservable(2, 2, factors)


def _three_copy_term(i: int, j: int, k: int) -> MultiCopyObservable:
    string = (i, j, k)
    factors = tuple(three_copy_factor(c for c in range(3) if string[c] == u) for u in range(3))
    return MultiCopyObservable(3, 2, factors)


def second_order_terms(rho: DensityOperator) -> tuple[float, float]:
    """``(sum_i Tr[Phi_i^2], sum_{i<j} Tr[Phi_i Phi_j])`` for three qubits."""
    diag = sum(expectation(_two_copy_term(i, i), rho) for i in range(3))
    cross = sum(expectation(_two_copy_term(i, j), rho) for i, j in itertools.combinations(range(3), 2))
    return diag, cross


def second_moment_via_operators(rho: DensityOperator, g: GmeMap) -> float:
    """``s_2 = 14 + 2 sum_{i<j} Tr[Phi_i Phi_j] + sum_i Tr[Phi_i^2]`` from two-copy expectations."""
    _require_closed_form_config(g)
    diag, cross = second_order_terms(rho)
    return 14.0 + 2.0 * cross + diag


def third_moment_via_operators(rho: DensityOperator, g: GmeMap) -> float:
    """``s_3`` from three-copy expectations plus two-copy terms and the constant 17."""
    _require_closed_form_config(g)
    parties = range(3)
    cubes = sum(expectation(_three_copy_term(i, i, i), rho) for i in parties)
    squares = sum(expectation(_three_copy_term(i, i, j), rho)
                  for i, j in itertools.permutations(parties, 2))
    triples = _real(sum(expectation_complex(_three_copy_term(i, j, k), rho)
                        for i, j, k in itertools.permutations(parties, 3)), 1e-9, "triple sum")
    diag, cross = second_order_terms(rho)
    return 17.0 + cubes + 3.0 * squares + triples + 3.0 * (2.0 * cross) + 3.0 * diag


def moment_via_operators(rho: DensityOperator, g: GmeMap, n: int) -> float:
    """``s_n`` by expanding ``Tr[(sum_i Phi_i + c I)^n]`` into multi-copy expectations.

    Constant factors are pulled out of each product: a string with ``m``
    constant entries contributes ``c^m`` times the lower-order term of its
    remaining indices (``Tr[Phi_i] = Tr[rho]`` for a single one, ``dim`` for none).
    """
    _require_self_dual(g)
    K = len(g.bipartitions)
    dim = g.shape.total_dim
    tr = float(np.trace(rho.matrix).real)
    cache: dict[tuple[int, ...], float] = {}

    def term(rest: tuple[int, ...]) -> complex:
        if not rest:
            return complex(dim)
        if len(rest) == 1:
            return complex(tr)
        key = _canonical_rotation(rest)
        if key not in cache:
            cache[key] = expectation_complex(build_term_observable(key, g), rho)
        return cache[key]

    total = 0j
    for string in itertools.product(range(K + 1), repeat=n):
        rest = tuple(i for i in string if i != K)
        m = n - len(rest)
        total += g.c ** m * tr ** m * term(rest)
    return _real(total, 1e-9 * max(1.0, abs(total)), f"s_{n}")


def _canonical_rotation(s: tuple[int, ...]) -> tuple[int, ...]:
    """Lexicographically smallest rotation; the trace is invariant under cycling."""
    return min(s[k:] + s[:k] for k in range(len(s)))


@dataclass(frozen=True)
class SampleEstimate:
    mean: float
    stderr: float
    shots: int
    exact: float


def sample_expectation(obs: MultiCopyObservable | HermitianObservable, rho: DensityOperator,
                       shots: int, seed: int) -> SampleEstimate:
    """Finite-shot estimate of ``<O>`` on ``rho^{⊗n}`` by sampling eigenvalue outcomes."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if isinstance(obs, MultiCopyObservable):
        m, copies = obs.assembled(), obs.copies
    else:
        m, copies = obs.matrix, obs.copies
    asym = max_asymmetry(m)
    if asym > STATE_TOL:
        raise ValueError(f"observable is not Hermitian (max asymmetry {asym:.3e}); "
                         "sample its hermitian_part() instead")
    lam, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    state = _copy_product(rho, copies)
    probs = np.einsum("ik,ij,jk->k", vecs.conj(), state, vecs).real
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    mean = float(counts @ lam / shots)
    if shots > 1:
        var = float(counts @ (lam - mean) ** 2 / (shots - 1))
        stderr = float(np.sqrt(var / shots))
    else:
        stderr = float("nan")
    return SampleEstimate(mean, stderr, shots, float(probs @ lam))


def swap_triple() -> MultiCopyObservable:
    """SWAP on every party of two three-qubit copies; its expectation is the purity."""
    sw = swap_op(2)
    return MultiCopyObservable(2, 2, (sw, sw, sw))

