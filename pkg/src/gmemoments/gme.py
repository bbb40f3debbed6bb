"""GME maps built from a single-site positive map.

For ``N`` sites the map is

    Phi(rho) = sum_A (L^{⊗A} ⊗ id)(rho) + c * Tr[rho] * I

where ``A`` runs over one representative of every bipartition and ``c``
compensates the most negative eigenvalue the partial map can produce on
a biseparable state.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .maps import SingleSiteMap, apply_matrix
from .qcore import DensityOperator, HermitianOperator, SystemShape

# minimum output eigenvalue magnitude of (id ⊗ L) for maps where it is known
_KNOWN_NU = {"transposition": 0.5, "identity": 0.0}


@dataclass(frozen=True)
class Bipartition:
    """A split of ``n_sites`` sites; ``a_side`` is the canonical representative."""

    a_side: tuple[int, ...]
    n_sites: int

    def __post_init__(self):
        a = tuple(sorted(int(s) for s in self.a_side))
        if not a or len(a) >= self.n_sites:
            raise ValueError(f"a_side {a} must be a non-empty proper subset")
        if a[0] < 0 or a[-1] >= self.n_sites or len(set(a)) != len(a):
            raise ValueError(f"invalid sites {a} for {self.n_sites} sites")
        object.__setattr__(self, "a_side", a)

    @property
    def b_side(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.n_sites) if k not in self.a_side)

    def complement(self) -> "Bipartition":
        return Bipartition(self.b_side, self.n_sites)

    def __str__(self):
        fmt = lambda side: "{" + ",".join(str(k + 1) for k in side) + "}"
        return f"{fmt(self.a_side)}|{fmt(self.b_side)}"


def canonical_bipartitions(n: int) -> list[Bipartition]:
    """All ``2^(n-1) - 1`` bipartitions, smaller side first.

    Ties (``|A| = n/2``) keep the side containing site 0.
    """
    if n < 2:
        raise ValueError("need at least two sites")
    out = []
    for size in range(1, n // 2 + 1):
        for a in combinations(range(n), size):
            if 2 * size == n and 0 not in a:
                continue
            out.append(Bipartition(a, n))
    return out


def known_nu(m: SingleSiteMap) -> float | None:
    """Closed-form minimum output eigenvalue magnitude, if known for ``m``.

    Local unitaries after the map do not change it.
    """
    if m.kind == "reduction" and m.dim == 2:
        return 0.5
    return _KNOWN_NU.get(m.kind)


@dataclass(frozen=True, eq=False)
class GmeMap:
    n_sites: int
    base: SingleSiteMap
    bipartitions: tuple[Bipartition, ...]
    c: float
    nu_used: float

    @property
    def shape(self) -> SystemShape:
        return SystemShape((self.base.dim,) * self.n_sites)

    @property
    def c_lower_bound(self) -> float:
        return (2 ** (self.n_sites - 1) - 2) * self.nu_used

    @property
    def label(self) -> str:
        return f"GME[N={self.n_sites}, {self.base.label}, c={self.c:g}]"


def build_gme_map(n: int, base: SingleSiteMap, c: float | str = "auto",
                  nu: float | str = "auto", nu_trials: int = 200,
                  nu_seed: int = 0) -> GmeMap:
    """Assemble the GME map on ``n`` sites.

    With ``c="auto"`` the constant is the lower bound ``(2^(n-1) - 2) * nu``.
    ``nu="auto"`` uses the closed form when known and otherwise a sampled
    estimate. A supplied ``c`` below the bound is rejected.
    """
    if nu == "auto":
        nu_val = known_nu(base)
        if nu_val is None:
            nu_val = estimate_nu(base, trials=nu_trials, seed=nu_seed).value
    else:
        nu_val = float(nu)
    bound = (2 ** (n - 1) - 2) * nu_val
    if c == "auto":
        c_val = bound
    else:
        c_val = float(c)
        if c_val < bound - 1e-12:
            raise ValueError(f"c = {c_val:g} is below the soundness bound {bound:g} "
                             f"(nu = {nu_val:g}); the map may go negative on biseparable states")
    return GmeMap(n, base, tuple(canonical_bipartitions(n)), c_val, nu_val)


def apply_gme_matrix(g: GmeMap, matrix: np.ndarray) -> np.ndarray:
    """Unchecked core of :func:`apply_gme_map` on a raw matrix."""
    shape = g.shape
    out = sum(apply_matrix(g.base, bp.a_side, matrix, shape) for bp in g.bipartitions)
    return out + g.c * np.trace(matrix) * np.eye(shape.total_dim)


def apply_gme_map(g: GmeMap, rho: HermitianOperator) -> HermitianOperator:
    if rho.shape != g.shape:
        raise ValueError(f"state shape {rho.shape.local_dims} does not match "
                         f"map shape {g.shape.local_dims}")
    return HermitianOperator(rho.shape, apply_gme_matrix(g, rho.matrix))


@dataclass(frozen=True)
class MapDetection:
    detected: bool
    min_eig: float
    tol: float


def min_eig_detect(g: GmeMap, rho: DensityOperator, tol: float = 1e-9) -> MapDetection:
    """Flag GME when the map output has an eigenvalue below ``-tol``."""
    out = apply_gme_map(g, rho)
    lam_min = float(np.linalg.eigvalsh(out.matrix)[0])
    return MapDetection(lam_min < -tol, lam_min, tol)


@dataclass(frozen=True, eq=False)
class NuEstimate:
    value: float
    argmin_state: DensityOperator
    trials: int
    refined: bool


def _partial_map_matrix(m: SingleSiteMap) -> np.ndarray:
    """Matrix of ``id ⊗ L`` acting on row-major flattened ``d^2 x d^2`` operators."""
    d = m.dim
    shape = SystemShape((d, d))
    D = d * d
    cols = []
    for k in range(D * D):
        e = np.zeros(D * D, dtype=complex)
        e[k] = 1.0
        cols.append(apply_matrix(m, (1,), e.reshape(D, D), shape).ravel())
    return np.array(cols).T


def _min_output_eigs(lmat: np.ndarray, psis: np.ndarray) -> np.ndarray:
    """Minimum eigenvalue of ``(id ⊗ L)|psi><psi|`` for a batch of unit vectors."""
    D = psis.shape[1]
    rhos = np.einsum("ti,tj->tij", psis, psis.conj()).reshape(len(psis), D * D)
    outs = (rhos @ lmat.T).reshape(len(psis), D, D)
    outs = 0.5 * (outs + outs.conj().transpose(0, 2, 1))
    return np.linalg.eigvalsh(outs)[:, 0]


def estimate_nu(m: SingleSiteMap, trials: int = 500, seed: int = 0,
                step0: float = 0.1, step_min: float = 1e-9,
                max_sweeps: int = 2000) -> NuEstimate:
    """Lower bound on ``-min_rho EV_min[(id ⊗ L) rho]`` from refined random pure states.

    Haar-random pure states on ``d ⊗ d`` are each refined by coordinate-wise
    perturbation descent on the real and imaginary parts of the state
    vector. A trial's step halves after a sweep without improvement and the
    trial stops once its step falls below ``step_min``. Pure states suffice
    because the minimum eigenvalue is concave in ``rho``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = m.dim
    D = d * d
    lmat = _partial_map_matrix(m)
    rng = np.random.default_rng(seed)
    psis = rng.normal(size=(trials, D)) + 1j * rng.normal(size=(trials, D))
    psis /= np.linalg.norm(psis, axis=1, keepdims=True)
    vals = _min_output_eigs(lmat, psis)
    steps = np.full(trials, step0)
    directions = [np.eye(D)[k] * f for k in range(D) for f in (1.0, 1j)]

    for _ in range(max_sweeps):
        active = steps >= step_min
        if not active.any():
            break
        improved = np.zeros(trials, dtype=bool)
        for e in directions:
            for sign in (1.0, -1.0):
                idx = np.flatnonzero(active)
                cand = psis[idx] + sign * steps[idx, None] * e
                cand /= np.linalg.norm(cand, axis=1, keepdims=True)
                cv = _min_output_eigs(lmat, cand)
                better = cv < vals[idx]
                sel = idx[better]
                psis[sel] = cand[better]
                vals[sel] = cv[better]
                improved[sel] = True
        steps[active & ~improved] *= 0.5
    best = int(np.argmin(vals))
    state = DensityOperator.from_ket(SystemShape((d, d)), psis[best])
    return NuEstimate(value=max(0.0, -float(vals[best])), argmin_state=state,
                      trials=trials, refined=bool((steps < step_min).all()))
