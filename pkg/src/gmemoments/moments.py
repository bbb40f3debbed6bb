"""Moments of GME maps, Hankel determinant tests and bipartite PT-moments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gme import Bipartition, GmeMap, apply_gme_map
from .maps import apply_on_sites, transposition_map
from .qcore import HermitianOperator, max_asymmetry, power_sums

DEFAULT_MAX_ORDER = 3
VIOLATED = "violated"
SATISFIED = "satisfied"
NPT_DETECTED = "NPT-detected"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class MomentVector:
    values: tuple[float, ...]
    map_label: str = ""
    state_label: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        for n, v in enumerate(vals, start=1):
            if n % 2 == 0 and v < -1e-9:
                raise ValueError(f"even moment s_{n} = {v:.3e} is negative")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def s(self, n: int) -> float:
        """1-based access: ``s(1)`` is the first moment."""
        return self.values[n - 1]

    def scaled(self, alpha: float) -> "MomentVector":
        """Moments of ``alpha * Phi(rho)``."""
        vals = tuple(alpha ** n * v for n, v in enumerate(self.values, start=1))
        return MomentVector(vals, self.map_label, self.state_label)


def moments_of_operator(h: HermitianOperator, n_max: int) -> tuple[float, ...]:
    """``Tr[h^n]`` for ``n = 1..n_max`` from a single eigendecomposition."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    asym = max_asymmetry(h.matrix)
    if asym > 1e-9:
        raise ValueError(f"operator has imaginary spectral residue {asym:.3e}")
    lam = np.linalg.eigvalsh(h.matrix)
    return tuple(power_sums(lam, n_max))


def compute_moments(g: GmeMap, rho, n_max: int = 2 * DEFAULT_MAX_ORDER + 1,
                    state_label: str = "") -> MomentVector:
    out = apply_gme_map(g, rho)
    return MomentVector(moments_of_operator(out, n_max), g.label, state_label)


def hankel_matrix(m: MomentVector | Sequence[float], l: int) -> np.ndarray:
    """``(l+1) x (l+1)`` matrix with entry ``(i, j) = s_{i+j+1}`` (0-based ``i, j``)."""
    vals = m.values if isinstance(m, MomentVector) else tuple(m)
    if l < 1:
        raise ValueError("Hankel order must be >= 1")
    if len(vals) < 2 * l + 1:
        raise ValueError(f"H_{l} needs moments up to s_{2 * l + 1} (n_max >= {2 * l + 1}), "
                         f"got {len(vals)}")
    return np.array([[vals[i + j] for j in range(l + 1)] for i in range(l + 1)], dtype=float)


def hankel_det(m: MomentVector | Sequence[float], l: int) -> float:
    """Determinant as the product of the symmetric matrix's eigenvalues."""
    return float(np.prod(np.linalg.eigvalsh(hankel_matrix(m, l))))


def hankel_tolerance(m: MomentVector | Sequence[float], l: int, rel: float = 1e-12) -> float:
    """Default violation cutoff for ``det H_l``: ``rel`` times the product of the diagonal.

    The diagonal product ``s_1 s_3 ... s_{2l+1}`` bounds ``|det H_l|`` for a
    PSD Hankel matrix and scales exactly like the determinant when the
    map output is multiplied by a positive constant, so verdicts do not
    depend on the normalization of the map.
    """
    h = hankel_matrix(m, l)
    return rel * float(np.prod(np.abs(np.diag(h))))


@dataclass(frozen=True)
class HankelReport:
    max_order: int
    determinants: tuple[float, ...]
    per_order_verdict: tuple[str, ...]
    tol: tuple[float, ...]

    @property
    def detected(self) -> bool:
        return VIOLATED in self.per_order_verdict

    @property
    def overall(self) -> str:
        return "GME-detected" if self.detected else "not-detected"


def hankel_report(m: MomentVector, max_order: int = DEFAULT_MAX_ORDER,
                  tol: float | None = None) -> HankelReport:
    """Determinants of ``H_1..H_L``; any ``det H_l < -tol_l`` certifies GME.

    Without an explicit ``tol`` each order uses :func:`hankel_tolerance`.
    """
    if len(m) < 2 * max_order + 1:
        raise ValueError(f"need n_max >= {2 * max_order + 1} for max_order {max_order}")
    dets, verdicts, tols = [], [], []
    for l in range(1, max_order + 1):
        det = hankel_det(m, l)
        t = tol if tol is not None else hankel_tolerance(m, l)
        dets.append(det)
        tols.append(t)
        verdicts.append(VIOLATED if det < -t else SATISFIED)
    return HankelReport(max_order, tuple(dets), tuple(verdicts), tuple(tols))


@dataclass(frozen=True)
class PtMomentVector:
    values: tuple[float, ...]

    def p(self, n: int) -> float:
        return self.values[n - 1]


def pt_moments(rho, split: Bipartition | Sequence[int], n_max: int = 3) -> PtMomentVector:
    """Power sums of the spectrum of ``rho`` partially transposed on ``split.a_side``."""
    sites = split.a_side if isinstance(split, Bipartition) else tuple(split)
    dims = {rho.shape.local_dims[s] for s in sites}
    if len(dims) != 1:
        raise ValueError("partial transpose sites must share one local dimension")
    pt = apply_on_sites(transposition_map(dims.pop()), sites, rho)
    return PtMomentVector(moments_of_operator(pt, n_max))


def p3_ppt_check(p: PtMomentVector, margin: float = 1e-12) -> str:
    """NPT certified when ``p_3 < p_2^2``."""
    if len(p.values) < 3:
        raise ValueError("p3-PPT needs moments up to p_3")
    return NPT_DETECTED if p.p(3) < p.p(2) ** 2 - margin else INCONCLUSIVE
