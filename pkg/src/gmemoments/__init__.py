"""Genuine multipartite entanglement detection from moments of positive maps."""

from .gme import (Bipartition, GmeMap, apply_gme_map, build_gme_map, canonical_bipartitions,
                  estimate_nu, min_eig_detect)
from .maps import (SingleSiteMap, apply_on_sites, choi, compose_unitary_after, from_lindblad,
                   identity_map, reduction_map, transposition_map)
from .moments import (MomentVector, compute_moments, hankel_det, hankel_matrix, hankel_report,
                      p3_ppt_check, pt_moments)
from .qcore import DensityOperator, HermitianOperator, SystemShape
from .states import (convex_mix, ghz, random_biseparable, random_density, random_pure, w3,
                     w_state, werner_2qubit, white_noise_mix)

__all__ = [
    "Bipartition", "DensityOperator", "GmeMap", "HermitianOperator", "MomentVector",
    "SingleSiteMap", "SystemShape", "apply_gme_map", "apply_on_sites", "build_gme_map",
    "canonical_bipartitions", "choi", "compose_unitary_after", "compute_moments", "convex_mix",
    "estimate_nu", "from_lindblad", "ghz", "hankel_det", "hankel_matrix", "hankel_report",
    "identity_map", "min_eig_detect", "p3_ppt_check", "pt_moments", "random_biseparable",
    "random_density", "random_pure", "reduction_map", "transposition_map", "w3", "w_state",
    "werner_2qubit", "white_noise_mix",
]
