"""spherelink: numerical linking numbers on the round n-sphere.

Computes Lk(K, L) for disjoint closed oriented submanifolds K^k, L^l of
S^n (k + l = n - 1) by three independent routes -- a direct geodesic
distance-kernel integral over K x L, an antipodally-paired convolution
variant, and the degree of the geodesic join-sweep map -- validated for
curves in S^3 against the classical Euclidean double-integral oracle via
stereographic projection.
"""

__version__ = "0.1.0"

from .catalog import (
    OrientedSubmanifold,
    antipodal_image,
    clifford_torus_curve,
    fourier_curve,
    great_subsphere,
    hopf_fiber,
    orientation_reversed,
    rotated,
    small_round_sphere,
)
from .engine import (
    DisjointnessError,
    GridSpec,
    LinkingReport,
    evaluate_corollary,
    evaluate_join_degree,
    evaluate_main_theorem,
    join_map,
    round_to_linking,
    sign_factor,
)
from .kernels import KernelEvaluator, convolution, phi, phi_kernel_ratio
from .oracle import gauss_linking_integral, oracle_linking, stereographic_project
from .spheregeom import (
    SpherePoint,
    TangentColumns,
    antipode,
    apply_rotation,
    bracket_form,
    geodesic_distance,
    sphere_volume,
)

__all__ = [
    "__version__",
    "OrientedSubmanifold",
    "antipodal_image",
    "clifford_torus_curve",
    "fourier_curve",
    "great_subsphere",
    "hopf_fiber",
    "orientation_reversed",
    "rotated",
    "small_round_sphere",
    "DisjointnessError",
    "GridSpec",
    "LinkingReport",
    "evaluate_corollary",
    "evaluate_join_degree",
    "evaluate_main_theorem",
    "join_map",
    "round_to_linking",
    "sign_factor",
    "KernelEvaluator",
    "convolution",
    "phi",
    "phi_kernel_ratio",
    "gauss_linking_integral",
    "oracle_linking",
    "stereographic_project",
    "SpherePoint",
    "TangentColumns",
    "antipode",
    "apply_rotation",
    "bracket_form",
    "geodesic_distance",
    "sphere_volume",
]
