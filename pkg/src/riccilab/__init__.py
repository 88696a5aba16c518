"""Numerical toolkit for intermediate Ricci curvature, symmetry rank and metric sewing."""

__version__ = "0.1.0"

from .curvature import (  # noqa: E402
    CurvatureData,
    Frame,
    christoffel,
    lie_derivative_metric,
    restricted_curvature_operator,
    restricted_ricci_operator,
    ric_k,
    riemann,
    sectional,
)
from .errors import RiccilabError  # noqa: E402
from .geodesics import exp_inverse, geodesic_exp  # noqa: E402
from .killing import find_nonpositive_pair, kernel_dimension, second_fundamental_form  # noqa: E402
from .metric import MetricField, Scheme, constant_curvature, custom_table, euclidean, warped_product  # noqa: E402
from .model import ModelSpec, build_model, closed_form_sec, killing_frame, model_metric_field  # noqa: E402
from .sewing import (  # noqa: E402
    bump,
    c1_distance_estimate,
    estimate_r_constant,
    jacobi_taylor_check,
    pullback_model,
    radial_compatibility_check,
    sew,
)
from .verify import check_compsimp, min_ric_k  # noqa: E402
