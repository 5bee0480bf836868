"""Piecewise expanding interval map families: checks, densities, typicality."""

from .config import TOL, Tolerances, get_tolerances, use
from .covering import (check_assumption_5, check_assumption_6, tilde_image,
                       weakly_covering_N)
from .density import (liverani_lower_bound, stationary_density, ulam_matrix)
from .errors import *  # noqa: F401,F403
from .estimators import BirkhoffTypicality, UlamDensityEstimator
from .expand import (compute_constants, expand_map, max_scale,
                     perturbed_family)
from .expr import diff, parse, to_text
from .family import (MapFamily, check_assumption_1, check_assumption_2,
                     instantiate, param_partition, xi, xi_deriv)
from .familyfile import load_family, parse_family, serialize_family
from .gallery import (Template, build_scaled_family, corollary_check,
                      load_example)
from .maps import PiecewiseMap, iterate, refine_partition
from .symbolic import check_nested, itinerary, word_set
from .typicality import birkhoff_F, ks_distance, limsup_bound_check, sweep

__version__ = "0.1.0"
