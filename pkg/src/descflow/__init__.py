"""Descending-flow computation of one-signed and sign-changing solutions of a
1-D p-Laplacian differential inclusion with a locally Lipschitz potential."""

from .flow import FlowConfig, FlowTrace, classify_sign, integrate, vector_field
from .functional import Problem, phi, residual_m, select_w, subdiff_element
from .grid import Mesh, make_mesh, norm_lr, norm_w1p
from .multistart import MultistartConfig, SolutionRecord, find_three, ray_escape_radius
from .plap import apply_plap, eigen_first, eigen_second_1d, inverse_plap
from .potential import (custom_piecewise, jump_derivative, kinked_power, smooth_power)

__version__ = "0.1.0"
