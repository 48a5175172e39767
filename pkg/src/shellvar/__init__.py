"""Finite-difference calculus on orthogonal curvature-line charts of surfaces,
first variations of shell functionals and a gradient flow for axisymmetric
profiles."""

from .calculus import (BoundarySpec, DisplacementField, TangentField, TrigPolynomial,
                       integrate_scalar, random_displacement, rotation_field,
                       surface_divergence, surface_gradient, translation_field)
from .errors import *  # noqa: F401,F403
from .flow import FlowConfig, FlowTrace, ProfileCurve, revolve, run_flow
from .grid import CENTRAL2, DEFAULT_STENCIL, Field, ParamDomain, Stencil
from .oracle import central_difference_variation, deform, oracle_ladder
from .strain import StrainField, infinitesimal_strains, strain_identity_residual
from .surface import (FAMILIES, Catenoid, Cylinder, FrameField, Revolution, Sphere, Torus,
                      curvature_line_check, evaluate_frame_field, evaluate_point, gmc_residual)
from .variation import (FunctionalCoefficients, all_variations, delta_area, delta_energy,
                        delta_mean_integral, delta_volume, functional_values, lw_residual)

__version__ = "0.1.0"
