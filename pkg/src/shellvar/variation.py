"""First variations of area, enclosed volume, mean-curvature integral and the
combined functional E = integral of (a H + b) dA + c V, plus pointwise
curvature variations and the linear Weingarten residual aK + 2bH - c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grid
from .calculus import (DisplacementField, BoundarySpec, TangentField, edge_flux,
                       integrate_scalar, mask_poles, surface_divergence, surface_gradient, _check)
from .grid import Field, Stencil, DEFAULT_STENCIL
from .strain import infinitesimal_strains
from .surface import FrameField


@dataclass(frozen=True)
class FunctionalCoefficients:
    a: float = 0.0
    b: float = 1.0
    c: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"coefficient {name} must be finite")
            object.__setattr__(self, name, v)

    def to_dict(self):
        return {"a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class VariationBreakdown:
    interior: float
    boundary: float

    @property
    def total(self) -> float:
        return self.interior + self.boundary

    def to_dict(self):
        return {"interior": self.interior, "boundary": self.boundary, "total": self.total}


@dataclass(frozen=True)
class FunctionalValues:
    area: float
    volume: float
    mean_integral: float
    energy: float

    @classmethod
    def assemble(cls, area, volume, mean_integral, coeffs: FunctionalCoefficients):
        energy = coeffs.a * mean_integral + coeffs.b * area + coeffs.c * volume
        return cls(float(area), float(volume), float(mean_integral), float(energy))

    def to_dict(self):
        return {"area": self.area, "volume": self.volume,
                "mean_integral": self.mean_integral, "energy": self.energy}


FUNCTIONALS = ("area", "volume", "mean_integral", "energy")


def support_function(field: FrameField) -> Field:
    """r . N."""
    return grid.dot(field.r, field.N)


def functional_values(field: FrameField, coeffs: FunctionalCoefficients = FunctionalCoefficients(),
                      order: int = 6) -> FunctionalValues:
    area = integrate_scalar(field, 1.0, order)
    volume = integrate_scalar(field, support_function(field), order) / 3.0
    mean = integrate_scalar(field, field.H, order)
    return FunctionalValues.assemble(area, volume, mean, coeffs)


def delta_area(field: FrameField, disp: DisplacementField, boundary: BoundarySpec,
               order: int = 6) -> VariationBreakdown:
    _check(field, disp)
    interior = -2.0 * integrate_scalar(field, field.H * disp.vn, order)
    return VariationBreakdown(interior, edge_flux(field, disp.v1, disp.v2, boundary, order))


def _volume_bracket(field: FrameField, disp: DisplacementField):
    # frame components of (r.N) eta - vn r
    rN = support_function(field)
    c1 = rN * disp.v1 - disp.vn * grid.dot(field.r, field.e1)
    c2 = rN * disp.v2 - disp.vn * grid.dot(field.r, field.e2)
    return c1, c2


def delta_volume(field: FrameField, disp: DisplacementField, boundary: BoundarySpec,
                 order: int = 6) -> VariationBreakdown:
    _check(field, disp)
    interior = integrate_scalar(field, disp.vn, order)
    c1, c2 = _volume_bracket(field, disp)
    return VariationBreakdown(interior, edge_flux(field, c1, c2, boundary, order) / 3.0)


def _mean_bracket(field: FrameField, disp: DisplacementField, stencil: Stencil):
    # frame components of grad(vn)/2 + H eta
    g = surface_gradient(field, disp.vn, stencil)
    return 0.5 * g.v1 + field.H * disp.v1, 0.5 * g.v2 + field.H * disp.v2


def delta_mean_integral(field: FrameField, disp: DisplacementField, boundary: BoundarySpec,
                        stencil: Stencil = DEFAULT_STENCIL, order: int = 6) -> VariationBreakdown:
    _check(field, disp)
    interior = -integrate_scalar(field, field.K * disp.vn, order)
    c1, c2 = _mean_bracket(field, disp, stencil)
    return VariationBreakdown(interior, edge_flux(field, c1, c2, boundary, order))


def delta_energy(field: FrameField, disp: DisplacementField, boundary: BoundarySpec,
                 coeffs: FunctionalCoefficients, stencil: Stencil = DEFAULT_STENCIL,
                 order: int = 6) -> VariationBreakdown:
    _check(field, disp)
    a, b, c = coeffs.a, coeffs.b, coeffs.c
    interior = -integrate_scalar(field, lw_field(field, coeffs) * disp.vn, order)
    m1, m2 = _mean_bracket(field, disp, stencil)
    w1, w2 = _volume_bracket(field, disp)
    c1 = a * m1 + b * disp.v1 + (c / 3.0) * w1
    c2 = a * m2 + b * disp.v2 + (c / 3.0) * w2
    return VariationBreakdown(interior, edge_flux(field, c1, c2, boundary, order))


def all_variations(field: FrameField, disp: DisplacementField, boundary: BoundarySpec,
                   coeffs: FunctionalCoefficients, stencil: Stencil = DEFAULT_STENCIL,
                   order: int = 6) -> dict[str, VariationBreakdown]:
    return {
        "area": delta_area(field, disp, boundary, order),
        "volume": delta_volume(field, disp, boundary, order),
        "mean_integral": delta_mean_integral(field, disp, boundary, stencil, order),
        "energy": delta_energy(field, disp, boundary, coeffs, stencil, order),
    }


def delta_principal_curvatures(field: FrameField, disp: DisplacementField,
                               stencil: Stencil = DEFAULT_STENCIL) -> tuple[Field, Field]:
    """Pointwise first variations of kappa1 and kappa2 (0 on pole rows)."""
    s = infinitesimal_strains(field, disp, stencil)
    P = grid.partial
    dk1 = -(P(s.theta, 0, stencil) + field.p * s.psi) / field.A1 - s.eps1 * field.kappa1
    dk2 = -(P(s.psi, 1, stencil) + field.q * s.theta) / field.A2 - s.eps2 * field.kappa2
    return mask_poles(field, dk1), mask_poles(field, dk2)


def delta_mean_pointwise(field: FrameField, disp: DisplacementField,
                         stencil: Stencil = DEFAULT_STENCIL) -> Field:
    """delta H = div(grad vn)/2 + grad H . eta + (2 H^2 - K) vn."""
    lap = surface_divergence(field, surface_gradient(field, disp.vn, stencil), stencil)
    gH = surface_gradient(field, field.H, stencil)
    H, K = field.H, field.K
    out = 0.5 * lap + gH.v1 * disp.v1 + gH.v2 * disp.v2 + (2.0 * H * H - K) * disp.vn
    return mask_poles(field, out)


def lw_field(field: FrameField, coeffs: FunctionalCoefficients) -> Field:
    return coeffs.a * field.K + 2.0 * coeffs.b * field.H - coeffs.c


@dataclass(frozen=True)
class LWResidual:
    values: np.ndarray
    sup: float
    l2: float


def lw_residual(field: FrameField, coeffs: FunctionalCoefficients, order: int = 6) -> LWResidual:
    """Linear Weingarten residual aK + 2bH - c with its sup and surface L2 norms."""
    res = lw_field(field, coeffs)
    values = np.broadcast_to(res.values, field.domain.shape).copy()
    l2 = math.sqrt(max(integrate_scalar(field, values * values, order), 0.0))
    return LWResidual(values, float(np.max(np.abs(values))), l2)


def vol1_residual(field: FrameField, stencil: Stencil = DEFAULT_STENCIL,
                  pole_margin: float = 0.0) -> float:
    """Sup of |div(r - (r.N) N) - 2 (1 + H r.N)| over interior nodes."""
    tangential = TangentField(grid.dot(field.r, field.e1), grid.dot(field.r, field.e2))
    res = surface_divergence(field, tangential, stencil) \
        - 2.0 * (1.0 + field.H * support_function(field))
    mask = field.domain.interior_mask(pole_margin)
    return float(np.max(np.abs(res.values[mask])))


def key1_residual(field: FrameField, disp: DisplacementField,
                  stencil: Stencil = DEFAULT_STENCIL, pole_margin: float = 0.0) -> float:
    """Sup of |div(k2 v1 e1 + k1 v2 e2) - eps1 k2 - eps2 k1 - 2 K vn| over interior nodes."""
    s = infinitesimal_strains(field, disp, stencil)
    eta = TangentField(field.kappa2 * disp.v1, field.kappa1 * disp.v2)
    res = surface_divergence(field, eta, stencil) - s.eps1 * field.kappa2 \
        - s.eps2 * field.kappa1 - 2.0 * field.K * disp.vn
    values = np.broadcast_to(res.values, field.domain.shape)
    mask = field.domain.interior_mask(pole_margin)
    return float(np.max(np.abs(values[mask])))
