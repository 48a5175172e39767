"""Infinitesimal strain-displacement relations in curvature-line frames."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid
from .calculus import DisplacementField, mask_poles, surface_divergence, _check
from .grid import Field, ParamDomain, Stencil, DEFAULT_STENCIL
from .surface import FrameField

COMPONENTS = ("eps1", "eps2", "om1", "om2", "theta", "psi")


@dataclass(frozen=True)
class StrainField:
    """Normal strains, shear parts and normal rotations of a displacement.

    Components that divide by A2 (eps2, om2, psi) are 0 on pole rows.
    """

    domain: ParamDomain
    eps1: Field
    eps2: Field
    om1: Field
    om2: Field
    theta: Field
    psi: Field

    @property
    def shear(self) -> Field:
        return self.om1 + self.om2

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {name: np.broadcast_to(getattr(self, name).values, self.domain.shape)
                for name in COMPONENTS}


def infinitesimal_strains(field: FrameField, disp: DisplacementField,
                          stencil: Stencil = DEFAULT_STENCIL) -> StrainField:
    _check(field, disp)
    P = grid.partial
    v1, v2, vn = disp.v1, disp.v2, disp.vn
    A1, A2, p, q = field.A1, field.A2, field.p, field.q
    Hc, Kc = field.Hc, field.Kc
    eps1 = (P(v1, 0, stencil) + p * v2 + Hc * vn) / A1
    eps2 = (P(v2, 1, stencil) + q * v1 + Kc * vn) / A2
    om1 = (P(v2, 0, stencil) - p * v1) / A1
    om2 = (P(v1, 1, stencil) - q * v2) / A2
    theta = (-P(vn, 0, stencil) + Hc * v1) / A1
    psi = (-P(vn, 1, stencil) + Kc * v2) / A2
    m = lambda f: mask_poles(field, f)
    return StrainField(field.domain, eps1, m(eps2), om1, m(om2), theta, m(psi))


def strain_identity_residual(field: FrameField, disp: DisplacementField,
                             stencil: Stencil = DEFAULT_STENCIL,
                             pole_margin: float = 0.0) -> float:
    """Sup over interior nodes of |eps1 + eps2 - (div eta - 2 H vn)|."""
    s = infinitesimal_strains(field, disp, stencil)
    rhs = surface_divergence(field, disp.tangent, stencil) - 2.0 * field.H * disp.vn
    res = np.broadcast_to((s.eps1 + s.eps2 - rhs).values, field.domain.shape)
    mask = field.domain.interior_mask(pole_margin)
    return float(np.max(np.abs(res[mask])))
