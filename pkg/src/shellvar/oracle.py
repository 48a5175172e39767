"""Deformation oracle: geometry of R = r + t V recomputed from scratch.

Nothing here uses the variation formulas.  Functionals of the deformed
immersion are computed from differenced positions with the general
(non curvature-line) fundamental-form expressions, and derivatives in t are
taken by central differences.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from . import grid
from .calculus import BoundarySpec, DisplacementField, quadrature_weights, _check
from .errors import DegenerateMetric, StepTooLarge
from .grid import Field, Stencil, DEFAULT_STENCIL
from .strain import StrainField, infinitesimal_strains
from .surface import FrameField
from .variation import FUNCTIONALS, FunctionalCoefficients, FunctionalValues

DEFAULT_LADDER = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class DeformedSurface:
    base: FrameField
    disp: DisplacementField
    t: float
    R: Field = dc_field(repr=False)


def _diameter(field: FrameField) -> float:
    pts = field.r.values.reshape(-1, 3)
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def deform(base: FrameField, disp: DisplacementField, t: float,
           max_relative_step: float = 0.01) -> DeformedSurface:
    """Positions R = r + t V; warns with StepTooLarge when |t| max|V| exceeds
    ``max_relative_step`` times the surface diameter."""
    _check(base, disp)
    V = disp.ambient(base)
    vmax = float(np.max(np.linalg.norm(np.broadcast_to(V.values, base.domain.shape + (3,)), axis=-1)))
    if abs(t) * vmax > max_relative_step * _diameter(base):
        warnings.warn(f"|t| max|V| = {abs(t) * vmax:.3g} exceeds {max_relative_step} of the "
                      "surface diameter", StepTooLarge, stacklevel=2)
    R = base.r + float(t) * V if t != 0 else base.r
    return DeformedSurface(base, disp, float(t), R)


@dataclass(frozen=True)
class _Forms:
    Ra: np.ndarray
    Rb: np.ndarray
    normal: np.ndarray
    dA: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    valid: np.ndarray


def _forms(surf: DeformedSurface, stencil: Stencil, second: bool = True) -> _Forms:
    d = surf.base.domain
    P = grid.partial
    Ra = P(surf.R, 0, stencil)
    Rb = P(surf.R, 1, stencil)
    cross = np.cross(Ra.values, Rb.values)
    dA = np.linalg.norm(cross, axis=-1)
    # scale from the undeformed chart so a globally collapsed surface is caught
    scale = float(np.max(np.broadcast_to((surf.base.A1 * surf.base.A2).values, d.shape)))
    valid = dA > 1e-12 * scale
    interior = np.ones(d.shape, dtype=bool)
    interior[d.pole_rows()] = False
    if np.any(interior & ~valid):
        i, j = np.argwhere(interior & ~valid)[0]
        raise DegenerateMetric(f"|R_alpha x R_beta| vanishes at node ({i}, {j})")
    with np.errstate(divide="ignore", invalid="ignore"):
        normal = cross / dA[..., None]
    normal[~valid] = 0.0
    E = np.sum(Ra.values ** 2, axis=-1)
    F = np.sum(Ra.values * Rb.values, axis=-1)
    G = np.sum(Rb.values ** 2, axis=-1)
    L = M = N = None
    if second:
        L = np.sum(P(Ra, 0, stencil).values * normal, axis=-1)
        M = np.sum(P(Ra, 1, stencil).values * normal, axis=-1)
        N = np.sum(P(Rb, 1, stencil).values * normal, axis=-1)
    return _Forms(Ra.values, Rb.values, normal, dA, E, F, G, L, M, N, valid)


def deformed_functionals(surf: DeformedSurface,
                         coeffs: FunctionalCoefficients = FunctionalCoefficients(),
                         stencil: Stencil = DEFAULT_STENCIL, order: int = 6) -> FunctionalValues:
    """Area, algebraic volume and mean-curvature integral of the deformed immersion."""
    f = _forms(surf, stencil)
    w = quadrature_weights(surf.base.domain, order)
    R = np.broadcast_to(surf.R.values, f.Ra.shape)
    area = float(np.sum(w * f.dA))
    volume = float(np.sum(w * np.sum(R * np.cross(f.Ra, f.Rb), axis=-1))) / 3.0
    with np.errstate(divide="ignore", invalid="ignore"):
        H = (f.L * f.G - 2.0 * f.M * f.F + f.N * f.E) / (2.0 * (f.E * f.G - f.F ** 2))
    mean = float(np.sum(np.where(f.valid, w * H * f.dA, 0.0)))
    return FunctionalValues.assemble(area, volume, mean, coeffs)


def deformed_frame_curvatures(surf: DeformedSurface,
                              stencil: Stencil = DEFAULT_STENCIL) -> tuple[np.ndarray, np.ndarray]:
    """kappa1' = -(N'_alpha . e1') / A1' and kappa2' = -(N'_beta . e2') / A2'.

    Uses -N'_alpha . R_alpha = R_alpha_alpha . N'; pole rows are 0.
    """
    f = _forms(surf, stencil)
    with np.errstate(divide="ignore", invalid="ignore"):
        k1 = np.where(f.valid, f.L / f.E, 0.0)
        k2 = np.where(f.valid, f.N / f.G, 0.0)
    return k1, k2


def finite_strains(surf: DeformedSurface, stencil: Stencil = DEFAULT_STENCIL) -> StrainField:
    """Strain-displacement relations with (u, v, w) = t (v1, v2, vn)."""
    return infinitesimal_strains(surf.base, surf.disp * surf.t, stencil)


def tangent_reconstruction_error(surf: DeformedSurface,
                                 stencil: Stencil = DEFAULT_STENCIL) -> float:
    """Sup mismatch between differenced R_alpha / A1, R_beta / A2 and their
    reconstruction from the finite strains in the undeformed frame."""
    base = surf.base
    s = finite_strains(surf, stencil)
    arr = s.as_arrays()
    e1, e2, N = base.e1.values, base.e2.values, base.N.values
    t1 = (1 + arr["eps1"])[..., None] * e1 + arr["om1"][..., None] * e2 - arr["theta"][..., None] * N
    t2 = arr["om2"][..., None] * e1 + (1 + arr["eps2"])[..., None] * e2 - arr["psi"][..., None] * N
    Ra = grid.partial(surf.R, 0, stencil).values / base.A1.values[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        Rb = grid.partial(surf.R, 1, stencil).values / base.A2.values[..., None]
    mask = base.domain.interior_mask()
    mask[base.domain.pole_rows()] = False
    return float(max(np.max(np.abs((Ra - t1)[mask])), np.max(np.abs((Rb - t2)[mask]))))


# ---------------------------------------------------------------------------
# derivative estimates


def central_difference_variation(base: FrameField, disp: DisplacementField,
                                 boundary: Optional[BoundarySpec] = None,
                                 coeffs: FunctionalCoefficients = FunctionalCoefficients(),
                                 t: float = 1e-3, richardson: bool = False,
                                 stencil: Stencil = DEFAULT_STENCIL,
                                 order: int = 6) -> FunctionalValues:
    """(F(+t) - F(-t)) / (2t) for every functional.

    With ``richardson`` the estimates at t and t/2 are combined with weights
    4/3 and -1/3.  ``boundary`` is accepted for symmetry with the formula
    side; the oracle integrates over the whole patch either way.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if richardson:
        d1 = central_difference_variation(base, disp, boundary, coeffs, t, False, stencil, order)
        d2 = central_difference_variation(base, disp, boundary, coeffs, t / 2, False, stencil, order)
        return _combine(d1, d2, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepTooLarge)
        plus = deformed_functionals(deform(base, disp, t), coeffs, stencil, order)
        minus = deformed_functionals(deform(base, disp, -t), coeffs, stencil, order)
    vals = {k: (getattr(plus, k) - getattr(minus, k)) / (2.0 * t) for k in FUNCTIONALS}
    return FunctionalValues(**vals)


def richardson(d_coarse: float, d_fine: float, ratio: float) -> float:
    """Eliminate the t**2 term of two central differences at steps t and t/ratio."""
    r2 = ratio * ratio
    return (r2 * d_fine - d_coarse) / (r2 - 1.0)


def _combine(d1: FunctionalValues, d2: FunctionalValues, ratio: float) -> FunctionalValues:
    return FunctionalValues(**{k: richardson(getattr(d1, k), getattr(d2, k), ratio)
                               for k in FUNCTIONALS})


def observed_order(d1: float, d2: float, d3: float, ratio: float,
                   floor: float = 0.0) -> float:
    """Convergence order from three estimates at geometrically shrinking steps.

    Returns inf when the finer difference is at or below ``floor``.
    """
    a, b = abs(d1 - d2), abs(d2 - d3)
    if b <= floor:
        return math.inf
    if a <= floor:
        return 0.0
    return math.log(a / b) / math.log(ratio)


@dataclass(frozen=True)
class OracleEstimate:
    ladder: tuple[float, ...]
    estimates: dict[str, tuple[float, ...]]
    extrapolated: dict[str, float]
    order: dict[str, Optional[float]]

    def to_dict(self):
        return {"ladder": list(self.ladder),
                "estimates": {k: list(v) for k, v in self.estimates.items()},
                "extrapolated": dict(self.extrapolated),
                "order": dict(self.order)}


def oracle_ladder(base: FrameField, disp: DisplacementField,
                  coeffs: FunctionalCoefficients = FunctionalCoefficients(),
                  ladder: Sequence[float] = DEFAULT_LADDER,
                  stencil: Stencil = DEFAULT_STENCIL, order: int = 6) -> OracleEstimate:
    """Central differences over a decreasing t ladder.

    The extrapolated value is the Richardson combination of the two smallest
    steps; the observed order needs at least three steps (None otherwise).
    """
    ladder = tuple(sorted((float(t) for t in ladder), reverse=True))
    if len(ladder) < 2:
        raise ValueError("the t ladder needs at least two steps")
    ests = [central_difference_variation(base, disp, None, coeffs, t, False, stencil, order)
            for t in ladder]
    per = {k: tuple(getattr(e, k) for e in ests) for k in FUNCTIONALS}
    ratio = ladder[-2] / ladder[-1]
    extrap = {k: richardson(v[-2], v[-1], ratio) for k, v in per.items()}
    orders: dict[str, Optional[float]] = {}
    for k, v in per.items():
        if len(v) >= 3:
            # rounding floor of the differenced functionals
            floor = 64 * np.finfo(float).eps * (abs(v[-1]) + 1.0) / ladder[-1]
            orders[k] = observed_order(v[-3], v[-2], v[-1], ladder[-3] / ladder[-2], floor)
        else:
            orders[k] = None
    return OracleEstimate(ladder, per, extrap, orders)
