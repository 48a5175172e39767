"""Identity suite, grid-convergence studies and formula-versus-oracle tables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .calculus import BoundarySpec, DisplacementField, divergence_theorem_residual, random_displacement
from .grid import CENTRAL2, ParamDomain, Stencil
from .oracle import DEFAULT_LADDER, oracle_ladder
from .strain import strain_identity_residual
from .surface import FrameField, SurfaceFamily, evaluate_frame_field, gmc_residual
from .variation import FUNCTIONALS, FunctionalCoefficients, all_variations, key1_residual, vol1_residual

ANALYTIC = Stencil(mode="auto")
IDENTITIES = ("gmc1", "gmc2", "gmc3", "strain", "vol1", "key1", "divergence")

# residuals below this at every level are treated as exact identities
EXACT_FLOOR = 1e-12


def identity_residuals(field: FrameField, disp: DisplacementField, stencil: Stencil = ANALYTIC,
                       pole_margin: float = 0.0) -> dict[str, float]:
    """Sup norms of every pointwise identity residual on one grid."""
    g = gmc_residual(field, stencil, pole_margin)
    boundary = BoundarySpec.of(field.domain)
    return {
        "gmc1": g.sup1,
        "gmc2": g.sup2,
        "gmc3": g.sup3,
        "strain": strain_identity_residual(field, disp, stencil, pole_margin),
        "vol1": vol1_residual(field, stencil, pole_margin),
        "key1": key1_residual(field, disp, stencil, pole_margin),
        "divergence": divergence_theorem_residual(field, disp.tangent, boundary, stencil),
    }


@dataclass(frozen=True)
class ConvergenceRow:
    name: str
    residuals: tuple[float, ...]
    ratios: tuple[float, ...]
    exact: bool

    def passed(self, lo: float = 3.6, hi: float = 4.4) -> bool:
        return self.exact or all(lo <= r <= hi for r in self.ratios)

    def to_dict(self):
        return {"name": self.name, "residuals": list(self.residuals),
                "ratios": list(self.ratios), "exact": self.exact}


def convergence_study(family: SurfaceFamily, domain: ParamDomain, seed: int = 1,
                      levels: int = 2, stencil: Stencil = CENTRAL2, pole_margin: float = 0.0,
                      names: Sequence[str] = IDENTITIES[:-1]) -> list[ConvergenceRow]:
    """Residuals on ``levels`` successively halved grids and their ratios.

    The random displacement is the same trigonometric polynomial on every
    level.  Rows whose residuals stay below EXACT_FLOOR are flagged exact.
    """
    per: dict[str, list[float]] = {n: [] for n in names}
    d = domain
    for _ in range(levels):
        field = evaluate_frame_field(family, d)
        res = identity_residuals(field, random_displacement(d, seed), stencil, pole_margin)
        for n in names:
            per[n].append(res[n])
        d = d.refined()
    rows = []
    for n, vals in per.items():
        ratios = tuple(a / b if b > 0 else math.inf for a, b in zip(vals[:-1], vals[1:]))
        rows.append(ConvergenceRow(n, tuple(vals), ratios, max(vals) < EXACT_FLOOR))
    return rows


@dataclass(frozen=True)
class VariationRow:
    functional: str
    interior: float
    boundary: float
    total: float
    oracle: float
    abs_error: float
    rel_error: float
    order: Optional[float]

    def to_dict(self):
        return {"functional": self.functional, "interior": self.interior,
                "boundary": self.boundary, "total": self.total, "oracle": self.oracle,
                "abs_error": self.abs_error, "rel_error": self.rel_error, "order": self.order}


def compare_variations(field: FrameField, disp: DisplacementField, boundary: BoundarySpec,
                       coeffs: FunctionalCoefficients,
                       ladder: Sequence[float] = DEFAULT_LADDER) -> list[VariationRow]:
    """Formula breakdowns against the Richardson-extrapolated oracle.

    The oracle value extrapolates the two smallest steps of ``ladder``; the
    observed order needs three steps and compares successive oracle
    estimates only, so it does not depend on the formula side.
    """
    formulas = all_variations(field, disp, boundary, coeffs)
    est = oracle_ladder(field, disp, coeffs, ladder)
    rows = []
    for k in FUNCTIONALS:
        f = formulas[k]
        o = est.extrapolated[k]
        err = abs(f.total - o)
        rows.append(VariationRow(k, f.interior, f.boundary, f.total, o, err,
                                 err / (abs(f.total) + 1e-12), est.order[k]))
    return rows
