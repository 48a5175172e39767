"""Surfaces in curvature-line coordinates and their moving frames.

Sign convention: the unit normal is ``N = e1 x e2`` and principal curvatures
satisfy ``N_alpha = -kappa1 r_alpha``, ``N_beta = -kappa2 r_beta``.  With the
built-in parametrizations N points outward, so the unit sphere has
kappa1 = kappa2 = -1, mean curvature H = -1 and Gaussian curvature K = +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from . import grid
from .errors import DomainError, GridTooCoarse, NonOrthogonalChart, PoleSingularity
from .grid import Field, ParamDomain, Stencil, DEFAULT_STENCIL

# offset used to take directional limits at pole rows (cubic extrapolation)
POLE_OFFSET = 1e-4


# ---------------------------------------------------------------------------
# surface families


class SurfaceFamily:
    """A parametrized surface r(alpha, beta) with closed-form partials.

    Subclasses implement :meth:`position_partial`; ``max_order`` caps the
    total derivative order available in closed form (None: unlimited).
    """

    max_order: Optional[int] = None
    kind = "surface"

    def position_partial(self, alpha, beta, i: int, j: int) -> np.ndarray:
        raise NotImplementedError

    def natural_domain(self, n_alpha: int, n_beta: int) -> ParamDomain:
        raise NotImplementedError

    def position(self, alpha, beta) -> np.ndarray:
        return self.position_partial(alpha, beta, 0, 0)

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"family": self.kind, **self.params()}


class RevolutionSurface(SurfaceFamily):
    """r = (f(a) cos b, f(a) sin b, g(a)) + center, for a profile (f, g).

    Meridians and parallels are curvature lines of any surface of revolution.
    The profile is oriented so that (-g', f') points away from the enclosed
    region, which makes N = e1 x e2 the outward normal.
    """

    def __init__(self, center=(0.0, 0.0, 0.0)):
        self.center = np.asarray(center, dtype=float)

    def profile(self, alpha, k: int):
        """k-th alpha-derivatives (f^(k), g^(k)) of the profile."""
        raise NotImplementedError

    def position_partial(self, alpha, beta, i, j):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if self.max_order is not None and i + j > self.max_order:
            raise ValueError(f"partials of order {i + j} are not available in closed form")
        f, g = self.profile(alpha, i)
        f = np.broadcast_to(f, np.broadcast(alpha, beta).shape)
        g = np.broadcast_to(g, f.shape)
        shift = j * math.pi / 2
        x = f * np.cos(beta + shift)
        y = f * np.sin(beta + shift)
        z = g if j == 0 else np.zeros_like(f)
        out = np.stack([x, y, z], axis=-1)
        if i == 0 and j == 0:
            out = out + self.center
        return out

    def params(self):
        if np.any(self.center):
            return {"center": self.center.tolist()}
        return {}


class Sphere(RevolutionSurface):
    kind = "sphere"

    def __init__(self, radius: float = 1.0, center=(0.0, 0.0, 0.0)):
        if radius <= 0:
            raise DomainError("sphere radius must be positive")
        super().__init__(center)
        self.radius = float(radius)

    def profile(self, alpha, k):
        s = k * math.pi / 2
        return self.radius * np.sin(alpha + s), self.radius * np.cos(alpha + s)

    def natural_domain(self, n_alpha, n_beta):
        return ParamDomain((0.0, math.pi), (0.0, 2 * math.pi), n_alpha, n_beta,
                           periodic_beta=True, pole_alpha_start=True, pole_alpha_end=True)

    def band(self, alpha_lo, alpha_hi, n_alpha, n_beta) -> ParamDomain:
        return ParamDomain((alpha_lo, alpha_hi), (0.0, 2 * math.pi), n_alpha, n_beta,
                           periodic_beta=True)

    def params(self):
        return {"radius": self.radius, **super().params()}


class Torus(RevolutionSurface):
    """Torus with profile circle (R + r cos a, -r sin a), traversed clockwise."""

    kind = "torus"

    def __init__(self, major_radius: float = 2.0, minor_radius: float = 1.0,
                 center=(0.0, 0.0, 0.0)):
        if minor_radius <= 0 or major_radius <= minor_radius:
            raise DomainError("torus requires major_radius > minor_radius > 0")
        super().__init__(center)
        self.major_radius = float(major_radius)
        self.minor_radius = float(minor_radius)

    def profile(self, alpha, k):
        s = k * math.pi / 2
        f = self.minor_radius * np.cos(alpha + s)
        if k == 0:
            f = f + self.major_radius
        return f, -self.minor_radius * np.sin(alpha + s)

    def natural_domain(self, n_alpha, n_beta):
        return ParamDomain((0.0, 2 * math.pi), (0.0, 2 * math.pi), n_alpha, n_beta,
                           periodic_alpha=True, periodic_beta=True)

    def params(self):
        return {"major_radius": self.major_radius, "minor_radius": self.minor_radius,
                **super().params()}


class Cylinder(RevolutionSurface):
    """Cylinder of given radius; alpha is height measured downward, |alpha| <= height/2."""

    kind = "cylinder"

    def __init__(self, radius: float = 1.0, height: float = 2.0, center=(0.0, 0.0, 0.0)):
        if radius <= 0 or height <= 0:
            raise DomainError("cylinder radius and height must be positive")
        super().__init__(center)
        self.radius = float(radius)
        self.height = float(height)

    def profile(self, alpha, k):
        alpha = np.asarray(alpha, dtype=float)
        zero = np.zeros_like(alpha)
        if k == 0:
            return zero + self.radius, -alpha
        if k == 1:
            return zero, zero - 1.0
        return zero, zero

    def natural_domain(self, n_alpha, n_beta):
        h = self.height / 2
        return ParamDomain((-h, h), (0.0, 2 * math.pi), n_alpha, n_beta, periodic_beta=True)

    def params(self):
        return {"radius": self.radius, "height": self.height, **super().params()}


class Catenoid(RevolutionSurface):
    """Catenoid f = c cosh(a/c), g = -a (a minimal surface, H = 0)."""

    kind = "catenoid"

    def __init__(self, neck_radius: float = 1.0, height: float = 2.0, center=(0.0, 0.0, 0.0)):
        if neck_radius <= 0 or height <= 0:
            raise DomainError("catenoid neck radius and height must be positive")
        super().__init__(center)
        self.neck_radius = float(neck_radius)
        self.height = float(height)

    def profile(self, alpha, k):
        c = self.neck_radius
        alpha = np.asarray(alpha, dtype=float)
        hyper = np.cosh if k % 2 == 0 else np.sinh
        f = c ** (1 - k) * hyper(alpha / c)
        if k == 0:
            g = -alpha
        elif k == 1:
            g = np.zeros_like(alpha) - 1.0
        else:
            g = np.zeros_like(alpha)
        return f, g

    def natural_domain(self, n_alpha, n_beta):
        h = self.height / 2
        return ParamDomain((-h, h), (0.0, 2 * math.pi), n_alpha, n_beta, periodic_beta=True)

    def params(self):
        return {"neck_radius": self.neck_radius, "height": self.height, **super().params()}


class Revolution(RevolutionSurface):
    """Surface of revolution of a sampled profile, interpolated by splines.

    The spline parameter is the cumulative chord length of the samples and
    ``degree`` is 3 or 5 (default 5: curvature error O(h**4) instead of
    O(h**2)).  Closed profiles use periodic splines.  Profiles whose ends lie
    on the axis get the parity conditions of a smooth surface crossing the
    axis: even derivatives of f and odd derivatives of g vanish there.
    """

    kind = "revolution"

    def __init__(self, samples, closed: bool = False, axis_endpoints: bool = False,
                 center=(0.0, 0.0, 0.0), degree: int = 5):
        super().__init__(center)
        pts = np.asarray(samples, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < degree + 1:
            raise DomainError(f"profile needs at least {degree + 1} planar samples (f, g)")
        if closed and axis_endpoints:
            raise DomainError("a closed profile cannot end on the axis")
        if degree not in (3, 5):
            raise DomainError("spline degree must be 3 or 5")
        self.samples = pts
        self.closed = bool(closed)
        self.axis_endpoints = bool(axis_endpoints)
        self.degree = degree
        self.max_order = degree - 1
        loop = np.vstack([pts, pts[:1]]) if closed else pts
        seg = np.linalg.norm(np.diff(loop, axis=0), axis=1)
        if np.any(seg <= 0):
            raise DomainError("consecutive profile samples must be distinct")
        self.knots = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.knots[-1])
        k = degree
        if closed:
            self._f = make_interp_spline(self.knots, loop[:, 0], k, bc_type="periodic")
            self._g = make_interp_spline(self.knots, loop[:, 1], k, bc_type="periodic")
        elif axis_endpoints:
            even = [(2 * i + 2, 0.0) for i in range((k - 1) // 2)]
            odd = [(2 * i + 1, 0.0) for i in range((k - 1) // 2)]
            self._f = make_interp_spline(self.knots, pts[:, 0], k, bc_type=(even, even))
            self._g = make_interp_spline(self.knots, pts[:, 1], k, bc_type=(odd, odd))
        else:
            self._f = make_interp_spline(self.knots, pts[:, 0], k)
            self._g = make_interp_spline(self.knots, pts[:, 1], k)

    def profile(self, alpha, k):
        alpha = np.asarray(alpha, dtype=float)
        if self.closed:
            alpha = np.mod(alpha, self.length)
        return self._f(alpha, k), self._g(alpha, k)

    def natural_domain(self, n_alpha, n_beta):
        return ParamDomain((0.0, self.length), (0.0, 2 * math.pi), n_alpha, n_beta,
                           periodic_alpha=self.closed, periodic_beta=True,
                           pole_alpha_start=self.axis_endpoints,
                           pole_alpha_end=self.axis_endpoints)

    def params(self):
        return {"samples": self.samples.tolist(), "closed": self.closed,
                "axis_endpoints": self.axis_endpoints, "degree": self.degree,
                **super().params()}


FAMILIES = {cls.kind: cls for cls in (Sphere, Torus, Cylinder, Catenoid, Revolution)}


def family_from_dict(spec: dict) -> SurfaceFamily:
    spec = dict(spec)
    kind = spec.pop("family")
    if kind not in FAMILIES:
        raise DomainError(f"unknown surface family {kind!r}")
    return FAMILIES[kind](**spec)


# ---------------------------------------------------------------------------
# frame quantities


@dataclass(frozen=True)
class FramePointData:
    r: np.ndarray
    A1: float
    A2: float
    e1: np.ndarray
    e2: np.ndarray
    N: np.ndarray
    p: float
    q: float
    Hc: float
    Kc: float
    kappa1: float
    kappa2: float
    H: float
    K: float

    @property
    def R1(self) -> float:
        """Principal radius -1/kappa1 (infinite along flat directions)."""
        return -1.0 / self.kappa1 if self.kappa1 != 0 else math.inf

    @property
    def R2(self) -> float:
        return -1.0 / self.kappa2 if self.kappa2 != 0 else math.inf


_QUANTITIES = ("r", "A1", "A2", "e1", "e2", "N", "p", "q", "Hc", "Kc",
               "kappa1", "kappa2", "H", "K")


def position_field(family: SurfaceFamily, domain: Optional[ParamDomain], alpha, beta) -> Field:
    """Position r as a Field whose exact partials come from the family."""
    cache: dict[tuple[int, int], Field] = {}

    def build(i, j):
        if (i, j) not in cache:
            if family.max_order is not None and i + j > family.max_order:
                return None
            values = family.position_partial(alpha, beta, i, j)
            cache[(i, j)] = Field(domain, values,
                                  lambda axis, i=i, j=j: build(i + 1, j) if axis == 0 else build(i, j + 1))
        return cache[(i, j)]

    return build(0, 0)


def frame_quantities(r: Field) -> dict[str, Field]:
    """All pointwise frame and curvature quantities derived from the position field."""
    ra = r.exact_partial(0)
    rb = r.exact_partial(1)
    raa = ra.exact_partial(0)
    rab = ra.exact_partial(1)
    rbb = rb.exact_partial(1)
    A1 = grid.norm(ra)
    A2 = grid.norm(rb)
    e1 = ra / A1
    e2 = rb / A2
    N = grid.cross(e1, e2)
    # (A1)_beta = p A2 and (A2)_alpha = q A1
    p = grid.dot(ra, rab) / (A1 * A2)
    q = grid.dot(rb, rab) / (A1 * A2)
    # N_alpha . e1 = -N . r_aa / A1 since N . e1 = 0
    Hc = -grid.dot(N, raa) / A1
    Kc = -grid.dot(N, rbb) / A2
    k1 = -Hc / A1
    k2 = -Kc / A2
    return {"r": r, "A1": A1, "A2": A2, "e1": e1, "e2": e2, "N": N, "p": p, "q": q,
            "Hc": Hc, "Kc": Kc, "kappa1": k1, "kappa2": k2,
            "H": 0.5 * (k1 + k2), "K": k1 * k2}


def _pole_limit(family, alpha_pole, inward, beta, domain=None) -> dict[str, Field]:
    # cubic extrapolation from three rows just inside the pole
    rows = []
    for k in (1, 2, 3):
        a = np.full_like(beta, alpha_pole + inward * k * POLE_OFFSET)
        rows.append(frame_quantities(position_field(family, None, a, beta)))
    out = {}
    for name in _QUANTITIES:
        q1, q2, q3 = (row[name] for row in rows)
        out[name] = 3.0 * q1 - 3.0 * q2 + q3
    out["r"] = position_field(family, None, np.full_like(beta, alpha_pole), beta)
    return out


def evaluate_point(family: SurfaceFamily, alpha: float, beta: float,
                   pole_tolerant: bool = False) -> FramePointData:
    """Frame, connection coefficients and curvatures at one parameter point."""
    a = np.array([[float(alpha)]])
    b = np.array([[float(beta)]])
    with np.errstate(divide="ignore", invalid="ignore"):
        quantities = frame_quantities(position_field(family, None, a, b))
    A1 = quantities["A1"].values.item()
    A2 = quantities["A2"].values.item()
    if A2 < 1e-12 * max(1.0, A1) or not np.isfinite(quantities["K"].values.item()):
        if not pole_tolerant:
            raise PoleSingularity(f"A2 = {A2:.3g} at alpha = {alpha}")
        lo, hi = family.natural_domain(4, 4).alpha_range
        inward = 1.0 if abs(alpha - lo) <= abs(alpha - hi) else -1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            quantities = _pole_limit(family, float(alpha), inward, b[0:1])
        quantities["A2"] = Field(None, [[0.0]])
        quantities["Kc"] = Field(None, [[0.0]])
    orth = abs(float(np.dot(quantities["e1"].values[0, 0], quantities["e2"].values[0, 0])))
    if orth > 1e-8:
        raise NonOrthogonalChart(f"|e1 . e2| = {orth:.3g} at ({alpha}, {beta})")
    data = {}
    for name in _QUANTITIES:
        v = quantities[name].values[0, 0]
        data[name] = v.copy() if v.ndim else float(v)
    return FramePointData(**data)


@dataclass(frozen=True)
class FrameField:
    """Frame quantities on every node of a domain (row-major, alpha outer).

    Each quantity is a :class:`Field` carrying exact partials wherever the
    family supplies enough closed-form derivatives.  Pole rows hold the
    analytic limits (A2 = Kc = 0 there).
    """

    family: SurfaceFamily
    domain: ParamDomain
    r: Field
    A1: Field
    A2: Field
    e1: Field
    e2: Field
    N: Field
    p: Field
    q: Field
    Hc: Field
    Kc: Field
    kappa1: Field
    kappa2: Field
    H: Field
    K: Field
    area_element: Field = dc_field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "area_element", self.A1 * self.A2)

    @property
    def shape(self):
        return self.domain.shape

    def point(self, i: int, j: int) -> FramePointData:
        data = {}
        for name in _QUANTITIES:
            v = getattr(self, name).values[i, j]
            data[name] = v.copy() if v.ndim else float(v)
        return FramePointData(**data)

    def replace(self, **fields) -> "FrameField":
        data = {name: getattr(self, name) for name in _QUANTITIES}
        data.update(fields)
        return FrameField(self.family, self.domain, **data)

    def scalar(self, values) -> Field:
        return grid.scalar(self.domain, values)


def evaluate_frame_field(family: SurfaceFamily, domain: ParamDomain) -> FrameField:
    """Evaluate all frame quantities on the grid of ``domain``."""
    natural = family.natural_domain(domain.n_alpha, domain.n_beta)
    for axis in (0, 1):
        if natural.periodic(axis) and not domain.periodic(axis):
            lo, hi = natural.interval(axis)
            dlo, dhi = domain.interval(axis)
            if dlo < lo - 1e-12 or dhi > hi + 1e-12:
                raise DomainError("domain exceeds the family's periodic interval")
        elif domain.periodic(axis) and not natural.periodic(axis):
            raise DomainError(f"axis {axis} is periodic in the domain but not for the family")
        elif not natural.periodic(axis):
            lo, hi = natural.interval(axis)
            dlo, dhi = domain.interval(axis)
            if dlo < lo - 1e-12 or dhi > hi + 1e-12:
                raise DomainError(f"axis {axis} interval [{dlo}, {dhi}] leaves the chart [{lo}, {hi}]")
        elif domain.periodic(axis):
            period = np.diff(natural.interval(axis))[0]
            if abs(np.diff(domain.interval(axis))[0] - period) > 1e-9 * period:
                raise DomainError("periodic domain interval must equal the family's period")
    alpha, beta = domain.mesh()
    with np.errstate(divide="ignore", invalid="ignore"):
        quantities = frame_quantities(position_field(family, domain, alpha, beta))
        pole_rows = domain.pole_rows()
        if pole_rows:
            beta_row = domain.nodes(1)[None, :]
            lo, hi = domain.alpha_range
            patches = {name: {} for name in _QUANTITIES}
            for row in pole_rows:
                a_pole, inward = (lo, 1.0) if row == 0 else (hi, -1.0)
                limit = _pole_limit(family, a_pole, inward, beta_row)
                for name in _QUANTITIES:
                    patches[name][row] = limit[name]
            for name in _QUANTITIES:
                if name == "r":
                    continue
                quantities[name] = grid.patch_rows(quantities[name], patches[name])
            quantities["A2"] = grid.fill_rows(quantities["A2"], pole_rows, 0.0)
            quantities["Kc"] = grid.fill_rows(quantities["Kc"], pole_rows, 0.0)
    interior = np.ones(domain.shape, dtype=bool)
    interior[pole_rows] = False
    A1, A2 = quantities["A1"].values, quantities["A2"].values
    bad = interior & ~((A1 > 0) & (A2 > 0))
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise PoleSingularity(f"degenerate metric at node ({i}, {j}) outside declared poles")
    orth = np.abs(np.sum(quantities["e1"].values * quantities["e2"].values, axis=-1))
    if np.any(orth[interior] > 1e-8):
        i, j = np.argwhere(interior & (orth > 1e-8))[0]
        raise NonOrthogonalChart(f"|e1 . e2| = {orth[i, j]:.3g} at node ({i}, {j})")
    return FrameField(family, domain, **quantities)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class CurvatureLineReport:
    max_F: float
    max_M: float

    def passed(self, tol: float = 1e-8) -> bool:
        return self.max_F < tol and self.max_M < tol


def curvature_line_check(family: SurfaceFamily, domain: ParamDomain,
                         stencil: Optional[Stencil] = None) -> CurvatureLineReport:
    """Max of |r_a . r_b| and |r_ab . N| normalized by A1 A2 over non-pole nodes.

    With ``stencil`` None the family's closed-form partials are used;
    otherwise r is differenced on the grid.
    """
    alpha, beta = domain.mesh()
    r = position_field(family, domain, alpha, beta)
    if stencil is None:
        ra, rb = r.exact_partial(0), r.exact_partial(1)
        rab = ra.exact_partial(1)
    else:
        plain = r.drop_exact()
        ra, rb = grid.partial(plain, 0, stencil), grid.partial(plain, 1, stencil)
        rab = grid.partial(ra, 1, stencil)
    with np.errstate(divide="ignore", invalid="ignore"):
        A1A2 = grid.norm(ra).values * grid.norm(rb).values
        n = np.cross(ra.values, rb.values)
        N = n / np.linalg.norm(n, axis=-1, keepdims=True)
        F = np.abs(np.sum(ra.values * rb.values, axis=-1)) / A1A2
        M = np.abs(np.sum(rab.values * N, axis=-1)) / A1A2
    keep = np.ones(domain.shape, dtype=bool)
    keep[domain.pole_rows()] = False
    return CurvatureLineReport(float(np.max(F[keep])), float(np.max(M[keep])))


@dataclass(frozen=True)
class GMCResidual:
    res1: np.ndarray
    res2: np.ndarray
    res3: np.ndarray
    sup1: float
    sup2: float
    sup3: float

    @property
    def sup(self) -> float:
        return max(self.sup1, self.sup2, self.sup3)

    def to_dict(self) -> dict:
        return {"sup1": self.sup1, "sup2": self.sup2, "sup3": self.sup3}


def gmc_residual(field: FrameField, stencil: Stencil = DEFAULT_STENCIL,
                 pole_margin: float = 0.0) -> GMCResidual:
    """Residuals of the Gauss-Mainardi-Codazzi integrability conditions.

    res1 = p_b + q_a + Hc Kc, res2 = (Hc)_b - p Kc, res3 = (Kc)_a - q Hc;
    sup norms are taken over interior nodes.
    """
    d = field.domain
    if d.n_alpha < 8 or d.n_beta < 8:
        raise GridTooCoarse("GMC residuals need at least 8 nodes per direction")
    P = grid.partial
    res1 = P(field.p, 1, stencil) + P(field.q, 0, stencil) + field.Hc * field.Kc
    res2 = P(field.Hc, 1, stencil) - field.p * field.Kc
    res3 = P(field.Kc, 0, stencil) - field.q * field.Hc
    mask = d.interior_mask(pole_margin)
    sups = [float(np.max(np.abs(r.values[mask]))) for r in (res1, res2, res3)]
    return GMCResidual(res1.values, res2.values, res3.values, *sups)
