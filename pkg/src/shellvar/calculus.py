"""Fields on a frame grid, surface quadrature, divergence, gradient and boundary fluxes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import grid
from .errors import DomainMismatch, EdgeNotBoundary
from .grid import Field, ParamDomain, Stencil, DEFAULT_STENCIL
from .surface import FrameField

ScalarField = Field

EDGES = ("alpha_min", "alpha_max", "beta_min", "beta_max")


@dataclass(frozen=True)
class TangentField:
    """Tangent field eta = v1 e1 + v2 e2 in frame components."""

    v1: Field
    v2: Field

    def __post_init__(self):
        if self.v1.values.shape != self.v2.values.shape:
            raise DomainMismatch("v1 and v2 have different shapes")
        grid._domain_of(self.v1, self.v2)

    @property
    def domain(self) -> Optional[ParamDomain]:
        return self.v1.domain or self.v2.domain

    @classmethod
    def zero(cls, domain: ParamDomain) -> "TangentField":
        z = Field.constant(domain, 0.0)
        return cls(z, z)

    def __add__(self, other: "TangentField") -> "TangentField":
        return TangentField(self.v1 + other.v1, self.v2 + other.v2)

    def __mul__(self, s) -> "TangentField":
        return TangentField(self.v1 * s, self.v2 * s)

    __rmul__ = __mul__

    def ambient(self, field: FrameField) -> Field:
        return field.e1 * self.v1 + field.e2 * self.v2


@dataclass(frozen=True)
class DisplacementField:
    """Variation vector V = v1 e1 + v2 e2 + vn N in frame components."""

    tangent: TangentField
    vn: Field

    def __post_init__(self):
        grid._domain_of(self.tangent.v1, self.tangent.v2, self.vn)

    @classmethod
    def from_components(cls, v1, v2, vn, domain: Optional[ParamDomain] = None) -> "DisplacementField":
        def as_field(v):
            if isinstance(v, Field):
                return v
            return Field.constant(domain, float(v)) if np.ndim(v) == 0 else grid.scalar(domain, v)
        return cls(TangentField(as_field(v1), as_field(v2)), as_field(vn))

    @classmethod
    def zero(cls, domain: ParamDomain) -> "DisplacementField":
        return cls.from_components(0.0, 0.0, 0.0, domain)

    @property
    def v1(self) -> Field:
        return self.tangent.v1

    @property
    def v2(self) -> Field:
        return self.tangent.v2

    @property
    def domain(self) -> Optional[ParamDomain]:
        return self.tangent.domain or self.vn.domain

    def __add__(self, other: "DisplacementField") -> "DisplacementField":
        return DisplacementField(self.tangent + other.tangent, self.vn + other.vn)

    def __mul__(self, s) -> "DisplacementField":
        return DisplacementField(self.tangent * s, self.vn * s)

    __rmul__ = __mul__

    def ambient(self, field: FrameField) -> Field:
        return self.tangent.ambient(field) + field.N * self.vn

    def drop_exact(self) -> "DisplacementField":
        return DisplacementField.from_components(
            self.v1.drop_exact(), self.v2.drop_exact(), self.vn.drop_exact())

    def grid_values(self) -> np.ndarray:
        """(n_alpha, n_beta, 3) array of (v1, v2, vn)."""
        shape = self.domain.shape
        return np.stack([np.broadcast_to(c.values, shape) for c in (self.v1, self.v2, self.vn)],
                        axis=-1)


@dataclass(frozen=True)
class BoundarySpec:
    """Active boundary edges of the parameter rectangle.

    The outward conormal is -e1 on alpha_min, +e1 on alpha_max, -e2 on
    beta_min and +e2 on beta_max.
    """

    edges: tuple[str, ...] = ()

    def __post_init__(self):
        for e in self.edges:
            if e not in EDGES:
                raise ValueError(f"unknown edge {e!r}")
        object.__setattr__(self, "edges", tuple(dict.fromkeys(self.edges)))

    @staticmethod
    def sign(edge: str) -> float:
        return 1.0 if edge.endswith("max") else -1.0

    @classmethod
    def closed(cls) -> "BoundarySpec":
        return cls(())

    @classmethod
    def of(cls, domain: ParamDomain) -> "BoundarySpec":
        """All edges of the domain that are genuine boundary (not periodic, not poles)."""
        edges = []
        if not domain.periodic_alpha:
            if not domain.pole_alpha_start:
                edges.append("alpha_min")
            if not domain.pole_alpha_end:
                edges.append("alpha_max")
        if not domain.periodic_beta:
            edges += ["beta_min", "beta_max"]
        return cls(tuple(edges))

    def validate(self, domain: ParamDomain, allow_poles: bool = True):
        for e in self.edges:
            axis = 0 if e.startswith("alpha") else 1
            if domain.periodic(axis):
                raise EdgeNotBoundary(f"edge {e} lies on a periodic direction")
            if not allow_poles and ((e == "alpha_min" and domain.pole_alpha_start)
                                    or (e == "alpha_max" and domain.pole_alpha_end)):
                raise EdgeNotBoundary(f"edge {e} is a pole")


def _check(field: FrameField, *items):
    for x in items:
        fields = (x.v1, x.v2) if isinstance(x, TangentField) else \
            (x.v1, x.v2, x.vn) if isinstance(x, DisplacementField) else (x,)
        for f in fields:
            if isinstance(f, Field) and f.domain is not None and f.domain != field.domain:
                raise DomainMismatch("field lives on a different parameter domain")
            if isinstance(f, Field) and f.values.shape[:2] not in ((), field.domain.shape) \
                    and f.values.ndim >= 2:
                raise DomainMismatch(f"values of shape {f.values.shape} do not match the grid")


def mask_poles(field: FrameField, f: Field) -> Field:
    """f with pole rows set to 0 (operators that divide by A2 are undefined there)."""
    return grid.fill_rows(f, field.domain.pole_rows(), 0.0)


def quadrature_weights(domain: ParamDomain, order: int = 6) -> np.ndarray:
    return np.outer(domain.weights(0, order), domain.weights(1, order))


def integrate_scalar(field: FrameField, f, order: int = 6) -> float:
    """Integral of f over the surface, dA = A1 A2 dalpha dbeta.

    Periodic directions use the periodic trapezoid rule; bounded directions
    the end-corrected trapezoid rule of the given order (2: plain trapezoid).
    """
    if isinstance(f, Field):
        _check(field, f)
    values = f.values if isinstance(f, Field) else np.asarray(f, dtype=float)
    values = np.broadcast_to(values, field.domain.shape)
    dA = field.area_element.values
    integrand = values * dA
    # pole rows have dA = 0 and may hold undefined integrand values
    integrand = np.where(dA == 0.0, 0.0, integrand)
    return float(np.sum(quadrature_weights(field.domain, order) * integrand))


def surface_divergence(field: FrameField, eta: TangentField,
                       stencil: Stencil = DEFAULT_STENCIL) -> Field:
    """div eta = ((v1 A2)_alpha + (v2 A1)_beta) / (A1 A2); zero on pole rows."""
    _check(field, eta)
    P = grid.partial
    div = (P(eta.v1 * field.A2, 0, stencil) + P(eta.v2 * field.A1, 1, stencil)) / field.area_element
    return mask_poles(field, div)


def surface_gradient(field: FrameField, f: Field, stencil: Stencil = DEFAULT_STENCIL) -> TangentField:
    """grad f = (f_alpha / A1) e1 + (f_beta / A2) e2; the e2 part is zero on pole rows."""
    _check(field, f)
    return TangentField(grid.partial(f, 0, stencil) / field.A1,
                        mask_poles(field, grid.partial(f, 1, stencil) / field.A2))


def edge_flux(field: FrameField, c1: Field, c2: Field, boundary: BoundarySpec,
              order: int = 6) -> float:
    """Sum over active edges of the line integral of W.t ds, given c1 = W.e1, c2 = W.e2.

    ds = A2 dbeta on alpha edges, A1 dalpha on beta edges; pole edges contribute 0.
    """
    d = field.domain
    boundary.validate(d)
    shape = d.shape
    c1 = np.broadcast_to(c1.values, shape)
    c2 = np.broadcast_to(c2.values, shape)
    total = 0.0
    for edge in boundary.edges:
        s = BoundarySpec.sign(edge)
        if edge.startswith("alpha"):
            row = 0 if edge == "alpha_min" else -1
            if (row == 0 and d.pole_alpha_start) or (row == -1 and d.pole_alpha_end):
                continue
            total += s * float(np.sum(d.weights(1, order) * c1[row] * field.A2.values[row]))
        else:
            col = 0 if edge == "beta_min" else -1
            total += s * float(np.sum(d.weights(0, order) * c2[:, col] * field.A1.values[:, col]))
    return total


def boundary_line_integral(field: FrameField, eta: TangentField, boundary: BoundarySpec,
                           order: int = 6) -> float:
    """Boundary integral of eta . t ds with the outward conormal t."""
    _check(field, eta)
    return edge_flux(field, eta.v1, eta.v2, boundary, order)


def ambient_boundary_integral(field: FrameField, w: Field, boundary: BoundarySpec,
                              order: int = 6) -> float:
    """Boundary integral of W . t ds for an ambient vector field W."""
    return edge_flux(field, grid.dot(w, field.e1), grid.dot(w, field.e2), boundary, order)


def divergence_theorem_residual(field: FrameField, eta: TangentField, boundary: BoundarySpec,
                                stencil: Stencil = DEFAULT_STENCIL, order: int = 6) -> float:
    """|integral of div eta dA - boundary integral of eta . t ds|."""
    interior = integrate_scalar(field, surface_divergence(field, eta, stencil), order)
    return abs(interior - boundary_line_integral(field, eta, boundary, order))


# ---------------------------------------------------------------------------
# smooth test fields


class TrigPolynomial:
    """Tensor trigonometric polynomial sum C[j, k] B_j(alpha) B_k(beta).

    Basis on each axis: 1, cos(theta), sin(theta), ..., cos(d theta),
    sin(d theta) with theta = 2 pi (x - x0) / L on periodic axes and
    pi (x - x0) / L on bounded ones.  Partials of any order are exact.
    """

    def __init__(self, domain: ParamDomain, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] % 2 == 0 or coeffs.shape[1] % 2 == 0:
            raise ValueError("coefficient matrix must be (2d+1) x (2e+1)")
        self.domain = domain
        self.coeffs = coeffs

    @classmethod
    def random(cls, domain: ParamDomain, rng: np.random.Generator, degree: int = 4) -> "TrigPolynomial":
        j = np.repeat(np.arange(degree + 1), 2)[1:]
        decay = 1.0 / (1.0 + j[:, None] ** 2 + j[None, :] ** 2)
        return cls(domain, rng.standard_normal((2 * degree + 1, 2 * degree + 1)) * decay)

    def _basis(self, axis: int, x: np.ndarray, order: int) -> np.ndarray:
        lo, hi = self.domain.interval(axis)
        omega = (2.0 if self.domain.periodic(axis) else 1.0) * math.pi / (hi - lo)
        theta = omega * (x - lo)
        degree = (self.coeffs.shape[axis] - 1) // 2
        cols = [np.full_like(x, 1.0 if order == 0 else 0.0)]
        shift = order * math.pi / 2
        for k in range(1, degree + 1):
            scale = (k * omega) ** order
            cols.append(scale * np.cos(k * theta + shift))
            cols.append(scale * np.sin(k * theta + shift))
        return np.stack(cols, axis=-1)

    def evaluate(self, alpha, beta, i: int = 0, j: int = 0) -> np.ndarray:
        ba = self._basis(0, np.asarray(alpha, dtype=float), i)
        bb = self._basis(1, np.asarray(beta, dtype=float), j)
        return np.einsum("...j,jk,...k->...", ba, self.coeffs, bb)

    def field(self) -> Field:
        alpha, beta = self.domain.mesh()

        def build(i, j):
            return Field(self.domain, self.evaluate(alpha, beta, i, j),
                         lambda axis: build(i + 1, j) if axis == 0 else build(i, j + 1))
        return build(0, 0)


def pole_taper(domain: ParamDomain, power: int = 2) -> Field:
    """Smooth factor vanishing at pole edges: sin(pi (alpha - a0)/L)**power per pole end."""
    lo, hi = domain.alpha_range
    alpha, _ = domain.mesh()
    L = hi - lo
    w = math.pi / L

    def build(i):
        return Field(domain, _taper_derivative(alpha, lo, w, power, i, domain),
                     lambda axis: build(i + 1) if axis == 0 else Field.constant(domain, 0.0))
    if not domain.pole_rows():
        return Field.constant(domain, 1.0)
    return build(0)


def _taper_derivative(alpha, lo, w, power, i, domain):
    # factor s(alpha)**power with s = sin(w (alpha - lo)) when both ends are
    # poles, and the half-period variants for a single pole end
    if domain.pole_alpha_start and domain.pole_alpha_end:
        phase, freq = 0.0, w
    elif domain.pole_alpha_start:
        phase, freq = 0.0, w / 2
    else:
        phase, freq = math.pi / 2, w / 2
    theta = freq * (alpha - lo) + phase
    # binomial expansion of sin^n = (e^{it} - e^{-it})^n / (2i)^n, differentiated termwise
    out = np.zeros_like(alpha)
    for k in range(power + 1):
        c = math.comb(power, k) * (-1) ** k
        m = power - 2 * k
        out = out + c * (1j * m * freq) ** i * np.exp(1j * m * theta)
    return np.real(out / (2j) ** power)


def random_displacement(domain: ParamDomain, seed: int, degree: int = 4,
                        taper: Optional[int] = None) -> DisplacementField:
    """Seeded smooth displacement with independent trig polynomials for v1, v2, vn.

    On domains with pole edges the components are multiplied by a factor
    vanishing at the poles (power ``taper``, default 2).
    """
    rng = np.random.default_rng(seed)
    comps = [TrigPolynomial.random(domain, rng, degree).field() for _ in range(3)]
    if domain.pole_rows():
        factor = pole_taper(domain, 2 if taper is None else taper)
        comps = [c * factor for c in comps]
    return DisplacementField(TangentField(comps[0], comps[1]), comps[2])


def frame_components(field: FrameField, w: Field) -> DisplacementField:
    """Frame components (w.e1, w.e2, w.N) of an ambient vector field."""
    return DisplacementField(TangentField(grid.dot(w, field.e1), grid.dot(w, field.e2)),
                             grid.dot(w, field.N))


def translation_field(field: FrameField, c: Iterable[float]) -> DisplacementField:
    """Infinitesimal translation V = c in frame components."""
    const = Field.constant(field.domain, np.asarray(list(c), dtype=float))
    return frame_components(field, const)


def rotation_field(field: FrameField, omega: Iterable[float]) -> DisplacementField:
    """Infinitesimal rotation V = omega x r in frame components."""
    const = Field.constant(field.domain, np.asarray(list(omega), dtype=float))
    return frame_components(field, grid.cross(const, field.r))
