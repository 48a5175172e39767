"""Parameter grids, grid fields with exact partials, differencing and quadrature.

A :class:`Field` holds values on the nodes of a :class:`ParamDomain`.  Fields
built from closed-form data (surface partials, trigonometric displacement
bases) also carry their exact partial derivatives, propagated through
arithmetic by the product and quotient rules.  :func:`partial` chooses between
those exact partials and finite differences according to a :class:`Stencil`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, DomainMismatch, MissingDerivative

Number = Union[int, float]


@dataclass(frozen=True)
class ParamDomain:
    """Rectangular (alpha, beta) chart sampled on a uniform node grid.

    Non-periodic axes include both endpoints; periodic axes drop the
    duplicated endpoint.  Pole edges are alpha edges where the chart
    degenerates (A2 -> 0), e.g. the poles of a sphere.
    """

    alpha_range: tuple[float, float]
    beta_range: tuple[float, float]
    n_alpha: int
    n_beta: int
    periodic_alpha: bool = False
    periodic_beta: bool = False
    pole_alpha_start: bool = False
    pole_alpha_end: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha_range", tuple(float(x) for x in self.alpha_range))
        object.__setattr__(self, "beta_range", tuple(float(x) for x in self.beta_range))
        for lo, hi in (self.alpha_range, self.beta_range):
            if not hi - lo > 0:
                raise DomainError(f"interval [{lo}, {hi}] has non-positive length")
        if self.n_alpha < 4 or self.n_beta < 4:
            raise DomainError("grid counts must be >= 4")
        if self.periodic_alpha and (self.pole_alpha_start or self.pole_alpha_end):
            raise DomainError("an edge cannot be both periodic and a pole")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_alpha, self.n_beta)

    def periodic(self, axis: int) -> bool:
        return self.periodic_alpha if axis == 0 else self.periodic_beta

    def count(self, axis: int) -> int:
        return self.n_alpha if axis == 0 else self.n_beta

    def interval(self, axis: int) -> tuple[float, float]:
        return self.alpha_range if axis == 0 else self.beta_range

    def spacing(self, axis: int) -> float:
        lo, hi = self.interval(axis)
        n = self.count(axis)
        return (hi - lo) / (n if self.periodic(axis) else n - 1)

    def nodes(self, axis: int) -> np.ndarray:
        lo, _ = self.interval(axis)
        return lo + self.spacing(axis) * np.arange(self.count(axis))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.nodes(0), self.nodes(1), indexing="ij")

    def weights(self, axis: int, order: int = 6) -> np.ndarray:
        n, h = self.count(axis), self.spacing(axis)
        if self.periodic(axis):
            return np.full(n, h)
        return h * end_corrected_weights(n, order)

    def pole_rows(self) -> list[int]:
        rows = []
        if self.pole_alpha_start:
            rows.append(0)
        if self.pole_alpha_end:
            rows.append(self.n_alpha - 1)
        return rows

    def interior_mask(self, pole_margin: float = 0.0) -> np.ndarray:
        """Nodes off every non-periodic edge, optionally a fixed distance from poles."""
        mask = np.ones(self.shape, dtype=bool)
        if not self.periodic_alpha:
            mask[0, :] = mask[-1, :] = False
        if not self.periodic_beta:
            mask[:, 0] = mask[:, -1] = False
        alpha = self.nodes(0)
        lo, hi = self.alpha_range
        if self.pole_alpha_start:
            mask[alpha < lo + pole_margin, :] = False
        if self.pole_alpha_end:
            mask[alpha > hi - pole_margin, :] = False
        return mask

    def refined(self) -> "ParamDomain":
        """Domain with half the node spacing on both axes."""
        def more(axis):
            n = self.count(axis)
            return 2 * n if self.periodic(axis) else 2 * n - 1
        return replace(self, n_alpha=more(0), n_beta=more(1))

    def with_counts(self, n_alpha: int, n_beta: int) -> "ParamDomain":
        return replace(self, n_alpha=n_alpha, n_beta=n_beta)

    @property
    def diameter(self) -> float:
        return math.hypot(self.alpha_range[1] - self.alpha_range[0],
                          self.beta_range[1] - self.beta_range[0])

    def to_dict(self) -> dict:
        return {
            "alpha_range": list(self.alpha_range),
            "beta_range": list(self.beta_range),
            "n_alpha": self.n_alpha,
            "n_beta": self.n_beta,
            "periodic_alpha": self.periodic_alpha,
            "periodic_beta": self.periodic_beta,
            "pole_alpha_start": self.pole_alpha_start,
            "pole_alpha_end": self.pole_alpha_end,
        }


# ---------------------------------------------------------------------------
# fields


class Field:
    """Grid values (scalar or 3-vector per node) with optional exact partials.

    ``deriv(axis)`` returns the exact partial as another Field, or None when it
    is not known to that depth.  Results are cached per axis.
    """

    __array_ufunc__ = None
    __slots__ = ("domain", "values", "_deriv", "_cache")

    def __init__(self, domain: Optional[ParamDomain], values,
                 deriv: Optional[Callable[[int], Optional["Field"]]] = None):
        self.domain = domain
        self.values = np.asarray(values, dtype=float)
        self._deriv = deriv
        self._cache: dict[int, Optional[Field]] = {}

    def __repr__(self):
        kind = "vector" if self.is_vector else "scalar"
        return f"Field({kind}, shape={self.values.shape}, exact={self.has_exact})"

    @classmethod
    def constant(cls, domain: Optional[ParamDomain], value, shape=None) -> "Field":
        shape = domain.shape if shape is None else shape
        value = np.asarray(value, dtype=float)
        values = np.broadcast_to(value, tuple(shape) + value.shape).copy()
        zero = np.zeros(value.shape)
        return cls(domain, values, lambda axis: Field.constant(domain, zero, shape))

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 3

    @property
    def has_exact(self) -> bool:
        return self._deriv is not None

    def exact_partial(self, axis: int) -> Optional["Field"]:
        if self._deriv is None:
            return None
        if axis not in self._cache:
            self._cache[axis] = self._deriv(axis)
        return self._cache[axis]

    def drop_exact(self) -> "Field":
        return Field(self.domain, self.values)

    def __getitem__(self, k: int) -> "Field":
        """Component k of a vector field."""
        return _unary(self, lambda v: v[..., k], lambda d: d[k])

    def __neg__(self):
        return _unary(self, np.negative, lambda d: -d)

    def __add__(self, other):
        return _binary(self, other, np.add, lambda a, b, da, db: da + db)

    def __radd__(self, other):
        return _binary(other, self, np.add, lambda a, b, da, db: da + db)

    def __sub__(self, other):
        return _binary(self, other, np.subtract, lambda a, b, da, db: da - db)

    def __rsub__(self, other):
        return _binary(other, self, np.subtract, lambda a, b, da, db: da - db)

    def __mul__(self, other):
        return _binary(self, other, np.multiply, lambda a, b, da, db: da * b + a * db)

    def __rmul__(self, other):
        return _binary(other, self, np.multiply, lambda a, b, da, db: da * b + a * db)

    def __truediv__(self, other):
        return _binary(self, other, np.divide,
                       lambda a, b, da, db: (da * b - a * db) / (b * b))

    def __rtruediv__(self, other):
        return _binary(other, self, np.divide,
                       lambda a, b, da, db: (da * b - a * db) / (b * b))


def _domain_of(*items) -> Optional[ParamDomain]:
    domain = None
    for x in items:
        if isinstance(x, Field) and x.domain is not None:
            if domain is not None and x.domain != domain:
                raise DomainMismatch("fields live on different parameter domains")
            domain = x.domain
    return domain


def _vals(x):
    return x.values if isinstance(x, Field) else x


def _align(a, b):
    # broadcast scalar fields against vector fields along the trailing axis
    if isinstance(a, np.ndarray) and isinstance(b, np.ndarray) and a.ndim != b.ndim:
        if a.ndim < b.ndim:
            a = a.reshape(a.shape + (1,) * (b.ndim - a.ndim))
        else:
            b = b.reshape(b.shape + (1,) * (a.ndim - b.ndim))
    return a, b


def _d(x, axis):
    return x.exact_partial(axis) if isinstance(x, Field) else 0.0


def _binary(a, b, op, rule):
    domain = _domain_of(a, b)
    av, bv = _align(_vals(a), _vals(b))
    with np.errstate(divide="ignore", invalid="ignore"):
        values = op(av, bv)
    fields = [x for x in (a, b) if isinstance(x, Field)]
    deriv = None
    if all(f.has_exact for f in fields):
        def deriv(axis):
            da, db = _d(a, axis), _d(b, axis)
            if da is None or db is None:
                return None
            return rule(a, b, da, db)
    return Field(domain, values, deriv)


def _unary(f: Field, op, rule):
    with np.errstate(divide="ignore", invalid="ignore"):
        values = op(f.values)
    deriv = None
    if f.has_exact:
        def deriv(axis):
            d = f.exact_partial(axis)
            return None if d is None else rule(d)
    return Field(f.domain, values, deriv)


def dot(a: Field, b: Field) -> Field:
    return _binary(a, b, lambda x, y: np.sum(x * y, axis=-1),
                   lambda a, b, da, db: dot(da, b) + dot(a, db))


def cross(a: Field, b: Field) -> Field:
    return _binary(a, b, np.cross, lambda a, b, da, db: cross(da, b) + cross(a, db))


def sqrt(a: Field) -> Field:
    root = _unary(a, np.sqrt, lambda d: d)
    if not a.has_exact:
        return root

    def deriv(axis):
        d = a.exact_partial(axis)
        return None if d is None else d / (2.0 * root)
    return Field(a.domain, root.values, deriv)


def norm(a: Field) -> Field:
    return sqrt(dot(a, a))


def stack(components) -> Field:
    """Vector field from three scalar fields."""
    domain = _domain_of(*components)
    values = np.stack([c.values for c in components], axis=-1)
    deriv = None
    if all(c.has_exact for c in components):
        def deriv(axis):
            ds = [c.exact_partial(axis) for c in components]
            return None if any(d is None for d in ds) else stack(ds)
    return Field(domain, values, deriv)


def fill_rows(f: Field, rows, fill: float = 0.0) -> Field:
    """Copy of f with the given alpha rows overwritten (exact partials too)."""
    if not rows:
        return f
    values = f.values.copy()
    values[list(rows)] = fill
    deriv = None
    if f.has_exact:
        def deriv(axis):
            d = f.exact_partial(axis)
            return None if d is None else fill_rows(d, rows, 0.0)
    return Field(f.domain, values, deriv)


def patch_rows(f: Field, patches: dict[int, Field]) -> Field:
    """Copy of f with alpha row i replaced by the single-row field patches[i]."""
    values = f.values.copy()
    for row, p in patches.items():
        values[row] = p.values[0]
    deriv = None
    if f.has_exact and all(p.has_exact for p in patches.values()):
        def deriv(axis):
            d = f.exact_partial(axis)
            dp = {row: p.exact_partial(axis) for row, p in patches.items()}
            if d is None or any(v is None for v in dp.values()):
                return None
            return patch_rows(d, dp)
    return Field(f.domain, values, deriv)


def scalar(domain: ParamDomain, values) -> Field:
    values = np.asarray(values, dtype=float)
    if values.shape[:2] != domain.shape:
        raise DomainMismatch(f"values of shape {values.shape} do not match grid {domain.shape}")
    return Field(domain, values)


# ---------------------------------------------------------------------------
# differentiation


@dataclass(frozen=True)
class Stencil:
    """How :func:`partial` differentiates.

    mode: ``"fd"`` always differences grid values; ``"exact"`` requires the
    field's exact partials; ``"auto"`` uses exact partials when present.
    order: accuracy order of the central finite differences (one-sided
    stencils of the same order at non-periodic edges).
    spectral: use FFT differentiation on periodic axes instead of FD.
    """

    order: int = 6
    spectral: bool = True
    mode: str = "fd"

    def __post_init__(self):
        if self.order < 2 or self.order % 2:
            raise ValueError("stencil order must be a positive even integer")
        if self.mode not in ("fd", "exact", "auto"):
            raise ValueError(f"unknown differentiation mode {self.mode!r}")


DEFAULT_STENCIL = Stencil()
CENTRAL2 = Stencil(order=2, spectral=False)
EXACT = Stencil(mode="exact")


def partial(f: Field, axis: int, stencil: Stencil = DEFAULT_STENCIL) -> Field:
    """Partial derivative of f along alpha (axis 0) or beta (axis 1)."""
    if stencil.mode != "fd":
        d = f.exact_partial(axis)
        if d is not None:
            return d
        if stencil.mode == "exact":
            raise MissingDerivative(f"no exact partial along axis {axis}")
    if f.domain is None:
        raise MissingDerivative("cannot difference a field without a grid")
    values = difference(f.values, axis, f.domain, stencil)
    return Field(f.domain, values)


def difference(values: np.ndarray, axis: int, domain: ParamDomain,
               stencil: Stencil = DEFAULT_STENCIL) -> np.ndarray:
    h = domain.spacing(axis)
    periodic = domain.periodic(axis)
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if periodic and stencil.spectral:
        out = _spectral_derivative(v, h)
    elif periodic:
        out = _periodic_fd(v, h, stencil.order)
    else:
        out = _bounded_fd(v, h, stencil.order)
    return np.moveaxis(out, 0, axis)


@lru_cache(maxsize=None)
def fd_weights(x0: float, nodes: tuple, m: int = 1) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at x0 on the given nodes."""
    x = np.asarray(nodes, dtype=float) - x0
    k = len(x)
    vander = np.array([x ** j / math.factorial(j) for j in range(k)])
    rhs = np.zeros(k)
    rhs[m] = 1.0
    return np.linalg.solve(vander, rhs)


def _spectral_derivative(v, h):
    n = v.shape[0]
    coef = np.fft.rfft(v, axis=0)
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
    mult = 1j * k
    if n % 2 == 0:
        mult[-1] = 0.0
    mult = mult.reshape((-1,) + (1,) * (v.ndim - 1))
    return np.fft.irfft(coef * mult, n=n, axis=0)


def _periodic_fd(v, h, order):
    m = order // 2
    offsets = tuple(range(-m, m + 1))
    w = fd_weights(0.0, offsets) / h
    out = np.zeros_like(v)
    for off, wk in zip(offsets, w):
        if wk != 0.0:
            out += wk * np.roll(v, -off, axis=0)
    return out


def _bounded_fd(v, h, order):
    n = v.shape[0]
    if n < order + 1:
        raise DomainError(f"need at least {order + 1} nodes for order-{order} differences")
    m = order // 2
    offsets = tuple(range(-m, m + 1))
    w = fd_weights(0.0, offsets) / h
    out = np.zeros_like(v)
    for off, wk in zip(offsets, w):
        if wk != 0.0:
            out[m:n - m] += wk * v[m + off:n - m + off]
    edge_nodes = tuple(range(order + 1))
    for i in range(m):
        wl = fd_weights(float(i), edge_nodes) / h
        out[i] = np.tensordot(wl, v[:order + 1], axes=(0, 0))
        out[n - 1 - i] = -np.tensordot(wl, v[::-1][:order + 1], axes=(0, 0))
    return out


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=None)
def _end_corrections(order: int) -> tuple:
    # left-end corrections c_i to trapezoid weights making the rule locally
    # exact for x**l, l < order (Euler-Maclaurin endpoint terms)
    m = order
    bern = {1: 1.0 / 12.0, 3: -1.0 / 120.0, 5: 1.0 / 252.0, 7: -1.0 / 240.0, 9: 1.0 / 132.0}
    a = np.array([[float(i) ** l if (i or l) else 1.0 for i in range(m)] for l in range(m)])
    rhs = np.array([bern.get(l, 0.0) for l in range(m)])
    return tuple(np.linalg.solve(a, rhs))


def end_corrected_weights(n: int, order: int = 6) -> np.ndarray:
    """Unit-spacing weights of the end-corrected trapezoid rule.

    ``order=2`` is the plain composite trapezoid rule; higher even orders add
    Gregory-type endpoint corrections with error O(h**order).
    """
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    if order <= 2:
        return w
    corr = np.array(_end_corrections(order))
    if n < 2 * len(corr):
        raise DomainError(f"need at least {2 * len(corr)} nodes for order-{order} quadrature")
    w[:len(corr)] += corr
    w[n - len(corr):] += corr[::-1]
    return w
