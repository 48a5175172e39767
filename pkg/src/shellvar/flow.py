"""Normal-velocity descent of E on profile curves of surfaces of revolution.

Each profile sample moves along the in-plane unit normal (-g', f') / |(f', g')|
with speed vn = aK + 2bH - c, which makes the first variation of E equal to
minus the surface integral of vn**2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field, replace
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DegenerateProfile, DomainError, NotConverged, SelfIntersection, StepRejected
from .surface import FrameField, Revolution, evaluate_frame_field
from .variation import FunctionalCoefficients, FunctionalValues

BOUNDARY_CONDITIONS = ("free", "clamped_endpoints", "axis_endpoints")


@dataclass(frozen=True)
class ProfileCurve:
    """Planar generator (f, g): distance to the axis and height.

    Traverse the profile so that (-g', f') points away from the enclosed
    region (top to bottom for sphere-like profiles, clockwise for closed ones).
    """

    samples: np.ndarray
    closed: bool = False
    boundary_condition: str = "free"

    def __post_init__(self):
        pts = np.array(self.samples, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
            raise DegenerateProfile("profile needs at least 4 samples (f, g)")
        if self.boundary_condition not in BOUNDARY_CONDITIONS:
            raise DomainError(f"unknown boundary condition {self.boundary_condition!r}")
        if self.closed and self.boundary_condition == "axis_endpoints":
            raise DomainError("a closed profile has no axis endpoints")
        axis = self.boundary_condition == "axis_endpoints"
        if axis:
            if abs(pts[0, 0]) > 1e-9 or abs(pts[-1, 0]) > 1e-9:
                raise DegenerateProfile("axis endpoints must have f = 0")
            pts[0, 0] = pts[-1, 0] = 0.0
        inner = pts[1:-1, 0] if axis else pts[:, 0]
        if np.any(inner <= 0):
            raise DegenerateProfile("f must be positive away from axis endpoints")
        loop = np.vstack([pts, pts[:1]]) if self.closed else pts
        if np.any(np.linalg.norm(np.diff(loop, axis=0), axis=1) <= 0):
            raise DegenerateProfile("consecutive samples must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "samples", pts)

    @property
    def axis_endpoints(self) -> bool:
        return self.boundary_condition == "axis_endpoints"

    def family(self) -> Revolution:
        return Revolution(self.samples, closed=self.closed, axis_endpoints=self.axis_endpoints)

    def segment_lengths(self) -> np.ndarray:
        loop = np.vstack([self.samples, self.samples[:1]]) if self.closed else self.samples
        return np.linalg.norm(np.diff(loop, axis=0), axis=1)

    def with_samples(self, samples) -> "ProfileCurve":
        return replace(self, samples=samples)

    def self_intersects(self) -> bool:
        return _polyline_self_intersects(self.samples, self.closed)

    def to_dict(self) -> dict:
        return {"samples": self.samples.tolist(), "closed": self.closed,
                "boundary_condition": self.boundary_condition}


def _orient(p, q, r):
    return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - \
           (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])


def _polyline_self_intersects(pts: np.ndarray, closed: bool) -> bool:
    loop = np.vstack([pts, pts[:1]]) if closed else pts
    a, b = loop[:-1], loop[1:]
    n = len(a)
    for i in range(n - 2):
        j = np.arange(i + 2, n)
        if closed and i == 0:
            j = j[j != n - 1]
        if len(j) == 0:
            continue
        # segment i against the non-adjacent segments j
        o1 = _orient(a[i], b[i], a[j])
        o2 = _orient(a[i], b[i], b[j])
        o3 = _orient(a[j], b[j], a[i])
        o4 = _orient(a[j], b[j], b[i])
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False


def resample(profile: ProfileCurve, n: Optional[int] = None) -> ProfileCurve:
    """Samples equally spaced in arclength of the interpolating spline."""
    n = len(profile.samples) if n is None else n
    fam = profile.family()
    fine = np.linspace(0.0, fam.length, 16 * max(n, len(profile.samples)) + 1)
    df, dg = fam.profile(fine, 1)
    s = cumulative_trapezoid(np.hypot(df, dg), fine, initial=0.0)
    if profile.closed:
        targets = np.linspace(0.0, s[-1], n + 1)[:-1]
    else:
        targets = np.linspace(0.0, s[-1], n)
    params = np.interp(targets, s, fine)
    f, g = fam.profile(params, 0)
    pts = np.stack([f, g], axis=-1)
    if profile.axis_endpoints:
        pts[0, 0] = pts[-1, 0] = 0.0
    if profile.boundary_condition == "clamped_endpoints":
        pts[0], pts[-1] = profile.samples[0], profile.samples[-1]
    return profile.with_samples(pts)


def revolve(profile: ProfileCurve, n_beta: int = 16,
            n_alpha: Optional[int] = None) -> tuple[Revolution, FrameField]:
    """Revolution surface of the profile and its frame field.

    Warns with SelfIntersection when the planar profile crosses itself.
    """
    if profile.self_intersects():
        warnings.warn("profile curve intersects itself", SelfIntersection, stacklevel=2)
    fam = profile.family()
    n_alpha = len(profile.samples) if n_alpha is None else n_alpha
    return fam, evaluate_frame_field(fam, fam.natural_domain(n_alpha, n_beta))


def profile_geometry(profile: ProfileCurve) -> dict[str, np.ndarray]:
    """In-plane unit normals and the curvatures at the samples.

    Meridian curvature (f' g'' - g' f'') / s**3 and parallel curvature
    g' / (s f); on the axis the latter is replaced by its limit, the
    meridian curvature.
    """
    fam = profile.family()
    alpha = fam.knots[:-1] if profile.closed else fam.knots
    _, _, df, dg, s, k1, k2 = _curvatures(fam, alpha, profile.axis_endpoints)
    normal = np.stack([-dg, df], axis=-1) / s[:, None]
    if profile.axis_endpoints:
        normal[[0, -1], 0] = 0.0
        normal[[0, -1], 1] = np.sign(normal[[0, -1], 1])
    return {"alpha": alpha, "normal": normal, "kappa1": k1, "kappa2": k2,
            "H": 0.5 * (k1 + k2), "K": k1 * k2}


def normal_velocity(profile: ProfileCurve, coeffs: FunctionalCoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Descent speed vn = aK + 2bH - c at the samples and the in-plane normals."""
    geo = profile_geometry(profile)
    vn = coeffs.a * geo["K"] + 2.0 * coeffs.b * geo["H"] - coeffs.c
    return vn, geo["normal"]


# bound on h**2 times the largest eigenvalue of spline second differentiation
# (about 12 for cubic and 10 for quintic interpolation on uniform knots)
SPLINE_EIGEN_BOUND = 12.0


def stable_step(profile: ProfileCurve, config: FlowConfig) -> float:
    """Largest step allowed by the CFL cap and the explicit diffusion limit.

    The speed contains (a kappa2 + b) kappa1, and the meridian curvature
    kappa1 acts like a second derivative, so the flow diffuses with
    coefficient |a kappa2 + b|.
    """
    co = config.coeffs
    geo = profile_geometry(profile)
    vn = co.a * geo["K"] + 2.0 * co.b * geo["H"] - co.c
    h = float(np.min(profile.segment_lengths()))
    dt = config.step_size
    vmax = float(np.max(np.abs(vn)))
    if vmax > 0:
        dt = min(dt, config.cfl * h / vmax)
    diff = float(np.max(np.abs(co.a * geo["kappa2"] + co.b)))
    if diff > 0:
        dt = min(dt, config.diffusion_safety * 2.0 * h * h / (SPLINE_EIGEN_BOUND * diff))
    return dt


@dataclass(frozen=True)
class FlowConfig:
    coeffs: FunctionalCoefficients = FunctionalCoefficients(0.0, 1.0, -2.0)
    step_size: float = 1e-3
    max_steps: int = 1000
    residual_tolerance: float = 1e-3
    resample_every: int = 10
    step_control: str = "backtracking"
    n_beta: int = 8
    max_halvings: int = 40
    cfl: float = 0.5
    diffusion_safety: float = 0.5

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_steps < 0 or self.resample_every < 1:
            raise ValueError("max_steps must be >= 0 and resample_every >= 1")
        if not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be positive")
        if self.step_control not in ("fixed", "backtracking"):
            raise ValueError(f"unknown step control {self.step_control!r}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    energy: float
    residual_sup: float
    residual_l2: float
    max_displacement: float
    step_size: float

    def to_dict(self):
        return {"step": self.step, "energy": self.energy, "residual_sup": self.residual_sup,
                "residual_l2": self.residual_l2, "max_displacement": self.max_displacement,
                "step_size": self.step_size}


@dataclass
class FlowTrace:
    records: list[StepRecord] = dc_field(default_factory=list)
    converged: bool = False
    flags: list[str] = dc_field(default_factory=list)
    snapshots: list[tuple[int, np.ndarray]] = dc_field(default_factory=list)

    def append(self, record: StepRecord):
        if self.records and record.step <= self.records[-1].step:
            raise ValueError("trace records must have increasing step indices")
        self.records.append(record)

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def final(self) -> StepRecord:
        return self.records[-1]


def _curvatures(fam: Revolution, alpha: np.ndarray, axis_endpoints: bool):
    f, g = fam.profile(alpha, 0)
    df, dg = fam.profile(alpha, 1)
    ddf, ddg = fam.profile(alpha, 2)
    s = np.hypot(df, dg)
    k1 = (df * ddg - dg * ddf) / s ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        k2 = dg / (s * f)
    if axis_endpoints:
        k2[0], k2[-1] = k1[0], k1[-1]
    return f, g, df, dg, s, k1, k2


def profile_functionals(profile: ProfileCurve, coeffs: FunctionalCoefficients,
                        n_alpha: Optional[int] = None) -> tuple[FunctionalValues, float]:
    """Functionals of the revolved surface by quadrature along the profile only.

    The integrands do not depend on beta, so this equals functional_values on
    the revolved frame field up to rounding.  Also returns the L2 norm of the
    residual aK + 2bH - c.
    """
    fam = profile.family()
    n_alpha = len(profile.samples) if n_alpha is None else n_alpha
    domain = fam.natural_domain(n_alpha, 4)
    alpha = domain.nodes(0)
    f, g, df, dg, s, k1, k2 = _curvatures(fam, alpha, profile.axis_endpoints)
    w = domain.weights(0) * 2.0 * math.pi * f * s
    H, K = 0.5 * (k1 + k2), k1 * k2
    support = (g * df - f * dg) / s
    values = FunctionalValues.assemble(float(np.sum(w)), float(np.sum(w * support)) / 3.0,
                                       float(np.sum(w * H)), coeffs)
    res = coeffs.a * K + 2.0 * coeffs.b * H - coeffs.c
    return values, math.sqrt(float(np.sum(w * res * res)))


def evaluate_state(profile: ProfileCurve, config: FlowConfig) -> tuple[float, float, float]:
    """Energy, residual sup norm (at samples) and residual L2 norm (on the surface)."""
    values, l2 = profile_functionals(profile, config.coeffs)
    vn, _ = normal_velocity(profile, config.coeffs)
    return values.energy, float(np.max(np.abs(vn))), l2


def _advance(profile: ProfileCurve, vn, normal, dt) -> ProfileCurve:
    disp = dt * vn[:, None] * normal
    bc = profile.boundary_condition
    if bc == "clamped_endpoints":
        disp[0] = disp[-1] = 0.0
    elif bc == "axis_endpoints":
        disp[0, 0] = disp[-1, 0] = 0.0
    return profile.with_samples(profile.samples + disp)


def flow_step(profile: ProfileCurve, config: FlowConfig, step: int = 1,
              energy: Optional[float] = None) -> tuple[ProfileCurve, StepRecord]:
    """One explicit descent step with the step caps and optional backtracking.

    The returned record describes the new state.  Resampling happens when
    ``step`` is a multiple of ``config.resample_every``.
    """
    vn, normal = normal_velocity(profile, config.coeffs)
    vmax = float(np.max(np.abs(vn)))
    dt = stable_step(profile, config)
    if energy is None:
        energy = evaluate_state(profile, config)[0]
    halvings = 0
    while True:
        try:
            new = _advance(profile, vn, normal, dt)
            if step % config.resample_every == 0:
                new = resample(new)
            new_energy, sup, l2 = evaluate_state(new, config)
            ok = math.isfinite(new_energy)
        except DegenerateProfile:
            if config.step_control == "fixed":
                raise
            ok = False
        if config.step_control == "fixed" or (ok and new_energy <= energy):
            break
        halvings += 1
        if halvings > config.max_halvings:
            raise StepRejected(f"energy did not decrease at step size {dt:.3g}")
        dt *= 0.5
    return new, StepRecord(step, new_energy, sup, l2, dt * vmax, dt)


def run_flow(profile: ProfileCurve, config: FlowConfig, snapshot_every: int = 0,
             strict: bool = False) -> tuple[FlowTrace, ProfileCurve]:
    """Iterate flow_step until the residual sup norm drops below tolerance.

    Returns the trace (``trace.converged`` tells whether the tolerance was
    met) and the final profile.  With ``strict`` a NotConverged carrying the
    trace is raised instead of returning an unconverged result.
    """
    trace = FlowTrace()
    if profile.self_intersects():
        trace.flags.append("self_intersection")
        warnings.warn("profile curve intersects itself", SelfIntersection, stacklevel=2)
    energy, sup, l2 = evaluate_state(profile, config)
    trace.append(StepRecord(0, energy, sup, l2, 0.0, 0.0))
    if snapshot_every:
        trace.snapshots.append((0, profile.samples.copy()))
    trace.converged = sup < config.residual_tolerance
    step = 0
    while not trace.converged and step < config.max_steps:
        step += 1
        try:
            profile, record = flow_step(profile, config, step, energy)
        except StepRejected:
            trace.flags.append(f"step_rejected@{step}")
            break
        except DegenerateProfile:
            trace.flags.append(f"degenerate_profile@{step}")
            break
        trace.append(record)
        energy = record.energy
        if snapshot_every and step % snapshot_every == 0:
            trace.snapshots.append((step, profile.samples.copy()))
        trace.converged = record.residual_sup < config.residual_tolerance
    if snapshot_every and trace.snapshots[-1][0] != trace.final.step:
        trace.snapshots.append((trace.final.step, profile.samples.copy()))
    if strict and not trace.converged:
        err = NotConverged(f"residual {trace.final.residual_sup:.3g} after {trace.final.step} steps")
        err.trace = trace
        raise err
    return trace, profile


# ---------------------------------------------------------------------------
# presets and diagnostics


def perturbed_sphere(n_samples: int = 200, mode: int = 2, amplitude: float = 0.05,
                     radius: float = 1.0, seed: Optional[int] = None) -> ProfileCurve:
    """Profile of rho(a) = radius (1 + amplitude cos(mode a)), a in [0, pi].

    With a seed, a random smooth perturbation (cosine series up to ``mode``)
    replaces the single mode.
    """
    a = np.linspace(0.0, math.pi, n_samples)
    if seed is None:
        rho = radius * (1.0 + amplitude * np.cos(mode * a))
    else:
        rng = np.random.default_rng(seed)
        coef = rng.standard_normal(mode + 1)
        series = sum(c * np.cos(k * a) for k, c in enumerate(coef))
        rho = radius * (1.0 + amplitude * series / np.max(np.abs(series)))
    pts = np.stack([rho * np.sin(a), rho * np.cos(a)], axis=-1)
    pts[0, 0] = pts[-1, 0] = 0.0
    return resample(ProfileCurve(pts, boundary_condition="axis_endpoints"))


def circle_profile(center=(2.0, 0.0), radius: float = 1.0, n_samples: int = 200) -> ProfileCurve:
    """Closed circle traversed clockwise (outward normal)."""
    a = np.linspace(0.0, 2 * math.pi, n_samples, endpoint=False)
    pts = np.stack([center[0] + radius * np.cos(a), center[1] - radius * np.sin(a)], axis=-1)
    return ProfileCurve(pts, closed=True)


def segment_profile(radius: float = 1.0, height: float = 2.0, n_samples: int = 50,
                    boundary_condition: str = "clamped_endpoints") -> ProfileCurve:
    g = np.linspace(height / 2, -height / 2, n_samples)
    return ProfileCurve(np.stack([np.full_like(g, radius), g], axis=-1),
                        boundary_condition=boundary_condition)


PRESETS = {"perturbed_sphere": perturbed_sphere, "circle": circle_profile,
           "segment": segment_profile}


def best_fit_circle(points: np.ndarray, mirror: bool = True) -> tuple[np.ndarray, float, float]:
    """Algebraic least-squares circle; returns center, radius and max |distance - radius|.

    With ``mirror`` the points reflected across the axis (f -> -f) are
    included, which centers the fit on the axis for sphere-like profiles.
    """
    pts = np.asarray(points, dtype=float)
    fit = np.vstack([pts, pts * [-1.0, 1.0]]) if mirror else pts
    x, y = fit[:, 0], fit[:, 1]
    A = np.stack([x, y, np.ones_like(x)], axis=-1)
    sol, *_ = np.linalg.lstsq(A, x * x + y * y, rcond=None)
    center = sol[:2] / 2.0
    radius = math.sqrt(sol[2] + center @ center)
    dev = np.abs(np.linalg.norm(pts - center, axis=1) - radius)
    return center, radius, float(np.max(dev))
