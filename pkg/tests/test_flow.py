import math
import warnings

import numpy as np
import pytest

from shellvar.errors import DegenerateProfile, NotConverged, SelfIntersection
from shellvar.flow import (FlowConfig, ProfileCurve, best_fit_circle, circle_profile, flow_step,
                           normal_velocity, perturbed_sphere, profile_functionals, resample,
                           revolve, run_flow, segment_profile, stable_step)
from shellvar.surface import evaluate_point
from shellvar.variation import FunctionalCoefficients, functional_values

CMC = FunctionalCoefficients(0.0, 1.0, -2.0)


def unit_semicircle(n=200):
    a = np.linspace(0, math.pi, n)
    pts = np.stack([np.sin(a), np.cos(a)], axis=-1)
    pts[0, 0] = pts[-1, 0] = 0.0
    return ProfileCurve(pts, boundary_condition="axis_endpoints")


def test_revolve_semicircle_is_unit_sphere():
    fam, field = revolve(unit_semicircle(), n_beta=16)
    assert np.max(np.abs(field.H.values[1:-1] + 1.0)) < 1e-6


def test_revolve_circle_is_torus():
    fam, field = revolve(circle_profile((2.0, 0.0), 1.0, 200), n_beta=16)
    p = evaluate_point(fam, 0.0, 0.0)
    assert p.r[0] == pytest.approx(3.0)
    assert p.K == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_revolve_segment_is_cylinder():
    _, field = revolve(segment_profile(1.0, 2.0, 50), n_beta=16)
    assert np.max(np.abs(field.K.values)) < 1e-8


def test_profile_validation():
    with pytest.raises(DegenerateProfile):
        ProfileCurve(np.array([[1.0, 0.0], [-0.5, 1.0], [1.0, 2.0], [1.0, 3.0]]))
    with pytest.raises(DegenerateProfile):
        ProfileCurve(np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 2.0], [1.0, 3.0]]))
    with pytest.raises(ValueError):
        ProfileCurve(np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]),
                     boundary_condition="periodic")


def test_resample_equalizes_segments():
    # bunch samples toward the north pole
    a = np.linspace(0, 1, 60) ** 2 * math.pi
    pts = np.stack([np.sin(a), np.cos(a)], axis=-1)
    pts[0, 0] = pts[-1, 0] = 0.0
    prof = resample(ProfileCurve(pts, boundary_condition="axis_endpoints"))
    seg = prof.segment_lengths()
    assert seg.max() / seg.min() <= 2.0
    assert seg.max() / seg.min() < 1.01


def test_profile_energy_matches_surface_quadrature():
    prof = perturbed_sphere(120)
    c = FunctionalCoefficients(1.0, 0.5, -0.25)
    fv, _ = profile_functionals(prof, c)
    _, field = revolve(prof, n_beta=8)
    ref = functional_values(field, c)
    for k in ("area", "volume", "mean_integral", "energy"):
        assert getattr(fv, k) == pytest.approx(getattr(ref, k), rel=1e-12)


def test_exact_sphere_is_stationary():
    prof = unit_semicircle()
    vn, _ = normal_velocity(prof, CMC)
    assert np.max(np.abs(vn)) < 1e-8
    new, _ = flow_step(prof, FlowConfig(CMC, step_control="fixed", resample_every=10 ** 6))
    assert np.max(np.abs(new.samples - prof.samples)) < 1e-12


def test_offset_coefficient_shrinks_sphere_uniformly():
    prof = unit_semicircle()
    config = FlowConfig(FunctionalCoefficients(0.0, 1.0, -1.9), step_control="fixed",
                        resample_every=10 ** 6)
    vn, _ = normal_velocity(prof, config.coeffs)
    assert np.max(np.abs(vn)) == pytest.approx(0.1, abs=1e-8)
    new, rec = flow_step(prof, config)
    radius = np.hypot(new.samples[:, 0], new.samples[:, 1])
    assert radius.max() - radius.min() < 1e-12
    assert radius.mean() == pytest.approx(1.0 - 0.1 * rec.step_size, abs=1e-12)


def test_first_step_decreases_energy():
    prof = perturbed_sphere(200, mode=2, amplitude=0.05)
    config = FlowConfig(CMC, step_size=5e-3)
    e0 = profile_functionals(prof, CMC)[0].energy
    _, rec = flow_step(prof, config, 1, e0)
    assert rec.energy < e0


def test_step_caps():
    prof = perturbed_sphere(200)
    config = FlowConfig(CMC, step_size=1.0)
    dt = stable_step(prof, config)
    vn, _ = normal_velocity(prof, CMC)
    assert dt * np.max(np.abs(vn)) <= 0.5 * prof.segment_lengths().min() + 1e-15
    assert dt < 1.0


def test_short_run_monotone_and_records():
    prof = perturbed_sphere(100)
    trace, final = run_flow(prof, FlowConfig(CMC, max_steps=200), snapshot_every=50)
    steps = [r.step for r in trace.records]
    assert steps == list(range(len(steps)))
    assert np.all(np.diff(trace.energies) <= 0)
    assert [s for s, _ in trace.snapshots] == [0, 50, 100, 150, 200]
    assert trace.records[-1].residual_sup < trace.records[0].residual_sup


def test_max_steps_zero():
    prof = perturbed_sphere(50)
    trace, final = run_flow(prof, FlowConfig(CMC, max_steps=0))
    assert len(trace.records) == 1 and not trace.converged
    assert final is prof
    with pytest.raises(NotConverged):
        run_flow(prof, FlowConfig(CMC, max_steps=0), strict=True)


def test_converged_start_needs_no_steps():
    trace, _ = run_flow(unit_semicircle(), FlowConfig(CMC))
    assert trace.converged and len(trace.records) == 1


def test_self_intersection_flagged():
    t = np.linspace(0, 2 * math.pi, 80, endpoint=False)
    pts = np.stack([3.0 + np.cos(t), 0.5 * np.sin(2 * t)], axis=-1)
    prof = ProfileCurve(pts, closed=True)
    assert prof.self_intersects()
    with pytest.warns(SelfIntersection):
        trace, _ = run_flow(prof, FlowConfig(CMC, max_steps=2))
    assert "self_intersection" in trace.flags
    with warnings.catch_warnings():
        warnings.simplefilter("error", SelfIntersection)
        assert not circle_profile().self_intersects()


def test_best_fit_circle():
    prof = unit_semicircle(100)
    center, radius, dev = best_fit_circle(prof.samples)
    assert radius == pytest.approx(1.0, abs=1e-12)
    assert dev < 1e-12
    assert np.allclose(center, 0.0, atol=1e-12)
    _, _, dev2 = best_fit_circle(perturbed_sphere(100, amplitude=0.05).samples)
    assert dev2 > 0.01


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(CMC, step_size=0.0)
    with pytest.raises(ValueError):
        FlowConfig(CMC, step_control="adaptive")
    with pytest.raises(ValueError):
        FlowConfig(CMC, resample_every=0)
