import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import BAND, OFFSET
from shellvar.calculus import BoundarySpec, DisplacementField, random_displacement
from shellvar.grid import CENTRAL2, Field
from shellvar.oracle import deform, deformed_frame_curvatures
from shellvar.surface import Sphere, Torus, evaluate_frame_field
from shellvar.validation import ANALYTIC
from shellvar.variation import (FunctionalCoefficients, FunctionalValues, VariationBreakdown,
                                all_variations, delta_area, delta_energy, delta_mean_integral,
                                delta_mean_pointwise, delta_principal_curvatures, delta_volume,
                                functional_values, key1_residual, lw_residual, vol1_residual)

PI = math.pi


@pytest.fixture(scope="module")
def sphere():
    s = Sphere(1.0)
    d = s.natural_domain(128, 128)
    return evaluate_frame_field(s, d)


@pytest.fixture(scope="module")
def torus():
    t = Torus(2.0, 1.0)
    return evaluate_frame_field(t, t.natural_domain(128, 128))


def normal(field, value=1.0):
    return DisplacementField.from_components(0.0, 0.0, value, field.domain)


def tangential(field, seed=3):
    d = random_displacement(field.domain, seed)
    return DisplacementField(d.tangent, Field.constant(field.domain, 0.0))


def test_breakdown_total():
    b = VariationBreakdown(1.25, -0.5)
    assert b.total == 0.75


def test_energy_assembly_and_zero_coefficients(torus):
    fv = functional_values(torus, FunctionalCoefficients(0.0, 0.0, 0.0))
    assert fv.energy == 0.0
    c = FunctionalCoefficients(1.0, 0.5, -0.25)
    fv = functional_values(torus, c)
    assert fv.energy == pytest.approx(fv.mean_integral + 0.5 * fv.area - 0.25 * fv.volume, rel=1e-15)
    assert fv == FunctionalValues.assemble(fv.area, fv.volume, fv.mean_integral, c)


def test_nonfinite_coefficients_rejected():
    with pytest.raises(ValueError):
        FunctionalCoefficients(math.nan, 1.0, 0.0)


def test_torus_profile_integrals_independent(torus):
    # 1D quadrature of the meridian: dA = (2 + cos a) da db, r.N = 1 + 2 cos a, H = -(1 + cos a)/(2 + cos a)
    a = np.linspace(0, 2 * PI, 4096, endpoint=False)
    w = 2 * PI / a.size * 2 * PI
    f = 2 + np.cos(a)
    fv = functional_values(torus)
    assert fv.area == pytest.approx(np.sum(w * f), rel=1e-12)
    assert fv.volume == pytest.approx(np.sum(w * f * (1 + 2 * np.cos(a))) / 3, rel=1e-12)
    assert fv.mean_integral == pytest.approx(np.sum(w * -(1 + np.cos(a))), rel=1e-12)


def test_inflation_variations_sphere(sphere):
    v = all_variations(sphere, normal(sphere), BoundarySpec(), FunctionalCoefficients())
    assert v["area"].total == pytest.approx(8 * PI, rel=1e-6)
    assert v["volume"].total == pytest.approx(4 * PI, rel=1e-6)
    assert v["mean_integral"].total == pytest.approx(-4 * PI, rel=1e-6)


def test_inflation_variations_torus(torus):
    v = all_variations(torus, normal(torus), BoundarySpec(), FunctionalCoefficients(1.0, 0.0, 0.0))
    assert v["area"].total == pytest.approx(8 * PI ** 2, rel=1e-8)
    assert v["volume"].total == pytest.approx(8 * PI ** 2, rel=1e-8)
    assert abs(v["mean_integral"].total) < 1e-8
    assert abs(v["energy"].total) < 1e-8


@pytest.mark.parametrize("name", ["torus", "sphere"])
def test_tangential_fields_vary_nothing_on_closed_surfaces(name, request):
    field = request.getfixturevalue(name)
    v = all_variations(field, tangential(field), BoundarySpec(), FunctionalCoefficients(1.0, 0.5, -0.25))
    for k, br in v.items():
        assert abs(br.total) < 1e-8, k


def test_energy_is_linear_combination(torus):
    disp = random_displacement(torus.domain, 9)
    b = BoundarySpec()
    A, V, M = (f(torus, disp, b).total for f in (delta_area, delta_volume, delta_mean_integral))
    e = delta_energy(torus, disp, b, FunctionalCoefficients(0.7, -1.1, 2.3)).total
    assert e == pytest.approx(0.7 * M - 1.1 * A + 2.3 * V, rel=1e-12)
    e_area = delta_energy(torus, disp, b, FunctionalCoefficients(0.0, 1.0, 0.0))
    assert e_area.total == pytest.approx(A, rel=1e-14)


def test_band_boundary_terms_nonzero_and_consistent():
    s = Sphere(1.0)
    d = s.band(*BAND, 65, 64)
    f = evaluate_frame_field(s, d)
    disp = random_displacement(d, 1)
    b = BoundarySpec.of(d)
    c = FunctionalCoefficients(1.0, 0.5, -0.25)
    v = all_variations(f, disp, b, c)
    for k in ("area", "volume", "mean_integral", "energy"):
        assert abs(v[k].boundary) > 1e-3
    combo = c.a * v["mean_integral"].boundary + c.b * v["area"].boundary + c.c * v["volume"].boundary
    assert v["energy"].boundary == pytest.approx(combo, rel=1e-12)


def test_sphere_principal_curvature_variation(sphere):
    dk1, dk2 = delta_principal_curvatures(sphere, normal(sphere))
    inner = slice(1, -1)
    assert np.allclose(dk1.values[inner], 1.0, atol=1e-12)
    assert np.allclose(dk2.values[inner], 1.0, atol=1e-12)
    zero = delta_principal_curvatures(sphere, DisplacementField.zero(sphere.domain))
    assert all(np.all(z.values == 0) for z in zero)


def test_tangential_e2_on_torus_transports_curvature(torus):
    # curvatures depend on alpha only, so moving along e2 changes nothing
    disp = DisplacementField.from_components(0.0, Field.constant(torus.domain, 1.0), 0.0, torus.domain)
    dk1, dk2 = delta_principal_curvatures(torus, disp)
    assert np.max(np.abs(dk1.values)) < 1e-12 and np.max(np.abs(dk2.values)) < 1e-12


def test_tangential_e1_on_torus_is_advection(torus):
    d = torus.domain
    a, _ = d.mesh()
    disp = DisplacementField.from_components(Field.constant(d, 1.0), 0.0, 0.0, d)
    dk1, dk2 = delta_principal_curvatures(torus, disp)
    # R = r + t e1 traces the same torus shifted in alpha, so delta kappa = +grad(kappa) . e1;
    # kappa2 = -cos a / (2 + cos a) has alpha-derivative 2 sin a / (2 + cos a)^2, A1 = 1
    want = 2 * np.sin(a) / (2 + np.cos(a)) ** 2
    assert np.max(np.abs(dk2.values - want)) < 1e-10
    assert np.max(np.abs(dk1.values)) < 1e-10
    kp = deformed_frame_curvatures(deform(torus, disp, 1e-4))
    km = deformed_frame_curvatures(deform(torus, disp, -1e-4))
    assert np.max(np.abs((kp[1] - km[1]) / 2e-4 - dk2.values)) < 1e-6


def test_mean_pointwise_examples(sphere):
    inner = slice(1, -1)
    assert np.allclose(delta_mean_pointwise(sphere, normal(sphere)).values[inner], 1.0, atol=1e-10)
    a, _ = sphere.domain.mesh()
    vn = Field(sphere.domain, np.cos(a))
    dH = delta_mean_pointwise(sphere, DisplacementField.from_components(0.0, 0.0, vn, sphere.domain),
                              CENTRAL2)
    assert np.max(np.abs(dH.values[2:-2])) < 5e-3


def test_mean_pointwise_matches_curvatures(torus):
    disp = random_displacement(torus.domain, 7)
    dk1, dk2 = delta_principal_curvatures(torus, disp)
    dH = delta_mean_pointwise(torus, disp)
    assert np.max(np.abs(dH.values - 0.5 * (dk1.values + dk2.values))) < 5e-6


def test_lw_residual(sphere, torus):
    for abc in ((0, 1, -2), (1, 0, 1)):
        assert lw_residual(sphere, FunctionalCoefficients(*abc)).sup < 1e-10
    for c in (-1.0, 0.0, 3.0):
        assert lw_residual(torus, FunctionalCoefficients(0.0, 1.0, c)).sup > 0.1


def test_sphere_stationary_interior(sphere):
    for seed in range(1, 4):
        br = delta_energy(sphere, random_displacement(sphere.domain, seed), BoundarySpec(),
                          FunctionalCoefficients(0.0, 1.0, -2.0))
        assert abs(br.interior) < 1e-8


def test_vol1_and_key1_identities():
    s = Sphere(1.0, center=OFFSET)
    f = evaluate_frame_field(s, s.band(*BAND, 65, 64))
    assert vol1_residual(f, ANALYTIC) < 1e-12
    assert key1_residual(f, random_displacement(f.domain, 1), ANALYTIC) < 1e-12
    # sixth-order differences on the same grid
    assert key1_residual(f, random_displacement(f.domain, 1)) < 1e-4


@given(st.floats(-2, 2), st.integers(1, 40))
@settings(max_examples=10, deadline=None)
def test_variations_linear_in_displacement(scale, seed):
    t = Torus(2.0, 1.0)
    f = evaluate_frame_field(t, t.natural_domain(24, 24))
    disp = random_displacement(f.domain, seed)
    c = FunctionalCoefficients(1.0, 0.5, -0.25)
    base = all_variations(f, disp, BoundarySpec(), c)
    scaled = all_variations(f, disp * scale, BoundarySpec(), c)
    for k in base:
        assert scaled[k].total == pytest.approx(scale * base[k].total, rel=1e-10, abs=1e-12)
