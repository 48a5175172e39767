import math

import numpy as np
import pytest

from conftest import BAND
from shellvar.errors import DomainError, GridTooCoarse, PoleSingularity
from shellvar.grid import CENTRAL2, ParamDomain
from shellvar.surface import (FAMILIES, Catenoid, Cylinder, Revolution, Sphere, Torus,
                              curvature_line_check, evaluate_frame_field, evaluate_point,
                              family_from_dict, gmc_residual)
from shellvar.validation import ANALYTIC

S2 = math.sqrt(2) / 2


def test_sphere_equator_frame():
    p = evaluate_point(Sphere(1.0), math.pi / 2, 0.0)
    assert (p.A1, p.A2) == pytest.approx((1.0, 1.0))
    assert np.allclose(p.e1, (0, 0, -1), atol=1e-15)
    assert np.allclose(p.e2, (0, 1, 0), atol=1e-15)
    assert np.allclose(p.N, (1, 0, 0), atol=1e-15)
    assert (p.p, p.q) == pytest.approx((0.0, 0.0), abs=1e-15)
    assert (p.kappa1, p.kappa2, p.H, p.K) == pytest.approx((-1, -1, -1, 1))
    assert (p.R1, p.R2) == pytest.approx((1.0, 1.0))


def test_sphere_connection_coefficients():
    p = evaluate_point(Sphere(1.0), math.pi / 4, 0.0)
    assert p.A2 == pytest.approx(S2)
    assert p.q == pytest.approx(S2)
    assert p.p == pytest.approx(0.0, abs=1e-15)


def test_torus_outer_equator():
    p = evaluate_point(Torus(2.0, 1.0), 0.0, 0.0)
    assert (p.A1, p.A2) == pytest.approx((1.0, 3.0))
    assert (p.kappa1, p.kappa2) == pytest.approx((-1.0, -1.0 / 3))
    assert (p.K, p.H) == pytest.approx((1.0 / 3, -2.0 / 3))
    # outward normal at the outer equator
    assert np.allclose(p.N, (1, 0, 0), atol=1e-15)


def test_frame_orthonormal_and_weingarten_signs():
    for fam, a, b in ((Torus(3.0, 1.2), 0.7, 1.9), (Sphere(2.0), 1.1, 0.4),
                      (Catenoid(0.8, 2.0), 0.3, 2.2)):
        p = evaluate_point(fam, a, b)
        frame = np.stack([p.e1, p.e2, p.N])
        assert np.allclose(frame @ frame.T, np.eye(3), atol=1e-13)
        assert np.allclose(np.cross(p.e1, p.e2), p.N, atol=1e-13)
        assert p.Hc == pytest.approx(-p.kappa1 * p.A1)
        assert p.Kc == pytest.approx(-p.kappa2 * p.A2)


def test_pole_requires_tolerant_mode():
    with pytest.raises(PoleSingularity):
        evaluate_point(Sphere(1.0), 0.0, 0.3)
    p = evaluate_point(Sphere(1.0), 0.0, 0.3, pole_tolerant=True)
    assert p.A2 == 0.0
    assert p.kappa1 == pytest.approx(-1.0, abs=1e-6)


def test_sphere_grid_field_invariants():
    sph = Sphere(1.0)
    f = evaluate_frame_field(sph, sph.natural_domain(64, 64))
    assert f.r.values.shape == (64, 64, 3)
    inner = slice(1, -1)
    e1, e2, N = (x.values[inner] for x in (f.e1, f.e2, f.N))
    assert np.allclose(np.sum(e1 * e2, axis=-1), 0, atol=1e-14)
    assert np.allclose(np.linalg.norm(N, axis=-1), 1, atol=1e-14)
    assert np.allclose(f.H.values[inner], -1) and np.allclose(f.K.values[inner], 1)
    assert np.all(f.A2.values[[0, -1]] == 0)


def test_torus_grid_has_no_poles():
    tor = Torus(2.0, 1.0)
    f = evaluate_frame_field(tor, tor.natural_domain(32, 32))
    assert f.domain.pole_rows() == []
    assert np.all(np.isfinite(f.kappa1.values)) and f.kappa1.values.size == 1024


def test_cylinder_flat_direction():
    cyl = Cylinder(1.0, 2.0)
    f = evaluate_frame_field(cyl, cyl.natural_domain(16, 16))
    assert np.allclose(f.kappa1.values, 0, atol=1e-14)
    assert np.allclose(f.K.values, 0, atol=1e-14)
    assert np.allclose(f.kappa2.values, -1)


def test_catenoid_is_minimal():
    cat = Catenoid(1.0, 2.0)
    f = evaluate_frame_field(cat, cat.natural_domain(33, 16))
    assert np.max(np.abs(f.H.values)) < 1e-13


@pytest.mark.parametrize("fam", [Sphere(1.0), Torus(2.0, 1.0)])
def test_curvature_line_check_closed_form(fam):
    rep = curvature_line_check(fam, fam.natural_domain(32, 32))
    assert rep.max_F < 1e-10 and rep.max_M < 1e-10


def _semicircle(n=200):
    a = np.linspace(0, math.pi, n)
    pts = np.stack([np.sin(a), np.cos(a)], axis=-1)
    pts[0, 0] = pts[-1, 0] = 0.0
    return pts


def test_revolution_spline_profile():
    fam = Revolution(_semicircle(), axis_endpoints=True)
    dom = fam.natural_domain(64, 64)
    rep = curvature_line_check(fam, dom)
    assert rep.max_F < 1e-8 and rep.max_M < 1e-8
    f = evaluate_frame_field(fam, dom)
    assert np.max(np.abs(f.H.values[1:-1] + 1)) < 1e-6


def test_revolution_cubic_degree_allowed():
    fam = Revolution(_semicircle(), axis_endpoints=True, degree=3)
    f = evaluate_frame_field(fam, fam.natural_domain(32, 16))
    assert np.max(np.abs(f.H.values[1:-1] + 1)) < 1e-4


def test_family_roundtrip_and_errors():
    for name in FAMILIES:
        if name == "revolution":
            continue
        fam = family_from_dict({"family": name})
        again = family_from_dict(fam.to_dict())
        assert again.to_dict() == fam.to_dict()
    with pytest.raises(DomainError):
        family_from_dict({"family": "klein_bottle"})
    with pytest.raises(DomainError):
        Torus(1.0, 2.0)


def test_domain_outside_family_chart():
    sph = Sphere(1.0)
    with pytest.raises(DomainError):
        evaluate_frame_field(sph, ParamDomain((0.0, 4.0), (0.0, 2 * math.pi), 16, 16,
                                              periodic_beta=True))
    # bounded beta patch of a periodic direction is allowed
    evaluate_frame_field(sph, ParamDomain((0.5, 1.0), (0.0, 1.0), 16, 16))


def test_gmc_band_second_order():
    sph = Sphere(1.0)
    sups = []
    dom = sph.band(*BAND, 129, 128)
    for _ in range(2):
        g = gmc_residual(evaluate_frame_field(sph, dom), CENTRAL2)
        sups.append(g)
        dom = dom.refined()
    assert sups[0].sup < 1e-4
    for k in ("sup1", "sup3"):
        assert 3.6 < getattr(sups[0], k) / getattr(sups[1], k) < 4.4
    assert sups[1].sup2 < 1e-12


def test_gmc_torus_analytic():
    tor = Torus(2.0, 1.0)
    g = gmc_residual(evaluate_frame_field(tor, tor.natural_domain(64, 64)), ANALYTIC)
    assert g.sup < 1e-12


def test_gmc_cylinder_zero():
    cyl = Cylinder(1.0, 2.0)
    g = gmc_residual(evaluate_frame_field(cyl, cyl.natural_domain(16, 16)))
    assert g.sup < 1e-13


def test_gmc_grid_too_coarse():
    tor = Torus(2.0, 1.0)
    with pytest.raises(GridTooCoarse):
        gmc_residual(evaluate_frame_field(tor, tor.natural_domain(6, 16)))
