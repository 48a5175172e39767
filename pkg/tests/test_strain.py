import numpy as np
import pytest

from shellvar.calculus import DisplacementField, random_displacement, translation_field
from shellvar.grid import CENTRAL2, Field
from shellvar.strain import COMPONENTS, infinitesimal_strains, strain_identity_residual
from shellvar.surface import Sphere, Torus, evaluate_frame_field


@pytest.fixture(scope="module")
def sphere_field():
    s = Sphere(1.0)
    return evaluate_frame_field(s, s.natural_domain(65, 64))


@pytest.fixture(scope="module")
def torus_field():
    t = Torus(2.0, 1.0)
    return evaluate_frame_field(t, t.natural_domain(128, 128))


def _arrays(s, shape):
    return {k: np.broadcast_to(v, shape) for k, v in s.as_arrays().items()}


def test_uniform_inflation(sphere_field):
    d = sphere_field.domain
    s = _arrays(infinitesimal_strains(sphere_field, DisplacementField.from_components(0.0, 0.0, 1.0, d)),
                d.shape)
    inner = slice(1, -1)
    assert np.allclose(s["eps1"][inner], 1.0, atol=1e-13)
    assert np.allclose(s["eps2"][inner], 1.0, atol=1e-13)
    for k in ("om1", "om2", "theta", "psi"):
        assert np.max(np.abs(s[k][inner])) < 1e-13


def test_rigid_translation_is_strain_free(sphere_field):
    d = sphere_field.domain
    disp = translation_field(sphere_field, (0.0, 0.0, 0.7)).drop_exact()
    s = _arrays(infinitesimal_strains(sphere_field, disp, CENTRAL2), d.shape)
    inner = slice(2, -2)
    assert np.max(np.abs(s["eps1"][inner] + s["eps2"][inner])) < 2e-3
    # the default sixth-order stencil leaves only truncation at the 1e-10 level
    fine = _arrays(infinitesimal_strains(sphere_field, translation_field(sphere_field, (0, 0, 0.7))),
                   d.shape)
    assert np.max(np.abs(fine["eps1"][inner])) < 1e-9
    assert np.max(np.abs(fine["eps2"][inner])) < 1e-9


def test_zero_displacement(torus_field):
    s = infinitesimal_strains(torus_field, DisplacementField.zero(torus_field.domain))
    for k in COMPONENTS:
        assert np.all(s.as_arrays()[k] == 0.0)


def test_strain_identity_random_torus(torus_field):
    disp = random_displacement(torus_field.domain, 11).drop_exact()
    assert strain_identity_residual(torus_field, disp) < 1e-8


def test_strain_identity_inflation_both_sides_two(sphere_field):
    d = sphere_field.domain
    disp = DisplacementField.from_components(0.0, 0.0, 1.0, d)
    s = infinitesimal_strains(sphere_field, disp)
    lhs = (s.eps1 + s.eps2).values[1:-1]
    rhs = (-2.0 * sphere_field.H).values[1:-1]
    assert np.allclose(lhs, 2.0) and np.allclose(rhs, 2.0)
    assert strain_identity_residual(sphere_field, disp) < 1e-12


def test_e2_on_torus_has_zero_dilatation(torus_field):
    d = torus_field.domain
    disp = DisplacementField.from_components(0.0, Field.constant(d, 1.0), 0.0, d)
    s = infinitesimal_strains(torus_field, disp)
    assert np.max(np.abs((s.eps1 + s.eps2).values)) < 1e-13


def test_shear_is_sum_of_parts(torus_field):
    s = infinitesimal_strains(torus_field, random_displacement(torus_field.domain, 2))
    assert np.allclose(s.shear.values, (s.om1 + s.om2).values)
