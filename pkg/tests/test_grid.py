import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemoconsume.errors import ContractViolation, DimensionError, InvalidDomainError
from chemoconsume.grid import (
    FluxScheme,
    build_grid,
    div_chemotaxis_flux,
    face_gradients,
    grad_norm_sq,
    grad_sq,
    integrate,
    l2_norm_sq,
    laplacian_apply,
)

shapes = st.sampled_from([(7,), (1,), (5, 4), (3, 1), (4, 3, 2)])


def test_spacing_and_volume():
    g = build_grid((4, 8), (1.0, 2.0))
    assert g.spacing == (0.25, 0.25)
    assert g.n_cells == 32
    assert g.cell_volume == 0.0625
    assert g.volume == 2.0


@pytest.mark.parametrize("dims, extent", [((0,), (1.0,)), ((4,), (0.0,)), ((4,), (-1.0,)),
                                          ((2, 2, 2, 2), (1.0,) * 4), ((3,), (1.0, 1.0))])
def test_invalid_domain(dims, extent):
    with pytest.raises(InvalidDomainError):
        build_grid(dims, extent)


def test_dimension_mismatch():
    g = build_grid((4,), (1.0,))
    with pytest.raises(DimensionError):
        laplacian_apply(g, np.zeros(5))


def test_single_cell_axis_is_inert():
    g = build_grid((1,), (1.0,))
    assert laplacian_apply(g, np.array([3.0]))[0] == 0.0
    assert grad_norm_sq(g, np.array([3.0])) == 0.0


def test_laplacian_of_quadratic_interior():
    # exact for quadratics away from the walls
    g = build_grid((10,), (1.0,))
    (x,) = g.cell_centers()
    lap = laplacian_apply(g, x**2)
    assert np.allclose(lap[1:-1], 2.0, atol=1e-10)


def test_laplacian_cosine_eigenfunction():
    # cos(pi x) sampled at centres is a discrete eigenvector
    n = 16
    g = build_grid((n,), (1.0,))
    (x,) = g.cell_centers()
    w = np.cos(np.pi * x)
    h = 1.0 / n
    lam = -(2.0 - 2.0 * np.cos(np.pi * h)) / h**2
    assert np.allclose(laplacian_apply(g, w), lam * w, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(shapes, st.integers(0, 2**31))
def test_laplacian_conservative_and_symmetric(dims, seed):
    r = np.random.default_rng(seed)
    g = build_grid(dims, tuple(1.0 + i for i in range(len(dims))))
    a, b = r.standard_normal(dims), r.standard_normal(dims)
    assert abs(integrate(g, laplacian_apply(g, a))) < 1e-10 * (1 + np.abs(a).sum())
    lhs = np.sum(laplacian_apply(g, a) * b)
    rhs = np.sum(a * laplacian_apply(g, b))
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))
    assert np.allclose(laplacian_apply(g, g.full(2.5)), 0.0)


@settings(max_examples=40, deadline=None)
@given(shapes, st.integers(0, 2**31))
def test_summation_by_parts(dims, seed):
    r = np.random.default_rng(seed)
    g = build_grid(dims, (1.0,) * len(dims))
    z = 1.0 + r.random(dims)
    # -(lap z) z - grad_sq(z) = -lap(z**2)/2, cell by cell
    lhs = -laplacian_apply(g, z) * z - grad_sq(g, z)
    rhs = -0.5 * laplacian_apply(g, z * z)
    assert np.allclose(lhs, rhs, atol=1e-8 * (1 + np.abs(rhs).max()))
    assert np.isclose(integrate(g, grad_sq(g, z)), grad_norm_sq(g, z), rtol=1e-12)
    assert np.isclose(-np.sum(laplacian_apply(g, z) * z) * g.cell_volume,
                      grad_norm_sq(g, z), rtol=1e-10)


def test_face_gradients_shape():
    g = build_grid((4, 3), (1.0, 1.0))
    fg = face_gradients(g, np.zeros((4, 3)))
    assert [f.shape for f in fg] == [(3, 3), (4, 2)]


@pytest.mark.parametrize("scheme", list(FluxScheme))
def test_chemotaxis_flux_conservative(scheme, rng):
    g = build_grid((6, 5), (1.0, 2.0))
    coeff, z = rng.random((6, 5)), 1 + rng.random((6, 5))
    div = div_chemotaxis_flux(g, coeff, z, scheme)
    assert abs(integrate(g, div)) < 1e-12


def test_chemotaxis_flux_zero_for_flat_signal(rng):
    g = build_grid((6,), (1.0,))
    assert np.all(div_chemotaxis_flux(g, rng.random(6), g.full(0.3)) == 0.0)


def test_chemotaxis_linearized_matches_when_weight_equals_z(rng):
    g = build_grid((5, 4), (1.0, 1.0))
    coeff, z = rng.random((5, 4)), 1 + rng.random((5, 4))
    a = div_chemotaxis_flux(g, coeff, z)
    b = div_chemotaxis_flux(g, coeff, z, z_weight=z)
    assert np.allclose(a, b, atol=1e-12)


def test_chemotaxis_upwind_donor():
    # signal rising to the right: flux leaves the left cell with its own coefficient
    g = build_grid((2,), (2.0,))
    z = np.array([1.0, 2.0])
    div = div_chemotaxis_flux(g, np.array([3.0, 5.0]), z, FluxScheme.UPWIND)
    assert np.allclose(div, [3.0 * 3.0, -3.0 * 3.0])
    div_c = div_chemotaxis_flux(g, np.array([3.0, 5.0]), z, FluxScheme.CENTRAL)
    assert np.allclose(div_c, [4.0 * 3.0, -4.0 * 3.0])


def test_chemotaxis_negative_coefficient():
    g = build_grid((3,), (1.0,))
    with pytest.raises(ContractViolation):
        div_chemotaxis_flux(g, np.array([0.1, -0.1, 0.2]), np.ones(3))


def test_norms():
    g = build_grid((2, 2), (1.0, 1.0))
    w = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert integrate(g, w) == 2.5
    assert l2_norm_sq(g, w) == 7.5
    # faces: x-diffs 2,2 ; y-diffs 1,1 ; h = 0.5
    assert np.isclose(grad_norm_sq(g, w), 0.25 * (2 * 16 + 2 * 4))
