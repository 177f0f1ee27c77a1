import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from expdyn.element import (
    DegenerateElementError,
    evaluate,
    gauss_rule_3,
    geometry,
    gll_rule_3,
    lagrange_1d,
    shape_functions,
)
from expdyn.mesh import LOCAL_LATTICE, Mesh, generate_box_mesh

coord = st.floats(-1.0, 1.0)


def test_center_and_corner_nodal():
    n, _ = shape_functions([0.0, 0.0, 0.0])
    assert_allclose(n, np.eye(27)[13], atol=1e-15)
    n, _ = shape_functions([-1.0, -1.0, -1.0])
    assert_allclose(n, np.eye(27)[0], atol=1e-15)


def test_kronecker_at_lattice():
    n, _ = shape_functions(LOCAL_LATTICE - 1.0)
    assert_allclose(n, np.eye(27), atol=1e-15)


@settings(max_examples=50)
@given(coord, coord, coord)
def test_partition_of_unity(a, b, c):
    n, dn = shape_functions([a, b, c])
    assert abs(n.sum() - 1.0) < 1e-14
    assert_allclose(dn.sum(axis=0), 0.0, atol=1e-14)


def test_gradient_matches_finite_difference(rng):
    xi = rng.uniform(-1, 1, 3)
    _, dn = shape_functions(xi)
    h = 1e-6
    for k in range(3):
        e = np.eye(3)[k] * h
        fd = (shape_functions(xi + e)[0] - shape_functions(xi - e)[0]) / (2 * h)
        assert_allclose(dn[:, k], fd, atol=1e-8)


def test_rule_weights_sum_to_volume():
    assert_allclose(lagrange_1d(0.0)[0], [0, 1, 0])
    for rule in (gauss_rule_3(), gll_rule_3()):
        assert_allclose(rule.weights.sum(), 8.0, rtol=1e-15)


def test_gll_weights_from_moments():
    # solve sum_i w_i x_i^k = int x^k for k = 0..2 on nodes {-1, 0, 1}
    x = np.array([-1.0, 0.0, 1.0])
    V = np.vander(x, 3, increasing=True).T
    moments = np.array([2.0, 0.0, 2.0 / 3.0])
    w = np.linalg.solve(V, moments)
    assert_allclose(w, [1 / 3, 4 / 3, 1 / 3], rtol=1e-14)
    assert_allclose(gll_rule_3().weights[:3], w * w[0] * w[0], rtol=1e-14)
    assert_allclose(gll_rule_3().points, LOCAL_LATTICE - 1.0)


def test_gauss_weights_match_legendre_oracle():
    p, w = np.polynomial.legendre.leggauss(3)
    rule = gauss_rule_3()
    assert_allclose(rule.points[:3, 0], p, atol=1e-15)
    assert_allclose(rule.weights[:3], w * w[0] * w[0], rtol=1e-14)


@pytest.mark.parametrize("i, j, k", [(5, 0, 0), (4, 5, 0), (2, 2, 5), (5, 5, 5)])
def test_gauss_exact_degree_five(i, j, k):
    rule = gauss_rule_3()
    x = rule.points
    approx = np.sum(rule.weights * x[:, 0] ** i * x[:, 1] ** j * x[:, 2] ** k)
    exact = np.prod([(1 - (-1) ** (d + 1)) / (d + 1) for d in (i, j, k)])
    assert_allclose(approx, exact, atol=1e-14)


@pytest.mark.parametrize("i, j, k", [(2, 0, 0), (3, 2, 1), (2, 2, 2)])
def test_gll_exact_degree_three(i, j, k):
    rule = gll_rule_3()
    x = rule.points
    approx = np.sum(rule.weights * x[:, 0] ** i * x[:, 1] ** j * x[:, 2] ** k)
    exact = np.prod([(1 - (-1) ** (d + 1)) / (d + 1) for d in (i, j, k)])
    assert_allclose(approx, exact, atol=1e-14)


def test_gll_mass_is_diagonal():
    rule = gll_rule_3()
    n, _ = shape_functions(rule.points)
    mass = np.einsum("q,qa,qb->ab", rule.weights, n, n)
    off = mass - np.diag(np.diag(mass))
    assert np.all(off == 0.0)


def test_box_element_geometry():
    mesh = generate_box_mesh((0.4, 0.6, 1.0), (1, 1, 1))
    evals = evaluate(mesh, 0, gauss_rule_3())
    assert_allclose([e.jacobian_det for e in evals], 0.4 * 0.6 * 1.0 / 8, rtol=1e-14)
    volume = sum(e.weight * e.jacobian_det for e in evals)
    assert_allclose(volume, 0.24, rtol=1e-14)
    for e in evals:
        assert_allclose(e.physical_gradients.sum(axis=0), 0.0, atol=1e-13)


def test_quadratic_field_reproduced(rng):
    mesh = generate_box_mesh((1.3, 0.7, 0.9), (1, 1, 1))
    X = mesh.nodes[mesh.elements[0]]
    f = lambda p: 1 + p[..., 0] - 2 * p[..., 1] * p[..., 2] + 3 * p[..., 0] ** 2 + p[..., 1] ** 2  # noqa: E731
    xi = rng.uniform(-1, 1, (20, 3))
    n, _ = shape_functions(xi)
    points = n @ X
    assert_allclose(n @ f(X), f(points), atol=1e-12)
    # physical gradients reproduce the gradient of the field
    coords = X
    from expdyn.element import QuadratureRule
    det, grads = geometry(coords, QuadratureRule(xi, np.ones(len(xi))))
    grad_f = np.einsum("a,qaj->qj", f(X), grads)
    exact = np.column_stack([1 + 6 * points[:, 0], -2 * points[:, 2] + 2 * points[:, 1], -2 * points[:, 1]])
    assert_allclose(grad_f, exact, atol=1e-11)


def test_inverted_element_raises():
    mesh = generate_box_mesh((1, 1, 1), (1, 1, 1))
    # mirror xi: swap a <-> 2 - a
    perm = [(2 - a) + 3 * b + 9 * c for a, b, c in LOCAL_LATTICE]
    inverted = Mesh(mesh.nodes, mesh.elements[:, perm])
    with pytest.raises(DegenerateElementError):
        evaluate(inverted, 0, gauss_rule_3())
