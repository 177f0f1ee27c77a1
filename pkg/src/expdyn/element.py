"""27-node Lagrange hexahedron: shape functions, quadrature rules, geometry."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import FACE_LOCAL_NODES, LOCAL_LATTICE, Mesh


class DegenerateElementError(ValueError):
    def __init__(self, element: int, detail: str = ""):
        self.element = element
        super().__init__(f"element {element}: non-positive Jacobian determinant {detail}".rstrip())


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (nq, 3)
    weights: np.ndarray  # (nq,)


@dataclass(frozen=True)
class ShapeEvaluation:
    values: np.ndarray               # (27,)
    reference_gradients: np.ndarray  # (27, 3)
    physical_gradients: np.ndarray   # (27, 3)
    jacobian_det: float
    weight: float


def lagrange_1d(x):
    """Quadratic Lagrange basis on nodes {-1, 0, 1} and its derivative."""
    x = np.asarray(x, dtype=float)
    values = np.stack([0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)], axis=-1)
    derivs = np.stack([x - 0.5, -2.0 * x, x + 0.5], axis=-1)
    return values, derivs


def shape_functions(xi):
    """Values (..., 27) and reference gradients (..., 27, 3) at points ``xi`` (..., 3)."""
    xi = np.asarray(xi, dtype=float)
    lx, dx = lagrange_1d(xi[..., 0])
    ly, dy = lagrange_1d(xi[..., 1])
    lz, dz = lagrange_1d(xi[..., 2])
    a, b, c = LOCAL_LATTICE[:, 0], LOCAL_LATTICE[:, 1], LOCAL_LATTICE[:, 2]
    n = lx[..., a] * ly[..., b] * lz[..., c]
    grad = np.stack(
        [dx[..., a] * ly[..., b] * lz[..., c],
         lx[..., a] * dy[..., b] * lz[..., c],
         lx[..., a] * ly[..., b] * dz[..., c]],
        axis=-1,
    )
    return n, grad


def _tensor_rule(points_1d, weights_1d) -> QuadratureRule:
    p = np.asarray(points_1d, dtype=float)
    w = np.asarray(weights_1d, dtype=float)
    idx = LOCAL_LATTICE
    points = np.column_stack([p[idx[:, 0]], p[idx[:, 1]], p[idx[:, 2]]])
    weights = w[idx[:, 0]] * w[idx[:, 1]] * w[idx[:, 2]]
    return QuadratureRule(points, weights)


GAUSS_1D = (np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)]), np.array([5.0, 8.0, 5.0]) / 9.0)
GLL_1D = (np.array([-1.0, 0.0, 1.0]), np.array([1.0, 4.0, 1.0]) / 3.0)


def gauss_rule_3() -> QuadratureRule:
    return _tensor_rule(*GAUSS_1D)


def gll_rule_3() -> QuadratureRule:
    # points coincide with the nodal lattice, in local node order
    return _tensor_rule(*GLL_1D)


def face_gauss_rule() -> tuple[np.ndarray, np.ndarray]:
    p, w = GAUSS_1D
    s, t = np.meshgrid(p, p, indexing="xy")
    ws, wt = np.meshgrid(w, w, indexing="xy")
    return np.column_stack([s.ravel(), t.ravel()]), (ws * wt).ravel()


def face_shape_functions(st):
    """Biquadratic values (..., 9) and gradients (..., 9, 2) in face tensor order."""
    st = np.asarray(st, dtype=float)
    ls, ds = lagrange_1d(st[..., 0])
    lt, dt = lagrange_1d(st[..., 1])
    a = np.tile(np.arange(3), 3)
    b = np.repeat(np.arange(3), 3)
    n = ls[..., a] * lt[..., b]
    grad = np.stack([ds[..., a] * lt[..., b], ls[..., a] * dt[..., b]], axis=-1)
    return n, grad


def geometry(coords: np.ndarray, rule: QuadratureRule):
    """Jacobian determinants (nq,) and physical gradients (nq, 27, 3) for one element.

    ``coords`` are the 27 nodal coordinates in local order.
    """
    _, dn = shape_functions(rule.points)
    jac = np.einsum("aj,qak->qjk", coords, dn)  # dX_j / dxi_k
    det = np.linalg.det(jac)
    inv = np.linalg.inv(jac)
    # grad_X N = J^{-T} grad_xi N
    grads = np.einsum("qkj,qak->qaj", inv, dn)
    return det, grads


def evaluate(mesh: Mesh, element_index: int, rule: QuadratureRule) -> list[ShapeEvaluation]:
    coords = mesh.nodes[mesh.elements[element_index]]
    n, dn = shape_functions(rule.points)
    det, grads = geometry(coords, rule)
    if np.any(det <= 0.0):
        raise DegenerateElementError(element_index, f"(min {det.min():.3e})")
    return [
        ShapeEvaluation(n[q], dn[q], grads[q], float(det[q]), float(rule.weights[q]))
        for q in range(len(rule.weights))
    ]


def mesh_geometry(mesh: Mesh, rule: QuadratureRule):
    """Vectorized element geometry: weights*det (ne, nq) and gradients (ne, nq, 27, 3)."""
    _, dn = shape_functions(rule.points)
    coords = mesh.nodes[mesh.elements]
    jac = np.einsum("eaj,qak->eqjk", coords, dn)
    det = np.linalg.det(jac)
    bad = np.flatnonzero(np.any(det <= 0.0, axis=1))
    if bad.size:
        raise DegenerateElementError(int(bad[0]), f"(min {det[bad[0]].min():.3e})")
    inv = np.linalg.inv(jac)
    grads = np.einsum("eqkj,qak->eqaj", inv, dn)
    return det * rule.weights[None, :], grads


def face_geometry(mesh: Mesh, element: int, face: int):
    """Face shape values (nq, 9) and surface measure times weight (nq,)."""
    st, w = face_gauss_rule()
    n, dn = face_shape_functions(st)
    coords = mesh.nodes[mesh.elements[element, FACE_LOCAL_NODES[face]]]
    ts = np.einsum("aj,qa->qj", coords, dn[..., 0])
    tt = np.einsum("aj,qa->qj", coords, dn[..., 1])
    area = np.linalg.norm(np.cross(ts, tt), axis=1)
    return n, area * w
