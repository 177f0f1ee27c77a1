"""Constitutive models and the per-point H-matrix kernels.

All point-wise functions accept batched inputs of shape ``(..., 3, 3)`` so the
assembler can evaluate every quadrature point of a mesh in one call.

The H-matrix block coupling nodes A and B at a point is written in a factored
form shared by all models::

    H_AB = (g_B . Q g_A) I + (X1 g_B) (x) (X2 g_A) + (Z1 g_A) (x) (Z2 g_B) + (g_A . g_B) W

where ``g`` are physical shape-function gradients. :func:`h_coefficients`
returns the six 3x3 matrices (Q, X1, X2, Z1, Z2, W) per point; :func:`h_kernel`
evaluates the expanded term-by-term expressions directly and is used to check
the factored form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

VOIGT = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2))


class InvertedElementError(ValueError):
    def __init__(self, element=None, point=None, jdet=None):
        self.element = element
        self.point = point
        self.jdet = jdet
        where = []
        if element is not None:
            where.append(f"element {element}")
        if point is not None:
            where.append(f"quadrature point {point}")
        loc = ", ".join(where) or "point"
        super().__init__(f"inverted deformation at {loc}: det(F) = {jdet}")


@dataclass(frozen=True)
class LinearElastic:
    lam: float
    mu: float
    rho: float

    def __post_init__(self):
        _check_lame(self)


@dataclass(frozen=True)
class StVenantKirchhoff:
    lam: float
    mu: float
    rho: float

    def __post_init__(self):
        _check_lame(self)


@dataclass(frozen=True)
class Yeoh:
    c10: float = 100.0
    c20: float = -1.0
    c30: float = 0.01
    d1: float = 0.001
    rho: float = 1000.0

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("density must be positive")
        if self.d1 <= 0:
            raise ValueError("Yeoh D1 must be positive")


Material = Union[LinearElastic, StVenantKirchhoff, Yeoh]


def _check_lame(m):
    if m.rho <= 0:
        raise ValueError("density must be positive")
    if m.mu <= 0 or m.lam <= -2.0 * m.mu / 3.0:
        raise ValueError(f"Lame constants out of range: lam={m.lam}, mu={m.mu}")


def lame_from_young(young: float, poisson: float) -> tuple[float, float]:
    if not young > 0.0:
        raise ValueError("Young's modulus must be positive")
    if not -1.0 < poisson < 0.5:
        raise ValueError("Poisson ratio must lie in (-1, 0.5)")
    lam = young * poisson / ((1 + poisson) * (1 - 2 * poisson))
    mu = young / (2 * (1 + poisson))
    return lam, mu


def is_linear(material: Material) -> bool:
    return isinstance(material, LinearElastic)


# ---------------------------------------------------------------------------
# kinematics


@dataclass
class PointKinematics:
    D: np.ndarray   # displacement gradient sum_A u_A (x) grad N_A
    F: np.ndarray
    E: np.ndarray
    C: np.ndarray
    J: np.ndarray
    I1: np.ndarray
    I1bar: np.ndarray
    P: np.ndarray   # cofactor-style matrix with tr(D^T P) = det(F) - 1


def _t(a):
    return np.swapaxes(a, -1, -2)


def p_matrix(D: np.ndarray) -> np.ndarray:
    """Matrix P(D) such that tr(D^T P) = det(I + D) - 1, written entry by entry."""
    d = np.asarray(D, dtype=float)
    u = lambda i, j: d[..., i - 1, j - 1]  # noqa: E731
    P = np.empty(d.shape)
    third = 1.0 / 3.0
    P[..., 0, 0] = 1 + 0.5 * (u(2, 2) + u(3, 3)) + third * (u(2, 2) * u(3, 3) - u(2, 3) * u(3, 2))
    P[..., 0, 1] = -0.5 * u(2, 1) + third * (u(2, 3) * u(3, 1) - u(2, 1) * u(3, 3))
    P[..., 0, 2] = -0.5 * u(3, 1) + third * (u(2, 1) * u(3, 2) - u(3, 1) * u(2, 2))
    P[..., 1, 0] = -0.5 * u(1, 2) + third * (u(1, 3) * u(3, 2) - u(1, 2) * u(3, 3))
    P[..., 1, 1] = 1 + 0.5 * (u(1, 1) + u(3, 3)) + third * (u(1, 1) * u(3, 3) - u(1, 3) * u(3, 1))
    P[..., 1, 2] = -0.5 * u(3, 2) + third * (u(1, 2) * u(3, 1) - u(1, 1) * u(3, 2))
    P[..., 2, 0] = -0.5 * u(1, 3) + third * (u(1, 2) * u(2, 3) - u(1, 3) * u(2, 2))
    P[..., 2, 1] = -0.5 * u(2, 3) + third * (u(1, 3) * u(2, 1) - u(1, 1) * u(2, 3))
    P[..., 2, 2] = 1 + 0.5 * (u(1, 1) + u(2, 2)) + third * (u(1, 1) * u(2, 2) - u(1, 2) * u(2, 1))
    return P


def kinematics(grad_u, element=None) -> PointKinematics:
    D = np.asarray(grad_u, dtype=float)
    eye = np.eye(3)
    F = eye + D
    J = np.linalg.det(F)
    bad = J <= 0.0
    if np.any(bad):
        idx = np.unravel_index(int(np.flatnonzero(bad.ravel())[0]), J.shape) if J.ndim else ()
        point = idx[-1] if len(idx) else None
        elem = element if element is not None else (idx[0] if len(idx) > 1 else None)
        raise InvertedElementError(elem, point, float(J[idx] if idx else J))
    C = _t(F) @ F
    E = 0.5 * (C - eye)
    I1 = np.trace(C, axis1=-2, axis2=-1)
    I1bar = I1 * J ** (-2.0 / 3.0)
    return PointKinematics(D, F, E, C, J, I1, I1bar, p_matrix(D))


def yeoh_alpha_beta(material: Yeoh, kin: PointKinematics):
    x = kin.I1bar - 3.0
    alpha = 2.0 * kin.J ** (-2.0 / 3.0) * (
        material.c10 + 2.0 * material.c20 * x + 3.0 * material.c30 * x * x
    )
    beta = 2.0 / material.d1 * kin.J
    return alpha, beta


# ---------------------------------------------------------------------------
# stress and energy


@dataclass
class PointStress:
    S: np.ndarray
    S_voigt: np.ndarray
    psi: np.ndarray


def to_voigt(S: np.ndarray) -> np.ndarray:
    return np.stack([S[..., i, j] for i, j in VOIGT], axis=-1)


def _ddot(a, b):
    return np.einsum("...ij,...ij->...", a, b)


def stress_and_energy(material: Material, kin: PointKinematics) -> PointStress:
    eye = np.eye(3)
    if isinstance(material, LinearElastic):
        eps = 0.5 * (kin.D + _t(kin.D))
        tr = np.trace(eps, axis1=-2, axis2=-1)
        S = material.lam * tr[..., None, None] * eye + 2.0 * material.mu * eps
        psi = 0.5 * _ddot(eps, S)
    elif isinstance(material, StVenantKirchhoff):
        E = kin.E
        tr = np.trace(E, axis1=-2, axis2=-1)
        S = material.lam * tr[..., None, None] * eye + 2.0 * material.mu * E
        psi = 0.5 * material.lam * tr**2 + material.mu * _ddot(E, E)
    elif isinstance(material, Yeoh):
        alpha, beta = yeoh_alpha_beta(material, kin)
        Cinv = np.linalg.inv(kin.C)
        trC = kin.I1[..., None, None]
        S = alpha[..., None, None] * (eye - Cinv * trC / 3.0) \
            + (beta * (kin.J - 1.0))[..., None, None] * Cinv
        x = kin.I1bar - 3.0
        psi = material.c10 * x + material.c20 * x**2 + material.c30 * x**3 \
            + (kin.J - 1.0) ** 2 / material.d1
    else:
        raise TypeError(f"unknown material {material!r}")
    S = 0.5 * (S + _t(S))
    return PointStress(S, to_voigt(S), psi)


def strain_energy_density(material: Material, grad_u) -> np.ndarray:
    return stress_and_energy(material, kinematics(grad_u)).psi


# ---------------------------------------------------------------------------
# H-matrix kernels


def linear_kernel(lam, mu, gA, gB):
    return lam * np.outer(gA, gB) + mu * np.outer(gB, gA) + mu * np.dot(gA, gB) * np.eye(3)


def h_kernel(material: Material, kin: PointKinematics, gA, gB) -> np.ndarray:
    """A,B nodal block of the H-matrix integrand at a single point, term by term."""
    gA = np.asarray(gA, dtype=float)
    gB = np.asarray(gB, dtype=float)
    eye = np.eye(3)
    if isinstance(material, LinearElastic):
        return linear_kernel(material.lam, material.mu, gA, gB)
    D = kin.D
    M = 2.0 * eye + D.T
    if isinstance(material, StVenantKirchhoff):
        lam, mu = material.lam, material.mu
        tr_d = np.trace(D)
        S_svk = lam * tr_d * eye + mu * (D + D.T) + 0.5 * lam * np.sum(D * D) * eye + mu * D.T @ D
        return 0.5 * (
            lam * np.outer(gA, gB) @ M
            + 2.0 * mu * np.dot(gB, gA) * eye
            + mu * np.outer(gB, gA) @ M
            + mu * D.T * np.dot(gA, gB)
            + 2.0 * (gB @ S_svk @ gA) * eye
        )
    if isinstance(material, Yeoh):
        alpha, beta = yeoh_alpha_beta(material, kin)
        Fi = np.linalg.inv(kin.F)
        FiT = Fi.T
        Ci = Fi @ FiT
        trC = np.trace(kin.C)
        J = kin.J
        terms = (
            2 * alpha * (gB @ Fi @ gA) * eye
            + 2 * alpha * FiT @ np.outer(gB, gA)
            - alpha * (gB @ (Ci @ D.T) @ gA) * eye
            - alpha * D @ Ci @ np.outer(gB, gA)
            - 2.0 / 3.0 * alpha * Ci @ np.outer(gA, gB) @ M
            + 2 * alpha * (gB @ (eye - Ci * trC / 3.0) @ gA) * eye
            + 2 * beta * Ci @ np.outer(gA, gB) @ kin.P.T
            + 2 * beta * (J - 1.0) * (gA @ Ci @ gB) * eye
        )
        # the expanded virtual-work sum carries the 1/2 of the symmetric strain variation
        return 0.5 * terms
    raise TypeError(f"unknown material {material!r}")


def h_coefficients(material: Material, kin: PointKinematics, stress: PointStress | None = None):
    """Factored kernel matrices, shape (..., 6, 3, 3): Q, X1, X2, Z1, Z2, W."""
    shape = kin.D.shape[:-2]
    eye = np.broadcast_to(np.eye(3), shape + (3, 3))
    zero = np.zeros(shape + (3, 3))
    if isinstance(material, LinearElastic):
        lam, mu = material.lam, material.mu
        return np.stack([mu * eye, mu * eye, eye, lam * eye, eye, zero], axis=-3)
    D = kin.D
    Mt = _t(2.0 * np.eye(3) + _t(D))
    if isinstance(material, StVenantKirchhoff):
        lam, mu = material.lam, material.mu
        if stress is None:
            stress = stress_and_energy(material, kin)
        Q = mu * eye + stress.S
        return np.stack([Q, 0.5 * mu * eye, Mt, 0.5 * lam * eye, Mt, 0.5 * mu * _t(D)], axis=-3)
    if isinstance(material, Yeoh):
        alpha, beta = yeoh_alpha_beta(material, kin)
        a = alpha[..., None, None]
        b = beta[..., None, None]
        Fi = np.linalg.inv(kin.F)
        FiT = _t(Fi)
        Ci = Fi @ FiT
        trC = kin.I1[..., None, None]
        Q = 2 * a * Fi - a * Ci @ _t(D) + 2 * a * (eye - Ci * trC / 3.0) \
            + 2 * b * (kin.J[..., None, None] - 1.0) * Ci
        X1 = 2 * a * FiT - a * D @ Ci
        Y = -2.0 / 3.0 * a * Mt + 2 * b * kin.P
        # overall 1/2 split so each outer product carries it exactly once
        return 0.5 * np.stack([Q, X1, 2 * eye, Ci, 2 * Y, zero], axis=-3)
    raise TypeError(f"unknown material {material!r}")


def factored_block(coef: np.ndarray, gA, gB) -> np.ndarray:
    """Evaluate one block from factored coefficients (reference for the kernels)."""
    Q, X1, X2, Z1, Z2, W = coef
    return ((gB @ Q @ gA) * np.eye(3) + np.outer(X1 @ gB, X2 @ gA)
            + np.outer(Z1 @ gA, Z2 @ gB) + np.dot(gA, gB) * W)
