"""Mass-scaled first-order form of the semi-discrete equations.

With diagonal M the scaled variables are ``u_bar = M^{1/2} u``, ``v_bar = M^{1/2} v``
and ``H_bar = M^{-1/2} H M^{-1/2}``. The state ``w = (u_bar, v_bar)`` evolves
under ``A = [[0, I], [-H_bar, 0]]``; with a load the state carries a trailing
constant 1 and ``A`` gains the column ``(0, P_bar, 0)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class DimensionError(ValueError):
    pass


def _check_mass(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 1 or np.any(~(M > 0.0)):
        raise ValueError("mass must be a strictly positive diagonal")
    return M


@dataclass
class StateVector:
    u_bar: np.ndarray
    v_bar: np.ndarray
    augmented: bool = False
    t: float = 0.0

    @property
    def n(self) -> int:
        return len(self.u_bar)

    def as_array(self) -> np.ndarray:
        parts = [self.u_bar, self.v_bar] + ([np.ones(1)] if self.augmented else [])
        return np.concatenate(parts)

    @classmethod
    def from_array(cls, w: np.ndarray, n: int, augmented: bool, t: float = 0.0) -> "StateVector":
        w = np.asarray(w, dtype=float)
        expected = 2 * n + (1 if augmented else 0)
        if len(w) != expected:
            raise DimensionError(f"state has length {len(w)}, expected {expected}")
        return cls(w[:n].copy(), w[n:2 * n].copy(), augmented, t)


def scale_in(M, u, v, augmented: bool = False, t: float = 0.0) -> StateVector:
    sq = np.sqrt(_check_mass(M))
    return StateVector(sq * np.asarray(u, dtype=float), sq * np.asarray(v, dtype=float), augmented, t)


def scale_out(M, state: StateVector) -> tuple[np.ndarray, np.ndarray]:
    sq = np.sqrt(_check_mass(M))
    return state.u_bar / sq, state.v_bar / sq


def scale_matrix(H: sp.spmatrix, M) -> sp.csr_matrix:
    """``M^{-1/2} H M^{-1/2}`` on the same CSR pattern as ``H``."""
    s = 1.0 / np.sqrt(_check_mass(M))
    H = sp.csr_matrix(H)
    rows = np.repeat(np.arange(H.shape[0]), np.diff(H.indptr))
    data = H.data * s[rows] * s[H.indices]
    return sp.csr_matrix((data, H.indices, H.indptr), shape=H.shape)


def scale_load(P, M) -> np.ndarray:
    return np.asarray(P, dtype=float) / np.sqrt(_check_mass(M))


class FirstOrderOperator:
    """Matrix-free action of the first-order system matrix."""

    def __init__(self, Hbar, Pbar=None):
        self.Hbar = Hbar
        self.n = Hbar.shape[0]
        self.Pbar = None if Pbar is None else np.asarray(Pbar, dtype=float)
        if self.Pbar is not None and len(self.Pbar) != self.n:
            raise DimensionError("load and matrix sizes differ")

    @property
    def augmented(self) -> bool:
        return self.Pbar is not None

    @property
    def dim(self) -> int:
        return 2 * self.n + (1 if self.augmented else 0)

    def apply(self, w: np.ndarray) -> np.ndarray:
        n = self.n
        if len(w) != self.dim:
            raise DimensionError(f"state has length {len(w)}, operator expects {self.dim}")
        out = np.empty_like(w, dtype=float)
        out[:n] = w[n:2 * n]
        out[n:2 * n] = -(self.Hbar @ w[:n])
        if self.augmented:
            out[n:2 * n] += self.Pbar * w[2 * n]
            out[2 * n] = 0.0
        return out

    __call__ = apply

    def dense(self) -> np.ndarray:
        n = self.n
        A = np.zeros((self.dim, self.dim))
        A[:n, n:2 * n] = np.eye(n)
        H = self.Hbar.toarray() if sp.issparse(self.Hbar) else np.asarray(self.Hbar)
        A[n:2 * n, :n] = -H
        if self.augmented:
            A[n:2 * n, 2 * n] = self.Pbar
        return A


def apply_A(op: FirstOrderOperator, w: np.ndarray) -> np.ndarray:
    return op.apply(w)


def build_operator(H, M, P=None) -> FirstOrderOperator:
    """Scaled operator; the load column is only added for a nonzero ``P``."""
    Pbar = None
    if P is not None and np.linalg.norm(P) > 0.0:
        Pbar = scale_load(P, M)
    return FirstOrderOperator(scale_matrix(H, M), Pbar)
