"""Krylov approximation of ``exp(dt*A) w`` with a-posteriori subspace sizing.

The Arnoldi relation ``A V_m = V_m H_m + h_{m+1,m} v_{m+1} e_m^T`` gives

    exp(dt*A) w  ~=  |w| V_m exp(dt*H_m) e_1

with the error estimate ``dt * h_{m+1,m} * |w| * |[exp(dt*H_m)]_{m,1}|``.
The time step is applied to the small Hessenberg matrix, so one factorization
can be evaluated at several step sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import kernels

MATRIX_EXP_CAP = 512


class ZeroVectorError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, m: int, estimate: float, tol: float):
        self.m = m
        self.estimate = estimate
        self.tol = tol
        super().__init__(
            f"Krylov tolerance {tol:.3e} not reached at subspace size {m} "
            f"(last estimate {estimate:.3e})"
        )


def expm_dense(H: np.ndarray, cap: int = MATRIX_EXP_CAP, balance: bool = False) -> np.ndarray:
    """Matrix exponential of a small dense matrix by Taylor series.

    Matrices with 1-norm above one are scaled by ``2**-s`` first and the
    result squared ``s`` times. ``balance`` applies a diagonal similarity
    first, which matters for badly scaled matrices such as
    ``[[0, I], [-H, 0]]`` with large ``|H|``.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expm_dense needs a square matrix")
    if H.shape[0] > cap:
        raise ValueError(f"matrix of size {H.shape[0]} exceeds the dense cap {cap}")
    if not np.all(np.isfinite(H)):
        raise NumericError("non-finite entry in matrix to exponentiate")
    if balance and H.size:
        _, (d, _) = scipy.linalg.matrix_balance(H, permute=False, separate=True)
        E = expm_dense(H * (1.0 / d)[:, None] * d[None, :], cap)
        return E * d[:, None] * (1.0 / d)[None, :]
    n = H.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    norm = np.linalg.norm(H, 1)
    s = 0
    if norm > 1.0:
        s = int(math.ceil(math.log2(norm)))
        H = H / 2.0**s
    result = np.eye(n)
    term = np.eye(n)
    eps = np.finfo(float).eps
    for k in range(1, 100):
        term = term @ H / k
        result += term
        if np.linalg.norm(term, 1) <= eps * np.linalg.norm(result, 1):
            break
    for _ in range(s):
        result = result @ result
    if not np.all(np.isfinite(result)):
        raise NumericError("matrix exponential overflowed")
    return result


@dataclass
class KrylovFactorization:
    V: np.ndarray          # (n, m) orthonormal columns
    H: np.ndarray          # (m, m) upper Hessenberg
    beta_next: float       # h_{m+1,m}
    v_next: np.ndarray | None
    w_norm: float
    m: int
    breakdown: bool

    def approximate(self, dt: float):
        """(|w| V exp(dt H) e_1, error estimate) for step ``dt``."""
        # the projection keeps the u/v scale split of A, so balance first
        E = expm_dense(dt * self.H, balance=True)
        y = self.w_norm * (self.V @ E[:, 0])
        if self.breakdown:
            estimate = 0.0
        else:
            estimate = abs(dt) * self.beta_next * self.w_norm * abs(E[self.m - 1, 0])
        return y, estimate


class Arnoldi:
    """Incremental Arnoldi process; :meth:`extend` continues without restarting."""

    def __init__(self, apply_a: Callable[[np.ndarray], np.ndarray], w: np.ndarray,
                 m_max: int, breakdown_tol: float | None = None):
        w = np.asarray(w, dtype=float)
        self.w_norm = float(np.linalg.norm(w))
        if not self.w_norm > 0.0:
            raise ZeroVectorError("cannot build a Krylov space from the zero vector")
        if m_max < 1:
            raise ValueError("m_max must be at least 1")
        self.apply_a = apply_a
        self.n = len(w)
        self.m_max = min(int(m_max), self.n)
        self.breakdown_tol = breakdown_tol
        self.basis = np.zeros((self.m_max + 1, self.n))  # row j is v_{j+1}
        self.hess = np.zeros((self.m_max + 1, self.m_max))
        self.basis[0] = w / self.w_norm
        self.m = 0
        self.breakdown = False
        self._scale = 0.0

    def extend(self, m: int) -> None:
        m = min(int(m), self.m_max)
        h = np.zeros(self.m_max + 1)
        while self.m < m and not self.breakdown:
            j = self.m
            w = np.array(self.apply_a(self.basis[j]), dtype=float)
            kernels.mgs_orthogonalize(self.basis, j + 1, w, h)
            self.hess[: j + 1, j] = h[: j + 1]
            beta = float(np.linalg.norm(w))
            self._scale = max(self._scale, float(np.max(np.abs(h[: j + 1]))), beta)
            self.hess[j + 1, j] = beta
            self.m = j + 1
            tol = self.breakdown_tol if self.breakdown_tol is not None else 1e-14 * self._scale
            if beta <= tol or self.m == self.n:
                # invariant subspace found (or the whole space spanned)
                self.breakdown = True
                self.hess[j + 1, j] = 0.0 if beta <= tol else beta
            else:
                self.basis[j + 1] = w / beta

    def factorization(self, m: int | None = None) -> KrylovFactorization:
        m = self.m if m is None else min(int(m), self.m)
        complete = self.breakdown and m == self.m
        beta = float(self.hess[m, m - 1])
        return KrylovFactorization(
            V=self.basis[:m].T,
            H=self.hess[:m, :m].copy(),
            beta_next=0.0 if complete else beta,
            v_next=None if complete else self.basis[m].copy(),
            w_norm=self.w_norm,
            m=m,
            breakdown=complete,
        )


def arnoldi(apply_a, w, m_max: int, breakdown_tol: float | None = None) -> KrylovFactorization:
    proc = Arnoldi(apply_a, w, m_max, breakdown_tol)
    proc.extend(m_max)
    return proc.factorization()


@dataclass
class ExpmvResult:
    result: np.ndarray
    m_used: int
    estimate: float
    breakdown: bool
    factorization: KrylovFactorization | None = field(default=None, repr=False)


def expmv(apply_a, w, dt: float, m: int | None = None, tol: float | None = None,
          m_max: int = MATRIX_EXP_CAP, m_start: int = 5, increment: int = 5,
          breakdown_tol: float | None = None) -> ExpmvResult:
    """Approximate ``exp(dt*A) w``.

    Exactly one of ``m`` (fixed subspace size) or ``tol`` (adaptive, grow ``m``
    by ``increment`` until the estimate is at most ``tol * |w|``) is required.
    """
    if (m is None) == (tol is None):
        raise ValueError("give exactly one of m (fixed) or tol (adaptive)")
    if not dt > 0.0:
        raise ValueError("time step must be positive")
    w = np.asarray(w, dtype=float)
    if not np.any(w):
        # exp(dt*A) 0 = 0; treated as exact
        return ExpmvResult(np.zeros_like(w), 0, 0.0, True)
    if m is not None:
        proc = Arnoldi(apply_a, w, m, breakdown_tol)
        proc.extend(m)
        fac = proc.factorization()
        y, est = fac.approximate(dt)
        return ExpmvResult(y, fac.m, est, fac.breakdown, fac)

    proc = Arnoldi(apply_a, w, m_max, breakdown_tol)
    target = tol * proc.w_norm
    size = min(m_start, proc.m_max)
    while True:
        proc.extend(size)
        fac = proc.factorization()
        y, est = fac.approximate(dt)
        if fac.breakdown or est <= target:
            return ExpmvResult(y, fac.m, est, fac.breakdown, fac)
        if proc.m >= proc.m_max:
            raise ConvergenceError(proc.m, est, tol)
        size = min(size + increment, proc.m_max)
