"""Energy accounting, error metrics, order fits and the subspace/symplecticity probes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .krylov import Arnoldi, expm_dense
from .operator import FirstOrderOperator, StateVector
from .system import EnergyRecord

DENSE_CAP = 600


def energy(state: StateVector, system) -> EnergyRecord:
    return system.energy(state)


@dataclass(frozen=True)
class ErrorEntry:
    rel_error_u: float
    rel_error_v: float
    # set when a reference norm is zero and the ratio is undefined
    undefined: bool = False


def relative_errors(u, v, u_ref, v_ref) -> ErrorEntry:
    """``|x - x_ref| / |x_ref|`` for displacement and velocity."""
    u, v, u_ref, v_ref = (np.asarray(x, dtype=float) for x in (u, v, u_ref, v_ref))
    if u.shape != u_ref.shape or v.shape != v_ref.shape:
        raise ValueError("candidate and reference have different layouts")

    def ratio(x, ref):
        nref = np.linalg.norm(ref)
        if nref == 0.0:
            return math.nan
        return float(np.linalg.norm(x - ref) / nref)

    eu, ev = ratio(u, u_ref), ratio(v, v_ref)
    return ErrorEntry(eu, ev, math.isnan(eu) or math.isnan(ev))


def fit_order(dts: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(dt); nan with fewer than two usable points."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = np.isfinite(errors) & (errors > 0) & (dts > 0)
    if np.count_nonzero(ok) < 2:
        return math.nan
    x, y = np.log(dts[ok]), np.log(errors[ok])
    return float(np.polyfit(x, y, 1)[0])


def dense_expmv(A: np.ndarray, w: np.ndarray, dt: float, cap: int = DENSE_CAP) -> np.ndarray:
    """``exp(dt*A) w`` by exponentiating the full (balanced) matrix; the reference for subspace errors."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] > cap:
        raise ValueError(f"state dimension {A.shape[0]} exceeds the dense cap {cap}")
    return expm_dense(dt * A, cap=cap, balance=True) @ np.asarray(w, dtype=float)


def subspace_error(exact: np.ndarray, approx: np.ndarray) -> float:
    return float(np.linalg.norm(exact - approx) / np.linalg.norm(exact))


@dataclass(frozen=True)
class SubspacePoint:
    dt: float
    m: int
    actual: float
    estimate: float


def subspace_sweep(op: FirstOrderOperator, w: np.ndarray, dts: Sequence[float],
                   m_values: Sequence[int], cap: int = DENSE_CAP) -> list[SubspacePoint]:
    """Actual and estimated Krylov errors for every (dt, m) pair.

    One Arnoldi factorization of the largest ``m`` is evaluated at every step size.
    """
    A = op.dense()
    if A.shape[0] > cap:
        raise ValueError(f"state dimension {A.shape[0]} exceeds the dense cap {cap}")
    proc = Arnoldi(op.apply, w, max(m_values))
    proc.extend(max(m_values))
    out = []
    for dt in dts:
        exact = dense_expmv(A, w, dt, cap)
        for m in m_values:
            if m > proc.m:
                break
            y, est = proc.factorization(m).approximate(dt)
            out.append(SubspacePoint(dt, m, subspace_error(exact, y),
                                     est / np.linalg.norm(y)))
    return out


def threshold_m(points: Sequence[SubspacePoint], dt: float, level: float = 1e-8) -> int | None:
    """Smallest m whose actual error at ``dt`` is below ``level``."""
    ms = [p.m for p in points if p.dt == dt and p.actual < level]
    return min(ms) if ms else None


def symplectic_form(n: int) -> np.ndarray:
    sigma = np.zeros((2 * n, 2 * n))
    sigma[:n, n:] = np.eye(n)
    sigma[n:, :n] = -np.eye(n)
    return sigma


def one_step_jacobian(step_map: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """Jacobian of a linear map on ``(u, v)`` of size 2n, assembled from unit states."""
    return np.column_stack([step_map(e) for e in np.eye(2 * n)])


def symplecticity_probe(step_map: Callable[[np.ndarray], np.ndarray], n: int) -> float:
    """``max |J^T S J - S|`` for the one-step map; zero for a symplectic map."""
    if 2 * n > 200:
        raise ValueError("symplecticity probe is limited to 2n <= 200")
    J = one_step_jacobian(step_map, n)
    sigma = symplectic_form(n)
    return float(np.max(np.abs(J.T @ sigma @ J - sigma)))


def magnus_map(hbar, dt: float, mode) -> Callable[[np.ndarray], np.ndarray]:
    """``(u_bar, v_bar) -> exp(dt*A) (u_bar, v_bar)`` for a fixed scaled ``H_bar``."""
    op = FirstOrderOperator(hbar)

    def step(x):
        if not np.any(x):
            return np.zeros_like(x)
        return mode.expmv(op.apply, x, dt).result

    return step


def direct_map(system, config) -> Callable[[np.ndarray], np.ndarray]:
    """One Newmark/HHT step on ``(u, v)`` starting from the equilibrium acceleration."""
    from .reference import DirectIntegrator

    integ = DirectIntegrator(system, config)
    n = system.n

    def step(x):
        s, _ = integ.step(integ.initial_state(x[:n], x[n:]))
        return np.concatenate([s.u, s.v])

    return step
