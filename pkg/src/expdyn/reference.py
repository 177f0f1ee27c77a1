"""Newmark-beta and HHT-alpha direct integrators, plus the static pre-solve.

Nonlinear systems are solved by Picard iteration on the H-matrix: with
``u*`` the current iterate, solve

    (M / (beta dt^2) + (1 + alpha) H(u*)) u_{n+1} = P + alpha R(u_n) + M u_tilde / (beta dt^2)

with ``u_tilde = u_n + dt v_n + dt^2 (1/2 - beta) a_n``. The linearly implicit
variant stops after the first solve (``u* = u_n``). ``alpha = 0`` is Newmark.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operator import StateVector
from .propagator import RunResult, StepFailure, StepRecord
from .material import InvertedElementError

FULLY_IMPLICIT = "fully_implicit"
LINEARLY_IMPLICIT = "linearly_implicit"


class LinearSolveError(RuntimeError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, iterations: int, change: float):
        self.iterations = iterations
        self.change = change
        super().__init__(f"Picard iteration did not converge in {iterations} iterations "
                         f"(last relative change {change:.3e})")


@dataclass(frozen=True)
class DirectIntegratorConfig:
    dt: float
    scheme: str = "newmark"
    beta: float = 0.25
    gamma: float = 0.5
    alpha: float = 0.0
    variant: str = FULLY_IMPLICIT
    max_iters: int = 50
    tol: float = 1e-10

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("time step must be positive")
        if self.scheme not in ("newmark", "hht"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.variant not in (FULLY_IMPLICIT, LINEARLY_IMPLICIT):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.scheme == "newmark" and self.alpha != 0.0:
            raise ValueError("Newmark has no alpha parameter; use the hht scheme")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")

    @classmethod
    def newmark(cls, dt, beta=0.25, gamma=0.5, **kw) -> "DirectIntegratorConfig":
        return cls(dt, "newmark", beta, gamma, 0.0, **kw)

    @classmethod
    def hht(cls, dt, alpha=-0.33, beta=None, gamma=None, **kw) -> "DirectIntegratorConfig":
        """HHT-alpha; ``beta`` and ``gamma`` default to ``(1 - alpha)^2 / 4`` and ``1/2 - alpha``.

        With ``gamma = 1/2`` and ``alpha < 0`` the scheme is first order and its
        amplification matrix has spectral radius above one.
        """
        beta = (1 - alpha) ** 2 / 4 if beta is None else beta
        gamma = 0.5 - alpha if gamma is None else gamma
        return cls(dt, "hht", beta, gamma, alpha, **kw)


@dataclass
class DirectState:
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float = 0.0


def _solve(matrix, rhs):
    try:
        if sp.issparse(matrix):
            x = spla.splu(sp.csc_matrix(matrix)).solve(rhs)
        else:
            x = np.linalg.solve(matrix, rhs)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        raise LinearSolveError(f"linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise LinearSolveError("linear solve produced non-finite values")
    return x


def _relative_change(new, old) -> float:
    scale = np.linalg.norm(new)
    diff = np.linalg.norm(new - old)
    return 0.0 if diff == 0.0 else diff / scale if scale > 0 else np.inf


class DirectIntegrator:
    """One-step map of a Newmark/HHT scheme on a system from :mod:`expdyn.system`."""

    def __init__(self, system, config: DirectIntegratorConfig):
        self.system = system
        self.config = config
        c = config
        self._c0 = 1.0 / (c.beta * c.dt**2)
        self._lu = None  # factorization reused for linear systems

    def initial_state(self, u0, v0) -> DirectState:
        s = self.system
        u0 = np.asarray(u0, dtype=float)
        a0 = (s.P - s.internal_force(u0)) / s.M
        return DirectState(u0.copy(), np.asarray(v0, dtype=float).copy(), a0, 0.0)

    def _matrix(self, u):
        c = self.config
        H = self.system.H(u)
        return sp.diags(self._c0 * self.system.M) + (1.0 + c.alpha) * H

    def _linear_solve(self, rhs):
        if self._lu is None:
            try:
                self._lu = spla.splu(sp.csc_matrix(self._matrix(None)))
            except RuntimeError as exc:
                raise LinearSolveError(f"linear solve failed: {exc}") from exc
        x = self._lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise LinearSolveError("linear solve produced non-finite values")
        return x

    def step(self, state: DirectState) -> tuple[DirectState, int]:
        """Advance one step; returns the new state and the number of linear solves."""
        c = self.config
        s = self.system
        dt = c.dt
        u_tilde = state.u + dt * state.v + dt**2 * (0.5 - c.beta) * state.a
        rhs = s.P + self._c0 * s.M * u_tilde
        if c.alpha != 0.0:
            rhs = rhs + c.alpha * s.internal_force(state.u)
        if s.linear:
            u_new = self._linear_solve(rhs)
            iters = 1
        else:
            u_new = _solve(self._matrix(state.u), rhs)
            iters = 1
            if c.variant == FULLY_IMPLICIT:
                change = np.inf
                while iters < c.max_iters:
                    u_next = _solve(self._matrix(u_new), rhs)
                    iters += 1
                    change = _relative_change(u_next, u_new)
                    u_new = u_next
                    if change < c.tol:
                        break
                else:
                    if not change < c.tol:
                        raise NonConvergenceError(iters, change)
        a_new = self._c0 * (u_new - u_tilde)
        v_new = state.v + dt * ((1.0 - c.gamma) * state.a + c.gamma * a_new)
        return DirectState(u_new, v_new, a_new, state.t + dt), iters


def newmark_step(state: DirectState, system, config: DirectIntegratorConfig) -> DirectState:
    if config.alpha != 0.0:
        raise ValueError("newmark_step expects alpha = 0")
    return DirectIntegrator(system, config).step(state)[0]


def hht_step(state: DirectState, system, config: DirectIntegratorConfig) -> DirectState:
    return DirectIntegrator(system, config).step(state)[0]


def run_direct(config: DirectIntegratorConfig, system, u0, v0, t_final: float,
               output_every: int = 1, clock=time.perf_counter) -> RunResult:
    """Integrate with a direct scheme, recording in the same format as the Magnus run."""
    integ = DirectIntegrator(system, config)
    state = integ.initial_state(u0, v0)
    n_steps = int(round(t_final / config.dt))
    records = []
    start = clock()
    for k in range(1, n_steps + 1):
        try:
            state, _ = integ.step(state)
            state.t = k * config.dt
            energy = None
            if k % output_every == 0 or k == n_steps:
                energy = system.energy_uv(state.u, state.v, state.t)
        except (InvertedElementError, LinearSolveError, NonConvergenceError) as exc:
            return RunResult(records, _as_state(system, state), StepFailure(k, exc))
        if energy is not None:
            records.append(StepRecord(k, state.t, state.u.copy(), state.v.copy(), energy,
                                      0, float("nan"), clock() - start))
    return RunResult(records, _as_state(system, state))


def _as_state(system, state: DirectState) -> StateVector:
    return system.state(state.u, state.v, state.t)


def amplification_matrix(omega: float, config: DirectIntegratorConfig) -> np.ndarray:
    """3x3 map of ``(u, v, a)`` over one step for the unit-mass oscillator ``u'' + omega^2 u = 0``."""
    from .system import MatrixSystem

    integ = DirectIntegrator(MatrixSystem.oscillator(omega), config)
    cols = []
    for e in np.eye(3):
        s = DirectState(e[:1].copy(), e[1:2].copy(), e[2:].copy())
        out, _ = integ.step(s)
        cols.append([out.u[0], out.v[0], out.a[0]])
    return np.array(cols).T


def spectral_radius(omega: float, config: DirectIntegratorConfig) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(amplification_matrix(omega, config)))))


def static_solve(system, load=None, tol: float = 1e-10, max_iters: int = 50) -> np.ndarray:
    """Solve ``H(u) u = P`` by Picard iteration from ``u = 0``."""
    P = system.P if load is None else np.asarray(load, dtype=float)
    u = _solve(system.H(np.zeros(len(P))), P)
    if system.linear or not np.any(P):
        return u
    change = np.inf
    for _ in range(1, max_iters):
        u_next = _solve(system.H(u), P)
        change = _relative_change(u_next, u)
        u = u_next
        if change < tol:
            return u
    raise NonConvergenceError(max_iters, change)
