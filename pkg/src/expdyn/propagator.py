"""Second-order Magnus exponential propagator.

Each step uses the midpoint rule on the Magnus exponent,
``w_n = exp(dt * A(t_{n-1} + dt/2)) w_{n-1}``. The midpoint operator comes
from a predictor-corrector: a half step with ``H_bar`` extrapolated from the
two previous midpoints, then one assembly at the half-step displacement.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .krylov import MATRIX_EXP_CAP, ConvergenceError, ExpmvResult, NumericError, expmv
from .material import InvertedElementError
from .operator import FirstOrderOperator, StateVector
from .system import EnergyRecord, MechanicalSystem


class StepFailure(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step} failed: {cause}")


@dataclass(frozen=True)
class KrylovMode:
    """Fixed subspace size ``m`` or adaptive tolerance ``tol`` (exactly one)."""

    m: int | None = None
    tol: float | None = None
    m_max: int = MATRIX_EXP_CAP

    def __post_init__(self):
        if (self.m is None) == (self.tol is None):
            raise ValueError("Krylov mode needs exactly one of m or tol")
        if self.m is not None and self.m < 1:
            raise ValueError("Krylov subspace size must be positive")
        if self.tol is not None and not self.tol > 0.0:
            raise ValueError("Krylov tolerance must be positive")

    def expmv(self, apply_a, w, dt) -> ExpmvResult:
        return expmv(apply_a, w, dt, m=self.m, tol=self.tol, m_max=self.m_max)


@dataclass
class PropagatorConfig:
    dt: float
    t_final: float
    krylov: KrylovMode = field(default_factory=lambda: KrylovMode(tol=1e-10))
    history_depth: int = 2
    output_every: int = 1
    calibrate: bool = False
    calibration_steps: int = 5

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("time step must be positive")
        if not self.t_final >= self.dt * (1 - 1e-12):
            raise ValueError("t_final must be at least one time step")
        if self.output_every < 1:
            raise ValueError("output cadence must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


class MidpointHistory:
    """The most recent ``(t, H_bar)`` pairs evaluated at step midpoints."""

    def __init__(self, depth: int = 2):
        self.entries: deque = deque(maxlen=depth)

    def __len__(self):
        return len(self.entries)

    def push(self, t: float, hbar) -> None:
        if self.entries and not t > self.entries[-1][0]:
            raise ValueError("midpoint times must increase")
        self.entries.append((t, hbar))

    def predict(self, t: float):
        """Linear extrapolation to ``t`` of the last two snapshots, or None if fewer are stored."""
        if len(self.entries) < 2:
            return None
        (t1, h1), (t2, h2) = self.entries[-2], self.entries[-1]
        s = (t - t1) / (t2 - t1)
        # snapshots share one sparsity pattern, so extrapolate the data arrays
        data = h1.data + s * (h2.data - h1.data)
        return sp.csr_matrix((data, h2.indices, h2.indptr), shape=h2.shape)


@dataclass(frozen=True)
class StepInfo:
    m_used: int
    estimate: float


def _negated(op: FirstOrderOperator):
    return lambda w: -op.apply(w)


def _pin(w: np.ndarray, augmented: bool) -> np.ndarray:
    if augmented:
        w[-1] = 1.0
    return w


def step_linear(op: FirstOrderOperator, state: StateVector, dt: float,
                mode: KrylovMode) -> tuple[StateVector, StepInfo]:
    """Exact-in-time step ``exp(dt*A) w`` for a constant operator; ``dt < 0`` steps backwards."""
    w = state.as_array()
    apply_a = op.apply if dt > 0 else _negated(op)
    res = mode.expmv(apply_a, w, abs(dt))
    y = _pin(res.result, state.augmented)
    out = StateVector.from_array(y, state.n, state.augmented, state.t + dt)
    return out, StepInfo(res.m_used, res.estimate)


def step_magnus2(state: StateVector, system: MechanicalSystem, history: MidpointHistory,
                 dt: float, mode: KrylovMode) -> tuple[StateVector, StepInfo]:
    if system.linear:
        return step_linear(system.operator(system.hbar()), state, dt, mode)
    w = state.as_array()
    t0 = state.t
    hpred = history.predict(t0 + 0.25 * dt)
    if hpred is None:
        u_prev, _ = system.unscale(state)
        hpred = system.hbar(u_prev)
    half = mode.expmv(system.operator(hpred).apply, w, 0.5 * dt)
    half_state = StateVector.from_array(_pin(half.result, state.augmented), state.n,
                                        state.augmented, t0 + 0.5 * dt)
    u_half, _ = system.unscale(half_state)
    hmid = system.hbar(u_half)
    full = mode.expmv(system.operator(hmid).apply, w, dt)
    history.push(t0 + 0.5 * dt, hmid)
    y = _pin(full.result, state.augmented)
    out = StateVector.from_array(y, state.n, state.augmented, t0 + dt)
    return out, StepInfo(max(half.m_used, full.m_used), full.estimate)


@dataclass
class StepRecord:
    step: int
    t: float
    u: np.ndarray
    v: np.ndarray
    energy: EnergyRecord
    m_used: int
    epsilon_m: float
    wall_seconds: float


@dataclass
class RunResult:
    records: list
    final: StateVector
    failure: StepFailure | None = None
    frozen_m: int | None = None

    @property
    def failed(self) -> bool:
        return self.failure is not None


def run(config: PropagatorConfig, system: MechanicalSystem, initial: StateVector,
        clock=time.perf_counter) -> RunResult:
    """Integrate ``n_steps`` Magnus steps and record every ``output_every``-th step.

    Errors inside a step stop the run; the records so far are returned with
    the failure attached.
    """
    n_steps = config.n_steps
    mode = config.krylov
    history = MidpointHistory(config.history_depth)
    state = StateVector(initial.u_bar.copy(), initial.v_bar.copy(), initial.augmented, 0.0)
    records = []
    frozen = None
    calib_max = 0
    start = clock()
    for k in range(1, n_steps + 1):
        if config.calibrate and k <= config.calibration_steps:
            step_mode = KrylovMode(tol=mode.tol if mode.tol is not None else 1e-10, m_max=mode.m_max)
        elif config.calibrate:
            if frozen is None:
                frozen = calib_max
            step_mode = KrylovMode(m=frozen, m_max=mode.m_max)
        else:
            step_mode = mode
        try:
            new, info = step_magnus2(state, system, history, config.dt, step_mode)
            new.t = k * config.dt
            energy = None
            if k % config.output_every == 0 or k == n_steps:
                energy = system.energy(new)
        except (InvertedElementError, ConvergenceError, NumericError, FloatingPointError) as exc:
            return RunResult(records, state, StepFailure(k, exc), frozen)
        calib_max = max(calib_max, info.m_used)
        state = new
        if energy is not None:
            u, v = system.unscale(state)
            records.append(StepRecord(k, state.t, u, v, energy, info.m_used,
                                      info.estimate, clock() - start))
    if config.calibrate and frozen is None:
        frozen = calib_max
    return RunResult(records, state, None, frozen)
