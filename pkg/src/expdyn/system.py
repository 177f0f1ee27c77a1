"""Bundles of the operators that the time integrators consume.

:class:`MechanicalSystem` wraps a finite-element assembler; :class:`MatrixSystem`
is a linear system given directly by ``M`` and ``K`` (oscillators, tests).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import Assembler
from .material import is_linear
from .operator import FirstOrderOperator, scale_in, scale_load, scale_matrix, scale_out, StateVector


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    kinetic: float
    potential: float
    total: float


class _System:
    M: np.ndarray
    P: np.ndarray
    linear: bool

    def _init_load(self, load, load_active):
        self.n = len(self.M)
        self.P = np.zeros(self.n) if load is None else np.asarray(load, dtype=float)
        if len(self.P) != self.n:
            raise ValueError("load vector does not match the free dofs")
        # keep the load in the dynamics (augmented state) or only use it for a pre-solve
        self.load_active = bool(load_active) and bool(np.any(self.P))
        self.Pbar = scale_load(self.P, self.M) if self.load_active else None
        self._hbar_linear = None

    @property
    def augmented(self) -> bool:
        return self.load_active

    def hbar(self, u=None):
        if self.linear:
            if self._hbar_linear is None:
                self._hbar_linear = scale_matrix(self.H(), self.M)
            return self._hbar_linear
        return scale_matrix(self.H(u), self.M)

    def operator(self, hbar) -> FirstOrderOperator:
        return FirstOrderOperator(hbar, self.Pbar)

    def state(self, u, v, t: float = 0.0) -> StateVector:
        return scale_in(self.M, u, v, self.augmented, t)

    def unscale(self, state: StateVector):
        return scale_out(self.M, state)

    def energy_uv(self, u, v, t: float = 0.0) -> EnergyRecord:
        kinetic = 0.5 * float(v @ (self.M * v))
        if self.linear:
            potential = 0.5 * float(u @ (self.H() @ u))
        else:
            potential = self.strain_energy(u)
        if self.load_active:
            potential -= float(self.P @ u)
        return EnergyRecord(t, kinetic, potential, kinetic + potential)

    def energy(self, state: StateVector) -> EnergyRecord:
        """Kinetic plus potential energy; the potential includes ``-P.u`` when the load is active."""
        if self.linear:
            kinetic = 0.5 * float(state.v_bar @ state.v_bar)
            potential = 0.5 * float(state.u_bar @ (self.hbar() @ state.u_bar))
            if self.load_active:
                potential -= float(self.Pbar @ state.u_bar)
            return EnergyRecord(state.t, kinetic, potential, kinetic + potential)
        u, v = self.unscale(state)
        return self.energy_uv(u, v, state.t)


class MechanicalSystem(_System):
    """Mass, load and H(u) of a finite-element model over its free dofs."""

    def __init__(self, assembler: Assembler, load: np.ndarray | None = None,
                 load_active: bool = False):
        self.assembler = assembler
        self.M = assembler.mass()
        self.linear = is_linear(assembler.material)
        self._init_load(load, load_active)

    def H(self, u=None):
        return self.assembler.H(u)

    def internal_force(self, u):
        return self.assembler.internal_force(u)

    def strain_energy(self, u) -> float:
        return self.assembler.strain_energy(u)


class MatrixSystem(_System):
    """Linear system ``M u'' + K u = P`` with diagonal ``M``."""

    linear = True

    def __init__(self, M, K, load=None, load_active: bool = False):
        self.M = np.atleast_1d(np.asarray(M, dtype=float))
        self.K = sp.csr_matrix(np.atleast_2d(K) if not sp.issparse(K) else K)
        if self.K.shape != (len(self.M), len(self.M)):
            raise ValueError("K must be square and match M")
        self._init_load(load, load_active)

    @classmethod
    def oscillator(cls, omega: float, mass: float = 1.0) -> "MatrixSystem":
        return cls([mass], [[mass * omega**2]])

    def H(self, u=None):
        return self.K

    def internal_force(self, u):
        return self.K @ u

    def strain_energy(self, u) -> float:
        return 0.5 * float(u @ (self.K @ u))
