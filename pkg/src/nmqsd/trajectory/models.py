"""Trajectory models driven by the ensemble runner.

A model owns its operators, initial state and noise channels, and knows
how to push a batch of states through one time step.  ``linear`` models
carry unnormalized states (raw-measure estimator); the others carry
normalized states.
"""

import numpy as np

from ..errors import InvalidAnsatz
from ..hilbert import dag, expectation, normalize
from ..noise import Delta, SingleMode
from .memory import MemoryAccumulator
from .steppers import (CutModel, OAnsatz, StepScheme, markov_linear_step,
                       markov_qsd_step, nmqsd_dissipative_step,
                       nmqsd_linear_step, nmqsd_measurement_step,
                       two_channel_cut_step)


class Model:
    linear = False
    kernels = ()

    def __init__(self, psi0):
        self.psi0 = normalize(np.asarray(psi0, dtype=complex))

    @property
    def dim(self):
        return self.psi0.size

    def init(self, batch, dt):
        return {"psi": np.tile(self.psi0, (batch, 1)), "t": 0.0}

    def step(self, state, n, z0, z1, scheme):
        raise NotImplementedError


class MarkovModel(Model):
    """Markov QSD (nonlinear) or its linear unravelling, one channel."""

    def __init__(self, H, L, psi0, linear=False):
        super().__init__(psi0)
        self.H = np.asarray(H, dtype=complex)
        self.L = np.asarray(L, dtype=complex)
        self.linear = linear
        self.kernels = (Delta(),)

    def step(self, state, n, z0, z1, scheme):
        dz = z0[:, 0] * scheme.dt
        if self.linear:
            state["psi"] = markov_linear_step(state["psi"], self.H, self.L, dz, scheme)
        else:
            state["psi"] = markov_qsd_step(state["psi"], self.H, self.L, dz, scheme)
        return state


class MeasurementModel(Model):
    """Hermitian coupling L commuting with H (energy-measurement family)."""

    def __init__(self, H, L, kernel, psi0, linear=False):
        super().__init__(psi0)
        self.H = np.asarray(H, dtype=complex)
        self.L = np.asarray(L, dtype=complex)
        self.ansatz = OAnsatz.measurement(self.H, self.L)
        self.kernel = kernel
        self.kernels = (kernel,)
        self.linear = linear

    def init(self, batch, dt):
        state = super().init(batch, dt)
        if isinstance(self.kernel, Delta):
            state["acc"] = None
        else:
            x0 = np.full(batch, expectation(self.psi0, self.L).conj())
            state["acc"] = MemoryAccumulator.start(self.kernel, dt, x0)
        return state

    def step(self, state, n, z0, z1, scheme):
        if self.linear:
            state["psi"], state["acc"] = nmqsd_linear_step(
                state["psi"], self.H, self.L, z0[:, 0], self.ansatz, scheme,
                n * scheme.dt, z_next=z1[:, 0], acc=state["acc"])
        else:
            state["psi"], state["acc"] = nmqsd_measurement_step(
                state["psi"], self.H, 1.0, z0[:, 0], state["acc"], scheme,
                z_next=z1[:, 0], coupling=self.L)
        return state


class DissipativeModel(Model):
    """Coupling lam * A with A a lowering operator (spin or oscillator).

    ``absorb`` clamps trajectories to the dark state when F(t) diverges
    inside a step; otherwise the exact integrating factor carries the
    state straight through the pole.
    """

    def __init__(self, H, A, lam, kernel, psi0, linear=False, absorb=True):
        super().__init__(psi0)
        self.H = np.asarray(H, dtype=complex)
        self.A = np.asarray(A, dtype=complex)
        self.lam = float(lam)
        self.kernel = kernel
        self.kernels = (kernel,)
        self.linear = linear
        self.absorb = absorb
        self.ansatz = OAnsatz.lowering(self.H, self.A, lam, kernel)

    def init(self, batch, dt):
        state = super().init(batch, dt)
        x0 = np.full(batch, expectation(self.psi0, dag(self.A)))
        state["acc"] = MemoryAccumulator.start(self.kernel, dt, x0)
        state["frozen"] = False
        return state

    def step(self, state, n, z0, z1, scheme):
        if self.linear:
            state["psi"], _ = nmqsd_linear_step(
                state["psi"], self.H, self.lam * self.A, z0[:, 0], self.ansatz,
                scheme, n * scheme.dt, z_next=z1[:, 0])
            return state
        if state["frozen"]:
            return state
        state["psi"], state["acc"], frozen = nmqsd_dissipative_step(
            state["psi"], self.H, self.ansatz, z0[:, 0], state["acc"], scheme,
            z_next=z1[:, 0], absorb=self.absorb)
        state["frozen"] = frozen
        return state


class TwoChannelModel(Model):
    """Spin-only side of the shifted cut: white bath noise xi plus single-mode z."""

    linear = True

    def __init__(self, cut, psi0):
        super().__init__(psi0)
        if psi0 is None or np.size(psi0) != 2:
            raise InvalidAnsatz("two-channel model acts on a spin")
        self.cut = cut
        self.ansatz = cut.ansatz()
        self.kernels = (SingleMode(cut.omega2), Delta())

    def step(self, state, n, z0, z1, scheme):
        state["psi"] = two_channel_cut_step(
            state["psi"], self.cut, z0[:, 1], z0[:, 0], n * scheme.dt, scheme,
            z_next=z1[:, 0], ansatz=self.ansatz)
        return state


__all__ = ["Model", "MarkovModel", "MeasurementModel", "DissipativeModel",
           "TwoChannelModel", "CutModel", "StepScheme"]
