"""Running memory integrals of the non-Markovian equations.

``shift_integral`` holds int_0^t alpha*(t, s) x_s ds, the memory part of
the shifted noise (x_s is <L^dagger>_s).  ``kernel_integral`` holds
A(t) = int_0^t alpha(t, s) ds.  Exponential-type kernels update both in
O(1) per step; sampled kernels re-sum the stored history with the
trapezoid rule.  Both rules are the same trapezoid quadrature, so they
agree to rounding on exponential kernels.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import UnsupportedKernel
from ..noise import Delta, Sampled, exp_terms


def _phi(kappa, dt):
    """(1 - exp(-kappa dt)) / kappa, finite at kappa = 0."""
    x = kappa * dt
    if abs(x) < 1e-8:
        return dt * (1 - x / 2)
    return (1 - np.exp(-x)) / kappa


@dataclass(frozen=True, eq=False)
class MemoryAccumulator:
    kernel: object
    dt: float
    shift_integral: object = 0j
    kernel_integral: complex = 0j
    last: object = 0j           # integrand at the current time
    step: int = 0
    history: tuple = ()         # Sampled kernels only

    @classmethod
    def start(cls, kernel, dt, x0=0j):
        if isinstance(kernel, Delta):
            raise UnsupportedKernel(
                "delta kernel has no memory; the shift is instantaneous")
        if not isinstance(kernel, Sampled):
            exp_terms(kernel)
        hist = (x0,) if isinstance(kernel, Sampled) else ()
        zero = np.zeros_like(np.asarray(x0, dtype=complex))
        return cls(kernel, float(dt), zero, 0j, np.asarray(x0, dtype=complex),
                   0, hist)

    @property
    def t(self):
        return self.step * self.dt


def memory_update(acc, x_new):
    """Advance ``acc`` by one step given the integrand at the new time."""
    k, dt = acc.kernel, acc.dt
    x_new = np.asarray(x_new, dtype=complex)
    if isinstance(k, Sampled):
        hist = acc.history + (x_new,)
        n = acc.step + 1
        t_new = n * dt
        row = np.conj(k.matrix[k.index(t_new), k.index(np.arange(n + 1) * dt)])
        wts = np.full(n + 1, dt)
        wts[0] = wts[-1] = dt / 2
        x = np.stack(hist, axis=-1)
        shift = x @ (wts * row)
        kint = np.sum(wts * row.conj())
        return replace(acc, shift_integral=shift, kernel_integral=kint,
                       last=x_new, step=n, history=hist)
    (w, rate, freq), = exp_terms(k)
    # alpha(t,s) decays with rate + i freq, alpha*(t,s) with rate - i freq
    kappa = complex(rate, freq)
    decay_conj = np.exp(-np.conj(kappa) * dt)
    shift = decay_conj * acc.shift_integral + \
        0.5 * dt * w * (decay_conj * acc.last + x_new)
    kint = np.exp(-kappa * dt) * acc.kernel_integral + w * _phi(kappa, dt)
    return replace(acc, shift_integral=shift, kernel_integral=kint,
                   last=x_new, step=acc.step + 1)


def kernel_integral_exact(kernel, t):
    """A(t) = int_0^t alpha(t, s) ds for exponential-type kernels."""
    (w, rate, freq), = exp_terms(kernel)
    return w * _phi(complex(rate, freq), t)
