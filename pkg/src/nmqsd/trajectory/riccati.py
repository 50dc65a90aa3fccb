"""The memory coefficient F(t) of the lowering-operator family.

For a kernel w exp(-(rate + i freq)(t - s)) and a coupling lam * A with
[H, A] = -omega A, F obeys the constant-coefficient Riccati equation

    dF/dt = lam * w + c * F + lam * F**2,    F(0) = 0,
    c = -(rate + i freq) + i omega + damping,

``damping`` being an extra Markov decay rate of A (half the squared
Markov coupling) used by the two-channel model.  With F = -u'/(lam u)
the equation linearizes to u'' - c u' + lam**2 w u = 0, u(0)=1, u'(0)=0,
which gives the closed form below and the exact integrating factor
exp(-lam * int F dt) = u(t1) / u(t0).  Zeros of u are poles of F.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import FDiverged, NotSupercritical
from ..noise import exp_terms

F_GUARD = 1e9


@dataclass(frozen=True)
class FCoefficient:
    lam: float
    weight: float
    rate: float = 0.0
    freq: float = 0.0
    omega: float = 0.0
    damping: float = 0.0

    @classmethod
    def from_kernel(cls, kernel, lam, omega, damping=0.0):
        (w, rate, freq), = exp_terms(kernel)
        return cls(lam=float(lam), weight=float(w), rate=float(rate),
                   freq=float(freq), omega=float(omega), damping=float(damping))

    @classmethod
    def from_params(cls, gamma, Omega, omega, lam):
        """dF/dt = -gamma F + i(omega - Omega) F + lam F^2 + lam gamma / 2."""
        return cls(lam=lam, weight=gamma / 2, rate=gamma, freq=Omega, omega=omega)

    @property
    def c(self):
        return complex(-self.rate + self.damping, self.omega - self.freq)

    def rhs(self, F):
        return self.lam * self.weight + self.c * F + self.lam * F * F

    def _parts(self, t):
        c = self.c
        delta = np.sqrt(c * c / 4 - self.lam ** 2 * self.weight + 0j)
        t = np.asarray(t, dtype=float)
        x = delta * t
        small = np.abs(x) < 1e-6
        safe = np.where(small, 1.0, delta)
        # sinh(delta t)/delta, Taylor-expanded near delta t = 0
        s = np.where(small, t * (1 + x * x / 6), np.sinh(x) / safe)
        return c, np.cosh(x), s

    def u(self, t):
        c, ch, s = self._parts(t)
        return np.exp(c * np.asarray(t) / 2) * (ch - c / 2 * s)

    def du(self, t):
        c, _, s = self._parts(t)
        return -self.lam ** 2 * self.weight * np.exp(c * np.asarray(t) / 2) * s

    def value(self, t):
        """Closed-form F(t); infinite at zeros of u."""
        c, ch, s = self._parts(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.lam * self.weight * s / (ch - c / 2 * s)

    def step_factor(self, t0, t1):
        """u(t1)/u(t0) = exp(-lam * int_{t0}^{t1} F dt)."""
        return complex(self.u(t1) / self.u(t0))

    def pole_between(self, t0, t1, guard=F_GUARD):
        """True if |F| exceeds ``guard`` somewhere in [t0, t1].

        The closest approach of the chord from u(t0) to u(t1) to zero
        stands in for the minimum of |u| on the step.
        """
        u0, u1 = complex(self.u(t0)), complex(self.u(t1))
        seg = u1 - u0
        if seg == 0:
            dmin = abs(u0)
        else:
            p = min(max(-(u0.conjugate() * seg).real / abs(seg) ** 2, 0.0), 1.0)
            dmin = abs(u0 + p * seg)
        du = max(abs(complex(self.du(t0))), abs(complex(self.du(t1))))
        return dmin == 0.0 or du > guard * self.lam * dmin

    def asymptote(self):
        """Limit of F for t -> oo when the slower root dominates."""
        c = self.c
        disc = np.sqrt(c * c - 4 * self.lam ** 2 * self.weight + 0j)
        r1, r2 = (c + disc) / 2, (c - disc) / 2
        r = r1 if r1.real >= r2.real else r2
        return -r / self.lam


@dataclass
class FSolution:
    times: np.ndarray
    values: np.ndarray          # RK4, NaN after divergence
    closed_form: np.ndarray
    divergence_time: float = None


def solve_F(params, times, guard=F_GUARD):
    """Integrate the Riccati equation by classic RK4 from F(0) = 0.

    The RK4 series stops at the first step where |F| exceeds ``guard`` (or
    turns non-finite); the divergence time is then refined by the pole
    asymptote F ~ 1 / (lam (t_c - t)) from the last finite value.  The
    closed-form solution is returned alongside for cross-validation.
    """
    if not params.lam > 0:
        raise ValueError("lam must be positive")
    if params.rate < 0:
        raise ValueError("rate must be non-negative")
    times = np.asarray(times, dtype=float)
    vals = np.full(times.size, np.nan, dtype=complex)
    vals[0] = 0.0
    f = 0j
    t_div = None
    for i in range(times.size - 1):
        h = times[i + 1] - times[i]
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = params.rhs(f)
            k2 = params.rhs(f + h / 2 * k1)
            k3 = params.rhs(f + h / 2 * k2)
            k4 = params.rhs(f + h * k3)
            nxt = f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(nxt) or abs(nxt) > guard:
            t_div = times[i] + (1.0 / (params.lam * f)).real if f != 0 else times[i]
            break
        vals[i + 1] = f = nxt
    return FSolution(times, vals, params.value(times), t_div)


def solve_F_or_raise(params, times, guard=F_GUARD):
    sol = solve_F(params, times, guard)
    if sol.divergence_time is not None:
        raise FDiverged(f"F diverged near t={sol.divergence_time:.6g}",
                        sol.divergence_time)
    return sol


def critical_time(gamma, lam):
    """Finite absorption time on resonance for gamma < 2 lam^2."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if gamma >= 2 * lam ** 2:
        raise NotSupercritical(f"gamma={gamma} >= 2 lam^2={2 * lam ** 2}")
    root = np.sqrt(2 * lam ** 2 * gamma - gamma ** 2)
    return (np.pi + 2 * np.arctan(gamma / root)) / root


def subcritical_asymptote(gamma, lam):
    """Resonant plateau of F for gamma > 2 lam^2."""
    if gamma <= 2 * lam ** 2:
        raise ValueError("asymptote exists only for gamma > 2 lam^2")
    return (gamma - np.sqrt(gamma ** 2 - 2 * gamma * lam ** 2)) / (2 * lam)
