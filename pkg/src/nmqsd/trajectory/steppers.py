"""Single-step integrators for the stochastic Schroedinger equations.

All steppers act on a state array of shape ``(..., d)`` so a whole batch
of trajectories advances in one call.  Noise values are rates: the
Markov steppers take the increment ``dz`` (variance dt), the colored ones
take z at the start of the step and, optionally, at its end.

The default scheme is Heun's predictor-corrector, which converges to the
Stratonovich solution for white noise and is an ordinary second-order
method for colored noise.  The lowering-operator family additionally
treats the diagonal part of its generator exactly (integrating factor),
which keeps it stable as F(t) approaches a pole.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import DimensionMismatch, InvalidAnsatz, ZeroNorm
from ..hilbert import ZERO_NORM, commutator, dag, is_hermitian
from ..noise import Delta
from .memory import MemoryAccumulator, memory_update
from .riccati import FCoefficient

HEUN = "heun"
EULER = "euler"


@dataclass(frozen=True)
class StepScheme:
    dt: float
    variant: str = HEUN

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.variant not in (HEUN, EULER):
            raise ValueError(f"unknown scheme {self.variant!r}")


def _apply(op, psi):
    return psi @ op.T


def _mean(psi, op_psi):
    """<psi|op|psi>/<psi|psi> given op_psi = op @ psi."""
    num = np.einsum("...i,...i->...", psi.conj(), op_psi)
    den = np.einsum("...i,...i->...", psi.conj(), psi).real
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


def _renormalize(psi):
    nrm = np.linalg.norm(psi, axis=-1)
    if np.any(~np.isfinite(nrm)) or np.any(nrm <= ZERO_NORM):
        raise ZeroNorm("trajectory lost its norm; decrease dt")
    return psi / nrm[..., None]


def _check_dims(psi, *ops):
    d = psi.shape[-1]
    for op in ops:
        if op is not None and op.shape != (d, d):
            raise DimensionMismatch(f"operator {op.shape} vs state dim {d}")


def _heun(f, psi, scheme, renormalize):
    k1 = f(psi, 0)
    if scheme.variant == EULER:
        out = psi + scheme.dt * k1
    else:
        k2 = f(psi + scheme.dt * k1, 1)
        out = psi + 0.5 * scheme.dt * (k1 + k2)
    return _renormalize(out) if renormalize else out


# -- Markov ------------------------------------------------------------------

def markov_qsd_step(psi, H, L, dz, scheme, renormalize=True):
    """Nonlinear Markov QSD step.

    d psi = -iH psi dt + (L - <L>) psi o (dz + <L^dag> dt)
            - 1/2 (L^dag L - <L^dag L>) psi dt
    """
    psi = np.asarray(psi, dtype=complex)
    _check_dims(psi, H, L)
    z = np.asarray(dz) / scheme.dt
    LdL = dag(L) @ L

    def f(p, _):
        Lp = _apply(L, p)
        ell = _mean(p, Lp)
        LdLp = _apply(LdL, p)
        out = -1j * _apply(H, p)
        out += (Lp - ell[..., None] * p) * (z + ell.conj())[..., None]
        out -= 0.5 * (LdLp - _mean(p, LdLp)[..., None] * p)
        return out

    return _heun(f, psi, scheme, renormalize)


def markov_linear_step(psi, H, L, dz, scheme):
    """Linear Markov unravelling: d psi = -iH psi dt + L psi o dz - 1/2 L^dag L psi dt."""
    psi = np.asarray(psi, dtype=complex)
    _check_dims(psi, H, L)
    z = (np.asarray(dz) / scheme.dt)[..., None]
    G = -1j * H - 0.5 * dag(L) @ L

    def f(p, _):
        return _apply(G, p) + _apply(L, p) * z

    return _heun(f, psi, scheme, renormalize=False)


# -- ansatz --------------------------------------------------------------------

MEASUREMENT = "measurement"
LOWERING = "lowering"


@dataclass(frozen=True, eq=False)
class OAnsatz:
    """Closed form of the functional-derivative operator O(t, s).

    ``measurement``: O = L for a Hermitian L commuting with H.
    ``lowering``: O(t, s) = f(t, s) A with L = lam A; only the memory
    coefficient F(t) = int alpha(t,s) f(t,s) ds enters the equations.
    """

    family: str
    op: np.ndarray
    lam: float = 1.0
    F: FCoefficient = None
    number: np.ndarray = None       # diagonal of A^dag A
    omega: float = None

    @classmethod
    def measurement(cls, H, L):
        if not is_hermitian(L, 1e-12):
            raise InvalidAnsatz("measurement-like coupling must be Hermitian")
        scale = max(1.0, np.abs(H).max() * np.abs(L).max())
        if np.abs(commutator(H, L)).max() > 1e-12 * scale:
            raise InvalidAnsatz("measurement-like coupling must commute with H")
        return cls(MEASUREMENT, np.asarray(L, dtype=complex))

    @classmethod
    def lowering(cls, H, A, lam, kernel, damping=0.0):
        """Validate [H, A] = -omega A, [A^dag A, A] = -A, A^dag A diagonal."""
        A = np.asarray(A, dtype=complex)
        N = dag(A) @ A
        if np.abs(N - np.diag(np.diag(N))).max() > 1e-12:
            raise InvalidAnsatz("A^dag A must be diagonal in the working basis")
        if np.abs(commutator(N, A) + A).max() > 1e-10:
            raise InvalidAnsatz("A is not a lowering operator: [A^dag A, A] != -A")
        comm = commutator(H, A)
        mask = np.abs(A) > 1e-12
        if not mask.any():
            raise InvalidAnsatz("lowering operator is zero")
        omega = -(comm[mask] / A[mask]).real.mean()
        if np.abs(comm + omega * A).max() > 1e-9 * max(1.0, abs(omega)):
            raise InvalidAnsatz("[H, A] is not proportional to A")
        F = FCoefficient.from_kernel(kernel, lam, omega, damping)
        return cls(LOWERING, A, float(lam), F, np.diag(N).real.copy(), float(omega))


# -- measurement-like family -------------------------------------------------------

def _delta_memory(x):
    """Shift and kernel integrals of white noise: half the equal-time value."""
    return 0.5 * x, 0.5


def nmqsd_measurement_step(psi, H, lam, z, acc, scheme, z_next=None,
                           coupling=None, renormalize=True):
    """Nonlinear NMQSD step for a Hermitian coupling L = lam * coupling.

    ``coupling`` defaults to H (energy measurement).  ``acc`` is a
    MemoryAccumulator, or None for the white-noise kernel, whose memory
    integrals are instantaneous.  Returns ``(psi, acc)``.
    """
    psi = np.asarray(psi, dtype=complex)
    base = H if coupling is None else coupling
    L = lam * np.asarray(base, dtype=complex)
    _check_dims(psi, H, L)
    L2 = L @ L
    z0 = np.asarray(z)
    z1 = z0 if z_next is None else np.asarray(z_next)
    dt = scheme.dt
    Hd, Ld = _diag_or_none(H), _diag_or_none(L)
    if Hd is not None and Ld is not None:
        # commuting diagonal operators: elementwise products are enough
        diag = {"H": Hd, "L": Ld, "L2": Ld * Ld}
        app = lambda key, p: p * diag[key]
    else:
        mats = {"H": H, "L": L, "L2": L2}
        app = lambda key, p: _apply(mats[key], p)

    def f(p, S, A, zz):
        Lp = app("L", p)
        ell = _mean(p, Lp)
        L2p = app("L2", p)
        out = -1j * app("H", p)
        out -= A * (L2p - _mean(p, L2p)[..., None] * p)
        out += (Lp - ell[..., None] * p) * (zz + S + A * ell.conj())[..., None]
        return out

    if acc is None:
        def rates(p, stage):
            S, A = _delta_memory(_mean(p, app("L", p)).conj())
            return f(p, S, A, z0)
        return _heun(rates, psi, scheme, renormalize), None

    k1 = f(psi, acc.shift_integral, acc.kernel_integral, z0)
    if scheme.variant == EULER:
        out = psi + dt * k1
    else:
        pred = psi + dt * k1
        acc_p = memory_update(acc, _mean(pred, app("L", pred)).conj())
        k2 = f(pred, acc_p.shift_integral, acc_p.kernel_integral, z1)
        out = psi + 0.5 * dt * (k1 + k2)
    if renormalize:
        out = _renormalize(out)
    acc = memory_update(acc, _mean(out, app("L", out)).conj())
    return out, acc


# -- lowering-operator family ------------------------------------------------------

def _diag_or_none(H):
    d = np.diag(H)
    return d if np.abs(H - np.diag(d)).max() == 0 else None


def _factor(ansatz, H_diag, t0, dt, damping=0.0):
    """Exact propagator of the diagonal part over one step (vector of entries)."""
    ratio = ansatz.F.step_factor(t0, t0 + dt)
    n = ansatz.number
    fac = ratio ** n if np.allclose(n, np.round(n)) else np.exp(n * np.log(ratio))
    if damping:
        fac = fac * np.exp(-damping * n * dt)
    if H_diag is not None:
        fac = fac * np.exp(-1j * H_diag * dt)
    return fac, ratio


def dark_state(ansatz):
    idx = np.flatnonzero(np.abs(ansatz.number) < 1e-12)
    if idx.size != 1:
        raise InvalidAnsatz("lowering operator needs a unique dark state")
    v = np.zeros(ansatz.number.size, dtype=complex)
    v[idx[0]] = 1.0
    return v


def _lawson_heun(R, psi, fac, scheme):
    """psi_{n+1} = D psi_n + dt/2 (D k1 + k2), k2 evaluated at D(psi + dt k1)."""
    dt = scheme.dt
    k1 = R(psi, 0)
    if scheme.variant == EULER:
        return fac * (psi + dt * k1)
    pred = fac * (psi + dt * k1)
    k2 = R(pred, 1)
    return fac * (psi + 0.5 * dt * k1) + 0.5 * dt * k2


def nmqsd_dissipative_step(psi, H, ansatz, z, acc, scheme, z_next=None,
                           absorb=True, renormalize=True):
    """Nonlinear NMQSD step for L = lam * A with A a lowering operator.

    d psi/dt = -iH psi - lam F (A^dag A - <A^dag A>) psi
               + lam (A - <A>) psi (z + lam S + <A^dag> F)

    with S = acc.shift_integral.  The diagonal part (F term, and H when
    diagonal) is integrated exactly.  When F has a pole inside the step
    and ``absorb`` is set the state is clamped to the dark state, the
    limit every trajectory reaches there.  Returns ``(psi, acc, frozen)``.
    """
    psi = np.asarray(psi, dtype=complex)
    _check_dims(psi, H, ansatz.op)
    dt = scheme.dt
    t0 = acc.t
    F = ansatz.F
    lam, A = ansatz.lam, ansatz.op
    Ad = dag(A)
    if absorb and F.pole_between(t0, t0 + dt):
        dark = np.broadcast_to(dark_state(ansatz), psi.shape).copy()
        acc = memory_update(acc, np.zeros(psi.shape[:-1], dtype=complex))
        return dark, acc, True
    H_diag = _diag_or_none(H)
    fac, ratio = _factor(ansatz, H_diag, t0, dt)
    z0 = np.asarray(z)
    z1 = z0 if z_next is None else np.asarray(z_next)
    F0, F1 = complex(F.value(t0)), complex(F.value(t0 + dt))

    def R(p, stage, S):
        Fv, zz = (F0, z0) if stage == 0 else (F1, z1)
        Ap = _apply(A, p)
        a_mean = _mean(p, Ap)
        ad_mean = _mean(p, _apply(Ad, p))
        out = lam * (Ap - a_mean[..., None] * p) * \
            (zz + lam * S + ad_mean * Fv)[..., None]
        if H_diag is None:
            out = out - 1j * _apply(H, p)
        return out

    # keep the norm near one: the F term's norm change is a scalar factor
    nbar = _mean(psi, ansatz.number * psi).real
    scale = np.abs(ratio) ** (-nbar) if abs(ratio) > 1e-300 else 1.0
    fac_n = fac * np.asarray(scale)[..., None]

    state = {}

    def Rs(p, stage):
        if stage == 0:
            return R(p, 0, acc.shift_integral)
        state["acc_p"] = memory_update(acc, _mean(p, _apply(Ad, p)))
        return R(p, 1, state["acc_p"].shift_integral)

    out = _lawson_heun(Rs, psi, fac_n, scheme)
    if renormalize:
        out = _renormalize(out)
    acc = memory_update(acc, _mean(out, _apply(Ad, out)))
    return out, acc, False


def nmqsd_linear_step(psi, H, L, z, ansatz, scheme, t, z_next=None,
                      acc=None, markov=None):
    """Linear non-Markovian step  d psi/dt = -iH psi + L z psi - L^dag Obar(t) psi.

    ``ansatz`` fixes Obar: A(t) L for the measurement family (needs ``acc``
    for A(t), or None for white noise where A = 1/2), F(t) A for the
    lowering family with L = lam A.  ``markov`` optionally adds a white
    channel ``(lam_m, xi)`` on the same A: + lam_m A psi xi - lam_m^2/2 A^dag A psi.
    """
    psi = np.asarray(psi, dtype=complex)
    L = np.asarray(L, dtype=complex)
    _check_dims(psi, H, L)
    dt = scheme.dt
    z0 = np.asarray(z)[..., None]
    z1 = z0 if z_next is None else np.asarray(z_next)[..., None]

    if ansatz.family == MEASUREMENT:
        if markov is not None:
            raise InvalidAnsatz("extra white channel needs the lowering family")
        if not np.allclose(L, ansatz.op):
            raise InvalidAnsatz("ansatz operator differs from the coupling")
        L2 = L @ L
        if acc is None:
            A0 = A1 = 0.5
        else:
            A0 = acc.kernel_integral
            A1 = memory_update(acc, 0j).kernel_integral

        def f(p, stage):
            Av, zz = (A0, z0) if stage == 0 else (A1, z1)
            return -1j * _apply(H, p) + _apply(L, p) * zz - Av * _apply(L2, p)

        out = _heun(f, psi, scheme, renormalize=False)
        if acc is not None:
            acc = memory_update(acc, np.zeros(psi.shape[:-1], dtype=complex))
        return out, acc

    if ansatz.family != LOWERING:
        raise InvalidAnsatz(f"unknown ansatz family {ansatz.family!r}")
    A = ansatz.op
    if not np.allclose(L, ansatz.lam * A):
        raise InvalidAnsatz("coupling must equal lam * A for the lowering ansatz")
    lam_m, xi = (0.0, 0.0) if markov is None else markov
    if abs(ansatz.F.damping - 0.5 * lam_m ** 2) > 1e-12:
        raise InvalidAnsatz("ansatz damping must equal half the squared white coupling")
    xi = np.asarray(xi)[..., None]
    H_diag = _diag_or_none(H)
    fac, _ = _factor(ansatz, H_diag, t, dt, damping=0.5 * lam_m ** 2)

    def R(p, stage):
        zz = z0 if stage == 0 else z1
        Ap = _apply(A, p)
        out = Ap * (ansatz.lam * zz + lam_m * xi)
        if H_diag is None:
            out = out - 1j * _apply(H, p)
        return out

    return _lawson_heun(R, psi, fac, scheme), acc


@dataclass(frozen=True)
class CutModel:
    """Spin (omega1) coupled by kappa to one oscillator (omega2) and by lam to a zero-temperature white bath."""

    omega1: float = 1.0
    omega2: float = 1.0
    kappa: float = 0.2
    lam: float = np.sqrt(0.5)

    def spin_hamiltonian(self):
        return 0.5 * self.omega1 * np.diag([1.0, -1.0]).astype(complex)

    def ansatz(self):
        from ..hilbert import sigma_minus
        from ..noise import SingleMode
        return OAnsatz.lowering(self.spin_hamiltonian(), sigma_minus(), self.kappa,
                                SingleMode(self.omega2), damping=0.5 * self.lam ** 2)


def two_channel_cut_step(phi, model, xi, z, t, scheme, z_next=None, ansatz=None):
    """Linear two-noise spin equation of the shifted Heisenberg cut.

    d phi/dt = -iH1 phi + lam s- phi xi - lam^2/2 s+ s- phi
               + kappa s- phi z - kappa F2(t) s+ s- phi

    F2 solves the lowering-family Riccati equation for the single-mode
    kernel exp(-i omega2 (t - s)) with the extra damping lam^2/2.
    """
    ansatz = model.ansatz() if ansatz is None else ansatz
    out, _ = nmqsd_linear_step(phi, model.spin_hamiltonian(), model.kappa * ansatz.op,
                               z, ansatz, scheme, t, z_next=z_next,
                               markov=(model.lam, xi))
    return out
