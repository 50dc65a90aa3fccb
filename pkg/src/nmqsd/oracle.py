"""Exact reference dynamics the trajectory ensembles are checked against.

* :func:`lindblad_evolve` - RK4 on the Lindblad master equation.
* :func:`joint_unitary_evolve` - system plus one undamped mode, exact
  unitary propagation by diagonalization.
* :func:`pseudomode_evolve` - system plus one damped mode whose vacuum
  correlation is the exponential kernel; exact for that kernel.
* :func:`dephasing_evolve` - closed form for couplings commuting with H.
* :func:`cut_reference` - both sides of the shifted Heisenberg cut.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TruncationTooSmall
from .hilbert import (dag, destroy, number, partial_trace, projector,
                      tensor_product)
from .noise import Exponential, exp_terms

TAIL_TOL = 1e-8


def _grid_substeps(times, dt):
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return times, 1, 0.0
    h = times[1] - times[0]
    if np.ptp(np.diff(times)) > 1e-9 * h:
        raise ValueError("oracles need a uniform time grid")
    if dt is None:
        return times, 1, h
    m = int(round(h / dt))
    if m < 1 or abs(m * dt - h) > 1e-9 * h:
        raise ValueError("grid spacing must be a multiple of dt")
    return times, m, h / m


def lindblad_rhs(rho, H, Ls):
    out = -1j * (H @ rho - rho @ H)
    for L in Ls:
        Ld = dag(L)
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def lindblad_evolve(rho0, H, Ls, times, dt=None):
    """Density matrices at ``times`` from classic RK4 with step ``dt``.

    ``dt`` defaults to the grid spacing.  Hermiticity is re-imposed after
    every step.
    """
    rho = np.array(rho0, dtype=complex)
    H = np.asarray(H, dtype=complex)
    Ls = [np.asarray(L, dtype=complex) for L in Ls]
    for op in [H] + Ls:
        if op.shape != rho.shape:
            raise DimensionMismatch(f"operator {op.shape} vs rho {rho.shape}")
    times, m, h = _grid_substeps(times, dt)
    out = np.empty((times.size,) + rho.shape, dtype=complex)
    out[0] = rho
    for i in range(1, times.size):
        for _ in range(m):
            k1 = lindblad_rhs(rho, H, Ls)
            k2 = lindblad_rhs(rho + 0.5 * h * k1, H, Ls)
            k3 = lindblad_rhs(rho + 0.5 * h * k2, H, Ls)
            k4 = lindblad_rhs(rho + h * k3, H, Ls)
            rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            rho = 0.5 * (rho + dag(rho))
        out[i] = rho
    return out


def mode_operators(d_sys, truncation):
    b = tensor_product(np.eye(d_sys), destroy(truncation))
    return b, tensor_product(np.eye(d_sys), number(truncation))


def joint_hamiltonian(H_sys, L, Omega, g, truncation):
    """H_sys x 1 + Omega 1 x b^dag b + g (L x b^dag + L^dag x b)."""
    d = H_sys.shape[0]
    b, nb = mode_operators(d, truncation)
    Lj = tensor_product(L, np.eye(truncation))
    Hj = tensor_product(H_sys, np.eye(truncation)) + Omega * nb
    return Hj + g * (Lj @ dag(b) + dag(Lj) @ b), b


def _top_population(states_or_rhos, d_sys, truncation):
    top = np.zeros(d_sys * truncation)
    top[truncation - 1::truncation] = 1.0
    x = np.asarray(states_or_rhos)
    if x.ndim == 2:     # states
        return np.max(np.abs(x) ** 2 @ top)
    return np.max(np.einsum("tii,i->t", x, top).real)


def joint_unitary_evolve(psi0_joint, H_sys, L, mode, times, check=True):
    """Exact unitary dynamics of system plus one environment mode.

    ``mode = (Omega, g, truncation)``; the coupling is
    g (L b^dag + L^dag b) so that the induced kernel is g^2 exp(-i Omega tau).
    Returns the joint states at ``times``.
    """
    Omega, g, trunc = mode
    H_sys = np.asarray(H_sys, dtype=complex)
    H, _ = joint_hamiltonian(H_sys, np.asarray(L, dtype=complex), Omega, g, trunc)
    psi0 = np.asarray(psi0_joint, dtype=complex)
    if psi0.size != H.shape[0]:
        raise DimensionMismatch("joint state does not match d_sys * truncation")
    evals, evecs = np.linalg.eigh(H)
    c0 = evecs.conj().T @ psi0
    t = np.asarray(times, dtype=float)
    states = (np.exp(-1j * np.outer(t, evals)) * c0) @ evecs.T
    if check and _top_population(states, H_sys.shape[0], trunc) > TAIL_TOL:
        raise TruncationTooSmall(f"mode truncation {trunc} too small")
    return states


def reduce_system(states_or_rhos, d_sys, truncation):
    x = np.asarray(states_or_rhos)
    if x.ndim == 2:
        # pure joint states: contract the mode index without forming projectors
        m = x.reshape(-1, d_sys, truncation)
        return np.einsum("tia,tja->tij", m, m.conj())
    return partial_trace(x, (d_sys, truncation), keep=1)


def pseudomode_evolve(rho0_sys, H_sys, L, kernel, times, truncation=15, dt=None):
    """Reduced system dynamics for an exponential kernel via one damped mode.

    Mode frequency Omega, coupling sqrt(weight) (L b^dag + L^dag b), mode
    jump operator sqrt(2 gamma) b; the mode's vacuum correlation is then
    weight * exp(-gamma |tau| - i Omega tau), exactly the kernel.
    """
    if not isinstance(kernel, Exponential):
        raise TypeError("pseudomode oracle needs an Exponential kernel")
    (w, gamma, Omega), = exp_terms(kernel)
    H_sys = np.asarray(H_sys, dtype=complex)
    d = H_sys.shape[0]
    H, b = joint_hamiltonian(H_sys, np.asarray(L, dtype=complex), Omega,
                             np.sqrt(w), truncation)
    vac = np.zeros((truncation, truncation), dtype=complex)
    vac[0, 0] = 1.0
    rho0 = tensor_product(np.asarray(rho0_sys, dtype=complex), vac)
    rhos = lindblad_evolve(rho0, H, [np.sqrt(2 * gamma) * b], times, dt=dt)
    if _top_population(rhos, d, truncation) > TAIL_TOL:
        raise TruncationTooSmall(f"pseudomode truncation {truncation} too small")
    return partial_trace(rhos, (d, truncation), keep=1)


def dephasing_evolve(rho0, H, L, kernel, times):
    """Exact reduced state for diagonal H and Hermitian diagonal L.

    rho_ij(t) = rho_ij(0) exp(-i(E_i - E_j)t - (l_i - l_j)(l_i G - l_j G*)),
    G(t) = int_0^t int_0^s alpha(s, r) dr ds.
    """
    H = np.asarray(H)
    L = np.asarray(L)
    if np.abs(H - np.diag(np.diag(H))).max() or np.abs(L - np.diag(np.diag(L))).max():
        raise ValueError("dephasing oracle needs diagonal H and L")
    E, l = np.diag(H).real, np.diag(L).real
    t = np.asarray(times, dtype=float)
    (w, rate, freq), = exp_terms(kernel)
    kappa = complex(rate, freq)
    if abs(kappa) < 1e-12:
        G = w * t ** 2 / 2
    else:
        G = w / kappa * (t - (1 - np.exp(-kappa * t)) / kappa)
    li, lj = l[:, None], l[None, :]
    expo = (-1j * np.subtract.outer(E, E)[None]
            * t[:, None, None]
            - (li - lj)[None] * (li[None] * G[:, None, None]
                                 - lj[None] * np.conj(G)[:, None, None]))
    return np.asarray(rho0)[None] * np.exp(expo)


# -- Heisenberg cut ----------------------------------------------------------------

def cut_operators(cut, truncation):
    """Joint spin x oscillator Hamiltonian and bath operator of the cut model."""
    from .hilbert import sigma_minus
    H1 = cut.spin_hamiltonian()
    H, _ = joint_hamiltonian(H1, sigma_minus(), cut.omega2, cut.kappa, truncation)
    Lb = cut.lam * tensor_product(sigma_minus(), np.eye(truncation))
    return H, Lb


@dataclass
class CutReference:
    times: np.ndarray
    markov_qsd: np.ndarray      # Tr_2 of the joint QSD ensemble mean
    lindblad: np.ndarray        # Tr_2 of the joint Lindblad solution
    se_equivalent: np.ndarray   # statistical TD scale of markov_qsd
    ensemble: object = None


def cut_reference(cut, psi0_spin, times_T, dt, n_paths, seed, truncation=5,
                  stride=10, workers=None):
    """Side A: joint Markov QSD ensemble, averaged then Tr_2.  Side B: joint Lindblad then Tr_2.

    The distinguished oscillator starts in its ground state.
    """
    from .ensemble import EnsembleConfig, run_ensemble
    from .hilbert import fock
    from .trajectory.models import MarkovModel

    H, Lb = cut_operators(cut, truncation)
    psi0 = tensor_product(psi0_spin, fock(truncation, 0))
    model = MarkovModel(H, Lb, psi0)
    cfg = EnsembleConfig(model, n_paths, dt, times_T, seed=seed,
                         snapshot_stride=stride, workers=workers)
    res = run_ensemble(cfg)
    if _top_population(res.mean_density, 2, truncation) > TAIL_TOL:
        raise TruncationTooSmall("cut oscillator truncation too small")
    side_a = partial_trace(res.mean_density, (2, truncation), keep=1)
    rhos = lindblad_evolve(projector(psi0), H, [Lb], res.times, dt=dt)
    side_b = partial_trace(rhos, (2, truncation), keep=1)
    # elementwise SE of the reduced matrix: propagate through the partial trace
    # conservatively by summing variances of the traced entries
    var = partial_trace(res.density_se ** 2, (2, truncation), keep=1).real
    se_eq = 0.5 * np.sqrt(2) * np.sqrt(np.sum(var, axis=(-2, -1)))
    return CutReference(res.times, side_a, side_b, se_eq, res)
