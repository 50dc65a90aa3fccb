"""Dense finite-dimensional Hilbert-space primitives.

States are 1-D complex arrays, operators and density matrices are 2-D
complex arrays.  Spin-1/2 uses index 0 for |up> and index 1 for |down>;
oscillators use the Fock ladder, index n = |n>.

Most functions accept a leading batch axis on states (shape ``(..., d)``)
so that whole trajectory ensembles can be pushed through at once.
"""

from math import factorial

import numpy as np

from .errors import DimensionMismatch, TruncationTooSmall, ZeroNorm

ZERO_NORM = 1e-14
TAIL_TOL = 1e-8


# -- operators ---------------------------------------------------------------

def sigma_z():
    return np.array([[1, 0], [0, -1]], dtype=complex)


def sigma_minus():
    """Lowering operator |down><up|."""
    return np.array([[0, 0], [1, 0]], dtype=complex)


def sigma_plus():
    return sigma_minus().T.copy()


def sigma_x():
    return np.array([[0, 1], [1, 0]], dtype=complex)


def sigma_y():
    return np.array([[0, -1j], [1j, 0]], dtype=complex)


def spin_up():
    return np.array([1, 0], dtype=complex)


def spin_down():
    return np.array([0, 1], dtype=complex)


def destroy(dim):
    """Truncated annihilation operator on ``dim`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def create(dim):
    return destroy(dim).conj().T


def number(dim):
    return np.diag(np.arange(dim)).astype(complex)


def fock(dim, n):
    if not 0 <= n < dim:
        raise DimensionMismatch(f"Fock level {n} outside truncation {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def dag(a):
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol=1e-12):
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and \
        np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def commutator(a, b):
    return a @ b - b @ a


# -- states ------------------------------------------------------------------

def norm(psi):
    return np.linalg.norm(psi, axis=-1)


def normalize(psi):
    """Return ``psi / ||psi||``.

    Raises
    ------
    ZeroNorm
        If any norm is at or below 1e-14, the signature of a collapsed
        linear trajectory.
    """
    psi = np.asarray(psi, dtype=complex)
    nrm = norm(psi)
    if np.any(~np.isfinite(nrm)) or np.any(nrm <= ZERO_NORM):
        raise ZeroNorm(f"cannot normalize state with norm {np.min(nrm)!r}")
    return psi / nrm[..., None]


def expectation(psi, op, normalized=True):
    """<psi|op|psi>, batched over leading axes of ``psi``.

    With ``normalized=False`` the value is divided by <psi|psi>.
    """
    psi = np.asarray(psi)
    op = np.asarray(op)
    if op.shape != (psi.shape[-1], psi.shape[-1]):
        raise DimensionMismatch(
            f"operator shape {op.shape} vs state dim {psi.shape[-1]}")
    val = np.einsum("...i,ij,...j->...", psi.conj(), op, psi)
    if not normalized:
        val = val / np.einsum("...i,...i->...", psi.conj(), psi).real
    return val


def projector(psi):
    psi = np.asarray(psi)
    return psi[..., :, None] * psi[..., None, :].conj()


def tensor_product(*ops):
    """Kronecker product; the first factor is the slow index."""
    out = np.asarray(ops[0], dtype=complex)
    for b in ops[1:]:
        out = np.kron(out, np.asarray(b, dtype=complex))
    return out


def partial_trace(rho, dims, keep):
    """Reduce a bipartite density matrix to subsystem ``keep`` (1 or 2)."""
    rho = np.asarray(rho)
    d1, d2 = dims
    if rho.shape[-2:] != (d1 * d2, d1 * d2):
        raise DimensionMismatch(f"rho shape {rho.shape} vs dims {dims}")
    r = rho.reshape(rho.shape[:-2] + (d1, d2, d1, d2))
    if keep == 1:
        return np.einsum("...ajbj->...ab", r)
    if keep == 2:
        return np.einsum("...iaib->...ab", r)
    raise ValueError("keep must be 1 or 2")


def trace_distance(a, b):
    """Half the trace norm of ``a - b`` (Hermitian inputs)."""
    diff = np.asarray(a) - np.asarray(b)
    diff = 0.5 * (diff + dag(diff))
    return 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff)), axis=-1)


def purity(rho):
    rho = np.asarray(rho)
    return np.einsum("...ij,...ji->...", rho, rho).real


def check_density(rho, herm_tol=1e-10, trace_tol=1e-10, eig_tol=-1e-8):
    """Raise ValueError unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix not Hermitian")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise ValueError(f"density matrix trace {np.trace(rho)}")
    if np.min(np.linalg.eigvalsh(rho)) < eig_tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


# -- coherent states and the Q-function --------------------------------------

def _coherent_unnormalized(beta, dim):
    amps = np.empty(dim, dtype=complex)
    amps[0] = np.exp(-0.5 * abs(beta) ** 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * beta / np.sqrt(n)
    return amps


def coherent_state(beta, dim):
    """Truncated, renormalized coherent state |beta>.

    Raises TruncationTooSmall when the top Fock level carries probability
    of 1e-8 or more.
    """
    amps = _coherent_unnormalized(complex(beta), dim)
    if abs(amps[-1]) ** 2 >= TAIL_TOL:
        raise TruncationTooSmall(
            f"|beta|={abs(beta):.3g} needs more than {dim} Fock levels")
    return normalize(amps)


def cat_norm_factor(alpha):
    """Normalization of |alpha> + |-alpha> in the untruncated space."""
    return (2.0 * (1.0 + np.exp(-2.0 * abs(alpha) ** 2))) ** -0.5


def cat_state(alpha, dim):
    """Even cat |alpha> + |-alpha>, normalized."""
    psi = coherent_state(alpha, dim) + coherent_state(-alpha, dim)
    return normalize(psi)


def coherent_fidelity(psi):
    """|<beta|psi>|^2 for beta = <a>, the closest-coherent-state proxy."""
    psi = normalize(psi)
    dim = psi.shape[-1]
    beta = expectation(psi, destroy(dim))
    ov = np.array([np.vdot(_coherent_unnormalized(b, dim), p)
                   for b, p in zip(np.atleast_1d(beta),
                                   np.atleast_2d(psi))])
    fid = np.abs(ov) ** 2
    return fid if psi.ndim > 1 else fid[0]


def q_grid(extent=4.5, n=81):
    """Square grid of real and imaginary parts of beta."""
    axis = np.linspace(-extent, extent, n)
    return axis, axis.copy()


def q_function(psi, re_axis, im_axis):
    """Husimi Q(beta) = |<beta|psi>|^2 / pi on a rectangular grid.

    Returns an array of shape ``(len(re_axis), len(im_axis))``; entry
    ``[i, j]`` belongs to beta = re_axis[i] + 1j * im_axis[j].
    """
    psi = np.asarray(psi, dtype=complex)
    dim = psi.shape[-1]
    b = np.asarray(re_axis)[:, None] + 1j * np.asarray(im_axis)[None, :]
    if dim > 170:
        raise TruncationTooSmall("Fock dimension too large for Q evaluation")
    coeffs = psi / np.sqrt([float(factorial(n)) for n in range(dim)])
    # <beta|psi> = exp(-|beta|^2/2) sum_n conj(beta)^n psi_n / sqrt(n!)
    poly = np.polynomial.polynomial.polyval(b.conj(), coeffs)
    return np.exp(-np.abs(b) ** 2) * np.abs(poly) ** 2 / np.pi


def q_mass(q, re_axis, im_axis):
    """Riemann sum of Q over the grid cell area."""
    da = (re_axis[1] - re_axis[0]) * (im_axis[1] - im_axis[0])
    return float(np.sum(q) * da)
