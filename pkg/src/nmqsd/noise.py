"""Colored complex Gaussian noise with a prescribed Hermitian kernel.

The driving process z_t has zero mean, M[z_t* z_s] = alpha(t, s) and a
vanishing relation function M[z_t z_s] = 0.  Kernels come in four
flavours: white (``Delta``), exponentially decaying (``Exponential``), a
single undamped environment mode (``SingleMode``) and an arbitrary
grid-sampled Hermitian matrix (``Sampled``).

Randomness is drawn from counter-based Philox streams keyed by
``(seed, path, channel)`` so every path can be regenerated on its own,
in any order, on any worker.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DeltaNotPointwise, NotPositiveSemidefinite, UnsupportedKernel

PSD_TOL = -1e-10


@dataclass(frozen=True)
class Delta:
    """White noise, alpha(t, s) = delta(t - s)."""


@dataclass(frozen=True)
class Exponential:
    """alpha(t, s) = weight * exp(-gamma |t-s| - i Omega (t-s)); weight defaults to gamma/2."""

    gamma: float
    Omega: float = 0.0
    weight: float = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("Exponential kernel needs gamma > 0")
        if self.weight is None:
            object.__setattr__(self, "weight", self.gamma / 2)
        if not self.weight > 0:
            raise ValueError("Exponential kernel needs weight > 0")


@dataclass(frozen=True)
class SingleMode:
    """alpha(t, s) = g2 * exp(-i Omega (t-s)): one undamped oscillator."""

    Omega: float
    g2: float = 1.0

    def __post_init__(self):
        if self.g2 < 0:
            raise ValueError("SingleMode kernel needs g2 >= 0")


@dataclass(frozen=True, eq=False)
class Sampled:
    """Kernel tabulated on a uniform grid: ``matrix[i, j] = alpha(t_i, t_j)``."""

    times: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (t.size, t.size):
            raise ValueError("Sampled kernel matrix must be n x n for n times")
        # Hermitian by construction
        m = 0.5 * (m + m.conj().T)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "matrix", m)

    def index(self, t):
        """Grid index of ``t`` (scalar or array)."""
        t = np.asarray(t, dtype=float)
        i = np.rint((t - self.times[0]) / (self.times[1] - self.times[0])).astype(int)
        ok = (i >= 0) & (i < self.times.size)
        if not np.all(ok) or np.any(np.abs(self.times[np.where(ok, i, 0)] - t) > 1e-9):
            raise ValueError(f"time {t} is not on the sampled kernel grid")
        return int(i) if i.ndim == 0 else i


def exp_terms(kernel):
    """Decomposition alpha(t, s) = sum w exp(-(rate + i freq)(t - s)), t >= s.

    Returns a list of ``(w, rate, freq)`` or raises UnsupportedKernel.
    """
    if isinstance(kernel, Exponential):
        return [(kernel.weight, kernel.gamma, kernel.Omega)]
    if isinstance(kernel, SingleMode):
        return [(kernel.g2, 0.0, kernel.Omega)]
    raise UnsupportedKernel(f"{type(kernel).__name__} has no exponential form")


def kernel_eval(kernel, t, s):
    """alpha(t, s).  Hermitian: kernel_eval(k, t, s) == conj(kernel_eval(k, s, t))."""
    if isinstance(kernel, Delta):
        raise DeltaNotPointwise("delta kernel has no pointwise values")
    if isinstance(kernel, Sampled):
        return complex(kernel.matrix[kernel.index(t), kernel.index(s)])
    tau = t - s
    if isinstance(kernel, Exponential):
        return kernel.weight * np.exp(-kernel.gamma * abs(tau) - 1j * kernel.Omega * tau)
    if isinstance(kernel, SingleMode):
        return kernel.g2 * np.exp(-1j * kernel.Omega * tau)
    raise UnsupportedKernel(type(kernel).__name__)


def uniform_grid(T, dt):
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return np.arange(n + 1) * dt


def build_covariance(kernel, times):
    """Matrix C with C[i, j] = alpha(t_i, t_j) = M[z_i* z_j].

    The delta kernel discretizes to ``I / dt``.  Raises
    NotPositiveSemidefinite when the smallest eigenvalue is below -1e-10.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    if n > 1:
        steps = np.diff(times)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise ValueError("covariance grid must be uniform with dt > 0")
    if isinstance(kernel, Delta):
        if n < 2:
            raise ValueError("delta covariance needs at least two grid points")
        return np.eye(n, dtype=complex) / (times[1] - times[0])
    if isinstance(kernel, Sampled):
        idx = [kernel.index(t) for t in times]
        c = kernel.matrix[np.ix_(idx, idx)].copy()
    else:
        tau = times[:, None] - times[None, :]
        if isinstance(kernel, Exponential):
            c = kernel.weight * np.exp(-kernel.gamma * np.abs(tau) - 1j * kernel.Omega * tau)
        elif isinstance(kernel, SingleMode):
            c = kernel.g2 * np.exp(-1j * kernel.Omega * tau)
        else:
            raise UnsupportedKernel(type(kernel).__name__)
    c = 0.5 * (c + c.conj().T)
    lo = np.linalg.eigvalsh(c).min()
    if lo < PSD_TOL:
        raise NotPositiveSemidefinite(f"kernel covariance has eigenvalue {lo:.3e}")
    return c


# -- random streams -----------------------------------------------------------

def path_rng(seed, path, channel=0):
    """Counter-based generator for one (seed, path, channel) triple."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path), int(channel)))
    return np.random.Generator(np.random.Philox(ss))


def circular_normal(rng, size):
    """Circular complex standard normals: M[|w|^2] = 1, M[w w] = 0."""
    g = rng.standard_normal(size + (2,) if isinstance(size, tuple) else (size, 2))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)


@dataclass
class NoisePath:
    times: np.ndarray
    values: np.ndarray
    seed: int = None
    stream: tuple = field(default=())

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("NoisePath times and values differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("NoisePath contains non-finite values")


def covariance_factor(c):
    """Lambda with Lambda Lambda^dagger = C.

    Cholesky on C plus a 1e-12 * trace / n diagonal shift; rank-deficient
    matrices that still fail fall back to a clipped eigen-factorization.
    """
    c = np.asarray(c, dtype=complex)
    n = c.shape[0]
    reg = 1e-12 * np.trace(c).real / n
    try:
        return np.linalg.cholesky(c + reg * np.eye(n))
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(c)
        if vals.min() < PSD_TOL:
            raise NotPositiveSemidefinite(f"eigenvalue {vals.min():.3e}")
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def sample_path_cholesky(c, rng, times=None):
    """One path z with M[z_i* z_j] = C[i, j] and M[z_i z_j] = 0.

    ``rng`` is a numpy Generator; ``c`` may also be a precomputed factor
    passed as ``(\"factor\", Lambda)``.
    """
    if isinstance(c, tuple) and c[0] == "factor":
        lam = c[1]
    else:
        lam = covariance_factor(c)
    n = lam.shape[0]
    w = circular_normal(rng, n)
    # conj so that M[z z^dagger] = conj(C), i.e. M[z_i* z_j] = C[i, j]
    z = lam.conj() @ w
    if times is None:
        times = np.arange(n, dtype=float)
    return NoisePath(np.asarray(times), z)


def sample_path_recursive(kernel, times, rng):
    """O(n) sampler for the two closed-form kernels.

    Exponential: stationary complex Ornstein-Uhlenbeck recursion.
    SingleMode: a single circular normal rotated as exp(+i Omega t).
    """
    times = np.asarray(times, dtype=float)
    if not isinstance(kernel, (Exponential, SingleMode)):
        raise UnsupportedKernel(f"no recursive sampler for {type(kernel).__name__}")
    gen = StreamSampler(kernel, times[1] - times[0] if times.size > 1 else 1.0)
    state = gen.start([rng])
    z = np.empty(times.size, dtype=complex)
    z[0] = state["z"][0]
    if times.size > 1:
        z[1:] = gen.advance([rng], state, times.size - 1, times[0])[0][0]
    return NoisePath(times, z)


class StreamSampler:
    """Generates one noise channel for a batch of paths, block by block.

    Used both by :func:`sample_path_recursive` and by the ensemble driver,
    so the statistics tested on single paths are the ones trajectories see.
    ``rngs`` holds one generator per path; draws for a path depend only on
    its own generator, never on the batch it sits in.  ``Sampled`` kernels
    are drawn in one shot via their covariance factor.
    """

    def __init__(self, kernel, dt, times=None):
        self.kernel = kernel
        self.dt = float(dt)
        if isinstance(kernel, Exponential):
            self.decay = np.exp(-(kernel.gamma - 1j * kernel.Omega) * dt)
            self.kick = np.sqrt(kernel.weight * (1 - np.exp(-2 * kernel.gamma * dt)))
        elif isinstance(kernel, Sampled):
            if times is None:
                raise ValueError("Sampled kernel needs the simulation grid")
            self.factor = covariance_factor(build_covariance(kernel, times))
        elif not isinstance(kernel, (SingleMode, Delta)):
            raise UnsupportedKernel(type(kernel).__name__)

    def _draw(self, rngs, n):
        return np.stack([circular_normal(r, n) for r in rngs])

    def start(self, rngs):
        """Initial values z(t_0) for every path; returns the sampler state."""
        k = self.kernel
        if isinstance(k, Exponential):
            z = np.sqrt(k.weight) * self._draw(rngs, 1)[:, 0]
            return {"z": z}
        if isinstance(k, SingleMode):
            w = np.sqrt(k.g2) * self._draw(rngs, 1)[:, 0]
            return {"z": w, "w": w}
        if isinstance(k, Delta):
            return {"z": self._draw(rngs, 1)[:, 0] / np.sqrt(self.dt)}
        paths = self._draw(rngs, self.factor.shape[0]) @ self.factor.conj().T
        return {"z": paths[:, 0], "path": paths, "pos": 0}

    def advance(self, rngs, state, n, t0):
        """The next ``n`` values per path after time ``t0``: shape (B, n)."""
        k = self.kernel
        if isinstance(k, Exponential):
            xi = self.kick * self._draw(rngs, n)
            zi = (self.decay * state["z"])[:, None]
            out, _ = lfilter([1.0], [1.0, -self.decay], xi, axis=1, zi=zi)
        elif isinstance(k, SingleMode):
            t = t0 + self.dt * np.arange(1, n + 1)
            out = state["w"][:, None] * np.exp(1j * k.Omega * t)[None, :]
        elif isinstance(k, Delta):
            out = self._draw(rngs, n) / np.sqrt(self.dt)
        else:
            p = state["pos"]
            out = state["path"][:, p + 1:p + 1 + n]
            if out.shape[1] != n:
                raise ValueError("simulation ran past the sampled kernel grid")
            state["pos"] = p + n
        state["z"] = out[:, -1]
        return out, state


def write_noise_csv(path, noise):
    """Debug export of a NoisePath as ``t,re_z,im_z``."""
    from .io import write_csv
    rows = zip(noise.times, noise.values.real, noise.values.imag)
    write_csv(path, ["t", "re_z", "im_z"], rows)
