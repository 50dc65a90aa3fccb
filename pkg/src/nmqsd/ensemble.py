"""Monte Carlo ensembles of quantum trajectories.

Paths are split into fixed batches of ``BATCH`` consecutive indices.  A
batch is simulated vectorized, its statistics are reduced to
``(count, mean, M2)`` triples, and the batches are merged pairwise in
index order.  Since the partition and the merge order depend only on
``n_paths``, results are bit-identical for any worker count.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyEnsemble, EnsembleFailure, InsufficientSamples,
                     ModelEstimatorMismatch, ZeroNorm)
from .hilbert import dag, normalize, projector
from .noise import StreamSampler, path_rng, uniform_grid
from .trajectory.steppers import StepScheme

log = logging.getLogger(__name__)

BATCH = 1024
BLOCK = 1000

RAW_LINEAR = "raw_linear"
NORMALIZED = "normalized_nonlinear"


@dataclass
class EnsembleConfig:
    model: object
    n_paths: int
    dt: float
    T: float
    seed: int = 0
    estimator: str = None
    observables: dict = field(default_factory=dict)
    snapshot_stride: int = 10
    record_paths: tuple = ()
    extrema_after: float = 0.0
    workers: int = None
    scheme: str = "heun"

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")
        if self.estimator is None:
            self.estimator = RAW_LINEAR if self.model.linear else NORMALIZED
        self.n_steps = len(uniform_grid(self.T, self.dt)) - 1


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_density: np.ndarray          # (n_snap, d, d)
    density_se: np.ndarray            # (n_snap, d, d), elementwise
    observable_means: dict
    standard_errors: dict
    n_paths: int
    estimator: str
    path_final: dict = field(default_factory=dict)
    path_max: dict = field(default_factory=dict)
    path_min: dict = field(default_factory=dict)
    records: dict = field(default_factory=dict)

    def se_equivalent(self, i=None):
        """Trace-distance scale of the sampling error of ``mean_density``.

        (sqrt(d) / 2) times the Frobenius norm of the elementwise standard
        errors; this is the bound TD <= sqrt(d)/2 ||.||_F applied to the
        error matrix and is exact for traceless 2x2 deviations.
        """
        d = self.mean_density.shape[-1]
        se = self.density_se if i is None else self.density_se[i]
        return 0.5 * np.sqrt(d) * np.sqrt(np.sum(se ** 2, axis=(-2, -1)))


# -- moments -------------------------------------------------------------------

class Moments:
    """Count, mean and M2 = sum |x - mean|^2 with Chan's pairwise merge."""

    __slots__ = ("n", "mean", "m2")

    def __init__(self, n, mean, m2):
        self.n, self.mean, self.m2 = n, mean, m2

    @classmethod
    def of(cls, samples):
        """Two-pass moments over axis 0."""
        x = np.asarray(samples)
        mean = x.mean(axis=0)
        return cls(x.shape[0], mean, np.sum(np.abs(x - mean) ** 2, axis=0))

    def update(self, x):
        """Welford update with one sample."""
        self.n += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.n
        self.m2 = self.m2 + np.real(np.conj(delta) * (x - self.mean))
        return self

    def merge(self, other):
        n = self.n + other.n
        if n == 0:
            return self
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.abs(delta) ** 2 * (self.n * other.n / n)
        return Moments(n, mean, m2)

    def se(self):
        if self.n < 2:
            raise InsufficientSamples("standard error needs at least two samples")
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def tree_merge(items):
    """Pairwise reduction in fixed left-to-right order."""
    items = list(items)
    if not items:
        raise EmptyEnsemble("nothing to merge")
    while len(items) > 1:
        nxt = [items[i].merge(items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def standard_error(samples):
    """Sample standard deviation over sqrt(n), one Welford pass."""
    samples = np.asarray(samples)
    if samples.shape[0] < 2:
        raise InsufficientSamples("standard error needs at least two samples")
    acc = Moments(0, np.zeros(samples.shape[1:], dtype=samples.dtype),
                  np.zeros(samples.shape[1:]))
    for x in samples:
        acc.update(x)
    return acc.se()


def mean_density(states, estimator=NORMALIZED):
    """Average of projectors over axis 0 of ``states`` (paths first).

    ``NORMALIZED`` normalizes each state first; ``RAW_LINEAR`` averages the
    unnormalized projectors.  The result is Hermitized.
    """
    states = np.asarray(states, dtype=complex)
    if states.shape[0] == 0:
        raise EmptyEnsemble("no paths to average")
    if estimator == NORMALIZED:
        states = normalize(states)
    rho = projector(states).mean(axis=0)
    return 0.5 * (rho + dag(rho))


# -- simulation ----------------------------------------------------------------

def snapshot_indices(n_steps, stride):
    idx = list(range(0, n_steps + 1, stride))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return np.array(idx)


@dataclass
class _BatchStats:
    rho: list
    obs: dict
    final: dict
    pmax: dict
    pmin: dict
    records: dict


def _observe(psi, op):
    return np.einsum("bi,ij,bj->b", psi.conj(), op, psi)


def _run_batch(cfg, start, stop):
    model = cfg.model
    B = stop - start
    dt = cfg.dt
    times = uniform_grid(cfg.T, dt)
    scheme = StepScheme(dt, cfg.scheme)
    kernels = model.kernels
    samplers = [StreamSampler(k, dt, times) for k in kernels]
    rngs = [[path_rng(cfg.seed, p, ch) for p in range(start, stop)]
            for ch in range(len(kernels))]
    nstates = [s.start(r) for s, r in zip(samplers, rngs)]
    z_now = np.stack([s["z"] for s in nstates], axis=1) if kernels else np.zeros((B, 0))

    state = model.init(B, dt)
    snaps = set(snapshot_indices(cfg.n_steps, cfg.snapshot_stride).tolist())
    names = list(cfg.observables)
    ops = [np.asarray(cfg.observables[k], dtype=complex) for k in names]
    rho_m, obs_m = [], {k: [] for k in names}
    pmax = {k: np.full(B, -np.inf) for k in names}
    pmin = {k: np.full(B, np.inf) for k in names}
    recorded = [p for p in cfg.record_paths if start <= p < stop]
    records = {p: [] for p in recorded}

    def snapshot(n):
        psi = state["psi"]
        rho_m.append(Moments.of(projector(psi)))
        vals = {}
        for k, op in zip(names, ops):
            v = _observe(psi, op)
            vals[k] = v
            obs_m[k].append(Moments.of(v))
            if n * dt >= cfg.extrema_after - 1e-12:
                np.maximum(pmax[k], v.real, out=pmax[k])
                np.minimum(pmin[k], v.real, out=pmin[k])
        for p in recorded:
            records[p].append(psi[p - start].copy())
        return vals

    vals = snapshot(0)
    block = None
    base = 0
    try:
        for n in range(cfg.n_steps):
            off = n % BLOCK
            if off == 0:
                k_len = min(BLOCK, cfg.n_steps - n)
                cols = []
                for ch, s in enumerate(samplers):
                    out, nstates[ch] = s.advance(rngs[ch], nstates[ch], k_len, n * dt)
                    cols.append(out)
                block = np.stack(cols, axis=2) if cols else np.zeros((B, k_len, 0))
                base = n
            z_next = block[:, n - base]
            state = model.step(state, n, z_now, z_next, scheme)
            z_now = z_next
            if n + 1 in snaps:
                vals = snapshot(n + 1)
    except ZeroNorm as exc:
        raise EnsembleFailure({p: f"step {n}: {exc}" for p in range(start, stop)}) from exc
    if not np.all(np.isfinite(state["psi"])):
        bad = np.flatnonzero(~np.all(np.isfinite(state["psi"]), axis=1)) + start
        raise EnsembleFailure({int(p): "non-finite state" for p in bad})
    return _BatchStats(rho_m, obs_m, vals, pmax, pmin,
                       {p: np.array(v) for p, v in records.items()})


def resolve_workers(workers=None):
    if workers is None:
        env = os.environ.get("NMQSD_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def run_ensemble(cfg):
    """Simulate ``cfg.n_paths`` trajectories and reduce them to an EnsembleResult."""
    if cfg.model.linear != (cfg.estimator == RAW_LINEAR):
        raise ModelEstimatorMismatch(
            f"{type(cfg.model).__name__}(linear={cfg.model.linear}) "
            f"cannot use estimator {cfg.estimator!r}")
    ranges = [(s, min(s + BATCH, cfg.n_paths)) for s in range(0, cfg.n_paths, BATCH)]
    workers = min(resolve_workers(cfg.workers), len(ranges))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, [cfg] * len(ranges),
                                  [r[0] for r in ranges], [r[1] for r in ranges]))
    else:
        parts = [_run_batch(cfg, a, b) for a, b in ranges]

    idx = snapshot_indices(cfg.n_steps, cfg.snapshot_stride)
    n_snap = idx.size
    rho = [tree_merge(p.rho[i] for p in parts) for i in range(n_snap)]
    mean = np.array([r.mean for r in rho])
    mean = 0.5 * (mean + dag(mean))
    n = cfg.n_paths
    dse = np.array([np.sqrt(r.m2 / (n - 1) / n) if n > 1 else np.zeros_like(r.m2)
                    for r in rho])
    obs_means, obs_se = {}, {}
    for k in cfg.observables:
        m = [tree_merge(p.obs[k][i] for p in parts) for i in range(n_snap)]
        obs_means[k] = np.array([x.mean for x in m])
        obs_se[k] = np.array([x.se() if n > 1 else 0.0 for x in m])
    cat = lambda key: {k: np.concatenate([getattr(p, key)[k] for p in parts])
                       for k in cfg.observables}
    records = {}
    for p in parts:
        records.update(p.records)
    return EnsembleResult(
        times=idx * cfg.dt, mean_density=mean, density_se=dse,
        observable_means=obs_means, standard_errors=obs_se, n_paths=n,
        estimator=cfg.estimator, path_final=cat("final"), path_max=cat("pmax"),
        path_min=cat("pmin"), records=records)
