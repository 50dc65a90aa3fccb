"""Full-scale acceptance runs, one test per criterion.

Each test records a one-line verdict that the terminal summary prints
(see conftest.py).  Runs take roughly ten minutes on one core.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from nmqsd import cli
from nmqsd.ensemble import EnsembleConfig, run_ensemble
from nmqsd.experiments import PRESETS, SE_FLOOR, ExperimentConfig, run
from nmqsd.hilbert import fock, normalize, sigma_minus, sigma_z, tensor_product, trace_distance
from nmqsd.noise import Exponential, SingleMode
from nmqsd.oracle import joint_unitary_evolve, reduce_system
from nmqsd.trajectory import (CutModel, DissipativeModel, FCoefficient, MarkovModel,
                              MeasurementModel, TwoChannelModel, critical_time, solve_F)

pytestmark = pytest.mark.slow

PSI0 = normalize(np.array([3, 2], dtype=complex))
H = 0.5 * sigma_z()


def verdict(log, n, checks, extra=""):
    ok = all(c["pass"] for c in checks.values())
    parts = [f"{k}={'ok' if c['pass'] else 'FAIL'}({_short(c['value'])})"
             for k, c in checks.items()]
    log[n] = (ok, " ".join(parts) + (f" {extra}" if extra else ""))
    return ok


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, list):
        return "[" + ",".join(_short(x) for x in v) + "]"
    return str(v)


def _run_preset(name, **overrides):
    t0 = time.perf_counter()
    res = run(ExperimentConfig.preset(name, **overrides))
    return res, time.perf_counter() - t0


def test_c01_fig1a(acceptance_log):
    res, secs = _run_preset("fig1a")
    checks = dict(res.summary["checks"])
    checks["runtime_s"] = {"value": secs, "pass": secs < 120.0}
    assert verdict(acceptance_log, 1, checks)


def test_c02_fig1b(acceptance_log):
    res, _ = _run_preset("fig1b")
    checks = dict(res.summary["checks"])
    tc = critical_time(1.0, 1.0)
    checks["critical_time_formula"] = {"value": tc, "pass": tc == 1.5 * math.pi}
    frac = checks["all_absorbed_after_tc"]["fraction"]
    assert verdict(acceptance_log, 2, checks, f"absorbed_fraction={frac:.4f}")


def test_c03_riccati(acceptance_log):
    p = FCoefficient.from_params(4.0, 1.0, 1.0, 1.0)
    sol = solve_F(p, np.arange(0.0, 20.0 + 5e-4, 1e-3))
    sup = float(np.max(np.abs(sol.values - sol.closed_form)))
    checks = {"rk4_vs_closed_form": {"value": sup, "pass": sup < 1e-8},
              "plateau": {"value": float(sol.values[-1].real),
                          "pass": abs(sol.values[-1] - (2 - math.sqrt(2))) < 1e-6}}
    for gamma in (0.5, 1.0, 1.5):
        tc = critical_time(gamma, 1.0)
        s = solve_F(FCoefficient.from_params(gamma, 1.0, 1.0, 1.0),
                    np.arange(0.0, 1.5 * tc, 1e-3))
        rel = abs(s.divergence_time - tc) / tc if s.divergence_time else math.inf
        checks[f"blowup_gamma_{gamma:g}"] = {"value": rel, "pass": rel < 1e-3}
    assert verdict(acceptance_log, 3, checks)


def test_c04_single_mode_exactness(acceptance_log):
    # four independent 10^4 replicas; their pooled mean is the 4*10^4 ensemble
    model = DissipativeModel(H, sigma_minus(), 1.0, SingleMode(1.0, 1.0), PSI0, linear=True)
    reps = [run_ensemble(EnsembleConfig(model, 10_000, 1e-3, 5.0, seed=s, snapshot_stride=100))
            for s in (1, 2, 3, 4)]
    D = 12
    joint0 = tensor_product(PSI0, fock(D, 0))
    ref = reduce_system(joint_unitary_evolve(joint0, H, sigma_minus(), (1.0, 1.0, D),
                                             reps[0].times), 2, D)

    def max_td(rhos):
        return max(trace_distance(a, b) for a, b in zip(rhos, ref))

    small = [max_td(r.mean_density) for r in reps]
    big = max_td(np.mean([r.mean_density for r in reps], axis=0))
    ratio = float(np.mean(small)) / big
    checks = {
        "td_N1e4": {"value": float(small[0]), "pass": small[0] < 0.05},
        "td_N4e4": {"value": float(big), "pass": big < 0.025},
        "sqrtN_ratio": {"value": ratio, "pass": abs(ratio / 2 - 1) <= 0.3},
    }
    assert verdict(acceptance_log, 4, checks)


def test_c05_markov_limit(acceptance_log):
    res, _ = _run_preset("markov_limit")
    assert verdict(acceptance_log, 5, res.summary["checks"])


def test_c06_cat_revival(acceptance_log):
    res, _ = _run_preset("fig2")
    checks = dict(res.summary["checks"])
    frames = len(res.q_fields)
    checks["q_frames"] = {"value": frames, "pass": frames >= 8}
    assert verdict(acceptance_log, 6, checks,
                   f"revival_time={res.summary['revival_time']:.4f}")


def test_c07_heisenberg_cut(acceptance_log):
    res, _ = _run_preset("cut")
    assert verdict(acceptance_log, 7, res.summary["checks"])


def test_c08_noise_fidelity(acceptance_log):
    res, _ = _run_preset("noise_stats")
    assert verdict(acceptance_log, 8, res.summary["checks"])


def test_c09_martingale(acceptance_log):
    models = {
        "markov": MarkovModel(H, sigma_minus(), PSI0, linear=True),
        "measurement": MeasurementModel(H, sigma_z(), Exponential(1.0), PSI0, linear=True),
        "single_mode": DissipativeModel(H, sigma_minus(), 1.0, SingleMode(1.0, 1.0), PSI0,
                                        linear=True),
        "exponential": DissipativeModel(H, sigma_minus(), 1.0, Exponential(4.0, 1.0), PSI0,
                                        linear=True),
        "two_channel": TwoChannelModel(CutModel(), PSI0),
    }
    checks = {}
    for name, model in models.items():
        r = run_ensemble(EnsembleConfig(model, 10_000, 1e-3, 5.0, seed=7, snapshot_stride=100,
                                        observables={"norm2": np.eye(2)}))
        dev = np.abs(r.observable_means["norm2"] - 1)
        score = float(np.max(dev / (3 * r.standard_errors["norm2"] + SE_FLOOR)))
        checks[name] = {"value": score, "pass": score <= 1.0}
    assert verdict(acceptance_log, 9, checks)


SMALL = {
    "fig1a": dict(n_paths=1200, T=1.0),
    "fig1b": dict(n_paths=1200, T=5.0, dt=1e-2),
    "fig2": dict(n_paths=6),
    "cut": dict(n_paths=1100, T=1.0),
    "markov_limit": dict(n_paths=1100, T=0.5),
    "noise_stats": dict(n_paths=1500),
}


def test_c10_determinism(acceptance_log, tmp_path, monkeypatch):
    checks = {}
    for name in sorted(PRESETS):
        a, b = tmp_path / name / "a", tmp_path / name / "b"
        monkeypatch.setenv("NMQSD_THREADS", "1")
        cli.run_experiment(ExperimentConfig.preset(name, **SMALL[name]), a)
        monkeypatch.setenv("NMQSD_THREADS", "2")
        cli.main(["replay", str(a / "manifest.json"), "--out", str(b)])
        fa = {p.name: p.read_bytes() for p in Path(a).iterdir()}
        fb = {p.name: p.read_bytes() for p in Path(b).iterdir()}
        checks[name] = {"value": len(fa), "pass": len(fa) > 1 and fa == fb}
    assert verdict(acceptance_log, 10, checks)
