"""Command line entry point: ``nmqsd run|validate|replay``.

Exit codes: 0 all declared checks pass, 2 configuration error,
3 a check failed, 4 numerical fault.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, NMQSDError
from .experiments import KEYS, ExperimentConfig, resolve, run
from .io import read_json, write_csv, write_densities, write_json, write_q_field, write_series

log = logging.getLogger("nmqsd")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_NUMERIC = 0, 2, 3, 4


def emit_outputs(result, out_dir):
    """Write every series of ``result`` plus ``manifest.json`` into ``out_dir``.

    Files are named ``<experiment>_<series>.csv|json``.  Returns the list of
    written paths, manifest first.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    name = result.config.experiment
    written = [write_json(out / "manifest.json", result.config.manifest())]
    if result.is_empty():
        log.warning("%s produced no results; wrote manifest only", name)
        return written
    for series, s in result.series.items():
        written.append(write_series(out / f"{name}_{series}.csv", s.times, s.means,
                                    s.ses, source=s.source))
    for series, (times, rhos, source) in result.densities.items():
        written.append(write_densities(out / f"{name}_{series}.json", times, rhos,
                                       source=source))
    for label, re_ax, im_ax, q in result.q_fields:
        written.append(write_q_field(out / f"{name}_{label}.csv", re_ax, im_ax, q))
    for label, (header, rows) in result.tables.items():
        written.append(write_csv(out / f"{name}_{label}.csv", header, rows))
    if result.summary:
        summary = dict(result.summary, experiment=name, passed=result.passed)
        written.append(write_json(out / f"{name}_summary.json", summary))
    return written


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(pairs):
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or key not in KEYS:
            raise ConfigError(f"bad override {item!r}; expected key=value with key in {KEYS}")
        out[key] = _parse_value(value)
    return out


def run_experiment(cfg, out_dir=None, workers=None):
    """Run, emit and return ``(exit_code, result)``."""
    cfg = resolve(cfg)
    result = run(cfg, workers=workers)
    emit_outputs(result, out_dir or cfg.params["output_dir"])
    for label, c in result.summary.get("checks", {}).items():
        log.info("%s %s: %s", "PASS" if c["pass"] else "FAIL", label, c["value"])
    return (EXIT_OK if result.passed else EXIT_CHECK), result


def _guarded(fn):
    try:
        return fn()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NMQSDError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        failures = getattr(exc, "failures", None)
        if failures:
            for path, why in list(failures.items())[:10]:
                print(f"  path {path}: {why}", file=sys.stderr)
        return EXIT_NUMERIC


def _load_config(path):
    try:
        data = read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if isinstance(data, dict) and "config" in data:     # a manifest
        data = data["config"]
    return ExperimentConfig.from_dict(data)


def build_parser():
    ap = argparse.ArgumentParser(prog="nmqsd", description="Non-Markovian quantum trajectory experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--paths", type=int)
    v = sub.add_parser("validate", help="check a config file")
    v.add_argument("config")
    p = sub.add_parser("replay", help="rerun from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")

    def do_run():
        overrides = parse_overrides(args.set)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.paths is not None:
            overrides["n_paths"] = args.paths
        cfg = ExperimentConfig.preset(args.experiment, **overrides)
        code, result = run_experiment(cfg, args.out)
        print(json.dumps({k: c["pass"] for k, c in result.summary.get("checks", {}).items()}))
        return code

    def do_validate():
        cfg = _load_config(args.config)
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK

    def do_replay():
        cfg = _load_config(args.manifest)
        code, _ = run_experiment(cfg, args.out)
        return code

    return _guarded({"run": do_run, "validate": do_validate, "replay": do_replay}[args.command])


if __name__ == "__main__":
    sys.exit(main())
