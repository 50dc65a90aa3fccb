"""CSV/JSON serialization with lossless float formatting."""

import csv
import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.17g}"


def fmt(x):
    if isinstance(x, (str, bytes)):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return FLOAT_FMT.format(float(x))


def write_csv(path, header, rows, comment=None):
    """Write ``rows`` under ``header``; an optional leading ``# key=value`` line tags the source."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    """Return (header, rows, comment); numeric cells come back as float."""
    comment = None
    with Path(path).open(newline="") as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("#"):
        comment = lines[0][1:].strip()
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    rows = []
    for r in reader:
        out = []
        for cell in r:
            try:
                out.append(float(cell))
            except ValueError:
                out.append(cell)
        rows.append(out)
    return header, rows, comment


def write_q_field(path, re_axis, im_axis, q):
    q = np.asarray(q)
    rows = ((x, y, q[i, j]) for i, x in enumerate(re_axis) for j, y in enumerate(im_axis))
    return write_csv(path, ["re_beta", "im_beta", "q"], rows)


def read_q_field(path):
    _, rows, _ = read_csv(path)
    a = np.array(rows, dtype=float)
    re_axis = np.unique(a[:, 0])
    im_axis = np.unique(a[:, 1])
    return re_axis, im_axis, a[:, 2].reshape(re_axis.size, im_axis.size)


def write_series(path, times, means, ses, source=None):
    """Observable series as ``t,obs_name,re_mean,im_mean,se``.

    ``means`` and ``ses`` map observable names to arrays over ``times``.
    """
    rows = []
    for name in means:
        m = np.asarray(means[name], dtype=complex)
        s = np.asarray(ses.get(name, np.zeros(m.shape)) if ses else np.zeros(m.shape))
        rows.extend((t, name, mi.real, mi.imag, si) for t, mi, si in zip(times, m, s))
    return write_csv(path, ["t", "obs_name", "re_mean", "im_mean", "se"], rows,
                     comment=f"source={source}" if source else None)


def read_series(path):
    """Inverse of :func:`write_series`: (times, means, ses, source)."""
    _, rows, comment = read_csv(path)
    means, ses, times = {}, {}, {}
    for t, name, re, im, se in rows:
        means.setdefault(name, []).append(complex(re, im))
        ses.setdefault(name, []).append(se)
        times.setdefault(name, []).append(t)
    source = comment.split("=", 1)[1] if comment and "=" in comment else None
    first = next(iter(times.values()), [])
    return (np.array(first), {k: np.array(v) for k, v in means.items()},
            {k: np.array(v) for k, v in ses.items()}, source)


def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj):
    # json emits the shortest round-trip repr for floats: lossless
    path = Path(path)
    try:
        path.write_text(json.dumps(_encode(obj), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_densities(path, times, rhos, source=None):
    """Per-snapshot density matrices, row-major [re, im] pairs."""
    rhos = np.asarray(rhos, dtype=complex)
    payload = {
        "source": source,
        "times": np.asarray(times, dtype=float),
        "dim": int(rhos.shape[-1]),
        "rho": [[[c.real, c.imag] for c in r.ravel()] for r in rhos],
    }
    return write_json(path, payload)


def read_densities(path):
    data = read_json(path)
    d = data["dim"]
    rho = np.array([[complex(a, b) for a, b in r] for r in data["rho"]]).reshape(-1, d, d)
    return np.array(data["times"]), rho, data.get("source")
