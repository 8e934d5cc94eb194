"""Deterministic output formats: CSV time series, JSON reports, snapshots.

All writers are byte-stable for identical inputs: floats are rendered
with ``repr`` (shortest round-trip), JSON keys are sorted, rows use plain
``\\n`` separators, and every write is atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

SNAPSHOT_MAGIC = "curvflow-snapshot v1"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def atomic_write_bytes(path: str, payload: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path: str, doc: dict) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default)
    atomic_write_text(path, text + "\n")


# -- snapshot binary format ---------------------------------------------

def write_snapshot(path: str, *, kind: str, t: float,
                   counts: tuple[int, ...], data: np.ndarray,
                   signature: tuple[int, ...] | None = None) -> None:
    """Flat little-endian float64 payload behind one text header line.

    Header fields: kind, time, chart dimension, per-axis counts, number of
    node components, and the ambient signature for embedding snapshots.
    """
    arr = np.ascontiguousarray(data, dtype="<f8")
    cshape = arr.shape[len(counts):]
    ncomp = int(np.prod(cshape, dtype=int)) if cshape else 1
    header = (f"{SNAPSHOT_MAGIC} kind={kind} t={repr(float(t))} "
              f"dim={len(counts)} counts={','.join(str(c) for c in counts)} "
              f"ncomp={ncomp} cshape={','.join(str(c) for c in cshape) or '-'}")
    if signature is not None:
        header += " signature=" + ",".join(str(int(s)) for s in signature)
    atomic_write_bytes(path, header.encode("ascii") + b"\n" + arr.tobytes())


def read_snapshot(path: str) -> dict:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        payload = fh.read()
    if not header.startswith(SNAPSHOT_MAGIC):
        raise ValueError(f"{path}: not a snapshot file")
    fields: dict = {}
    for tok in header[len(SNAPSHOT_MAGIC):].split():
        key, _, val = tok.partition("=")
        fields[key] = val
    counts = tuple(int(c) for c in fields["counts"].split(","))
    ncomp = int(fields["ncomp"])
    cshape: tuple[int, ...] = ()
    if fields.get("cshape", "-") != "-":
        cshape = tuple(int(c) for c in fields["cshape"].split(","))
    data = np.frombuffer(payload, dtype="<f8").copy()
    out = {
        "kind": fields["kind"],
        "t": float(fields["t"]),
        "counts": counts,
        "ncomp": ncomp,
        "data": data.reshape(counts + cshape),
    }
    if "signature" in fields:
        out["signature"] = tuple(int(s) for s in fields["signature"].split(","))
    return out
