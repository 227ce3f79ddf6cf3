"""File formats.

Edge list
    ``# nodes=<n>`` header, then one whitespace-separated ``i j`` pair per
    line, 0-based, written with ``i < j`` in sorted order.
Attributes
    CSV ``node,binary,continuous[,outcome]``, one row per node in id order;
    continuous values use 17 significant digits.
Waves
    CSV ``node,wave``.
Parameters
    CSV ``effect,value`` over the five effect names.
Outcomes
    CSV ``node,y0,y1,...``, one column per simulated outcome vector.
Summary
    One row per (cell, effect); see :data:`SUMMARY_COLUMNS`.

Readers raise :class:`DataFormatError` naming the file and line.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InputError
from .graph import Graph, from_edge_list
from .model import EFFECTS, AttributeTable, ParameterVector

SUMMARY_COLUMNS = ("scheme", "waves", "seeds", "m", "sample_size_mean", "effect", "true_value",
                   "rmse", "rmse_lo", "rmse_hi", "type1", "type1_lo", "type1_hi",
                   "type2", "type2_lo", "type2_hi", "n_converged", "n_total")


def fmt_float(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "NA"
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    return format(x, ".17g")


def atomic_write_text(path, text: str):
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# --- edge lists ---------------------------------------------------------------

def format_edge_list(g: Graph) -> str:
    lines = [f"# nodes={g.node_count}"]
    lines.extend(f"{a} {b}" for a, b in g.edges)
    return "\n".join(lines) + "\n"


def write_edge_list(path, g: Graph):
    atomic_write_text(path, format_edge_list(g))


def read_edge_list(path, one_based: bool = False, n: int | None = None) -> Graph:
    """Read an edge list. Without a ``# nodes=`` header, n is max id + 1.

    Self-loops are rejected; duplicate pairs collapse.
    """
    pairs = []
    header_n = None
    shift = 1 if one_based else 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("nodes="):
                    try:
                        header_n = int(body[len("nodes="):])
                    except ValueError:
                        raise DataFormatError(f"bad header {line!r}", path, lineno) from None
                continue
            parts = line.split()
            if len(parts) < 2:
                raise DataFormatError(f"expected two node ids, got {line!r}", path, lineno)
            try:
                a, b = int(parts[0]) - shift, int(parts[1]) - shift
            except ValueError:
                raise DataFormatError(f"non-integer node id in {line!r}", path, lineno) from None
            if a < 0 or b < 0:
                raise DataFormatError(f"negative node id in {line!r}", path, lineno)
            if a == b:
                raise DataFormatError(f"self-loop {a} {b}", path, lineno)
            if header_n is not None and (a >= header_n or b >= header_n):
                raise DataFormatError(f"node id outside [0, {header_n})", path, lineno)
            pairs.append((a, b))
    size = n if n is not None else header_n
    if size is None:
        size = max((max(p) for p in pairs), default=-1) + 1
    try:
        return from_edge_list(pairs, size)
    except InputError as exc:
        raise DataFormatError(str(exc), path) from None


# --- CSV helpers --------------------------------------------------------------

def _read_csv(path, required):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError("empty file", path, 1) from None
        missing = [c for c in required if c not in header]
        if missing:
            raise DataFormatError(f"missing columns {missing}; header is {header}", path, 1)
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
            rows.append((lineno, dict(zip(header, (c.strip() for c in row)))))
    return header, rows


def _int01(value, path, lineno, column):
    if value not in ("0", "1"):
        raise DataFormatError(f"column {column!r} must be 0 or 1, got {value!r}", path, lineno)
    return int(value)


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --- attributes ---------------------------------------------------------------

def format_attributes(attrs: AttributeTable, include_outcome: bool = True) -> str:
    header = ["node", "binary", "continuous"] + (["outcome"] if include_outcome else [])
    rows = []
    for i in range(len(attrs)):
        row = [i, int(attrs.binary[i]), fmt_float(attrs.continuous[i])]
        if include_outcome:
            row.append(int(attrs.outcome[i]))
        rows.append(row)
    return _csv_text(header, rows)


def write_attributes(path, attrs: AttributeTable, include_outcome: bool = True):
    atomic_write_text(path, format_attributes(attrs, include_outcome))


def read_attributes(path, n: int | None = None) -> tuple[AttributeTable, bool]:
    """Read an attribute file; returns the table and whether it had an outcome column."""
    header, rows = _read_csv(path, ("node", "binary", "continuous"))
    has_outcome = "outcome" in header
    if n is not None and len(rows) != n:
        raise DataFormatError(f"{len(rows)} rows but the graph has {n} nodes", path)
    b = np.zeros(len(rows), dtype=np.int8)
    c = np.zeros(len(rows))
    y = np.zeros(len(rows), dtype=np.int8)
    for k, (lineno, row) in enumerate(rows):
        try:
            node = int(row["node"])
        except ValueError:
            raise DataFormatError(f"bad node id {row['node']!r}", path, lineno) from None
        if node != k:
            raise DataFormatError(f"rows must be in node order: expected node {k}, got {node}",
                                  path, lineno)
        b[k] = _int01(row["binary"], path, lineno, "binary")
        try:
            c[k] = float(row["continuous"])
        except ValueError:
            raise DataFormatError(f"bad continuous value {row['continuous']!r}", path, lineno) from None
        if not math.isfinite(c[k]):
            raise DataFormatError(f"continuous value must be finite, got {row['continuous']!r}",
                                  path, lineno)
        if has_outcome:
            y[k] = _int01(row["outcome"], path, lineno, "outcome")
    return AttributeTable(b, c, y), has_outcome


# --- waves --------------------------------------------------------------------

def write_waves(path, wave_of, origin=None):
    header = ["node", "wave"] + (["origin"] if origin is not None else [])
    rows = [[i, int(w)] + ([int(origin[i])] if origin is not None else []) for i, w in enumerate(wave_of)]
    atomic_write_text(path, _csv_text(header, rows))


def read_waves(path, n: int | None = None) -> np.ndarray:
    _, rows = _read_csv(path, ("node", "wave"))
    if n is not None and len(rows) != n:
        raise DataFormatError(f"{len(rows)} rows but the graph has {n} nodes", path)
    waves = np.full(len(rows), -1, dtype=np.int64)
    for lineno, row in rows:
        try:
            node, wave = int(row["node"]), int(row["wave"])
        except ValueError:
            raise DataFormatError("node and wave must be integers", path, lineno) from None
        if not 0 <= node < len(rows) or waves[node] >= 0:
            raise DataFormatError(f"node {node} out of range or repeated", path, lineno)
        if wave < 0:
            raise DataFormatError("wave must be >= 0", path, lineno)
        waves[node] = wave
    return waves


# --- parameters ---------------------------------------------------------------

def write_parameters(path, theta: ParameterVector):
    atomic_write_text(path, _csv_text(["effect", "value"],
                                      [[k, fmt_float(v)] for k, v in theta.as_dict().items()]))


def read_parameters(path) -> ParameterVector:
    _, rows = _read_csv(path, ("effect", "value"))
    values = {}
    for lineno, row in rows:
        name = row["effect"].lower()
        if name not in EFFECTS:
            raise DataFormatError(f"unknown effect {row['effect']!r}", path, lineno)
        if name in values:
            raise DataFormatError(f"effect {name!r} given twice", path, lineno)
        try:
            values[name] = float(row["value"])
        except ValueError:
            raise DataFormatError(f"bad value {row['value']!r}", path, lineno) from None
        if not math.isfinite(values[name]):
            raise DataFormatError("parameter values must be finite", path, lineno)
    missing = [e for e in EFFECTS if e not in values]
    if missing:
        raise DataFormatError(f"missing effects {missing}", path)
    return ParameterVector(**values)


# --- outcomes -----------------------------------------------------------------

def write_outcomes(path, outcomes: np.ndarray):
    outcomes = np.atleast_2d(outcomes)
    header = ["node"] + [f"y{r}" for r in range(outcomes.shape[0])]
    rows = [[i] + [int(x) for x in outcomes[:, i]] for i in range(outcomes.shape[1])]
    atomic_write_text(path, _csv_text(header, rows))


def read_outcomes(path, n: int | None = None) -> np.ndarray:
    header, rows = _read_csv(path, ("node",))
    cols = [h for h in header if h != "node"]
    if n is not None and len(rows) != n:
        raise DataFormatError(f"{len(rows)} rows but the graph has {n} nodes", path)
    out = np.zeros((len(cols), len(rows)), dtype=np.int8)
    for k, (lineno, row) in enumerate(rows):
        for r, c in enumerate(cols):
            out[r, k] = _int01(row[c], path, lineno, c)
    return out


# --- summaries ----------------------------------------------------------------

def summary_rows(summaries) -> list[list[str]]:
    from .experiment import format_m
    rows = []
    for s in summaries:
        c = s.cell
        for e in s.effects:
            t1 = e.type1_ci or (None, None)
            t2 = e.type2_ci or (None, None)
            rows.append([
                c.scheme,
                "" if c.waves is None else str(c.waves),
                "" if c.seeds is None else str(c.seeds),
                format_m(c.max_follow),
                fmt_float(s.sample_size_mean),
                e.effect,
                fmt_float(e.true_value),
                fmt_float(e.rmse), fmt_float(e.rmse_ci[0]), fmt_float(e.rmse_ci[1]),
                fmt_float(e.type1), fmt_float(t1[0]), fmt_float(t1[1]),
                fmt_float(e.type2), fmt_float(t2[0]), fmt_float(t2[1]),
                str(s.n_converged), str(s.n_total),
            ])
    return rows


def format_summary(summaries) -> str:
    return _csv_text(SUMMARY_COLUMNS, summary_rows(summaries))


def write_summary(path, summaries):
    atomic_write_text(path, format_summary(summaries))


def read_summary(path) -> list[dict]:
    _, rows = _read_csv(path, SUMMARY_COLUMNS)
    return [row for _, row in rows]


def format_records(summaries) -> str:
    from .experiment import format_m
    header = ["scheme", "waves", "seeds", "m", "replicate", "sample_size", "free_nodes", "converged",
              "error"]
    for e in EFFECTS:
        header += [f"{e}_estimate", f"{e}_se", f"{e}_t"]
    rows = []
    for s in summaries:
        c = s.cell
        for r in s.records:
            row = [c.scheme, "" if c.waves is None else c.waves, "" if c.seeds is None else c.seeds,
                   format_m(c.max_follow), r.replicate, r.sample_size, r.free_nodes,
                   int(r.converged), r.error or ""]
            for k in range(len(EFFECTS)):
                row += [fmt_float(r.estimate[k]), fmt_float(r.std_error[k]), fmt_float(r.t_ratio[k])]
            rows.append(row)
    return _csv_text(header, rows)


# --- estimation results -------------------------------------------------------

def format_estimate(result) -> str:
    rows = []
    for k, name in enumerate(EFFECTS):
        rows.append([name, fmt_float(result.theta_hat[k]), fmt_float(result.std_errors[k]),
                     fmt_float(result.t_ratios[k]), int(bool(result.significant[k])),
                     int(result.converged)])
    return _csv_text(["effect", "estimate", "std_error", "t_ratio", "significant", "converged"], rows)


def read_estimate(path) -> dict[str, dict[str, float]]:
    _, rows = _read_csv(path, ("effect", "estimate", "std_error", "t_ratio"))
    return {row["effect"]: {k: float(row[k]) for k in ("estimate", "std_error", "t_ratio")}
            for _, row in rows}


# --- manifest -----------------------------------------------------------------

def write_manifest(path, config: dict, seed: int, files, extra: dict | None = None):
    from datetime import datetime, timezone

    from . import __version__
    entries = {}
    for f in files:
        f = Path(f)
        entries[f.name] = {"path": str(f), "sha256": sha256_file(f)}
    manifest = {
        "tool": "alaamsim",
        "version": __version__,
        "seed": seed,
        "config": config,
        "files": entries,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "Inf"
    return str(obj)
