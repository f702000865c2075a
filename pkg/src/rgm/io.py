"""File formats: data CSV, sample bundles, edge tables, estimates and reports.

Everything written here is a deterministic function of its input (no
timestamps, sorted JSON keys, full-precision floats) so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .inference import SampleStore
from .selection import EdgeProbabilityTable, GraphEstimate, candidate_edges
from .sem import DataSet, ModelError, b_mask, compact_b, expand_b


class DataFormatError(ModelError):
    """Malformed input file (message names the file and row)."""


def _fmt(x: float) -> str:
    return repr(float(x))


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def default_columns(p: int) -> Tuple[List[str], List[str]]:
    return [f"Y{i + 1}" for i in range(p)], [f"X{k + 1}" for k in range(2 * p)]


def write_dataset(path, data: DataSet) -> None:
    ycols, xcols = default_columns(data.p)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ycols + xcols)
        for yrow, xrow in zip(data.Y, data.X):
            w.writerow([_fmt(v) for v in yrow] + [_fmt(v) for v in xrow])


def read_dataset(path, y_columns: Optional[Sequence[str]] = None,
                 x_columns: Optional[Sequence[str]] = None) -> Tuple[DataSet, List[str]]:
    """Read a data CSV; returns the data set and the gene labels.

    Without explicit column lists the header must be ``Y1..Yp, X1..X2p``.
    With them, ``x_columns`` must list copy number then methylation per gene,
    in the same gene order as ``y_columns``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if y_columns is None:
        ycols = [h for h in header if h.startswith("Y")]
        p = len(ycols)
        ycols, xcols = default_columns(p)
        if p == 0 or header != ycols + xcols:
            raise DataFormatError(f"{path}: header must be Y1..Yp followed by X1..X2p")
    else:
        ycols, xcols = list(y_columns), list(x_columns or [])
        if len(xcols) != 2 * len(ycols):
            raise DataFormatError(f"{path}: need two X columns per Y column")
        missing = [c for c in ycols + xcols if c not in header]
        if missing:
            raise DataFormatError(f"{path}: columns not in header: {missing}")
    idx = [header.index(c) for c in ycols + xcols]
    values = np.empty((len(rows) - 1, len(idx)))
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != len(header):
            raise DataFormatError(f"{path}: row {line} has {len(row)} fields, expected {len(header)}")
        try:
            values[r] = [float(row[c]) for c in idx]
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {line}: {exc}") from exc
        if not np.all(np.isfinite(values[r])):
            raise DataFormatError(f"{path}: row {line} contains non-finite values")
    p = len(ycols)
    return DataSet(values[:, :p], values[:, p:]), ycols


# -- sample bundle ------------------------------------------------------------

def _sample_columns(p: int) -> List[str]:
    off = [(i, j) for i in range(p) for j in range(p) if i != j]
    cols = ["chain"]
    cols += [f"at_{i + 1}_{j + 1}" for i, j in off]
    cols += [f"bt_{i + 1}_{k + 1}" for i in range(p) for k in (2 * i, 2 * i + 1)]
    cols += [f"t_{i + 1}" for i in range(p)]
    cols += [f"tau_{i + 1}_{j + 1}" for i, j in off]
    cols += [f"nu_{i + 1}_{k + 1}" for i in range(p) for k in (2 * i, 2 * i + 1)]
    cols += [f"sigma_{i + 1}" for i in range(p)]
    return cols


def write_samples(directory, store: SampleStore, labels: Optional[Sequence[str]] = None,
                  extra_meta: Optional[dict] = None) -> None:
    """``samples.csv`` (one row per retained draw) plus ``samples_meta.json``."""
    directory = Path(directory)
    p = store.p
    off = ~np.eye(p, dtype=bool)
    mask = b_mask(p)
    m = len(store)
    flat = np.column_stack([
        store.chain.astype(float),
        store.A_tilde[:, off], store.B_tilde[:, mask], store.t,
        store.tau[:, off], store.nu[:, mask], store.sigma,
    ]) if m else np.zeros((0, len(_sample_columns(p))))
    with open(directory / "samples.csv", "w", newline="") as fh:
        fh.write(",".join(_sample_columns(p)) + "\n")
        for row in flat:
            fh.write(str(int(row[0])) + "," + ",".join(_fmt(v) for v in row[1:]) + "\n")
    meta = {"p": p, "draws": m, "acceptance": store.acceptance,
            "det_evaluations": store.det_evaluations,
            "labels": list(labels) if labels is not None else [f"Y{i + 1}" for i in range(p)]}
    meta.update(extra_meta or {})
    write_json(directory / "samples_meta.json", meta)


def read_samples(directory) -> Tuple[SampleStore, dict]:
    directory = Path(directory)
    meta = read_json(directory / "samples_meta.json")
    p = int(meta["p"])
    cols = _sample_columns(p)
    with open(directory / "samples.csv") as fh:
        header = fh.readline().strip().split(",")
        if header != cols:
            raise DataFormatError(f"{directory / 'samples.csv'}: unexpected header for p={p}")
        flat = np.loadtxt(fh, delimiter=",", ndmin=2) if meta["draws"] else np.zeros((0, len(cols)))
    m = flat.shape[0]
    off = ~np.eye(p, dtype=bool)
    mask = b_mask(p)
    sizes = [1, p * (p - 1), 2 * p, p, p * (p - 1), 2 * p, p]
    parts = np.split(flat, np.cumsum(sizes)[:-1], axis=1)
    At = np.zeros((m, p, p))
    At[:, off] = parts[1]
    Bt = np.zeros((m, p, 2 * p))
    Bt[:, mask] = parts[2]
    tau = np.ones((m, p, p))
    tau[:, off] = parts[4]
    nu = np.ones((m, p, 2 * p))
    nu[:, mask] = parts[5]
    store = SampleStore(At, Bt, parts[3].copy(), tau, nu, parts[6].copy(),
                        parts[0][:, 0].astype(np.int64), list(meta.get("acceptance", [])),
                        int(meta.get("det_evaluations", 0)))
    return store, meta


# -- tables -------------------------------------------------------------------

def write_edge_table(path, table: EdgeProbabilityTable, labels: Optional[Sequence[str]] = None) -> None:
    labels = list(labels) if labels is not None else [f"Y{i + 1}" for i in range(table.p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "target", "source", "target_label", "source_label", "prob", "mean_if_included"])
        for (kind, i, j), pr, mu in zip(table.edges, table.prob, table.mean_if_included):
            src = labels[j] if kind == "A" else f"{labels[j // 2]}:{'cn' if j % 2 == 0 else 'me'}"
            w.writerow([kind, i, j, labels[i], src, _fmt(pr), _fmt(mu)])


def read_edge_table(path, p: int) -> EdgeProbabilityTable:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    edges = [(r["kind"], int(r["target"]), int(r["source"])) for r in rows]
    if edges != candidate_edges(p):
        raise DataFormatError(f"{path}: edges do not match the candidate set for p={p}")
    return EdgeProbabilityTable(p, edges, np.array([float(r["prob"]) for r in rows]),
                                np.array([float(r["mean_if_included"]) for r in rows]))


def write_rows(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (_fmt(v) if isinstance(v, (float, np.floating)) else v) for v in row])


def read_reference_ordering(path) -> List[List[str]]:
    """One tie group per non-empty line; labels separated by commas or whitespace."""
    groups = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            groups.append([tok for tok in line.replace(",", " ").split() if tok])
    if not groups:
        raise DataFormatError(f"{path}: no groups found")
    return groups
