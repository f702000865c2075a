"""Command-line pipeline: simulate, fit, select, evaluate, analyze, pairwise.

Every flag mirrors a key of an optional JSON ``--config`` document; flags win.
Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import io
from .evaluation import (average_roc, confusion, degree_posterior, find_motifs, kendall_distance, metrics,
                         ordering_score, reference_positions, roc, score_ranks)
from .graph import GraphError
from .inference import Hyperparameters, McmcConfig, diagnostics, run_chain
from .selection import GraphEstimate, edge_probabilities, select_fdr, select_hpm, select_mpm
from .sem import DataSet, ModelError, ScenarioSpec, SemParameters, path_diagram, simulate

logger = logging.getLogger("rgm")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4

DEFAULTS = {
    "seed": 0,
    "scenario": 1,
    "n": 276,
    "p": 10,
    "replicates": 1,
    "iterations": 50_000,
    "burn_in": 25_000,
    "thin": 5,
    "chains": 1,
    "rule": "mpm",
    "alpha": 0.1,
    "standardize": False,
    "out_dir": None,
    "reference_ordering": None,
    "hyperparameters": {},
    "proposal": {},
    "y_columns": None,
    "x_columns": None,
    "pairs": None,
}


class CliError(Exception):
    def __init__(self, message, code=EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _resolve(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        doc = io.read_json(args.config)
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(doc)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    return cfg


def _hyper(cfg) -> Hyperparameters:
    return Hyperparameters(**cfg["hyperparameters"])


def _mcmc(cfg) -> McmcConfig:
    prop = cfg["proposal"]
    return McmcConfig(iterations=int(cfg["iterations"]), burn_in=int(cfg["burn_in"]), thin=int(cfg["thin"]),
                      chains=int(cfg["chains"]), seed=int(cfg["seed"]), **prop)


def _out_dir(cfg, fallback: Path) -> Path:
    out = Path(cfg["out_dir"]) if cfg["out_dir"] else fallback
    out.mkdir(parents=True, exist_ok=True)
    return out


def _data_path(path: Path) -> Path:
    return path / "data.csv" if path.is_dir() else path


def cmd_simulate(cfg, args) -> None:
    out = _out_dir(cfg, Path("."))
    base = int(cfg["seed"])
    for r in range(int(cfg["replicates"])):
        spec = ScenarioSpec(scenario=int(cfg["scenario"]), n=int(cfg["n"]), p=int(cfg["p"]), seed=base + r)
        data, truth = simulate(spec)
        rep = out / f"rep_{r:03d}"
        rep.mkdir(exist_ok=True)
        io.write_dataset(rep / "data.csv", data)
        io.write_json(rep / "truth.json", truth.to_dict())
        io.write_json(rep / "scenario.json", spec.to_dict())
        psi = [[k] for k in range(1, 2 * spec.p + 1)]
        (rep / "truth.dot").write_text(path_diagram(truth, psi).to_dot())
        logger.info("wrote %s", rep)


def _fit_one(cfg, data: DataSet, labels, out: Path) -> None:
    if cfg["standardize"]:
        data = data.standardized()
    store = run_chain(data, _hyper(cfg), _mcmc(cfg))
    io.write_samples(out, store, labels, {"hyperparameters": _hyper(cfg).to_dict(),
                                           "mcmc": _mcmc(cfg).to_dict(),
                                           "standardized": bool(cfg["standardize"])})
    io.write_json(out / "diagnostics.json", diagnostics(store))
    io.write_edge_table(out / "edge_probabilities.csv", edge_probabilities(store), labels)


def cmd_fit(cfg, args) -> None:
    for path in args.inputs:
        path = Path(path)
        data, labels = io.read_dataset(_data_path(path), cfg["y_columns"], cfg["x_columns"])
        out = _out_dir(cfg, path if path.is_dir() else path.parent)
        if cfg["out_dir"] and len(args.inputs) > 1:
            out = out / (path.name if path.is_dir() else path.stem)
            out.mkdir(exist_ok=True)
        _fit_one(cfg, data, labels, out)
        logger.info("fit written to %s", out)


def _select(cfg, fit_dir: Path):
    store, meta = io.read_samples(fit_dir)
    rule = cfg["rule"]
    if rule == "mpm":
        est = select_mpm(edge_probabilities(store))
    elif rule == "fdr":
        est = select_fdr(edge_probabilities(store), float(cfg["alpha"]))
    elif rule == "hpm":
        est = select_hpm(store)
    else:
        raise CliError(f"unknown rule {rule!r}")
    return est, meta


def cmd_select(cfg, args) -> None:
    for path in args.inputs:
        path = Path(path)
        est, meta = _select(cfg, path)
        out = _out_dir(cfg, path)
        io.write_json(out / "estimate.json", est.to_dict())
        (out / "estimate.dot").write_text(est.to_dot(meta.get("labels")))


def cmd_evaluate(cfg, args) -> None:
    out = _out_dir(cfg, Path("."))
    rows, curves = [], []
    for path in args.inputs:
        path = Path(path)
        for needed in ("truth.json", "estimate.json", "edge_probabilities.csv"):
            if not (path / needed).exists():
                raise CliError(f"{path}: missing {needed}", EXIT_VALIDATION)
        truth = SemParameters.from_dict(io.read_json(path / "truth.json"))
        est = GraphEstimate.from_dict(io.read_json(path / "estimate.json"))
        if est.p != truth.p:
            raise CliError(f"{path}: estimate and truth disagree on p")
        table = io.read_edge_table(path / "edge_probabilities.csv", truth.p)
        scenario = io.read_json(path / "scenario.json")["scenario"] if (path / "scenario.json").exists() else ""
        m = metrics(confusion(est, truth))
        curve = roc(table, truth)
        curves.append(curve)
        rows.append([path.name, scenario, m.mcc, m.tpr, m.fdr, curve.auc])
        io.write_rows(out / f"roc_{path.name}.csv", ["fpr", "tpr"], zip(curve.fpr, curve.tpr))
    values = np.array([r[2:] for r in rows], dtype=float)
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1) if len(rows) > 1 else [None] * 4
    table_rows = rows + [["mean", ""] + list(mean), ["sd", ""] + list(sd)]
    io.write_rows(out / "metrics.csv", ["replicate", "scenario", "mcc", "tpr", "fdr", "auc"], table_rows)
    grid, avg = average_roc(curves)
    io.write_rows(out / "roc_average.csv", ["fpr", "tpr"], zip(grid, avg))


def cmd_analyze(cfg, args) -> None:
    for path in args.inputs:
        path = Path(path)
        store, meta = io.read_samples(path)
        labels = meta.get("labels") or [f"Y{i + 1}" for i in range(store.p)]
        if (path / "estimate.json").exists():
            est = GraphEstimate.from_dict(io.read_json(path / "estimate.json"))
        else:
            est, _ = _select(cfg, path)
        out = _out_dir(cfg, path)
        io.write_json(out / "motifs.json", find_motifs(est, labels))
        deg = degree_posterior(store)
        q = deg.quartiles()
        io.write_rows(out / "degrees.csv", ["gene", "min", "q1", "median", "q3", "max", "mean"],
                      [[lab, *map(float, q[g]), float(deg.degrees[:, g].mean())] for g, lab in enumerate(labels)])
        scores = ordering_score(est)
        ranks = score_ranks(scores)
        io.write_rows(out / "ordering.csv", ["gene", "score", "rank"],
                      [[lab, int(s), float(r)] for lab, s, r in zip(labels, scores, ranks)])
        if cfg["reference_ordering"]:
            groups = io.read_reference_ordering(cfg["reference_ordering"])
            try:
                ref = reference_positions(groups, labels)
            except ModelError as exc:
                raise CliError(str(exc)) from exc
            io.write_json(out / "kendall.json", {"groups": groups, "distance": kendall_distance(ranks, ref)})


def _read_pairs(path, labels) -> List[tuple]:
    pairs = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        toks = [t for t in line.replace(",", " ").split() if t]
        if not toks:
            continue
        if len(toks) != 2:
            raise CliError(f"{path}: line {line_no} must name two genes")
        idx = []
        for tok in toks:
            if tok in labels:
                idx.append(labels.index(tok))
            elif tok.isdigit() and 1 <= int(tok) <= len(labels):
                idx.append(int(tok) - 1)
            else:
                raise CliError(f"{path}: line {line_no}: unknown gene {tok!r}")
        if idx[0] == idx[1]:
            raise CliError(f"{path}: line {line_no}: a pair needs two distinct genes")
        pairs.append(tuple(idx))
    return pairs


def cmd_pairwise(cfg, args) -> None:
    path = Path(args.inputs[0])
    data, labels = io.read_dataset(_data_path(path), cfg["y_columns"], cfg["x_columns"])
    if not cfg["pairs"]:
        raise CliError("pairwise needs --pairs")
    out = _out_dir(cfg, path if path.is_dir() else path.parent)
    summary = []
    for a, b in _read_pairs(cfg["pairs"], labels):
        cols_x = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1]
        sub = DataSet(data.Y[:, [a, b]], data.X[:, cols_x])
        pair_labels = [labels[a], labels[b]]
        pair_dir = out / f"pair_{labels[a]}_{labels[b]}"
        pair_dir.mkdir(exist_ok=True)
        _fit_one(cfg, sub, pair_labels, pair_dir)
        est, _ = _select(dict(cfg, rule="hpm"), pair_dir)
        io.write_json(pair_dir / "estimate.json", est.to_dict())
        (pair_dir / "estimate.dot").write_text(est.to_dot(pair_labels))
        gene_edges = {(s, t) for s, t, _, _ in est.gene_edges()}
        kind = "two-way" if len(gene_edges) == 2 else ("one-way" if gene_edges else "none")
        summary.append({"genes": pair_labels, "interaction": kind, "estimate": est.to_dict()})
    io.write_json(out / "pairwise.json", summary)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "select": cmd_select,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
    "pairwise": cmd_pairwise,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", dest="out_dir")
        if name == "simulate":
            sp.add_argument("--scenario", type=int, choices=[1, 2, 3])
            sp.add_argument("--n", type=int)
            sp.add_argument("--p", type=int)
            sp.add_argument("--replicates", type=int)
        else:
            sp.add_argument("inputs", nargs="+" if name != "pairwise" else 1)
        if name in ("fit", "pairwise"):
            sp.add_argument("--iterations", type=int)
            sp.add_argument("--burn-in", dest="burn_in", type=int)
            sp.add_argument("--thin", type=int)
            sp.add_argument("--chains", type=int)
            sp.add_argument("--standardize", action="store_true")
        if name in ("select", "analyze"):
            sp.add_argument("--rule", choices=["mpm", "fdr", "hpm"])
            sp.add_argument("--alpha", type=float)
        if name == "analyze":
            sp.add_argument("--reference-ordering", dest="reference_ordering")
        if name == "pairwise":
            sp.add_argument("--pairs")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        COMMANDS[args.command](cfg, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ModelError, GraphError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
