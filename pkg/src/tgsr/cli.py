"""Command-line interface.

Exit codes: 0 success, 2 input/validation error, 3 solver did not converge,
1 solver failure (non-finite iterate).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from tgsr.evaluation import confusion, evaluation_record, format_report
from tgsr.grouped_data import (
    DataError,
    load_domain_pair,
    load_target_labels,
    read_matrix_csv,
    save_domain_pair,
    standardize_pair,
)
from tgsr.model_io import TGSRModel, load_model, save_model
from tgsr.model_selection import ORACLE_NOTE, GridSpec, default_grid, grid_search, write_grid_csv
from tgsr.problem import build_augmented_problem
from tgsr.regions import DEFAULT_TOL, region_report, write_mask_csv, write_pgm, write_regions_csv
from tgsr.solver import SolverError, SolverOptions, solve
from tgsr.synthetic import SyntheticSpec, generate

logger = logging.getLogger("tgsr")

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2, 3

SOLVER_DEFAULTS = {"mu0": 0.1, "rho": 1.2, "mu_max": 1e6, "epsilon": 1e-6, "max_iter": 500}


class UsageError(Exception):
    """Invalid configuration; message names the offending field."""


# ------------------------------------------------------------------ parsing

def parse_values(text, cast=float) -> list:
    """Parse ``"1,2,5"`` or MATLAB-style ``"[0.1:0.1:0.5 1:1:3]"`` into a list."""
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    if isinstance(text, (int, float)):
        return [cast(text)]
    out = []
    for tok in str(text).replace("[", " ").replace("]", " ").replace(",", " ").split():
        if ":" in tok:
            parts = tok.split(":")
            if len(parts) != 3:
                raise ValueError(f"range {tok!r} must be start:step:stop")
            start, step, stop = (float(p) for p in parts)
            if step <= 0:
                raise ValueError(f"range {tok!r} needs a positive step")
            n = int(round((stop - start) / step)) + 1
            vals = [cast(float(f"{start + i * step:.12g}")) for i in range(max(n, 0))]
        else:
            vals = [cast(float(tok)) if cast is int else cast(tok)]
        for v in vals:
            if not out or v != out[-1]:
                out.append(v)
    if not out:
        raise ValueError("empty value list")
    return out


def _int(v):
    f = float(v)
    if f != int(f):
        raise ValueError(f"{v} is not an integer")
    return int(f)


def _add_solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--mu0", type=float, help="initial penalty weight (default 0.1)")
    g.add_argument("--rho", type=float, help="penalty growth factor (default 1.2)")
    g.add_argument("--mu-max", dest="mu_max", type=float, help="penalty ceiling (default 1e6)")
    g.add_argument("--epsilon", type=float, help="convergence tolerance on ||C-D||_inf (default 1e-6)")
    g.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap (default 500)")


def _add_common(p):
    p.add_argument("--config", help="JSON config file; command-line flags take precedence")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--seed", type=int, help="random seed (only synth draws random numbers)")
    p.add_argument("--no-plots", dest="no_plots", action="store_true", default=None, help="skip PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgsr", description="Transfer group sparse regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="fit the regression matrix for one (kappa, xi)")
    p.add_argument("--manifest")
    p.add_argument("--kappa", type=_int)
    p.add_argument("--xi", type=float)
    p.add_argument("--standardize", action="store_true", default=None,
                   help="z-score every feature dimension with source statistics")
    _add_solver_flags(p)
    _add_common(p)

    p = sub.add_parser("predict", help="classify samples with a saved model")
    p.add_argument("--model")
    p.add_argument("--features", help="CSV, one row per feature dimension, one column per sample")
    _add_common(p)

    p = sub.add_parser("evaluate", help="macro F1 and accuracy of a predictions file")
    p.add_argument("--predictions")
    p.add_argument("--truth", help="label CSV (index per row) or sample_id,index rows")
    _add_common(p)

    p = sub.add_parser("grid-search", help="search (kappa, xi) for the best target macro F1")
    p.add_argument("--manifest")
    p.add_argument("--target-labels", dest="target_labels", help="defaults to the manifest's target_labels")
    p.add_argument("--kappa-values", dest="kappa_values", help='e.g. "1:1:85" (default 1..K)')
    p.add_argument("--xi-values", dest="xi_values", help="e.g. \"0.01,0.1,1\" (default: full 271-value grid)")
    p.add_argument("--jobs", type=int, help="worker processes over xi values (default 1)")
    p.add_argument("--standardize", action="store_true", default=None)
    _add_solver_flags(p)
    _add_common(p)

    p = sub.add_parser("report-regions", help="salient region table and mask image for a model")
    p.add_argument("--model")
    p.add_argument("--tol", type=float, help=f"block norm threshold (default {DEFAULT_TOL})")
    _add_common(p)

    p = sub.add_parser("synth", help="write a synthetic dataset with planted groups")
    p.add_argument("--K", dest="K", type=int)
    p.add_argument("--d", dest="d", type=int)
    p.add_argument("--C", dest="C", type=int)
    p.add_argument("--ns", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--planted", help='comma-separated group indices, e.g. "5,40,77"')
    p.add_argument("--shift", type=float, help="target mean shift of nuisance groups")
    p.add_argument("--noise", type=float, help="noise sigma on planted features")
    p.add_argument("--separation", type=float, help="class separation of planted scores (default 2)")
    _add_common(p)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge the optional JSON config under explicit flags."""
    cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise DataError(f"missing config file: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise UsageError("config: top level must be an object")
        known = set(vars(args)) - {"command", "config", "verbose"}
        for key, value in raw.items():
            k = key.replace("-", "_")
            if k not in known:
                raise UsageError(f"config: unknown field {key!r} for command {args.command}")
            cfg[k] = value
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config"):
            cfg[k] = v
    return cfg


def _require(cfg, key):
    if cfg.get(key) is None:
        raise UsageError(f"missing required field {key!r}")
    return cfg[key]


def _solver_base(cfg) -> dict:
    base = {}
    for k, default in SOLVER_DEFAULTS.items():
        v = cfg.get(k, default)
        try:
            base[k] = int(v) if k == "max_iter" else float(v)
        except (TypeError, ValueError):
            raise UsageError(f"invalid value for {k!r}: {v!r}") from None
    return base


def _out_dir(cfg) -> Path:
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_pair(cfg):
    pair = load_domain_pair(_require(cfg, "manifest"))
    mean = scale = None
    if cfg.get("standardize"):
        pair, mean, scale = standardize_pair(pair)
    return pair, mean, scale


# ------------------------------------------------------------------ commands

def cmd_solve(cfg) -> int:
    kappa = _require(cfg, "kappa")
    xi = float(cfg.get("xi", 0.0))
    try:
        opts = SolverOptions(kappa=kappa, **_solver_base(cfg))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    pair, mean, scale = _load_pair(cfg)
    opts.check_groups(pair.K)
    problem = build_augmented_problem(pair, xi)
    out = _out_dir(cfg)

    with open(out / "history.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "feasibility", "regression", "mmd", "group_norm_sum"])

        def stream(rec):
            w.writerow([rec["iter"], repr(rec["feasibility"]), repr(rec["regression"]), repr(rec["mmd"]),
                        repr(rec["group_norm_sum"])])

        result = solve(problem, opts, callback=stream)

    model = TGSRModel(result.C_hat, pair.K, pair.d, pair.categories, pair.layout, opts.to_dict(), xi,
                      result.converged, result.iterations, mean, scale)
    save_model(model, out / "model.tgsr")
    if not cfg.get("no_plots"):
        from tgsr.plotting import plot_convergence

        plot_convergence(result.feasibility_history, result.objective_history, out / "convergence.png",
                         opts.epsilon)
    status = "converged" if result.converged else "NOT converged"
    print(f"{status} after {result.iterations} iterations; final ||C-D||_inf = "
          f"{result.feasibility_history[-1]:.3e}")
    print(f"selected groups ({len(result.selected_groups)}): {result.selected_groups}")
    print(f"model written to {out / 'model.tgsr'}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_predict(cfg) -> int:
    model = load_model(_require(cfg, "model"))
    X = read_matrix_csv(_require(cfg, "features"))
    preds, dists = model.predict(X)
    out = _out_dir(cfg)
    path = out / "predictions.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "predicted_index", "predicted_name"] + [f"p_{c}" for c in model.categories])
        for j, (k, dist) in enumerate(zip(preds, dists)):
            w.writerow([j, int(k), model.categories[k]] + [repr(float(p)) for p in dist])
    print(f"{len(preds)} predictions written to {path}")
    return EXIT_OK


def _read_predictions(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing predictions file: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise DataError(f"{path}: no predictions")
    header = rows[0]
    if header[:3] != ["sample_id", "predicted_index", "predicted_name"]:
        raise DataError(f"{path}: unexpected header {header[:3]}")
    categories = [h[2:] for h in header[3:]]
    try:
        ids = [int(r[0]) for r in rows[1:]]
        preds = [int(r[1]) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: {exc}") from None
    return dict(zip(ids, preds)), ids, categories


def _read_truth(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing truth file: {path}")
    rows = [line.split(",") for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not rows:
        raise DataError(f"{path}: no labels")
    try:
        if len(rows[0]) == 1:
            return {j: int(r[0]) for j, r in enumerate(rows)}
        if not rows[0][0].strip().lstrip("-").isdigit():
            rows = rows[1:]
        return {int(r[0]): int(r[1]) for r in rows}
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_evaluate(cfg) -> int:
    pred_map, ids, categories = _read_predictions(_require(cfg, "predictions"))
    truth_map = _read_truth(_require(cfg, "truth"))
    if set(pred_map) != set(truth_map) or len(ids) != len(pred_map):
        missing = sorted(set(truth_map) ^ set(pred_map))[:5]
        raise DataError(f"sample ids of predictions and truth do not align (e.g. {missing})")
    order = sorted(pred_map)
    try:
        cm = confusion([pred_map[i] for i in order], [truth_map[i] for i in order], len(categories), categories)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    out = _out_dir(cfg)
    text = format_report(cm)
    (out / "report.txt").write_text(text, encoding="utf-8")
    (out / "report.json").write_text(json.dumps(evaluation_record(cm), indent=2) + "\n", encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_grid_search(cfg) -> int:
    pair, mean, scale = _load_pair(cfg)
    manifest = cfg["manifest"]
    target_labels = load_target_labels(manifest, cfg.get("target_labels"))
    base = _solver_base(cfg)
    try:
        SolverOptions(kappa=1, **base)
        if cfg.get("kappa_values") is None and cfg.get("xi_values") is None:
            grid = default_grid(pair.K)
        else:
            full = default_grid(pair.K)
            kappas = parse_values(cfg["kappa_values"], _int) if cfg.get("kappa_values") is not None \
                else full.kappa_values
            xis = parse_values(cfg["xi_values"], float) if cfg.get("xi_values") is not None else full.xi_values
            grid = GridSpec(tuple(kappas), tuple(xis))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if max(grid.kappa_values) > pair.K:
        raise UsageError(f"kappa_values: {max(grid.kappa_values)} exceeds K={pair.K}")
    jobs = int(cfg.get("jobs") or 1)
    if jobs < 1:
        raise UsageError("jobs must be >= 1")

    out = _out_dir(cfg)
    print(f"grid: {len(grid.kappa_values)} kappa x {len(grid.xi_values)} xi = {len(grid)} points")
    result = grid_search(pair, target_labels, grid, base, ledger_path=out / "grid.ledger.jsonl", jobs=jobs)
    write_grid_csv(result, out / "grid.csv")
    best = result.best_point
    (out / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n", encoding="utf-8")

    opts = SolverOptions(kappa=best.kappa, **base)
    res = solve(build_augmented_problem(pair, best.xi), opts, track_objective=False)
    model = TGSRModel(res.C_hat, pair.K, pair.d, pair.categories, pair.layout, opts.to_dict(), best.xi,
                      res.converged, res.iterations, mean, scale)
    save_model(model, out / "best_model.tgsr")
    if not cfg.get("no_plots"):
        from tgsr.plotting import plot_grid

        plot_grid(result.records, out / "grid_kappa.png", out / "grid_xi.png")
    print(f"best (kappa, xi) = ({best.kappa}, {best.xi}): M-F1 {best.macro_f1:.4f}, "
          f"ACC {100 * best.accuracy:.2f}%")
    print(ORACLE_NOTE)
    return EXIT_OK


def cmd_report_regions(cfg) -> int:
    model = load_model(_require(cfg, "model"))
    if model.layout is None:
        raise DataError("model file carries no grid layout")
    tol = float(cfg.get("tol", DEFAULT_TOL))
    if tol < 0:
        raise UsageError("tol must be >= 0")
    report = region_report(model.C_hat, model.layout, tol)
    out = _out_dir(cfg)
    write_regions_csv(report, out / "regions.csv")
    write_pgm(out / "mask.pgm", report.mask)
    write_mask_csv(out / "mask.csv", report.mask)
    if not cfg.get("no_plots"):
        from tgsr.plotting import plot_mask

        plot_mask(report.mask, report.selected, out / "mask.png")
    print(f"{len(report.selected)} salient regions written to {out / 'regions.csv'}")
    return EXIT_OK


def cmd_synth(cfg) -> int:
    fields = {"K": "K", "d": "d", "C": "C", "ns": "Ns", "nt": "Nt", "shift": "shift_magnitude",
              "noise": "noise_sigma", "separation": "class_separation", "seed": "seed"}
    kwargs = {dst: cfg[src] for src, dst in fields.items() if cfg.get(src) is not None}
    try:
        if cfg.get("planted") is not None:
            kwargs["planted"] = tuple(parse_values(cfg["planted"], _int))
        spec = SyntheticSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    pair, target_labels, planted = generate(spec)
    out = _out_dir(cfg)
    manifest = save_domain_pair(pair, out, target_labels)
    (out / "ground_truth.json").write_text(
        json.dumps({"planted": sorted(planted), "spec": {k: getattr(spec, k) for k in (
            "K", "d", "C", "Ns", "Nt", "shift_magnitude", "noise_sigma", "seed", "class_separation")}},
            indent=2) + "\n", encoding="utf-8")
    print(f"synthetic dataset written to {manifest}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "grid-search": cmd_grid_search,
    "report-regions": cmd_report_regions,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, DataError, ValueError, OSError) as exc:
        print(f"tgsr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"tgsr {args.command}: solver error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
