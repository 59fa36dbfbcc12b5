"""Grid search over (kappa, xi) scored by target macro F1.

Selecting on labeled target samples is oracle model selection: it measures
how good the best setting could be, not how a deployed model would choose.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from tgsr.evaluation import accuracy, confusion, macro_f1
from tgsr.grouped_data import DataError, DomainPair, LabelMatrix
from tgsr.predictor import classify_batch
from tgsr.problem import build_augmented_problem
from tgsr.solver import SolverError, SolverOptions, solve

logger = logging.getLogger(__name__)

# Inclusive (start, step, stop) ranges of the default xi grid.
XI_RANGES = (
    (0.001, 0.0002, 0.01),
    (0.01, 0.002, 0.1),
    (0.1, 0.02, 1.0),
    (1.0, 0.2, 10.0),
    (10.0, 2.0, 100.0),
    (100.0, 20.0, 1000.0),
)

ORACLE_NOTE = (
    "NOTE: hyper-parameters were selected on labeled target samples (oracle model "
    "selection); the best point is not a deployable model-selection result."
)

GRID_FIELDS = ("kappa", "xi", "macro_f1", "accuracy", "iterations", "converged", "n_selected")


@dataclass(frozen=True)
class GridSpec:
    kappa_values: tuple[int, ...]
    xi_values: tuple[float, ...]

    def __post_init__(self):
        kappas = tuple(int(k) for k in self.kappa_values)
        xis = tuple(float(x) for x in self.xi_values)
        if not kappas or not xis:
            raise ValueError("grid needs at least one kappa and one xi value")
        if min(kappas) < 1:
            raise ValueError("kappa values must be >= 1")
        if min(xis) < 0:
            raise ValueError("xi values must be >= 0")
        object.__setattr__(self, "kappa_values", tuple(dict.fromkeys(kappas)))
        object.__setattr__(self, "xi_values", tuple(dict.fromkeys(xis)))

    def points(self) -> list[tuple[int, float]]:
        return [(k, x) for k in self.kappa_values for x in self.xi_values]

    def __len__(self) -> int:
        return len(self.kappa_values) * len(self.xi_values)


@dataclass(frozen=True)
class GridPoint:
    kappa: int
    xi: float
    macro_f1: float
    accuracy: float
    iterations: int
    converged: bool
    n_selected: int


@dataclass
class GridResult:
    records: list[GridPoint]
    best_point: GridPoint

    def summary(self) -> dict:
        return {"best_point": asdict(self.best_point), "n_points": len(self.records), "note": ORACLE_NOTE}


def _arange_inclusive(start: float, step: float, stop: float) -> list[float]:
    n = int(round((stop - start) / step)) + 1
    return [float(f"{start + i * step:.12g}") for i in range(n)]


def default_xi_values() -> list[float]:
    values: list[float] = []
    for start, step, stop in XI_RANGES:
        for v in _arange_inclusive(start, step, stop):
            if not values or v != values[-1]:
                values.append(v)
    return values


def default_grid(K: int) -> GridSpec:
    if K < 1:
        raise ValueError("K must be >= 1")
    return GridSpec(tuple(range(1, K + 1)), tuple(default_xi_values()))


def best_of(records: Iterable[GridPoint]) -> GridPoint:
    """Highest macro F1; ties go to smaller kappa, then smaller xi."""
    return min(records, key=lambda r: (-r.macro_f1, r.kappa, r.xi))


def _fingerprint(pair: DomainPair, target_labels: LabelMatrix, base: dict) -> str:
    h = hashlib.sha256()
    for a in (pair.source.data, pair.target.data, pair.source_labels.data, target_labels.data):
        h.update(np.ascontiguousarray(a).tobytes())
    h.update(json.dumps(base, sort_keys=True).encode())
    return h.hexdigest()


def _base_options(opts: SolverOptions | dict | None) -> dict:
    if opts is None:
        return {k: v for k, v in SolverOptions(kappa=1).to_dict().items() if k != "kappa"}
    if isinstance(opts, SolverOptions):
        opts = opts.to_dict()
    return {k: v for k, v in opts.items() if k != "kappa"}


def _run_xi_block(pair: DomainPair, target_indices: np.ndarray, xi: float, kappas: Sequence[int], base: dict):
    problem = build_augmented_problem(pair, xi)
    out = []
    for kappa in kappas:
        try:
            res = solve(problem, SolverOptions(kappa=kappa, **base), track_objective=False)
        except SolverError as exc:
            raise SolverError(f"grid point (kappa={kappa}, xi={xi}): {exc}") from exc
        preds, _ = classify_batch(res.C_hat, pair.target.data)
        cm = confusion(preds, target_indices, pair.C)
        out.append(GridPoint(kappa, xi, macro_f1(cm), accuracy(cm), res.iterations, res.converged,
                             len(res.selected_groups)))
    return out


class _Ledger:
    """Append-only JSON-lines record of completed grid points."""

    def __init__(self, path, fingerprint: str):
        self.path = Path(path)
        self.done: dict[tuple[int, float], GridPoint] = {}
        if self.path.exists() and self.path.stat().st_size > 0:
            lines = self.path.read_text(encoding="utf-8").splitlines()
            head = json.loads(lines[0])
            if head.get("fingerprint") != fingerprint:
                raise DataError(f"{self.path}: ledger belongs to a different dataset or solver setting")
            for line in lines[1:]:
                if not line.strip():
                    continue
                try:
                    p = GridPoint(**json.loads(line))
                except (json.JSONDecodeError, TypeError):
                    logger.warning("ignoring truncated ledger line in %s", self.path)
                    continue
                self.done[(p.kappa, p.xi)] = p
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps({"fingerprint": fingerprint}) + "\n", encoding="utf-8")

    def append(self, points: Iterable[GridPoint]) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            for p in points:
                fh.write(json.dumps(asdict(p)) + "\n")
                self.done[(p.kappa, p.xi)] = p
            fh.flush()


def grid_search(
    pair: DomainPair,
    target_labels: LabelMatrix,
    grid: GridSpec,
    opts: SolverOptions | dict | None = None,
    *,
    ledger_path=None,
    jobs: int = 1,
    on_block: Callable[[list[GridPoint]], None] | None = None,
) -> GridResult:
    """Evaluate every grid point; each point is a cold-start solve.

    Points already present in ``ledger_path`` are reused rather than
    recomputed. The problem for one ``xi`` is shared across its kappa values.
    """
    if target_labels.N != pair.target.N:
        raise DataError(f"{target_labels.N} target labels for {pair.target.N} target samples")
    if target_labels.categories != pair.categories:
        raise DataError("target label categories differ from source categories")
    if max(grid.kappa_values) > pair.K:
        raise ValueError(f"kappa value {max(grid.kappa_values)} exceeds K={pair.K}")
    base = _base_options(opts)
    SolverOptions(kappa=1, **base)
    truth = target_labels.indices

    done: dict[tuple[int, float], GridPoint] = {}
    ledger = None
    if ledger_path is not None:
        ledger = _Ledger(ledger_path, _fingerprint(pair, target_labels, base))
        done.update(ledger.done)

    tasks = []
    for xi in grid.xi_values:
        pending = [k for k in grid.kappa_values if (k, xi) not in done]
        if pending:
            tasks.append((xi, pending))
    logger.info("grid: %d points, %d already complete", len(grid), len(grid) - sum(len(t[1]) for t in tasks))

    def record(points):
        for p in points:
            done[(p.kappa, p.xi)] = p
        if ledger is not None:
            ledger.append(points)
        if on_block is not None:
            on_block(points)

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_xi_block, pair, truth, xi, ks, base) for xi, ks in tasks]
            for fut in as_completed(futures):
                record(fut.result())
    else:
        for xi, ks in tasks:
            record(_run_xi_block(pair, truth, xi, ks, base))

    records = [done[p] for p in sorted(grid.points())]
    return GridResult(records, best_of(records))


def write_grid_csv(result: GridResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_FIELDS + ("best",))
        for r in result.records:
            w.writerow([r.kappa, repr(r.xi), repr(r.macro_f1), repr(r.accuracy), r.iterations,
                        int(r.converged), r.n_selected, int(r == result.best_point)])
