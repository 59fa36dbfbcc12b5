"""Self-describing model file.

Layout::

    TGSR-MODEL 1
    {single-line JSON header}
    K*d lines of C comma-separated floats (the regression matrix)

Floats are written with ``repr`` so a save/load round trip is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tgsr.grouped_data import DataError, GroupLayout, build_grid_layout
from tgsr.predictor import classify_batch

MAGIC = "TGSR-MODEL"
VERSION = 1


@dataclass
class TGSRModel:
    C_hat: np.ndarray
    K: int
    d: int
    categories: tuple[str, ...]
    layout: GroupLayout | None = None
    options: dict = field(default_factory=dict)
    xi: float = 0.0
    converged: bool = True
    iterations: int = 0
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None

    def __post_init__(self):
        self.C_hat = np.asarray(self.C_hat, dtype=float)
        if self.C_hat.shape != (self.K * self.d, len(self.categories)):
            raise DataError(
                f"model matrix shape {self.C_hat.shape} inconsistent with K={self.K}, d={self.d}, "
                f"C={len(self.categories)}"
            )
        if self.layout is not None and self.layout.K != self.K:
            raise DataError(f"model layout has K={self.layout.K}, matrix has K={self.K}")

    def prepare(self, X: np.ndarray) -> np.ndarray:
        """Validate a ``(K*d, N)`` feature matrix and apply stored standardization."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != self.K * self.d:
            raise DataError(f"features have {X.shape[0] if X.ndim == 2 else '?'} rows, model expects "
                            f"K*d = {self.K * self.d}")
        if self.feature_mean is not None:
            X = (X - self.feature_mean[:, None]) / self.feature_scale[:, None]
        return X

    def predict(self, X: np.ndarray):
        return classify_batch(self.C_hat, self.prepare(X))


def save_model(model: TGSRModel, path) -> None:
    header = {
        "K": model.K,
        "d": model.d,
        "C": len(model.categories),
        "categories": list(model.categories),
        "layout": model.layout.to_dict() if model.layout is not None else None,
        "options": model.options,
        "xi": model.xi,
        "converged": bool(model.converged),
        "iterations": int(model.iterations),
        "standardization": None
        if model.feature_mean is None
        else {"mean": model.feature_mean.tolist(), "scale": model.feature_scale.tolist()},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{MAGIC} {VERSION}\n")
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for row in model.C_hat:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_model(path) -> TGSRModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing model file: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if len(lines) < 2 or not lines[0].startswith(MAGIC):
        raise DataError(f"{path}: not a model file")
    version = int(lines[0].split()[1])
    if version != VERSION:
        raise DataError(f"{path}: unsupported model version {version}")
    try:
        h = json.loads(lines[1])
        C_hat = np.array([[float(v) for v in line.split(",")] for line in lines[2:] if line.strip()])
    except (json.JSONDecodeError, ValueError) as exc:
        raise DataError(f"{path}: corrupt model file ({exc})") from None
    C_hat = C_hat.reshape(h["K"] * h["d"], h["C"])
    layout = build_grid_layout(h["layout"]["scales"], h["layout"]["frame"]) if h.get("layout") else None
    std = h.get("standardization")
    return TGSRModel(
        C_hat,
        h["K"],
        h["d"],
        tuple(h["categories"]),
        layout,
        h.get("options", {}),
        h.get("xi", 0.0),
        h.get("converged", True),
        h.get("iterations", 0),
        np.array(std["mean"]) if std else None,
        np.array(std["scale"]) if std else None,
    )
