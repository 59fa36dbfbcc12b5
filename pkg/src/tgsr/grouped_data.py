"""Grouped feature/label data model and the manifest + CSV on-disk format.

A sample is the concatenation of ``K`` per-region feature blocks of ``d``
dimensions each. Matrices are stored feature-major: shape ``(K*d, N)``,
group ``i`` occupying rows ``[i*d, (i+1)*d)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

MANIFEST_KEYS = ("source_features", "target_features", "source_labels", "scales", "frame", "d", "categories")
DEFAULT_SCALES = (1, 2, 4, 8)
DEFAULT_FRAME = (112, 112)


class DataError(ValueError):
    """Invalid or inconsistent input data."""


class Region(NamedTuple):
    scale_index: int
    row: int
    col: int
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class GroupLayout:
    """Multi-scale grid partition of a ``frame_size = (width, height)`` frame.

    Regions run coarse-to-fine over ``scales`` and row-major within a scale.
    """

    scales: tuple[int, ...]
    frame_size: tuple[int, int]
    regions: tuple[Region, ...]

    @property
    def K(self) -> int:
        return len(self.regions)

    def scale_of(self, i: int) -> int:
        return self.scales[self.regions[i].scale_index]

    def to_dict(self) -> dict:
        return {"scales": list(self.scales), "frame": list(self.frame_size)}


def build_grid_layout(scales: Sequence[int] = DEFAULT_SCALES, frame: Sequence[int] = DEFAULT_FRAME) -> GroupLayout:
    """Build the grid layout for side lengths ``scales`` over ``frame`` (width, height)."""
    scales = tuple(int(s) for s in scales)
    if len(frame) != 2:
        raise DataError(f"frame must be (width, height), got {frame!r}")
    width, height = (int(v) for v in frame)
    if not scales:
        raise DataError("scales must be nonempty")
    if width < 1 or height < 1:
        raise DataError(f"frame dimensions must be positive, got {width}x{height}")
    regions = []
    for k, s in enumerate(scales):
        if s < 1:
            raise DataError(f"scale {s} must be >= 1")
        if width % s or height % s:
            raise DataError(f"scale {s} does not divide frame {width}x{height}")
        w, h = width // s, height // s
        for row in range(s):
            for col in range(s):
                regions.append(Region(k, row, col, col * w, row * h, w, h))
    return GroupLayout(scales, (width, height), tuple(regions))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GroupedFeatureMatrix:
    data: np.ndarray
    K: int
    d: int

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {data.shape}")
        if self.K < 1 or self.d < 1:
            raise DataError(f"K and d must be >= 1, got K={self.K}, d={self.d}")
        if data.shape[0] != self.K * self.d:
            raise DataError(f"feature matrix has {data.shape[0]} rows, expected K*d = {self.K * self.d}")
        if data.shape[1] == 0:
            raise DataError("feature matrix has no samples")
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise DataError(f"non-finite feature entry at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "data", data)

    @property
    def N(self) -> int:
        return self.data.shape[1]

    def group(self, i: int) -> np.ndarray:
        return group_slice(self, i)

    def blocks(self) -> np.ndarray:
        """Read-only ``(K, d, N)`` view."""
        return self.data.reshape(self.K, self.d, self.N)


def group_slice(X: GroupedFeatureMatrix, i: int) -> np.ndarray:
    """Return the read-only ``d x N`` block of group ``i``."""
    if not 0 <= i < X.K:
        raise IndexError(f"group index {i} out of range [0, {X.K})")
    return X.data[i * X.d:(i + 1) * X.d]


@dataclass(frozen=True)
class LabelMatrix:
    """``C x N`` one-hot label matrix with ordered category names."""

    data: np.ndarray
    categories: tuple[str, ...]

    def __post_init__(self):
        data = _frozen(self.data)
        cats = tuple(str(c) for c in self.categories)
        if data.ndim != 2:
            raise DataError(f"label matrix must be 2-D, got shape {data.shape}")
        if data.shape[0] != len(cats):
            raise DataError(f"label matrix has {data.shape[0]} rows but {len(cats)} categories")
        if data.shape[1] == 0:
            raise DataError("label matrix has no samples")
        binary = np.all((data == 0) | (data == 1), axis=0)
        onehot = binary & (data.sum(axis=0) == 1)
        if not onehot.all():
            j = int(np.argmin(onehot))
            raise DataError(f"label column {j} is not one-hot: {data[:, j].tolist()}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "categories", cats)

    @classmethod
    def from_indices(cls, indices, categories: Sequence[str]) -> "LabelMatrix":
        idx = np.asarray(indices)
        C = len(categories)
        if idx.ndim != 1 or idx.size == 0:
            raise DataError("label index vector must be 1-D and nonempty")
        if not np.issubdtype(idx.dtype, np.integer):
            if not np.all(np.mod(idx, 1) == 0):
                raise DataError("label indices must be integers")
            idx = idx.astype(int)
        if idx.min() < 0 or idx.max() >= C:
            raise DataError(f"label index out of range [0, {C})")
        data = np.zeros((C, idx.size))
        data[idx, np.arange(idx.size)] = 1.0
        return cls(data, tuple(categories))

    @property
    def C(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1]

    @property
    def indices(self) -> np.ndarray:
        return np.argmax(self.data, axis=0)


@dataclass(frozen=True)
class DomainPair:
    source: GroupedFeatureMatrix
    target: GroupedFeatureMatrix
    source_labels: LabelMatrix
    layout: GroupLayout

    def __post_init__(self):
        s, t = self.source, self.target
        if not (s.K == t.K == self.layout.K):
            raise DataError(f"group count mismatch: source K={s.K}, target K={t.K}, layout K={self.layout.K}")
        if s.d != t.d:
            raise DataError(f"group dimension mismatch: source d={s.d}, target d={t.d}")
        if s.N != self.source_labels.N:
            raise DataError(f"source has {s.N} samples but {self.source_labels.N} labels")

    @property
    def K(self) -> int:
        return self.source.K

    @property
    def d(self) -> int:
        return self.source.d

    @property
    def C(self) -> int:
        return self.source_labels.C

    @property
    def categories(self) -> tuple[str, ...]:
        return self.source_labels.categories


def standardize_pair(pair: DomainPair) -> tuple[DomainPair, np.ndarray, np.ndarray]:
    """Standardize every dimension with source statistics, applied to both domains.

    Returns the new pair plus the ``(mean, scale)`` vectors; zero-variance
    dimensions keep scale 1.
    """
    mean = pair.source.data.mean(axis=1)
    scale = pair.source.data.std(axis=1)
    scale[scale == 0] = 1.0

    def apply(X):
        return GroupedFeatureMatrix((X.data - mean[:, None]) / scale[:, None], X.K, X.d)

    return DomainPair(apply(pair.source), apply(pair.target), pair.source_labels, pair.layout), mean, scale


# ---------------------------------------------------------------- file format

def read_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise DataError(f"empty matrix file: {path}")
    try:
        rows = [[float(v) for v in line.split(",")] for line in text.splitlines() if line.strip()]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: ragged rows (column counts {sorted(widths)})")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, data: np.ndarray) -> None:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_label_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    values = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not values:
        raise DataError(f"empty label file: {path}")
    try:
        return np.array([int(v) for v in values])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_label_csv(path, indices) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in np.asarray(indices, dtype=int):
            fh.write(f"{v}\n")


def read_manifest(manifest_path) -> dict:
    path = Path(manifest_path)
    if not path.is_file():
        raise DataError(f"missing manifest: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    missing = [k for k in MANIFEST_KEYS if k not in manifest]
    if missing:
        raise DataError(f"{path}: manifest missing keys {missing}")
    return manifest


def _resolve(manifest_path, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else Path(manifest_path).parent / p


def load_domain_pair(manifest_path) -> DomainPair:
    """Load and validate a :class:`DomainPair` from a manifest file."""
    m = read_manifest(manifest_path)
    layout = build_grid_layout(m["scales"], m["frame"])
    d = int(m["d"])
    source = GroupedFeatureMatrix(read_matrix_csv(_resolve(manifest_path, m["source_features"])), layout.K, d)
    target = GroupedFeatureMatrix(read_matrix_csv(_resolve(manifest_path, m["target_features"])), layout.K, d)
    labels = LabelMatrix.from_indices(read_label_csv(_resolve(manifest_path, m["source_labels"])), m["categories"])
    return DomainPair(source, target, labels, layout)


def load_target_labels(manifest_path, path=None) -> LabelMatrix:
    """Target labels from ``path`` or the manifest's optional ``target_labels`` key."""
    m = read_manifest(manifest_path)
    if path is None:
        if "target_labels" not in m:
            raise DataError(f"{manifest_path}: no target_labels given")
        path = _resolve(manifest_path, m["target_labels"])
    return LabelMatrix.from_indices(read_label_csv(path), m["categories"])


def save_domain_pair(pair: DomainPair, directory, target_labels: LabelMatrix | None = None) -> Path:
    """Write ``pair`` as manifest + CSV files into ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(directory / "source_features.csv", pair.source.data)
    write_matrix_csv(directory / "target_features.csv", pair.target.data)
    write_label_csv(directory / "source_labels.csv", pair.source_labels.indices)
    manifest = {
        "source_features": "source_features.csv",
        "target_features": "target_features.csv",
        "source_labels": "source_labels.csv",
        "scales": list(pair.layout.scales),
        "frame": list(pair.layout.frame_size),
        "d": pair.d,
        "categories": list(pair.categories),
    }
    if target_labels is not None:
        write_label_csv(directory / "target_labels.csv", target_labels.indices)
        manifest["target_labels"] = "target_labels.csv"
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
