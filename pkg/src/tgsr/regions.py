"""Map surviving groups of a regression matrix back to frame rectangles."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tgsr.grouped_data import GroupLayout
from tgsr.problem import group_norms

DEFAULT_TOL = 1e-10
REGION_FIELDS = ("index", "scale", "row", "col", "x", "y", "w", "h", "norm")


@dataclass(frozen=True)
class SelectedRegion:
    index: int
    scale: int
    row: int
    col: int
    x: int
    y: int
    w: int
    h: int
    norm: float


@dataclass(frozen=True)
class RegionReport:
    selected: tuple[SelectedRegion, ...]
    mask: np.ndarray  # (height, width)


def selected_groups(C_hat, K: int, tol: float = DEFAULT_TOL) -> list[int]:
    """Ascending indices of groups whose block norm exceeds ``tol``."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return [int(i) for i in np.flatnonzero(group_norms(C_hat, K) > tol)]


def region_report(C_hat, layout: GroupLayout, tol: float = DEFAULT_TOL) -> RegionReport:
    C_hat = np.asarray(C_hat, dtype=float)
    K = layout.K
    if C_hat.shape[0] % K:
        raise ValueError(f"regression matrix with {C_hat.shape[0]} rows does not match layout K={K}")
    norms = group_norms(C_hat, K)
    width, height = layout.frame_size
    mask = np.zeros((height, width))
    selected = []
    for i in selected_groups(C_hat, K, tol):
        reg = layout.regions[i]
        mask[reg.y:reg.y + reg.h, reg.x:reg.x + reg.w] += norms[i]
        selected.append(SelectedRegion(i, layout.scales[reg.scale_index], reg.row, reg.col,
                                       reg.x, reg.y, reg.w, reg.h, float(norms[i])))
    # stable sort keeps ascending index order among equal norms
    selected.sort(key=lambda r: -r.norm)
    return RegionReport(tuple(selected), mask)


def write_regions_csv(report: RegionReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_FIELDS)
        for r in report.selected:
            w.writerow([r.index, r.scale, r.row, r.col, r.x, r.y, r.w, r.h, repr(r.norm)])


def mask_to_uint8(mask: np.ndarray) -> np.ndarray:
    peak = mask.max() if mask.size else 0.0
    if peak <= 0:
        return np.zeros(mask.shape, dtype=np.uint8)
    return np.rint(255.0 * mask / peak).astype(np.uint8)


def write_pgm(path, mask: np.ndarray) -> None:
    """Binary (P5) 8-bit PGM, max-normalized."""
    img = mask_to_uint8(mask)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens = raw.split(maxsplit=4)
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    return np.frombuffer(tokens[4][: w * h], dtype=np.uint8).reshape(h, w)


def write_mask_csv(path, mask: np.ndarray) -> None:
    np.savetxt(path, mask, delimiter=",", fmt="%.17g")
