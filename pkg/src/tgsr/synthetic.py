"""Synthetic cross-domain grouped data with planted salient groups.

Each planted group ``g`` carries its own ``C``-dimensional latent score
``s_g = separation * (e_y - 1/C) + N(0, I)`` embedded isometrically (up to
scale) into its ``d`` dimensions; the label is ``argmax_c sum_g s_g``, a linear
function of the planted features alone. All other groups are standard normal
noise, shifted by ``shift_magnitude`` in the target domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt, lcm

import numpy as np

from tgsr.grouped_data import DomainPair, GroupedFeatureMatrix, GroupLayout, LabelMatrix, build_grid_layout

REGION_PIXELS = 14


@dataclass(frozen=True)
class SyntheticSpec:
    K: int = 85
    d: int = 20
    C: int = 3
    Ns: int = 120
    Nt: int = 120
    planted: tuple[int, ...] = (5, 40, 77)
    shift_magnitude: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    class_separation: float = 2.0
    scales: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("K", "d", "C", "Ns", "Nt"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        planted = tuple(sorted({int(g) for g in self.planted}))
        if not planted:
            raise ValueError("at least one planted group required")
        if planted[0] < 0 or planted[-1] >= self.K:
            raise ValueError(f"planted groups must lie in [0, {self.K})")
        if self.shift_magnitude < 0 or self.noise_sigma < 0 or self.class_separation < 0:
            raise ValueError("shift_magnitude, noise_sigma and class_separation must be >= 0")
        object.__setattr__(self, "planted", planted)
        self.layout()

    def layout(self) -> GroupLayout:
        scales = self.scales
        if scales is None:
            scales = _default_scales(self.K)
        layout = build_grid_layout(scales, (REGION_PIXELS * lcm(*scales),) * 2)
        if layout.K != self.K:
            raise ValueError(f"scales {tuple(scales)} give K={layout.K}, expected {self.K}")
        return layout


def _default_scales(K: int) -> tuple[int, ...]:
    pyramid, total = [], 0
    for s in (1, 2, 4, 8, 16):
        total += s * s
        pyramid.append(s)
        if total == K:
            return tuple(pyramid)
    r = isqrt(K)
    if r * r == K:
        return (r,)
    raise ValueError(f"K={K} is neither a 1,2,4,... pyramid nor a square grid; pass scales explicitly")


def generate(spec: SyntheticSpec) -> tuple[DomainPair, LabelMatrix, set[int]]:
    """Return ``(pair, target_labels, planted)``; deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    K, d, C = spec.K, spec.d, spec.C
    planted = list(spec.planted)
    nuisance = np.setdiff1d(np.arange(K), planted)

    embeds = []
    for _ in planted:
        G = rng.standard_normal((d, C))
        U = np.linalg.qr(G)[0] if d >= C else G / np.sqrt(C)
        embeds.append(np.sqrt(d / C) * U)
    prototypes = spec.class_separation * (np.eye(C) - 1.0 / C)

    def draw(N, shift):
        X = rng.standard_normal((K, d, N))
        X[nuisance] += shift
        y = rng.integers(0, C, N)
        total = np.zeros((C, N))
        for g, U in zip(planted, embeds):
            s = prototypes[:, y] + rng.standard_normal((C, N))
            total += s
            X[g] = U @ s + spec.noise_sigma * rng.standard_normal((d, N))
        return X.reshape(K * d, N), np.argmax(total, axis=0)

    Xs, ys = draw(spec.Ns, 0.0)
    Xt, yt = draw(spec.Nt, spec.shift_magnitude)
    categories = tuple(f"class{c}" for c in range(C))
    pair = DomainPair(
        GroupedFeatureMatrix(Xs, K, d),
        GroupedFeatureMatrix(Xt, K, d),
        LabelMatrix.from_indices(ys, categories),
        spec.layout(),
    )
    return pair, LabelMatrix.from_indices(yt, categories), set(planted)
