"""The standard and one-third-shifted dyadic systems on the circle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .geometry import TWO_PI, ArcInterval, CarlesonBox, DiskPoint, box_area_from_length

SHIFTS = (Fraction(0), Fraction(1, 3))


def parse_shift(shift) -> Fraction:
    """Accept 0, 1/3, "0", "1/3" or a float within 1e-12 of one of them."""
    if isinstance(shift, str):
        shift = Fraction(shift)
    if isinstance(shift, float):
        for s in SHIFTS:
            if abs(shift - float(s)) < 1e-12:
                return s
    shift = Fraction(shift)
    if shift not in SHIFTS:
        raise ValueError(f"shift must be 0 or 1/3, got {shift}")
    return shift


def shift_offset(shift) -> float:
    """Rotation angle of a grid: 0 or 2pi/3."""
    return TWO_PI * float(parse_shift(shift))


@dataclass(frozen=True)
class DyadicInterval:
    shift: Fraction
    generation: int
    index: int

    def __post_init__(self):
        object.__setattr__(self, "shift", parse_shift(self.shift))
        if self.generation < 0:
            raise ValueError("generation must be >= 0")
        if not 0 <= self.index < 2**self.generation:
            raise ValueError(f"index {self.index} out of range for generation {self.generation}")

    @property
    def length(self) -> float:
        return 2.0 / 2**self.generation

    def parent(self) -> "DyadicInterval":
        if self.generation == 0:
            raise ValueError("generation-0 interval has no parent")
        return DyadicInterval(self.shift, self.generation - 1, self.index // 2)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        g = self.generation + 1
        return (DyadicInterval(self.shift, g, 2 * self.index),
                DyadicInterval(self.shift, g, 2 * self.index + 1))


def materialize(d: DyadicInterval) -> ArcInterval:
    width = TWO_PI / 2**d.generation
    return ArcInterval(d.index * width + shift_offset(d.shift), width)


def generations(shift, j_max: int) -> Iterator[DyadicInterval]:
    """All intervals of one system up to generation ``j_max``, coarse to fine."""
    for j in range(j_max + 1):
        for k in range(2**j):
            yield DyadicInterval(shift, j, k)


# ---------------------------------------------------------------------------
# radial depth and angular address of points


def radial_generation(r):
    """Largest generation ``g`` whose boxes reach radius ``r``: ``r > 1 - 2^(1-g)``.

    Radius 1 (or beyond) is not inside any box; we return a large sentinel so
    that callers clip by their own ``j_max``.
    """
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        est = np.floor(1.0 - np.log2(np.maximum(1.0 - r, 1e-300)))
    g = np.clip(est, 0, 1020).astype(np.int64)
    # the log estimate can be off by one at the dyadic radii themselves
    for _ in range(2):
        too_deep = (g > 0) & ~(r > 1.0 - np.exp2(1.0 - g))
        g = np.where(too_deep, g - 1, g)
        can_deepen = r > 1.0 - np.exp2(-g.astype(float))
        g = np.where(can_deepen & (g < 1020), g + 1, g)
    g = np.where(r >= 1.0, 1020, g)
    return int(g) if g.ndim == 0 else g


def angular_index(theta, shift, generation: int):
    """Index of the generation-``generation`` interval of ``shift`` containing ``theta``."""
    x = np.mod(np.asarray(theta, dtype=float) - shift_offset(shift), TWO_PI) / TWO_PI
    k = np.floor(x * 2.0**generation).astype(np.int64)
    k = np.minimum(k, 2**generation - 1)
    return int(k) if k.ndim == 0 else k


def ancestor_chain(z: DiskPoint, shift, j_max: int | None = None) -> list[DyadicInterval]:
    """Every dyadic interval of ``shift`` whose Carleson box contains ``z``.

    The chain is ordered from generation 0 downward and is nested.
    """
    if isinstance(z, complex):
        z = DiskPoint.from_complex(z)
    if z.modulus >= 1.0:
        raise ValueError("ancestor_chain needs |z| < 1")
    depth = radial_generation(z.modulus)
    if z.modulus == 0.0:
        depth = 0
    if j_max is not None:
        depth = min(depth, j_max)
    shift = parse_shift(shift)
    return [DyadicInterval(shift, g, angular_index(z.argument, shift, g)) for g in range(depth + 1)]


# ---------------------------------------------------------------------------
# covering an arbitrary arc by a dyadic one


def cover_arrays(starts: np.ndarray, lens: np.ndarray, max_generation: int = 60):
    """Vectorized cover: for each arc pick the smallest dyadic interval containing it.

    Returns ``(shift_code, generation, index)`` arrays; shift_code is 0 for the
    standard grid and 1 for the shifted one. Ties at equal generation go to the
    standard grid; within a grid and generation the containing interval is unique.
    """
    starts = np.mod(np.asarray(starts, dtype=float), TWO_PI)
    lens = np.asarray(lens, dtype=float)
    n = starts.shape[0]
    best_gen = np.zeros(n, dtype=np.int64)
    best_shift = np.zeros(n, dtype=np.int64)
    best_idx = np.zeros(n, dtype=np.int64)
    found = np.zeros(n, dtype=bool)
    gmax = int(min(max_generation, math.floor(math.log2(TWO_PI / lens.min())) + 1))
    tol = 1e-12
    for g in range(gmax, 0, -1):
        width = TWO_PI / 2**g
        fits = lens <= width + tol
        for code, shift in enumerate(SHIFTS):
            x = np.mod(starts - shift_offset(shift), TWO_PI)
            k = np.floor(x / width)
            pos = x - k * width
            # start sitting a rounding error below a grid point belongs to the next cell
            roll = pos > width - tol
            k = np.where(roll, k + 1, k)
            pos = np.where(roll, pos - width, pos)
            k = np.mod(k, 2**g).astype(np.int64)
            ok = fits & ~found & (pos + lens <= width + tol)
            best_gen[ok], best_shift[ok], best_idx[ok] = g, code, k[ok]
            found |= ok
        if found.all():
            break
    return best_shift, best_gen, best_idx


def cover(arc: ArcInterval) -> DyadicInterval:
    """Smallest interval of the two dyadic systems containing ``arc``.

    By the one-third trick the result satisfies ``|J| <= 6 |I|``; generation 0
    (the full circle) is the fallback and always contains the arc.
    """
    code, gen, idx = cover_arrays(np.array([arc.start]), np.array([arc.len_rad]))
    return DyadicInterval(SHIFTS[int(code[0])], int(gen[0]), int(idx[0]))


# ---------------------------------------------------------------------------
# Carleson-box trees


class DyadicTree:
    """Complete binary tree of one dyadic system down to ``j_max``, bound to a grid.

    Each grid cell is assigned (by its center) to the deepest box of the tree
    that contains it; box sums are then formed bottom-up. Payload arrays are
    lists indexed by generation, each of length ``2**g``.
    """

    def __init__(self, grid, shift, j_max: int):
        self.grid = grid
        self.shift = parse_shift(shift)
        self.j_max = int(j_max)
        r = np.abs(grid.centers)
        theta = np.mod(np.angle(grid.centers), TWO_PI)
        self.leaf_generation = np.minimum(radial_generation(r), self.j_max)
        self.leaf_index = angular_index(theta, self.shift, self.j_max)
        self.areas = [np.full(2**g, box_area_from_length(2.0 / 2**g)) for g in range(self.j_max + 1)]
        self._by_gen = [np.flatnonzero(self.leaf_generation == g) for g in range(self.j_max + 1)]

    @property
    def node_count(self) -> int:
        return 2 ** (self.j_max + 1) - 1

    def node_index(self, g: int) -> np.ndarray:
        """Per-cell index of the generation-``g`` box (meaningful where leaf_generation >= g)."""
        return self.leaf_index >> (self.j_max - g)

    def box_sums(self, values: np.ndarray) -> list[np.ndarray]:
        """Sum of per-cell ``values`` over the cells of every box."""
        values = np.asarray(values)
        sums = [None] * (self.j_max + 1)
        below = None
        for g in range(self.j_max, -1, -1):
            cells = self._by_gen[g]
            idx = self.leaf_index[cells] >> (self.j_max - g)
            if np.iscomplexobj(values):
                own = (np.bincount(idx, weights=values[cells].real, minlength=2**g)
                       + 1j * np.bincount(idx, weights=values[cells].imag, minlength=2**g))
            else:
                own = np.bincount(idx, weights=values[cells], minlength=2**g).astype(float)
            if below is not None:
                own = own + below[0::2] + below[1::2]
            sums[g] = own
            below = own
        return sums

    def gather_sum(self, per_node: Sequence[np.ndarray]) -> np.ndarray:
        """For every cell, the sum of ``per_node`` over its chain of boxes."""
        out = np.zeros(self.grid.size, dtype=np.result_type(*per_node))
        for g in range(self.j_max + 1):
            mask = self.leaf_generation >= g
            out[mask] += per_node[g][self.node_index(g)[mask]]
        return out

    def gather_max(self, per_node: Sequence[np.ndarray]) -> np.ndarray:
        out = np.full(self.grid.size, -np.inf)
        for g in range(self.j_max + 1):
            mask = self.leaf_generation >= g
            out[mask] = np.maximum(out[mask], per_node[g][self.node_index(g)[mask]])
        return out

    def intervals(self) -> Iterator[DyadicInterval]:
        return generations(self.shift, self.j_max)

    def box(self, g: int, k: int) -> CarlesonBox:
        return CarlesonBox(materialize(DyadicInterval(self.shift, g, k)))
