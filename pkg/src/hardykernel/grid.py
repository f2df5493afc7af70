"""Polar quadrature mesh of the disk, refined geometrically toward the circle."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import TWO_PI

_SIGNATURE = re.compile(r"polar:depth=(\d+),radial=(\d+),angular=(\d+)$")


@dataclass(frozen=True)
class PolarGrid:
    """Annular-sector cells aligned with both dyadic systems.

    Shell ``j`` spans radii ``[1 - 2^-j, 1 - 2^-(j+1)]`` for ``j < depth`` and
    the last shell runs out to 1. Each shell is split into ``radial`` rings of
    equal thickness and ``6 * angular * 2^j`` equal angular cells. Every
    Carleson box of either dyadic system with generation ``<= depth + 1`` is
    then an exact union of cells (the factor 3 absorbs the 2pi/3 shift).
    """

    depth: int
    radial: int = 2
    angular: int = 2
    ring_r0: np.ndarray = field(init=False, repr=False, compare=False)
    ring_r1: np.ndarray = field(init=False, repr=False, compare=False)
    ring_n: np.ndarray = field(init=False, repr=False, compare=False)
    ring_offset: np.ndarray = field(init=False, repr=False, compare=False)
    ring_of_cell: np.ndarray = field(init=False, repr=False, compare=False)
    cell_r0: np.ndarray = field(init=False, repr=False, compare=False)
    cell_r1: np.ndarray = field(init=False, repr=False, compare=False)
    cell_phi0: np.ndarray = field(init=False, repr=False, compare=False)
    cell_phi1: np.ndarray = field(init=False, repr=False, compare=False)
    centers: np.ndarray = field(init=False, repr=False, compare=False)
    areas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.depth < 0 or self.radial < 1 or self.angular < 1:
            raise ValueError(f"invalid grid parameters {self}")
        r0s, r1s, ns = [], [], []
        for j in range(self.depth + 1):
            lo = 1.0 - 2.0**-j
            hi = 1.0 if j == self.depth else 1.0 - 2.0 ** -(j + 1)
            edges = np.linspace(lo, hi, self.radial + 1)
            edges[-1] = hi
            n = 6 * self.angular * 2**j
            for a, b in zip(edges[:-1], edges[1:]):
                r0s.append(a)
                r1s.append(b)
                ns.append(n)
        ring_r0 = np.array(r0s)
        ring_r1 = np.array(r1s)
        ring_n = np.array(ns, dtype=np.int64)
        offset = np.concatenate([[0], np.cumsum(ring_n)])
        ring_of_cell = np.repeat(np.arange(len(ns)), ring_n)
        k = np.arange(offset[-1]) - offset[ring_of_cell]
        width = TWO_PI / ring_n[ring_of_cell]
        phi0 = k * width
        phi1 = (k + 1) * width
        r0 = ring_r0[ring_of_cell]
        r1 = ring_r1[ring_of_cell]
        rc = 0.5 * (r0 + r1)
        phic = 0.5 * (phi0 + phi1)
        for name, val in [
            ("ring_r0", ring_r0), ("ring_r1", ring_r1), ("ring_n", ring_n),
            ("ring_offset", offset), ("ring_of_cell", ring_of_cell),
            ("cell_r0", r0), ("cell_r1", r1), ("cell_phi0", phi0), ("cell_phi1", phi1),
            ("centers", rc * np.exp(1j * phic)),
            ("areas", (r1 * r1 - r0 * r0) / ring_n[ring_of_cell]),
        ]:
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def size(self) -> int:
        return int(self.ring_offset[-1])

    @property
    def n_rings(self) -> int:
        return len(self.ring_n)

    @property
    def signature(self) -> str:
        return f"polar:depth={self.depth},radial={self.radial},angular={self.angular}"

    @classmethod
    def from_signature(cls, sig: str) -> "PolarGrid":
        m = _SIGNATURE.match(sig.strip())
        if not m:
            raise ValueError(f"bad grid signature {sig!r}")
        return cls(*(int(x) for x in m.groups()))

    def ring_slice(self, i: int) -> slice:
        return slice(int(self.ring_offset[i]), int(self.ring_offset[i + 1]))

    def locate(self, z) -> np.ndarray:
        """Index of the cell containing each point (points on |z| = 1 go to the last ring)."""
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        ring = np.searchsorted(self.ring_r1, r, side="right")
        ring = np.minimum(ring, self.n_rings - 1)
        n = self.ring_n[ring]
        theta = np.mod(np.angle(z), TWO_PI)
        k = np.minimum(np.floor(theta / TWO_PI * n).astype(np.int64), n - 1)
        return self.ring_offset[ring] + k

    def sub_nodes(self) -> np.ndarray:
        """2x2 Gauss sub-nodes of every cell, shape (size, 4)."""
        g = 0.5 / math.sqrt(3.0)
        rs = [0.5 * (self.cell_r0 + self.cell_r1) + s * (self.cell_r1 - self.cell_r0) for s in (-g, g)]
        ps = [0.5 * (self.cell_phi0 + self.cell_phi1) + s * (self.cell_phi1 - self.cell_phi0) for s in (-g, g)]
        return np.stack([r * np.exp(1j * p) for r in rs for p in ps], axis=1)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, np.asarray(values))

    def sample(self, f) -> "GridFunction":
        """Evaluate a callable of a complex array at the cell centers."""
        return GridFunction(self, np.asarray(f(self.centers)))


@dataclass
class GridFunction:
    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got shape {self.values.shape}")

    def norm(self, p: float = 2.0, masses: np.ndarray | None = None) -> float:
        """``(sum |f|^p m)^(1/p)``; ``masses`` defaults to the cell areas (unweighted)."""
        m = self.grid.areas if masses is None else masses
        if math.isinf(p):
            return float(np.max(np.abs(self.values)))
        return float(np.sum(np.abs(self.values) ** p * m) ** (1.0 / p))

    def __add__(self, other):
        return GridFunction(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * _vals(other))

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        complex_vals = np.iscomplexobj(self.values)
        with open(path, "w", newline="") as fh:
            fh.write(f"# grid: {self.grid.signature}\n")
            w = csv.writer(fh)
            if complex_vals:
                w.writerow(["index", "value_re", "value_im"])
                for i, v in enumerate(self.values):
                    w.writerow([i, repr(float(v.real)), repr(float(v.imag))])
            else:
                w.writerow(["index", "value"])
                for i, v in enumerate(self.values):
                    w.writerow([i, repr(float(v))])

    @classmethod
    def from_csv(cls, path, grid: PolarGrid | None = None) -> "GridFunction":
        lines = Path(path).read_text().splitlines()
        sig = _read_signature(lines)
        file_grid = PolarGrid.from_signature(sig)
        if grid is not None and grid != file_grid:
            raise ValueError(f"grid mismatch: file has {sig}, expected {grid.signature}")
        rows = list(csv.reader(l for l in lines if not l.startswith("#")))
        header, body = rows[0], rows[1:]
        idx = np.array([int(r[0]) for r in body])
        if header[1:] == ["value_re", "value_im"]:
            vals = np.array([complex(float(r[1]), float(r[2])) for r in body])
        else:
            vals = np.array([float(r[1]) for r in body])
        out = np.zeros(file_grid.size, dtype=vals.dtype)
        if len(idx) != file_grid.size or set(idx.tolist()) != set(range(file_grid.size)):
            raise ValueError("CSV does not cover every cell exactly once")
        out[idx] = vals
        return cls(file_grid, out)


def _vals(x):
    return x.values if isinstance(x, GridFunction) else x


def _read_signature(lines) -> str:
    for line in lines:
        if line.startswith("# grid:"):
            return line.split(":", 1)[1].strip()
    raise ValueError("missing '# grid: <signature>' header")
