"""The testing constant ``[w]_{p,alpha}`` scanned over shifted dyadic families."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import SHIFTS, shift_offset
from .geometry import TWO_PI, ArcInterval, box_area, box_area_from_length
from .grid import PolarGrid
from .weights import Weight, box_mass, sector_masses

DIVERGENCE_GROWTH = 1.5
DIVERGENCE_RUN = 4


def box_ratio(weight: Weight, sigma: Weight | None, p: float, alpha: float, arc: ArcInterval,
              grid: PolarGrid) -> float:
    """``|Q_I|_w |Q_I|_sigma^(p-1) / |Q_I|^(p alpha / 2)``; ``sigma`` defaults to the dual weight."""
    sigma = weight.dual(p) if sigma is None else sigma
    if not sigma.integrable():
        return math.inf
    return box_mass(weight, arc, grid) * box_mass(sigma, arc, grid) ** (p - 1.0) / box_area(arc) ** (p * alpha / 2.0)


def certificate_factor(p: float, alpha: float) -> float:
    """Inflation from a scanned cover ``J`` back to an arbitrary ``I``.

    ``I`` inside ``J`` gives larger masses on ``J``; ``|J| <= 6|I|`` and
    ``|Q(h)| / h^2`` nonincreasing give ``|Q_J| <= 36 |Q_I|``. Hence
    ``ratio(I) <= 36^(p alpha / 2) ratio(J)``.
    """
    return 36.0 ** (p * alpha / 2.0)


@dataclass
class CharacteristicReport:
    p: float
    alpha: float
    weight: str
    j_max: int
    n_rotations: int
    value: float
    argmax: dict | None
    per_generation: list = field(default_factory=list)
    admissible: bool = True
    offset: float = 0.0

    @property
    def growth(self) -> list:
        g = self.per_generation
        return [g[i + 1] / g[i] if g[i] > 0 else math.inf for i in range(len(g) - 1)]

    @property
    def divergent(self) -> bool:
        """Last ``DIVERGENCE_RUN`` generation-to-generation growth factors all ``>= 1.5``."""
        if not self.admissible:
            return True
        gr = self.growth
        return len(gr) >= DIVERGENCE_RUN and all(x >= DIVERGENCE_GROWTH for x in gr[-DIVERGENCE_RUN:])

    @property
    def finite(self) -> bool:
        return self.admissible and not self.divergent

    @property
    def certificate(self) -> float:
        return certificate_factor(self.p, self.alpha)

    @property
    def upper_bracket(self) -> float:
        """Upper end of the bracket for arcs whose cover lies within the scanned depth."""
        return self.value * self.certificate if self.finite else math.inf

    def as_dict(self) -> dict:
        return {
            "p": self.p, "alpha": self.alpha, "weight": self.weight, "j_max": self.j_max,
            "n_rotations": self.n_rotations, "offset": self.offset,
            "value": _json_num(self.value), "admissible": self.admissible,
            "divergent": self.divergent, "finite": self.finite,
            "certificate_factor": self.certificate, "upper_bracket": _json_num(self.upper_bracket),
            "argmax": self.argmax, "per_generation": [_json_num(v) for v in self.per_generation],
            "growth": [_json_num(v) for v in self.growth],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generation", "max_ratio", "growth"])
        gr = [""] + [f"{x:.12g}" for x in self.growth]
        for g, (v, x) in enumerate(zip(self.per_generation, gr)):
            w.writerow([g, f"{v:.12g}", x])
        return buf.getvalue()


def _json_num(x: float):
    return x if math.isfinite(x) else "inf"


def characteristic(weight: Weight, p: float, alpha: float, j_max: int = 12, n_rotations: int = 1,
                   grid: PolarGrid | None = None, offset: float = 0.0) -> CharacteristicReport:
    """Scan ``box_ratio`` over generations ``0..j_max`` of both dyadic systems.

    Each generation is additionally scanned at ``n_rotations`` rotations
    (fractions of one arc length), and everything is rotated by ``offset``.
    A non-integrable dual weight makes the value ``inf`` and the weight
    inadmissible.
    """
    label = str(weight)
    sigma = weight.dual(p)
    if not (weight.integrable() and sigma.integrable()):
        return CharacteristicReport(p, alpha, label, j_max, n_rotations, math.inf, None,
                                    [math.inf] * (j_max + 1), admissible=False, offset=offset)
    grid = grid or PolarGrid(depth=max(j_max, 1))
    best, arg, table = -1.0, None, []
    for g in range(j_max + 1):
        width = TWO_PI / 2**g
        h = 2.0 / 2**g
        area = float(box_area_from_length(h))
        gen_best = -1.0
        rotations = 1 if g == 0 else n_rotations
        for s in SHIFTS:
            if g == 0 and s != SHIFTS[0]:
                continue
            for rot in range(rotations):
                starts = offset + shift_offset(s) + width * (np.arange(2**g) + rot / rotations)
                mw = sector_masses(weight, grid, starts, width, 1.0 - h)
                ms = sector_masses(sigma, grid, starts, width, 1.0 - h)
                ratio = mw * ms ** (p - 1.0) / area ** (p * alpha / 2.0)
                k = int(np.argmax(ratio))
                if ratio[k] > gen_best:
                    gen_best = float(ratio[k])
                if ratio[k] > best:
                    best = float(ratio[k])
                    arg = {"shift": str(s), "generation": g, "index": k, "rotation": rot,
                           "start": float(starts[k] % TWO_PI), "len_rad": width}
        table.append(gen_best)
    return CharacteristicReport(p, alpha, label, j_max, n_rotations, best, arg, table, offset=offset)


@dataclass
class GuoWangReport:
    sufficient: CharacteristicReport
    conjectured: CharacteristicReport

    @property
    def conjectured_le_sufficient(self) -> bool:
        # |Q| <= 1 makes every per-box ratio with |Q|^(3/2) at least the |Q| one
        return self.conjectured.value <= self.sufficient.value * (1 + 1e-12)

    def as_dict(self):
        return {"sufficient_three_halves": self.sufficient.as_dict(),
                "conjectured": self.conjectured.as_dict(),
                "conjectured_le_sufficient": self.conjectured_le_sufficient}


def guo_wang_constant(weight: Weight, j_max: int = 12, n_rotations: int = 1,
                      grid: PolarGrid | None = None) -> GuoWangReport:
    """``sup |Q|_w |Q|_{1/w} / |Q|^(3/2)`` and the conjectured ``sup |Q|_w |Q|_{1/w} / |Q|``."""
    return GuoWangReport(characteristic(weight, 2.0, 1.5, j_max, n_rotations, grid),
                         characteristic(weight, 2.0, 1.0, j_max, n_rotations, grid))
