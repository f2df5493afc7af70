"""Weight families on the disk, their duals, box masses and doubling diagnostics."""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dyadic import SHIFTS, shift_offset
from .geometry import TWO_PI, ArcInterval
from .grid import PolarGrid, _read_signature


class SingularPointError(ValueError):
    """Raised when a weight is evaluated on its singular set."""


class NotIntegrableError(ValueError):
    """Raised when a weight (typically a dual weight) is not locally integrable."""


def dual_exponent(p: float) -> float:
    """``1 - p'``, the exponent taking a weight to its dual; equals ``-1/(p-1)``."""
    if not p > 1.0 or math.isinf(p):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    return -1.0 / (p - 1.0)


class Weight:
    """Base class: a positive function on the disk given in closed form."""

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z) > 1.0 + 1e-15):
            raise ValueError("weight evaluated outside the closed disk")
        return self._eval(z)

    def _eval(self, z):
        raise NotImplementedError

    def power(self, e: float) -> "Weight":
        raise NotImplementedError

    def dual(self, p: float) -> "Weight":
        """``sigma = w^(1 - p')``, remembering the pairing it came from."""
        return DualWeight(self, float(p))

    def integrable(self) -> bool:
        return True

    def sector_integral(self, r0, r1, phi0, phi1, order: int = 3):
        """Integral of the weight over annular sectors under ``dA = dx dy / pi``.

        Tensor Gauss-Legendre in ``(u, phi)`` with ``r = 1 - u^2``; the
        substitution absorbs ``(1 - r)^t`` boundary behaviour into a smooth
        (often polynomial) integrand.
        """
        r0, r1, phi0, phi1 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r0, r1, phi0, phi1)))
        x, w = np.polynomial.legendre.leggauss(order)
        u_hi = np.sqrt(np.maximum(1.0 - r0, 0.0))
        u_lo = np.sqrt(np.maximum(1.0 - r1, 0.0))
        total = np.zeros(r0.shape)
        for xi, wi in zip(x, w):
            u = 0.5 * (u_lo + u_hi) + 0.5 * (u_hi - u_lo) * xi
            r = 1.0 - u * u
            jac_r = 0.5 * (u_hi - u_lo) * wi * r * 2.0 * u
            for xj, wj in zip(x, w):
                phi = 0.5 * (phi0 + phi1) + 0.5 * (phi1 - phi0) * xj
                jac_phi = 0.5 * (phi1 - phi0) * wj
                total += self._eval(r * np.exp(1j * phi)) * jac_r * jac_phi
        return total / math.pi

    def scaled(self, c: float) -> "Weight":
        return Product((Constant(c), self))


@dataclass(frozen=True)
class Constant(Weight):
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("constant weight must be positive")

    def _eval(self, z):
        return np.full(np.shape(z), float(self.c))

    def power(self, e):
        return Constant(self.c**e)

    def sector_integral(self, r0, r1, phi0, phi1, order: int = 3):
        r0, r1, phi0, phi1 = (np.asarray(a, dtype=float) for a in (r0, r1, phi0, phi1))
        return self.c * (phi1 - phi0) * (r1 * r1 - r0 * r0) / TWO_PI

    def exact_box_mass(self, arc: ArcInterval) -> float:
        h = min(arc.length, 1.0)
        return self.c * arc.len_rad / TWO_PI * (1.0 - (1.0 - h) ** 2)

    def __str__(self):
        return f"const:{self.c:g}"


@dataclass(frozen=True)
class RadialPower(Weight):
    """``(1 - |z|)^t``."""

    t: float

    def _eval(self, z):
        d = 1.0 - np.abs(z)
        if self.t < 0 and np.any(d <= 0):
            raise SingularPointError(f"(1-|z|)^{self.t} is singular on the circle")
        return d**self.t

    def power(self, e):
        return RadialPower(self.t * e)

    def integrable(self):
        return self.t > -1.0

    def exact_box_mass(self, arc: ArcInterval) -> float:
        """``(len/2pi) * 2 * int_{1-H}^1 (1-r)^t r dr`` with ``H = min(|I|, 1)``."""
        if not self.integrable():
            return math.inf
        H = min(arc.length, 1.0)
        t = self.t
        radial = H ** (t + 1) / (t + 1) - H ** (t + 2) / (t + 2)
        return arc.len_rad / TWO_PI * 2.0 * radial

    def __str__(self):
        return f"radial:t={self.t:g}"


@dataclass(frozen=True)
class BoundaryPoint(Weight):
    """``|1 - zbar e^{i theta0}|^s``, a power of the distance to a boundary point."""

    theta0: float
    s: float

    def _eval(self, z):
        d = np.abs(1.0 - np.conj(z) * np.exp(1j * self.theta0))
        if self.s < 0 and np.any(d == 0):
            raise SingularPointError(f"weight singular at e^(i {self.theta0})")
        return d**self.s

    def power(self, e):
        return BoundaryPoint(self.theta0, self.s * e)

    def integrable(self):
        return self.s > -2.0

    def __str__(self):
        return f"point:theta={self.theta0:g},s={self.s:g}"


@dataclass(frozen=True)
class Product(Weight):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def _eval(self, z):
        out = np.ones(np.shape(z))
        for f in self.factors:
            out = out * f._eval(z)
        return out

    def power(self, e):
        return Product(tuple(f.power(e) for f in self.factors))

    def integrable(self):
        # (1-r)^t |1 - zbar e^{i theta}|^s is integrable near e^{i theta}
        # iff t > -1 and t + s > -2
        t = sum(f.t for f in self.factors if isinstance(f, RadialPower))
        if t <= -1.0:
            return False
        by_point: dict[float, float] = {}
        for f in self.factors:
            if isinstance(f, BoundaryPoint):
                key = round(f.theta0 % TWO_PI, 12)
                by_point[key] = by_point.get(key, 0.0) + f.s
        if any(s + t <= -2.0 for s in by_point.values()):
            return False
        return all(f.integrable() for f in self.factors if not isinstance(f, (RadialPower, BoundaryPoint)))

    def __str__(self):
        return "*".join(str(f) for f in self.factors)


@dataclass(frozen=True, eq=False)
class DualWeight(Weight):
    """``w^(1 - p')`` for the pairing of ``L^p(w)`` with ``L^(p')(sigma)``.

    Values and masses come from the closed form ``base.power(1 - p')``, and
    the object compares equal to it. Taking the dual again within the same
    pairing (given as ``p`` or as ``p'``) returns the base weight, since
    ``(1 - p')(1 - p) = 1``.
    """

    base: Weight
    p: float

    def __post_init__(self):
        dual_exponent(self.p)

    @functools.cached_property
    def closed(self) -> Weight:
        return self.base.power(dual_exponent(self.p))

    def _eval(self, z):
        return self.closed._eval(z)

    def power(self, e):
        return self.closed.power(e)

    def dual(self, p: float) -> Weight:
        q = self.p / (self.p - 1.0)
        if math.isclose(p, self.p, rel_tol=1e-14) or math.isclose(p, q, rel_tol=1e-14):
            return self.base
        return self.closed.dual(p)

    def integrable(self):
        return self.closed.integrable()

    def sector_integral(self, r0, r1, phi0, phi1, order: int = 3):
        return self.closed.sector_integral(r0, r1, phi0, phi1, order)

    def exact_box_mass(self, arc: ArcInterval) -> float:
        return self.closed.exact_box_mass(arc)

    def __eq__(self, other):
        if isinstance(other, DualWeight):
            other = other.closed
        return isinstance(other, Weight) and self.closed == other

    def __hash__(self):
        return hash(self.closed)

    def __str__(self):
        return str(self.closed)


@dataclass(frozen=True)
class Tabulated(Weight):
    """Piecewise-constant weight given by one value per cell of a grid."""

    grid: PolarGrid
    values: tuple = field(repr=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in np.asarray(self.values, dtype=float))
        if len(vals) != self.grid.size:
            raise ValueError("tabulated weight needs one value per grid cell")
        object.__setattr__(self, "values", vals)

    @functools.cached_property
    def _array(self):
        return np.array(self.values)

    def _eval(self, z):
        return self._array[self.grid.locate(z)]

    def power(self, e):
        with np.errstate(divide="ignore"):
            return Tabulated(self.grid, tuple(self._array**e))

    def integrable(self):
        a = self._array
        return bool(np.all(np.isfinite(a)) and np.all(a > 0))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# grid: {self.grid.signature}\n")
            w = csv.writer(fh)
            w.writerow(["r", "theta", "value"])
            for z, v in zip(self.grid.centers, self.values):
                w.writerow([repr(float(abs(z))), repr(float(np.mod(np.angle(z), TWO_PI))), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        lines = Path(path).read_text().splitlines()
        grid = PolarGrid.from_signature(_read_signature(lines))
        rows = list(csv.reader(l for l in lines if not l.startswith("#")))[1:]
        if len(rows) != grid.size:
            raise ValueError(f"expected {grid.size} rows for {grid.signature}, got {len(rows)}")
        r = np.array([float(x[0]) for x in rows])
        th = np.array([float(x[1]) for x in rows])
        expected_th = np.mod(np.angle(grid.centers), TWO_PI)
        if not (np.allclose(r, np.abs(grid.centers), atol=1e-9)
                and np.allclose(np.angle(np.exp(1j * (th - expected_th))), 0, atol=1e-9)):
            raise ValueError("CSV sample points do not match the declared grid")
        return cls(grid, tuple(float(x[2]) for x in rows))

    def __hash__(self):
        return hash((self.grid, self.values))

    def __str__(self):
        return f"tabulated:{self.grid.signature}"


# ---------------------------------------------------------------------------
# parsing "const:1", "radial:t=0.5", "point:theta=0,s=1", products with "*"


class WeightParseError(ValueError):
    def __init__(self, text: str, pos: int, msg: str):
        super().__init__(f"{msg} at position {pos}\n  {text}\n  {' ' * pos}^")
        self.text, self.pos = text, pos


def parse_weight(text: str) -> Weight:
    factors = []
    pos = 0
    for part in text.split("*"):
        factors.append(_parse_factor(text, part, pos))
        pos += len(part) + 1
    return factors[0] if len(factors) == 1 else Product(tuple(factors))


def _parse_factor(text: str, part: str, pos: int) -> Weight:
    kind, sep, rest = part.partition(":")
    if not sep:
        raise WeightParseError(text, pos, "expected '<kind>:<params>'")
    kind = kind.strip()
    rest_pos = pos + len(kind) + 1
    if kind == "const":
        try:
            return Constant(float(rest))
        except ValueError:
            raise WeightParseError(text, rest_pos, "expected a positive number") from None
    if kind == "tabulated":
        return Tabulated.from_csv(rest)
    if kind not in ("radial", "point"):
        raise WeightParseError(text, pos, f"unknown weight kind {kind!r}")
    params = {}
    offset = rest_pos
    for item in rest.split(","):
        key, eq, val = item.partition("=")
        if not eq:
            raise WeightParseError(text, offset, "expected key=value")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise WeightParseError(text, offset + len(key) + 1, "expected a number") from None
        offset += len(item) + 1
    required = {"radial": ("t",), "point": ("s",)}[kind]
    allowed = {"radial": {"t"}, "point": {"theta", "s"}}[kind]
    for key in required:
        if key not in params:
            raise WeightParseError(text, rest_pos, f"missing parameter {key}")
    if set(params) - allowed:
        raise WeightParseError(text, rest_pos, f"unknown parameter(s) {sorted(set(params) - allowed)}")
    if kind == "radial":
        return RadialPower(params["t"])
    return BoundaryPoint(params.get("theta", 0.0), params["s"])


# ---------------------------------------------------------------------------
# quadrature over the grid


@functools.lru_cache(maxsize=64)
def cell_masses(weight: Weight, grid: PolarGrid) -> np.ndarray:
    """``|cell|_w`` for every grid cell."""
    if not weight.integrable():
        raise NotIntegrableError(f"{weight} is not integrable")
    if isinstance(weight, Tabulated) and weight.grid == grid:
        m = np.array(weight.values) * grid.areas
    else:
        m = weight.sector_integral(grid.cell_r0, grid.cell_r1, grid.cell_phi0, grid.cell_phi1)
    m.setflags(write=False)
    return m


def sector_masses(weight: Weight, grid: PolarGrid, starts, len_rad: float, r_lo: float) -> np.ndarray:
    """Mass of ``{arg z in [start, start + len_rad), r_lo < |z| < 1}`` for each start.

    Cells cut by the radial bound are re-integrated over the part above
    ``r_lo``; cells cut by the angular bounds contribute their angular
    fraction of mass.
    """
    starts = np.atleast_1d(np.asarray(starts, dtype=float))
    total = np.zeros(starts.shape)
    masses = cell_masses(weight, grid)
    for i in range(grid.n_rings):
        r0, r1 = grid.ring_r0[i], grid.ring_r1[i]
        if r1 <= r_lo:
            continue
        sl = grid.ring_slice(i)
        if r0 >= r_lo:
            v = masses[sl]
        else:
            v = weight.sector_integral(r_lo, r1, grid.cell_phi0[sl], grid.cell_phi1[sl])
        total += _arc_integral(v, starts, len_rad)
    return total


def _arc_integral(v: np.ndarray, starts: np.ndarray, len_rad: float) -> np.ndarray:
    n = len(v)
    width = TWO_PI / n
    cum = np.concatenate([[0.0], np.cumsum(v)])
    ring_total = cum[-1]

    def F(x):
        # cumulative mass from angle 0 to x (in cell units), extended periodically
        turns = np.floor(x / n)
        xr = x - turns * n
        k = np.minimum(np.floor(xr).astype(np.int64), n - 1)
        return turns * ring_total + cum[k] + (xr - k) * v[k]

    a = np.mod(starts, TWO_PI) / width
    return F(a + len_rad / width) - F(a)


def box_mass(weight: Weight, arc: ArcInterval, grid: PolarGrid) -> float:
    """Quadrature value of ``|Q_I|_w``."""
    return float(sector_masses(weight, grid, [arc.start], arc.len_rad, 1.0 - arc.length)[0])


def top_half_mass(weight: Weight, arc: ArcInterval, grid: PolarGrid) -> float:
    return float(sector_masses(weight, grid, [arc.start], arc.len_rad, 1.0 - 0.5 * arc.length)[0])


# ---------------------------------------------------------------------------
# doubling diagnostics


def ball_mass(weight: Weight, centers, radii, n_rays: int = 48, n_radial: int = 12) -> np.ndarray:
    """``w(B(z, rho) ∩ D)`` by polar quadrature about each center.

    Each ray is integrated only up to its exit point from the unit disk, so the
    clipping by the circle is exact geometry rather than an indicator.
    """
    z = np.asarray(centers, dtype=complex)[:, None, None]
    rho = np.asarray(radii, dtype=float)[:, None, None]
    psi = (np.arange(n_rays) + 0.5) * TWO_PI / n_rays
    e = np.exp(1j * psi)[None, :, None]
    # exit distance along z + t e: |z + t e| = 1
    b = (np.conj(e) * z).real
    t_exit = -b + np.sqrt(b * b + 1.0 - np.abs(z) ** 2)
    t_max = np.minimum(rho, t_exit)
    x, w = np.polynomial.legendre.leggauss(n_radial)
    t = 0.5 * t_max * (x[None, None, :] + 1.0)
    pts = z + t * e
    pts = pts / np.maximum(1.0, np.abs(pts) / (1.0 - 1e-15))
    vals = weight(pts) * t * (0.5 * t_max * w[None, None, :])
    return vals.sum(axis=(1, 2)) * (TWO_PI / n_rays) / math.pi


@dataclass
class DoublingReport:
    sup: float
    witness_z: complex
    witness_r: float
    samples: int
    seed: int
    sup_half_budget: float

    @property
    def growth(self) -> float:
        return self.sup / self.sup_half_budget

    def flagged_non_doubling(self, threshold: float = 1e3) -> bool:
        return self.sup > threshold or self.growth > 2.0

    def as_dict(self):
        return {"sup": self.sup, "witness_z": [self.witness_z.real, self.witness_z.imag],
                "witness_r": self.witness_r, "samples": self.samples, "seed": self.seed,
                "sup_half_budget": self.sup_half_budget,
                "flagged_non_doubling": self.flagged_non_doubling()}


def doubling_constant(weight: Weight, sample_budget: int = 4000, seed: int = 0,
                      interior_only: bool = False) -> DoublingReport:
    """Empirical ``sup w(B(z,2r)) / w(B(z,r))`` over random boundary-biased balls.

    Radii are log-uniform in ``(1e-4, 1)`` and ``1 - |z|`` is log-uniform in
    ``(1e-6, 1)``. With ``interior_only`` the samples are rejected unless
    ``B(z, 2r)`` lies inside the disk.
    """
    rng = np.random.default_rng(seed)
    n = int(sample_budget)
    radii = 10.0 ** rng.uniform(-4, 0, n)
    dist = 10.0 ** rng.uniform(-6, 0, n)
    z = (1.0 - dist) * np.exp(1j * rng.uniform(0, TWO_PI, n))
    if interior_only:
        keep = np.abs(z) + 2 * radii < 1.0
        z, radii = z[keep], radii[keep]
    ratios = np.empty(len(z))
    chunk = 2000
    for s in range(0, len(z), chunk):
        zz, rr = z[s:s + chunk], radii[s:s + chunk]
        ratios[s:s + chunk] = ball_mass(weight, zz, 2 * rr) / ball_mass(weight, zz, rr)
    i = int(np.argmax(ratios))
    half = max(1, len(ratios) // 2)
    return DoublingReport(float(ratios[i]), complex(z[i]), float(radii[i]), len(ratios), seed,
                          float(ratios[:half].max()))


@dataclass
class ReverseDoublingReport:
    delta: float
    witness: tuple  # (shift, generation, start, len_rad)
    per_generation: list
    margin: float = 0.01

    @property
    def holds(self) -> bool:
        return self.delta < 1.0 - self.margin

    def as_dict(self):
        return {"delta": self.delta, "holds": self.holds, "witness": list(map(float, self.witness)),
                "per_generation": self.per_generation}


def reverse_doubling_delta(weight: Weight, j_max: int, grid: PolarGrid | None = None,
                           n_rotations: int = 1) -> ReverseDoublingReport:
    """``sup |B_I|_w / |Q_I|_w`` over generations ``1..j_max`` of both systems.

    Generation 0 is skipped: its top half is the punctured disk and the ratio
    is identically 1 there.
    """
    grid = grid or PolarGrid(depth=j_max)
    best, witness, table = -1.0, None, []
    for g in range(1, j_max + 1):
        width = TWO_PI / 2**g
        h = 2.0 / 2**g
        gen_best = -1.0
        for s in SHIFTS:
            for rot in range(n_rotations):
                starts = shift_offset(s) + width * (np.arange(2**g) + rot / n_rotations)
                full = sector_masses(weight, grid, starts, width, 1.0 - h)
                top = sector_masses(weight, grid, starts, width, 1.0 - 0.5 * h)
                ratio = top / full
                k = int(np.argmax(ratio))
                if ratio[k] > gen_best:
                    gen_best = float(ratio[k])
                if ratio[k] > best:
                    best, witness = float(ratio[k]), (float(s), g, starts[k] % TWO_PI, width)
        table.append(gen_best)
    return ReverseDoublingReport(best, witness, table)
