"""Points, arcs and Carleson boxes of the unit disk.

Arc lengths are normalized by pi, so the whole circle has length 2 and
the Carleson box over an arc of normalized length ``h`` has normalized
area ``h**2 - h**3/2`` for ``h <= 1`` and ``h/2`` above that. Areas are
taken with respect to ``dA = dx dy / pi``, under which the disk has
area 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# slack for floating-point comparisons of angles
ANGLE_TOL = 1e-12
END_SLACK = 16 * np.finfo(float).eps * TWO_PI


def wrap_angle(theta):
    """Reduce angle(s) to the canonical range [0, 2pi)."""
    out = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class DiskPoint:
    re: float
    im: float
    modulus: float = field(init=False, repr=False, compare=False)
    argument: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mod = math.hypot(self.re, self.im)
        if mod > 1.0 + 1e-15:
            raise ValueError(f"point {self.re}+{self.im}i lies outside the closed disk")
        object.__setattr__(self, "modulus", mod)
        object.__setattr__(self, "argument", wrap_angle(math.atan2(self.im, self.re)))

    @classmethod
    def from_polar(cls, r: float, theta: float) -> "DiskPoint":
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"radius {r} not in [0, 1]")
        return cls(r * math.cos(theta), r * math.sin(theta))

    @classmethod
    def from_complex(cls, z: complex) -> "DiskPoint":
        return cls(z.real, z.imag)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class ArcInterval:
    """Half-open arc ``[start, start + len_rad)`` on the unit circle."""

    start: float
    len_rad: float

    def __post_init__(self):
        if not 0.0 < self.len_rad <= TWO_PI * (1 + 1e-15):
            raise ValueError(f"arc length {self.len_rad} not in (0, 2pi]")
        object.__setattr__(self, "start", wrap_angle(self.start))
        object.__setattr__(self, "len_rad", min(float(self.len_rad), TWO_PI))

    @classmethod
    def full_circle(cls) -> "ArcInterval":
        return cls(0.0, TWO_PI)

    @property
    def length(self) -> float:
        """Normalized length ``len_rad / pi`` in (0, 2]."""
        return self.len_rad / math.pi

    @property
    def end(self) -> float:
        return self.start + self.len_rad

    @property
    def midpoint(self) -> float:
        return wrap_angle(self.start + 0.5 * self.len_rad)

    def is_full(self) -> bool:
        return self.len_rad >= TWO_PI - ANGLE_TOL

    def contains_angle(self, theta):
        """Membership of angle(s) ``theta``; handles arcs that wrap past 2pi."""
        if self.is_full():
            return np.ones(np.shape(theta), dtype=bool) if np.ndim(theta) else True
        offset = np.mod(np.asarray(theta, dtype=float) - self.start, TWO_PI)
        # the subtraction is exact only to a few ulps of 2pi; keep the end open
        res = offset < self.len_rad - END_SLACK
        return res if np.ndim(res) else bool(res)

    def contains_arc(self, other: "ArcInterval", tol: float = ANGLE_TOL) -> bool:
        """Whether ``other`` is a subset of this arc (up to ``tol`` radians)."""
        if self.is_full():
            return True
        if other.len_rad > self.len_rad + tol:
            return False
        offset = (other.start - self.start) % TWO_PI
        if offset > TWO_PI - tol:
            offset -= TWO_PI
        return offset >= -tol and offset + other.len_rad <= self.len_rad + tol

    def rotated(self, phi: float) -> "ArcInterval":
        return ArcInterval(self.start + phi, self.len_rad)


def box_area_from_length(h):
    """Normalized area of the Carleson box over an arc of normalized length ``h``."""
    h = np.asarray(h, dtype=float)
    out = np.where(h <= 1.0, h * h - 0.5 * h**3, 0.5 * h)
    return float(out) if out.ndim == 0 else out


def box_area(arc: ArcInterval) -> float:
    return box_area_from_length(arc.length)


def box_bracket_holds(h) -> np.ndarray:
    """Check ``h^2/(4 pi) <= |Q_I| <= h^2``.

    With the pi-normalized length the two-sided bound holds on the whole
    range (0, 2], not only for ``h <= 1``.
    """
    h = np.asarray(h, dtype=float)
    a = box_area_from_length(h)
    return (h * h / (4 * math.pi) <= a) & (a <= h * h)


@dataclass(frozen=True)
class CarlesonBox:
    arc: ArcInterval

    @property
    def r_lo(self) -> float:
        return max(0.0, 1.0 - self.arc.length)

    @property
    def top_r_lo(self) -> float:
        return max(0.0, 1.0 - 0.5 * self.arc.length)

    @property
    def area(self) -> float:
        return box_area(self.arc)

    @property
    def center(self) -> complex:
        """Point at the angular midpoint and radial midpoint of the box."""
        rc = 1.0 - 0.5 * min(self.arc.length, 1.0)
        return rc * complex(math.cos(self.arc.midpoint), math.sin(self.arc.midpoint))

    def contains(self, z, part: str = "full"):
        """Strict membership test; ``part`` is ``"full"`` or ``"top_half"``.

        Accepts a DiskPoint, a complex number or an array of complex numbers.
        """
        if isinstance(z, DiskPoint):
            z = complex(z)
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        if part == "full":
            lo = 1.0 - self.arc.length
        elif part == "top_half":
            lo = 1.0 - 0.5 * self.arc.length
        else:
            raise ValueError(f"unknown box part {part!r}")
        theta = np.mod(np.angle(z), TWO_PI)
        # z = 0 has no direction; the radial bound excludes it unless lo < 0,
        # and then the arc condition is vacuous only for the full circle
        ang = np.where(r == 0, self.arc.is_full(), self.arc.contains_angle(theta))
        res = (r > lo) & (r < 1.0) & ang
        return res if res.ndim else bool(res)
