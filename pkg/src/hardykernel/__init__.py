"""Weighted inequalities for Hardy-kernel operators on the unit disk, made executable."""

__version__ = "0.1.0"

from .characteristic import CharacteristicReport, box_ratio, characteristic, guo_wang_constant
from .dyadic import DyadicInterval, DyadicTree, ancestor_chain, cover, materialize
from .geometry import ArcInterval, CarlesonBox, DiskPoint, box_area
from .grid import GridFunction, PolarGrid
from .weights import (
    BoundaryPoint,
    Constant,
    Product,
    RadialPower,
    Tabulated,
    Weight,
    box_mass,
    doubling_constant,
    parse_weight,
    reverse_doubling_delta,
)

__all__ = [
    "ArcInterval", "BoundaryPoint", "CarlesonBox", "CharacteristicReport", "Constant", "DiskPoint",
    "DyadicInterval", "DyadicTree", "GridFunction", "PolarGrid", "Product", "RadialPower",
    "Tabulated", "Weight", "ancestor_chain", "box_area", "box_mass", "box_ratio", "characteristic",
    "cover", "doubling_constant", "guo_wang_constant", "materialize", "parse_weight",
    "reverse_doubling_delta",
]
