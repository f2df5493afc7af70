"""Dyadic model operators: the box-sum operator, its kernel, and the weighted maximal operator."""

from __future__ import annotations

import numpy as np

from ..dyadic import DyadicTree, angular_index, parse_shift, radial_generation
from ..geometry import TWO_PI, box_area_from_length
from ..grid import GridFunction, PolarGrid
from ..weights import Weight, cell_masses


def _bit_length(x: np.ndarray) -> np.ndarray:
    # frexp exponent equals bit_length for nonnegative integers < 2**53
    return np.where(x > 0, np.frexp(x.astype(float))[1], 0)


def generation_weights(alpha: float, j_max: int) -> np.ndarray:
    """``|Q_g|^(-alpha/2)`` for generations ``0..j_max``."""
    g = np.arange(j_max + 1)
    return box_area_from_length(2.0 / 2.0**g) ** (-alpha / 2.0)


def common_generation(z, lam, shift, j_max: int) -> np.ndarray:
    """Deepest generation whose box (in grid ``shift``) holds both points, capped at ``j_max``."""
    z = np.asarray(z, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    gz = np.where(np.abs(z) == 0, 0, radial_generation(np.abs(z)))
    gl = np.where(np.abs(lam) == 0, 0, radial_generation(np.abs(lam)))
    kz = angular_index(np.mod(np.angle(z), TWO_PI), shift, j_max)
    kl = angular_index(np.mod(np.angle(lam), TWO_PI), shift, j_max)
    g_ang = j_max - _bit_length(np.bitwise_xor(kz, kl))
    return np.minimum(np.minimum(gz, gl), np.minimum(g_ang, j_max))


def dyadic_kernel(alpha: float, shift, z, lam, j_max: int = 12):
    """``sum_I chi_Q(z) chi_Q(lam) / |Q_I|^(alpha/2)`` over boxes of one system up to ``j_max``."""
    prefix = np.cumsum(generation_weights(alpha, j_max))
    out = prefix[common_generation(z, lam, parse_shift(shift), j_max)]
    return float(out) if np.ndim(out) == 0 else out


def dense_dyadic_matrix(grid: PolarGrid, alpha: float, shift, j_max: int) -> np.ndarray:
    z = grid.centers
    return dyadic_kernel(alpha, shift, z[:, None], z[None, :], j_max)


def _tree(grid, shift, j_max):
    return DyadicTree(grid, shift, grid.depth + 1 if j_max is None else j_max)


def apply_T(alpha: float, shift, f: GridFunction, j_max: int | None = None,
            masses: np.ndarray | None = None) -> GridFunction:
    """``(T f)(z) = sum_{I: z in Q_I} |Q_I|^(-alpha/2) int_{Q_I} f dA``.

    Two passes over the tree: box integrals bottom-up, then accumulation
    down each cell's chain of boxes. ``masses`` replaces the cell areas,
    which turns this into the sigma form ``T(sigma f)``.
    """
    tree = _tree(f.grid, shift, j_max)
    m = f.grid.areas if masses is None else masses
    sums = tree.box_sums(f.values * m)
    coef = generation_weights(alpha, tree.j_max)
    return GridFunction(f.grid, tree.gather_sum([c * s for c, s in zip(coef, sums)]))


def _as_masses(w, grid):
    return cell_masses(w, grid) if isinstance(w, Weight) else np.asarray(w)


def apply_T_sigma(alpha: float, shift, sigma, f: GridFunction,
                  j_max: int | None = None) -> GridFunction:
    """``T(sigma f)``; ``sigma`` is a weight or its precomputed cell masses."""
    return apply_T(alpha, shift, f, j_max, masses=_as_masses(sigma, f.grid))


def apply_M(weight, shift, f: GridFunction, j_max: int | None = None) -> GridFunction:
    """Dyadic maximal operator: largest omega-average of ``|f|`` over boxes containing the point.

    ``weight`` is a weight or its precomputed cell masses.
    """
    weight_masses = _as_masses(weight, f.grid)
    tree = _tree(f.grid, shift, j_max)
    num = tree.box_sums(np.abs(f.values) * weight_masses)
    den = tree.box_sums(weight_masses)
    avgs = []
    for n, d in zip(num, den):
        with np.errstate(invalid="ignore", divide="ignore"):
            avgs.append(np.where(d > 0, n / d, 0.0))
    return GridFunction(f.grid, tree.gather_max(avgs))
