"""Operator-norm estimates for the sigma-form operator ``f -> K_alpha(sigma f)``.

Everything is measured from ``L^p(sigma)`` to ``L^p(omega)``, with both
measures discretized by cell masses. At ``p = 2`` this equals the norm of
``K_alpha`` on ``L^2(omega)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..dyadic import SHIFTS, shift_offset
from ..geometry import TWO_PI, ArcInterval, CarlesonBox
from ..grid import GridFunction, PolarGrid
from ..weights import Weight, cell_masses
from .kernel import kernel_operator


@dataclass
class OperatorNormReport:
    estimate: float
    method: str
    iterations: int
    residual: float
    depth: int
    alpha: float
    p: float
    weight: str
    converged: bool = True
    cells: int = 0
    history: list = field(default_factory=list, repr=False)
    witness: str = ""

    def as_dict(self, history: bool = False):
        d = asdict(self)
        if not history:
            d.pop("history")
        return d


def _masses(weight: Weight, p: float, grid: PolarGrid):
    return cell_masses(weight, grid), cell_masses(weight.dual(p), grid)


def _lp(x, masses, p):
    return float(np.sum(np.abs(x) ** p * masses) ** (1.0 / p))


def norm_estimate_L2(alpha: float, weight: Weight, grid: PolarGrid, tol: float = 1e-7,
                     max_iter: int = 500, seed: int = 0, x0: np.ndarray | None = None) -> OperatorNormReport:
    """Power iteration on ``K_omega K_sigma``, the sigma-form operator times its adjoint.

    The Rayleigh quotient ``||K_sigma f||^2_omega / ||f||^2_sigma`` is
    nondecreasing along the iteration; the estimate is its square root once
    successive quotients agree to ``tol`` (relative).
    """
    op = kernel_operator(grid, alpha)
    mw, ms = _masses(weight, 2.0, grid)
    rng = np.random.default_rng(seed)
    f = rng.uniform(0.5, 1.5, grid.size).astype(complex) if x0 is None else np.asarray(x0, dtype=complex)
    f /= _lp(f, ms, 2)
    history = []
    prev = -np.inf
    converged = False
    residual = math.nan
    it = 0
    for it in range(1, max_iter + 1):
        u = op.matvec(ms * f)
        rq = _lp(u, mw, 2) ** 2
        history.append(rq)
        back = op.matvec(mw * u)
        residual = _lp(back - rq * f, ms, 2) / max(rq, 1e-300)
        f = back / _lp(back, ms, 2)
        if abs(rq - prev) <= tol * rq:
            converged = True
            break
        prev = rq
    return OperatorNormReport(math.sqrt(history[-1]), "power-iteration", it, residual, grid.depth,
                              alpha, 2.0, str(weight), converged, grid.size, history)


def norm_estimate_L2_direct(alpha: float, weight: Weight, grid: PolarGrid, tol: float = 1e-7,
                            max_iter: int = 500, seed: int = 0) -> OperatorNormReport:
    """Power iteration for ``K_alpha`` acting on ``L^2(omega)`` itself.

    Cross-check for the sigma form: the two agree up to discretization.
    """
    op = kernel_operator(grid, alpha)
    mw = cell_masses(weight, grid)
    a = grid.areas
    f = np.random.default_rng(seed).uniform(0.5, 1.5, grid.size).astype(complex)
    f /= _lp(f, mw, 2)
    history, prev, it, converged = [], -np.inf, 0, False
    for it in range(1, max_iter + 1):
        u = op.matvec(a * f)
        rq = _lp(u, mw, 2) ** 2
        history.append(rq)
        back = a / mw * op.matvec(mw * u)
        f = back / _lp(back, mw, 2)
        if abs(rq - prev) <= tol * rq:
            converged = True
            break
        prev = rq
    return OperatorNormReport(math.sqrt(history[-1]), "power-iteration-direct", it, math.nan,
                              grid.depth, alpha, 2.0, str(weight), converged, grid.size, history)


def norm_estimate_Lp_heuristic(alpha: float, weight: Weight, p: float, grid: PolarGrid,
                               max_iter: int = 200, tol: float = 1e-8, seed: int = 0) -> OperatorNormReport:
    """Nonlinear power method alternating through the duality maps of ``L^p`` and ``L^p'``.

    HEURISTIC: converges to a critical point of the norm quotient, not
    necessarily the maximum. Each iterate's quotient is an honest lower bound.
    """
    op = kernel_operator(grid, alpha)
    mw, ms = _masses(weight, p, grid)
    q = p / (p - 1.0)
    f = np.random.default_rng(seed).uniform(0.5, 1.5, grid.size).astype(complex)
    f /= _lp(f, ms, p)
    best, history, prev, it, converged = 0.0, [], -np.inf, 0, False
    for it in range(1, max_iter + 1):
        u = op.matvec(ms * f)
        ratio = _lp(u, mw, p)
        history.append(ratio)
        best = max(best, ratio)
        ju = np.abs(u) ** (p - 1) * np.exp(1j * np.angle(u))
        z = op.matvec(mw * ju)
        f = np.abs(z) ** (q - 1) * np.exp(1j * np.angle(z))
        f /= _lp(f, ms, p)
        if abs(ratio - prev) <= tol * ratio:
            converged = True
            break
        prev = ratio
    return OperatorNormReport(best, "nonlinear-power-heuristic", it, math.nan, grid.depth, alpha, p,
                              str(weight), converged, grid.size, history)


def box_indicator(grid: PolarGrid, arc: ArcInterval) -> np.ndarray:
    return CarlesonBox(arc).contains(grid.centers).astype(float)


def box_family(max_generation: int):
    """Dyadic arcs of both systems through ``max_generation``."""
    for s in SHIFTS:
        for g in range(max_generation + 1):
            width = TWO_PI / 2**g
            for k in range(2**g):
                yield f"shift={s},gen={g},k={k}", ArcInterval(shift_offset(s) + k * width, width)


def norm_lower_bound(alpha: float, weight: Weight, p: float, grid: PolarGrid,
                     max_generation: int | None = None, extra_arcs=()) -> OperatorNormReport:
    """``max ||K_sigma f||_{p,omega} / ||f||_{p,sigma}`` over box indicators ``f``.

    Every quotient is attained by an actual function, so the maximum never
    exceeds the true (discrete) operator norm.
    """
    op = kernel_operator(grid, alpha)
    mw, ms = _masses(weight, p, grid)
    if max_generation is None:
        max_generation = min(6, grid.depth)
    best, witness, count = 0.0, "", 0
    family = list(box_family(max_generation)) + [(f"extra{i}", a) for i, a in enumerate(extra_arcs)]
    for name, arc in family:
        chi = box_indicator(grid, arc)
        if not chi.any():
            continue
        count += 1
        ratio = _lp(op.matvec(ms * chi), mw, p) / _lp(chi, ms, p)
        if ratio > best:
            best, witness = ratio, name
    return OperatorNormReport(best, "test-function lower bound", count, math.nan, grid.depth,
                              alpha, p, str(weight), True, grid.size, witness=witness)


@dataclass
class WeakTypeReport:
    levels: list
    lhs: list
    rhs: list
    holds: list
    A: float
    tolerance: float

    @property
    def all_hold(self) -> bool:
        return all(self.holds)

    def as_dict(self):
        return asdict(self) | {"all_hold": self.all_hold}


def weak_type_check(alpha: float, weight: Weight, p: float, f: GridFunction, levels,
                    A: float, tolerance: float = 0.05) -> WeakTypeReport:
    """Compare ``|{|K_sigma f| > gamma}|_omega`` with ``(A/gamma)^p ||f||^p_{p,sigma}``."""
    grid = f.grid
    mw, ms = _masses(weight, p, grid)
    u = np.abs(kernel_operator(grid, alpha).matvec(ms * f.values))
    fp = float(np.sum(np.abs(f.values) ** p * ms))
    lhs, rhs, ok = [], [], []
    for gamma in levels:
        left = float(mw[u > gamma].sum())
        right = (A / gamma) ** p * fp if gamma > 0 else math.inf
        lhs.append(left)
        rhs.append(right)
        ok.append(left <= right * (1.0 + tolerance))
    return WeakTypeReport(list(map(float, levels)), lhs, rhs, ok, A, tolerance)
