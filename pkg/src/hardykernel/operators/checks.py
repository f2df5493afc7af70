"""Executable checks of the inequalities behind the boundedness theorem."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..dyadic import SHIFTS, DyadicTree
from ..geometry import TWO_PI, ArcInterval, CarlesonBox
from ..grid import GridFunction
from ..weights import Weight, cell_masses
from .dyadic_ops import apply_T_sigma, common_generation, generation_weights
from .kernel import kernel_of_product


class InvalidConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# geometry of the necessity argument

SEPARATION_CONSTANT = 2.0 / math.sqrt(math.pi) * (1.0 - math.pi / 6.0)
SEGMENT_RATIO_CONSTANT = 1.0 + math.sqrt(5.0) / (2.0 * SEPARATION_CONSTANT)


def smallness(alpha: float, d: int) -> float:
    a, b = SEPARATION_CONSTANT, SEGMENT_RATIO_CONSTANT
    return math.sqrt(5.0) * b ** (alpha - 1.0) * alpha / (2.0 * a * (d - 1))


def choose_d(alpha: float) -> int:
    """Smallest integer ``d > 2`` making the kernel perturbation at most 1/2."""
    d = 3
    while smallness(alpha, d) > 0.5:
        d += 1
    return d


def lower_bound_constant(alpha: float, d: int) -> float:
    """``C1`` in ``|K g(z)| >= C1 |Q_I|^(-alpha/2) int g`` for ``z`` in ``Q_J``.

    From ``|1 - z conj(c)| <= theta * sqrt((d + 1/2)^2 + (3/(2 pi))^2)`` and
    ``theta <= pi sqrt(2) |Q_I|^(1/2)`` (valid while ``theta <= pi``).
    """
    kappa = math.hypot(d + 0.5, 1.5 / math.pi)
    return 0.5 * (math.pi * math.sqrt(2.0) * kappa) ** (-alpha)


def _sample_box(rng, box: CarlesonBox, n: int) -> np.ndarray:
    r2 = rng.uniform(box.r_lo**2, 1.0, n)
    phi = box.arc.start + rng.uniform(0.0, box.arc.len_rad, n)
    return np.sqrt(r2) * np.exp(1j * phi)


def box_integral_of_kernel(alpha: float, z: np.ndarray, box: CarlesonBox, order: int = 16) -> np.ndarray:
    """``int_{Q_I} kernel(z, lam) dA(lam)`` by tensor Gauss-Legendre over the box."""
    x, w = np.polynomial.legendre.leggauss(order)
    r = box.r_lo + 0.5 * (1.0 - box.r_lo) * (x + 1.0)
    wr = 0.5 * (1.0 - box.r_lo) * w * r
    phi = box.arc.start + 0.5 * box.arc.len_rad * (x + 1.0)
    wp = 0.5 * box.arc.len_rad * w
    lam = (r[:, None] * np.exp(1j * phi)[None, :]).ravel()
    wt = (wr[:, None] * wp[None, :]).ravel() / math.pi
    out = np.empty(len(z), dtype=complex)
    for s in range(0, len(z), 4096):
        zz = z[s:s + 4096]
        out[s:s + 4096] = kernel_of_product(zz[:, None] * np.conj(lam)[None, :], alpha) @ wt
    return out


@dataclass
class GeometryReport:
    alpha: float
    theta: float
    d: int
    a: float
    b: float
    smallness: float
    C1: float
    n_samples: int
    seed: int
    min_slack: dict
    max_slack: dict
    lower_bound_min_ratio: float
    lower_bound_holds: bool

    @property
    def passed(self) -> bool:
        return all(v >= 0 for v in self.min_slack.values()) and self.lower_bound_holds and self.smallness <= 0.5

    def as_dict(self):
        return asdict(self) | {"passed": self.passed}


def necessity_geometry(alpha: float, theta: float, d: int | None = None, n_samples: int = 100_000,
                       seed: int = 0, n_kernel_points: int | None = None) -> GeometryReport:
    """Sample ``z`` in ``Q_J``, ``lam`` in ``Q_I`` and check each step of the lower bound.

    ``I = [0, theta)`` and ``J = [d theta, (d+1) theta)``. Slacks (all must be
    nonnegative):

    * separation: ``|1 - z conj(lam)| - a (d-1) theta``
    * center_distance: ``(sqrt5/2) theta - |c - lam|``
    * segment_ratio: ``b - |1 - z conj(xi)| / |1 - z conj(lam)|``, ``xi`` on ``[c, lam]``
    * perturbation: ``1/2 - |(1 - z conj c)^alpha - (1 - z conj lam)^alpha| / |1 - z conj lam|^alpha``
    * perturbation_bound: ``bound - alpha |z||c - lam||1 - z conj xi|^(alpha-1) / |1 - z conj lam|^alpha``

    The final lower bound for ``g = chi_{Q_I}`` is checked at up to
    ``n_kernel_points`` of the sampled ``z`` (all by default).
    """
    if d is None:
        d = choose_d(alpha)
    if d <= 2:
        raise InvalidConfigError(f"d must exceed 2, got {d}")
    if (d + 1) * theta >= math.pi / 2:
        raise InvalidConfigError(f"(d+1) theta = {(d + 1) * theta:.4g} must be below pi/2")
    a, b = SEPARATION_CONSTANT, SEGMENT_RATIO_CONSTANT
    bound = smallness(alpha, d)
    rng = np.random.default_rng(seed)
    QI = CarlesonBox(ArcInterval(0.0, theta))
    QJ = CarlesonBox(ArcInterval(d * theta, theta))
    c = QI.center
    z = _sample_box(rng, QJ, n_samples)
    lam = _sample_box(rng, QI, n_samples)
    xi = c + rng.uniform(0.0, 1.0, n_samples) * (lam - c)
    one_lam = 1.0 - z * np.conj(lam)
    one_c = 1.0 - z * np.conj(c)
    one_xi = 1.0 - z * np.conj(xi)
    dist = np.abs(one_lam)
    slacks = {
        "separation": dist - a * (d - 1) * theta,
        "center_distance": math.sqrt(5.0) / 2.0 * theta - np.abs(c - lam),
        "segment_ratio": b - np.abs(one_xi) / dist,
        "perturbation": 0.5 - np.abs(one_c**alpha - one_lam**alpha) / dist**alpha,
        "perturbation_bound": bound - alpha * np.abs(z) * np.abs(c - lam) * np.abs(one_xi) ** (alpha - 1) / dist**alpha,
    }
    C1 = lower_bound_constant(alpha, d)
    zk = z if n_kernel_points is None else z[:n_kernel_points]
    Kg = np.abs(box_integral_of_kernel(alpha, zk, QI))
    target = C1 * QI.area ** (-alpha / 2.0) * QI.area
    ratio = Kg / target
    return GeometryReport(alpha, theta, d, a, b, bound, C1, n_samples, seed,
                          {k: float(v.min()) for k, v in slacks.items()},
                          {k: float(v.max()) for k, v in slacks.items()},
                          float(ratio.min()), bool(ratio.min() >= 1.0))


# ---------------------------------------------------------------------------
# Carleson embedding and the Hoelder chain


def _tree_data(tree: DyadicTree, masses: np.ndarray, values: np.ndarray):
    """Per-node (mass, integral) pairs, flattened over generations; empty boxes dropped."""
    mass = np.concatenate(tree.box_sums(masses))
    integ = np.concatenate(tree.box_sums(values * masses))
    area = np.concatenate(tree.areas)
    keep = mass > 0
    return mass[keep], integ[keep], area[keep], keep


def carleson_embedding_ratio(weight: Weight, shift, p: float, g: GridFunction, j_max: int) -> float:
    """``sum_I |Q_I|_w (avg_{Q_I,w} g)^p / int |g|^p w dA`` over one tree."""
    mw = cell_masses(weight, g.grid)
    tree = DyadicTree(g.grid, shift, j_max)
    mass, integ, _, _ = _tree_data(tree, mw, np.abs(g.values))
    lhs = float(np.sum(mass * (integ / mass) ** p))
    rhs = float(np.sum(np.abs(g.values) ** p * mw))
    return lhs / rhs


@dataclass
class HolderChainReport:
    p: float
    alpha: float
    shift: float
    j_max: int
    characteristic: float
    pairing: float
    pairing_via_operator: float
    factorized: float
    product_of_sums: float
    rel_tol: float

    @property
    def first_holds(self) -> bool:
        return self.pairing <= self.factorized * (1.0 + self.rel_tol)

    @property
    def second_holds(self) -> bool:
        return self.factorized <= self.product_of_sums * (1.0 + self.rel_tol)

    @property
    def holder_gap(self) -> float:
        return 1.0 - self.factorized / self.product_of_sums if self.product_of_sums else 0.0

    def as_dict(self):
        return asdict(self) | {"first_holds": self.first_holds, "second_holds": self.second_holds}


def holder_chain_check(weight: Weight, p: float, alpha: float, shift, f: GridFunction, g: GridFunction,
                       j_max: int, rel_tol: float = 1e-12) -> HolderChainReport:
    """Evaluate the three quantities of the sufficiency chain on one dyadic tree.

    pairing      = <T_sigma f, g>_omega = sum_I |Q_I|^(-alpha/2) (int_Q f sigma)(int_Q g omega)
    factorized   = [w]^(1/p) sum_I |Q|_sigma^(1/p) <f>_sigma |Q|_omega^(1/p') <g>_omega
    product      = [w]^(1/p) (sum_I |Q|_sigma <f>_sigma^p)^(1/p) (sum_I |Q|_omega <g>_omega^p')^(1/p')

    ``[w]`` is the largest box ratio over the same tree with the same masses,
    so both inequalities are exact finite-dimensional statements.
    """
    grid = f.grid
    sigma = weight.dual(p)
    mw, ms = cell_masses(weight, grid), cell_masses(sigma, grid)
    tree = DyadicTree(grid, shift, j_max)
    wmass = np.concatenate(tree.box_sums(mw))
    smass = np.concatenate(tree.box_sums(ms))
    fint = np.concatenate(tree.box_sums(f.values * ms))
    gint = np.concatenate(tree.box_sums(g.values * mw))
    area = np.concatenate(tree.areas)
    keep = (wmass > 0) & (smass > 0)
    wmass, smass, fint, gint, area = wmass[keep], smass[keep], fint[keep], gint[keep], area[keep]
    q = p / (p - 1.0)
    char = float(np.max(wmass * smass ** (p - 1.0) / area ** (p * alpha / 2.0)))
    pairing = float(np.sum(area ** (-alpha / 2.0) * fint * gint))
    favg, gavg = fint / smass, gint / wmass
    factorized = char ** (1.0 / p) * float(np.sum(smass ** (1.0 / p) * favg * wmass ** (1.0 / q) * gavg))
    prod = char ** (1.0 / p) * float(np.sum(smass * favg**p)) ** (1.0 / p) * float(np.sum(wmass * gavg**q)) ** (1.0 / q)
    Tf = apply_T_sigma(alpha, shift, ms, f, j_max).values
    via_op = float(np.sum(Tf * g.values * mw))
    return HolderChainReport(p, alpha, float(tree.shift), j_max, char, pairing, via_op, factorized, prod, rel_tol)


# ---------------------------------------------------------------------------
# pointwise domination of the kernel by the two dyadic kernels


@dataclass
class DominationReport:
    alpha: float
    j_max: int
    n_samples: int
    seed: int
    included: int
    excluded: int
    sup_ratio: float
    sup_ratio_half_budget: float
    witness: tuple
    C3: float = field(init=False)
    C4: float = field(init=False)

    def __post_init__(self):
        self.C3 = self.sup_ratio
        self.C4 = self.sup_ratio ** (1.0 / self.alpha) / (12.0 * math.sqrt(math.pi))

    @property
    def budget_growth(self) -> float:
        return self.sup_ratio / self.sup_ratio_half_budget

    @property
    def passed(self) -> bool:
        return math.isfinite(self.sup_ratio) and self.budget_growth < 2.0

    def as_dict(self):
        return asdict(self) | {"budget_growth": self.budget_growth, "passed": self.passed}


def sample_pairs(rng, n: int, max_decades: float = 5.0):
    """Boundary-biased pairs: half independent, half angularly close."""
    r1 = 1.0 - 10.0 ** -rng.uniform(0.0, max_decades, n)
    r2 = 1.0 - 10.0 ** -rng.uniform(0.0, max_decades, n)
    t1 = rng.uniform(0.0, TWO_PI, n)
    close = rng.random(n) < 0.5
    dt = np.where(rng.random(n) < 0.5, -1.0, 1.0) * 10.0 ** -rng.uniform(0.0, max_decades, n) * math.pi
    t2 = np.where(close, t1 + dt, rng.uniform(0.0, TWO_PI, n))
    return r1 * np.exp(1j * t1), r2 * np.exp(1j * t2)


def domination_ratios(alphas, z, lam, j_max: int):
    """``|kernel| / (K^0 + K^(1/3))`` for each alpha, plus the exclusion mask."""
    g0 = common_generation(z, lam, SHIFTS[0], j_max)
    g1 = common_generation(z, lam, SHIFTS[1], j_max)
    dist = np.abs(1.0 - z * np.conj(lam))
    excluded = dist < 2.0 ** (1 - j_max)
    out = {}
    for alpha in alphas:
        prefix = np.cumsum(generation_weights(alpha, j_max))
        out[alpha] = dist ** (-alpha) / (prefix[g0] + prefix[g1])
    return out, excluded


def domination_check(alpha: float, n_samples: int = 1_000_000, j_max: int = 12, seed: int = 0,
                     chunk: int = 250_000) -> DominationReport:
    """Empirical ``sup |kernel| / (K^0 + K^(1/3))``, drawn over ``2 n_samples`` pairs.

    The sup over the first ``n_samples`` pairs is reported next to the sup over
    all of them so that budget stability can be read off. Pairs with
    ``|1 - z conj(lam)| < 2^(1 - j_max)`` are finer than the truncated trees
    resolve and are excluded (and counted).
    """
    rng = np.random.default_rng(seed)
    total = 2 * n_samples
    best = -1.0
    best_half = -1.0
    witness = (0j, 0j)
    inc = exc = 0
    done = 0
    while done < total:
        m = min(chunk, total - done)
        z, lam = sample_pairs(rng, m)
        ratios, excluded = domination_ratios([alpha], z, lam, j_max)
        r = np.where(excluded, -1.0, ratios[alpha])
        exc += int(excluded.sum())
        inc += int((~excluded).sum())
        i = int(np.argmax(r))
        if r[i] > best:
            best, witness = float(r[i]), (complex(z[i]), complex(lam[i]))
        first = max(0, min(m, n_samples - done))
        if first:
            best_half = max(best_half, float(r[:first].max()))
        done += m
    w = tuple(float(v) for c in witness for v in (c.real, c.imag))
    return DominationReport(alpha, j_max, total, seed, inc, exc, best, best_half, w)
