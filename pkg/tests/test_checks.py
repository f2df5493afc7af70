import math

import numpy as np
import pytest

from hardykernel.dyadic import SHIFTS, DyadicTree
from hardykernel.geometry import ArcInterval, CarlesonBox
from hardykernel.grid import GridFunction, PolarGrid
from hardykernel.operators.checks import (
    SEGMENT_RATIO_CONSTANT,
    SEPARATION_CONSTANT,
    InvalidConfigError,
    box_integral_of_kernel,
    carleson_embedding_ratio,
    choose_d,
    domination_check,
    domination_ratios,
    holder_chain_check,
    lower_bound_constant,
    necessity_geometry,
    smallness,
)
from hardykernel.weights import BoundaryPoint, Constant, RadialPower


def test_constants():
    assert SEPARATION_CONSTANT == pytest.approx(0.5375612, rel=1e-6)
    assert SEGMENT_RATIO_CONSTANT == pytest.approx(1 + math.sqrt(5) / (2 * SEPARATION_CONSTANT))
    assert choose_d(1) == math.ceil(1 + math.sqrt(5) / SEPARATION_CONSTANT)
    for alpha in (0.5, 1, 1.5, 2, 3):
        d = choose_d(alpha)
        assert d > 2 and smallness(alpha, d) <= 0.5
        assert d == 3 or smallness(alpha, d - 1) > 0.5


def test_invalid_configuration():
    with pytest.raises(InvalidConfigError):
        necessity_geometry(1, 0.3)
    with pytest.raises(InvalidConfigError):
        necessity_geometry(1, 0.01, d=2)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
@pytest.mark.parametrize("theta", [1e-2, 1e-3])
def test_necessity_slacks_nonnegative(alpha, theta):
    rep = necessity_geometry(alpha, theta, n_samples=20_000, seed=3)
    assert rep.d == choose_d(alpha)
    assert all(v >= 0 for v in rep.min_slack.values()), rep.min_slack
    assert rep.lower_bound_holds and rep.passed


def test_lower_bound_constant_distance_step():
    # |1 - z conj(c)| <= theta sqrt((d + 1/2)^2 + (3/(2pi))^2) for z in Q_J
    rng = np.random.default_rng(0)
    for theta in (0.05, 1e-3):
        d = 6
        QI = CarlesonBox(ArcInterval(0, theta))
        QJ = CarlesonBox(ArcInterval(d * theta, theta))
        z = np.sqrt(rng.uniform(QJ.r_lo**2, 1, 50_000)) * np.exp(1j * (d * theta + theta * rng.uniform(0, 1, 50_000)))
        kappa = math.hypot(d + 0.5, 1.5 / math.pi)
        assert np.abs(1 - z * np.conj(QI.center)).max() <= theta * kappa
        assert theta <= math.pi * math.sqrt(2) * math.sqrt(QI.area)
    assert lower_bound_constant(1, 6) > 0


def test_box_integral_quadrature_converged():
    QI = CarlesonBox(ArcInterval(0, 0.01))
    z = 0.995 * np.exp(1j * np.array([0.06, 0.065]))
    a = box_integral_of_kernel(2.0, z, QI, order=16)
    b = box_integral_of_kernel(2.0, z, QI, order=40)
    assert np.allclose(a, b, rtol=1e-10)


def test_domination_examples():
    ratios, excluded = domination_ratios([1.0, 2.0], np.array([0j]), np.array([0j]), 12)
    assert ratios[1.0][0] == pytest.approx(0.5) and ratios[2.0][0] == pytest.approx(0.5)
    assert not excluded[0]
    z = np.array([0.999 + 0j])
    ratios, _ = domination_ratios([1.0, 2.0, 3.0], z, -z, 12)
    for a, r in ratios.items():
        assert r[0] <= 1.0


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_domination_stable(alpha):
    rep = domination_check(alpha, 100_000, 12, seed=1)
    assert math.isfinite(rep.sup_ratio) and rep.passed
    assert rep.excluded > 0 and rep.included + rep.excluded == 200_000


def test_embedding_closed_form_constant():
    grid = PolarGrid(8)
    one = grid.function(np.ones(grid.size))
    for j in (3, 6, 9):
        expect = sum(2**g * (2.0 / 2**g) ** 2 * (1 - 1 / 2**g) if g > 0 else 1.0 for g in range(j + 1))
        for s in SHIFTS:
            assert carleson_embedding_ratio(Constant(1), s, 2, one, j) == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("weight", [Constant(1), RadialPower(0.5)])
@pytest.mark.parametrize("seed", [0, 7])
def test_embedding_stable_random_g(weight, seed):
    grid = PolarGrid(10)
    g = grid.function(np.random.default_rng(seed).uniform(0, 1, grid.size))
    ratios = [carleson_embedding_ratio(weight, 0, 2, g, j) for j in (6, 8, 10)]
    assert (max(ratios) - min(ratios)) / min(ratios) < 0.10


def test_embedding_tail_geometric_for_singular_radial_weight():
    # generation g of the tree carries omega-mass ~ 2^(-g/2) for t = -1/2, so the
    # truncated sums increase with increments shrinking by about 2^(-1/2)
    grid = PolarGrid(10)
    g = grid.function(np.random.default_rng(7).uniform(0, 1, grid.size))
    r = np.array([carleson_embedding_ratio(RadialPower(-0.5), 0, 2, g, j) for j in range(4, 11)])
    steps = np.diff(r)
    assert np.all(steps > 0)
    assert np.allclose(steps[1:] / steps[:-1], 2**-0.5, atol=0.04)
    limit = r[-1] + steps[-1] * 2**-0.5 / (1 - 2**-0.5)
    assert (limit - r[-1]) / limit < 0.05


def test_embedding_single_box():
    grid = PolarGrid(8)
    tree = DyadicTree(grid, 0, 9)
    chi = tree.box(8, 17).contains(grid.centers).astype(float)
    r = carleson_embedding_ratio(BoundaryPoint(0, 1), 0, 2, grid.function(chi), 9)
    assert math.isfinite(r) and r >= 1.0


def test_holder_chain_random_trials():
    grid = PolarGrid(6)
    rng = np.random.default_rng(11)
    weights = [Constant(1), RadialPower(0.5), BoundaryPoint(1.0, -1.0)]
    for trial in range(30):
        w = weights[trial % 3]
        p = (1.5, 2.0, 3.0)[trial % 3]
        f = grid.function(rng.exponential(size=grid.size) * (rng.random(grid.size) < 0.5))
        g = grid.function(rng.uniform(0, 1, grid.size) ** 3)
        rep = holder_chain_check(w, p, 1.5, SHIFTS[trial % 2], f, g, 7)
        assert rep.first_holds and rep.second_holds
        assert rep.pairing_via_operator == pytest.approx(rep.pairing, rel=1e-10)


def test_holder_chain_constant_functions_closed_form():
    grid = PolarGrid(6)
    one = grid.function(np.ones(grid.size))
    rep = holder_chain_check(Constant(1), 2.0, 2.0, 0, one, one, 7)
    # omega = sigma = 1, alpha = 2: every box ratio is 1 and all three quantities equal sum_I |Q_I|
    tree = DyadicTree(grid, 0, 7)
    total = float(np.concatenate(tree.box_sums(grid.areas)).sum())
    assert rep.characteristic == pytest.approx(1.0, rel=1e-9)
    assert rep.pairing == pytest.approx(total, rel=1e-9)
    assert rep.factorized == pytest.approx(total, rel=1e-9)
    assert rep.product_of_sums == pytest.approx(total, rel=1e-9)


def test_holder_equality_cases():
    grid = PolarGrid(6)
    tree = DyadicTree(grid, 0, 7)
    chi = grid.function(3.0 * tree.box(5, 9).contains(grid.centers))
    rep = holder_chain_check(Constant(1), 2.0, 1.0, 0, chi, chi, 7)
    assert rep.factorized == pytest.approx(rep.product_of_sums, rel=1e-12)
    rng = np.random.default_rng(0)
    f = grid.function(rng.uniform(0, 1, grid.size))
    g = grid.function(rng.uniform(0, 1, grid.size))
    rep0 = holder_chain_check(RadialPower(0.5), 3.0, 1.0, 0, f, g, 0)
    assert rep0.factorized == pytest.approx(rep0.product_of_sums, rel=1e-12)
