import numpy as np
import pytest

from conftest import rand_grid, rand_point
from gazeval.errors import ConstantMap, EmptyDataset, ZeroDimension
from gazeval.grid import Grid, PixelCoord
from gazeval.metrics import auc_at, auc_set, fixation_pixel, nss_at, nss_set

P = PixelCoord


# ---------------------------------------------------------------------------
# fixation -> pixel
# ---------------------------------------------------------------------------

def test_fixation_pixel_rounds_half_up_and_clamps():
    g = Grid.filled(8, 6, 0.0)
    assert fixation_pixel(g, P(1.5, 2.5)) == (3, 2)
    assert fixation_pixel(g, P(1.49, 2.49)) == (2, 1)
    assert fixation_pixel(g, P(0.0, 0.0)) == (0, 0)
    # 7.9 rounds to 8, one past the last column; clamps back inside
    assert fixation_pixel(g, P(7.9, 5.9)) == (5, 7)


# ---------------------------------------------------------------------------
# NSS
# ---------------------------------------------------------------------------

def test_nss_at_frozen_oracle_value():
    g = Grid(np.arange(1.0, 10.0).reshape(3, 3))
    assert nss_at(g, P(2, 2)) == pytest.approx(1.5491933384829668, abs=1e-12)


def test_nss_at_positive_affine_invariant(rng):
    g = rand_grid(rng, 9, 9)
    fix = rand_point(rng, 9, 9)
    scaled = Grid(4.0 * g.data - 2.5)
    assert nss_at(scaled, fix) == pytest.approx(nss_at(g, fix), abs=1e-12)


def test_nss_at_constant_map_errors():
    with pytest.raises(ConstantMap):
        nss_at(Grid.filled(4, 4, 1.0), P(1, 1))


def test_nss_set_single_equals_nss_at(rng):
    g = rand_grid(rng, 7, 7)
    fix = rand_point(rng, 7, 7)
    assert nss_set(g, [fix]) == nss_at(g, fix)


def test_nss_set_symmetric_pair_cancels():
    g = Grid(np.array([[1.0, 2.0], [3.0, 4.0]]))  # mean 2.5
    # values 1 and 4 sit symmetrically around the mean
    assert nss_set(g, [P(0, 0), P(1, 1)]) == pytest.approx(0.0, abs=1e-15)


def test_nss_set_matches_mean_oracle(rng):
    g = rand_grid(rng, 16, 16)
    fixations = [rand_point(rng, 16, 16) for _ in range(10)]
    want = sum(nss_at(g, f) for f in fixations) / len(fixations)
    assert nss_set(g, fixations) == pytest.approx(want, abs=1e-12)


def test_nss_set_over_every_pixel_is_zero(rng):
    g = rand_grid(rng, 6, 5)
    all_pixels = [P(float(x), float(y)) for y in range(5) for x in range(6)]
    assert nss_set(g, all_pixels) == pytest.approx(0.0, abs=1e-9)


def test_nss_set_empty_errors(rng):
    with pytest.raises(EmptyDataset):
        nss_set(rand_grid(rng, 4, 4), [])


# ---------------------------------------------------------------------------
# AUC
# ---------------------------------------------------------------------------

def auc_sweep_oracle(g: Grid, fix: PixelCoord) -> float:
    """Threshold-sweep ROC with trapezoid integration, fully independent of
    the rank-statistic closed form."""
    row, col = fixation_pixel(g, fix)
    pos = g.data[row, col]
    flat = g.data.ravel()
    negs = np.delete(flat, row * g.width + col)
    fpr = [0.0]
    tpr = [0.0]
    for th in np.unique(flat)[::-1]:  # descending thresholds
        tpr.append(1.0 if pos >= th else 0.0)
        fpr.append(np.count_nonzero(negs >= th) / negs.size)
    fpr.append(1.0)
    tpr.append(1.0)
    return float(np.trapezoid(tpr, fpr))


def test_auc_at_extremes():
    data = np.zeros((3, 3))
    data[1, 2] = 1.0
    assert auc_at(Grid(data), P(2, 1)) == 1.0  # unique max at fixation
    assert auc_at(Grid(data), P(0, 0)) < 1.0
    assert auc_at(Grid.filled(4, 4, 7.0), P(2, 2)) == 0.5  # all ties
    data = np.ones((3, 3))
    data[0, 1] = -1.0
    assert auc_at(Grid(data), P(1, 0)) == 0.0  # unique min at fixation


def test_auc_at_needs_two_pixels():
    with pytest.raises(ZeroDimension):
        auc_at(Grid.filled(1, 1, 0.0), P(0, 0))


def test_auc_at_hand_worked_tie_case():
    # values [1, 2, 2, 3], fixation on a 2: (#below + 0.5 * #tied)/3
    g = Grid(np.array([[1.0, 2.0], [2.0, 3.0]]))
    assert auc_at(g, P(1, 0)) == pytest.approx((1 + 0.5 * 1) / 3, abs=1e-15)


def test_auc_at_matches_threshold_sweep_oracle(rng):
    for trial in range(30):
        g = rand_grid(rng, 16, 16)
        if trial % 2:
            # quantize to force plateaus of tied values
            g = Grid(np.round(g.data * 8.0) / 8.0)
        fix = rand_point(rng, 16, 16)
        assert auc_at(g, fix) == pytest.approx(auc_sweep_oracle(g, fix), abs=1e-9)


def test_auc_at_invariant_under_increasing_transforms(rng):
    # quantized values keep exp injective on the distinct-value lattice
    g = Grid(np.round(rand_grid(rng, 12, 12).data * 16.0) / 16.0)
    fix = rand_point(rng, 12, 12)
    base = auc_at(g, fix)
    assert auc_at(Grid(np.exp(g.data)), fix) == pytest.approx(base, abs=1e-12)
    assert auc_at(Grid(3.0 * g.data + 11.0), fix) == pytest.approx(base, abs=1e-12)


def test_auc_at_always_in_unit_interval(rng):
    for _ in range(50):
        g = rand_grid(rng, 5, 4, -10, 10)
        fix = rand_point(rng, 5, 4)
        assert 0.0 <= auc_at(g, fix) <= 1.0


def test_auc_set_mean_and_extremes(rng):
    g = rand_grid(rng, 8, 8)
    fixations = [rand_point(rng, 8, 8) for _ in range(6)]
    want = sum(auc_at(g, f) for f in fixations) / len(fixations)
    assert auc_set(g, fixations) == pytest.approx(want, abs=1e-12)
    assert auc_set(g, fixations[:1]) == auc_at(g, fixations[0])

    data = np.zeros((5, 5))
    data[2, 3] = 9.0
    # several fixations landing on the unique maximum pixel
    assert auc_set(Grid(data), [P(3, 2), P(2.6, 1.8), P(3.4, 2.4)]) == 1.0


def test_auc_set_empty_errors(rng):
    with pytest.raises(EmptyDataset):
        auc_set(rand_grid(rng, 4, 4), [])
