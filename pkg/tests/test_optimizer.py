"""Tests for the activation-probability and codebook-split optimizers."""

import dataclasses
import math
import warnings
from dataclasses import replace

import pytest

from scmad2d.optimizer import (
    UtilityPoint,
    exhaustive_search_jc,
    grid_search_qd,
    optimal_jc_dense,
    optimal_qd_full_d2d,
    optimal_qd_sparse,
    utility_overlaid,
    utility_underlaid,
)
from scmad2d.specialfn import hyp2f1
from scmad2d.topology import NetworkConfig, derive_intensities

DENSE_D2D = NetworkConfig(lambda_u=1e-3, lambda_d=2.5e-3)
SPLIT = replace(DENSE_D2D, coexistence="overlaid", j_cell=10)
SPARSE = NetworkConfig(xi=1e-6, tau_dis=50.0, lambda_u=1e-5, lambda_d=1e-5)

# closed-form optima frozen from a 30-digit evaluation of the same algebra
QD_GOLDEN = [(6, 0.128526386786), (12, 0.242196708231), (30, 0.445906529727)]


@pytest.mark.parametrize("j,want", QD_GOLDEN)
def test_activation_optimum_golden(j, want):
    cfg = replace(DENSE_D2D, j_codebooks=j)
    assert optimal_qd_full_d2d(cfg, derive_intensities(cfg)) == pytest.approx(want, rel=1e-11)


def test_activation_optimum_matches_grid():
    d = derive_intensities(DENSE_D2D)
    closed = optimal_qd_full_d2d(DENSE_D2D, d)
    point = grid_search_qd(DENSE_D2D, d, step=1e-3)
    assert abs(closed - point.decision) <= 1e-3 + 1e-12


def test_activation_optimum_needs_unbounded_pairing():
    cfg = replace(DENSE_D2D, tau_dis=100.0)
    with pytest.raises(ValueError):
        optimal_qd_full_d2d(cfg, derive_intensities(cfg))


def test_activation_optimum_saturates_for_sparse_d2d():
    cfg = replace(DENSE_D2D, lambda_d=1e-9)
    assert optimal_qd_full_d2d(cfg, derive_intensities(cfg)) == 1.0


def test_sparse_rule_silent_inside_regime():
    d = derive_intensities(SPARSE)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert optimal_qd_sparse(SPARSE, d) == 1.0


def test_sparse_rule_warns_outside_regime():
    d = derive_intensities(DENSE_D2D)
    with pytest.warns(RuntimeWarning):
        assert optimal_qd_sparse(DENSE_D2D, d) == 1.0


def test_underlaid_utility_structure():
    d = derive_intensities(DENSE_D2D)
    point = utility_underlaid(DENSE_D2D, d, 0.5)
    assert point.decision == 0.5
    assert point.u == pytest.approx(math.log(point.ase_c) + math.log(point.ase_d), rel=1e-12)
    assert utility_underlaid(DENSE_D2D, d, 0.0).u == -math.inf


def test_grid_search_returns_a_local_maximum():
    d = derive_intensities(DENSE_D2D)
    point = grid_search_qd(DENSE_D2D, d, step=1e-3)
    for nudge in (-1e-3, 1e-3):
        q = point.decision + nudge
        if 0.0 <= q <= 1.0:
            assert utility_underlaid(DENSE_D2D, d, q).u <= point.u + 1e-12


def test_utility_point_is_frozen():
    point = UtilityPoint(0.5, -1.0, 1.0, 1.0)
    with pytest.raises(dataclasses.FrozenInstanceError):
        point.u = 0.0


# ---------------------------------------------------------------------------
# codebook split


def test_codebook_split_golden():
    d = derive_intensities(SPLIT)
    with pytest.warns(RuntimeWarning):
        # the uplink population here sits below the dense-regime predicate
        closed = optimal_jc_dense(SPLIT, d)
    assert closed == 15
    assert exhaustive_search_jc(SPLIT, d, dense=True).decision == 15
    assert exhaustive_search_jc(SPLIT, d, dense=False).decision == 15


def test_codebook_split_needs_unbounded_pairing():
    cfg = replace(SPLIT, tau_dis=100.0)
    with pytest.raises(ValueError):
        optimal_jc_dense(cfg, derive_intensities(cfg))


def test_codebook_split_clamps_at_pool_edge():
    cfg = replace(SPLIT, lambda_d=1e-8)
    with pytest.warns(RuntimeWarning):
        j = optimal_jc_dense(cfg, derive_intensities(cfg))
    assert j == cfg.j_codebooks - 1


def test_overlaid_utility_boundaries():
    d = derive_intensities(SPLIT)
    for j_c in (0, SPLIT.j_codebooks):
        point = utility_overlaid(SPLIT, d, j_c)
        assert point.u == -math.inf
        assert point.ase_c == 0.0 and point.ase_d == 0.0
    with pytest.raises(ValueError):
        utility_overlaid(SPLIT, d, SPLIT.j_codebooks + 1)
    with pytest.raises(ValueError):
        utility_overlaid(SPLIT, d, -1)


def test_dense_utility_uses_saturated_uplink_ase():
    d = derive_intensities(SPLIT)
    j_c = 15
    point = utility_overlaid(SPLIT, d, j_c, dense=True)
    delta = 2.0 / SPLIT.alpha
    hyf2 = hyp2f1(SPLIT.n_c, -delta, 1.0 - delta, -SPLIT.tau_bs / SPLIT.n_c) - 1.0
    want = j_c * SPLIT.lambda_bs * math.log1p(SPLIT.tau_bs) / (hyf2 + 1.0)
    assert point.ase_c == pytest.approx(want, rel=1e-12)


# ---------------------------------------------------------------------------
# qualitative tradeoff shapes behind the two decision problems


def test_activation_moves_rate_between_tiers():
    d = derive_intensities(DENSE_D2D)
    points = [utility_underlaid(DENSE_D2D, d, q) for q in (0.2, 0.4, 0.6, 0.8, 1.0)]
    cell = [p.ase_c for p in points]
    direct = [p.ase_d for p in points]
    assert all(a >= b - 1e-18 for a, b in zip(cell, cell[1:]))
    assert all(a <= b + 1e-18 for a, b in zip(direct, direct[1:]))


def test_codebook_split_moves_rate_between_tiers():
    d = derive_intensities(SPLIT)
    points = [utility_overlaid(SPLIT, d, j) for j in (5, 10, 15, 20, 25)]
    cell = [p.ase_c for p in points]
    direct = [p.ase_d for p in points]
    assert all(a <= b + 1e-18 for a, b in zip(cell, cell[1:]))
    assert all(a >= b - 1e-18 for a, b in zip(direct, direct[1:]))
