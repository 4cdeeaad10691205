"""Tests for the point-process simulator and its estimator."""

import math
from dataclasses import replace

import numpy as np
import pytest

from scmad2d.simulator import (
    McEstimate,
    allocate_resources,
    coverage_estimates,
    dump_snapshot,
    estimate_coverage,
    sample_snapshot,
    sir_typical_bs,
    sir_typical_dr,
    toroidal_nearest,
)
from scmad2d.topology import NetworkConfig, derive_intensities

BASE = NetworkConfig()
OFDMA = NetworkConfig(access_scheme="ofdma")
SPLIT = NetworkConfig(lambda_u=5e-4, coexistence="overlaid", j_cell=10)


def _snap(cfg, seed):
    return allocate_resources(sample_snapshot(cfg, seed), cfg)


# ---------------------------------------------------------------------------
# nearest-site search


def _brute_nearest(pts, sites, side):
    d = np.abs(pts[:, None, :] - sites[None, :, :])
    d = np.minimum(d, side - d)
    d2 = (d**2).sum(axis=2)
    idx = d2.argmin(axis=1)
    return np.sqrt(d2.min(axis=1)), idx


def test_nearest_site_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(12):
        n_p = int(rng.integers(1, 150))
        n_s = int(rng.integers(1, 80))
        side = float(rng.uniform(0.5, 3.0))
        pts = rng.uniform(0.0, side, (n_p, 2))
        sites = rng.uniform(0.0, side, (n_s, 2))
        dist, idx = toroidal_nearest(pts, sites, side)
        b_dist, b_idx = _brute_nearest(pts, sites, side)
        # the chosen site must achieve the minimum distance (ties break
        # arbitrarily, so compare distances, not indices)
        assert dist == pytest.approx(b_dist, rel=1e-12, abs=1e-12)
        chosen = np.sqrt(((np.minimum(np.abs(pts - sites[idx]),
                                      side - np.abs(pts - sites[idx])))**2).sum(axis=1))
        assert chosen == pytest.approx(b_dist, rel=1e-12, abs=1e-12)
        assert (idx == b_idx).mean() > 0.99  # exact ties have measure zero


def test_wraparound_is_honored():
    side = 1.0
    pts = np.array([[0.01, 0.5]])
    sites = np.array([[0.95, 0.5], [0.4, 0.5]])
    dist, idx = toroidal_nearest(pts, sites, side)
    assert idx[0] == 0  # 0.06 across the seam beats 0.39 in the interior
    assert dist[0] == pytest.approx(0.06, rel=1e-12)


# ---------------------------------------------------------------------------
# snapshot sampling


def test_snapshot_is_deterministic():
    a = sample_snapshot(BASE, 42)
    b = sample_snapshot(BASE, 42)
    assert np.array_equal(a.bs_points, b.bs_points)
    assert np.array_equal(a.cellular_user_points, b.cellular_user_points)
    assert np.array_equal(a.d2d_tx_points, b.d2d_tx_points)
    assert a.typical_distance == b.typical_distance
    c = sample_snapshot(BASE, 43)
    assert not np.array_equal(a.bs_points, c.bs_points)


def test_snapshot_geometry():
    snap = sample_snapshot(BASE, 7)
    side = snap.side
    assert side == pytest.approx(2.0 * 10.0 / math.sqrt(math.pi * BASE.lambda_bs))
    for pts in (snap.bs_points, snap.cellular_user_points, snap.d2d_tx_points):
        if pts.size:
            assert (pts >= 0.0).all() and (pts < side).all()
    # typical uplink user sits near the window center
    assert np.abs(snap.typical_user_point - snap.window_halfwidth).max() <= 0.1 * snap.window_halfwidth
    # associations point at the true nearest BS
    b_dist, b_idx = _brute_nearest(snap.cellular_user_points, snap.bs_points, side)
    assert (snap.associations == b_idx).all()
    t_dist, t_idx = _brute_nearest(snap.typical_user_point[None, :], snap.bs_points, side)
    assert snap.typical_cell == t_idx[0]
    assert snap.typical_distance == pytest.approx(t_dist[0], rel=1e-12)


def test_mode_selection_truncates_background_pairs():
    cfg = replace(BASE, tau_dis=60.0)
    snap = sample_snapshot(cfg, 11)
    if snap.d2d_rx_offsets.size:
        lengths = np.hypot(snap.d2d_rx_offsets[:, 0], snap.d2d_rx_offsets[:, 1])
        assert (lengths <= cfg.tau_dis).all()
    # the typical pair's length is untruncated; the estimator gates on it
    far = [sample_snapshot(cfg, (11, t)).typical_d2d_length for t in range(200)]
    assert max(far) > cfg.tau_dis


def test_no_infrastructure_rejected():
    with pytest.raises(ValueError):
        sample_snapshot(NetworkConfig(lambda_bs=0.0), 0)


# ---------------------------------------------------------------------------
# resource allocation


@pytest.mark.parametrize("cfg,c_pool,d_pool", [
    (BASE, (0, 30), (0, 30)),
    (OFDMA, (0, 20), (0, 20)),
    (SPLIT, (0, 10), (10, 30)),
])
def test_allocation_respects_pools(cfg, c_pool, d_pool):
    snap = _snap(cfg, 13)
    lo, hi = c_pool
    tones = snap.resource_cellular[snap.active_cellular]
    assert ((tones >= lo) & (tones < hi)).all()
    assert lo <= snap.typical_tone < hi
    assert (snap.resource_cellular[~snap.active_cellular] == -1).all()
    lo, hi = d_pool
    d_tones = snap.resource_d2d[snap.active_d2d]
    if d_tones.size:
        assert ((d_tones >= lo) & (d_tones < hi)).all()
    assert lo <= snap.typical_d2d_tone < hi


def test_allocation_is_injective_per_cell():
    for t in range(50):
        snap = _snap(BASE, (17, t))
        cells = np.append(snap.associations[snap.active_cellular], snap.typical_cell)
        tones = np.append(snap.resource_cellular[snap.active_cellular], snap.typical_tone)
        pairs = set(zip(cells.tolist(), tones.tolist()))
        assert len(pairs) == cells.size


def test_saturated_cells_fill_every_resource():
    # with far more users than resources almost every cell must be full
    cfg = replace(BASE, lambda_u=5e-3)
    snap = _snap(cfg, 19)
    n_res = cfg.j_codebooks
    counts = np.bincount(snap.associations[snap.active_cellular],
                         minlength=snap.bs_points.shape[0])
    counts[snap.typical_cell] += 1
    assert counts.max() == n_res
    assert np.median(counts) == n_res


def test_activation_coin_respected():
    silent = replace(BASE, q_d=0.0)
    snap = _snap(silent, 23)
    assert snap.active_d2d.sum() == 0
    assert snap.typical_d2d_tone >= 0  # the typical pair still transmits
    full = replace(BASE, q_d=1.0)
    snap = _snap(full, 23)
    assert snap.active_d2d.all()


# ---------------------------------------------------------------------------
# SIR evaluation


def test_sir_requires_allocation():
    snap = sample_snapshot(BASE, 29)
    with pytest.raises(ValueError):
        sir_typical_bs(snap, BASE)
    with pytest.raises(ValueError):
        sir_typical_dr(snap, BASE)


def test_sir_reproducible_and_positive():
    a = _snap(BASE, 31)
    b = _snap(BASE, 31)
    sa = sir_typical_bs(a, BASE), sir_typical_dr(a, BASE)
    sb = sir_typical_bs(b, BASE), sir_typical_dr(b, BASE)
    assert sa == sb
    assert sa[0] > 0.0 and sa[1] > 0.0


def test_sir_unknown_fade_model_rejected():
    snap = _snap(BASE, 37)
    with pytest.raises(ValueError):
        sir_typical_bs(snap, BASE, signal_fade="rice")


def test_empty_band_reports_infinite_sir():
    lonely = NetworkConfig(lambda_u=0.0, lambda_d=0.0, access_scheme="ofdma")
    snap = _snap(lonely, 41)
    assert sir_typical_bs(snap, lonely) == math.inf


def test_surrogate_fade_changes_draws():
    a = sir_typical_bs(_snap(BASE, 43), BASE, signal_fade="gamma")
    b = sir_typical_bs(_snap(BASE, 43), BASE, signal_fade="exp")
    assert a != b


# ---------------------------------------------------------------------------
# estimator


def test_mc_estimate_interval():
    est = McEstimate(100, 50)
    assert est.p_hat == 0.5
    assert est.ci_halfwidth == pytest.approx(1.96 * math.sqrt(0.25 / 100), rel=1e-12)
    with pytest.raises(ValueError):
        McEstimate(0, 0)
    with pytest.raises(ValueError):
        McEstimate(10, 11)


def test_estimates_deterministic_across_workers():
    one = coverage_estimates(BASE, trials=300, seed=5, workers=1)
    many = coverage_estimates(BASE, trials=300, seed=5, workers=3)
    assert one[0].successes == many[0].successes
    assert one[1].successes == many[1].successes


def test_coverage_report_from_simulation():
    rep = estimate_coverage(BASE, trials=300, seed=9)
    assert rep.provenance == "monte_carlo"
    assert 0.0 <= rep.cp_cellular <= 1.0 and 0.0 <= rep.cp_d2d <= 1.0
    assert rep.ci_halfwidth > 0.0
    d = derive_intensities(BASE)
    assert rep.ase_cellular == pytest.approx(
        d.q_u * d.lambda_ut * rep.cp_cellular * math.log1p(BASE.tau_bs), rel=1e-12
    )


def test_trial_count_validated():
    with pytest.raises(ValueError):
        coverage_estimates(BASE, trials=0, seed=1)


# ---------------------------------------------------------------------------
# snapshot dump


def test_dump_snapshot_roundtrip(tmp_path):
    snap = _snap(BASE, 47)
    path = tmp_path / "snap.txt"
    dump_snapshot(snap, path)
    tiers = {"bs": 0, "cellular": 0, "d2d": 0, "typical_cellular": 0, "typical_d2d": 0}
    for line in path.read_text().splitlines():
        parts = line.split()
        tiers[parts[0]] += 1
        coords = [float(tok) for tok in parts[1:-2]]
        assert len(coords) in (2, 4)
        int(parts[-2])  # resource index
        assert parts[-1] in ("0", "1")
    assert tiers["bs"] == snap.bs_points.shape[0]
    assert tiers["cellular"] == snap.cellular_user_points.shape[0]
    assert tiers["d2d"] == snap.d2d_tx_points.shape[0]
    assert tiers["typical_cellular"] == 1 and tiers["typical_d2d"] == 1
