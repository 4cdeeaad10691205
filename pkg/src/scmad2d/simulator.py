"""Monte Carlo engine: point-process snapshots, resource allocation,
and SIR at the typical receivers.

The analytic route approximates the uplink interferer field; this module
does not. Everything downstream of the Poisson draws is emergent: users
associate with their nearest BS on a torus, cells schedule random
subsets onto distinct resources, and the per-resource interferer sets
are whatever that allocation produces. Agreement with the closed forms
is therefore a measurement, not a tautology.

Geometry lives on a square torus of half-width 10 / sqrt(pi lambda_bs)
(about 127 BSs on average), which removes edge bias without guard
zones. The typical uplink user is an extra point near the center; the
typical D2D receiver sits at the center with its transmitter at a
Rayleigh offset. Per-trial substreams are seeded with (seed, trial), so
estimates are reproducible for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .analytics import CoverageReport
from .topology import NetworkConfig, derive_intensities


class DegenerateSnapshotError(RuntimeError):
    """The realization cannot host a typical link (no BS in the window)."""


@njit(cache=True, fastmath=True)
def _nn_torus(pts, sites, side, ngrid, bucket_start, order):
    # Exact nearest site under toroidal metric: scan grid buckets in
    # expanding rings, stop once the best squared distance is within the
    # fully-scanned radius.
    n = pts.shape[0]
    out_i = np.empty(n, np.int64)
    out_d = np.empty(n, np.float64)
    cw = side / ngrid
    for p in range(n):
        px, py = pts[p, 0], pts[p, 1]
        gx = int(px / cw) % ngrid
        gy = int(py / cw) % ngrid
        best = 1e30
        best_i = -1
        ring = 0
        while True:
            for dx in range(-ring, ring + 1):
                for dy in range(-ring, ring + 1):
                    if max(abs(dx), abs(dy)) != ring:
                        continue
                    bx = (gx + dx) % ngrid
                    by = (gy + dy) % ngrid
                    b = bx * ngrid + by
                    for k in range(bucket_start[b], bucket_start[b + 1]):
                        s = order[k]
                        ddx = abs(sites[s, 0] - px)
                        if ddx > side - ddx:
                            ddx = side - ddx
                        ddy = abs(sites[s, 1] - py)
                        if ddy > side - ddy:
                            ddy = side - ddy
                        d2 = ddx * ddx + ddy * ddy
                        if d2 < best:
                            best = d2
                            best_i = s
            if best_i >= 0 and best <= (ring * cw) ** 2:
                break
            ring += 1
            if ring > ngrid:
                break
        out_i[p] = best_i
        out_d[p] = np.sqrt(best)
    return out_d, out_i


def toroidal_nearest(pts: np.ndarray, sites: np.ndarray, side: float):
    """(distance, index) of the nearest site to each point on the torus
    [0, side)^2. Exact; bucketed for roughly O(1) per query."""
    ns = sites.shape[0]
    ngrid = max(1, int(np.sqrt(ns)))
    cw = side / ngrid
    bx = (sites[:, 0] / cw).astype(np.int64) % ngrid
    by = (sites[:, 1] / cw).astype(np.int64) % ngrid
    b = bx * ngrid + by
    order = np.argsort(b, kind="stable")
    counts = np.bincount(b, minlength=ngrid * ngrid)
    start = np.zeros(ngrid * ngrid + 1, np.int64)
    np.cumsum(counts, out=start[1:])
    return _nn_torus(pts, sites, side, ngrid, start, order)


def _toroidal_dist(pts: np.ndarray, ref: np.ndarray, side: float) -> np.ndarray:
    d = np.abs(pts - ref)
    d = np.minimum(d, side - d)
    return np.hypot(d[:, 0], d[:, 1])


def _resource_pools(cfg: NetworkConfig) -> tuple[tuple[int, int], tuple[int, int]]:
    """Half-open resource index ranges (cellular, d2d)."""
    if cfg.access_scheme == "ofdma":
        return (0, cfg.k_tones), (0, cfg.k_tones)
    if cfg.coexistence == "overlaid":
        return (0, cfg.j_cell), (cfg.j_cell, cfg.j_codebooks)
    return (0, cfg.j_codebooks), (0, cfg.j_codebooks)


@dataclass(frozen=True, eq=False)
class Snapshot:
    """One realization of the network inside the simulation window.

    Coordinates are in [0, 2 * window_halfwidth)^2 with toroidal
    distances. cellular_user_points holds background uplink users
    including D2D pairs that fell back to cellular mode; the typical
    uplink user is carried separately (typical_user_point) and is
    conditioned on transmitting, since coverage is defined for an active
    link. d2d_rx_offsets point from each D2D transmitter to its
    receiver; typical_d2d_offset points from the window-center receiver
    to its transmitter.

    Resource indices are -1 until allocate_resources fills them; the
    carried generator continues the trial's random stream through
    allocation and fading, so ops must run in order on a fresh snapshot.
    """

    window_halfwidth: float
    bs_points: np.ndarray
    cellular_user_points: np.ndarray
    d2d_tx_points: np.ndarray
    d2d_rx_offsets: np.ndarray
    associations: np.ndarray
    typical_user_point: np.ndarray
    typical_cell: int
    typical_distance: float
    typical_d2d_offset: np.ndarray
    rng_seed: int
    resource_cellular: np.ndarray
    resource_d2d: np.ndarray
    active_cellular: np.ndarray
    active_d2d: np.ndarray
    typical_tone: int = -1
    typical_d2d_tone: int = -1
    _rng: np.random.Generator = field(repr=False, default=None)

    @property
    def side(self) -> float:
        return 2.0 * self.window_halfwidth

    @property
    def typical_d2d_length(self) -> float:
        return float(np.hypot(*self.typical_d2d_offset))


def sample_snapshot(cfg: NetworkConfig, seed) -> Snapshot:
    """Draw one network realization; deterministic given the seed.

    seed may be an int or a sequence of ints (the estimator passes
    (seed, trial_index) to give each trial its own substream).
    """
    if cfg.lambda_bs <= 0:
        raise ValueError("simulation window is undefined for lambda_bs = 0")
    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    half = 10.0 / math.sqrt(math.pi * cfg.lambda_bs)
    side = 2.0 * half
    area = side * side

    n_bs = rng.poisson(cfg.lambda_bs * area)
    if n_bs == 0:
        raise DegenerateSnapshotError("no BS fell in the window")
    n_u = rng.poisson(cfg.lambda_u * area)
    n_d = rng.poisson(cfg.lambda_d * area)
    bs = rng.uniform(0.0, side, (n_bs, 2))
    users = rng.uniform(0.0, side, (n_u, 2))
    d_tx = rng.uniform(0.0, side, (n_d, 2))
    # Rayleigh link lengths: P{r > t} = exp(-xi pi t^2).
    r_d = np.sqrt(rng.exponential(1.0 / (math.pi * cfg.xi), n_d))
    theta = rng.uniform(0.0, 2.0 * math.pi, n_d)
    offsets = r_d[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # Mode selection: pairs longer than tau_dis become cellular users.
    keep = r_d <= cfg.tau_dis
    users = np.vstack([users, d_tx[~keep]])
    d_tx = d_tx[keep]
    offsets = offsets[keep]

    typical = half + rng.uniform(-0.1 * half, 0.1 * half, 2)
    r_typ = math.sqrt(rng.exponential(1.0 / (math.pi * cfg.xi)))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    typical_d2d = np.array([r_typ * math.cos(phi), r_typ * math.sin(phi)])

    n_users = users.shape[0]
    query = np.vstack([users, typical[None, :]])
    dist, cell = toroidal_nearest(query, bs, side)
    return Snapshot(
        window_halfwidth=half,
        bs_points=bs,
        cellular_user_points=users,
        d2d_tx_points=d_tx,
        d2d_rx_offsets=offsets,
        associations=cell[:n_users],
        typical_user_point=typical,
        typical_cell=int(cell[n_users]),
        typical_distance=float(dist[n_users]),
        typical_d2d_offset=typical_d2d,
        rng_seed=int(ss.generate_state(1, np.uint64)[0]),
        resource_cellular=np.full(n_users, -1, np.int64),
        resource_d2d=np.full(d_tx.shape[0], -1, np.int64),
        active_cellular=np.zeros(n_users, bool),
        active_d2d=np.zeros(d_tx.shape[0], bool),
        _rng=rng,
    )


def _check_allocation(snap: Snapshot, cfg: NetworkConfig) -> None:
    # Distinct resources per cell and bounded active counts are the
    # "no intra-cell interference" contract; cheap enough to verify on
    # every snapshot.
    lo, hi = _resource_pools(cfg)[0]
    n_res = hi - lo
    cells = np.append(snap.associations[snap.active_cellular], snap.typical_cell)
    tones = np.append(snap.resource_cellular[snap.active_cellular], snap.typical_tone)
    if tones.size and not ((tones >= lo) & (tones < hi)).all():
        raise AssertionError("cellular resource index outside its pool")
    pair = cells * (hi + 1) + tones
    if np.unique(pair).size != pair.size:
        raise AssertionError("duplicate resource within a cell")
    if np.bincount(cells).max() > n_res:
        raise AssertionError("more active users than resources in a cell")


def allocate_resources(snap: Snapshot, cfg: NetworkConfig) -> Snapshot:
    """Grant resources: per cell a uniform random subset of users, one
    distinct resource each; D2D pairs flip the activation coin and pick
    uniformly from their pool.

    The typical user is tagged: it always transmits, on a uniformly
    chosen resource, and its cellmates compete for the remaining ones.
    This realizes the Palm view of an active uplink without biasing the
    cell-size distribution.
    """
    rng = snap._rng
    cell = snap.associations
    n_users = cell.shape[0]
    n_bs = snap.bs_points.shape[0]
    (lo_c, hi_c), (lo_d, hi_d) = _resource_pools(cfg)
    n_res = hi_c - lo_c

    # Rank users uniformly within each cell: one sort of cell + U(0,1)
    # gives per-cell random orderings.
    keys = rng.random(n_users)
    order = np.argsort(cell + keys)
    cs = cell[order]
    first = np.ones(n_users, bool)
    first[1:] = cs[1:] != cs[:-1]
    seg_start = np.maximum.accumulate(np.where(first, np.arange(n_users), 0))
    rank = np.empty(n_users, np.int64)
    rank[order] = np.arange(n_users) - seg_start

    # One random resource permutation per cell; rank r gets entry r.
    perms = rng.random((n_bs, n_res)).argsort(axis=1) + lo_c
    active = rank < n_res
    tone = np.where(active, perms[cell, np.minimum(rank, n_res - 1)], -1)

    k0 = int(rng.integers(lo_c, hi_c))
    c0 = snap.typical_cell
    in_c0 = cell == c0
    if n_res > 1:
        seq = perms[c0]
        seq = seq[seq != k0]
        a0 = in_c0 & (rank < n_res - 1)
        tone[in_c0] = -1
        tone[a0] = seq[rank[a0]]
        active = np.where(in_c0, a0, active)
    else:
        # The typical user takes the only resource of its cell.
        active = np.where(in_c0, False, active)
        tone[in_c0] = -1

    n_d = snap.d2d_tx_points.shape[0]
    act_d = rng.random(n_d) < cfg.q_d
    tone_d = np.where(act_d, rng.integers(lo_d, hi_d, n_d), -1)
    k_typ = int(rng.integers(lo_d, hi_d))

    out = replace(
        snap,
        resource_cellular=tone,
        resource_d2d=tone_d,
        active_cellular=active,
        active_d2d=act_d,
        typical_tone=k0,
        typical_d2d_tone=k_typ,
    )
    _check_allocation(out, cfg)
    return out


def _fades(rng: np.random.Generator, n: int, n_c: int) -> np.ndarray:
    if n_c == 1:
        return rng.exponential(1.0, n)
    # Per-codeword power rides on n_c tones with i.i.d. Rayleigh fading;
    # the compound fade is Gamma(n_c, 1). This is the true law, not the
    # exponential surrogate the closed forms use.
    return rng.gamma(n_c, 1.0, n)


def _signal_fade(rng: np.random.Generator, n_c: int, signal_fade: str) -> float:
    if signal_fade not in ("gamma", "exp"):
        raise ValueError(f"unknown signal_fade {signal_fade!r}")
    if signal_fade == "exp" and n_c > 1:
        # Mean-matched exponential surrogate of Gamma(n_c, 1); isolates
        # how much of the model gap that approximation contributes.
        return float(rng.exponential(n_c))
    return float(_fades(rng, 1, n_c)[0])


def _require_allocated(snap: Snapshot) -> None:
    if snap.typical_tone < 0:
        raise ValueError("run allocate_resources before computing SIR")


def sir_typical_bs(snap: Snapshot, cfg: NetworkConfig, signal_fade: str = "gamma") -> float:
    """SIR of the typical uplink at its serving BS; inf when the shared
    resource carries no interferer."""
    _require_allocated(snap)
    rng = snap._rng
    n_c = 1 if cfg.access_scheme == "ofdma" else cfg.n_c
    pw_u = cfg.p_u / n_c
    pw_d = cfg.p_d / n_c
    b0 = snap.bs_points[snap.typical_cell]
    side = snap.side
    k0 = snap.typical_tone
    r_cell = _toroidal_dist(snap.cellular_user_points[snap.resource_cellular == k0], b0, side)
    r_d2d = _toroidal_dist(snap.d2d_tx_points[snap.resource_d2d == k0], b0, side)
    interference = pw_u * np.sum(
        _fades(rng, r_cell.size, n_c) * r_cell**-cfg.alpha
    ) + pw_d * np.sum(_fades(rng, r_d2d.size, n_c) * r_d2d**-cfg.alpha)
    signal = pw_u * _signal_fade(rng, n_c, signal_fade) * max(
        snap.typical_distance, 1e-12
    ) ** -cfg.alpha
    if interference == 0.0:
        return math.inf
    return signal / interference


def sir_typical_dr(snap: Snapshot, cfg: NetworkConfig, signal_fade: str = "gamma") -> float:
    """SIR of the typical D2D link at the window-center receiver.

    The mode-selection gate {link length <= tau_dis} is not applied
    here; the estimator records it jointly with the SIR event so the
    estimate matches the analytic normalization.
    """
    _require_allocated(snap)
    rng = snap._rng
    n_c = 1 if cfg.access_scheme == "ofdma" else cfg.n_c
    pw_u = cfg.p_u / n_c
    pw_d = cfg.p_d / n_c
    center = np.array([snap.window_halfwidth, snap.window_halfwidth])
    side = snap.side
    k = snap.typical_d2d_tone
    r_d2d = _toroidal_dist(snap.d2d_tx_points[snap.resource_d2d == k], center, side)
    r_cell = _toroidal_dist(snap.cellular_user_points[snap.resource_cellular == k], center, side)
    interference = pw_d * np.sum(
        _fades(rng, r_d2d.size, n_c) * r_d2d**-cfg.alpha
    ) + pw_u * np.sum(_fades(rng, r_cell.size, n_c) * r_cell**-cfg.alpha)
    signal = pw_d * _signal_fade(rng, n_c, signal_fade) * max(
        snap.typical_d2d_length, 1e-12
    ) ** -cfg.alpha
    if interference == 0.0:
        return math.inf
    return signal / interference


@dataclass(frozen=True)
class McEstimate:
    """Binomial estimate with a 95% normal-approximation half-width."""

    trials: int
    successes: int
    p_hat: float = field(init=False)
    ci_halfwidth: float = field(init=False)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")
        p = self.successes / self.trials
        object.__setattr__(self, "p_hat", p)
        object.__setattr__(
            self, "ci_halfwidth", 1.96 * math.sqrt(p * (1.0 - p) / self.trials)
        )


def _run_trial(cfg: NetworkConfig, seed: int, trial: int, signal_fade: str) -> tuple[int, int]:
    snap = allocate_resources(sample_snapshot(cfg, (seed, trial)), cfg)
    cell_ok = sir_typical_bs(snap, cfg, signal_fade) > cfg.tau_bs
    d2d_ok = (
        snap.typical_d2d_length <= cfg.tau_dis
        and sir_typical_dr(snap, cfg, signal_fade) > cfg.tau_dr
    )
    return int(cell_ok), int(d2d_ok)


def coverage_estimates(
    cfg: NetworkConfig,
    trials: int,
    seed: int,
    workers: int = 1,
    signal_fade: str = "gamma",
) -> tuple[McEstimate, McEstimate]:
    """(cellular, d2d) success estimates over independent snapshots.

    Bit-identical for fixed (cfg, trials, seed) at any worker count:
    trial t uses substream (seed, t) and the reduction is an integer
    sum.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def run_range(lo: int, hi: int) -> tuple[int, int]:
        c = d = 0
        for t in range(lo, hi):
            a, b = _run_trial(cfg, seed, t, signal_fade)
            c += a
            d += b
        return c, d

    if workers <= 1:
        cell, d2d = run_range(0, trials)
    else:
        step = -(-trials // workers)
        bounds = [(i, min(i + step, trials)) for i in range(0, trials, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: run_range(*b), bounds))
        cell = sum(p[0] for p in parts)
        d2d = sum(p[1] for p in parts)
    return McEstimate(trials, cell), McEstimate(trials, d2d)


def estimate_coverage(
    cfg: NetworkConfig,
    trials: int,
    seed: int,
    workers: int = 1,
    signal_fade: str = "gamma",
) -> CoverageReport:
    """Monte Carlo CoverageReport mirroring the analytic one.

    Coverage probabilities are simulated; the admitted-density and rate
    prefactors of ASE are the same deterministic quantities both engines
    share, so ASE differences reflect coverage differences only.
    """
    est_c, est_d = coverage_estimates(cfg, trials, seed, workers, signal_fade)
    derived = derive_intensities(cfg)
    ase_c = derived.q_u * derived.lambda_ut * est_c.p_hat * math.log1p(cfg.tau_bs)
    ase_d = cfg.q_d * derived.lambda_dt * est_d.p_hat * math.log1p(cfg.tau_dr)
    return CoverageReport(
        cp_cellular=est_c.p_hat,
        cp_d2d=est_d.p_hat,
        ase_cellular=ase_c,
        ase_d2d=ase_d,
        ase_total=ase_c + ase_d,
        provenance="monte_carlo",
        ci_halfwidth=max(est_c.ci_halfwidth, est_d.ci_halfwidth),
    )


def dump_snapshot(snap: Snapshot, path) -> None:
    """Write the snapshot as text, one point per line:

        tier x y [partner_dx partner_dy] resource active

    Tiers are bs, cellular, d2d, typical_cellular, typical_d2d; the
    partner columns appear on d2d tiers only, resource is -1 when
    unassigned, active is 0/1 (bs lines read -1 1).
    """
    with open(path, "w") as fh:
        for x, y in snap.bs_points:
            fh.write(f"bs {x:.8g} {y:.8g} -1 1\n")
        for (x, y), res, act in zip(
            snap.cellular_user_points, snap.resource_cellular, snap.active_cellular
        ):
            fh.write(f"cellular {x:.8g} {y:.8g} {res} {int(act)}\n")
        for (x, y), (dx, dy), res, act in zip(
            snap.d2d_tx_points, snap.d2d_rx_offsets, snap.resource_d2d, snap.active_d2d
        ):
            fh.write(f"d2d {x:.8g} {y:.8g} {dx:.8g} {dy:.8g} {res} {int(act)}\n")
        tx, ty = snap.typical_user_point
        fh.write(f"typical_cellular {tx:.8g} {ty:.8g} {snap.typical_tone} 1\n")
        cx = snap.window_halfwidth + snap.typical_d2d_offset[0]
        cy = snap.window_halfwidth + snap.typical_d2d_offset[1]
        fh.write(
            f"typical_d2d {cx:.8g} {cy:.8g} "
            f"{-snap.typical_d2d_offset[0]:.8g} {-snap.typical_d2d_offset[1]:.8g} "
            f"{snap.typical_d2d_tone} 1\n"
        )
