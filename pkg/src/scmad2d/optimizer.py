"""Proportional-fairness resource allocation.

Three closed-form optima over the coverage formulas: the D2D activation
probability in a sparse network, the activation probability when every
D2D pair stays in D2D mode, and the codebook split between tiers in a
dense overlaid network. Each comes with a brute-force validator over the
same utility so the closed form is checked against a search, not against
itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .analytics import (
    _alpha_sin,
    _hyf2,
    ase_report,
    cp_overlaid,
    cp_with_activation,
    d2d_success_exponent,
)
from .specialfn import scma_interference_product
from .topology import DerivedIntensities, NetworkConfig, derive_intensities

# Regime predicates; the analysis is stated in limits, these are the
# documented working thresholds.
SPARSE_THRESHOLD = 0.05
DENSE_FACTOR = 10.0


@dataclass(frozen=True)
class UtilityPoint:
    """One decision variable value with its utility and the two ASEs.

    u = log(ase_c) + log(ase_d) in nats; -inf sentinel when either ASE
    vanishes (proportional fairness rejects starving a tier).
    """

    decision: float
    u: float
    ase_c: float
    ase_d: float


def _point(decision: float, ase_c: float, ase_d: float) -> UtilityPoint:
    if ase_c > 0.0 and ase_d > 0.0:
        u = math.log(ase_c) + math.log(ase_d)
    else:
        u = -math.inf
    return UtilityPoint(decision=decision, u=u, ase_c=ase_c, ase_d=ase_d)


# Underlaid: choose the D2D activation probability q_d.


def utility_underlaid(
    cfg: NetworkConfig, derived: DerivedIntensities, q_d: float
) -> UtilityPoint:
    """Utility of activating each D2D pair with probability q_d."""
    cps = cp_with_activation(cfg, derived, q_d)
    rep = ase_report(replace(cfg, q_d=q_d), derived, cps)
    return _point(q_d, rep.ase_cellular, rep.ase_d2d)


def optimal_qd_sparse(cfg: NetworkConfig, derived: DerivedIntensities) -> float:
    """Activation optimum when D2D success decays little over the mode
    selection radius (rho * tau_dis^2 small): full activation.

    Warns if the sparseness predicate fails; the returned value is then
    outside the regime the result was derived for.
    """
    rho = d2d_success_exponent(cfg, derived, 1.0)
    measure = rho * cfg.tau_dis**2
    if not measure <= SPARSE_THRESHOLD:
        warnings.warn(
            f"sparse-regime predicate failed: rho*tau_dis^2 = {measure:.4g} "
            f"exceeds {SPARSE_THRESHOLD}",
            RuntimeWarning,
            stacklevel=2,
        )
    return 1.0


def optimal_qd_full_d2d(cfg: NetworkConfig, derived: DerivedIntensities) -> float:
    """Activation optimum when tau_dis = inf (no cellular fallback).

    The utility reduces to -log((Q1 + Q2 q)(Q3 + Q4/q)) up to constants;
    the interior stationary point sqrt(Q1 Q4 / (Q2 Q3)) wins when it
    lies inside [0, 1], otherwise the boundary q = 1 does.
    """
    if not math.isinf(cfg.tau_dis):
        raise ValueError("closed form requires tau_dis = inf")
    prod = scma_interference_product(cfg.n_c, cfg.alpha)
    asin = _alpha_sin(cfg.alpha)
    j = cfg.j_codebooks
    tau_bs = cfg.tau_bs / cfg.n_c
    tau_dr = cfg.tau_dr / cfg.n_c
    q1 = cfg.lambda_bs + derived.q_u * derived.lambda_ut * _hyf2(cfg, derived) / j
    q2 = (
        2.0 * math.pi * derived.lambda_dt * (tau_bs * derived.eta_p) ** derived.delta
        * prod / (j * asin)
    )
    q3 = 2.0 * math.pi * tau_dr**derived.delta * derived.lambda_dt * prod / (j * asin)
    q4 = cfg.xi + (
        2.0 * math.pi * tau_dr**derived.delta
        * derived.q_u * derived.lambda_ut * derived.eta_p**-derived.delta
        * prod / (j * asin)
    )
    if q2 * q3 == 0.0 or q1 * q4 >= q2 * q3:
        return 1.0
    return math.sqrt(q1 * q4 / (q2 * q3))


def grid_search_qd(
    cfg: NetworkConfig, derived: DerivedIntensities, step: float = 1e-3
) -> UtilityPoint:
    """Brute-force argmax of utility_underlaid over {step, 2 step, .., 1}.

    Deterministic tie-break: the smallest q_d attaining the maximum.
    """
    n = round(1.0 / step)
    best: UtilityPoint | None = None
    for i in range(1, n + 1):
        point = utility_underlaid(cfg, derived, i / n)
        if best is None or point.u > best.u:
            best = point
    return best


# Overlaid: split J codebooks as j_c for cellular, J - j_c for D2D.


def utility_overlaid(
    cfg: NetworkConfig,
    derived: DerivedIntensities,
    j_c: int,
    dense: bool = False,
) -> UtilityPoint:
    """Utility of granting j_c codebooks to the cellular tier.

    The cellular access probability depends on j_c, so intensities are
    re-derived here; the passed `derived` fixes only the geometry. With
    dense=True the cellular ASE uses its saturated form
    j_c * lambda_bs * log(1 + tau_bs) / (HyF2 + 1), linear in j_c.
    """
    if not 0 <= j_c <= cfg.j_codebooks:
        raise ValueError(f"j_c = {j_c} outside [0, {cfg.j_codebooks}]")
    if j_c == 0 or j_c == cfg.j_codebooks:
        return UtilityPoint(decision=j_c, u=-math.inf, ase_c=0.0, ase_d=0.0)
    sub = replace(cfg, coexistence="overlaid", j_cell=j_c)
    d = derive_intensities(sub)
    rep = ase_report(sub, d, cp_overlaid(sub, d))
    ase_c = rep.ase_cellular
    if dense:
        ase_c = (
            sub.j_cell * sub.lambda_bs * math.log1p(sub.tau_bs)
            / (_hyf2(sub, d) + 1.0)
        )
    return _point(j_c, ase_c, rep.ase_d2d)


def optimal_jc_dense(cfg: NetworkConfig, derived: DerivedIntensities) -> int:
    """Codebook-split optimum for dense cellular users and tau_dis = inf.

    j_c* = round(J + Q6 - sqrt(Q6^2 + J Q6)) with Q6 the D2D
    interference-to-xi ratio; depends on D2D parameters only. Rounded
    half-up and clamped to [1, J-1] (both tiers need a codebook).
    """
    if not math.isinf(cfg.tau_dis):
        raise ValueError("closed form requires tau_dis = inf")
    j = cfg.j_codebooks
    if derived.lambda_ut < DENSE_FACTOR * j * cfg.lambda_bs:
        warnings.warn(
            f"dense-regime predicate failed: lambda_ut = {derived.lambda_ut:.4g} "
            f"is below {DENSE_FACTOR:g} * J * lambda_bs = "
            f"{DENSE_FACTOR * j * cfg.lambda_bs:.4g}",
            RuntimeWarning,
            stacklevel=2,
        )
    tau_dr = cfg.tau_dr / cfg.n_c
    prod = scma_interference_product(cfg.n_c, cfg.alpha)
    q6 = (
        2.0 * math.pi * tau_dr**derived.delta * derived.lambda_dt
        * prod / (cfg.xi * _alpha_sin(cfg.alpha))
    )
    j_star = math.floor(j + q6 - math.sqrt(q6 * q6 + j * q6) + 0.5)
    if not 1 <= j_star <= j - 1:
        clamped = min(max(j_star, 1), j - 1)
        warnings.warn(
            f"rounded optimum {j_star} clamped to {clamped}",
            RuntimeWarning,
            stacklevel=2,
        )
        return clamped
    return j_star


def exhaustive_search_jc(
    cfg: NetworkConfig, derived: DerivedIntensities, dense: bool = False
) -> UtilityPoint:
    """Exact integer argmax of utility_overlaid over j_c in [1, J-1].

    Deterministic tie-break: the smallest j_c attaining the maximum.
    """
    best: UtilityPoint | None = None
    for j_c in range(1, cfg.j_codebooks):
        point = utility_overlaid(cfg, derived, j_c, dense=dense)
        if best is None or point.u > best.u:
            best = point
    return best
