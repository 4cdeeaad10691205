"""Closed-form coverage probability and area spectral efficiency (ASE).

Interference-limited regime throughout: SIR, no noise term. Cellular
uplinks use nearest-BS association with per-resource thinning of the
interferer field; D2D coverage averages over the Rayleigh link length
restricted to [0, tau_dis]. ASE is in nats/(s Hz m^2) since log(1+tau)
is taken natural; every ratio and optimum is base-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specialfn import hyp2f1, scma_interference_product
from .topology import DerivedIntensities, NetworkConfig, derive_intensities


@dataclass(frozen=True)
class CoverageReport:
    """Coverage and ASE for one scheme at one configuration.

    provenance is "analytic" or "monte_carlo"; ci_halfwidth is a 95%
    half-width for the coverage probabilities (0 for analytic).
    """

    cp_cellular: float
    cp_d2d: float
    ase_cellular: float
    ase_d2d: float
    ase_total: float
    provenance: str
    ci_halfwidth: float = 0.0

    def __post_init__(self):
        for name in ("cp_cellular", "cp_d2d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")
        if self.provenance not in ("analytic", "monte_carlo"):
            raise ValueError(f"unknown provenance {self.provenance!r}")


def _alpha_sin(alpha: float) -> float:
    return alpha * math.sin(2.0 * math.pi / alpha)


def _rayleigh_mass(xi: float, rho: float, tau_dis: float) -> float:
    # pi xi / rho * (1 - exp(-rho tau_dis^2)); the exponential drops at
    # tau_dis = inf. expm1 keeps the small-rho regime accurate.
    if math.isinf(tau_dis):
        return math.pi * xi / rho
    return math.pi * xi / rho * (-math.expm1(-rho * tau_dis**2))


def _require(cfg: NetworkConfig, scheme: str, coexistence: str) -> None:
    if cfg.access_scheme != scheme or cfg.coexistence != coexistence:
        raise ValueError(
            f"formula requires {scheme}/{coexistence}, config is "
            f"{cfg.access_scheme}/{cfg.coexistence}"
        )


# OFDMA underlaid


def cp_bs_ofdma_underlaid(cfg: NetworkConfig, derived: DerivedIntensities) -> float:
    """Uplink coverage with K orthogonal tones shared by both tiers."""
    _require(cfg, "ofdma", "underlaid")
    if cfg.lambda_bs == 0:
        return 0.0
    hyf1 = hyp2f1(1.0, 1.0 - derived.delta, 2.0 - derived.delta, -cfg.tau_bs)
    cell = (
        2.0 * derived.q_u * derived.lambda_ut * cfg.tau_bs * hyf1
        / (cfg.k_tones * (cfg.alpha - 2.0))
    )
    d2d = (
        2.0 * math.pi * derived.lambda_dt * (cfg.tau_bs * derived.eta_p) ** derived.delta
        / (cfg.k_tones * _alpha_sin(cfg.alpha))
    )
    return cfg.lambda_bs / (cfg.lambda_bs + cell + d2d)


def cp_dr_ofdma_underlaid(cfg: NetworkConfig, derived: DerivedIntensities) -> float:
    """D2D coverage with K orthogonal tones shared by both tiers."""
    _require(cfg, "ofdma", "underlaid")
    rho = math.pi * cfg.xi + (
        2.0 * math.pi**2 * cfg.tau_dr**derived.delta
        * (derived.lambda_dt + derived.q_u * derived.lambda_ut * derived.eta_p**-derived.delta)
        / (cfg.k_tones * _alpha_sin(cfg.alpha))
    )
    return _rayleigh_mass(cfg.xi, rho, cfg.tau_dis)


# SCMA underlaid; q_d thins the D2D interferer field. The full-activation
# forms are the q_d = 1 slice of the same expressions, so both entry
# points share one code path.


def _hyf2(cfg: NetworkConfig, derived: DerivedIntensities) -> float:
    tau = cfg.tau_bs / cfg.n_c
    return hyp2f1(float(cfg.n_c), -derived.delta, 1.0 - derived.delta, -tau) - 1.0


def _cp_scma_underlaid(
    cfg: NetworkConfig, derived: DerivedIntensities, q_d: float
) -> tuple[float, float]:
    prod = scma_interference_product(cfg.n_c, cfg.alpha)
    asin = _alpha_sin(cfg.alpha)
    j = cfg.j_codebooks
    tau_bs = cfg.tau_bs / cfg.n_c
    if cfg.lambda_bs == 0:
        cp_bs = 0.0
    else:
        cell = derived.q_u * derived.lambda_ut * _hyf2(cfg, derived) / j
        d2d = (
            2.0 * math.pi * q_d * derived.lambda_dt
            * (tau_bs * derived.eta_p) ** derived.delta * prod / (j * asin)
        )
        cp_bs = cfg.lambda_bs / (cfg.lambda_bs + cell + d2d)
    rho = d2d_success_exponent(cfg, derived, q_d)
    return cp_bs, _rayleigh_mass(cfg.xi, rho, cfg.tau_dis)


def d2d_success_exponent(
    cfg: NetworkConfig, derived: DerivedIntensities, q_d: float = 1.0
) -> float:
    """Exponential decay rate of D2D success in squared link length.

    This is the rho appearing in pi xi / rho * (1 - exp(-rho tau_dis^2));
    rho * tau_dis^2 is the sparseness measure the activation optimum
    branches on.
    """
    _require(cfg, "scma", "underlaid")
    tau = cfg.tau_dr / cfg.n_c
    prod = scma_interference_product(cfg.n_c, cfg.alpha)
    return math.pi * cfg.xi + (
        2.0 * math.pi**2 * tau**derived.delta
        * (q_d * derived.lambda_dt + derived.q_u * derived.lambda_ut * derived.eta_p**-derived.delta)
        * prod / (cfg.j_codebooks * _alpha_sin(cfg.alpha))
    )


def cp_bs_scma_underlaid(cfg: NetworkConfig, derived: DerivedIntensities) -> float:
    """Uplink coverage with J codebooks of N_C tones over K shared tones."""
    _require(cfg, "scma", "underlaid")
    return _cp_scma_underlaid(cfg, derived, 1.0)[0]


def cp_dr_scma_underlaid(cfg: NetworkConfig, derived: DerivedIntensities) -> float:
    """D2D coverage with J codebooks of N_C tones over K shared tones."""
    _require(cfg, "scma", "underlaid")
    return _cp_scma_underlaid(cfg, derived, 1.0)[1]


def cp_with_activation(
    cfg: NetworkConfig, derived: DerivedIntensities, q_d: float
) -> tuple[float, float]:
    """(cellular, D2D) coverage when each D2D pair transmits w.p. q_d."""
    _require(cfg, "scma", "underlaid")
    if not 0.0 <= q_d <= 1.0:
        raise ValueError(f"q_d = {q_d} outside [0, 1]")
    return _cp_scma_underlaid(cfg, derived, q_d)


# SCMA overlaid: J_C codebooks for cellular, J_D = J - J_C for D2D, so
# each tier sees only its own interference.


def cp_overlaid(cfg: NetworkConfig, derived: DerivedIntensities) -> tuple[float, float]:
    """(cellular, D2D) coverage under disjoint codebook allocation."""
    _require(cfg, "scma", "overlaid")
    j_d = cfg.j_codebooks - cfg.j_cell
    if cfg.lambda_bs == 0:
        cp_bs = 0.0
    else:
        cell = derived.q_u * derived.lambda_ut * _hyf2(cfg, derived) / cfg.j_cell
        cp_bs = cfg.lambda_bs / (cfg.lambda_bs + cell)
    tau = cfg.tau_dr / cfg.n_c
    prod = scma_interference_product(cfg.n_c, cfg.alpha)
    rho = math.pi * cfg.xi + (
        2.0 * math.pi**2 * tau**derived.delta * cfg.q_d * derived.lambda_dt
        * prod / (j_d * _alpha_sin(cfg.alpha))
    )
    return cp_bs, _rayleigh_mass(cfg.xi, rho, cfg.tau_dis)


# ASE and scheme comparison


def coverage_pair(cfg: NetworkConfig, derived: DerivedIntensities) -> tuple[float, float]:
    """Dispatch to the coverage formulas matching cfg's scheme and mode."""
    if cfg.coexistence == "overlaid":
        return cp_overlaid(cfg, derived)
    if cfg.access_scheme == "ofdma":
        return cp_bs_ofdma_underlaid(cfg, derived), cp_dr_ofdma_underlaid(cfg, derived)
    return cp_with_activation(cfg, derived, cfg.q_d)


def ase_report(
    cfg: NetworkConfig, derived: DerivedIntensities, cps: tuple[float, float]
) -> CoverageReport:
    """Fold coverage into ASE: admitted transmitter density times
    per-link rate. Cellular admits q_u lambda_ut, D2D admits
    q_d lambda_dt."""
    cp_c, cp_d = cps
    ase_c = derived.q_u * derived.lambda_ut * cp_c * math.log1p(cfg.tau_bs)
    ase_d = cfg.q_d * derived.lambda_dt * cp_d * math.log1p(cfg.tau_dr)
    return CoverageReport(
        cp_cellular=cp_c,
        cp_d2d=cp_d,
        ase_cellular=ase_c,
        ase_d2d=ase_d,
        ase_total=ase_c + ase_d,
        provenance="analytic",
        ci_halfwidth=0.0,
    )


def analytic_report(cfg: NetworkConfig) -> CoverageReport:
    """Convenience: derive intensities, evaluate coverage, fold to ASE."""
    derived = derive_intensities(cfg)
    return ase_report(cfg, derived, coverage_pair(cfg, derived))


def ase_gain(ofdma_report: CoverageReport, scma_report: CoverageReport) -> float:
    """Total-ASE ratio of two reports computed at identical geometry."""
    if ofdma_report.ase_total == 0.0:
        raise ZeroDivisionError("reference (OFDMA) total ASE is zero")
    return scma_report.ase_total / ofdma_report.ase_total


def eta_ase_hat(cfg_ofdma: NetworkConfig, cfg_scma: NetworkConfig) -> float:
    """Admitted-intensity form of the ASE gain, valid when both tiers use
    one SIR threshold: density of covered transmitters under SCMA over
    the same density under OFDMA."""
    for cfg in (cfg_ofdma, cfg_scma):
        if cfg.tau_bs != cfg.tau_dr:
            raise ValueError("admitted-intensity gain requires tau_bs == tau_dr")
    if cfg_ofdma.access_scheme != "ofdma" or cfg_scma.access_scheme != "scma":
        raise ValueError("arguments must be (ofdma config, scma config)")
    d_o = derive_intensities(cfg_ofdma)
    d_s = derive_intensities(cfg_scma)
    cp_o = coverage_pair(cfg_ofdma, d_o)
    cp_s = coverage_pair(cfg_scma, d_s)
    den = d_o.q_u * d_o.lambda_ut * cp_o[0] + cfg_ofdma.q_d * d_o.lambda_dt * cp_o[1]
    num = d_s.q_u * d_s.lambda_ut * cp_s[0] + cfg_scma.q_d * d_s.lambda_dt * cp_s[1]
    if den == 0.0:
        raise ZeroDivisionError("reference (OFDMA) admitted intensity is zero")
    return num / den
