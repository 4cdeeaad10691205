"""Network model and the intensities derived from it.

A single frozen `NetworkConfig` describes the geometry (BS, cellular user,
and D2D transmitter densities), the radio parameters, and the multiple
access scheme. `derive_intensities` turns it into the quantities the
coverage formulas consume: effective transmitter densities after mode
selection, the power-normalization ratio, and the cellular access
probability under limited resources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specialfn import CellLoadPmf


@dataclass(frozen=True)
class NetworkConfig:
    """Immutable description of one network scenario.

    Densities are in nodes per square meter, powers in milliwatts, SIR
    thresholds linear. `tau_dis` is the D2D mode-selection radius in
    meters (math.inf disables truncation). `xi` parameterizes the
    Rayleigh D2D link-length law 2 pi xi x exp(-xi pi x^2).

    `access_scheme` selects OFDMA (`k_tones` orthogonal resources) or
    SCMA (`j_codebooks` codebooks of `n_c` tones each over the same
    `k_tones` tones). `coexistence` is "underlaid" (D2D shares all
    resources) or "overlaid" (cellular gets `j_cell` codebooks, D2D the
    remaining `j_codebooks - j_cell`).
    """

    lambda_bs: float = 5e-5
    lambda_u: float = 1e-3
    lambda_d: float = 2.5e-4
    p_u: float = 100.0
    p_d: float = 100.0
    alpha: float = 4.0
    xi: float = 5e-5
    tau_dis: float = math.inf
    tau_bs: float = 10.0
    tau_dr: float = 10.0
    k_tones: int = 20
    n_c: int = 2
    j_codebooks: int = 30
    j_cell: int | None = None
    q_d: float = 1.0
    coexistence: str = "underlaid"
    access_scheme: str = "scma"

    def __post_init__(self):
        for name in ("lambda_bs", "lambda_u", "lambda_d"):
            v = getattr(self, name)
            if not (v >= 0) or math.isnan(v):
                raise ValueError(f"{name} must be >= 0, got {v}")
        for name in ("p_u", "p_d", "xi"):
            v = getattr(self, name)
            if not (v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        if not (self.alpha > 2):
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        for name in ("tau_bs", "tau_dr"):
            v = getattr(self, name)
            if not (v > 0) or math.isnan(v):
                raise ValueError(f"{name} must be > 0, got {v}")
        if not (self.tau_dis > 0):
            raise ValueError(f"tau_dis must be > 0, got {self.tau_dis}")
        if self.access_scheme not in ("ofdma", "scma"):
            raise ValueError(f"unknown access_scheme {self.access_scheme!r}")
        if self.coexistence not in ("underlaid", "overlaid"):
            raise ValueError(f"unknown coexistence {self.coexistence!r}")
        if self.k_tones < 1:
            raise ValueError(f"k_tones must be >= 1, got {self.k_tones}")
        if self.access_scheme == "scma":
            if not 2 <= self.n_c < self.k_tones:
                raise ValueError(
                    f"n_c must satisfy 2 <= n_c < k_tones, got {self.n_c}"
                )
            if self.j_codebooks < 1:
                raise ValueError(f"j_codebooks must be >= 1, got {self.j_codebooks}")
        if self.coexistence == "overlaid":
            if self.access_scheme != "scma":
                raise ValueError("overlaid coexistence requires access_scheme='scma'")
            if self.j_cell is None:
                raise ValueError("overlaid coexistence requires j_cell")
            if not 1 <= self.j_cell < self.j_codebooks:
                raise ValueError(
                    f"j_cell must satisfy 1 <= j_cell < j_codebooks, got {self.j_cell}"
                )
        if not 0.0 <= self.q_d <= 1.0:
            raise ValueError(f"q_d must lie in [0, 1], got {self.q_d}")
        if self.access_scheme == "ofdma" and self.q_d != 1.0:
            raise ValueError("D2D activation probability is modeled for SCMA only")

    @property
    def n_resources(self) -> int:
        """Resources a cellular uplink competes for under this scheme."""
        if self.access_scheme == "ofdma":
            return self.k_tones
        if self.coexistence == "overlaid":
            return self.j_cell
        return self.j_codebooks

    @property
    def overloading_factor(self) -> float:
        """SCMA user capacity over tone count, J / K."""
        if self.access_scheme != "scma":
            raise ValueError("overloading factor is defined for SCMA only")
        return self.j_codebooks / self.k_tones


@dataclass(frozen=True)
class DerivedIntensities:
    """Effective intensities and ratios used by every coverage formula.

    lambda_ut : density of D2D users that fell back to cellular mode.
    lambda_dt : density of D2D transmitters that stayed in D2D mode.
    eta_p : D2D-over-cellular transmit power ratio, p_d / p_u.
    delta : 2 / alpha.
    q_u : probability a cellular uplink is granted a resource.
    """

    lambda_ut: float
    lambda_dt: float
    eta_p: float
    delta: float
    q_u: float


def access_probability(mean_load: float, n_resources: int) -> float:
    """Fraction of cell load that wins one of `n_resources` resources.

    Cells are scheduled fairly, so the grant probability of a typical
    user is E[min(N, R)] / E[N] under the cell-load PMF. Returns 1.0 for
    an empty network (mean_load = 0).
    """
    if n_resources < 1:
        raise ValueError("n_resources must be >= 1")
    if mean_load == 0:
        return 1.0
    pmf = CellLoadPmf(mean_load)
    served = np.minimum(pmf.support, n_resources)
    return min(float(served @ pmf.masses) / mean_load, 1.0)


def derive_intensities(cfg: NetworkConfig) -> DerivedIntensities:
    """Apply distance-based mode selection and resource-limited access.

    A potential D2D link of Rayleigh length r stays in D2D mode iff
    r <= tau_dis; P{r > tau_dis} = exp(-xi pi tau_dis^2) of the density
    lambda_d therefore joins the cellular uplink population.
    """
    if math.isinf(cfg.tau_dis):
        escape = 0.0
    else:
        escape = math.exp(-cfg.xi * math.pi * cfg.tau_dis**2)
    lambda_ut = cfg.lambda_u + cfg.lambda_d * escape
    lambda_dt = cfg.lambda_d * (1.0 - escape)
    if cfg.lambda_bs == 0:
        q_u = 0.0 if lambda_ut > 0 else 1.0
    else:
        q_u = access_probability(lambda_ut / cfg.lambda_bs, cfg.n_resources)
    return DerivedIntensities(
        lambda_ut=lambda_ut,
        lambda_dt=lambda_dt,
        eta_p=cfg.p_d / cfg.p_u,
        delta=2.0 / cfg.alpha,
        q_u=q_u,
    )


def d2d_link_length_pdf(x, xi: float):
    """Density of the D2D transmitter-receiver separation, Rayleigh with
    scale set by xi: f(x) = 2 pi xi x exp(-xi pi x^2) for x >= 0."""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0.0, 2.0 * math.pi * xi * x * np.exp(-xi * math.pi * x * x), 0.0)
