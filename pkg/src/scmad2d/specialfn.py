"""Special functions used by the closed-form network analysis.

Three ingredients: the Gauss hypergeometric function 2F1 restricted to the
nonpositive arguments that the coverage formulas produce, the cell-load
distribution of nearest-BS association (a Gamma-mixed Poisson with shape
3.575), and the per-tone moment product that SCMA codeword interference
introduces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

# Shape parameter of the Gamma fit to normalized Voronoi cell areas; the
# resulting mixed Poisson is the standard cell-load model.
CELL_LOAD_SHAPE = 3.575

_MAX_TERMS = 2_000_000
_TERM_TOL = 1e-15


class ConvergenceError(RuntimeError):
    """Series failed to reach tolerance within the iteration budget."""


class TruncationError(RuntimeError):
    """Truncated cell-load PMF retained less mass than required."""


def _gauss_series(a: float, b: float, c: float, z: float) -> float:
    """Sum the defining 2F1 series; caller guarantees |z| < 1."""
    term = 1.0
    total = 1.0
    quiet = 0
    for n in range(_MAX_TERMS):
        term *= (a + n) * (b + n) * z / ((c + n) * (1.0 + n))
        total += term
        if abs(term) < _TERM_TOL * (1.0 + abs(total)):
            quiet += 1
            if quiet >= 3:
                return total
        else:
            quiet = 0
    raise ConvergenceError(
        f"2F1 series did not converge for (a={a}, b={b}, c={c}, z={z})"
    )


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.

    Evaluation path: the defining Gauss series for 0 <= z < 1, and the
    Pfaff transform (1-z)^(-a) * 2F1(a, c-b; c; z/(z-1)) for z < 0,
    which maps the argument into (0, 1). Applying the transform on all
    of z < 0 (not only past -1) matters: the direct series just above
    z = -1 would need ~1/(1-|z|) terms. All call sites here have z <= 0.

    Parameters
    ----------
    a, b, c : real parameters; c must not be a non-positive integer.
    z : real argument, z < 1.

    Returns
    -------
    float, with absolute error well below 1e-10 on the parameter ranges
    exercised by the coverage formulas.
    """
    if c <= 0 and float(c).is_integer():
        raise ValueError(f"c = {c} is a non-positive integer (pole of 2F1)")
    if a == 0.0 or b == 0.0:
        return 1.0
    if not z < 1.0:
        raise ValueError(f"z = {z} outside the supported domain z < 1")
    if z < 0.0:
        w = z / (z - 1.0)  # in (0, 1)
        return (1.0 - z) ** (-a) * _gauss_series(a, c - b, c, w)
    return _gauss_series(a, b, c, z)


def cell_load_pmf(mean_load: float, m: int) -> float:
    """P{N = m}: probability that a typical cell serves m users.

    The load of the cell a uniformly placed user lands in, when users form
    a homogeneous PPP and associate with the nearest BS, is modeled as a
    Poisson random variable mixed over the Gamma(3.575) area fit:

        P{N = m} = b^b Gamma(m+b) mu^m / (Gamma(b) m! (b+mu)^(m+b)),

    with b = 3.575 and mu the mean load (user density over BS density).
    Evaluated in log-space; Gamma(m+b) overflows near m = 170 otherwise.
    """
    if mean_load < 0:
        raise ValueError("mean_load must be >= 0")
    if m < 0 or int(m) != m:
        raise ValueError("m must be a non-negative integer")
    if mean_load == 0:
        return 1.0 if m == 0 else 0.0
    b = CELL_LOAD_SHAPE
    return math.exp(
        b * math.log(b)
        + math.lgamma(m + b)
        - math.lgamma(b)
        - math.lgamma(m + 1)
        + m * math.log(mean_load)
        - (m + b) * math.log(b + mean_load)
    )


def _truncation_m_max(mean_load: float) -> int:
    b = CELL_LOAD_SHAPE
    return int(mean_load + 40.0 * math.sqrt(mean_load * (1.0 + mean_load / b)) + 50.0)


@dataclass(frozen=True)
class CellLoadPmf:
    """Truncated cell-load PMF with a hard guarantee on retained mass.

    Fields
    ------
    mean_load : mean number of users per cell.
    shape_b : Gamma shape of the cell-area fit (3.575).
    truncation_m_max : largest load kept; chosen adaptively so the retained
        mass exceeds 1 - 1e-9 for mean loads up to 1e4.
    masses : P{N = m} for m in [0, truncation_m_max], log-space evaluated.
    """

    mean_load: float
    shape_b: float = CELL_LOAD_SHAPE
    truncation_m_max: int = field(init=False)
    masses: np.ndarray = field(init=False, repr=False)

    _MASS_TOL = 1e-9

    def __post_init__(self):
        if self.mean_load < 0:
            raise ValueError("mean_load must be >= 0")
        m_max = _truncation_m_max(self.mean_load)
        if self.mean_load == 0:
            masses = np.zeros(m_max + 1)
            masses[0] = 1.0
        else:
            b = self.shape_b
            mu = self.mean_load
            m = np.arange(m_max + 1)
            logp = (
                b * math.log(b)
                + _sp.gammaln(m + b)
                - _sp.gammaln(b)
                - _sp.gammaln(m + 1)
                + m * math.log(mu)
                - (m + b) * math.log(b + mu)
            )
            masses = np.exp(logp)
        if masses.sum() < 1.0 - self._MASS_TOL:
            raise TruncationError(
                f"cell-load PMF at mean_load={self.mean_load} retains only "
                f"{masses.sum():.12f} of its mass up to m={m_max}"
            )
        object.__setattr__(self, "truncation_m_max", m_max)
        object.__setattr__(self, "masses", masses)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.truncation_m_max + 1)


def scma_interference_product(n_c: int, alpha: float) -> float:
    """Product over tones of the fractional moments a Gamma(N_C) interferer
    fade contributes, prod_{n=2}^{N_C} (2/((n-1) alpha) + 1).

    Equals 1 for n_c <= 1 (empty product); strictly increasing in n_c and
    strictly decreasing in alpha for n_c >= 2.
    """
    if int(n_c) != n_c or n_c < 1:
        raise ValueError("n_c must be a positive integer")
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    out = 1.0
    for n in range(2, int(n_c) + 1):
        out *= 2.0 / ((n - 1) * alpha) + 1.0
    return out
