"""Coverage, spectral efficiency, and resource allocation for SCMA and OFDMA
cellular networks with device-to-device (D2D) links, in two independent
engines: closed-form stochastic-geometry analysis and a from-scratch Monte
Carlo point-process simulator."""

from .topology import NetworkConfig, DerivedIntensities, derive_intensities
from .analytics import CoverageReport
from .simulator import Snapshot, McEstimate, estimate_coverage

__version__ = "0.1.0"

__all__ = [
    "NetworkConfig",
    "DerivedIntensities",
    "derive_intensities",
    "CoverageReport",
    "Snapshot",
    "McEstimate",
    "estimate_coverage",
    "__version__",
]
