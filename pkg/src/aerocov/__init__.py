"""Coverage probability of UAVs served by a ground-station network.

Analytic (stochastic geometry + quadrature) and Monte Carlo engines share the
same ``Scenario`` description; ``aerocov.cli`` drives parameter sweeps.
"""

from .analytic import (
    QuadratureConfig,
    backhaul_probability,
    conditional_backhaul,
    laplace_interference,
)
from .antenna import AntennaKind, IlluminatedRegion, SectorAntennaParams, UavAntenna, illuminated_region
from .channel import LosState, NetworkParams
from .config import ConfigError, load_config
from .environment import EnvironmentParams, LinkGeometry, los_probability
from .montecarlo import DeploymentKind, TrialConfig, estimate_coverage
from .scenario import CoverageResult, Scenario, gs_uptilt
from .sweep import run_sweep

__version__ = "0.1.0"
