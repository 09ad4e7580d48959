"""Cost modeling and metaheuristic design-space exploration for multi-CLP
CNN accelerators on FPGAs."""

from .arch import (
    Architecture,
    ConfigError,
    LayerConfig,
    Platform,
    Precision,
    load_architecture,
    load_platform,
    resolve_architecture,
    resolve_platform,
)
from .design import ClpConfig, Evaluator, InfeasiblePlatformError, Move, Solution, \
    neighbor, random_solution
from .tiling import NoFeasibleTilingError, Tiling, optimize_clp_tilings, \
    optimize_design_tilings
from .annealing import SaParams, SearchResult, sa_run
from .tabu import TsParams, ts_run
from .oracle import OracleBounds, SearchSpaceTooLarge, exhaustive_search, simulate_clp

__version__ = "0.1.0"
