"""R-CoNMF: robust collaborative NMF for hyperspectral unmixing."""

from .core import (
    AdmmConfig,
    ConfigError,
    ContractError,
    DegenerateDataError,
    InfeasibleLibraryError,
    InvalidOrderError,
    LibraryError,
    RconmfError,
    SceneMatrix,
    SolverConfig,
    UnmixResult,
    l21_norm,
    objective,
)
from .metrics import MetricsReport, evaluate, match_endmembers, sad_degrees
from .purepixel import PurePixelInit, spa_select
from .solver import a_step, group_soft_threshold, project_simplex_columns, run_pao, x_step
from .subspace import AffineSubspace, fit_affine_subspace, from_coords, to_coords
from .synthgen import GeneratorConfig, SpectralLibrary, bundled_library, generate_scene, load_library

__version__ = "0.1.0"
