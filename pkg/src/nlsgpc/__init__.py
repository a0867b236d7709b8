"""Soliton scattering on a point defect and its critical velocity by polynomial chaos."""

from .bisection import BisectionResult, bisect_critical, find_bracket
from .config import RunConfig, load_config
from .errors import (
    BlowUpError,
    BracketError,
    DetectionError,
    DomainError,
    InconclusiveError,
    NlsGpcError,
    NumericalError,
    ResolutionError,
    ValidationError,
    WrapAroundWarning,
)
from .gpc import (
    CriticalResult,
    GpcEnsemble,
    convergence_study,
    critical_velocity,
    detect_separation,
    energy_ratio,
    mean_mode,
    run_ensemble,
)
from .grid import Grid, WaveField, make_grid
from .models import PdeModel, StepSurrogate
from .quadrature import QuadratureRule, eval_basis, gauss_rule
from .soliton import (
    DefectParams,
    SolitonParams,
    bound_state,
    exact_free_soliton,
    hamiltonian,
    initial_soliton,
)
from .ssfm import Outcome, SolverConfig, Trajectory, classify, propagate

__version__ = "0.1.0"
