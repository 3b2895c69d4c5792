"""Discrimination of bipartite process matrices by semidefinite programming."""
from .discrimination import (
    DistanceResult,
    DiscriminationResult,
    Strategy,
    base_norm,
    build_realization,
    classify,
    distance_to_class,
    p_adapt,
    p_succ,
    p_succ_free,
    solve_adaptive,
)
from .errors import DomainError, LabelError, NotHermitianError, ProcDiscError, SolverError, ValidationError
from .process_matrices import (
    ProcessClass,
    ProcessMatrix,
    make_cns_example,
    make_comb_ab,
    make_comb_ba,
    make_free,
    project_LV,
    validate_def1,
    validate_def2,
)
from .tensor_core import HermitianOperator, LabelledOperator, SystemLabel

__version__ = "0.1.0"

__all__ = [
    "DiscriminationResult", "DistanceResult", "DomainError", "HermitianOperator", "LabelError",
    "LabelledOperator", "NotHermitianError", "ProcDiscError", "ProcessClass", "ProcessMatrix",
    "SolverError", "Strategy", "SystemLabel", "ValidationError", "base_norm", "build_realization",
    "classify", "distance_to_class", "make_cns_example", "make_comb_ab", "make_comb_ba", "make_free",
    "p_adapt", "p_succ", "p_succ_free", "project_LV", "solve_adaptive", "validate_def1", "validate_def2",
]
