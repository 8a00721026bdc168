"""Binary model generation, warm starts and the hierarchical decomposition."""

from .check import Assignment, FeasibilityReport, MissingVariable, RowViolation, UnknownVariable, check_assignment
from .model import (
    InfeasibleFixing,
    MilpModel,
    ModelShape,
    ModelTooLarge,
    Row,
    build_crp_loading_model,
    build_model,
    build_mpsp_model,
    constraint_count,
    family_constraint_counts,
    family_variable_counts,
    parse_var_name,
    var_name,
    variable_count,
)
from .warmstart import (
    InconsistentSolution,
    InvalidPlan,
    emit_warm_start,
    parse_solution,
    plan_to_assignment,
    read_solution,
    read_warm_start,
)
from .lp import LpFile, emit_lp, read_lp
from .hierarchical import HierarchicalResult, StageFailed, ship_valuation, solve_hierarchical, solve_hierarchical_external
