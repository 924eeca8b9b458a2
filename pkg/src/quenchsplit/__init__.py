"""Implicit nonlinear operator splitting for 1-D quenching-combustion problems."""

from quenchsplit.grid import Grid, build_graded, build_uniform, validate
from quenchsplit.linalg import (
    TridiagonalOperator,
    WeightedNormContext,
    assemble_A,
    log_norm_2,
    solve_shifted,
    weighted_norm,
)
from quenchsplit.model import (
    InitialCondition,
    Nonlinearity,
    ProblemSpec,
    check_admissible,
    kawarada,
    zero_initial,
)
from quenchsplit.semidiscrete import OracleConfig, integrate_oracle, integrate_stiff, oracle_at
from quenchsplit.splitting import (
    propose_tau,
    quench_time_upper_bound,
    run_to_quench,
    splitting_step,
    sub_unity_bound,
)
from quenchsplit.studies import (
    OrderReport,
    converge_space,
    converge_time,
    find_critical_a,
    validate_linalg,
)

__all__ = [
    "Grid",
    "build_uniform",
    "build_graded",
    "validate",
    "TridiagonalOperator",
    "WeightedNormContext",
    "assemble_A",
    "weighted_norm",
    "log_norm_2",
    "solve_shifted",
    "Nonlinearity",
    "InitialCondition",
    "ProblemSpec",
    "kawarada",
    "zero_initial",
    "check_admissible",
    "OracleConfig",
    "integrate_oracle",
    "oracle_at",
    "propose_tau",
    "splitting_step",
    "run_to_quench",
    "sub_unity_bound",
    "quench_time_upper_bound",
    "integrate_stiff",
    "OrderReport",
    "converge_time",
    "converge_space",
    "find_critical_a",
    "validate_linalg",
]
