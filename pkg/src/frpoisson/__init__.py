"""Verification toolkit for Fock–Rosly Poisson structures on moduli of flat connections."""

from .checks import CheckContext, CheckResult, run_check
from .ciliated_graph import (
    CiliatedGraph,
    LocalMovePivot,
    Orientation,
    Skeleton,
    builtin_skeleton,
    fuse,
    local_move,
    reverse_edge,
)
from .cli_runner import Report, emit_report, main, run_checks
from .group_numerics import NumericsConfig, field_is_zero, random_point
from .invariant_calculus import (
    fock_rosly,
    fuse_poisson,
    pi_gamma,
    q_s,
    quasi_from_poisson,
    r_gamma,
)
from .lie_core import (
    AlgebraMismatchError,
    AltTensor,
    InvariantError,
    LieAlgebra,
    Tensor,
    builtin_algebra,
    schouten,
)
from .r_matrix import RMatrix, builtin_r_matrix, cyb_check, verify_section2
from .scenario import Scenario, ScenarioError, UnknownCheckError, load_scenario
