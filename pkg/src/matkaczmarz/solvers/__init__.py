"""Row-action solvers for ``A X B = C``."""

from .driver import default_stop, effective_problem, resolve_alpha, solve, warmup
from .problem import (GREEDY, METHODS, RANDOMIZED, IterateState, Problem,
                      SelectionDiagnostics, SolveReport, SolverConfig,
                      StopRule, Trace)
from .steps import (ZeroResidualError, cyclic_index, gi_step, greedy_sample,
                    greedy_threshold, mwrbk_select, rbk_sample, residual_row,
                    residual_row_step, row_step, sweep_formula_step,
                    transform_fullcol, transform_fullrow, update_norm)

__all__ = [
    "GREEDY", "METHODS", "RANDOMIZED", "IterateState", "Problem",
    "SelectionDiagnostics", "SolveReport", "SolverConfig", "StopRule", "Trace",
    "ZeroResidualError", "cyclic_index", "default_stop", "effective_problem",
    "gi_step", "greedy_sample", "greedy_threshold", "mwrbk_select",
    "rbk_sample", "residual_row", "residual_row_step", "resolve_alpha",
    "row_step", "solve", "sweep_formula_step", "transform_fullcol",
    "transform_fullrow", "update_norm", "warmup",
]
