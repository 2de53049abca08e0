"""Kaczmarz-type row-action solvers for the matrix equation ``A X B = C``.

Subpackages and modules:

``linalg``
    norms, factorizations and the minimum-norm oracle
``solvers``
    row steps, selection rules and the solve drivers
``analysis``
    contraction bounds, sweep operators and spectral radii
``imaging``
    blur models, PSNR and the deblurring pipeline
``harness``
    Matrix Market input, experiment runs, trace files and the CLI
"""

from .solvers import METHODS, Problem, SolverConfig, StopRule, solve

__version__ = "0.1.0"

__all__ = ["METHODS", "Problem", "SolverConfig", "StopRule", "solve", "__version__"]
