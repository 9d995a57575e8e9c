"""
Error Types for the Synthetic Control Toolkit
"""

from typing import Optional


class SynthControlError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 1
    code_name = "error"


class PanelValidationError(SynthControlError, ValueError):
    """Panel content violates a structural requirement"""

    exit_code = 2
    code_name = "validation"


class PanelParseError(PanelValidationError):
    """A CSV cell or row could not be parsed"""

    code_name = "parse"

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EstimationInputError(SynthControlError, ValueError):
    """Precondition of an estimation operation is not met"""

    exit_code = 2
    code_name = "validation"


class ConfigurationError(SynthControlError, ValueError):
    """Invalid configuration file, environment variable or flag combination"""

    exit_code = 2
    code_name = "config"


class SolverConvergenceError(SynthControlError):
    """Weight solver stopped before reaching tolerance"""

    exit_code = 3
    code_name = "solver"

    def __init__(self, message: str, iterations: int, primal_residual: float, dual_residual: float):
        super().__init__(
            f"{message} (iterations={iterations}, primal_residual={primal_residual:.3e}, "
            f"dual_residual={dual_residual:.3e})"
        )
        self.iterations = iterations
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual


class HullLPError(SynthControlError):
    """Convex hull feasibility LP did not solve"""

    exit_code = 3
    code_name = "lp"

    def __init__(self, message: str, status: int, iterations: int):
        super().__init__(f"{message} (status={status}, iterations={iterations})")
        self.status = status
        self.iterations = iterations
