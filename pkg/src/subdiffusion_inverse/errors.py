"""Exceptions raised by the solvers.

Each solver failure maps to a distinct CLI exit code (see :mod:`.cli`).
Mode numbers carried by the exceptions are 1-based, like the eigenvalue
numbering lambda_1 <= lambda_2 <= ...
"""

from __future__ import annotations


class SolverError(Exception):
    """Base class for failures of the forward and inverse solvers."""

    exit_code = 10


class OrthogonalityViolation(SolverError):
    """Data has a nonzero component on a critical mode, so no solution exists."""

    exit_code = 3

    def __init__(self, modes, what: str = "data"):
        self.modes = tuple(int(k) for k in modes)
        self.what = what
        super().__init__(
            f"{what} is not orthogonal to the critical eigenfunctions; "
            f"violating modes: {list(self.modes)}"
        )


class DegenerateDenominator(SolverError):
    """The source-recovery denominator vanishes (numerically) for a mode."""

    exit_code = 4

    def __init__(self, mode: int, value: float):
        self.mode = int(mode)
        self.value = float(value)
        super().__init__(f"degenerate denominator {value:.3e} at mode {mode}")


class BadGeometry(SolverError):
    """The observation time is not admissible for the requested problem."""

    exit_code = 5


class NearCriticalDenominator(SolverError):
    """E_rho(-lambda_k xi0^rho) - alpha is tiny for a mode not classified critical."""

    exit_code = 6

    def __init__(self, mode: int, value: float):
        self.mode = int(mode)
        self.value = float(value)
        super().__init__(
            f"|E_rho(-lambda xi0^rho) - alpha| = {abs(value):.3e} at mode {mode} "
            "lies inside the critical band but the mode is not in the critical set"
        )


class UnderflowGuard(SolverError):
    """E_rho(-lambda_k xi^rho) underflowed; the truncation level is too aggressive."""

    exit_code = 7
