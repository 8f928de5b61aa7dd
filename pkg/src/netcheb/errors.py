"""Exception hierarchy shared by the solvers and the CLI."""


class NetchebError(Exception):
    pass


class ConfigError(NetchebError, ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


class SolverFailure(NetchebError, RuntimeError):
    """Any numerical failure during a run (CLI exit code 2)."""


class CflViolation(SolverFailure):
    def __init__(self, dt, bound):
        self.dt = dt
        self.bound = bound
        super().__init__(f"time step {dt:.6g} exceeds the CFL bound {bound:.6g}")


class NoSignChange(SolverFailure):
    """Junction residual has the same strict sign at both ends of [0, u_max]."""


class MaxIterations(SolverFailure):
    pass


class NonConvergence(SolverFailure):
    def __init__(self, message, residual_norm=None):
        self.residual_norm = residual_norm
        super().__init__(message)


class ZeroReference(NetchebError, ZeroDivisionError):
    pass


class NonPositiveError(NetchebError, ValueError):
    pass
