"""Exception hierarchy shared by every nashlab module."""


class NashLabError(Exception):
    """Base class for all library errors."""


class DimensionError(NashLabError, ValueError):
    """A profile, tensor or vector does not match the game's shape."""


class ModeError(NashLabError, TypeError):
    """Exact-rational and floating-point values were mixed."""


class InvalidGameError(NashLabError, ValueError):
    pass


class DeskScaleError(NashLabError, ValueError):
    """Input exceeds the sizes the exhaustive algorithms are meant for."""


class DomainError(NashLabError):
    """Base for errors that describe the mathematical input (CLI exit code 3)."""


class DegenerateGameError(DomainError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SubspaceError(DomainError, ValueError):
    """Malformed affine subspace (zero or non-tangent direction, bad rank)."""


class OracleError(DomainError):
    """A dynamic oracle did not behave like the dynamic it claims to be."""


class ClaimsFailed(DomainError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ProtocolError(DomainError):
    pass


class InvariantViolation(NashLabError):
    """Internal invariant broken (CLI exit code 4)."""


class LyapunovViolation(InvariantViolation):
    def __init__(self, x, before, after, step):
        super().__init__(
            f"not a Lyapunov pair: L increased from {before!r} to {after!r} at step {step}"
        )
        self.x = x
        self.before = before
        self.after = after
        self.step = step


class StepLimitExceeded(InvariantViolation):
    def __init__(self, steps, x):
        super().__init__(f"no convergence within {steps} steps")
        self.steps = steps
        self.x = x


class LeftDomainError(InvariantViolation):
    def __init__(self, x, step, violation):
        super().__init__(f"profile left the profile space by {violation:.3g} at step {step}")
        self.x = x
        self.step = step
        self.violation = violation
