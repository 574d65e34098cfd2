"""Exception hierarchy shared by all finslerkit modules."""


class FinslerError(Exception):
    """Base class for every error raised by finslerkit."""


class ExpressionSyntaxError(FinslerError, ValueError):
    """Malformed expression text. ``position`` is the 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownSymbol(FinslerError, ValueError):
    def __init__(self, name):
        super().__init__(f"unknown symbol {name!r}")
        self.name = name


class DefinitionFileError(FinslerError, ValueError):
    """Malformed Lagrangian definition file."""

    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class DomainError(FinslerError, ArithmeticError):
    """A function was evaluated outside its real domain (log/sqrt/pow/division)."""


class DegenerateHessian(FinslerError, ArithmeticError):
    def __init__(self, det, cond, message="metric block is degenerate"):
        super().__init__(f"{message}: det={det:.3e}, cond={cond:.3e}")
        self.det = det
        self.cond = cond


class SingularVBlock(FinslerError, ArithmeticError):
    pass


class DimensionMismatch(FinslerError, ValueError):
    pass


class DimensionTooLarge(FinslerError, ValueError):
    pass


class NotPositiveDefinite(FinslerError, ValueError):
    pass


class FormMismatch(FinslerError, ValueError):
    pass


class PatchTooSmall(FinslerError, ValueError):
    pass


class DisconnectedPatch(FinslerError, ValueError):
    """The requested sites are not linked by any chain of Lipschitz constraints."""


class ShootingDiverged(FinslerError, ArithmeticError):
    def __init__(self, iterations, residual):
        super().__init__(f"shooting did not converge after {iterations} iterations "
                         f"(residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class SolverStalled(FinslerError, ArithmeticError):
    def __init__(self, iterations, gap):
        super().__init__(f"distance solver stalled after {iterations} iterations "
                         f"(gap estimate {gap:.3e})")
        self.iterations = iterations
        self.gap = gap
