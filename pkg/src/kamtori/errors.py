"""Exception types shared across the package.

Everything user-facing raises one of these instead of a bare ValueError,
so callers (and the CLI) can tell configuration mistakes apart from
genuine mathematical obstructions.
"""


class KamtoriError(Exception):
    pass


class BudgetExceededError(KamtoriError, RuntimeError):
    """An enumeration or iteration exceeded its configured budget."""


class NonPositiveTermError(KamtoriError, ValueError):
    """A decay sequence contains a non-positive term where positivity is required."""


class ShapeMismatchError(KamtoriError, ValueError):
    """Operands have incompatible dimensions, variable counts or truncation orders."""


class ModeMixError(KamtoriError, TypeError):
    """Exact (rational) and floating-point coefficients were mixed in one computation."""


class OrderTooLowError(KamtoriError, ValueError):
    """A series has nonzero terms below the minimal order required by the operation."""


class NonInvertibleLinearPartError(KamtoriError, ValueError):
    """A substitution's linear part is singular, so composition cannot be inverted."""


class SmallDivisorError(KamtoriError, ArithmeticError):
    """A divisor fell below the configured floor during a normal-form division."""


class ResonanceError(KamtoriError, ValueError):
    """A term that must be non-resonant (or must lie in the solvable range) is not."""


class ClassMembershipError(KamtoriError, ValueError):
    """A frequency vector fails a class-membership precondition."""


class NotEllipticError(KamtoriError, ValueError):
    """A quadratic part does not have the elliptic shape the mode requires."""


class CertificateError(KamtoriError, RuntimeError):
    """A final object failed its own a-posteriori certificate check."""


class ConvergenceError(KamtoriError, RuntimeError):
    """An iteration stalled or diverged before reaching its target."""
