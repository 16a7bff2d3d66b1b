"""Domain errors.

Input and verification problems are ValueErrors so callers can catch broadly;
NumericalFailure is the one arithmetic error, raised only where a stopped
integration leaves nothing to return.
"""


class DimensionError(ValueError):
    """Operands live in different phase spaces (or the wrong one)."""


class ParseError(ValueError):
    """Syntax error in a polynomial expression, with the offending position."""

    def __init__(self, message: str, text: str = '', position: int = 0):
        super().__init__(f"{message} at position {position}")
        self.text = text
        self.position = position


class UnknownSymbolError(ParseError):
    pass


class NegativeExponentError(ParseError):
    pass


class ParameterError(ValueError):
    """A system or integrator parameter is out of range."""


class UnknownSystemError(ValueError):
    pass


class NonFiniteError(ValueError):
    pass


class NonSymplecticError(ValueError):
    """Operation needs a Hamiltonian system but got a raw vector field."""


class BracketTableError(ValueError):
    """Momentum components disagree with the group's declared bracket table."""


class NonInvariantError(ValueError):
    pass


class ClosureError(ValueError):
    """Some {j_a, h} is not a polynomial in the momenta."""


class DegenerateMomentumError(ValueError):
    """sigma = 0: the moving line is undefined."""


class InconsistentLiftError(ValueError):
    pass


class SplitError(ValueError):
    """The invariant/collective split of h does not commute."""


class NumericalFailure(ArithmeticError):
    """An integration a result depends on stopped early (blow-up or step limit)."""
