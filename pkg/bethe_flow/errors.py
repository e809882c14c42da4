from typing import Optional


class BetheFlowError(Exception):
    """Base class for every error raised by bethe_flow"""


class UnknownVariable(BetheFlowError, ValueError):
    def __init__(self, variable_id: int, where: str = "generator"):
        self.variable_id = variable_id
        super().__init__(f"Variable {variable_id} used in {where} is not declared")


class RegionNotInLattice(BetheFlowError, KeyError):
    def __init__(self, region):
        self.region = region
        super().__init__(f"Region {region} is not in the lattice")

    def __str__(self):
        return self.args[0]


class LatticeMismatch(BetheFlowError, ValueError):
    pass


class NotASubregion(BetheFlowError, ValueError):
    def __init__(self, small, large):
        super().__init__(f"{small} is not a subregion of {large}")


class ShapeMismatch(BetheFlowError, ValueError):
    pass


class NotAProbability(BetheFlowError, ValueError):
    pass


class NonPositiveBelief(BetheFlowError, ValueError):
    pass


class InvalidConfiguration(BetheFlowError, ValueError):
    pass


class TooLarge(BetheFlowError, ValueError):
    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(f"Global configuration space has {size} states, limit is {limit}")


class ParseError(BetheFlowError, ValueError):
    """Model or beliefs file problem, located by a field path like potentials[2].table"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class NumericalOverflow(BetheFlowError, ArithmeticError):
    def __init__(self, message: str, state=None, trace=None):
        self.state = state
        self.trace = trace
        super().__init__(message)


class DidNotConverge(BetheFlowError):
    def __init__(self, message: str, state=None, trace=None):
        self.state = state
        self.trace = trace
        super().__init__(message)
