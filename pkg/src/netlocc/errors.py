"""Exception types shared across the package."""


class NetLoccError(Exception):
    """Base class; the CLI maps subclasses of ``InputError`` to exit code 2."""


class InputError(NetLoccError, ValueError):
    pass


class UnknownLabel(InputError, KeyError):
    def __str__(self):
        return f"unknown qubit label {self.args[0]!r}"


class DimensionMismatch(InputError):
    pass


class NotInvertible(InputError):
    pass


class PremiseViolated(NetLoccError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NotPositiveDefinite(InputError):
    pass


class NotBellDiagonal(InputError):
    pass


class NotOrthogonal(InputError):
    pass


class ConvergenceFailure(NetLoccError):
    def __init__(self, message: str, trace: list[float]):
        super().__init__(message)
        self.trace = trace


class DetNotOne(InputError):
    pass


class EmptyCandidateSet(InputError):
    pass


class NotACycle(InputError):
    pass


class GaugeFailure(NetLoccError):
    def __init__(self, message: str, party: int):
        super().__init__(f"party {party}: {message}")
        self.party = party


class PovmInvalid(NetLoccError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class CorrectionNotUnitary(NetLoccError):
    def __init__(self, party: int, residual: float):
        super().__init__(f"correction at party {party} is not unitary (residual {residual:.3e})")
        self.party = party
        self.residual = residual


class ParameterConstraintViolated(InputError):
    pass
