"""Exception types raised by the model and analysis routines."""


class AdmrError(Exception):
    """Base class for all errors raised by admr_sim."""


class ModelError(AdmrError, ArithmeticError):
    """A numerical/model failure (maps to CLI exit code 3)."""


class ParameterError(AdmrError, ValueError):
    """An input outside the admissible domain (maps to CLI exit code 2)."""


class SingularSystem(ModelError):
    pass


class NonConvergence(ModelError):
    pass


# impedance matching uses the shorter spelling
NoConvergence = NonConvergence


class UnityRoundTrip(ModelError):
    pass


class StepUnderflow(ModelError):
    pass


class ZeroSlope(ModelError):
    pass


class NegativeConcentration(ParameterError):
    pass


class EmptyGrid(ParameterError):
    pass


class TraceTooShort(ParameterError):
    pass


class TauOutOfRange(ParameterError):
    pass


class BadParams(ParameterError):
    pass


class ConfigError(ParameterError):
    pass
