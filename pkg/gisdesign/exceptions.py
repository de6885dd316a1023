"""Exceptions raised by gisdesign."""


class GisDesignError(Exception):
    """Base class for every error raised by the package."""


class InputError(GisDesignError, ValueError):
    """Arguments are malformed, inconsistent or out of range."""


class EvaluationError(GisDesignError, ArithmeticError):
    """A density evaluation produced an unusable value."""


class SupportError(EvaluationError):
    """A target puts mass where the proposal mixture has none."""


class DegenerateEstimatorError(GisDesignError, ArithmeticError):
    """An estimator ratio has a zero denominator."""


class NumericalError(GisDesignError, ArithmeticError):
    """A matrix operation failed (rank decision, singular Hessian)."""


class OptimizationError(GisDesignError, RuntimeError):
    """An iterative search did not reach its target."""


class ConfigError(GisDesignError, ValueError):
    """
    Experiment configuration is malformed.

    Parameters
    ----------
    message : str
        What is wrong.
    key : str, optional
        Offending configuration key.
    line : int, optional
        1-based line number in the configuration file.
    """

    def __init__(self, message: str, key: str = None, line: int = None):
        context = []
        if line is not None:
            context.append(f"line {line}")
        if key is not None:
            context.append(f"key '{key}'")
        if context:
            message = f"{', '.join(context)}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line
