"""Argument validators shared by the estimators and the design searches."""
import numbers
import operator
from typing import Optional, Any, Iterable

import numpy as np

_OPS = {"<=": operator.le, ">=": operator.ge, ">": operator.gt, "<": operator.lt}


def _check_bounds(arg_name, arg_value, min_value, max_value, inclusive, custom_min_message, custom_max_message):
    if inclusive:
        operator_less, operator_greater = "<", ">"
        allowed_min, allowed_max = ">=", "<="
    else:
        operator_less, operator_greater = "<=", ">="
        allowed_min, allowed_max = ">", "<"

    if min_value is not None and _OPS[operator_less](arg_value, min_value):
        if custom_min_message is not None:
            raise ValueError(custom_min_message)
        raise ValueError(f"'{arg_name:s}' must be {allowed_min} {min_value}")

    if max_value is not None and _OPS[operator_greater](arg_value, max_value):
        if custom_max_message is not None:
            raise ValueError(custom_max_message)
        raise ValueError(f"'{arg_name:s}' must be {allowed_max} {max_value}")


def validate_integer(
    arg_name: str,
    arg_value: Any,
    *,
    min_value: Optional[int] = None,
    max_value: Optional[int] = None,
    inclusive: bool = True,
    custom_min_message: Optional[str] = None,
    custom_max_message: Optional[str] = None,
) -> None:
    """
    Validate that `arg_value` is an integer, optionally within bounds.

    numpy integer scalars are accepted, booleans are not.

    Parameters
    ----------
    arg_name : str
        The name of the argument (used in default error messages).
    arg_value : Any
        The value being validated.
    min_value : int, optional
        Lower bound.
    max_value : int, optional
        Upper bound.
    inclusive : bool, default True
        Whether the bounds themselves are allowed.
    custom_min_message : str, optional
        Message used when the value is below the lower bound.
    custom_max_message : str, optional
        Message used when the value is above the upper bound.

    Raises
    ------
    TypeError
        If `arg_value` is not an integer.
    ValueError
        If `arg_value` does not satisfy the bounds.
    """
    if isinstance(arg_value, bool) or not isinstance(arg_value, numbers.Integral):
        raise TypeError(f"{arg_name} must be an integer.")
    _check_bounds(arg_name, arg_value, min_value, max_value, inclusive, custom_min_message, custom_max_message)


def validate_real(
    arg_name: str,
    arg_value: Any,
    *,
    min_value: Optional[float] = None,
    max_value: Optional[float] = None,
    inclusive: bool = True,
    custom_min_message: Optional[str] = None,
    custom_max_message: Optional[str] = None,
) -> None:
    """
    Validate that `arg_value` is a finite real number, optionally within bounds.

    Raises
    ------
    TypeError
        If `arg_value` is not a real number.
    ValueError
        If `arg_value` is not finite or does not satisfy the bounds.
    """
    if isinstance(arg_value, bool) or not isinstance(arg_value, numbers.Real):
        raise TypeError(f"{arg_name} should be a Real number.")
    if not np.isfinite(arg_value):
        raise ValueError(f"'{arg_name:s}' must be finite")
    _check_bounds(arg_name, arg_value, min_value, max_value, inclusive, custom_min_message, custom_max_message)


def validate_weights(arg_name: str, weights: Iterable[float], size: Optional[int] = None, tol: float = 1e-12) -> np.ndarray:
    """
    Validate a vector of positive mixing weights summing to one and return it as an array.
    """
    a = np.asarray(weights, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"'{arg_name}' must be a one-dimensional vector")
    if size is not None and a.shape[0] != size:
        raise ValueError(f"'{arg_name}' must have {size} entries, got {a.shape[0]}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ValueError(f"all entries of '{arg_name}' must be positive")
    if abs(a.sum() - 1.0) > tol:
        raise ValueError(f"'{arg_name}' must sum to 1, got {a.sum():.17g}")
    return a


def validate_choice(arg_name: str, arg_value: Any, choices: Iterable[str]) -> None:
    """Validate that `arg_value` is one of `choices`."""
    choices = tuple(choices)
    if arg_value not in choices:
        raise ValueError(f"'{arg_name}' should be one of {', '.join(choices)}; got '{arg_value}'")
