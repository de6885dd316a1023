"""
Tests the validator functions
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from gisdesign.common.validators import validate_integer, validate_real, validate_weights, validate_choice


# validate_integer
def test_validate_integer_valid():
    validate_integer(
        "arg",
        10,
        min_value=0,
        max_value=20,
        inclusive=False,
        custom_min_message="custom min msg",
        custom_max_message="custom max msg",
    )


def test_validate_integer_numpy_scalar():
    validate_integer("arg", np.int64(3), min_value=1)


@pytest.mark.parametrize("object_value, exception", [(1.5, TypeError), (True, TypeError), (-1, ValueError), (100, ValueError)])
def test_validate_integer_error(object_value, exception):
    with pytest.raises(exception) as ex:
        validate_integer("arg", object_value, min_value=100, inclusive=False)
    assert "arg" in str(ex.value)


def test_validate_integer_min_custom_msg():
    with pytest.raises(ValueError) as ex:
        validate_integer("arg", 10, min_value=100, custom_min_message="custom")
    assert str(ex.value) == "custom"


def test_validate_integer_max_std_err_msg():
    with pytest.raises(ValueError) as ex:
        validate_integer("arg", 10, min_value=1, max_value=5)
    assert str(ex.value) == "'arg' must be <= 5"


def test_validate_integer_max_custom_err_msg():
    with pytest.raises(ValueError) as ex:
        validate_integer("arg", 10, min_value=1, max_value=5, custom_max_message="custom")
    assert str(ex.value) == "custom"


def test_validate_integer_valid_inclusive_equal():
    validate_integer("arg", 10, min_value=10, max_value=20, inclusive=True)


def test_validate_integer_min_std_err_msg_exclusive():
    with pytest.raises(ValueError) as ex:
        validate_integer("arg", 11, min_value=11, inclusive=False)
    assert str(ex.value) == "'arg' must be > 11"


def test_validate_integer_min_std_err_msg_inclusive():
    with pytest.raises(ValueError) as ex:
        validate_integer("arg", 10, min_value=11, inclusive=True)
    assert str(ex.value) == "'arg' must be >= 11"


# validate_real
def test_validate_real_valid():
    validate_real("number", 1)
    validate_real("number", 0.5, min_value=0.0, max_value=1.0)


def test_validate_real_type_error():
    with pytest.raises(TypeError, match="should be a Real number"):
        validate_real("arg", "not a number")


def test_validate_real_not_finite():
    with pytest.raises(ValueError, match="finite"):
        validate_real("arg", float("inf"))


def test_validate_real_exclusive_bound():
    with pytest.raises(ValueError, match="'t0' must be > 0.0"):
        validate_real("t0", 0.0, min_value=0.0, inclusive=False)


# validate_weights
def test_validate_weights():
    assert_allclose(validate_weights("a", [0.25, 0.75], size=2), [0.25, 0.75])


@pytest.mark.parametrize(
    "weights, message",
    [([0.5, 0.6], "sum to 1"), ([1.5, -0.5], "positive"), ([[0.5, 0.5]], "one-dimensional"), ([1.0], "2 entries")],
)
def test_validate_weights_error(weights, message):
    with pytest.raises(ValueError, match=message):
        validate_weights("a", weights, size=2)


# validate_choice
def test_validate_choice():
    validate_choice("kind", "bartlett", ("tukey-hanning", "bartlett"))
    with pytest.raises(ValueError, match="'kind' should be one of tukey-hanning, bartlett; got 'parzen'"):
        validate_choice("kind", "parzen", ("tukey-hanning", "bartlett"))
