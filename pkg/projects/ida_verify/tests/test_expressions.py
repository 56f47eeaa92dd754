import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projects.ida_verify.src.core.errors import ConfigError
from projects.ida_verify.src.models.expressions import compile_scalar_field, parse_expression

angle = st.floats(min_value=-4, max_value=4, allow_nan=False)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1.5", 1.5),
        ("2.0 + 0.5*cos(q1)", 2.5),
        ("pi/2", np.pi / 2),
        ("1e-3*q2 + sin(q1)", 0.0),
        ("(q1 + 1)/(q2 - 2)", -0.5),
    ],
)
def test_evaluation_at_origin(text, expected):
    assert compile_scalar_field(text)(np.zeros(2)) == pytest.approx(expected)


@settings(max_examples=50, deadline=None)
@given(angle, angle)
def test_compiled_field_matches_numpy(a, b):
    field = compile_scalar_field("2*q1 + sin(q2) - cos(q1)*q2")
    assert field(np.array([a, b])) == pytest.approx(2 * a + np.sin(b) - np.cos(a) * b)


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "Empty"),
        ("   ", "Empty"),
        ("q3 + 1", "Unknown name 'q3'"),
        ("__import__('os')", "Unknown name"),
        ("exp(q1)", "Unknown name 'exp'"),
        ("q1^2", "Unsupported character"),
        ("q1**2", "Powers"),
        ("q1, q2", "Unsupported character"),
        ("(q1 + ", "Could not parse"),
    ],
)
def test_rejected_expressions(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_expression(text)


def test_compiled_field_keeps_its_expression():
    assert compile_scalar_field("cos(q1)").expression == "cos(q1)"
