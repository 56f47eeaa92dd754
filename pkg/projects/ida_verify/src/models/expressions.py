"""Scalar field expressions in q1, q2.

Grammar: numeric constants, ``pi``, the variables ``q1`` and ``q2``, the functions
``cos`` and ``sin``, the operators ``+ - * /`` and parentheses.
"""

import re
from typing import Callable

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

from projects.ida_verify.src.core.errors import ConfigError

q1, q2 = sp.symbols("q1 q2", real=True)

ALLOWED_NAMES = {"q1": q1, "q2": q2, "cos": sp.cos, "sin": sp.sin, "pi": sp.pi}

_TOKEN = re.compile(
    r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))"
)


def _check_tokens(text: str) -> None:
    if not text.strip():
        raise ConfigError("Empty expression")
    previous = None
    for _number, name, symbol in _TOKEN.findall(text):
        if name and name not in ALLOWED_NAMES:
            raise ConfigError(f"Unknown name '{name}' in expression '{text}'")
        if symbol and not symbol.isspace():
            if symbol not in "+-*/()":
                raise ConfigError(f"Unsupported character '{symbol}' in expression '{text}'")
            if symbol == "*" and previous == "*":
                raise ConfigError(f"Powers are not supported in expression '{text}'")
        previous = symbol or None


def parse_expression(text: str) -> sp.Expr:
    """Parse an expression in q1, q2 after checking it against the grammar."""
    _check_tokens(text)
    try:
        expr = parse_expr(text, local_dict=dict(ALLOWED_NAMES))
    except Exception as e:
        raise ConfigError(f"Could not parse expression '{text}': {e}")
    if not expr.free_symbols <= {q1, q2}:
        raise ConfigError(f"Expression '{text}' uses symbols outside q1, q2")
    return expr


def compile_scalar_field(text: str) -> Callable[[np.ndarray], float]:
    """Compile an expression into a map q -> float."""
    expr = parse_expression(text)
    fn = sp.lambdify((q1, q2), expr, modules="numpy")

    def field(q: np.ndarray) -> float:
        return float(fn(q[0], q[1]))

    field.expression = str(expr)  # type: ignore[attr-defined]
    return field

