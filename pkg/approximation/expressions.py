"""
Arithmetic expressions over x1..xm (+ - * / ^ ** parentheses and numeric literals)
compiled to vectorized numpy functions with sympy.
"""
import re
from tokenize import TokenError

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .bernstein import Observable
from .exceptions import ExpressionError

ALLOWED_CHARACTERS = re.compile(r'^[0-9xeE\s.+\-*/^()]+$')
NUMBER = re.compile(r'(?<![A-Za-z_\d])\d*\.?\d+(?:[eE][+-]?\d+)?')
IDENTIFIER = re.compile(r'[A-Za-z_]\w*')
TRANSFORMATIONS = standard_transformations + (convert_xor,)


def _symbols(dimension):
    return [sympy.Symbol(f'x{axis + 1}', real=True) for axis in range(dimension)]


def parse_expression(text, dimension):
    """Parse `text` into a sympy expression over x1..x_dimension."""
    text = str(text).strip()
    if not text or not ALLOWED_CHARACTERS.match(text):
        raise ExpressionError(f"Expression '{text}' contains characters outside the arithmetic set")
    symbols = _symbols(dimension)
    names = {str(symbol): symbol for symbol in symbols}
    for name in IDENTIFIER.findall(NUMBER.sub(' ', text)):
        if name not in names:
            raise ExpressionError(
                f"Unknown name '{name}' in '{text}'; use x1..x{dimension}"
            )
    try:
        return parse_expr(text, local_dict=names, transformations=TRANSFORMATIONS)
    except (SyntaxError, TypeError, ValueError, NameError, TokenError, sympy.SympifyError) as exc:
        raise ExpressionError(f"Cannot parse expression '{text}': {exc}") from exc


def compile_expression(expression, dimension):
    """Vectorized callable (P, m) -> (P,) for a sympy expression."""
    func = sympy.lambdify(_symbols(dimension), expression, modules='numpy')

    def evaluate(points):
        points = np.asarray(points, dtype=float)
        return np.broadcast_to(np.asarray(func(*points.T), dtype=float), (len(points),))

    return evaluate


def parse_observable(text, dimension):
    """Observable with a symbolic gradient."""
    expression = parse_expression(text, dimension)
    partials = [
        compile_expression(sympy.diff(expression, symbol), dimension)
        for symbol in _symbols(dimension)
    ]

    def gradient(points):
        return np.stack([partial(points) for partial in partials], axis=1)

    return Observable(
        func=compile_expression(expression, dimension),
        dimension=dimension,
        gradient=gradient,
        label=str(text).strip(),
    )


def parse_vector_field(texts, dimension):
    """Vector field (P, m) -> (P, m) from one expression per component."""
    if isinstance(texts, str):
        texts = [part for part in texts.split(';') if part.strip()]
    if len(texts) != dimension:
        raise ExpressionError(f"Vector field needs {dimension} components, got {len(texts)}")
    components = [compile_expression(parse_expression(text, dimension), dimension) for text in texts]

    def field(points):
        return np.stack([component(points) for component in components], axis=1)

    return field

