"""Custom metrics from a declarative JSON file.

A metric file looks like::

    {
      "id": "warped",
      "domain": [[-2, 2], [-2, 2], [0.1, 3]],
      "g": [["1", "0", "0"], ["0", "u3^2", "0"], ["0", "0", "1"]],
      "fields": {"up": ["0", "0", "1"]},
      "sample_box": [[-1, 1], [-1, 1], [0.5, 2]]
    }

``g`` is either a full symmetric 3x3 table or the six upper entries
``[g11, g12, g13, g22, g23, g33]``.  Expressions use + - * / ^ (the
symbols × ÷ − are accepted too), the functions sin cos sinh cosh exp log,
the constants pi and e, and the variables u1 u2 u3.  Metric partials come
from finite differences.
"""

from __future__ import annotations

import ast
import json
import math
import warnings
from pathlib import Path
from typing import Callable

import numpy as np

from .catalog import CatalogEntry
from .errors import BadParameter
from .geometry import DEFAULT_FD_STEP, MetricChart
from .triad import VectorFieldSpec

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh, "exp": np.exp, "log": np.log}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("u1", "u2", "u3")

_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide, ast.Pow: np.power}
_UNARY = {ast.USub: np.negative, ast.UAdd: np.positive}
_ALIASES = {"^": "**", "×": "*", "÷": "/", "−": "-"}


class ExpressionError(BadParameter):
    pass


def _short(src) -> str:
    return repr(src) if len(str(src)) <= 60 else repr(str(src)[:57] + "...")


def _compile(node, src):
    if isinstance(node, ast.Expression):
        return _compile(node.body, src)
    if isinstance(node, ast.Constant) and type(node.value) in (int, float):
        v = float(node.value)
        return lambda U: v
    if isinstance(node, ast.Name):
        if node.id in VARIABLES:
            i = VARIABLES.index(node.id)
            return lambda U: U[:, i]
        if node.id in CONSTANTS:
            v = CONSTANTS[node.id]
            return lambda U: v
        raise ExpressionError(f"unknown name {node.id!r} in {_short(src)}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op, a, b = _BINOPS[type(node.op)], _compile(node.left, src), _compile(node.right, src)
        return lambda U: op(a(U), b(U))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op, a = _UNARY[type(node.op)], _compile(node.operand, src)
        return lambda U: op(a(U))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS:
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument in {_short(src)}")
        fn, a = FUNCTIONS[node.func.id], _compile(node.args[0], src)
        return lambda U: fn(a(U))
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {_short(src)}")


def parse_expression(src) -> Callable[[np.ndarray], np.ndarray]:
    """Compile an expression string into a vectorized ``f(U) -> (N,)``."""
    if isinstance(src, (int, float)) and not isinstance(src, bool):
        src = repr(float(src))
    if not isinstance(src, str) or not src.strip():
        raise ExpressionError(f"expression must be a non-empty string, got {_short(src)}")
    text = src
    for a, b in _ALIASES.items():
        text = text.replace(a, b)
    if "**" in src:
        raise ExpressionError(f"use ^ for powers in {_short(src)}")
    try:
        with warnings.catch_warnings():
            # e.g. "2(u1)" parses with a SyntaxWarning before being rejected
            warnings.simplefilter("ignore", SyntaxWarning)
            tree = ast.parse(text.strip(), mode="eval")
        f = _compile(tree, src)
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {_short(src)}: {exc.msg}") from None
    except (RecursionError, MemoryError):
        raise ExpressionError(f"expression nested too deeply: {_short(src)}") from None

    def vec(U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(f(U), dtype=float), (len(U),)).copy()
    return vec


def _metric_table(spec):
    if isinstance(spec, list) and len(spec) == 6 and all(not isinstance(s, list) for s in spec):
        a, b, c, d, e, f = spec
        spec = [[a, b, c], [b, d, e], [c, e, f]]
    if not (isinstance(spec, list) and len(spec) == 3 and all(isinstance(r, list) and len(r) == 3 for r in spec)):
        raise BadParameter("'g' must be a 3x3 table or six upper-triangle entries")
    fs = [[parse_expression(spec[i][j]) for j in range(3)] for i in range(3)]

    def g(U):
        U = np.atleast_2d(U)
        G = np.empty((len(U), 3, 3))
        for i in range(3):
            for j in range(i, 3):
                G[:, i, j] = fs[i][j](U)
                # the upper triangle is authoritative
                G[:, j, i] = G[:, i, j]
        return G
    return g


def _field(name, exprs, normalize):
    if not (isinstance(exprs, list) and len(exprs) == 3):
        raise BadParameter(f"field {name!r} needs three component expressions")
    fs = [parse_expression(e) for e in exprs]
    return VectorFieldSpec(name, lambda U: np.stack([f(U) for f in fs], axis=1), normalize=normalize,
                           description="from metric file")


def load_metric_spec(spec: dict, fd_step: float = DEFAULT_FD_STEP) -> CatalogEntry:
    if not isinstance(spec, dict):
        raise BadParameter("metric file must hold a JSON object")
    try:
        domain = tuple(tuple(float(x) for x in ab) for ab in spec["domain"])
        g = _metric_table(spec["g"])
    except KeyError as exc:
        raise BadParameter(f"metric file missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise BadParameter(f"bad metric file: {exc}") from None
    try:
        chart = MetricChart(str(spec.get("id", "custom")), domain, g, fd_step=fd_step)
    except ValueError as exc:
        raise BadParameter(str(exc)) from None
    fields = {name: _field(name, ex, bool(spec.get("normalize", True)))
              for name, ex in sorted(spec.get("fields", {}).items())}
    box = spec.get("sample_box")
    if box is None:
        box = tuple((lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo)) for lo, hi in domain)
    box = tuple(tuple(float(x) for x in ab) for ab in box)
    return CatalogEntry(chart.chart_id, {}, chart, fields, {}, box, description=str(spec.get("description", "")))


def load_metric_file(path, fd_step: float = DEFAULT_FD_STEP) -> CatalogEntry:
    try:
        spec = json.loads(Path(path).read_text())
    except OSError as exc:
        raise BadParameter(f"cannot read metric file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise BadParameter(f"metric file is not valid JSON: {exc}") from None
    return load_metric_spec(spec, fd_step)
