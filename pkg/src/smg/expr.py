"""A tiny, restricted expression language for frame coefficients and
boundary data.

Allowed: numeric constants, ``pi``, the variables ``x1, x2, x3``, the binary
operators ``+ - * /`` (and ``**``), unary minus, and the functions ``sin``,
``cos``, ``exp`` and ``pow``. Anything else is rejected at parse time.
Expressions are evaluated element-wise on numpy arrays.
"""

from __future__ import annotations

import ast
import math

import numpy as np

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "pow": np.power}
CONSTANTS = {"pi": math.pi}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


class Expression:
    """Compiled restricted expression; call with keyword variables."""

    def __init__(self, source: str, variables=("x1", "x2", "x3")):
        self.source = source
        self.variables = tuple(variables)
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"unary {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or node.keywords:
                raise ExpressionError(f"only calls to {sorted(FUNCTIONS)} are allowed in {self.source!r}")
            nargs = 2 if node.func.id == "pow" else 1
            if len(node.args) != nargs:
                raise ExpressionError(f"{node.func.id} takes {nargs} argument(s)")
            for a in node.args:
                self._check(a)
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in CONSTANTS:
                raise ExpressionError(f"unknown name {node.id!r} in {self.source!r}")
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"constant {node.value!r} not allowed")
        else:
            raise ExpressionError(f"construct {type(node).__name__} not allowed in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](*(self._eval(a, env) for a in node.args))
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else CONSTANTS[node.id]
        return float(node.value)

    def __call__(self, **env):
        missing = [v for v in self.variables if v not in env]
        if missing:
            raise ExpressionError(f"missing variables {missing}")
        shape = np.broadcast(*(np.asarray(env[v]) for v in self.variables)).shape
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def __repr__(self):
        return f"Expression({self.source!r})"
