"""Expression trees over regressor variables.

Trees are immutable: evaluation and printing are pure, mutation returns a
new tree, and all randomness comes from an explicit numpy ``Generator``
owned by the caller.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OPERATOR_ARITY",
    "StructuralError",
    "FunctionSet",
    "Const",
    "Var",
    "Op",
    "Expression",
    "evaluate",
    "eval_matrix",
    "depth",
    "count_nodes",
    "max_var_index",
    "random_expression",
    "mutate",
    "to_canonical_text",
    "parse_canonical",
    "expression_to_obj",
    "expression_from_obj",
]

#: Supported elementary functions and their fixed arities.
OPERATOR_ARITY: dict[str, int] = {
    "add": 2,
    "sub": 2,
    "mul": 2,
    "sin": 1,
    "cos": 1,
    "sign": 1,
    "square": 1,
    "cube": 1,
}

_INFIX = {"add": "+", "sub": "-", "mul": "*"}
_INFIX_INV = {v: k for k, v in _INFIX.items()}

#: Gaussian step applied when perturbing a single constant.
CONST_SIGMA = 0.1
# Grow-method probabilities: chance of stopping at a leaf before the depth
# budget runs out, and of a leaf being a variable rather than a constant.
_P_LEAF = 0.4
_P_VAR = 0.8


class StructuralError(ValueError):
    """Expression malformed w.r.t. its function set or regressor length.

    Distinct from numeric non-finiteness, which is never an error: overflow
    results are returned to callers as inf/nan.
    """


@dataclass(frozen=True)
class FunctionSet:
    """Ordered set of operator symbols, all drawn from OPERATOR_ARITY."""

    operators: tuple[str, ...]

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise StructuralError("function set must not be empty")
        seen = set()
        for sym in ops:
            if sym not in OPERATOR_ARITY:
                raise StructuralError(f"unknown operator {sym!r}")
            if sym in seen:
                raise StructuralError(f"duplicate operator {sym!r}")
            seen.add(sym)
        object.__setattr__(self, "operators", ops)

    def arity(self, symbol: str) -> int:
        if symbol not in self.operators:
            raise StructuralError(f"operator {symbol!r} not in function set")
        return OPERATOR_ARITY[symbol]

    def with_arity(self, arity: int) -> tuple[str, ...]:
        return tuple(s for s in self.operators if OPERATOR_ARITY[s] == arity)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Op:
    symbol: str
    children: tuple["Expression", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        arity = OPERATOR_ARITY.get(self.symbol)
        if arity is None:
            raise StructuralError(f"unknown operator {self.symbol!r}")
        if len(self.children) != arity:
            raise StructuralError(
                f"{self.symbol} takes {arity} children, got {len(self.children)}"
            )


Expression = Const | Var | Op


def _eval(expr: Expression, X: np.ndarray) -> np.ndarray:
    if isinstance(expr, Const):
        return np.full(X.shape[0], expr.value)
    if isinstance(expr, Var):
        if not 0 <= expr.index < X.shape[1]:
            raise StructuralError(
                f"variable v{expr.index} out of bounds for {X.shape[1]} regressors"
            )
        return X[:, expr.index]
    a = _eval(expr.children[0], X)
    sym = expr.symbol
    if sym == "add":
        return a + _eval(expr.children[1], X)
    if sym == "sub":
        return a - _eval(expr.children[1], X)
    if sym == "mul":
        return a * _eval(expr.children[1], X)
    if sym == "sin":
        return np.sin(a)
    if sym == "cos":
        return np.cos(a)
    if sym == "sign":
        return np.sign(a)  # sign(0) == 0
    if sym == "square":
        return a * a
    return a * a * a  # cube


def eval_matrix(expr: Expression, X) -> np.ndarray:
    """Evaluate ``expr`` on every row of ``X`` (n_rows x n_vars).

    Overflow to inf/nan is passed through untouched; callers that cannot
    tolerate non-finite feature values must exclude them.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise StructuralError("regressor matrix must be 2-D (rows x variables)")
    with np.errstate(over="ignore", invalid="ignore"):
        return np.asarray(_eval(expr, X), dtype=float)


def evaluate(expr: Expression, regressor) -> float:
    """Evaluate ``expr`` at a single regressor vector."""
    r = np.asarray(regressor, dtype=float)
    if r.ndim != 1:
        raise StructuralError("regressor must be a 1-D vector")
    return float(eval_matrix(expr, r[None, :])[0])


def depth(expr: Expression) -> int:
    """Tree depth; leaves are depth 0."""
    if isinstance(expr, Op):
        return 1 + max(depth(c) for c in expr.children)
    return 0


def count_nodes(expr: Expression) -> int:
    if isinstance(expr, Op):
        return 1 + sum(count_nodes(c) for c in expr.children)
    return 1


def max_var_index(expr: Expression) -> int:
    """Largest variable index used, or -1 if the tree has no variables."""
    if isinstance(expr, Var):
        return expr.index
    if isinstance(expr, Op):
        return max(max_var_index(c) for c in expr.children)
    return -1


def random_expression(
    fs: FunctionSet, n_vars: int, max_depth: int, rng: np.random.Generator
) -> Expression:
    """Grow a random tree of depth <= max_depth over v0..v{n_vars-1}.

    Inner constants are drawn uniformly from [-1, 1]; coefficients that
    matter are fitted downstream by least squares, so this range only
    seeds the search.
    """
    if n_vars < 1:
        raise StructuralError("n_vars must be >= 1")
    if max_depth < 0:
        raise StructuralError("max_depth must be >= 0")
    if max_depth > 0 and rng.random() > _P_LEAF:
        symbol = fs.operators[int(rng.integers(len(fs.operators)))]
        children = tuple(
            random_expression(fs, n_vars, max_depth - 1, rng)
            for _ in range(OPERATOR_ARITY[symbol])
        )
        return Op(symbol, children)
    if rng.random() < _P_VAR:
        return Var(int(rng.integers(n_vars)))
    return Const(float(rng.uniform(-1.0, 1.0)))


def _positions(
    expr: Expression, path: tuple[int, ...] = (), d: int = 0, out=None
) -> list[tuple[tuple[int, ...], int, Expression]]:
    if out is None:
        out = []
    out.append((path, d, expr))
    if isinstance(expr, Op):
        for i, child in enumerate(expr.children):
            _positions(child, path + (i,), d + 1, out)
    return out


def _replace(expr: Expression, path: tuple[int, ...], new: Expression) -> Expression:
    if not path:
        return new
    children = list(expr.children)
    children[path[0]] = _replace(children[path[0]], path[1:], new)
    return Op(expr.symbol, tuple(children))


def mutate(
    expr: Expression, fs: FunctionSet, n_vars: int, max_depth: int, rng: np.random.Generator
) -> Expression:
    """Return a mutated copy of ``expr`` with depth <= max_depth.

    One of four mutations is drawn uniformly: replace a random subtree with
    a fresh random subtree, perturb one constant by a Gaussian step, change
    one operator to another of equal arity, or swap one variable index.
    Kinds with no applicable site fall back to subtree replacement.
    """
    nodes = _positions(expr)
    kind = int(rng.integers(4))
    if kind == 1:
        sites = [(p, e) for p, _, e in nodes if isinstance(e, Const)]
        if sites:
            path, node = sites[int(rng.integers(len(sites)))]
            return _replace(expr, path, Const(node.value + CONST_SIGMA * rng.normal()))
    elif kind == 2:
        sites = [
            (p, e)
            for p, _, e in nodes
            if isinstance(e, Op) and len(fs.with_arity(OPERATOR_ARITY[e.symbol])) > 1
        ]
        if sites:
            path, node = sites[int(rng.integers(len(sites)))]
            alts = [s for s in fs.with_arity(OPERATOR_ARITY[node.symbol]) if s != node.symbol]
            return _replace(expr, path, Op(alts[int(rng.integers(len(alts)))], node.children))
    elif kind == 3:
        sites = [p for p, _, e in nodes if isinstance(e, Var)]
        if sites:
            path = sites[int(rng.integers(len(sites)))]
            return _replace(expr, path, Var(int(rng.integers(n_vars))))
    # kind == 0, or the drawn kind had no applicable site
    path, d, _ = nodes[int(rng.integers(len(nodes)))]
    return _replace(expr, path, random_expression(fs, n_vars, max_depth - d, rng))


def to_canonical_text(expr: Expression, precision: int = 10) -> str:
    """Deterministic parenthesized infix text.

    Constants are printed with ``precision`` decimal digits; two
    structurally equal trees always print identically.
    """
    if isinstance(expr, Const):
        return f"{expr.value:.{precision}f}"
    if isinstance(expr, Var):
        return f"v{expr.index}"
    if expr.symbol in _INFIX:
        a = to_canonical_text(expr.children[0], precision)
        b = to_canonical_text(expr.children[1], precision)
        return f"({a} {_INFIX[expr.symbol]} {b})"
    return f"{expr.symbol}({to_canonical_text(expr.children[0], precision)})"


_TOKEN = re.compile(r"\s*(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?|[A-Za-z_][A-Za-z_0-9]*|[()+*-])")
_VAR_TOKEN = re.compile(r"v(\d+)$")


def parse_canonical(text: str) -> Expression:
    """Parse the canonical grammar emitted by :func:`to_canonical_text`."""
    tokens: list[str] = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            if text[i:].strip():
                raise StructuralError(f"bad token at offset {i}: {text[i:i+12]!r}")
            break
        tokens.append(m.group(1))
        i = m.end()

    pos = 0

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise StructuralError("unexpected end of expression")
        tok = tokens[pos]
        if expected is not None and tok != expected:
            raise StructuralError(f"expected {expected!r}, got {tok!r}")
        pos += 1
        return tok

    def expr() -> Expression:
        tok = take()
        if tok == "(":
            left = expr()
            op = take()
            if op not in _INFIX_INV:
                raise StructuralError(f"expected an infix operator, got {op!r}")
            right = expr()
            take(")")
            return Op(_INFIX_INV[op], (left, right))
        var = _VAR_TOKEN.match(tok)
        if var is not None:
            return Var(int(var.group(1)))
        if OPERATOR_ARITY.get(tok) == 1:
            take("(")
            child = expr()
            take(")")
            return Op(tok, (child,))
        try:
            return Const(float(tok))
        except ValueError:
            raise StructuralError(f"unexpected token {tok!r}") from None

    result = expr()
    if pos != len(tokens):
        raise StructuralError(f"trailing input after expression: {tokens[pos:]!r}")
    return result


def expression_to_obj(expr: Expression):
    """Lossless nested-list form, safe for JSON round-trips."""
    if isinstance(expr, Const):
        return ["const", expr.value]
    if isinstance(expr, Var):
        return ["var", expr.index]
    return [expr.symbol] + [expression_to_obj(c) for c in expr.children]


def expression_from_obj(obj) -> Expression:
    if not isinstance(obj, list) or not obj:
        raise StructuralError(f"malformed expression object: {obj!r}")
    tag = obj[0]
    if tag == "const":
        return Const(float(obj[1]))
    if tag == "var":
        return Var(int(obj[1]))
    return Op(tag, tuple(expression_from_obj(c) for c in obj[1:]))
