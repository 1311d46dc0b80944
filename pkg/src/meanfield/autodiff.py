"""Scalar reverse-mode automatic differentiation on an append-only tape.

A :class:`Graph` records one node per scalar operation. Nodes are stored in
topological order (every operand index is strictly smaller than the node's
own index), so a single reverse sweep propagates adjoints. Graphs are cheap
to build and are rebuilt for every evaluation; nothing is retained or reused
between evaluations.

The primitive set is deliberately small: add, sub, mul, div, neg, log, exp,
sqrt, pow, logistic, log_gamma, plus the n-ary reductions log_sum_exp and
dot. The module-level functions (:func:`exp`, :func:`log`, :func:`dot`, ...)
accept either plain floats or :class:`Var` operands, so the same model code
can run tape-free when no gradient is needed.
"""

from __future__ import annotations

import math
from typing import Sequence, Union

from scipy.special import digamma as _digamma

from .errors import DomainError

__all__ = [
    "Graph",
    "Var",
    "Scalar",
    "build_variable",
    "apply_primitive",
    "backward",
    "gradient",
    "exp",
    "log",
    "sqrt",
    "logistic",
    "log_gamma",
    "power",
    "log_sum_exp",
    "dot",
]

# Node kinds. args holds operand indices: () for LEAF, (x,) unary,
# (x, y) binary, n-ary tuple for LSE, flat (x1..xn, y1..yn) for DOT.
LEAF = 0
ADD = 1
SUB = 2
MUL = 3
DIV = 4
NEG = 5
LOG = 6
EXP = 7
SQRT = 8
POW = 9
LOGISTIC = 10
LGAMMA = 11
LSE = 12
DOT = 13

_OP_NAMES = {
    "add": ADD, "sub": SUB, "mul": MUL, "div": DIV, "neg": NEG,
    "log": LOG, "exp": EXP, "sqrt": SQRT, "pow": POW,
    "logistic": LOGISTIC, "log_gamma": LGAMMA,
    "log_sum_exp": LSE, "dot": DOT,
}

_INF = math.inf


def _fexp(x: float) -> float:
    # IEEE semantics: overflow saturates to +inf instead of raising, so a
    # single wild Monte Carlo draw degrades to a non-finite value the engine
    # can detect rather than an exception that aborts the evaluation.
    try:
        return math.exp(x)
    except OverflowError:
        return _INF


def _flgamma(x: float) -> float:
    try:
        return math.lgamma(x)
    except OverflowError:
        return _INF


def _flogistic(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + _fexp(-x))
    t = _fexp(x)
    return t / (1.0 + t)


def _flse(values) -> float:
    m = max(values)
    if not math.isfinite(m):  # -inf, +inf, or nan dominate the sum
        return m
    s = 0.0
    for v in values:
        s += _fexp(v - m)
    return m + math.log(s)


class Graph:
    """Append-only record of scalar operations (the tape).

    A graph is single-owner: it is mutated only by the code building it and
    is never shared mid-build. Parallel evaluation means one graph per
    worker, not a shared one.
    """

    __slots__ = ("ops", "args", "vals", "leaves",
                 "_ap_op", "_ap_arg", "_ap_val")

    def __init__(self):
        self.ops: list[int] = []
        self.args: list[tuple] = []
        self.vals: list[float] = []
        self.leaves: list[int] = []
        # bound appends: graph building is the hot path of every gradient
        self._ap_op = self.ops.append
        self._ap_arg = self.args.append
        self._ap_val = self.vals.append

    def __len__(self) -> int:
        return len(self.vals)

    def _push(self, op: int, arg: tuple, val: float) -> "Var":
        i = len(self.vals)
        self._ap_op(op)
        self._ap_arg(arg)
        self._ap_val(val)
        return Var(self, i, val)

    def leaf(self, value: float) -> "Var":
        value = float(value)
        if not math.isfinite(value):
            raise DomainError(f"leaf value must be finite, got {value!r}")
        i = len(self.vals)
        self._ap_op(LEAF)
        self._ap_arg(())
        self._ap_val(value)
        self.leaves.append(i)
        return Var(self, i, value)

    def _lift(self, x) -> "Var":
        if type(x) is Var:
            if x.graph is not self:
                raise ValueError("operands belong to different graphs")
            return x
        return self.leaf(x)

    # -- primitives on Var operands ------------------------------------

    def add(self, a: "Var", b: "Var") -> "Var":
        i = len(self.vals)
        self._ap_op(ADD)
        self._ap_arg((a.i, b.i))
        v = a.val + b.val
        self._ap_val(v)
        return Var(self, i, v)

    def sub(self, a: "Var", b: "Var") -> "Var":
        i = len(self.vals)
        self._ap_op(SUB)
        self._ap_arg((a.i, b.i))
        v = a.val - b.val
        self._ap_val(v)
        return Var(self, i, v)

    def mul(self, a: "Var", b: "Var") -> "Var":
        i = len(self.vals)
        self._ap_op(MUL)
        self._ap_arg((a.i, b.i))
        v = a.val * b.val
        self._ap_val(v)
        return Var(self, i, v)

    def div(self, a: "Var", b: "Var") -> "Var":
        if b.val == 0.0:
            raise DomainError("div: divisor is 0")
        i = len(self.vals)
        self._ap_op(DIV)
        self._ap_arg((a.i, b.i))
        v = a.val / b.val
        self._ap_val(v)
        return Var(self, i, v)

    def neg(self, a: "Var") -> "Var":
        return self._push(NEG, (a.i,), -a.val)

    def log(self, a: "Var") -> "Var":
        if a.val <= 0.0:
            raise DomainError(f"log: argument must be > 0, got {a.val}")
        return self._push(LOG, (a.i,), math.log(a.val))

    def exp(self, a: "Var") -> "Var":
        return self._push(EXP, (a.i,), _fexp(a.val))

    def sqrt(self, a: "Var") -> "Var":
        if a.val < 0.0:
            raise DomainError(f"sqrt: argument must be >= 0, got {a.val}")
        return self._push(SQRT, (a.i,), math.sqrt(a.val))

    def pow(self, a: "Var", b: "Var") -> "Var":
        if a.val <= 0.0:
            raise DomainError(f"pow: base must be > 0, got {a.val}")
        try:
            v = a.val ** b.val
        except OverflowError:
            v = _INF
        return self._push(POW, (a.i, b.i), v)

    def logistic(self, a: "Var") -> "Var":
        return self._push(LOGISTIC, (a.i,), _flogistic(a.val))

    def log_gamma(self, a: "Var") -> "Var":
        if a.val <= 0.0:
            raise DomainError(f"log_gamma: argument must be > 0, got {a.val}")
        return self._push(LGAMMA, (a.i,), _flgamma(a.val))

    def log_sum_exp(self, xs: Sequence["Var"]) -> "Var":
        if not xs:
            raise ValueError("log_sum_exp needs at least one operand")
        return self._push(LSE, tuple(x.i for x in xs),
                          _flse([x.val for x in xs]))

    def dot(self, xs: Sequence["Var"], ys: Sequence["Var"]) -> "Var":
        if len(xs) != len(ys) or not xs:
            raise ValueError("dot needs two equal-length nonempty lists")
        s = 0.0
        for x, y in zip(xs, ys):
            s += x.val * y.val
        arg = tuple(x.i for x in xs) + tuple(y.i for y in ys)
        return self._push(DOT, arg, s)

    # -- reverse sweep --------------------------------------------------

    def adjoints(self, output: "Var") -> list[float]:
        """Adjoint of every node w.r.t. ``output`` (zeros past it)."""
        if output.graph is not self:
            raise ValueError("output does not belong to this graph")
        ops, args, vals = self.ops, self.args, self.vals
        adj = [0.0] * len(vals)
        adj[output.i] = 1.0
        for i in range(output.i, -1, -1):
            a = adj[i]
            if a == 0.0:
                continue
            op = ops[i]
            if op == LEAF:
                continue
            ar = args[i]
            if op == MUL:
                x, y = ar
                adj[x] += a * vals[y]
                adj[y] += a * vals[x]
            elif op == ADD:
                adj[ar[0]] += a
                adj[ar[1]] += a
            elif op == SUB:
                adj[ar[0]] += a
                adj[ar[1]] -= a
            elif op == DIV:
                x, y = ar
                vy = vals[y]
                adj[x] += a / vy
                adj[y] -= a * vals[i] / vy
            elif op == NEG:
                adj[ar[0]] -= a
            elif op == EXP:
                adj[ar[0]] += a * vals[i]
            elif op == LOG:
                adj[ar[0]] += a / vals[ar[0]]
            elif op == DOT:
                n = len(ar) // 2
                for j in range(n):
                    adj[ar[j]] += a * vals[ar[n + j]]
                    adj[ar[n + j]] += a * vals[ar[j]]
            elif op == LSE:
                out = vals[i]
                if math.isfinite(out):
                    for j in ar:
                        adj[j] += a * _fexp(vals[j] - out)
            elif op == LOGISTIC:
                s = vals[i]
                adj[ar[0]] += a * s * (1.0 - s)
            elif op == SQRT:
                v = vals[i]
                adj[ar[0]] += a * 0.5 / v if v != 0.0 else math.copysign(_INF, a)
            elif op == LGAMMA:
                adj[ar[0]] += a * float(_digamma(vals[ar[0]]))
            elif op == POW:
                x, y = ar
                vx, vy = vals[x], vals[y]
                adj[x] += a * vy * vals[i] / vx
                adj[y] += a * vals[i] * math.log(vx)
            else:  # pragma: no cover
                raise AssertionError(f"unknown op code {op}")
        return adj


class Var:
    """A scalar value bound to a node of a :class:`Graph`."""

    __slots__ = ("graph", "i", "val")

    def __init__(self, graph: Graph, i: int, val: float):
        self.graph = graph
        self.i = i
        self.val = val

    def __repr__(self):
        return f"Var(node={self.i}, val={self.val!r})"

    # Arithmetic with automatic lifting of plain numbers to leaf nodes.
    def __add__(self, other):
        g = self.graph
        return g.add(self, other if type(other) is Var else g.leaf(other))

    def __radd__(self, other):
        g = self.graph
        return g.add(g.leaf(other), self)

    def __sub__(self, other):
        g = self.graph
        return g.sub(self, other if type(other) is Var else g.leaf(other))

    def __rsub__(self, other):
        g = self.graph
        return g.sub(g.leaf(other), self)

    def __mul__(self, other):
        g = self.graph
        return g.mul(self, other if type(other) is Var else g.leaf(other))

    def __rmul__(self, other):
        g = self.graph
        return g.mul(g.leaf(other), self)

    def __truediv__(self, other):
        g = self.graph
        return g.div(self, other if type(other) is Var else g.leaf(other))

    def __rtruediv__(self, other):
        g = self.graph
        return g.div(g.leaf(other), self)

    def __neg__(self):
        return self.graph.neg(self)

    def __pow__(self, other):
        g = self.graph
        return g.pow(self, other if type(other) is Var else g.leaf(other))


Scalar = Union[float, Var]


# -- spec-level operations --------------------------------------------------

def build_variable(graph: Graph, value: float) -> Var:
    """Append a leaf node holding ``value`` (must be finite)."""
    return graph.leaf(value)


def apply_primitive(graph: Graph, kind: str, operands: Sequence[Var]) -> Var:
    """Apply a named primitive to operands already living on ``graph``.

    ``dot`` takes a flat even-length sequence (first half paired with the
    second half); ``log_sum_exp`` is n-ary; the rest are unary or binary.
    """
    if kind not in _OP_NAMES:
        raise ValueError(f"unknown primitive {kind!r}")
    for v in operands:
        if type(v) is not Var or v.graph is not graph:
            raise ValueError("operands must be Vars of the given graph")
    op = _OP_NAMES[kind]
    if op == LSE:
        return graph.log_sum_exp(operands)
    if op == DOT:
        if len(operands) % 2 != 0:
            raise ValueError("dot takes an even number of operands")
        h = len(operands) // 2
        return graph.dot(operands[:h], operands[h:])
    if op in (ADD, SUB, MUL, DIV, POW):
        if len(operands) != 2:
            raise ValueError(f"{kind} takes exactly 2 operands")
        a, b = operands
        return getattr(graph, kind)(a, b)
    if len(operands) != 1:
        raise ValueError(f"{kind} takes exactly 1 operand")
    return getattr(graph, kind)(operands[0])


def backward(graph: Graph, output: Var) -> dict[int, float]:
    """Partial derivative of ``output`` w.r.t. every leaf of ``graph``.

    The returned map is keyed by leaf node index; the seed adjoint of
    ``output`` is 1.
    """
    adj = graph.adjoints(output)
    return {i: adj[i] for i in graph.leaves}


def gradient(output: Var, wrt: Sequence[Var]) -> list[float]:
    """Derivatives of ``output`` w.r.t. the given variables (one sweep)."""
    adj = output.graph.adjoints(output)
    return [adj[v.i] for v in wrt]


# -- generic math: floats and Vars through one code path ---------------------

def exp(x: Scalar) -> Scalar:
    if type(x) is Var:
        return x.graph.exp(x)
    return _fexp(x)


def log(x: Scalar) -> Scalar:
    if type(x) is Var:
        return x.graph.log(x)
    if x <= 0.0:
        raise DomainError(f"log: argument must be > 0, got {x}")
    return math.log(x)


def sqrt(x: Scalar) -> Scalar:
    if type(x) is Var:
        return x.graph.sqrt(x)
    if x < 0.0:
        raise DomainError(f"sqrt: argument must be >= 0, got {x}")
    return math.sqrt(x)


def logistic(x: Scalar) -> Scalar:
    if type(x) is Var:
        return x.graph.logistic(x)
    return _flogistic(x)


def log_gamma(x: Scalar) -> Scalar:
    if type(x) is Var:
        return x.graph.log_gamma(x)
    if x <= 0.0:
        raise DomainError(f"log_gamma: argument must be > 0, got {x}")
    return _flgamma(x)


def power(x: Scalar, y: Scalar) -> Scalar:
    if type(x) is Var:
        return x.graph.pow(x, y if type(y) is Var else x.graph.leaf(y))
    if type(y) is Var:
        return y.graph.pow(y.graph.leaf(x), y)
    if x <= 0.0:
        raise DomainError(f"pow: base must be > 0, got {x}")
    try:
        return x ** y
    except OverflowError:
        return _INF


def _find_graph(values) -> Graph | None:
    for v in values:
        if type(v) is Var:
            return v.graph
    return None


def log_sum_exp(xs: Sequence[Scalar]) -> Scalar:
    """Overflow-safe log(sum(exp(x_i))) over one or more scalars."""
    g = _find_graph(xs)
    if g is None:
        return _flse(xs)
    return g.log_sum_exp([g._lift(x) for x in xs])


def dot(xs: Sequence[Scalar], ys: Sequence[Scalar]) -> Scalar:
    """Inner product of two equal-length scalar sequences as one node."""
    g = _find_graph(xs) or _find_graph(ys)
    if g is None:
        if len(xs) != len(ys) or not len(xs):
            raise ValueError("dot needs two equal-length nonempty lists")
        s = 0.0
        for x, y in zip(xs, ys):
            s += x * y
        return s
    return g.dot([g._lift(x) for x in xs], [g._lift(y) for y in ys])
