"""Straight-line expression graphs over a fixed catalogue of atomic functions.

A graph has ``num_inputs`` input variables ``v_0 .. v_{d-1}`` followed by one
variable per equation ``v_i = fn(v_{a1}, ...)``. Arguments always refer to
earlier variables and the last variable is the output.

Text expressions are parsed by :func:`parse`; graphs that use tensor-valued
variables and bilinear operations are assembled with :class:`GraphBuilder`.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .tensorcore import BilinearOp, tensor_from_json, tensor_to_json


class DomainError(ValueError):
    """An atomic function was applied outside its domain."""

    def __init__(self, message: str, equation: int | None = None):
        self.equation = equation
        if equation is not None:
            message = f"equation {equation}: {message}"
        super().__init__(message)


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")


class Kind(enum.Enum):
    EXP = "exp"
    LOG = "log"
    POW = "pow"
    RECIPROCAL = "reciprocal"
    SOFTPLUS = "softplus"
    RELU = "relu"
    ADD_CONST = "add_const"
    MUL_CONST = "mul_const"
    NEGATE = "neg"
    ADD = "add"
    MUL = "mul"
    BILINEAR = "bilinear"
    CONST = "const"


_ARITY = {Kind.ADD: 2, Kind.MUL: 2, Kind.BILINEAR: 2, Kind.CONST: 0}

# Unary nonlinear functions that need a polynomial enclosure of their own.
NONLINEAR = frozenset({Kind.EXP, Kind.LOG, Kind.POW, Kind.RECIPROCAL, Kind.SOFTPLUS, Kind.RELU})


@dataclass(frozen=True, eq=False)
class AtomicFn:
    """One atomic function. ``param`` holds the exponent, constant, or bilinear op."""

    kind: Kind
    param: object = None

    @property
    def arity(self) -> int:
        return _ARITY.get(self.kind, 1)

    @property
    def is_nonlinear_unary(self) -> bool:
        if self.kind is Kind.POW:
            return not is_nonneg_int(self.param)
        return self.kind in NONLINEAR

    # constructors
    @classmethod
    def exp(cls):
        return cls(Kind.EXP)

    @classmethod
    def log(cls):
        return cls(Kind.LOG)

    @classmethod
    def pow(cls, p):
        p = float(p)
        return cls(Kind.POW, int(p) if p.is_integer() else p)

    @classmethod
    def reciprocal(cls):
        return cls(Kind.RECIPROCAL)

    @classmethod
    def softplus(cls):
        return cls(Kind.SOFTPLUS)

    @classmethod
    def relu(cls):
        return cls(Kind.RELU)

    @classmethod
    def add_const(cls, c):
        return cls(Kind.ADD_CONST, float(c))

    @classmethod
    def mul_const(cls, c):
        return cls(Kind.MUL_CONST, float(c))

    @classmethod
    def negate(cls):
        return cls(Kind.NEGATE)

    @classmethod
    def add(cls):
        return cls(Kind.ADD)

    @classmethod
    def mul(cls):
        return cls(Kind.MUL)

    @classmethod
    def bilinear(cls, op: BilinearOp):
        return cls(Kind.BILINEAR, op)

    @classmethod
    def const(cls, value):
        if np.ndim(value) == 0:
            return cls(Kind.CONST, float(value))
        return cls(Kind.CONST, np.asarray(value, dtype=np.float64))

    def __eq__(self, other):
        if not isinstance(other, AtomicFn) or other.kind is not self.kind:
            return False
        a, b = self.param, other.param
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            return np.array_equal(a, b)
        if isinstance(a, BilinearOp):
            return a.to_json() == b.to_json() if isinstance(b, BilinearOp) else False
        return a == b

    def __hash__(self):
        return hash((self.kind, repr(self.param)))

    def __repr__(self):
        if self.param is None:
            return f"AtomicFn.{self.kind.value}"
        return f"AtomicFn.{self.kind.value}({self.param!r})"

    def to_json(self) -> dict:
        d = {"fn": self.kind.value}
        if self.kind is Kind.POW:
            d["p"] = self.param
        elif self.kind in (Kind.ADD_CONST, Kind.MUL_CONST):
            d["c"] = self.param
        elif self.kind is Kind.CONST:
            d["value"] = self.param if isinstance(self.param, float) else tensor_to_json(self.param)
        elif self.kind is Kind.BILINEAR:
            d["op"] = self.param.to_json()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AtomicFn":
        try:
            kind = Kind(d["fn"])
        except (KeyError, ValueError):
            raise ValueError(f"unknown atomic function {d.get('fn')!r}") from None
        if kind is Kind.POW:
            return cls.pow(d["p"])
        if kind in (Kind.ADD_CONST, Kind.MUL_CONST):
            return cls(kind, float(d["c"]))
        if kind is Kind.CONST:
            v = d["value"]
            return cls.const(tensor_from_json(v) if isinstance(v, dict) else v)
        if kind is Kind.BILINEAR:
            return cls(kind, BilinearOp.from_json(d["op"]))
        return cls(kind)


def is_nonneg_int(p) -> bool:
    return isinstance(p, (int, np.integer)) and not isinstance(p, bool) and p >= 0


@dataclass(frozen=True)
class Equation:
    fn: AtomicFn
    args: tuple


@dataclass(frozen=True, eq=False)
class ExprGraph:
    """A topologically ordered expression graph.

    ``input_shape`` is None for graphs of ``num_inputs`` scalar inputs. A graph
    with a single tensor-valued input sets ``num_inputs=1`` and gives its shape.
    """

    num_inputs: int
    equations: tuple = field(default_factory=tuple)
    input_shape: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(
            e if isinstance(e, Equation) else Equation(e[0], tuple(e[1])) for e in self.equations))
        if self.num_inputs < 1:
            raise ValueError("a graph needs at least one input")
        if self.input_shape is not None:
            object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
            if self.num_inputs != 1:
                raise ValueError("a tensor-input graph has exactly one input variable")
        for i, eq in enumerate(self.equations):
            var = self.num_inputs + i
            if len(eq.args) != eq.fn.arity:
                raise ValueError(f"equation {i}: {eq.fn!r} takes {eq.fn.arity} argument(s), got {len(eq.args)}")
            for a in eq.args:
                if not (0 <= a < var):
                    raise ValueError(f"equation {i}: argument v{a} is not an earlier variable")

    @property
    def num_vars(self) -> int:
        return self.num_inputs + len(self.equations)

    @property
    def output(self) -> int:
        return self.num_vars - 1

    @property
    def dim(self) -> int:
        """Dimension of the input space."""
        if self.input_shape is None:
            return self.num_inputs
        return int(np.prod(self.input_shape)) if self.input_shape else 1

    def __eq__(self, other):
        return (isinstance(other, ExprGraph) and self.num_inputs == other.num_inputs
                and self.input_shape == other.input_shape and self.equations == other.equations)

    def __str__(self):
        lines = []
        for i, eq in enumerate(self.equations):
            args = ", ".join(f"v{a}" for a in eq.args)
            lines.append(f"v{self.num_inputs + i} = {eq.fn!r}({args})")
        return "\n".join(lines)

    def to_json(self) -> dict:
        d = {"inputs": self.num_inputs,
             "eqs": [dict(eq.fn.to_json(), args=list(eq.args)) for eq in self.equations]}
        if self.input_shape is not None:
            d["input_shape"] = list(self.input_shape)
        return d

    @classmethod
    def from_json(cls, obj) -> "ExprGraph":
        if isinstance(obj, str):
            obj = json.loads(obj)
        eqs = [Equation(AtomicFn.from_json(e), tuple(int(a) for a in e["args"])) for e in obj["eqs"]]
        shape = obj.get("input_shape")
        return cls(int(obj["inputs"]), tuple(eqs), None if shape is None else tuple(shape))


# ---------------------------------------------------------------------------
# point evaluation

def softplus(x):
    if isinstance(x, np.ndarray):
        return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def apply_atomic(fn: AtomicFn, args, index: int | None = None):
    """Evaluate one atomic function on real (or array) arguments."""
    k = fn.kind
    if k is Kind.CONST:
        return fn.param
    x = args[0]
    arr = isinstance(x, np.ndarray) or (len(args) > 1 and isinstance(args[1], np.ndarray))
    if k is Kind.ADD:
        return x + args[1]
    if k is Kind.MUL:
        return x * args[1]
    if k is Kind.BILINEAR:
        return fn.param(np.asarray(x, dtype=np.float64), np.asarray(args[1], dtype=np.float64))
    if k is Kind.ADD_CONST:
        return x + fn.param
    if k is Kind.MUL_CONST:
        return x * fn.param
    if k is Kind.NEGATE:
        return -x
    if k is Kind.EXP:
        if arr:
            with np.errstate(over="ignore"):
                return np.exp(x)
        try:
            return math.exp(x)
        except OverflowError:
            return math.inf
    if k is Kind.LOG:
        if np.any(np.asarray(x) <= 0):
            raise DomainError("log of a non-positive number", index)
        return np.log(x) if arr else math.log(x)
    if k is Kind.SOFTPLUS:
        return softplus(x)
    if k is Kind.RELU:
        return np.maximum(x, 0.0) if arr else max(x, 0.0)
    if k is Kind.RECIPROCAL:
        if np.any(np.asarray(x) == 0):
            raise DomainError("reciprocal of zero", index)
        return 1.0 / x
    if k is Kind.POW:
        p = fn.param
        xa = np.asarray(x)
        if is_nonneg_int(p):
            return x ** p
        if np.any(xa == 0) and p < 0:
            raise DomainError(f"0 raised to the negative power {p}", index)
        if float(p).is_integer():
            return x ** int(p)
        if np.any(xa < 0):
            raise DomainError(f"negative number raised to the fractional power {p}", index)
        if p == 0.5:
            return np.sqrt(x) if arr else math.sqrt(x)
        return x ** p
    raise AssertionError(k)


def evaluate_all(g: ExprGraph, x) -> list:
    """Values of every variable of ``g`` at the input ``x``."""
    if g.input_shape is not None:
        vals = [np.asarray(x, dtype=np.float64).reshape(g.input_shape)]
    else:
        xs = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
        if xs.size != g.num_inputs:
            raise ValueError(f"graph takes {g.num_inputs} input(s), got {xs.size}")
        vals = [float(v) for v in xs]
    for i, eq in enumerate(g.equations):
        vals.append(apply_atomic(eq.fn, [vals[a] for a in eq.args], i))
    return vals


def evaluate(g: ExprGraph, x):
    """Evaluate the output of ``g`` at ``x`` (a real, a sequence, or an array)."""
    out = evaluate_all(g, x)[-1]
    if isinstance(out, np.ndarray) and out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# programmatic construction

class GraphBuilder:
    """Incrementally build an :class:`ExprGraph`.

    Methods return variable indices which can be passed to later calls::

        b = GraphBuilder(input_shape=(3,))
        x = b.input()
        y = b.exp(b.dot(x, x))
        g = b.build(y)
    """

    def __init__(self, num_inputs: int = 1, input_shape=None):
        self.num_inputs = 1 if input_shape is not None else num_inputs
        self.input_shape = None if input_shape is None else tuple(input_shape)
        self.equations: list[Equation] = []

    def input(self, i: int = 0) -> int:
        if not 0 <= i < self.num_inputs:
            raise IndexError(f"no input {i}")
        return i

    def emit(self, fn: AtomicFn, *args) -> int:
        self.equations.append(Equation(fn, tuple(int(a) for a in args)))
        return self.num_inputs + len(self.equations) - 1

    def const(self, value):
        return self.emit(AtomicFn.const(value))

    def exp(self, a):
        return self.emit(AtomicFn.exp(), a)

    def log(self, a):
        return self.emit(AtomicFn.log(), a)

    def pow(self, a, p):
        return self.emit(AtomicFn.pow(p), a)

    def sqrt(self, a):
        return self.pow(a, 0.5)

    def reciprocal(self, a):
        return self.emit(AtomicFn.reciprocal(), a)

    def softplus(self, a):
        return self.emit(AtomicFn.softplus(), a)

    def relu(self, a):
        return self.emit(AtomicFn.relu(), a)

    def add_const(self, a, c):
        return self.emit(AtomicFn.add_const(c), a)

    def mul_const(self, a, c):
        return self.emit(AtomicFn.mul_const(c), a)

    def neg(self, a):
        return self.emit(AtomicFn.negate(), a)

    def add(self, a, b):
        return self.emit(AtomicFn.add(), a, b)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        return self.emit(AtomicFn.mul(), a, b)

    def div(self, a, b):
        return self.mul(a, self.reciprocal(b))

    def bilinear(self, op: BilinearOp, a, b):
        return self.emit(AtomicFn.bilinear(op), a, b)

    def dot(self, a, b):
        return self.bilinear(BilinearOp.dot(), a, b)

    def matmul(self, a, b):
        return self.bilinear(BilinearOp.matmul(), a, b)

    def build(self, output: int | None = None) -> ExprGraph:
        """Finish the graph; ``output`` defaults to the last variable."""
        eqs = list(self.equations)
        if output is not None:
            eqs = eqs[: max(output - self.num_inputs + 1, 0)]
            if self.num_inputs + len(eqs) - 1 != output:
                eqs.append(Equation(AtomicFn.mul_const(1.0), (output,)))
        return ExprGraph(self.num_inputs, tuple(eqs), self.input_shape)


# ---------------------------------------------------------------------------
# text parsing

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")
FUNCTIONS = ("exp", "log", "sqrt", "softplus", "relu")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.end() == pos:
            break
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            tokens.append(("num", float(m.group(1)), start))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", start)
            tokens.append(("op", ch, start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser producing a small tuple-based syntax tree."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.next()
        if tok[0] != "op" or tok[1] != value:
            raise ParseError(f"expected {value!r}", tok[2])
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0)
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.next()[1]
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            inner = self.unary()
            return inner if op == "+" else ("neg", inner)
        return self.factor()

    def factor(self):
        base = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            tok = self.next()
            sign = 1.0
            while self.peek()[0] == "op" and self.peek()[1] in "+-":
                if self.next()[1] == "-":
                    sign = -sign
            start = self.peek()[2]
            if self.peek()[0] == "num":
                expo = sign * self.next()[1]
            elif self.peek()[0] == "op" and self.peek()[1] == "(":
                sub = self.base()
                value = _const_value(sub)
                if value is None:
                    raise ParseError("exponent must be a constant", start)
                expo = sign * value
            else:
                raise ParseError("exponent must be a constant", start)
            if self.peek()[0] == "op" and self.peek()[1] == "^":
                raise ParseError("chained exponents need parentheses", self.peek()[2])
            return ("pow", base, expo, tok[2])
        return base

    def base(self):
        tok = self.next()
        kind, val, pos = tok
        if kind == "num":
            return ("num", val)
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", val, arg)
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                raise ParseError(f"unknown function {val!r}", pos)
            m = re.fullmatch(r"x(\d*)", val)
            if m is None:
                raise ParseError(f"unknown variable {val!r}", pos)
            return ("var", None if m.group(1) == "" else int(m.group(1)), pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of expression", pos)
        raise ParseError(f"unexpected {val!r}", pos)


def _const_value(node):
    """Value of a variable-free subtree, or None if it depends on the input."""
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return None
    if tag == "neg":
        v = _const_value(node[1])
        return None if v is None else -v
    if tag == "pow":
        v = _const_value(node[1])
        return None if v is None else v ** node[2]
    if tag == "call":
        v = _const_value(node[2])
        if v is None:
            return None
        return {"exp": math.exp, "log": math.log, "sqrt": math.sqrt, "softplus": softplus,
                "relu": lambda t: max(t, 0.0)}[node[1]](v)
    if tag == "bin":
        a, b = _const_value(node[2]), _const_value(node[3])
        if a is None or b is None:
            return None
        op = node[1]
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        return a / b
    raise AssertionError(tag)


def _collect_vars(node, out):
    tag = node[0]
    if tag == "var":
        out.append(node)
    elif tag in ("neg",):
        _collect_vars(node[1], out)
    elif tag == "pow":
        _collect_vars(node[1], out)
    elif tag == "call":
        _collect_vars(node[2], out)
    elif tag == "bin":
        _collect_vars(node[2], out)
        _collect_vars(node[3], out)


class _Lowering:
    def __init__(self, num_inputs: int):
        self.b = GraphBuilder(num_inputs)

    def lower(self, node) -> int:
        """Emit equations for a non-constant subtree and return its variable."""
        tag = node[0]
        b = self.b
        if tag == "var":
            return 0 if node[1] is None else node[1]
        if tag == "neg":
            return b.neg(self.lower(node[1]))
        if tag == "pow":
            base = self.lower(node[1])
            p = node[2]
            if p == -1:
                return b.reciprocal(base)
            return b.pow(base, p)
        if tag == "call":
            arg = self.lower(node[2])
            name = node[1]
            if name == "sqrt":
                return b.sqrt(arg)
            return getattr(b, name)(arg)
        if tag == "bin":
            op, left, right = node[1], node[2], node[3]
            lc, rc = _const_value(left), _const_value(right)
            if op == "+":
                if lc is not None:
                    return b.add_const(self.lower(right), lc)
                if rc is not None:
                    return b.add_const(self.lower(left), rc)
                return b.add(self.lower(left), self.lower(right))
            if op == "-":
                if rc is not None:
                    return b.add_const(self.lower(left), -rc)
                if lc is not None:
                    return b.add_const(b.neg(self.lower(right)), lc)
                a = self.lower(left)
                return b.add(a, b.neg(self.lower(right)))
            if op == "*":
                if lc is not None:
                    return b.mul_const(self.lower(right), lc)
                if rc is not None:
                    return b.mul_const(self.lower(left), rc)
                return b.mul(self.lower(left), self.lower(right))
            if op == "/":
                if rc is not None:
                    if rc == 0:
                        raise DomainError("division by the constant zero")
                    return b.mul_const(self.lower(left), 1.0 / rc)
                # denominator first, then numerator, then its reciprocal
                den = self.lower(right)
                if lc is not None:
                    return b.mul_const(b.reciprocal(den), lc)
                num = self.lower(left)
                return b.mul(num, b.reciprocal(den))
        raise AssertionError(tag)


def parse(text: str, num_inputs: int | None = None) -> ExprGraph:
    """Parse an arithmetic expression into an :class:`ExprGraph`.

    Variables are ``x`` for a single input or ``x0 .. x{d-1}``. Supported
    functions are exp, log, sqrt, softplus, and relu. Exponents must be
    constants; subtrees without variables are folded to constants.

    Example:
        >>> g = parse("exp(x)/(2+x)")
        >>> len(g.equations)
        4
    """
    tree = _Parser(text).parse()
    refs = []
    _collect_vars(tree, refs)
    plain = [r for r in refs if r[1] is None]
    indexed = [r for r in refs if r[1] is not None]
    if plain and indexed:
        raise ParseError("cannot mix 'x' with indexed variables", indexed[0][2])
    d = max([r[1] for r in indexed], default=-1) + 1 if indexed else 1
    if num_inputs is not None:
        if num_inputs < d:
            raise ParseError(f"variable x{d - 1} exceeds the declared {num_inputs} input(s)", indexed[-1][2])
        d = num_inputs
    if plain and d != 1:
        raise ParseError("'x' is only valid for a single input", plain[0][2])
    low = _Lowering(d)
    cval = _const_value(tree)
    if cval is not None:
        out = low.b.const(cval)
    else:
        out = low.lower(tree)
    return low.b.build(out)
