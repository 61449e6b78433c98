"""Expression language for right-hand sides, functional generators and envelopes.

Grammar (lowest to highest precedence)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?            # right associative
    atom   := NUMBER | NAME | NAME "[" expr "]" | NAME "(" args ")" | "(" expr ")"

``x[...]`` is the state vector; its index must be ``n``, ``n+c``, ``n-c`` or
an integer constant ``c``. Any other ``NAME[...]`` is a parameter sequence
lookup. Evaluation is vectorized with numpy: ``t``, ``n`` and the state
accessor may return arrays that broadcast against each other.

Example:
    >>> e = parse("k[n]/(1+t^2)*x[n] + t*cos(x[n+1])")
    >>> band_of(e)
    CouplingBand(lower=0, upper=1)
    >>> evaluate(e, Env({"t": 1.0, "n": 1}, {"k": 0.5}, {1: 1.0, 2: 0.0}))
    1.25
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from .errors import DslNameError, DslSyntaxError, EvaluationError

__all__ = [
    "Num", "Var", "State", "Param", "Unary", "Binary", "Call", "Expr",
    "CouplingBand", "Env", "ParamSequence",
    "parse", "to_source", "evaluate", "band_of", "absolute_indices", "free_names",
    "FUNCTIONS",
]


# --------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class State:
    """``x[n+offset]`` when ``relative`` else ``x[offset]``."""

    offset: int
    relative: bool = True


@dataclass(frozen=True)
class Param:
    name: str
    index: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, State, Param, Unary, Binary, Call]


@dataclass(frozen=True)
class CouplingBand:
    """Component ``n`` may read ``x_m`` only for ``n - lower <= m <= n + upper``."""

    lower: int = 0
    upper: int = 0

    def covers(self, n, m):
        return n - self.lower <= m <= n + self.upper

    def merge(self, other):
        return CouplingBand(max(self.lower, other.lower), max(self.upper, other.upper))


# name -> (arity, or None for variadic >= 2)
FUNCTIONS = {
    "sin": 1, "cos": 1, "exp": 1, "log": 1, "abs": 1, "atan": 1, "sqrt": 1,
    "min": None, "max": None,
    "bracket": 2,
}


# --------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()\[\],])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "name", "op", "eof"
    text: str
    pos: int  # 1-based


def _tokenize(source):
    toks = []
    i = 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise DslSyntaxError(f"unexpected character {source[i]!r}", source, i + 1,
                                 ("number", "name", "operator"))
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), i + 1))
        i = m.end()
    toks.append(_Tok("eof", "", len(source) + 1))
    return toks


class _Parser:
    def __init__(self, source, names):
        self.source = source
        self.toks = _tokenize(source)
        self.i = 0
        self.names = names

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, message, expected=(), tok=None):
        tok = tok or self.tok
        return DslSyntaxError(message, self.source, tok.pos, expected)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", (repr(text),))

    def parse(self):
        e = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}", ("operator", "end of input"))
        return e

    def expr(self):
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        if self.accept("-"):
            return Unary("-", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if self.accept("("):
                return self.call(tok)
            if self.accept("["):
                index_tok = self.tok
                index = self.expr()
                self.expect("]")
                if tok.text == "x":
                    return self._state(index, index_tok)
                self._check_name(tok)
                return Param(tok.text, index)
            if tok.text == "x":
                raise self.error("state 'x' must be indexed", ("'['",))
            if tok.text in FUNCTIONS:
                raise self.error(f"function {tok.text!r} must be called", ("'('",))
            self._check_name(tok)
            return Var(tok.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}", ("number", "name", "'('", "'-'"))

    def call(self, name_tok):
        name = name_tok.text
        if name not in FUNCTIONS:
            raise DslNameError(f"unknown function {name!r} at position {name_tok.pos}")
        args = []
        if not (self.tok.kind == "op" and self.tok.text == ")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name]
        if arity is None and len(args) < 2:
            raise self.error(f"{name}() takes at least 2 arguments", tok=name_tok)
        if arity is not None and len(args) != arity:
            raise self.error(f"{name}() takes {arity} argument(s)", tok=name_tok)
        if name == "bracket" and not isinstance(args[0], Var):
            raise self.error("bracket() expects a parameter name first", tok=name_tok)
        return Call(name, tuple(args))

    def _check_name(self, tok):
        if self.names is not None and tok.text not in self.names:
            raise DslNameError(f"unknown identifier {tok.text!r} at position {tok.pos}")

    def _state(self, index, tok):
        def bad():
            return DslSyntaxError(
                "state index must be n, n+<int>, n-<int> or an integer constant",
                self.source, tok.pos, ("n", "integer"))

        def as_int(e):
            if isinstance(e, Num) and float(e.value).is_integer():
                return int(e.value)
            raise bad()

        if index == Var("n"):
            return State(0)
        if isinstance(index, Num):
            k = as_int(index)
            if k < 1:
                raise bad()
            return State(k, relative=False)
        if isinstance(index, Binary) and index.op in "+-":
            if index.left == Var("n"):
                k = as_int(index.right)
                return State(k if index.op == "+" else -k)
            if index.op == "+" and index.right == Var("n"):
                return State(as_int(index.left))
        raise bad()


def parse(source, names=None):
    """Parse ``source`` into an expression tree.

    Args:
        source: expression text.
        names: optional collection of admissible variable/parameter names;
            when given, any other identifier raises :class:`DslNameError`.

    Raises:
        DslSyntaxError: malformed input, with 1-based position.
        DslNameError: unknown function or identifier.
    """
    if not isinstance(source, str):
        raise TypeError("expression source must be a string")
    return _Parser(source, None if names is None else frozenset(names)).parse()


# --------------------------------------------------------------------------
# Printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e):
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _PREC["neg"]
    return 5


def _num_source(v):
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(e):
    """Print ``e`` so that ``parse(to_source(e)) == e``."""
    if isinstance(e, Num):
        return _num_source(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, State):
        if not e.relative:
            return f"x[{e.offset}]"
        if e.offset == 0:
            return "x[n]"
        return f"x[n{e.offset:+d}]"
    if isinstance(e, Param):
        return f"{e.name}[{to_source(e.index)}]"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, Unary):
        inner = to_source(e.operand)
        if _prec(e.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        left, right = to_source(e.left), to_source(e.right)
        if e.op == "^":
            if _prec(e.left) <= p:
                left = f"({left})"
            if _prec(e.right) < _PREC["neg"]:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# Static analysis

def _walk(e):
    yield e
    if isinstance(e, Param):
        yield from _walk(e.index)
    elif isinstance(e, Unary):
        yield from _walk(e.operand)
    elif isinstance(e, Binary):
        yield from _walk(e.left)
        yield from _walk(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from _walk(a)


def band_of(e):
    """Coupling band spanned by the relative state references of ``e``."""
    lower = upper = 0
    for node in _walk(e):
        if isinstance(node, State) and node.relative:
            lower = max(lower, -node.offset)
            upper = max(upper, node.offset)
    return CouplingBand(lower, upper)


def absolute_indices(e):
    """Sorted absolute state indices ``x[c]`` referenced by ``e``."""
    return sorted({node.offset for node in _walk(e) if isinstance(node, State) and not node.relative})


def free_names(e):
    """Variable and parameter names ``e`` needs bound at evaluation time."""
    names = set()
    for node in _walk(e):
        if isinstance(node, Var):
            names.add(node.name)
        elif isinstance(node, Param):
            names.add(node.name)
    return names


# --------------------------------------------------------------------------
# Evaluation

@dataclass(frozen=True)
class ParamSequence:
    """Parameter sequence ``k_i`` given by a closed form in ``n``."""

    expr: Any
    params: Mapping[str, Any] = field(default_factory=dict)

    def __call__(self, index):
        return evaluate(self.expr, Env({"n": index}, self.params))


@dataclass
class Env:
    """Bindings for :func:`evaluate`.

    Attributes:
        variables: scalar or array values for names such as ``t``, ``n``, ``p``.
        params: named parameters. A value may be a number (also usable as a
            constant sequence ``k[i]``), a 1-based sequence, a
            :class:`ParamSequence` or any callable ``index -> value``.
        state: the state ``x``; a callable taking an (array of) 1-based
            indices, a 1-based sequence, or a mapping ``index -> value``.
    """

    variables: Mapping[str, Any] = field(default_factory=dict)
    params: Mapping[str, Any] = field(default_factory=dict)
    state: Any = None


def _fail(message, bad):
    mask = np.asarray(bad) if np.ndim(bad) else None
    return EvaluationError(message, mask=mask)


def _as_index(value, what):
    if isinstance(value, (int, np.integer)):
        return value
    if isinstance(value, np.ndarray) and value.dtype.kind in "iu":
        return value
    arr = np.asarray(value)
    if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
        raise EvaluationError(f"{what} index must be an integer")
    return np.round(arr).astype(np.int64)


def _read_state(state, index):
    if state is None:
        raise DslNameError("state x is not bound")
    if callable(state):
        return state(index)
    if isinstance(state, Mapping):
        if np.ndim(index) == 0:
            try:
                return state[int(index)]
            except KeyError:
                raise DslNameError(f"state x[{int(index)}] is not bound") from None
        return np.vectorize(lambda i: _read_state(state, i), otypes=[float])(index)
    arr = np.asarray(state, dtype=float)
    idx = np.asarray(index)
    if np.any(idx < 1) or np.any(idx > arr.shape[-1]):
        raise DslNameError("state index outside the bound window")
    return arr[..., idx - 1]


def _read_param(env, name, index):
    try:
        value = env.params[name]
    except KeyError:
        raise DslNameError(f"parameter {name!r} is not bound") from None
    if isinstance(value, (int, float, np.floating, np.integer)):
        return float(value)
    if callable(value):
        return value(index)
    arr = np.asarray(value, dtype=float)
    idx = np.asarray(index)
    if np.any(idx < 1) or np.any(idx > arr.shape[0]):
        raise EvaluationError(f"parameter {name}[{idx.max() if idx.size else '?'}] out of range "
                              f"(only {arr.shape[0]} values given)")
    return arr[idx - 1]


def _lookup(env, name):
    if name in env.variables:
        return env.variables[name]
    value = env.params.get(name)
    if isinstance(value, (int, float, np.floating, np.integer)):
        return float(value)
    raise DslNameError(f"name {name!r} is not bound")


def _bracket(env, name, p):
    """max_{1<=i<=p} |seq_i| for a parameter sequence."""
    p = _as_index(p, "bracket")

    def one(pp):
        if pp < 1:
            raise EvaluationError("bracket() needs p >= 1")
        vals = np.asarray(_read_param(env, name, np.arange(1, pp + 1)), dtype=float)
        return float(np.max(np.abs(np.broadcast_to(vals, (pp,)))))

    if np.ndim(p) == 0:
        return one(int(p))
    cache = {int(q): one(int(q)) for q in np.unique(p)}
    return np.vectorize(cache.__getitem__, otypes=[float])(p)


def _eval(e, env):
    kind = type(e)
    if kind is Binary:
        return _eval_binary(e, env)
    if kind is Num:
        return e.value
    if kind is Var:
        return _lookup(env, e.name)
    if isinstance(e, State):
        if e.relative:
            n = _as_index(_lookup(env, "n"), "state")
            relative = getattr(env.state, "relative", None)
            if relative is not None:
                return relative(n, e.offset)
            return _read_state(env.state, n + e.offset)
        return _read_state(env.state, e.offset)
    if isinstance(e, Param):
        return _read_param(env, e.name, _as_index(_eval(e.index, env), "parameter"))
    if isinstance(e, Unary):
        return -_eval(e.operand, env)
    if isinstance(e, Call):
        return _eval_call(e, env)
    raise TypeError(f"not an expression node: {e!r}")


def _eval_binary(e, env):
    a = _eval(e.left, env)
    b = _eval(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        bad = np.asarray(b) == 0
        if np.any(bad):
            raise _fail("division by zero", bad)
        return np.divide(a, b)
    # "^"
    if np.ndim(b) == 0 and float(b).is_integer() and b >= 0:
        return np.power(a, b)
    a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    bad = ((a_arr < 0) & (b_arr != np.round(b_arr))) | ((a_arr == 0) & (b_arr < 0))
    if np.any(bad):
        raise _fail("power outside its real domain", bad)
    return np.power(a_arr, b_arr)[()]


def _eval_call(e, env):
    if e.name == "bracket":
        return _bracket(env, e.args[0].name, _eval(e.args[1], env))
    args = [_eval(a, env) for a in e.args]
    if e.name in ("min", "max"):
        op = np.minimum if e.name == "min" else np.maximum
        out = args[0]
        for a in args[1:]:
            out = op(out, a)
        return out
    (a,) = args
    if e.name == "log":
        bad = np.asarray(a) <= 0
        if np.any(bad):
            raise _fail("log of a non-positive number", bad)
        return np.log(a)
    if e.name == "sqrt":
        bad = np.asarray(a) < 0
        if np.any(bad):
            raise _fail("sqrt of a negative number", bad)
        return np.sqrt(a)
    return _UNARY_FUNCS[e.name](a)


_UNARY_FUNCS: dict[str, Callable] = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs, "atan": np.arctan,
}


def evaluate(e, env=None):
    """Evaluate ``e`` under ``env``.

    Returns a Python float for scalar inputs and an ndarray otherwise.

    Raises:
        DslNameError: a free name has no binding.
        EvaluationError: domain violation or a non-finite result; for
            vectorized input ``mask`` marks the offending entries.
    """
    if env is None:
        env = Env()
    elif isinstance(env, Mapping):
        env = Env(variables=env)
    with np.errstate(all="ignore"):
        out = _eval(e, env)
    finite = np.isfinite(out)
    if not np.all(finite):
        raise _fail("non-finite value", ~finite)
    if np.ndim(out) == 0:
        return float(out)
    return out


def is_constant(e):
    """True when ``e`` reads no variable, parameter or state."""
    return not any(isinstance(node, (Var, State, Param)) for node in _walk(e))


def constant_value(e):
    if not is_constant(e):
        raise ValueError("expression is not constant")
    return evaluate(e)


def coerce(value, names=None):
    """Accept an expression string, a number or an existing tree."""
    if isinstance(value, (Num, Var, State, Param, Unary, Binary, Call)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ValueError("non-finite literal")
        if value < 0:
            return Unary("-", Num(-float(value)))
        return Num(float(value))
    return parse(value, names)


def as_param(value, params=None):
    """Normalize a configured parameter: number, list, or closed form in ``n``."""
    if isinstance(value, str):
        return ParamSequence(parse(value), params or {})
    if isinstance(value, Sequence):
        return np.asarray(value, dtype=float)
    return value
