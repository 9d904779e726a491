"""Sparse multivariate polynomials in x1..xn and t.

A polynomial is stored as a mapping from exponent tuples to float
coefficients.  The exponent tuple has n+1 slots; the last one belongs to t.
Terms are kept in graded lexicographic order so printing and equality are
deterministic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "Point",
    "PolynomialSyntaxError",
    "parse",
    "evaluate",
    "grad",
    "hessian",
]


class PolynomialSyntaxError(ValueError):
    """Raised by :func:`parse`; ``pos`` is the 0-based offset of the problem."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


def _grlex_key(exps: tuple[int, ...]):
    # higher total degree first, then lexicographic (x1 before x2 before t)
    return (-sum(exps), tuple(-e for e in exps))


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` x-variables plus t."""

    __slots__ = ("nvars", "_terms", "__dict__")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], float] | Iterable = ()):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[tuple[int, ...], float] = {}
        for exps, coef in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars + 1:
                raise ValueError(f"exponent tuple {exps} does not have {nvars + 1} slots")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            merged[exps] = merged.get(exps, 0.0) + float(coef)
        self.nvars = nvars
        self._terms = tuple(
            (e, merged[e]) for e in sorted(merged, key=_grlex_key) if merged[e] != 0.0
        )

    # construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, nvars: int, value: float) -> "Polynomial":
        return cls(nvars, {(0,) * (nvars + 1): value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        """Coordinate polynomial; ``index`` 0..nvars-1 is x_{index+1}, ``nvars`` is t."""
        exps = [0] * (nvars + 1)
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1.0})

    # basic protocol ---------------------------------------------------------

    @property
    def terms(self) -> tuple[tuple[tuple[int, ...], float], ...]:
        return self._terms

    def __iter__(self):
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.nvars, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.nvars, self._terms))

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {str(self)!r})"

    def __str__(self) -> str:
        return to_text(self)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self._terms), default=0)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e, _ in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    # arithmetic --------------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("nvars mismatch")
            return other
        return Polynomial.constant(self.nvars, float(other))

    def __add__(self, other):
        other = self._coerce(other)
        return Polynomial(self.nvars, list(self._terms) + list(other._terms))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, [(e, -c) for e, c in self._terms])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict[tuple[int, ...], float] = {}
        for ea, ca in self._terms:
            for eb, cb in other._terms:
                e = tuple(a + b for a, b in zip(ea, eb))
                out[e] = out.get(e, 0.0) + ca * cb
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = Polynomial.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # calculus -----------------------------------------------------------------

    def diff(self, index: int) -> "Polynomial":
        out = []
        for e, c in self._terms:
            if e[index]:
                e2 = list(e)
                e2[index] -= 1
                out.append((tuple(e2), c * e[index]))
        return Polynomial(self.nvars, out)

    def substitute_t(self, value: float) -> "Polynomial":
        """Fix t to ``value``; the result still carries a (now unused) t slot."""
        out = []
        for e, c in self._terms:
            out.append((e[:-1] + (0,), c * value ** e[-1]))
        return Polynomial(self.nvars, out)

    # numerics -----------------------------------------------------------------

    @cached_property
    def _arrays(self):
        if not self._terms:
            return np.zeros((0, self.nvars + 1), dtype=np.int64), np.zeros(0)
        exps = np.array([e for e, _ in self._terms], dtype=np.int64)
        coefs = np.array([c for _, c in self._terms], dtype=float)
        return exps, coefs

    @cached_property
    def compiled(self):
        """Generated function of the n+1 coordinates (floats or arrays)."""
        names = [f"x{i + 1}" for i in range(self.nvars)] + ["t"]
        parts = []
        for exps, coef in self._terms:
            factors = [repr(coef)]
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}**{e}")
            parts.append("*".join(factors))
        # the 0.0*x1 keeps array shape for constant polynomials
        body = " + ".join(parts) if parts else "0.0"
        src = f"def _f({', '.join(names)}):\n    return {body} + 0.0*x1\n"
        scope: dict = {}
        exec(compile(src, "<polynomial>", "exec"), scope)
        return scope["_f"]

    def __call__(self, x, t=None):
        """Evaluate at ``x`` (shape (..., n)) and ``t`` (broadcastable), or at
        stacked points of shape (..., n+1) when ``t`` is omitted."""
        x = np.asarray(x, dtype=float)
        if t is None:
            pts = x
        else:
            t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
            pts = np.concatenate([x, t[..., None]], axis=-1)
        if pts.shape[-1] != self.nvars + 1:
            raise ValueError(
                f"dimension mismatch: expected {self.nvars} x-coordinates plus t, "
                f"got {pts.shape[-1]} values"
            )
        return _eval_points(self, pts)


def _eval_points(p: Polynomial, pts: np.ndarray):
    out = p.compiled(*np.moveaxis(pts, -1, 0))
    if pts.ndim == 1:
        return float(out)
    return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class Point:
    x: tuple[float, ...]
    t: float

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.ravel(self.x)))
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.array(self.x + (self.t,))


# ---------------------------------------------------------------------------
# text interface

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x(?P<idx>\d+)|t)"
    r"|(?P<op>[-+*^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while text[pos:].strip():
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise PolynomialSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        for kind in ("num", "var", "op"):
            if m.group(kind) is not None:
                tokens.append((kind, m.group(kind), m.start(kind)))
                break
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    # expr   := ['+'|'-'] term (('+'|'-') term)*
    # term   := factor ('*' factor)*
    # factor := atom ('^' integer)?
    # atom   := number | variable | '(' expr ')' | ('+'|'-') atom

    def __init__(self, text: str, nvars: int):
        self.text = text
        self.nvars = nvars
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise PolynomialSyntaxError(msg, tok[2], self.text)

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            self.error("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.factor()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            p = p * self.factor()
        return p

    def factor(self):
        p = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.take()
            if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
                self.error("exponent must be a non-negative integer literal", tok)
            p = p ** int(tok[1])
        return p

    def atom(self):
        tok = self.take()
        kind, val, pos = tok
        if kind == "num":
            return Polynomial.constant(self.nvars, float(val))
        if kind == "var":
            if val == "t":
                return Polynomial.variable(self.nvars, self.nvars)
            idx = int(val[1:])
            if not 1 <= idx <= self.nvars:
                raise PolynomialSyntaxError(
                    f"variable index out of range: {val} (nvars={self.nvars})", pos, self.text
                )
            return Polynomial.variable(self.nvars, idx - 1)
        if kind == "op" and val == "(":
            p = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.error("expected ')'")
            self.take()
            return p
        if kind == "op" and val in "+-":
            p = self.atom()
            return -p if val == "-" else p
        self.error(f"unexpected token {val!r}" if kind != "end" else "unexpected end of input", tok)


def parse(text: str, nvars: int) -> Polynomial:
    """Parse ``text`` into a polynomial in x1..x{nvars} and t.

    >>> parse("x1^2*x2 + x1 - t", 2).terms
    (((2, 1, 0), 1.0), ((1, 0, 0), 1.0), ((0, 0, 1), -1.0))
    """
    if nvars < 1:
        raise ValueError("nvars must be >= 1")
    return _Parser(text, nvars).parse()


def _format_coef(c: float) -> str:
    s = repr(float(c))
    if s.endswith(".0") and "e" not in s:
        s = s[:-2]
    return s


def to_text(p: Polynomial) -> str:
    """Render in the parser's grammar; ``parse(to_text(p)) == p``."""
    if not p.terms:
        return "0"
    names = [f"x{i + 1}" for i in range(p.nvars)] + ["t"]
    parts = []
    for k, (exps, coef) in enumerate(p.terms):
        sign = "-" if math.copysign(1.0, coef) < 0 else "+"
        mag = abs(coef)
        factors = []
        for name, e in zip(names, exps):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        if not factors:
            body = _format_coef(mag)
        elif mag == 1.0:
            body = "*".join(factors)
        else:
            body = _format_coef(mag) + "*" + "*".join(factors)
        if k == 0:
            parts.append(("-" if sign == "-" else "") + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


# ---------------------------------------------------------------------------
# operation-style API


def evaluate(p: Polynomial, q: Point) -> float:
    if q.n != p.nvars:
        raise ValueError(f"dimension mismatch: point has {q.n} x-coordinates, polynomial {p.nvars}")
    return float(p(np.array(q.x), q.t))


def grad(p: Polynomial) -> tuple[Polynomial, ...]:
    """(dF/dx1, ..., dF/dxn, dF/dt)."""
    return tuple(p.diff(i) for i in range(p.nvars + 1))


def hessian(p: Polynomial) -> tuple[tuple[Polynomial, ...], ...]:
    m = p.nvars + 1
    first = grad(p)
    rows: list[list[Polynomial | None]] = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            rows[i][j] = first[i].diff(j)
            rows[j][i] = rows[i][j]
    return tuple(tuple(r) for r in rows)


def stack_eval(polys: Sequence[Polynomial], pts: np.ndarray) -> np.ndarray:
    """Evaluate several polynomials at stacked points; result has a trailing
    axis of length ``len(polys)``."""
    pts = np.asarray(pts, dtype=float)
    return np.stack([_eval_points(p, pts) * np.ones(pts.shape[:-1]) for p in polys], axis=-1)
