"""Minimal exact-arithmetic expression kernel.

Expression trees are immutable: rational constants, named variables,
flattened sums and products, powers, quotients, unary negation and the
elementary functions exp, log, sin, cos, sqrt.  Constants stay exact
(fractions.Fraction); floating point enters only at evaluation time.

Zero testing is two-tier: `simplify` normalizes (constant folding,
like-term collection, bounded expansion) and an expression is *proven*
zero only when the normal form is the literal zero constant; everything
else is decided by seeded random sampling over a domain box.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")

Number = Union[int, float, Fraction]


class ParseError(ValueError):
    """Syntax error with the character offset into the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvalDomainError(ArithmeticError):
    """Real evaluation left its domain (log/sqrt/division/power)."""

    def __init__(self, message: str, subexpr: Optional["Expr"] = None):
        super().__init__(message)
        self.subexpr = subexpr


class SamplingError(RuntimeError):
    """Too many sample points hit domain errors during zero testing."""

    def __init__(self, message: str, subexpr: Optional["Expr"] = None):
        super().__init__(message)
        self.subexpr = subexpr


# --------------------------------------------------------------------------
# tree nodes
# --------------------------------------------------------------------------

class Expr:
    """Base class; all nodes are immutable and structurally comparable."""

    def __add__(self, other):
        return add(self, coerce(other))

    def __radd__(self, other):
        return add(coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(coerce(other)))

    def __rsub__(self, other):
        return add(coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, coerce(other))

    def __rmul__(self, other):
        return mul(coerce(other), self)

    def __truediv__(self, other):
        return div(self, coerce(other))

    def __rtruediv__(self, other):
        return div(coerce(other), self)

    def __pow__(self, other):
        return Power(self, coerce(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return format_expr(self)

    def __repr__(self):
        return f"<{type(self).__name__} {format_expr(self)!r}>"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str


@dataclass(frozen=True, repr=False)
class Sum(Expr):
    terms: tuple

    def __post_init__(self):
        assert len(self.terms) >= 2


@dataclass(frozen=True, repr=False)
class Product(Expr):
    factors: tuple

    def __post_init__(self):
        assert len(self.factors) >= 2


@dataclass(frozen=True, repr=False)
class Power(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, repr=False)
class Quotient(Expr):
    numerator: Expr
    denominator: Expr


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        assert self.name in FUNCTIONS


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Const(Fraction(v))
    if isinstance(v, float):
        # decimal reading of the literal, not the binary float
        return Const(Fraction(str(v)))
    raise TypeError(f"cannot use {type(v).__name__} as an expression")


# --------------------------------------------------------------------------
# smart constructors: flattening and the cheap folds the parser relies on
# --------------------------------------------------------------------------

def add(*parts: Expr) -> Expr:
    flat = []
    for p in parts:
        if isinstance(p, Sum):
            flat.extend(p.terms)
        else:
            flat.append(p)
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*parts: Expr) -> Expr:
    flat = []
    for p in parts:
        if isinstance(p, Product):
            flat.extend(p.factors)
        else:
            flat.append(p)
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.operand
    if isinstance(e, Product) and isinstance(e.factors[0], Const):
        c = Const(-e.factors[0].value)
        rest = e.factors[1:]
        if c.value == 1 and len(rest) == 1:
            return rest[0]
        if c.value == 1:
            return Product(rest)
        return Product((c,) + rest)
    if isinstance(e, Quotient):
        return Quotient(neg(e.numerator), e.denominator)
    return Neg(e)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const) and b.value != 0:
        if isinstance(a, Const):
            return Const(a.value / b.value)
        if b.value == 1:
            return a
        return mul(Const(1 / b.value), a)
    return Quotient(a, b)


def func(name: str, arg: Expr) -> Expr:
    return Func(name, arg)


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Sum):
        out = frozenset()
        for t in e.terms:
            out |= free_vars(t)
        return out
    if isinstance(e, Product):
        out = frozenset()
        for f in e.factors:
            out |= free_vars(f)
        return out
    if isinstance(e, Power):
        return free_vars(e.base) | free_vars(e.exponent)
    if isinstance(e, Quotient):
        return free_vars(e.numerator) | free_vars(e.denominator)
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, Func):
        return free_vars(e.arg)
    raise TypeError(type(e))


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*|\+|-|/|\^|\(|\))"
)

_ADD_PREC = 10
_MUL_PREC = 20
_POW_PREC = 30


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        n = len(text)
        while pos < n:
            if text[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(), pos))
            pos = m.end()
        self.tokens.append(("end", "", n))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op: str):
        kind, val, off = self.next()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", off)

    def parse(self) -> Expr:
        e = self.expression(0)
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", off)
        return e

    def expression(self, rbp: int) -> Expr:
        left = self.nud()
        while True:
            kind, val, _ = self.peek()
            if kind != "op" or val not in "+-*/^":
                break
            lbp = {"+": _ADD_PREC, "-": _ADD_PREC,
                   "*": _MUL_PREC, "/": _MUL_PREC, "^": _POW_PREC}[val]
            if lbp <= rbp:
                break
            self.next()
            if val == "+":
                left = add(left, self.expression(lbp))
            elif val == "-":
                left = add(left, neg(self.expression(lbp)))
            elif val == "*":
                left = mul(left, self.expression(lbp))
            elif val == "/":
                left = div(left, self.expression(lbp))
            else:  # right-associative power
                left = Power(left, self.expression(lbp - 1))
        return left

    def nud(self) -> Expr:
        kind, val, off = self.next()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "name":
            if val in FUNCTIONS:
                nk, nv, noff = self.peek()
                if nk != "op" or nv != "(":
                    raise ParseError(f"function {val!r} requires parentheses", noff)
                self.next()
                arg = self.expression(0)
                self.expect(")")
                return Func(val, arg)
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                raise ParseError(f"unknown function name {val!r}", off)
            return Var(val)
        if kind == "op" and val == "-":
            return neg(self.expression(_ADD_PREC))
        if kind == "op" and val == "(":
            e = self.expression(0)
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {val!r}" if val else "unexpected end of input", off)


def parse(text: str) -> Expr:
    """Parse an expression string into a raw (unnormalized) tree."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# normalization / simplify
# --------------------------------------------------------------------------

_EXPAND_LIMIT = 128


def simplify(e: Expr) -> Expr:
    """Normalize: exact constant folding, like-term collection in flattened
    sums, like-base merging and bounded expansion in products, cancellation
    of syntactically identical quotient factors.  Idempotent and pointwise
    value preserving on the natural domain."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return _negate(simplify(e.operand))
    if isinstance(e, Sum):
        return _norm_sum([simplify(t) for t in e.terms])
    if isinstance(e, Product):
        return _norm_product([simplify(f) for f in e.factors])
    if isinstance(e, Quotient):
        return _norm_quotient(simplify(e.numerator), simplify(e.denominator))
    if isinstance(e, Power):
        return _norm_power(simplify(e.base), simplify(e.exponent))
    if isinstance(e, Func):
        return _norm_func(e.name, simplify(e.arg))
    raise TypeError(type(e))


def _sort_key(e: Expr):
    if isinstance(e, Const):
        return (0, str(e.value))
    if isinstance(e, Var):
        return (1, e.name)
    if isinstance(e, Func):
        return (2, e.name, _sort_key(e.arg))
    if isinstance(e, Power):
        return (3, _sort_key(e.base), _sort_key(e.exponent))
    if isinstance(e, Neg):
        return (4, _sort_key(e.operand))
    if isinstance(e, Quotient):
        return (5, _sort_key(e.numerator), _sort_key(e.denominator))
    if isinstance(e, Product):
        return (6, len(e.factors)) + tuple(_sort_key(f) for f in e.factors)
    if isinstance(e, Sum):
        return (7, len(e.terms)) + tuple(_sort_key(t) for t in e.terms)
    raise TypeError(type(e))


def _negate(n: Expr) -> Expr:
    # canonical sign handling on an already-normalized tree
    if isinstance(n, Const):
        return Const(-n.value)
    if isinstance(n, Neg):
        return n.operand
    if isinstance(n, Sum):
        return _norm_sum([_negate(t) for t in n.terms])
    if isinstance(n, Product) and isinstance(n.factors[0], Const):
        c = -n.factors[0].value
        rest = list(n.factors[1:])
        return _join_coeff(c, rest[0] if len(rest) == 1 else Product(tuple(rest)))
    if isinstance(n, Quotient):
        return Quotient(_negate(n.numerator), n.denominator)
    return Neg(n)


def _split_coeff(n: Expr):
    """Split a normalized term into (rational coefficient, positive rest)."""
    if isinstance(n, Const):
        return n.value, ONE
    if isinstance(n, Neg):
        c, r = _split_coeff(n.operand)
        return -c, r
    if isinstance(n, Product) and isinstance(n.factors[0], Const):
        rest = n.factors[1:]
        return n.factors[0].value, rest[0] if len(rest) == 1 else Product(rest)
    if isinstance(n, Quotient):
        c, r = _split_coeff(n.numerator)
        return c, Quotient(r, n.denominator)
    if isinstance(n, Sum):
        # scale out the leading coefficient so that rests are scale-canonical
        c0, _ = _split_coeff(n.terms[0])
        if c0 == 1:
            return Fraction(1), n
        parts = []
        for t in n.terms:
            tc, tr = _split_coeff(t)
            parts.append(_join_coeff(tc / c0, tr))
        return c0, Sum(tuple(parts))
    return Fraction(1), n


def _join_coeff(c: Fraction, rest: Expr) -> Expr:
    if c == 0:
        return ZERO
    if rest == ONE:
        return Const(c)
    if c == 1:
        return rest
    if isinstance(rest, Sum):
        parts = []
        for t in rest.terms:
            tc, tr = _split_coeff(t)
            parts.append(_join_coeff(c * tc, tr))
        return _norm_sum(parts)
    if isinstance(rest, Quotient):
        return Quotient(_join_coeff(c, rest.numerator), rest.denominator)
    if c == -1:
        return _negate(rest)
    if isinstance(rest, Product):
        return Product((Const(c),) + rest.factors)
    return Product((Const(c), rest))


def _norm_sum(terms: list) -> Expr:
    flat = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    const = Fraction(0)
    coeffs: dict = {}
    for t in flat:
        c, r = _split_coeff(t)
        if r == ONE:
            const += c
        else:
            coeffs[r] = coeffs.get(r, Fraction(0)) + c
    parts = []
    if const != 0:
        parts.append(Const(const))
    for r in sorted(coeffs, key=_sort_key):
        if coeffs[r] != 0:
            parts.append(_join_coeff(coeffs[r], r))
    if not parts:
        return ZERO
    if len(parts) == 1:
        return parts[0]
    return Sum(tuple(parts))


def _rational_exponent(e: Expr):
    if isinstance(e, Power) and isinstance(e.exponent, Const):
        return e.base, e.exponent.value
    return e, Fraction(1)


def _norm_product(factors: list) -> Expr:
    coeff = Fraction(1)
    bases: dict = {}   # atomic base expr -> accumulated rational exponent
    opaque: list = []  # powers with non-constant exponents
    den_parts: list = []

    # decompose every factor down to atoms (Var/Func/Sum/odd powers),
    # routing quotients to the denominator and signs/constants to coeff
    todo = list(factors)
    while todo:
        f = todo.pop(0)
        if isinstance(f, Product):
            todo = list(f.factors) + todo
        elif isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Neg):
            coeff = -coeff
            todo.insert(0, f.operand)
        elif isinstance(f, Quotient):
            todo.insert(0, f.numerator)
            den_parts.append(f.denominator)
        elif isinstance(f, Power) and not isinstance(f.exponent, Const):
            opaque.append(f)
        elif isinstance(f, Power):
            r = _norm_power(f.base, f.exponent)
            if r != f:
                todo.insert(0, r)
            else:
                bases[f.base] = bases.get(f.base, Fraction(0)) + f.exponent.value
        else:
            bases[f] = bases.get(f, Fraction(0)) + 1

    if coeff == 0:
        return ZERO

    # exponentials combine: exp(a)^x * exp(b)^y = exp(x*a + y*b)
    exp_args = []
    for b in list(bases):
        if isinstance(b, Func) and b.name == "exp":
            x = bases.pop(b)
            if x != 0:
                exp_args.append(_norm_product([Const(x), b.arg]))
    if exp_args:
        combined = _norm_sum(exp_args)
        if combined != ZERO:
            key = Func("exp", combined)
            bases[key] = bases.get(key, Fraction(0)) + 1

    built = []
    for b in sorted(bases, key=_sort_key):
        x = bases[b]
        if x == 0:
            continue
        p = b if x == 1 else _norm_power(b, Const(x))
        # merged exponents can fold (e.g. an expanded power of a sum)
        if isinstance(p, (Const, Product, Neg, Quotient)):
            return _norm_product(
                [p, Const(coeff)]
                + [bb if xx == 1 else Power(bb, Const(xx))
                   for bb, xx in bases.items() if bb != b and xx != 0]
                + opaque
                + [Quotient(ONE, d) for d in den_parts])
        built.append(p)
    built.extend(sorted(opaque, key=_sort_key))

    # bounded distribution over sums
    sums = [b for b in built if isinstance(b, Sum)]
    if sums:
        size = 1
        for s in sums:
            size *= len(s.terms)
        if size <= _EXPAND_LIMIT:
            rest = [b for b in built if not isinstance(b, Sum)]
            combos = [Const(coeff)]
            for s in sums:
                combos = [mul(c, t) for c in combos for t in s.terms]
            expanded = _norm_sum([_norm_product(_factor_list(c) + rest) for c in combos])
            if den_parts:
                return _norm_quotient(expanded, _norm_product(den_parts))
            return expanded

    if not built:
        numerator = Const(coeff)
    else:
        numerator = _join_coeff(coeff, built[0] if len(built) == 1 else Product(tuple(built)))
    if den_parts:
        return _norm_quotient(numerator, _norm_product(den_parts))
    return numerator


def _factor_list(e: Expr):
    """Multiplicative factors of a normalized expression (no sign/coeff)."""
    if isinstance(e, Product):
        return list(e.factors)
    return [e]


def _term_power_map(t: Expr):
    """Base -> rational exponent map of one sum term (opaque powers count
    as whole factors with exponent 1)."""
    _c, r = _split_coeff(t)
    pm: dict = {}
    if r == ONE:
        return pm
    for f in _factor_list(r):
        if isinstance(f, Power) and not isinstance(f.exponent, Const):
            pm[f] = pm.get(f, Fraction(0)) + 1
        else:
            b, x = _rational_exponent(f)
            pm[b] = pm.get(b, Fraction(0)) + x
    return pm


def _sum_content(s: Sum):
    """Common positive monomial content of every term of a sum."""
    maps = [_term_power_map(t) for t in s.terms]
    common = {}
    for b, x in maps[0].items():
        m = x
        for pm in maps[1:]:
            if b not in pm:
                m = None
                break
            m = min(m, pm[b])
        if m is not None and m > 0:
            common[b] = m
    return common


def _strip_content(s: Sum, common: dict) -> Expr:
    parts = []
    for t in s.terms:
        c, r = _split_coeff(t)
        pm = _term_power_map(t)
        factors = []
        for b in pm:
            x = pm[b] - common.get(b, Fraction(0))
            if x == 0:
                continue
            factors.append(b if x == 1 else Power(b, Const(x)))
        rest = ONE if not factors else (
            factors[0] if len(factors) == 1 else Product(tuple(factors)))
        parts.append(_join_coeff(c, _norm_product(_factor_list(rest))
                                 if rest != ONE else ONE))
    return _norm_sum(parts)


def _norm_quotient(num: Expr, den: Expr) -> Expr:
    if isinstance(den, Const):
        if den.value == 0:
            return Quotient(num, den)  # undefined everywhere; left intact
        return _norm_product([Const(1 / den.value), num])
    if isinstance(num, Quotient):
        return _norm_quotient(num.numerator, _norm_product([num.denominator, den]))
    if isinstance(den, Quotient):
        return _norm_quotient(_norm_product([num, den.denominator]), den.numerator)
    if isinstance(num, Const) and num.value == 0:
        return ZERO

    nc, nrest = _split_coeff(num)
    dc, drest = _split_coeff(den)
    nf = _factor_list(nrest) if nrest != ONE else []
    df = _factor_list(drest) if drest != ONE else []

    # cancel common factors; powers of a common base cancel by exponent
    powers: dict = {}
    opaque_num: list = []
    opaque_den: list = []

    def pull_sum_content(factors, sign):
        # a sum whose terms share a monomial factor donates it to the
        # quotient so that it can cancel against the other side
        out = []
        for f in factors:
            if isinstance(f, Sum):
                common = _sum_content(f)
                if common:
                    for b, x in common.items():
                        powers[b] = powers.get(b, Fraction(0)) + sign * x
                    out.append(_strip_content(f, common))
                    continue
            out.append(f)
        return out

    nf = pull_sum_content(nf, 1)
    df = pull_sum_content(df, -1)

    def absorb(factors, sign, opaque):
        for f in factors:
            if isinstance(f, Power) and not isinstance(f.exponent, Const):
                if sign > 0 and f in opaque_den:
                    opaque_den.remove(f)
                elif sign < 0 and f in opaque_num:
                    opaque_num.remove(f)
                else:
                    opaque.append(f)
            else:
                b, x = _rational_exponent(f)
                powers[b] = powers.get(b, Fraction(0)) + sign * x

    absorb(nf, 1, opaque_num)
    absorb(df, -1, opaque_den)

    new_nf, new_df = [], []
    for b in sorted(powers, key=_sort_key):
        x = powers[b]
        if x == 0:
            continue
        side = new_nf if x > 0 else new_df
        x = abs(x)
        side.append(b if x == 1 else Power(b, Const(x)))
    new_nf.extend(opaque_num)
    new_df.extend(opaque_den)

    c = nc / dc
    new_num = _norm_product([Const(c)] + new_nf) if new_nf else Const(c)
    if not new_df:
        return new_num
    if isinstance(new_num, Const) and new_num.value == 0:
        return ZERO
    new_den = _norm_product(new_df)
    if isinstance(new_num, Quotient) or isinstance(new_den, (Quotient, Const)):
        return _norm_quotient(new_num, new_den)
    dc2, dr2 = _split_coeff(new_den)
    if dc2 != 1:
        # keep denominators coefficient-free (monic leading term)
        new_num = _norm_product([Const(1 / dc2), new_num])
        new_den = dr2
        if isinstance(new_num, Quotient) or isinstance(new_den, (Quotient, Const)):
            return _norm_quotient(new_num, new_den)
    if isinstance(new_num, Const) and new_num.value == 0:
        return ZERO
    return Quotient(new_num, new_den)


def _nth_root_exact(v: Fraction, n: int):
    if v < 0:
        return None
    def iroot(k: int):
        if k in (0, 1):
            return k
        r = round(k ** (1.0 / n))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** n == k:
                return cand
        return None
    a = iroot(v.numerator)
    b = iroot(v.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _norm_power(b: Expr, x: Expr) -> Expr:
    if isinstance(x, Const):
        v = x.value
        if v == 0:
            return ONE
        if v == 1:
            return b
        if isinstance(b, Const):
            if v.denominator == 1:
                if b.value == 0 and v < 0:
                    return Power(b, x)  # undefined
                return Const(b.value ** int(v))
            root = _nth_root_exact(b.value, v.denominator)
            if root is not None:
                return _norm_power(Const(root), Const(Fraction(v.numerator)))
        if isinstance(b, Power) and isinstance(b.exponent, Const):
            m = b.exponent.value
            # (u^m)^v = u^(m*v) except for even integer m with fractional v,
            # where the left side is |u|^(m*v)
            if not (m.denominator == 1 and m.numerator % 2 == 0 and v.denominator != 1):
                return _norm_power(b.base, Const(m * v))
        if isinstance(b, Func) and b.name == "exp":
            return Func("exp", _norm_product([Const(v), b.arg]))
        if isinstance(b, Product) and v.denominator == 1:
            return _norm_product([_norm_power(f, x) for f in b.factors])
        if isinstance(b, Quotient) and v.denominator == 1:
            if v > 0:
                return _norm_quotient(_norm_power(b.numerator, x),
                                      _norm_power(b.denominator, x))
            return _norm_quotient(_norm_power(b.denominator, Const(-v)),
                                  _norm_power(b.numerator, Const(-v)))
        if isinstance(b, Neg) and v.denominator == 1:
            inner = _norm_power(b.operand, x)
            return inner if int(v) % 2 == 0 else _negate(inner)
        if isinstance(b, Sum) and v.denominator == 1 and 2 <= v <= 4:
            if len(b.terms) ** int(v) <= _EXPAND_LIMIT:
                combos = list(b.terms)
                for _ in range(int(v) - 1):
                    combos = [mul(c, t) for c in combos for t in b.terms]
                return _norm_sum([_norm_product(_factor_list(c)) for c in combos])
    return Power(b, x)


def _norm_func(name: str, a: Expr) -> Expr:
    if name == "sqrt":
        return _norm_power(a, Const(Fraction(1, 2)))
    if name == "exp":
        if a == ZERO:
            return ONE
        if isinstance(a, Func) and a.name == "log":
            return a.arg
        return Func("exp", a)
    if name == "log":
        if a == ONE:
            return ZERO
        if isinstance(a, Func) and a.name == "exp":
            return a.arg
        return Func("log", a)
    if name == "sin" and a == ZERO:
        return ZERO
    if name == "cos" and a == ZERO:
        return ONE
    return Func(name, a)


# --------------------------------------------------------------------------
# printing
# --------------------------------------------------------------------------

def _const_prec(v: Fraction) -> int:
    if v < 0:
        return _ADD_PREC
    if v.denominator != 1:
        return _MUL_PREC
    return 40


def _node_prec(e: Expr) -> int:
    if isinstance(e, Const):
        return _const_prec(e.value)
    if isinstance(e, (Var, Func)):
        return 40
    if isinstance(e, Power):
        return _POW_PREC
    if isinstance(e, (Product, Quotient)):
        return _MUL_PREC
    return _ADD_PREC  # Sum, Neg


def _sign_split(e: Expr):
    if isinstance(e, Const) and e.value < 0:
        return True, Const(-e.value)
    if isinstance(e, Neg):
        return True, e.operand
    if isinstance(e, Product) and isinstance(e.factors[0], Const) and e.factors[0].value < 0:
        return True, _negate(e)
    if isinstance(e, Quotient):
        s, pos = _sign_split(e.numerator)
        return s, (Quotient(pos, e.denominator) if s else e)
    return False, e


def _print(e: Expr, ctx: int) -> str:
    negd, pos = _sign_split(e)
    s = _print_pos(pos)
    if negd:
        s = "-" + s
        if _ADD_PREC < ctx:
            return "(" + s + ")"
        return s
    if _node_prec(pos) < ctx:
        return "(" + s + ")"
    return s


def _print_pos(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({_print(e.arg, 0)})"
    if isinstance(e, Sum):
        out = _print(e.terms[0], _ADD_PREC)
        for t in e.terms[1:]:
            negd, pos = _sign_split(t)
            if negd:
                out += "-" + _print(pos, _ADD_PREC + 1)
            else:
                out += "+" + _print(t, _ADD_PREC + 1)
        return out
    if isinstance(e, Product):
        return "*".join(_print(f, _MUL_PREC) for f in e.factors)
    if isinstance(e, Quotient):
        return _print(e.numerator, _MUL_PREC) + "/" + _print(e.denominator, _MUL_PREC + 1)
    if isinstance(e, Power):
        return _print(e.base, _POW_PREC + 1) + "^" + _print(e.exponent, _POW_PREC + 1)
    if isinstance(e, Neg):  # only reachable as a Power base
        return "-" + _print(e.operand, _ADD_PREC + 1)
    raise TypeError(type(e))


def format_expr(e: Expr) -> str:
    """Render the normalized form of `e`; output re-parses to that tree."""
    return _print(simplify(e), 0)


# --------------------------------------------------------------------------
# calculus and evaluation
# --------------------------------------------------------------------------

def differentiate(e: Expr, v: str) -> Expr:
    """Exact symbolic partial derivative with respect to variable `v`."""
    if v not in free_vars(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Sum):
        return add(*[differentiate(t, v) for t in e.terms])
    if isinstance(e, Neg):
        return neg(differentiate(e.operand, v))
    if isinstance(e, Product):
        terms = []
        for i, f in enumerate(e.factors):
            df = differentiate(f, v)
            if df == ZERO:
                continue
            terms.append(mul(*e.factors[:i], df, *e.factors[i + 1:]))
        return add(*terms)
    if isinstance(e, Quotient):
        a, b = e.numerator, e.denominator
        da, db = differentiate(a, v), differentiate(b, v)
        return div(add(mul(da, b), neg(mul(a, db))), Power(b, Const(Fraction(2))))
    if isinstance(e, Power):
        b, x = e.base, e.exponent
        if v not in free_vars(x):
            return mul(x, Power(b, add(x, Const(Fraction(-1)))), differentiate(b, v))
        if v not in free_vars(b):
            return mul(e, Func("log", b), differentiate(x, v))
        return mul(e, add(mul(differentiate(x, v), Func("log", b)),
                          mul(x, div(differentiate(b, v), b))))
    if isinstance(e, Func):
        da = differentiate(e.arg, v)
        if e.name == "exp":
            return mul(Func("exp", e.arg), da)
        if e.name == "log":
            return div(da, e.arg)
        if e.name == "sin":
            return mul(Func("cos", e.arg), da)
        if e.name == "cos":
            return neg(mul(Func("sin", e.arg), da))
        if e.name == "sqrt":
            return div(da, mul(Const(Fraction(2)), Func("sqrt", e.arg)))
    raise TypeError(type(e))


def substitute(e: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Simultaneous substitution; inserted right-hand sides are not rescanned."""
    if not bindings:
        return e
    if isinstance(e, Var):
        return bindings.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Sum):
        return add(*[substitute(t, bindings) for t in e.terms])
    if isinstance(e, Product):
        return mul(*[substitute(f, bindings) for f in e.factors])
    if isinstance(e, Power):
        return Power(substitute(e.base, bindings), substitute(e.exponent, bindings))
    if isinstance(e, Quotient):
        return div(substitute(e.numerator, bindings), substitute(e.denominator, bindings))
    if isinstance(e, Neg):
        return neg(substitute(e.operand, bindings))
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, bindings))
    raise TypeError(type(e))


def _guard_pow(a: float, b: float, blame=None) -> float:
    if a > 0.0:
        try:
            return a ** b
        except OverflowError:
            raise EvalDomainError("overflow in power", blame)
    if a == 0.0:
        if b > 0.0:
            return 0.0
        if b == 0.0:
            return 1.0
        raise EvalDomainError("zero raised to a negative power", blame)
    if b == int(b):
        try:
            return a ** int(b)
        except OverflowError:
            raise EvalDomainError("overflow in power", blame)
    raise EvalDomainError("negative base with fractional exponent", blame)


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Real evaluation at a point binding every free variable."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(point[e.name])
        except KeyError:
            raise ValueError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Sum):
        return math.fsum(evaluate(t, point) for t in e.terms)
    if isinstance(e, Product):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, point)
        return out
    if isinstance(e, Neg):
        return -evaluate(e.operand, point)
    if isinstance(e, Quotient):
        den = evaluate(e.denominator, point)
        if den == 0.0:
            raise EvalDomainError("division by zero", e)
        return evaluate(e.numerator, point) / den
    if isinstance(e, Power):
        return _guard_pow(evaluate(e.base, point), evaluate(e.exponent, point), e)
    if isinstance(e, Func):
        a = evaluate(e.arg, point)
        if e.name == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                raise EvalDomainError("overflow in exp", e)
        if e.name == "log":
            if a <= 0.0:
                raise EvalDomainError("log of non-positive argument", e)
            return math.log(a)
        if e.name == "sin":
            return math.sin(a)
        if e.name == "cos":
            return math.cos(a)
        if e.name == "sqrt":
            if a < 0.0:
                raise EvalDomainError("sqrt of negative argument", e)
            return math.sqrt(a)
    raise TypeError(type(e))


# --------------------------------------------------------------------------
# compiled evaluation (hot paths: sampling, integration, monitoring)
# --------------------------------------------------------------------------

def _c_exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise EvalDomainError("overflow in exp")


def _c_log(a):
    if a <= 0.0:
        raise EvalDomainError("log of non-positive argument")
    return math.log(a)


def _c_sqrt(a):
    if a < 0.0:
        raise EvalDomainError("sqrt of negative argument")
    return math.sqrt(a)


def _c_div(a, b):
    if b == 0.0:
        raise EvalDomainError("division by zero")
    return a / b


def _c_pow(a, b):
    return _guard_pow(a, b)


_COMPILE_ENV = {
    "__builtins__": {},
    "_exp": _c_exp, "_log": _c_log, "_sin": math.sin, "_cos": math.cos,
    "_sqrt": _c_sqrt, "_div": _c_div, "_pow": _c_pow,
}


def _emit(e: Expr, sym: Mapping[str, str]) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        try:
            return sym[e.name]
        except KeyError:
            raise ValueError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Sum):
        return "(" + "+".join(_emit(t, sym) for t in e.terms) + ")"
    if isinstance(e, Product):
        return "(" + "*".join(_emit(f, sym) for f in e.factors) + ")"
    if isinstance(e, Neg):
        return "(-" + _emit(e.operand, sym) + ")"
    if isinstance(e, Quotient):
        return f"_div({_emit(e.numerator, sym)},{_emit(e.denominator, sym)})"
    if isinstance(e, Power):
        if isinstance(e.exponent, Const) and e.exponent.value.denominator == 1 \
                and 0 < e.exponent.value <= 16:
            return f"({_emit(e.base, sym)})**{int(e.exponent.value)}"
        return f"_pow({_emit(e.base, sym)},{_emit(e.exponent, sym)})"
    if isinstance(e, Func):
        fn = {"exp": "_exp", "log": "_log", "sin": "_sin",
              "cos": "_cos", "sqrt": "_sqrt"}[e.name]
        return f"{fn}({_emit(e.arg, sym)})"
    raise TypeError(type(e))


def compile_expr(e: Expr, names: Sequence[str]) -> Callable[..., float]:
    """Compile to a positional-argument float function over `names`."""
    sym = {n: f"_v{i}" for i, n in enumerate(names)}
    args = ",".join(sym[n] for n in names)
    src = f"lambda {args}: ({_emit(e, sym)})" if names else f"lambda: ({_emit(e, sym)})"
    return eval(src, dict(_COMPILE_ENV))


# --------------------------------------------------------------------------
# zero testing
# --------------------------------------------------------------------------

DEFAULT_INTERVAL = (0.2, 1.2)


@dataclass
class DomainBox:
    """Closed intervals per variable; unlisted variables get the default
    interval, which keeps log/sqrt/division safe for all bundled problems."""

    intervals: dict = field(default_factory=dict)
    default: tuple = DEFAULT_INTERVAL

    def __post_init__(self):
        for name, (lo, hi) in self.intervals.items():
            if not lo < hi:
                raise ValueError(f"empty interval for {name!r}: [{lo}, {hi}]")

    def interval(self, name: str) -> tuple:
        return self.intervals.get(name, self.default)


@dataclass(frozen=True)
class ZeroTestConfig:
    samples: int = 100
    seed: int = 0
    abs_tol: float = 1e-9


@dataclass(frozen=True)
class ZeroVerdict:
    """Outcome of a zero test.

    ProvenZero: the normal form is the literal zero constant.
    NumericallyZero: every sampled scaled residual was at most abs_tol.
    NonZero: carries a reproducible witness point and its scaled residual.
    """

    tag: str
    samples: int = 0
    max_residual: float = 0.0
    witness: Optional[dict] = None
    witness_residual: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.tag in ("ProvenZero", "NumericallyZero")

    def __str__(self):
        if self.tag == "ProvenZero":
            return "ProvenZero"
        if self.tag == "NumericallyZero":
            return f"NumericallyZero(max={self.max_residual:.3e}, n={self.samples})"
        return f"NonZero(residual={self.witness_residual:.3e} at {self.witness})"


PROVEN_ZERO = ZeroVerdict("ProvenZero")


def is_identically_zero(e: Expr, box: Optional[DomainBox] = None,
                        cfg: Optional[ZeroTestConfig] = None) -> ZeroVerdict:
    """Two-tier zero test: symbolic normalization, then seeded sampling.

    Residuals are scaled by (1 + max |additive subterm|) at each point so
    that cancellations between large terms are judged relatively.
    """
    box = box or DomainBox()
    cfg = cfg or ZeroTestConfig()
    z = simplify(e)
    if z == ZERO:
        return PROVEN_ZERO

    names = sorted(free_vars(z))
    terms = list(z.terms) if isinstance(z, Sum) else [z]
    fns = [compile_expr(t, names) for t in terms]
    rng = random.Random(cfg.seed)

    worst = -1.0
    worst_point = None
    evaluated = 0
    failures = 0
    blame = None
    for _ in range(cfg.samples):
        point = [rng.uniform(*box.interval(n)) for n in names]
        try:
            vals = [f(*point) for f in fns]
        except EvalDomainError:
            failures += 1
            if blame is None:
                # slow tree walk only to name the offending sub-expression
                try:
                    evaluate(z, dict(zip(names, point)))
                except EvalDomainError as err:
                    blame = err.subexpr
                except ValueError:
                    pass
            continue
        evaluated += 1
        scale = 1.0 + max(abs(v) for v in vals)
        resid = abs(math.fsum(vals)) / scale
        if resid > worst:
            worst = resid
            worst_point = dict(zip(names, point))

    if failures > 0.9 * cfg.samples:
        what = format_expr(blame) if blame is not None else format_expr(z)
        raise SamplingError(
            f"{failures}/{cfg.samples} sample points hit domain errors in {what}", blame)
    if worst <= cfg.abs_tol:
        return ZeroVerdict("NumericallyZero", samples=evaluated, max_residual=worst)
    return ZeroVerdict("NonZero", samples=evaluated, max_residual=worst,
                       witness=worst_point, witness_residual=worst)
