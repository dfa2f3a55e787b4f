"""Sparse multivariate polynomials with exact rational or float coefficients.

Exponents are dense tuples of nonnegative ints; the global monomial order is
graded lexicographic (total degree first, then lexicographic with x1 heaviest),
so for n=2 the degree-2 monomials sort as x1^2, x1*x2, x2^2.

Two coefficient fields are supported: "exact" (fractions.Fraction, used on
every verification path) and "float" (64-bit binary, used for SDP assembly).
Conversion exact -> float is explicit via to_float(); the reverse direction is
deliberately not provided.
"""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

EXACT = "exact"
FLOAT = "float"

NEG_INF = float("-inf")

Exponent = tuple  # tuple of n nonnegative ints


def grlex_key(alpha: Exponent):
    """Sort key realizing graded lex order (ascending)."""
    return (sum(alpha), tuple(-e for e in alpha))


def _coerce(c, field):
    if field == EXACT:
        if isinstance(c, bool):
            raise TypeError("bool is not a coefficient")
        if isinstance(c, int):
            return Fraction(c)
        if isinstance(c, Fraction):
            return c
        raise TypeError(f"exact field requires int/Fraction coefficients, got {type(c).__name__}")
    if field == FLOAT:
        if isinstance(c, (int, float, Fraction)) and not isinstance(c, bool):
            return float(c)
        raise TypeError(f"float field requires numeric coefficients, got {type(c).__name__}")
    raise ValueError(f"unknown field {field!r}")


class Polynomial:
    """Immutable sparse polynomial in n variables.

    terms maps exponent tuples to nonzero coefficients; the zero polynomial
    has an empty term map and degree -inf.
    """

    __slots__ = ("n", "field", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Exponent, object], field: str = EXACT):
        if n < 1:
            raise ValueError("variable count must be >= 1")
        clean = {}
        for alpha, c in terms.items():
            alpha = tuple(int(e) for e in alpha)
            if len(alpha) != n or any(e < 0 for e in alpha):
                raise ValueError(f"bad exponent {alpha} for n={n}")
            c = _coerce(c, field)
            if c:
                clean[alpha] = clean.get(alpha, _coerce(0, field)) + c
                if not clean[alpha]:
                    del clean[alpha]
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n: int, field: str = EXACT) -> "Polynomial":
        return cls(n, {}, field)

    @classmethod
    def constant(cls, n: int, c, field: str = EXACT) -> "Polynomial":
        return cls(n, {(0,) * n: c}, field)

    @classmethod
    def variable(cls, n: int, i: int, field: str = EXACT) -> "Polynomial":
        if not 0 <= i < n:
            raise IndexError(f"variable index {i} out of range for n={n}")
        alpha = [0] * n
        alpha[i] = 1
        return cls(n, {tuple(alpha): 1}, field)

    @classmethod
    def monomial(cls, n: int, alpha: Sequence[int], c=1, field: str = EXACT) -> "Polynomial":
        return cls(n, {tuple(alpha): c}, field)

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self) -> Iterator:
        return iter(self._terms.items())

    @property
    def degree(self):
        if not self._terms:
            return NEG_INF
        return max(sum(a) for a in self._terms)

    def coefficient(self, alpha: Sequence[int]):
        return self._terms.get(tuple(alpha), _coerce(0, self.field))

    def is_zero(self) -> bool:
        return not self._terms

    def max_abs_coefficient(self):
        if not self._terms:
            return _coerce(0, self.field)
        return max(abs(c) for c in self._terms.values())

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return (self.n, self.field, self._terms) == (other.n, other.field, other._terms)

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.n, self.field, frozenset(self._terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r}, n={self.n})"

    # -- ring operations ----------------------------------------------------

    def _check_compatible(self, other: "Polynomial"):
        if self.n != other.n:
            raise ValueError(f"variable count mismatch: {self.n} vs {other.n}")
        if self.field != other.field:
            raise ValueError(f"field mismatch: {self.field} vs {other.field}")

    def __add__(self, other):
        if isinstance(other, (int, float, Fraction)):
            other = Polynomial.constant(self.n, other, self.field)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check_compatible(other)
        out = dict(self._terms)
        for a, c in other._terms.items():
            out[a] = out.get(a, 0) + c
        return Polynomial(self.n, out, self.field)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {a: -c for a, c in self._terms.items()}, self.field)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Polynomial) else -_coerce(other, self.field))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, Fraction)):
            c = _coerce(other, self.field)
            return Polynomial(self.n, {a: v * c for a, v in self._terms.items()}, self.field)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check_compatible(other)
        out = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                ab = tuple(x + y for x, y in zip(a, b))
                out[ab] = out.get(ab, 0) + ca * cb
        return Polynomial(self.n, out, self.field)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if self.field == EXACT:
            return self * (Fraction(1) / Fraction(scalar))
        return self * (1.0 / float(scalar))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(self.n, 1, self.field)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- calculus and evaluation --------------------------------------------

    def eval(self, u: Sequence):
        if len(u) != self.n:
            raise ValueError(f"point has length {len(u)}, expected {self.n}")
        total = 0
        for alpha, c in self._terms.items():
            v = c
            for x, e in zip(u, alpha):
                if e:
                    v = v * x ** e
            total = total + v
        return total

    def partial(self, i: int) -> "Polynomial":
        if not 0 <= i < self.n:
            raise IndexError(f"variable index {i} out of range")
        out = {}
        for alpha, c in self._terms.items():
            e = alpha[i]
            if e:
                beta = list(alpha)
                beta[i] = e - 1
                out[tuple(beta)] = out.get(tuple(beta), 0) + c * e
        return Polynomial(self.n, out, self.field)

    def gradient(self) -> tuple:
        return tuple(self.partial(i) for i in range(self.n))

    def substitute(self, i: int, q: "Polynomial") -> "Polynomial":
        """Replace x_i by q.  A univariate self may be composed into any ring."""
        if self.n == 1 and i == 0:
            n_out = q.n
        else:
            if not 0 <= i < self.n:
                raise IndexError(f"variable index {i} out of range")
            if q.n != self.n:
                raise ValueError("substituted polynomial must share the variable count")
            n_out = self.n
        if q.field != self.field:
            raise ValueError("field mismatch in substitution")
        result = Polynomial.zero(n_out, self.field)
        for alpha, c in self._terms.items():
            term = Polynomial.constant(n_out, c, self.field)
            for j, e in enumerate(alpha):
                if e == 0:
                    continue
                if j == i:
                    term = term * q ** e
                else:
                    mono = [0] * n_out
                    mono[j] = e
                    term = term * Polynomial.monomial(n_out, mono, 1, self.field)
            result = result + term
        return result

    def to_float(self) -> "Polynomial":
        if self.field == FLOAT:
            return self
        return Polynomial(self.n, {a: float(c) for a, c in self._terms.items()}, FLOAT)


# -- monomial bases ---------------------------------------------------------


class MonomialBasis:
    """All exponents of total degree <= t in n variables, in graded lex order."""

    __slots__ = ("n", "t", "exponents", "_index")

    def __init__(self, n: int, t: int):
        if n < 1 or t < 0:
            raise ValueError("need n >= 1 and t >= 0")
        exps = []
        for d in range(t + 1):
            exps.extend(sorted(_exponents_of_degree(n, d), key=grlex_key))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "exponents", tuple(exps))
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(exps)})

    def __setattr__(self, *a):
        raise AttributeError("MonomialBasis is immutable")

    def __len__(self):
        return len(self.exponents)

    def __iter__(self):
        return iter(self.exponents)

    def __getitem__(self, i):
        return self.exponents[i]

    def index(self, alpha: Exponent) -> int:
        return self._index[tuple(alpha)]

    def __contains__(self, alpha):
        return tuple(alpha) in self._index


def _exponents_of_degree(n: int, d: int) -> Iterator[Exponent]:
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _exponents_of_degree(n - 1, d - first):
            yield (first,) + rest


def basis(n: int, t: int) -> MonomialBasis:
    return MonomialBasis(n, t)


def basis_size(n: int, t: int) -> int:
    return math.comb(n + t, n)


# -- text syntax ------------------------------------------------------------
#
# Terms like "3/2*x1^2*x2 - x3 + 1"; variables x1..xn; rational coefficients
# p/q or decimal literals; whitespace-insensitive.

_TOKEN = re.compile(
    r"""
    (?P<sign>[+-])
  | (?P<coeff>\d+/\d+|\d*\.\d+|\d+)
  | (?P<var>x(?P<vi>\d+)(\^(?P<exp>\d+))?)
  | (?P<star>\*)
  | (?P<ws>\s+)
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    pass


def parse_polynomial(text: str, n: int, field: str = EXACT) -> Polynomial:
    """Parse the fixed linear-term grammar into a canonical Polynomial."""
    terms: dict = {}
    pos = 0
    sign = 1
    cur_coeff = None
    cur_exp = None
    started = False

    has_factor = False

    def flush():
        nonlocal sign, cur_coeff, cur_exp, started, has_factor
        if not started:
            return
        if not has_factor:
            raise ParseError("sign with no following term")
        c = Fraction(1) if cur_coeff is None else cur_coeff
        c *= sign
        alpha = tuple(cur_exp)
        terms[alpha] = terms.get(alpha, Fraction(0)) + c
        sign, cur_coeff, cur_exp, started, has_factor = 1, None, None, False, False

    expect_factor = False
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} at position {pos}")
        pos = m.end()
        if m.group("ws"):
            continue
        if m.group("sign"):
            if expect_factor:
                raise ParseError(f"dangling '*' before {m.group('sign')!r}")
            flush()
            sign = 1 if m.group("sign") == "+" else -1
            started = True
            cur_exp = [0] * n
            continue
        if not started:
            started = True
            cur_exp = [0] * n
        if m.group("coeff"):
            val = Fraction(m.group("coeff"))
            cur_coeff = val if cur_coeff is None else cur_coeff * val
            has_factor = True
        elif m.group("var"):
            vi = int(m.group("vi"))
            if not 1 <= vi <= n:
                raise ParseError(f"variable x{vi} out of range for n={n}")
            e = int(m.group("exp")) if m.group("exp") else 1
            cur_exp[vi - 1] += e
            has_factor = True
        elif m.group("star"):
            if not has_factor:
                raise ParseError("'*' with no preceding factor")
            expect_factor = True
            continue
        expect_factor = False
    if expect_factor:
        raise ParseError("dangling '*' at end of input")
    flush()
    if not terms and not text.strip():
        raise ParseError("empty polynomial text")
    if field == FLOAT:
        return Polynomial(n, {a: float(c) for a, c in terms.items()}, FLOAT)
    return Polynomial(n, terms, EXACT)


def _format_scalar(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    return repr(float(c))


def format_polynomial(p: Polynomial) -> str:
    """Canonical text form; parse(format(p)) == p."""
    if p.is_zero():
        return "0"
    parts = []
    for alpha in sorted(p._terms, key=grlex_key, reverse=True):
        c = p._terms[alpha]
        neg = c < 0
        mag = -c if neg else c
        factors = []
        if mag != 1 or not any(alpha):
            factors.append(_format_scalar(mag))
        for i, e in enumerate(alpha):
            if e == 1:
                factors.append(f"x{i + 1}")
            elif e > 1:
                factors.append(f"x{i + 1}^{e}")
        mono = "*".join(factors)
        if not parts:
            parts.append(("-" if neg else "") + mono)
        else:
            parts.append(("- " if neg else "+ ") + mono)
    return " ".join(parts)
