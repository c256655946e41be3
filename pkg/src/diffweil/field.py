"""Exact arithmetic in the base differential field K = Q(t_1, ..., t_k).

A RatFunc is a quotient num/den of sparse polynomials kept in a unique
canonical form: the polynomial gcd is cancelled, numerator and
denominator are jointly content-free with integer coefficients, and the
grlex-leading coefficient of the denominator is positive.  Equality is
therefore structural.

The derivations are data: a BaseFieldSpec fixes the number of generators
k, the number of derivations m, and the action of each derivation on
each generator.  Everything else follows from linearity, Leibniz and the
quotient rule.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd
from math import lcm as int_lcm

from .errors import BadIndex, DivisionByZero
from .polys import Poly, exact_div, mono_key, poly_gcd


class RatFunc:
    """Element of Q(t_1, ..., t_k) in canonical form."""

    __slots__ = ("k", "num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly):
        if den.is_zero():
            raise DivisionByZero("zero denominator")
        if num.k != den.k:
            raise BadIndex("numerator and denominator have different arity")
        num, den = _canonical(num, den)
        self.k = num.k
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def _raw(cls, num: Poly, den: Poly) -> "RatFunc":
        """Skip canonicalization; callers must supply an already-canonical pair."""
        self = object.__new__(cls)
        self.k = num.k
        self.num = num
        self.den = den
        self._hash = None
        return self

    @classmethod
    def const(cls, k: int, c) -> "RatFunc":
        return cls(Poly.const(k, Fraction(c)), Poly.const(k, 1))

    @classmethod
    def gen(cls, k: int, j: int) -> "RatFunc":
        if not 1 <= j <= k:
            raise BadIndex(f"generator index {j} out of range 1..{k}")
        return cls(Poly.gen(k, j), Poly.const(k, 1))

    @classmethod
    def from_poly(cls, p: Poly) -> "RatFunc":
        return cls(p, Poly.const(p.k, 1))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num == self.den

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def as_fraction(self) -> Fraction:
        """Value of a constant element; raises if generators occur."""
        if not self.is_constant():
            raise ValueError("not a constant rational function")
        if self.is_zero():
            return Fraction(0)
        return self.num.constant_value() / self.den.constant_value()

    # arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, (int, Fraction)):
            return RatFunc.const(self.k, other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        # negating the numerator preserves canonical form
        return RatFunc._raw(-self.num, self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inv(self) -> "RatFunc":
        if self.is_zero():
            raise DivisionByZero("inversion of zero")
        num, den = self.den, self.num
        if den.leading()[1] < 0:
            num, den = -num, -den
        return RatFunc._raw(num, den)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        return RatFunc(self.num ** e, self.den ** e)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __repr__(self):
        return f"RatFunc({self})"

    def __str__(self):
        return format_ratfunc(self)


def _canonical(num: Poly, den: Poly):
    if num.is_zero():
        return Poly.zero(num.k), Poly.const(num.k, 1)
    g = poly_gcd(num, den)
    if not (g.is_constant() and g.constant_value() == 1):
        num = exact_div(num, g)
        den = exact_div(den, g)
    # joint integer normalization: clear denominators, strip common content
    coeffs = list(num.terms.values()) + list(den.terms.values())
    l = 1
    for c in coeffs:
        l = int_lcm(l, c.denominator)
    g0 = 0
    for c in coeffs:
        g0 = int_gcd(g0, c.numerator * (l // c.denominator))
    scale = Fraction(l, g0)
    num, den = num.scale(scale), den.scale(scale)
    if den.leading()[1] < 0:
        num, den = -num, -den
    return num, den


# printing -------------------------------------------------------------


def format_poly(p: Poly, names) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for m, c in p.sorted_terms():
        factors = []
        for j, e in enumerate(m):
            if e == 0:
                continue
            factors.append(names[j] if e == 1 else f"{names[j]}^{e}")
        mono = "*".join(factors)
        if not mono:
            piece = str(c)
        elif c == 1:
            piece = mono
        elif c == -1:
            piece = "-" + mono
        else:
            piece = f"{c}*{mono}"
        parts.append(piece)
    out = parts[0]
    for piece in parts[1:]:
        if piece.startswith("-"):
            out += " - " + piece[1:]
        else:
            out += " + " + piece
    return out


def format_ratfunc(f: RatFunc, names=None) -> str:
    names = names or default_gen_names(f.k)
    ns = format_poly(f.num, names)
    if f.den.is_constant() and f.den.constant_value() == 1:
        return ns
    ds = format_poly(f.den, names)
    if len(f.num.terms) > 1:
        ns = f"({ns})"
    return f"{ns}/({ds})"


def ratfunc_is_atomic(f: RatFunc) -> bool:
    """True when the printed form needs no parentheses as a coefficient."""
    return f.den.is_constant() and f.den.constant_value() == 1 and len(f.num.terms) <= 1


def default_gen_names(k: int):
    return ("t",) if k == 1 else tuple(f"t{j}" for j in range(1, k + 1))


# the differential structure --------------------------------------------


class BaseFieldSpec:
    """K = Q(t_1..t_k) with m derivations given by their action on generators.

    ``action[d-1][j-1]`` is the RatFunc value of delta_d(t_j).
    """

    def __init__(self, k: int, m: int, action, gen_names=None):
        if k < 0 or m < 0:
            raise BadIndex("negative generator or derivation count")
        self.k = k
        self.m = m
        if len(action) != m or any(len(row) != k for row in action):
            raise BadIndex("action table must be m rows of k entries")
        self.action = tuple(tuple(row) for row in action)
        self.gen_names = tuple(gen_names) if gen_names else default_gen_names(k)
        if len(self.gen_names) != k:
            raise BadIndex("need one name per generator")

    # element constructors, for convenience
    def zero(self) -> RatFunc:
        return RatFunc.const(self.k, 0)

    def one(self) -> RatFunc:
        return RatFunc.const(self.k, 1)

    def const(self, c) -> RatFunc:
        return RatFunc.const(self.k, c)

    def gen(self, j: int) -> RatFunc:
        return RatFunc.gen(self.k, j)

    def derive(self, d: int, f: RatFunc) -> RatFunc:
        """delta_d(f) by the quotient rule; d is 1-based."""
        if not 1 <= d <= self.m:
            raise BadIndex(f"derivation index {d} out of range 1..{self.m}")
        dn = self._derive_poly(d, f.num)
        dd = self._derive_poly(d, f.den)
        den_rf = RatFunc.from_poly(f.den)
        num_rf = RatFunc.from_poly(f.num)
        return (dn * den_rf - num_rf * dd) / (den_rf * den_rf)

    def _derive_poly(self, d: int, p: Poly) -> RatFunc:
        out = RatFunc.const(self.k, 0)
        for j in range(1, self.k + 1):
            pj = p.partial(j)
            if pj.is_zero():
                continue
            out = out + RatFunc.from_poly(pj) * self.action[d - 1][j - 1]
        return out

    def fmt(self, f: RatFunc) -> str:
        return format_ratfunc(f, self.gen_names)


def derive_base(spec: BaseFieldSpec, d: int, f: RatFunc) -> RatFunc:
    return spec.derive(d, f)


def field_arith(op: str, a: RatFunc, b: RatFunc = None) -> RatFunc:
    """Dispatcher used by the task runner; library code uses operators."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "inv":
        return a.inv()
    raise BadIndex(f"unknown field operation {op!r}")


class FieldRejection:
    """Witness for a failing commutation check: [delta_i, delta_j](t_l) != 0."""

    def __init__(self, i: int, j: int, gen: int, bracket: RatFunc):
        self.i = i
        self.j = j
        self.gen = gen
        self.bracket = bracket

    def __str__(self):
        return (
            f"[d{self.i}, d{self.j}] does not vanish on generator {self.gen}: "
            f"bracket value {self.bracket}"
        )


def validate_field(spec: BaseFieldSpec):
    """None when all derivation pairs commute on every generator, else a witness."""
    for i in range(1, spec.m + 1):
        for j in range(i + 1, spec.m + 1):
            for l in range(1, spec.k + 1):
                tl = spec.gen(l)
                bracket = spec.derive(i, spec.derive(j, tl)) - spec.derive(j, spec.derive(i, tl))
                if not bracket.is_zero():
                    return FieldRejection(i, j, l, bracket)
    return None
