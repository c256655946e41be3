"""Sparse multivariate polynomials over Q, the engine under RatFunc.

A polynomial in k variables is a dict mapping exponent tuples (length k)
to nonzero Fractions.  The monomial order used everywhere is graded
lexicographic (grlex): compare total degree first, then the exponent
tuple lexicographically.  gcd is computed by a primitive PRS in the
highest occurring variable; inputs in this package stay small, so no
modular tricks are needed.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd
from math import lcm as int_lcm

Mono = tuple  # exponent tuple, length = arity of the ring


def mono_mul(a: Mono, b: Mono) -> Mono:
    return tuple(x + y for x, y in zip(a, b))


def mono_key(a: Mono):
    # grlex: total degree, then lex on the exponent vector
    return (sum(a), a)


class Poly:
    """Immutable sparse polynomial over Fraction in ``k`` variables."""

    __slots__ = ("k", "terms", "_hash")

    def __init__(self, k: int, terms: dict):
        self.k = k
        self.terms = {m: c for m, c in terms.items() if c != 0}
        self._hash = None

    @classmethod
    def zero(cls, k: int) -> "Poly":
        return cls(k, {})

    @classmethod
    def const(cls, k: int, c) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return cls.zero(k)
        return cls(k, {(0,) * k: c})

    @classmethod
    def gen(cls, k: int, j: int) -> "Poly":
        """The generator t_j, 1-based."""
        e = [0] * k
        e[j - 1] = 1
        return cls(k, {tuple(e): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * self.k, Fraction(0))

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def degree_in(self, j: int) -> int:
        """Degree in the 1-based variable j (0 for the zero polynomial)."""
        return max((m[j - 1] for m in self.terms), default=0)

    def vars_used(self):
        used = set()
        for m in self.terms:
            for idx, e in enumerate(m):
                if e:
                    used.add(idx + 1)
        return used

    def leading(self):
        """(monomial, coefficient) for the grlex-leading term; None if zero."""
        if not self.terms:
            return None
        m = max(self.terms, key=mono_key)
        return m, self.terms[m]

    # arithmetic ------------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
        return Poly(self.k, out)

    def __neg__(self) -> "Poly":
        return Poly(self.k, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(other))
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s == 0:
                    out.pop(m, None)
                else:
                    out[m] = s
        return Poly(self.k, out)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return Poly.zero(self.k)
        return Poly(self.k, {m: cc * c for m, cc in self.terms.items()})

    def __pow__(self, e: int) -> "Poly":
        if e < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.const(self.k, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def partial(self, j: int) -> "Poly":
        """Formal partial derivative with respect to variable j (1-based)."""
        out = {}
        for m, c in self.terms.items():
            e = m[j - 1]
            if e == 0:
                continue
            mm = list(m)
            mm[j - 1] = e - 1
            mm = tuple(mm)
            s = out.get(mm, 0) + c * e
            if s == 0:
                out.pop(mm, None)
            else:
                out[mm] = s
        return Poly(self.k, out)

    # equality / hashing ----------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.k == other.k and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.k, frozenset(self.terms.items())))
        return self._hash

    def sorted_terms(self):
        """Terms sorted grlex-descending, for printing and leading-term access."""
        return sorted(self.terms.items(), key=lambda mc: mono_key(mc[0]), reverse=True)

    def __repr__(self):
        return f"Poly(k={self.k}, {dict(self.sorted_terms())!r})"


# univariate views ----------------------------------------------------


def coeffs_in(p: Poly, j: int) -> dict:
    """View p as univariate in variable j: degree -> Poly not involving j."""
    out = {}
    for m, c in p.terms.items():
        e = m[j - 1]
        mm = list(m)
        mm[j - 1] = 0
        key = tuple(mm)
        bucket = out.setdefault(e, {})
        bucket[key] = bucket.get(key, 0) + c
    return {e: Poly(p.k, t) for e, t in out.items() if Poly(p.k, t).terms}


def from_coeffs_in(k: int, j: int, coeffs: dict) -> Poly:
    out = {}
    for e, q in coeffs.items():
        for m, c in q.terms.items():
            mm = list(m)
            mm[j - 1] += e
            out[tuple(mm)] = out.get(tuple(mm), 0) + c
    return Poly(k, out)


def prem(p: Poly, q: Poly, j: int, strip: bool = False) -> Poly:
    """Pseudo-remainder of p by q in variable j: lc(q)^e * p = quot*q + rem.

    With ``strip`` the remainder is only correct up to a positive rational
    factor (content is removed after every elimination step); that mode is
    for gcd computations, where it prevents coefficient swell.
    """
    dq = q.degree_in(j)
    if dq == 0:
        raise ValueError("pseudo-division by a polynomial of degree 0 in the chosen variable")
    qc = coeffs_in(q, j)
    lq = qc[dq]
    r = p
    while not r.is_zero() and r.degree_in(j) >= dq:
        rc = coeffs_in(r, j)
        dr = max(rc)
        lead = rc[dr]
        shift = [0] * p.k
        shift[j - 1] = dr - dq
        r = r * lq - q * (lead * Poly(p.k, {tuple(shift): Fraction(1)}))
        if strip and not r.is_zero():
            r = r.scale(Fraction(1) / rational_content(r))
    return r


def exact_div(p: Poly, g: Poly) -> Poly:
    """Exact quotient p/g; raises ValueError if g does not divide p."""
    if g.is_zero():
        raise ValueError("division by the zero polynomial")
    if p.is_zero():
        return Poly.zero(p.k)
    gm, gc = g.leading()
    out = {}
    r = p
    while not r.is_zero():
        rm, rc = r.leading()
        qm = tuple(a - b for a, b in zip(rm, gm))
        if any(e < 0 for e in qm):
            raise ValueError("not divisible")
        qc = rc / gc
        out[qm] = out.get(qm, 0) + qc
        r = r - g * Poly(p.k, {qm: qc})
    return Poly(p.k, out)


# content / primitive part / gcd --------------------------------------


def rational_content(p: Poly) -> Fraction:
    """Positive rational c with p/c integer-coefficient and content-free; 0 for p = 0."""
    if p.is_zero():
        return Fraction(0)
    nums = [abs(c.numerator) for c in p.terms.values()]
    dens = [c.denominator for c in p.terms.values()]
    g = 0
    for n in nums:
        g = int_gcd(g, n)
    l = 1
    for d in dens:
        l = int_lcm(l, d)
    return Fraction(g, l)


def primitive(p: Poly) -> Poly:
    """p divided by its rational content, sign-fixed so the grlex lc is positive."""
    if p.is_zero():
        return p
    c = rational_content(p)
    q = p.scale(Fraction(1) / c)
    if q.leading()[1] < 0:
        q = -q
    return q


def content_in(p: Poly, j: int) -> Poly:
    """Polynomial content of p viewed as univariate in j."""
    cs = list(coeffs_in(p, j).values())
    g = Poly.zero(p.k)
    for c in cs:
        g = poly_gcd(g, c)
    return g


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Primitive gcd (content-free, positive grlex lc); gcd(0, q) = primitive(q)."""
    if p.is_zero():
        return primitive(q)
    if q.is_zero():
        return primitive(p)
    if p.is_constant() or q.is_constant():
        return Poly.const(p.k, 1)
    js = p.vars_used() | q.vars_used()
    j = max(js)
    if p.degree_in(j) == 0 or q.degree_in(j) == 0:
        # j occurs in only one of them: gcd divides the other's content in j
        if p.degree_in(j) == 0:
            return poly_gcd(p, content_in(q, j))
        return poly_gcd(content_in(p, j), q)
    cp, cq = content_in(p, j), content_in(q, j)
    cont = poly_gcd(cp, cq)
    a = exact_div(p, cp)
    b = exact_div(q, cq)
    if a.degree_in(j) < b.degree_in(j):
        a, b = b, a
    while True:
        r = prem(a, b, j, strip=True)
        if r.is_zero():
            g = b
            break
        if r.degree_in(j) == 0:
            g = Poly.const(p.k, 1)
            break
        a, b = b, primitive(exact_div(r, content_in(r, j)))
    return primitive(cont * g)
