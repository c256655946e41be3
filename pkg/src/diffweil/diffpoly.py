"""Differential polynomials over K (or a finite free extension of it).

Indeterminates are the formal derivatives d^xi x_i, written as DerIndet
pairs (xi, i) with xi a multi-index over the m derivations.  The ranking
is the canonical orderly one: compare (|xi|, i, xi_1, ..., xi_m)
lexicographically.  A DiffPoly is a sparse sum of monomials (descending
tuples of (DerIndet, exponent)) with coefficients in a coefficient ring;
for the plain ring K{x} the coefficients are RatFunc values and the
derivations act through a BaseFieldSpec.

The same term engine backs AlgPoly, the plain polynomial ring in the
renamed variables x_i^xi used for jets and prolongations.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

from .errors import BadBound, BadIndex, NotApplicable
from .field import BaseFieldSpec, RatFunc, ratfunc_is_atomic


class DerIndet(NamedTuple):
    xi: tuple
    i: int


def indet_key(v: DerIndet):
    """Orderly ranking key: (order, variable index, exponent vector), lex."""
    return (sum(v.xi), v.i, v.xi)


def compare_indets(a: DerIndet, b: DerIndet) -> int:
    """-1, 0, 1 for a < b, a = b, a > b in the canonical orderly ranking."""
    if len(a.xi) != len(b.xi):
        raise BadIndex("multi-indices of different length")
    ka, kb = indet_key(a), indet_key(b)
    return (ka > kb) - (ka < kb)


def derive_indet(v: DerIndet, d: int) -> DerIndet:
    xi = list(v.xi)
    xi[d - 1] += 1
    return DerIndet(tuple(xi), v.i)


def is_derivative_of(w: DerIndet, v: DerIndet, proper: bool = False) -> bool:
    """w = d^eta v for some eta (product order on multi-indices); proper requires eta != 0."""
    if w.i != v.i:
        return False
    if any(a < b for a, b in zip(w.xi, v.xi)):
        return False
    return w.xi != v.xi if proper else True


def mono_sort(items) -> tuple:
    return tuple(sorted(items, key=lambda ve: indet_key(ve[0]), reverse=True))


def mono_rank_key(mono: tuple):
    """Total order on monomials: lex on the descending (indet key, exponent) list."""
    return tuple((indet_key(v), e) for v, e in mono)


CONST_MONO = ()


class KRing:
    """Coefficient ring K with derivations from a BaseFieldSpec."""

    is_field = True

    def __init__(self, base: BaseFieldSpec):
        self.base = base

    def zero(self):
        return self.base.zero()

    def one(self):
        return self.base.one()

    def coerce(self, c):
        if isinstance(c, RatFunc):
            if c.k != self.base.k:
                raise BadIndex("coefficient from a field with different generator count")
            return c
        if isinstance(c, (int, Fraction)):
            return self.base.const(c)
        raise BadIndex(f"cannot coerce {type(c).__name__} into the base field")

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def is_zero(self, a):
        return a.is_zero()

    def derive(self, d, a):
        return self.base.derive(d, a)

    def fmt(self, a):
        return self.base.fmt(a)

    def fmt_atomic(self, a):
        return ratfunc_is_atomic(a)

    def __eq__(self, other):
        return isinstance(other, KRing) and self.base is other.base

    def __hash__(self):
        return hash(id(self.base))


class TermPoly:
    """Shared sparse-term engine; subclasses fix semantics and printing."""

    __slots__ = ("ring", "n", "m", "terms", "_hash")

    def __init__(self, ring, n: int, m: int, terms: dict):
        self.ring = ring
        self.n = n
        self.m = m
        self.terms = {mo: c for mo, c in terms.items() if not ring.is_zero(c)}
        self._hash = None

    # constructors ------------------------------------------------------

    @classmethod
    def const(cls, ring, n, m, c):
        c = ring.coerce(c)
        if ring.is_zero(c):
            return cls(ring, n, m, {})
        return cls(ring, n, m, {CONST_MONO: c})

    @classmethod
    def indet(cls, ring, n, m, xi, i):
        v = DerIndet(tuple(xi), i)
        if len(v.xi) != m or not 1 <= i <= n:
            raise BadIndex(f"indeterminate ({xi}, {i}) outside an n={n}, m={m} ring")
        return cls(ring, n, m, {((v, 1),): ring.one()})

    def _check(self, other):
        if self.n != other.n or self.m != other.m or self.ring != other.ring:
            raise BadIndex("mixing polynomials from different rings")

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(mo == CONST_MONO for mo in self.terms)

    def constant_coeff(self):
        return self.terms.get(CONST_MONO, self.ring.zero())

    def order(self):
        """Max |xi| over occurring indeterminates; 0 for constants."""
        out = 0
        for mo in self.terms:
            for v, _ in mo:
                out = max(out, sum(v.xi))
        return out

    def indets(self):
        out = set()
        for mo in self.terms:
            for v, _ in mo:
                out.add(v)
        return out

    def degree_in(self, v: DerIndet) -> int:
        best = 0
        for mo in self.terms:
            for w, e in mo:
                if w == v:
                    best = max(best, e)
        return best

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, type(self)):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, RatFunc)):
            return type(self).const(self.ring, self.n, self.m, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for mo, c in o.terms.items():
            if mo in out:
                s = self.ring.add(out[mo], c)
                if self.ring.is_zero(s):
                    del out[mo]
                else:
                    out[mo] = s
            else:
                out[mo] = c
        return type(self)(self.ring, self.n, self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return type(self)(self.ring, self.n, self.m, {mo: self.ring.neg(c) for mo, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        ring = self.ring
        out = {}
        for mo1, c1 in self.terms.items():
            d1 = dict(mo1)
            for mo2, c2 in o.terms.items():
                c = ring.mul(c1, c2)
                if ring.is_zero(c):
                    continue
                merged = dict(d1)
                for v, e in mo2:
                    merged[v] = merged.get(v, 0) + e
                mo = mono_sort(merged.items())
                if mo in out:
                    s = ring.add(out[mo], c)
                    if ring.is_zero(s):
                        del out[mo]
                    else:
                        out[mo] = s
                else:
                    out[mo] = c
        return type(self)(self.ring, self.n, self.m, out)

    __rmul__ = __mul__

    def scale(self, c):
        c = self.ring.coerce(c)
        out = {}
        for mo, cc in self.terms.items():
            s = self.ring.mul(cc, c)
            if not self.ring.is_zero(s):
                out[mo] = s
        return type(self)(self.ring, self.n, self.m, out)

    def __pow__(self, e: int):
        if e < 0:
            raise BadIndex("negative power of a polynomial")
        out = type(self).const(self.ring, self.n, self.m, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            o = self._coerce(other)
            if o is None:
                return NotImplemented
            other = o
        return self.n == other.n and self.m == other.m and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, self.m, frozenset((mo, _hashable(c)) for mo, c in self.terms.items())))
        return self._hash

    # structure ----------------------------------------------------------

    def partial(self, v: DerIndet):
        """Formal partial derivative with respect to the indeterminate v."""
        out = {}
        ring = self.ring
        for mo, c in self.terms.items():
            d = dict(mo)
            e = d.get(v)
            if not e:
                continue
            if e == 1:
                del d[v]
            else:
                d[v] = e - 1
            key = mono_sort(d.items())
            cc = ring.mul(c, ring.coerce(e))
            if key in out:
                s = ring.add(out[key], cc)
                if ring.is_zero(s):
                    del out[key]
                else:
                    out[key] = s
            else:
                out[key] = cc
        return type(self)(self.ring, self.n, self.m, out)

    def coeff_of_power(self, v: DerIndet, e: int):
        """Coefficient of v^e, a polynomial not involving v."""
        out = {}
        for mo, c in self.terms.items():
            d = dict(mo)
            if d.get(v, 0) != e:
                continue
            d.pop(v, None)
            out[mono_sort(d.items())] = c
        return type(self)(self.ring, self.n, self.m, out)

    def map_coeffs(self, fn):
        out = {}
        for mo, c in self.terms.items():
            cc = fn(c)
            if not self.ring.is_zero(cc):
                out[mo] = cc
        return type(self)(self.ring, self.n, self.m, out)

    def substitute(self, images: dict, coeff_embed, zero):
        """Evaluate under indeterminate -> value, coefficients through coeff_embed.

        Values must support + and *; ``zero`` is the additive unit of the
        target.  Every occurring indeterminate must have an image.
        """
        total = zero
        for mo, c in self.terms.items():
            val = coeff_embed(c)
            for v, e in mo:
                img = images[v]
                for _ in range(e):
                    val = val * img
            total = total + val
        return total

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: mono_rank_key(mc[0]), reverse=True)

    def __repr__(self):
        return f"{type(self).__name__}({self})"

    def __str__(self):
        return self.fmt()

    def fmt(self, namer=None):
        if self.is_zero():
            return "0"
        namer = namer or self.var_name
        parts = []
        for mo, c in self.sorted_terms():
            factors = []
            for v, e in mo:
                name = namer(v)
                if e == 1:
                    factors.append(name)
                elif " " in name:
                    factors.append(f"({name})^{e}")
                else:
                    factors.append(f"{name}^{e}")
            mono = "*".join(factors)
            cs = self.ring.fmt(c)
            if not mono:
                piece = cs if self.ring.fmt_atomic(c) else f"({cs})"
            elif cs == "1":
                piece = mono
            elif cs == "-1":
                piece = "-" + mono
            elif self.ring.fmt_atomic(c):
                piece = f"{cs}*{mono}"
            else:
                piece = f"({cs})*{mono}"
            parts.append(piece)
        out = parts[0]
        for piece in parts[1:]:
            if piece.startswith("-"):
                out += " - " + piece[1:]
            else:
                out += " + " + piece
        return out

    def var_name(self, v: DerIndet) -> str:
        raise NotImplementedError


class DiffPoly(TermPoly):
    """Element of K{x_1..x_n} (or B{x} for an extension coefficient ring)."""

    __slots__ = ()
    var_prefix = "x"

    def differentiate(self, d: int) -> "DiffPoly":
        """Apply the d-th derivation: Leibniz on monomials, ring.derive on coefficients."""
        if not 1 <= d <= self.m:
            raise BadIndex(f"derivation index {d} out of range 1..{self.m}")
        ring = self.ring
        acc = {}

        def put(mo, c):
            if ring.is_zero(c):
                return
            if mo in acc:
                s = ring.add(acc[mo], c)
                if ring.is_zero(s):
                    del acc[mo]
                else:
                    acc[mo] = s
            else:
                acc[mo] = c

        for mo, c in self.terms.items():
            put(mo, ring.derive(d, c))
            for v, e in mo:
                d_mono = dict(mo)
                if e == 1:
                    del d_mono[v]
                else:
                    d_mono[v] = e - 1
                w = derive_indet(v, d)
                d_mono[w] = d_mono.get(w, 0) + 1
                put(mono_sort(d_mono.items()), ring.mul(c, ring.coerce(e)))
        return DiffPoly(self.ring, self.n, self.m, acc)

    def differentiate_xi(self, xi) -> "DiffPoly":
        out = self
        for d, e in enumerate(xi, start=1):
            for _ in range(e):
                out = out.differentiate(d)
        return out

    def var_name(self, v: DerIndet) -> str:
        parts = []
        for d, e in enumerate(v.xi, start=1):
            if e == 0:
                continue
            parts.append(f"d{d}" if e == 1 else f"d{d}^{e}")
        parts.append(f"{self.var_prefix}{v.i}")
        return " ".join(parts)


class AlgPoly(TermPoly):
    """Plain polynomial in the renamed variables x_i^xi (no derivations)."""

    __slots__ = ()

    def var_name(self, v: DerIndet) -> str:
        return f"x{v.i}[{','.join(str(e) for e in v.xi)}]"

    def to_diffpoly(self, ring) -> DiffPoly:
        """Substitute x_i^xi := d^xi x_i, landing back in K{x}."""
        return DiffPoly(ring, self.n, self.m, dict(self.terms))


def _hashable(c):
    try:
        hash(c)
        return c
    except TypeError:
        return tuple(c)


# leaders, rank, reduction status --------------------------------------


class LeaderData(NamedTuple):
    leader: DerIndet
    degree: int
    separant: DiffPoly
    initial: DiffPoly
    rank: tuple


def leader_data(f: DiffPoly) -> LeaderData:
    """Leader, leading degree, separant, initial, rank of a nonconstant f."""
    if f.is_constant():
        raise NotApplicable("constant differential polynomials have no leader")
    v = max(f.indets(), key=indet_key)
    d = f.degree_in(v)
    separant = f.partial(v)
    initial = f.coeff_of_power(v, d)
    return LeaderData(v, d, separant, initial, (indet_key(v), d))


def rank_of(f: DiffPoly):
    return leader_data(f).rank


def compare_rank(f: DiffPoly, g: DiffPoly) -> int:
    a, b = rank_of(f), rank_of(g)
    return (a > b) - (a < b)


REDUCED = "reduced"
WEAKLY_REDUCED_ONLY = "weakly_reduced_only"
NOT_WEAKLY_REDUCED = "not_weakly_reduced"


def reduction_status(g: DiffPoly, f: DiffPoly) -> str:
    """Classify g against a nonconstant f: reduced / weakly only / not weakly."""
    lf = leader_data(f)
    for v in g.indets():
        if is_derivative_of(v, lf.leader, proper=True):
            return NOT_WEAKLY_REDUCED
    if g.degree_in(lf.leader) >= lf.degree:
        return WEAKLY_REDUCED_ONLY
    return REDUCED


def is_reduced_wrt_set(g: DiffPoly, members) -> bool:
    return all(reduction_status(g, f) == REDUCED for f in members)


class RankedSet:
    """Finite list of nonconstant DiffPoly sorted nondecreasing by rank.

    An empty set must be given its ring context explicitly so that H and
    theta-expansions still have a home.
    """

    def __init__(self, members, autoreduced: bool = False, context=None, _checked: bool = False):
        members = sorted(members, key=rank_of)
        for f in members:
            if f.is_constant():
                raise NotApplicable("ranked sets contain nonconstant polynomials only")
        if members:
            self.ring, self.n, self.m = members[0].ring, members[0].n, members[0].m
        elif context is not None:
            self.ring, self.n, self.m = context
        else:
            raise BadIndex("an empty ranked set needs an explicit (ring, n, m) context")
        if autoreduced and not _checked:
            for a in members:
                for b in members:
                    if a is not b and reduction_status(a, b) != REDUCED:
                        raise NotApplicable("set is not autoreduced")
        self.members = tuple(members)
        self.autoreduced = autoreduced

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, idx):
        return self.members[idx]

    def __eq__(self, other):
        return isinstance(other, RankedSet) and self.members == other.members

    def __repr__(self):
        return "RankedSet{" + "; ".join(str(f) for f in self.members) + "}"


def h_of_set(lam: RankedSet) -> DiffPoly:
    """H = prod of initial*separant over the set; 1 for the empty set."""
    out = DiffPoly.const(lam.ring, lam.n, lam.m, 1)
    for f in lam:
        ld = leader_data(f)
        out = out * ld.initial * ld.separant
    return out


def compare_autoreduced(lam1: RankedSet, lam2: RankedSet) -> int:
    """The ordering on autoreduced sets: -1 when lam1 is lower (closer to characteristic)."""
    r, s = len(lam1), len(lam2)
    for i in range(min(r, s)):
        a, b = rank_of(lam1[i]), rank_of(lam2[i])
        if a != b:
            return -1 if a < b else 1
    if r == s:
        return 0
    # longer with matching prefix ranks lower
    return -1 if r > s else 1


# order-bounded expansions ----------------------------------------------


def multi_indices_exact(m: int, total: int):
    """All xi in N^m with |xi| = total, lex-sorted."""
    if m == 1:
        return [(total,)]
    out = []
    for e in range(total + 1):
        for rest in multi_indices_exact(m - 1, total - e):
            out.append((e,) + rest)
    return sorted(out)


def multi_indices_upto(m: int, bound: int):
    """All xi in N^m with |xi| <= bound, graded then lex."""
    out = []
    for total in range(bound + 1):
        out.extend(multi_indices_exact(m, total))
    return out


def theta_set(lam: RankedSet, r: int):
    """All d^xi f of order at most r for f in the set, deduplicated."""
    max_order = max((f.order() for f in lam), default=0)
    if r < max_order:
        raise BadBound(f"bound {r} below the maximal order {max_order} of the set")
    seen = []
    for f in lam:
        room = r - f.order()
        for xi in multi_indices_upto(f.m, room):
            g = f.differentiate_xi(xi)
            if g not in seen:
                seen.append(g)
    return seen


def polify(f: DiffPoly, r: int) -> AlgPoly:
    """Rename d^xi x_i to x_i^xi; defined only when order(f) <= r."""
    if f.order() > r:
        raise BadBound(f"order {f.order()} exceeds the bound {r}")
    if not isinstance(f.ring, KRing):
        raise NotApplicable("polify is defined over the base field only")
    return AlgPoly(f.ring, f.n, f.m, dict(f.terms))


def unpolify(p: AlgPoly, ring: KRing) -> DiffPoly:
    return p.to_diffpoly(ring)
