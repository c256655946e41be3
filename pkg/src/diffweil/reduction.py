"""Ritt-Kolchin reduction: division with certificates, autoreduction, membership.

Division against an autoreduced set Lambda repeatedly fixes the highest
"offense" in the dividend: an occurring proper derivative of some leader
(eliminated by pseudo-division against the matching derivative of that
element, whose leader coefficient is the separant), or a leader occurring
at degree >= its element's leading degree (lowered by pseudo-division
against the element itself, with its initial as leader coefficient).
Every multiplication is recorded, so the run yields an exact identity

    prod(S^s * I^t) * f  =  sum cof * d^xi(member)  +  remainder.

The certificate format uses a single power of H = prod(I*S) instead of the
mixed product.  Padding the identity with the complementary factors can
unreduce the remainder, in which case reduction is rerun on the padded
remainder; a nonzero product of reduced polynomials is usually still
reduced, so this settles after very few rounds (a generous round budget
guards the loop).  A remainder of zero survives any padding, so ideal
membership never needs extra rounds.
"""

from __future__ import annotations

from .diffpoly import (
    DiffPoly,
    DerIndet,
    KRing,
    RankedSet,
    indet_key,
    is_derivative_of,
    is_reduced_wrt_set,
    h_of_set,
    leader_data,
    mono_sort,
    rank_of,
    reduction_status,
    REDUCED,
)
from .errors import BudgetExceeded, NotApplicable


class Inconsistent:
    """Returned by autoreduce when a nonzero constant lies in the generated ideal."""

    def __init__(self, witness: DiffPoly):
        self.witness = witness

    def __repr__(self):
        return f"Inconsistent(witness={self.witness})"


class DivisionCertificate:
    """Exact identity H^ell * f - remainder = sum cofactor * d^xi(member)."""

    def __init__(self, f: DiffPoly, lam: RankedSet, ell: int, cofactors: dict, remainder: DiffPoly):
        self.f = f
        self.lam = lam
        self.ell = ell
        self.cofactors = cofactors  # (member index, xi) -> DiffPoly
        self.remainder = remainder

    def reexpand(self) -> DiffPoly:
        """H^ell*f - remainder - sum cof*d^xi(member); zero iff the certificate is valid."""
        h = h_of_set(self.lam)
        acc = h ** self.ell * self.f - self.remainder
        for (idx, xi), cof in self.cofactors.items():
            acc = acc - cof * self.lam[idx].differentiate_xi(xi)
        return acc

    def check(self) -> bool:
        return self.reexpand().is_zero() and is_reduced_wrt_set(self.remainder, self.lam)

    def __repr__(self):
        return f"DivisionCertificate(ell={self.ell}, remainder={self.remainder})"


def _mono_grlex_key(mono):
    """Multiplicative term order used for exact division inside the reducer."""
    total = sum(e for _, e in mono)
    return (total, tuple(sorted(((indet_key(v), e) for v, e in mono), reverse=True)))


def _mono_divides(a, b):
    """Does monomial a divide monomial b?"""
    db = dict(b)
    return all(db.get(v, 0) >= e for v, e in a)


def _mono_quotient(poly, a, b, coeff):
    db = dict(b)
    for v, e in a:
        db[v] -= e
    key = mono_sort((v, e) for v, e in db.items() if e)
    return DiffPoly(poly.ring, poly.n, poly.m, {key: coeff})


def try_exact_div(a: DiffPoly, b: DiffPoly):
    """Exact quotient a/b in K{x}, or None when b does not divide a."""
    ring = a.ring
    if b.is_zero():
        return None
    if b.is_constant():
        return a.scale(b.constant_coeff().inv())
    bm = max(b.terms, key=_mono_grlex_key)
    bc = b.terms[bm]
    quot = DiffPoly(ring, a.n, a.m, {})
    r = a
    while not r.is_zero():
        rm = max(r.terms, key=_mono_grlex_key)
        if not _mono_divides(bm, rm):
            return None
        c = r.terms[rm] * bc.inv()
        q1 = _mono_quotient(a, bm, rm, c)
        quot = quot + q1
        r = r - q1 * b
    return quot


def strip_content(p: DiffPoly) -> DiffPoly:
    """Divide p by the gcd-content of its coefficients (a unit of K).

    Only used where the result matters up to a nonzero K-factor; it keeps
    pseudo-division chains from accumulating huge rational factors.
    """
    if p.is_zero() or not isinstance(p.ring, KRing):
        return p
    from fractions import Fraction
    from math import gcd as int_gcd

    from .polys import Poly, exact_div, poly_gcd, rational_content

    k = p.ring.base.k
    den_lcm = Poly.const(k, 1)
    for c in p.terms.values():
        den_lcm = exact_div(den_lcm * c.den, poly_gcd(den_lcm, c.den))
    num_gcd = None
    content = 0
    for c in p.terms.values():
        scaled = c.num * exact_div(den_lcm, c.den)
        num_gcd = scaled if num_gcd is None else poly_gcd(num_gcd, scaled)
        content = int_gcd(content, int(rational_content(scaled)))
    from .field import RatFunc

    unit = RatFunc(num_gcd.scale(Fraction(max(content, 1))), den_lcm)
    return p.scale(unit.inv())


def _weight(p: DiffPoly) -> int:
    """Cheap size proxy: term counts plus bignum bit-lengths of coefficients."""
    out = 0
    for c in p.terms.values():
        for poly in (c.num, c.den):
            out += len(poly.terms)
            for fr in poly.terms.values():
                out += (fr.numerator.bit_length() + fr.denominator.bit_length()) // 64
    return out


class _Reduction:
    """Bookkeeping for one classical reduction pass.

    Invariant: prod(S_i^s_i * I_i^t_i) * start = sum cof*d^xi(member) + p
    (maintained only when ``track`` is set; untracked runs rescale p freely).
    """

    SIZE_LIMIT = 2_000  # applies only when a budget is active

    def __init__(self, start: DiffPoly, lam: RankedSet, track: bool = True, budget=None):
        self.lam = lam
        self.lds = [leader_data(f) for f in lam]
        self.p = start
        self.track = track
        self.budget = budget  # shared mutable [steps remaining] or None
        self.exps = [[0, 0] for _ in lam]  # [separant power, initial power]
        self.cofs = {}

    def _scale(self, c: DiffPoly, idx: int, which: int):
        self.exps[idx][which] += 1
        self.p = self.p * c
        if self.track:
            for key in self.cofs:
                self.cofs[key] = self.cofs[key] * c

    def _add_cof(self, idx: int, xi, c: DiffPoly):
        if not self.track:
            return
        key = (idx, xi)
        if key in self.cofs:
            self.cofs[key] = self.cofs[key] + c
        else:
            self.cofs[key] = c

    def find_offense(self):
        """Highest offending indeterminate with its case and candidate members."""
        best = None
        for u in sorted(self.p.indets(), key=indet_key, reverse=True):
            cand_a = [i for i, ld in enumerate(self.lds) if is_derivative_of(u, ld.leader, proper=True)]
            if cand_a:
                return u, "deriv", cand_a
            cand_b = [
                i
                for i, ld in enumerate(self.lds)
                if ld.leader == u and self.p.degree_in(u) >= ld.degree
            ]
            if cand_b:
                return u, "degree", cand_b
        return best

    def fix_offense(self, u: DerIndet, case: str, idx: int):
        """Pseudo-divide p against member idx at the offense u until it is gone."""
        f = self.lam[idx]
        ld = self.lds[idx]
        if case == "deriv":
            xi = tuple(a - b for a, b in zip(u.xi, ld.leader.xi))
            q = f.differentiate_xi(xi)
            dq = 1
            lcq = ld.separant
            which = 0
        else:
            xi = (0,) * f.m
            q = f
            dq = ld.degree
            lcq = ld.initial
            which = 1
        u_poly = DiffPoly.indet(f.ring, f.n, f.m, u.xi, u.i)
        while self.p.degree_in(u) >= dq:
            if self.budget is not None:
                self.budget[0] -= 1
                if self.budget[0] < 0:
                    raise BudgetExceeded("reduction step budget exhausted")
                if _weight(self.p) > self.SIZE_LIMIT:
                    raise BudgetExceeded("reduction intermediate size limit exceeded")
            d = self.p.degree_in(u)
            lead = self.p.coeff_of_power(u, d)
            quot = try_exact_div(lead, lcq)
            if quot is None:
                self._scale(lcq, idx, which)
                quot = lead
            c = quot * u_poly ** (d - dq)
            self.p = self.p - c * q
            self._add_cof(idx, xi, c)
            if not self.track:
                self.p = strip_content(self.p)

    def run(self, chooser=None):
        while True:
            off = self.find_offense()
            if off is None:
                return self
            u, case, cands = off
            if chooser is None:
                # deterministic default: candidate with the highest-ranking leader
                idx = max(cands, key=lambda i: rank_of(self.lam[i]))
            else:
                idx = chooser(u, case, cands)
            self.fix_offense(u, case, idx)


def _pad_factor(lam: RankedSet, lds, exps, ell: int) -> DiffPoly:
    """prod S^(ell-s) * I^(ell-t), the factor turning the mixed product into H^ell."""
    out = DiffPoly.const(lam.ring, lam.n, lam.m, 1)
    for ld, (s, t) in zip(lds, exps):
        if ell - s:
            out = out * ld.separant ** (ell - s)
        if ell - t:
            out = out * ld.initial ** (ell - t)
    return out


def divide(f: DiffPoly, lam: RankedSet, max_rounds: int = 200, step_budget=None) -> DivisionCertificate:
    """Reduce f against an autoreduced set, returning the full certificate."""
    if not lam.autoreduced:
        raise NotApplicable("division requires an autoreduced set")
    if not isinstance(f.ring, KRing):
        raise NotApplicable("division is defined over the base field only")
    h = h_of_set(lam)
    ell_total = 0
    cofs_total = {}
    current = f
    budget = [step_budget] if step_budget is not None else None
    for _ in range(max_rounds):
        red = _Reduction(current, lam, budget=budget).run()
        ell_r = max((max(s, t) for s, t in red.exps), default=0)
        pad = _pad_factor(lam, red.lds, red.exps, ell_r)
        if ell_r:
            h_pow = h ** ell_r
            cofs_total = {key: cof * h_pow for key, cof in cofs_total.items()}
        for key, cof in red.cofs.items():
            padded = cof * pad
            if key in cofs_total:
                cofs_total[key] = cofs_total[key] + padded
            else:
                cofs_total[key] = padded
        ell_total += ell_r
        current = red.p * pad
        if is_reduced_wrt_set(current, lam):
            cofs_total = {k: c for k, c in cofs_total.items() if not c.is_zero()}
            return DivisionCertificate(f, lam, ell_total, cofs_total, current)
    raise BudgetExceeded("padding the division certificate did not settle; raise max_rounds")


class MembershipVerdict:
    """Outcome of the saturated-ideal membership test.

    ``complete`` records the standing caveat: a nonmember verdict is only
    conclusive when the set is a characteristic set of a prime ideal.
    """

    def __init__(self, member: bool, certificate: DivisionCertificate):
        self.member = member
        self.certificate = certificate
        self.complete_only_for_characteristic_sets = True

    def __bool__(self):
        return self.member

    def __repr__(self):
        return f"MembershipVerdict(member={self.member})"


def membership_test(f: DiffPoly, lam: RankedSet, node_budget: int = 400) -> MembershipVerdict:
    """Is H^ell * f in the differential ideal generated by the set, for some ell?

    The reducer's divisor choice can matter when several members' leaders
    divide the same offense, so a zero remainder is searched over those
    choices (bounded DFS) before falling back to the deterministic path.
    """
    if f.is_zero():
        empty = DivisionCertificate(f, lam, 0, {}, f)
        return MembershipVerdict(True, empty)
    found = _search_zero(f, lam, node_budget)
    if found is not None:
        cert = _certificate_from(found, f, lam)
        return MembershipVerdict(True, cert)
    return MembershipVerdict(False, divide(f, lam))


def _search_zero(f: DiffPoly, lam: RankedSet, budget: int):
    """DFS over divisor choices for a reduction path ending in remainder zero."""
    stack = [_Reduction(f, lam)]
    seen = set()
    nodes = 0
    while stack and nodes < budget:
        red = stack.pop()
        nodes += 1
        off = red.find_offense()
        if off is None:
            if red.p.is_zero():
                return red
            continue
        u, case, cands = off
        for idx in sorted(cands, key=lambda i: rank_of(lam[i])):
            child = _Reduction(red.p, lam)
            child.exps = [list(e) for e in red.exps]
            child.cofs = dict(red.cofs)
            child.fix_offense(u, case, idx)
            key = hash(child.p)
            if key in seen:
                continue
            seen.add(key)
            stack.append(child)
    return None


def _certificate_from(red: _Reduction, f: DiffPoly, lam: RankedSet) -> DivisionCertificate:
    """Pad a finished zero-remainder reduction into H^ell form."""
    ell = max((max(s, t) for s, t in red.exps), default=0)
    pad = _pad_factor(lam, red.lds, red.exps, ell)
    cofs = {key: cof * pad for key, cof in red.cofs.items() if not cof.is_zero()}
    zero = DiffPoly(f.ring, f.n, f.m, {})
    return DivisionCertificate(f, lam, ell, cofs, zero)


def autoreduce(polys, context=None, step_budget=None):
    """Iterated division of higher-rank members by lower ones.

    Returns an autoreduced RankedSet, or Inconsistent when a nonzero
    constant remainder shows the generated ideal is the unit ideal.
    ``step_budget`` caps the total number of pseudo-division steps
    (BudgetExceeded beyond it); completions of adversarial inputs can be
    expensive even though they always terminate.
    """
    work = []
    for f in polys:
        if f.is_zero():
            continue
        if f.is_constant():
            return Inconsistent(f)
        work.append(f)
        if context is None:
            context = (f.ring, f.n, f.m)
    if context is None:
        raise NotApplicable("autoreduce of an empty list needs a (ring, n, m) context")
    budget = [step_budget] if step_budget is not None else None
    for _ in range(10_000):
        work.sort(key=rank_of)
        basis = []
        rest = []
        for f in work:
            if all(reduction_status(f, g) == REDUCED for g in basis):
                basis.append(f)
            else:
                rest.append(f)
        lam = RankedSet(basis, autoreduced=True, context=context, _checked=True)
        if not rest:
            return lam
        nxt = list(basis)
        for f in rest:
            g = _Reduction(f, lam, track=False, budget=budget).run().p
            if g.is_zero():
                continue
            if g.is_constant():
                return Inconsistent(g)
            nxt.append(g)
        work = nxt
    raise BudgetExceeded("autoreduction did not settle")
