"""Differential-kernel combinatorics and the length bounds.

The bound C^n_{r,m} controls how far a differential kernel must prolong
before a principal realization is guaranteed; it is built from the
Ackermann-Peter function by

    C^1_{0,m} = 0,   C^1_{r,m} = A(m-1, C^1_{r-1,m}),   C^n_{r,m} = C^1_{C^(n-1)_{r,m}, m}.

Everything here is plain integer combinatorics except validate_kernel,
which checks that the derivation shift D_k a_i^xi = a_i^(xi+e_k) kills
every minimal polynomial of a triangular kernel presentation; arithmetic
in the presented tower is by pseudo-remainder against the triangular
minimal polynomials (leading coefficients are checked nonzero first, so
zero-testing is sound for genuine towers).
"""

from __future__ import annotations

from math import comb

from .diffpoly import (
    AlgPoly,
    DerIndet,
    KRing,
    indet_key,
    mono_sort,
)
from .errors import BadIndex, BudgetExceeded, NotApplicable
from .field import BaseFieldSpec
from .prolong import gamma_set, tau1_explicit

DEFAULT_BUDGET = 10 ** 6


def ackermann(x: int, y: int, budget: int = DEFAULT_BUDGET, _memo=None) -> int:
    """Ackermann-Peter value A(x, y), metered by a step budget."""
    if x < 0 or y < 0:
        raise BadIndex("Ackermann arguments must be nonnegative")
    memo = {} if _memo is None else _memo
    steps = [budget]
    _ack(x, y, memo, steps)
    return memo[(x, y)]


def _ack(x: int, y: int, memo: dict, steps) -> None:
    stack = [(x, y)]
    while stack:
        cx, cy = stack[-1]
        if (cx, cy) in memo:
            stack.pop()
            continue
        steps[0] -= 1
        if steps[0] < 0:
            raise BudgetExceeded("Ackermann work budget exhausted")
        if cx == 0:
            memo[(cx, cy)] = cy + 1
            stack.pop()
        elif cy == 0:
            if (cx - 1, 1) in memo:
                memo[(cx, cy)] = memo[(cx - 1, 1)]
                stack.pop()
            else:
                stack.append((cx - 1, 1))
        else:
            if (cx, cy - 1) in memo:
                inner = memo[(cx, cy - 1)]
                if (cx - 1, inner) in memo:
                    memo[(cx, cy)] = memo[(cx - 1, inner)]
                    stack.pop()
                else:
                    stack.append((cx - 1, inner))
            else:
                stack.append((cx, cy - 1))


class BoundTable:
    """Memoized values of C^n_{r,m}, sharing one Ackermann memo and budget."""

    def __init__(self, budget: int = DEFAULT_BUDGET):
        self.budget = budget
        self._steps = [budget]
        self._ack_memo = {}
        self._c = {}

    def _a(self, x: int, y: int) -> int:
        _ack(x, y, self._ack_memo, self._steps)
        return self._ack_memo[(x, y)]

    def c(self, n: int, r: int, m: int) -> int:
        if n < 1 or m < 1 or r < 0:
            raise BadIndex("need n >= 1, m >= 1, r >= 0")
        key = (n, r, m)
        if key in self._c:
            return self._c[key]
        if n == 1:
            val = 0
            for _ in range(r):
                val = self._a(m - 1, val)
        else:
            val = self.c(1, self.c(n - 1, r, m), m)
        self._c[key] = val
        return val


def bound_C(n: int, r: int, m: int, budget: int = DEFAULT_BUDGET) -> int:
    return BoundTable(budget).c(n, r, m)


def alpha_beta(n: int, m: int, budget: int = DEFAULT_BUDGET):
    """(alpha(n), beta(n)): ambient and projected dimensions of the axiom scheme."""
    if n < 1 or m < 1:
        raise BadIndex("need n >= 1 and m >= 1")
    c1 = bound_C(n, 1, m, budget)
    return n * comb(c1 + m, m), n * comb(c1 - 1 + m, m)


class IndexMaps:
    """pi, psi, phi as explicit index tables over the ranking order.

    Positions are 0-based into gamma_big = Gamma_n(C^n_{1,m}); pi and psi
    are prefix projections, phi lists for each of its (m+1)*beta output
    slots the source position it copies.
    """

    def __init__(self, n: int, m: int, budget: int = DEFAULT_BUDGET):
        if n < 1 or m < 1:
            raise BadIndex("need n >= 1 and m >= 1")
        self.n = n
        self.m = m
        self.c1 = bound_C(n, 1, m, budget)
        self.gamma_big = gamma_set(n, m, self.c1)
        self.gamma_small = gamma_set(n, m, self.c1 - 1)
        self.alpha = len(self.gamma_big)
        self.beta = len(self.gamma_small)
        assert self.gamma_big[: self.beta] == self.gamma_small  # graded order => prefix
        self.pos = {v: p for p, v in enumerate(self.gamma_big)}
        self.pi = list(range(self.beta))
        self.psi = list(range(n * (m + 1)))
        self.phi = []
        for k in range(m + 1):
            for v in self.gamma_small:
                if k == 0:
                    self.phi.append(self.pos[v])
                else:
                    shifted = list(v.xi)
                    shifted[k - 1] += 1
                    self.phi.append(self.pos[DerIndet(tuple(shifted), v.i)])

    def phi_injective(self) -> bool:
        return set(self.phi) == set(range(self.alpha))

    def apply_phi(self, point):
        if len(point) != self.alpha:
            raise BadIndex(f"expected {self.alpha} coordinates")
        return [point[src] for src in self.phi]

    def apply_pi(self, point):
        if len(point) != self.alpha:
            raise BadIndex(f"expected {self.alpha} coordinates")
        return [point[src] for src in self.pi]

    def apply_psi(self, point):
        if len(point) != self.alpha:
            raise BadIndex(f"expected {self.alpha} coordinates")
        return [point[src] for src in self.psi]


def index_maps(n: int, m: int, budget: int = DEFAULT_BUDGET) -> IndexMaps:
    return IndexMaps(n, m, budget)


# kernel presentations ----------------------------------------------------


class KernelPresentation:
    """Triangular presentation of a differential kernel of length r.

    ``markers`` maps every (xi, i) in Gamma_n(r) to None (transcendental)
    or to its minimal polynomial: an AlgPoly mentioning only strictly
    ranking-earlier coordinates and the coordinate itself (degree >= 1).
    """

    def __init__(self, base: BaseFieldSpec, n: int, r: int, markers: dict):
        self.base = base
        self.ring = KRing(base)
        self.n = n
        self.m = base.m
        self.r = r
        self.coords = gamma_set(n, self.m, r)
        self.markers = {}
        for v in self.coords:
            mp = markers.get(v)
            if mp is None:
                self.markers[v] = None
                continue
            if not isinstance(mp, AlgPoly):
                raise BadIndex(f"marker for {v} must be an AlgPoly minimal polynomial")
            if mp.degree_in(v) < 1:
                raise NotApplicable(f"minimal polynomial for {v} must mention the coordinate")
            for w in mp.indets():
                if w != v and indet_key(w) >= indet_key(v):
                    raise NotApplicable(
                        f"minimal polynomial for {v} mentions the later coordinate {w}"
                    )
            self.markers[v] = mp
        extra = set(markers) - set(self.coords)
        if extra:
            raise BadIndex(f"markers outside Gamma_n({r}): {sorted(extra)}")

    def algebraic_coords(self):
        return [v for v in self.coords if self.markers[v] is not None]


def leaders(pres: KernelPresentation):
    """(leader set within the presentation's range, minimal leader set).

    A coordinate (tau, j) is a leader when some (eta, j) <= (tau, j) in the
    product order is marked algebraic; the full leader set is the upward
    cone of the algebraic marks, reported within Gamma_n(r).
    """
    marks = pres.algebraic_coords()
    lead = [
        v
        for v in pres.coords
        if any(w.i == v.i and all(a <= b for a, b in zip(w.xi, v.xi)) for w in marks)
    ]
    minimal = [
        w
        for w in marks
        if not any(
            u is not w and u.i == w.i and all(a <= b for a, b in zip(u.xi, w.xi))
            for u in marks
        )
    ]
    return sorted(lead, key=indet_key), sorted(minimal, key=indet_key)


class KernelRejection:
    def __init__(self, coord: DerIndet, k: int, defect: AlgPoly):
        self.coord = coord
        self.k = k
        self.defect = defect

    def __str__(self):
        return (
            f"derivation {self.k} does not extend through the minimal polynomial "
            f"of coordinate {self.coord}: defect {self.defect}"
        )


def _reduce_mod_tower(p: AlgPoly, pres: KernelPresentation) -> AlgPoly:
    """Iterated pseudo-remainder against the triangular minimal polynomials."""
    while True:
        target = None
        for v in sorted(p.indets(), key=indet_key, reverse=True):
            mp = pres.markers.get(v)
            if mp is not None and p.degree_in(v) >= mp.degree_in(v):
                target = (v, mp)
                break
        if target is None:
            return p
        v, mp = target
        dq = mp.degree_in(v)
        lc = mp.coeff_of_power(v, dq)
        if _reduce_mod_tower(lc, pres).is_zero():
            raise NotApplicable(
                f"leading coefficient of the minimal polynomial of {v} vanishes in the tower"
            )
        vpoly = AlgPoly.indet(p.ring, p.n, p.m, v.xi, v.i)
        while p.degree_in(v) >= dq:
            d = p.degree_in(v)
            lead = p.coeff_of_power(v, d)
            p = p * lc - lead * vpoly ** (d - dq) * mp


def _shift_var(v: DerIndet, k: int) -> DerIndet:
    xi = list(v.xi)
    xi[k - 1] += 1
    return DerIndet(tuple(xi), v.i)


def _formal_Dk(p: AlgPoly, k: int, base: BaseFieldSpec) -> AlgPoly:
    """Apply D_k formally: derive base coefficients, shift coordinates."""
    out = p.map_coeffs(lambda c: base.derive(k, c))
    for v in p.indets():
        shifted = AlgPoly.indet(p.ring, p.n, p.m, _shift_var(v, k).xi, v.i)
        out = out + p.partial(v) * shifted
    return out


def validate_kernel(pres: KernelPresentation):
    """None when every derivation extends; otherwise the first failing witness.

    For each algebraic coordinate of order <= r-1 and each derivation, the
    formally derived minimal polynomial must reduce to zero against the
    triangular relations.
    """
    for v in pres.algebraic_coords():
        if sum(v.xi) > pres.r - 1:
            continue
        mp = pres.markers[v]
        for k in range(1, pres.m + 1):
            defect = _reduce_mod_tower(_formal_Dk(mp, k, pres.base), pres)
            if not defect.is_zero():
                return KernelRejection(v, k, defect)
    return None


# pointwise verification of the geometric axiom condition -----------------


class DiamondReport:
    def __init__(self, entries):
        self.entries = entries  # list of dicts per probe

    def all_applicable_pass(self) -> bool:
        return all(e["status"] != "fail" for e in self.entries)

    def __repr__(self):
        return f"DiamondReport({self.entries!r})"


def check_diamond(w_gens, piw_gens, probes, n: int, m: int, budget: int = DEFAULT_BUDGET) -> DiamondReport:
    """Pointwise check of the axiom condition: probes on W must land, under
    the (m+1)-block shift embedding, on the first prolongation of pi(W).

    No elimination is performed; the report says nothing about the full
    inclusion, only about the supplied probe points.
    """
    maps = index_maps(n, m, budget)
    for g in w_gens:
        for v in g.indets():
            if v not in maps.pos:
                raise BadIndex(f"W generator mentions {v} outside Gamma_n({maps.c1})")
    small_pos = {v: p for p, v in enumerate(maps.gamma_small)}
    for g in piw_gens:
        for v in g.indets():
            if v not in small_pos:
                raise BadIndex(f"pi(W) generator mentions {v} outside Gamma_n({maps.c1 - 1})")

    # relabel pi(W) generators into beta plain variables, ranked order
    def relabel(g: AlgPoly) -> AlgPoly:
        ring = g.ring
        out = {}
        for mono, c in g.terms.items():
            new = mono_sort(
                (DerIndet((0,) * m, small_pos[v] + 1), e) for v, e in mono
            )
            out[new] = c
        return AlgPoly(ring, maps.beta, m, out)

    entries = []
    if piw_gens:
        tau = tau1_explicit([relabel(g) for g in piw_gens])
    else:
        tau = None
    for probe in probes:
        if len(probe) != maps.alpha:
            raise BadIndex(f"probe must have {maps.alpha} coordinates")
        on_w = all(_eval_alg(g, maps.gamma_big, probe) .is_zero() for g in w_gens)
        if not on_w:
            entries.append({"status": "not_applicable", "violated": None})
            continue
        image = maps.apply_phi(probe)
        if tau is None:
            entries.append({"status": "pass", "violated": None})
            continue
        violated = None
        for eq, tag in zip(tau.equations, tau.tags):
            assign = {}
            for v in eq.indets():
                k = sum(v.xi)
                if k == 0:
                    assign[v] = image[v.i - 1]
                else:
                    block = next(idx + 1 for idx, e in enumerate(v.xi) if e > 0)
                    assign[v] = image[block * maps.beta + v.i - 1]
            val = eq.substitute(assign, lambda c: c, eq.ring.base.zero())
            if not val.is_zero():
                violated = eq
                break
        entries.append({"status": "pass" if violated is None else "fail", "violated": violated})
    return DiamondReport(entries)


def _eval_alg(g: AlgPoly, gamma, point):
    assign = {v: point[p] for p, v in enumerate(gamma)}
    images = {v: assign[v] for v in g.indets()}
    return g.substitute(images, lambda c: c, g.ring.base.zero())