"""Prolongation spaces, nabla maps, jets, and the data of UC_m axiom instances.

Prolongations are computed through the exponential embedding into the
truncated power series ring U[eps_1..eps_m]/(eps)^(r+1): a coefficient c
of the base field maps to sum_xi d^xi(c)/xi! eps^xi, and a coordinate x_i
maps to sum_eta x_i^eta eps^eta/eta!.  Collecting the eps^xi coefficient
of the embedded generator (and clearing the 1/xi! factor) yields one
prolongation equation per multi-index; substituting x_i^eta := d^eta x_i
back recovers d^xi(f) exactly, which is the testable form of "the nabla
map is a section of the projection".

The explicit first-prolongation equations (partial-derivative matrix
against the shifted coordinates plus the coefficientwise-derived
generator) are implemented separately and serve as a cross-check oracle.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial

from .diffpoly import (
    AlgPoly,
    DerIndet,
    DiffPoly,
    KRing,
    RankedSet,
    h_of_set,
    indet_key,
    is_derivative_of,
    leader_data,
    multi_indices_upto,
    polify,
    theta_set,
)
from .errors import BadBound, BadIndex
from .field import BaseFieldSpec, RatFunc


def gamma_set(n: int, m: int, r: int):
    """All (xi, i) with |xi| <= r, sorted by the canonical orderly ranking."""
    if n < 1 or m < 1:
        raise BadIndex("need at least one variable and one derivation")
    if r < 0:
        raise BadIndex("negative order bound")
    out = [
        DerIndet(xi, i)
        for xi in multi_indices_upto(m, r)
        for i in range(1, n + 1)
    ]
    out.sort(key=indet_key)
    assert len(out) == n * comb(r + m, m)
    return out


def alpha_size(n: int, m: int, r: int) -> int:
    return n * comb(r + m, m)


def nabla_symbolic(ring: KRing, n: int, m: int, r: int):
    """The tuple (d^xi x_i) over Gamma_n(r) as differential polynomials."""
    return tuple(DiffPoly.indet(ring, n, m, v.xi, v.i) for v in gamma_set(n, m, r))


def nabla_values(base: BaseFieldSpec, values, r: int):
    """nabla_r of a tuple of field elements: all derivatives up to order r."""
    n = len(values)
    if n < 1:
        raise BadIndex("empty point")
    cache = {}
    for i, val in enumerate(values, start=1):
        cache[(0,) * base.m, i] = val
    for v in gamma_set(n, base.m, r):
        if v in cache or (v.xi, v.i) in cache:
            continue
        d = next(idx + 1 for idx, e in enumerate(v.xi) if e > 0)
        prev = list(v.xi)
        prev[d - 1] -= 1
        cache[(v.xi, v.i)] = base.derive(d, cache[(tuple(prev), v.i)])
    return tuple(cache[(v.xi, v.i)] for v in gamma_set(n, base.m, r))


class TruncatedSeries:
    """Sparse series in eps_1..eps_m truncated above total order r.

    Coefficients are AlgPoly values; ring operations truncate exactly.
    """

    __slots__ = ("m", "r", "coeffs")

    def __init__(self, m: int, r: int, coeffs: dict):
        self.m = m
        self.r = r
        self.coeffs = {e: c for e, c in coeffs.items() if sum(e) <= r and not c.is_zero()}

    @classmethod
    def const(cls, m: int, r: int, c: AlgPoly):
        return cls(m, r, {(0,) * m: c})

    def __add__(self, other):
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out[e] + c if e in out else c
        return TruncatedSeries(self.m, self.r, out)

    def __mul__(self, other):
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if sum(e) > self.r:
                    continue
                c = c1 * c2
                out[e] = out[e] + c if e in out else c
        return TruncatedSeries(self.m, self.r, out)

    def __pow__(self, k: int):
        base = self
        out = None
        for _ in range(k):
            out = base if out is None else out * base
        if out is None:
            raise BadIndex("use const for the empty product")
        return out

    def coefficient(self, e) -> AlgPoly:
        return self.coeffs.get(tuple(e))

    def __eq__(self, other):
        return isinstance(other, TruncatedSeries) and self.r == other.r and self.coeffs == other.coeffs

    def __repr__(self):
        return f"TruncatedSeries(r={self.r}, {{{', '.join(f'{e}: {c}' for e, c in sorted(self.coeffs.items()))}}})"


def _fact_xi(xi) -> int:
    out = 1
    for e in xi:
        out *= factorial(e)
    return out


def exp_embed(f: AlgPoly, r: int) -> TruncatedSeries:
    """The exponential embedding of an algebraic polynomial, truncated at r.

    Coefficients c go to sum d^xi(c)/xi! eps^xi; a variable x_i (an order-0
    key) goes to sum_eta x_i^eta eps^eta/eta!.
    """
    if r < 0:
        raise BadBound("negative truncation order")
    ring = f.ring
    base = ring.base
    m = f.m
    zero_poly = AlgPoly(ring, f.n, m, {})

    def embed_coeff(c: RatFunc) -> TruncatedSeries:
        out = {}
        derivs = {(0,) * m: c}
        for xi in multi_indices_upto(m, r):
            if sum(xi) > 0:
                d = next(idx + 1 for idx, e in enumerate(xi) if e > 0)
                prev = list(xi)
                prev[d - 1] -= 1
                derivs[xi] = base.derive(d, derivs[tuple(prev)])
            val = derivs[xi] * Fraction(1, _fact_xi(xi))
            if not val.is_zero():
                out[xi] = AlgPoly.const(ring, f.n, m, val)
        return TruncatedSeries(m, r, out)

    images = {}
    for v in f.indets():
        if sum(v.xi) != 0:
            raise BadIndex("exp_embed expects a polynomial in the plain variables x_i")
        img = {}
        for eta in multi_indices_upto(m, r):
            var = AlgPoly.indet(ring, f.n, m, eta, v.i)
            img[eta] = var.scale(Fraction(1, _fact_xi(eta)))
        images[v] = TruncatedSeries(m, r, img)

    return f.substitute(images, embed_coeff, TruncatedSeries(m, r, {}))


class ProlongationSystem:
    """Equations of tau_r of an affine system, with per-equation provenance."""

    def __init__(self, n: int, m: int, r: int, variables, equations, tags):
        self.n = n
        self.m = m
        self.r = r
        self.variables = list(variables)  # Gamma_n(r), ranking order
        self.equations = list(equations)  # AlgPoly
        self.tags = list(tags)  # (generator index, xi, cleared factor)

    def __repr__(self):
        return f"ProlongationSystem(r={self.r}, vars={len(self.variables)}, eqs={len(self.equations)})"


def prolongation_equations(generators, r: int) -> ProlongationSystem:
    """Every eps^xi coefficient (factors cleared) of every embedded generator."""
    if not generators:
        raise BadIndex("need at least one generator")
    f0 = generators[0]
    n, m = f0.n, f0.m
    eqs = []
    tags = []
    for j, f in enumerate(generators):
        series = exp_embed(f, r)
        for xi in multi_indices_upto(m, r):
            coeff = series.coefficient(xi)
            if coeff is None:
                continue
            fact = _fact_xi(xi)
            eqs.append(coeff.scale(Fraction(fact)))
            tags.append((j, xi, fact))
    return ProlongationSystem(n, m, r, gamma_set(n, m, r), eqs, tags)


def tau1_explicit(generators) -> ProlongationSystem:
    """First prolongation by the explicit display: f_j, then for each
    derivation sum_i df_j/dx_i * y_(i,k) + f_j^(delta_k)."""
    if not generators:
        raise BadIndex("need at least one generator")
    f0 = generators[0]
    ring, n, m = f0.ring, f0.n, f0.m
    base = ring.base
    eqs = []
    tags = []
    for j, f in enumerate(generators):
        if not f.is_zero():
            eqs.append(f)
            tags.append((j, (0,) * m, 1))
        for k in range(1, m + 1):
            ek = tuple(1 if idx == k - 1 else 0 for idx in range(m))
            eq = f.map_coeffs(lambda c: base.derive(k, c))
            for v in f.indets():
                y = AlgPoly.indet(ring, n, m, ek, v.i)
                eq = eq + f.partial(v) * y
            if not eq.is_zero():
                eqs.append(eq)
                tags.append((j, ek, 1))
    return ProlongationSystem(n, m, 1, gamma_set(n, m, 1), eqs, tags)


def section_identity_defect(system: ProlongationSystem, generators, ring: KRing):
    """Substituting x_i^eta := d^eta x_i into each emitted equation must
    recover d^xi(generator) exactly; returns the list of differences."""
    out = []
    for eq, (j, xi, fact) in zip(system.equations, system.tags):
        substituted = eq.to_diffpoly(ring)
        expected = generators[j].to_diffpoly(ring).differentiate_xi(xi)
        out.append(substituted - expected)
    return out


class UCmInstance:
    """The data of one uniform-companion axiom instance for an autoreduced set."""

    def __init__(self, lam: RankedSet, r: int, system, h_pol: AlgPoly, h: DiffPoly):
        self.lam = lam
        self.r = r
        self.system = system  # polified theta-expansion
        self.h_pol = h_pol
        self.h = h

    def __repr__(self):
        return f"UCmInstance(r={self.r}, eqs={len(self.system)})"


def ucm_instance(lam: RankedSet, r: int) -> UCmInstance:
    """Bundle (theta-set polified, H polified, the set, H) at order r."""
    if not lam.autoreduced:
        raise BadIndex("a UC_m instance needs an autoreduced set")
    expanded = theta_set(lam, r)  # BadBound if r below the set's order
    system = [polify(g, r) for g in expanded]
    h = h_of_set(lam)
    return UCmInstance(lam, r, system, polify(h, r), h)


def jet_system_off_H(lam: RankedSet, r: int):
    """Localized description of Jet_r: the same system, valid off V(H).

    The full jet (a Zariski closure) is not computed; the returned pair
    (system, H) describes Jet_r(V) away from the vanishing of H.
    """
    inst = ucm_instance(lam, r)
    return inst.system, inst.h_pol


def theta_partition(lam: RankedSet, r: int, s: int):
    """Split the derivatives of order in (r, s] into non-derivatives-of-leaders
    (Theta_1) and derivatives of leaders (Theta_2)."""
    max_order = max((f.order() for f in lam), default=0)
    if r < max_order or s < r:
        raise BadBound("need r >= max order of the set and s >= r")
    leaders = [leader_data(f).leader for f in lam]
    theta1 = []
    theta2 = []
    for v in gamma_set(lam.n, lam.m, s):
        if sum(v.xi) <= r:
            continue
        if any(is_derivative_of(v, w) for w in leaders):
            theta2.append(v)
        else:
            theta1.append(v)
    return theta1, theta2