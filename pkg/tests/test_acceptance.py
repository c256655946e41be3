"""Acceptance suite: one test per shipping criterion, exact tolerances.

Each test prints a single "ACCEPTANCE <k>: PASS <summary>" line (visible
under pytest -s); a failure raises before the line is printed.
"""

import json
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from diffweil import (
    BaseFieldSpec,
    BRing,
    DiffPoly,
    DiffPresentation,
    Inconsistent,
    KernelPresentation,
    RankedSet,
    RatFunc,
    alpha_beta,
    autoreduce,
    bound_C,
    check_thm33,
    check_unit_map_identity,
    descend_presentation,
    divide,
    membership_test,
    monogenic_extension,
    prolongation_equations,
    section_identity_defect,
    standardize_descent,
    tau1_explicit,
    validate_extension,
    validate_field,
    validate_kernel,
)
from diffweil.diffpoly import (
    AlgPoly,
    DerIndet,
    KRing,
    compare_indets,
    indet_key,
    is_reduced_wrt_set,
    leader_data,
    mono_sort,
    multi_indices_upto,
    rank_of,
)
from diffweil.errors import BudgetExceeded, NotApplicable

REPO = Path(__file__).resolve().parents[1]


def _passed(k, summary):
    print(f"\nACCEPTANCE {k}: PASS {summary}")


# ---------------------------------------------------------------- criteria 1-2


def test_criterion_01_example_descent_golden():
    started = time.monotonic()
    base = BaseFieldSpec(1, 1, [[RatFunc.const(1, 1)]])
    t = base.gen(1)
    ext = monogenic_extension(base, [-t, base.zero(), base.one()])
    assert validate_extension(ext) is None
    rel = DiffPoly.indet(BRing(ext), 1, 1, (1,), 1)
    out = descend_presentation(DiffPresentation(["x"], [rel]), ext, 2)
    std = standardize_descent(out)
    kring = out.wring.kring
    y1 = DiffPoly.indet(kring, 2, 1, (0,), 1)
    y2 = DiffPoly.indet(kring, 2, 1, (0,), 2)
    expected = [y1.differentiate(1), y2.differentiate(1) + y2.scale(1 / (2 * t))]
    assert std == expected
    assert [str(p) for p in std] == ["d1 x1", "d1 x2 + (1/(2*t))*x2"]
    elapsed = time.monotonic() - started
    assert elapsed < 1.0
    _passed(1, f"(square-root descent standardizes exactly; {elapsed:.3f}s)")


def test_criterion_02_constant_basis_variant():
    base = BaseFieldSpec(1, 1, [[RatFunc.const(1, 0)]])
    t = base.gen(1)
    ext = monogenic_extension(base, [-t, base.zero(), base.one()])
    assert validate_extension(ext) is None
    rel = DiffPoly.indet(BRing(ext), 1, 1, (1,), 1)
    out = descend_presentation(DiffPresentation(["x"], [rel]), ext, 2)
    std = standardize_descent(out)
    kring = out.wring.kring
    y1 = DiffPoly.indet(kring, 2, 1, (0,), 1)
    y2 = DiffPoly.indet(kring, 2, 1, (0,), 2)
    assert std == [y1.differentiate(1), y2.differentiate(1)]
    _passed(2, "(constant-basis variant gives d y1 = d y2 = 0)")


# ------------------------------------------------------------- corpus for 3-4


def _random_base(rng, m):
    if m == 1:
        action = rng.choice([[["1"]], [["0"]], [["2"]], [["t"]]])
    else:
        action = rng.choice(
            [
                [["1"], ["0"]],
                [["0"], ["1"]],
                [["1"], ["2"]],
                [["t"], ["t"]],
                [["2"], ["3"]],
            ]
        )
    k = 1
    t = RatFunc.gen(k, 1)
    lookup = {"0": RatFunc.const(k, 0), "1": RatFunc.const(k, 1), "2": RatFunc.const(k, 2),
              "3": RatFunc.const(k, 3), "t": t}
    table = [[lookup[entry[0]]] for entry in action]
    spec = BaseFieldSpec(k, m, table)
    assert validate_field(spec) is None
    return spec


def _random_extension(rng, base, ell):
    t = base.gen(1)
    zero, one = base.zero(), base.one()
    for _ in range(40):
        q = rng.choice([t, t + 1, t * t, 2 * t, t + 2, t * t + 1])
        if ell == 2:
            lin = rng.choice([zero, one, -one])
            coeffs = [-q, lin, one]
        else:
            lin = rng.choice([zero, one])
            coeffs = [-q, lin, zero, one]
        try:
            ext = monogenic_extension(base, coeffs)
        except NotApplicable:
            continue
        if validate_extension(ext) is None:
            return ext
    raise AssertionError("could not build a valid random extension")


def _random_relation(rng, bring, n, m):
    out = DiffPoly(bring, n, m, {})
    idx = multi_indices_upto(m, 1)
    base = bring.base
    for _ in range(rng.randint(1, 2)):
        mono = {}
        for _ in range(rng.randint(1, 2)):
            v = DerIndet(rng.choice(idx), rng.randint(1, n))
            mono[v] = mono.get(v, 0) + 1
        vec = tuple(base.const(rng.randint(-1, 2)) for _ in range(bring.ext.ell))
        out = out + DiffPoly(bring, n, m, {mono_sort(mono.items()): vec})
    return out


@pytest.fixture(scope="module")
def extension_corpus():
    rng = random.Random(2024)
    corpus = []
    while len(corpus) < 22:
        m = rng.choice([1, 2])
        ell = rng.choice([2, 3])
        base = _random_base(rng, m)
        ext = _random_extension(rng, base, ell)
        n_gens = rng.choice([1, 2])
        bring = BRing(ext)
        rels = [_random_relation(rng, bring, n_gens, m) for _ in range(rng.randint(1, 2))]
        rels = [r for r in rels if not r.is_zero() and not r.is_constant()]
        corpus.append((ext, n_gens, rels))
    return corpus


def test_criterion_03_unit_map_identity(extension_corpus):
    started = time.monotonic()
    checked = 0
    for ext, n_gens, rels in extension_corpus:
        bring = BRing(ext)
        m = ext.base.m
        for theta in multi_indices_upto(m, 2):
            for g in range(1, n_gens + 1):
                p = DiffPoly.indet(bring, n_gens, m, theta, g)
                for d in range(1, m + 1):
                    diffs = check_unit_map_identity(ext, p, d)
                    assert all(x.is_zero() for x in diffs)
                    checked += 1
        for rel in rels:
            for d in range(1, m + 1):
                diffs = check_unit_map_identity(ext, rel, d)
                assert all(x.is_zero() for x in diffs)
                checked += 1
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    _passed(3, f"({len(extension_corpus)} extensions, {checked} exact identities, {elapsed:.1f}s)")


def test_criterion_04_thm33_suite(extension_corpus):
    rng = random.Random(77)
    failures = 0
    brackets_checked = 0
    for ext, n_gens, _ in extension_corpus:
        base = ext.base
        t = base.gen(1)
        d1 = 1
        d2 = base.m  # (1,1) in the ordinary case, (1,2) with two derivations
        a1 = rng.choice([base.one(), base.const(2), t])
        a2 = rng.choice([base.one(), base.const(-1), t * t])
        ce = check_thm33(ext, (d1, d2), a1, a2, 2, n_gens=n_gens)
        if ce is not None:
            failures += 1
        brackets_checked += 1
    assert failures == 0
    _passed(4, f"(linearity and vanishing brackets on {brackets_checked} extension/derivation pairs)")


# ---------------------------------------------------------------- criterion 5


def test_criterion_05_bound_closed_forms():
    started = time.monotonic()
    for n in range(1, 6):
        for r in range(11):
            assert bound_C(n, r, 1) == r
    for n in range(1, 6):
        for r in range(6):
            assert bound_C(n, r, 2) == 2 ** n * r
    for r in range(7):
        assert bound_C(1, r, 3) == 3 * (2 ** r - 1)
    for n in range(1, 11):
        assert alpha_beta(n, 1) == (2 * n, n)
    elapsed = time.monotonic() - started
    assert elapsed < 1.0
    _passed(5, f"(all displayed closed forms match exactly; {elapsed:.3f}s)")


# ---------------------------------------------------------------- criterion 6


def _random_affine(rng, ring, base, n, m):
    out = AlgPoly(ring, n, m, {})
    t = base.gen(1)
    for _ in range(rng.randint(1, 3)):
        mono = {}
        for _ in range(rng.randint(0, 3)):
            v = DerIndet((0,) * m, rng.randint(1, n))
            mono[v] = mono.get(v, 0) + 1
        coeff = rng.choice([base.one(), -base.one(), base.const(2), t, 1 / t, t + 1])
        out = out + AlgPoly(ring, n, m, {mono_sort(mono.items()): coeff})
    return out


def test_criterion_06_prolongation_cross_oracle():
    started = time.monotonic()
    rng = random.Random(606)
    base1 = BaseFieldSpec(1, 1, [[RatFunc.const(1, 1)]])
    base2 = BaseFieldSpec(1, 2, [[RatFunc.const(1, 1)], [RatFunc.const(1, 0)]])
    ring1, ring2 = KRing(base1), KRing(base2)
    systems = 0
    while systems < 100:
        n = rng.randint(1, 3)
        m = rng.choice([1, 2])
        base = base1 if m == 1 else base2
        ring = ring1 if m == 1 else ring2
        gens = [_random_affine(rng, ring, base, n, m) for _ in range(rng.randint(1, 2))]
        gens = [g for g in gens if not g.is_zero()]
        if not gens:
            continue
        tau_series = prolongation_equations(gens, 1)
        tau_direct = tau1_explicit(gens)
        assert sorted(map(str, tau_series.equations)) == sorted(map(str, tau_direct.equations))
        for r in (1, 2):
            system = prolongation_equations(gens, r)
            defects = section_identity_defect(system, gens, ring)
            assert all(d.is_zero() for d in defects)
        systems += 1
    elapsed = time.monotonic() - started
    assert elapsed < 120.0
    _passed(6, f"({systems} random systems, oracle + section identity exact, {elapsed:.1f}s)")


# ---------------------------------------------------------------- criterion 7


def _random_diffpoly(rng, ring, base, n, m):
    out = DiffPoly(ring, n, m, {})
    idx = multi_indices_upto(m, 2)
    t = base.gen(1)
    for _ in range(rng.randint(1, 3)):
        mono = {}
        for _ in range(rng.randint(0, 2)):
            v = DerIndet(rng.choice(idx), rng.randint(1, n))
            mono[v] = mono.get(v, 0) + rng.randint(1, 2)
        coeff = rng.choice([base.const(1), base.const(-1), base.const(2), t, base.const(1) / t])
        out = out + DiffPoly(ring, n, m, {mono_sort(mono.items()): coeff})
    return out


def test_criterion_07_division_certificates():
    started = time.monotonic()
    rng = random.Random(707)
    base1 = BaseFieldSpec(1, 1, [[RatFunc.const(1, 1)]])
    base2 = BaseFieldSpec(1, 2, [[RatFunc.const(1, 1)], [RatFunc.const(1, 0)]])
    ring1, ring2 = KRing(base1), KRing(base2)
    pairs = 0
    inconsistent_seen = 0
    skipped = 0
    while pairs < 200:
        n, m = rng.choice([(1, 1), (2, 1), (1, 2)])
        base = base1 if m == 1 else base2
        ring = ring1 if m == 1 else ring2
        cands = [_random_diffpoly(rng, ring, base, n, m) for _ in range(rng.randint(1, 2))]
        try:
            lam = autoreduce(cands, context=(ring, n, m), step_budget=300)
        except BudgetExceeded:
            skipped += 1
            continue
        if isinstance(lam, Inconsistent):
            inconsistent_seen += 1
            continue
        if len(lam) == 0 or any(len(f.terms) > 6 for f in lam):
            skipped += 1
            continue
        f = _random_diffpoly(rng, ring, base, n, m)
        try:
            cert = divide(f, lam, step_budget=2000)
        except BudgetExceeded:
            skipped += 1
            continue
        assert cert.reexpand().is_zero()
        assert is_reduced_wrt_set(cert.remainder, lam)
        for g in lam:
            for xi in multi_indices_upto(m, 2):
                verdict = membership_test(g.differentiate_xi(xi), lam)
                assert verdict.member
                assert verdict.certificate.reexpand().is_zero()
        one = DiffPoly.const(ring, n, m, 1)
        assert not membership_test(one, lam).member
        pairs += 1
    elapsed = time.monotonic() - started
    _passed(
        7,
        f"({pairs} certified divisions, {inconsistent_seen} inconsistent draws, "
        f"{skipped} skipped, {elapsed:.1f}s)",
    )


# ---------------------------------------------------------------- criterion 8


def test_criterion_08_property_suites():
    rng = random.Random(808)
    one = RatFunc.const(2, 1)
    zero = RatFunc.const(2, 0)
    t2 = RatFunc.gen(2, 2)
    spec = BaseFieldSpec(2, 2, [[one, zero], [zero, t2]])
    assert validate_field(spec) is None

    from diffweil.polys import Poly

    def random_poly(max_terms=3, max_exp=2):
        terms = {}
        for _ in range(rng.randint(1, max_terms)):
            mono = (rng.randint(0, max_exp), rng.randint(0, max_exp))
            terms[mono] = Fraction(rng.randint(-4, 4))
        return Poly(2, terms)

    def random_ratfunc(with_denominator):
        num = random_poly()
        if not with_denominator:
            return RatFunc(num, Poly.const(2, 1))
        den = random_poly(max_terms=1, max_exp=1)
        while den.is_zero():
            den = random_poly(max_terms=1, max_exp=1)
        return RatFunc(num, den)

    samples = 0
    for trial in range(1000):
        heavy = trial % 5 == 0  # every fifth sample carries a genuine denominator
        a = random_ratfunc(heavy)
        b = random_ratfunc(heavy)
        d = rng.choice([1, 2])
        assert spec.derive(d, a * b) == spec.derive(d, a) * b + a * spec.derive(d, b)
        assert spec.derive(1, spec.derive(2, a)) == spec.derive(2, spec.derive(1, a))
        if not b.is_zero():
            x = (a + b) * b
            y = a * b + b * b
            assert x.num == y.num and x.den == y.den
        samples += 1
    assert samples >= 1000

    base2 = BaseFieldSpec(1, 2, [[RatFunc.const(1, 1)], [RatFunc.const(1, 0)]])
    ring2 = KRing(base2)
    idx = multi_indices_upto(2, 2)
    ranking_samples = 0
    for _ in range(1000):
        a = DerIndet(tuple(rng.choice(idx)), rng.randint(1, 2))
        b = DerIndet(tuple(rng.choice(idx)), rng.randint(1, 2))
        c = compare_indets(a, b)
        assert c in (-1, 0, 1)
        assert (c == 0) == (a == b)
        assert compare_indets(b, a) == -c
        for d in (1, 2):
            shifted = list(a.xi)
            shifted[d - 1] += 1
            assert compare_indets(a, DerIndet(tuple(shifted), a.i)) == -1
        ranking_samples += 1
    assert ranking_samples >= 1000

    rank_samples = 0
    attempts = 0
    while rank_samples < 1000 and attempts < 5000:
        attempts += 1
        f = _random_diffpoly(rng, ring2, base2, 2, 2)
        if f.is_constant():
            continue
        ld = leader_data(f)
        if not ld.separant.is_constant():
            assert rank_of(ld.separant) < ld.rank
        if not ld.initial.is_constant():
            assert rank_of(ld.initial) < ld.rank
        rank_samples += 1
    assert rank_samples >= 1000
    _passed(8, f"(1000+ samples per property family)")


# ---------------------------------------------------------------- criterion 9


def test_criterion_09_kernel_validation():
    base = BaseFieldSpec(1, 1, [[RatFunc.const(1, 1)]])
    ring = KRing(base)
    t = base.gen(1)
    a0 = DerIndet((0,), 1)
    a1 = DerIndet((1,), 1)
    z0 = AlgPoly.indet(ring, 1, 1, (0,), 1)
    z1 = AlgPoly.indet(ring, 1, 1, (1,), 1)

    trivial = KernelPresentation(base, 1, 1, {})
    assert validate_kernel(trivial) is None

    forced = KernelPresentation(base, 1, 1, {a0: z0 * z0 - t, a1: 2 * z0 * z1 - 1})
    assert validate_kernel(forced) is None

    broken = KernelPresentation(base, 1, 1, {a0: z0 * z0 - t, a1: z1})
    rej = validate_kernel(broken)
    assert rej is not None and rej.coord == a0 and rej.k == 1
    _passed(9, "(accept / accept / reject exactly as specified)")


# --------------------------------------------------------------- criterion 10


def test_criterion_10_cli_determinism():
    tasks = sorted((REPO / "demos" / "tasks").glob("*.dw"))
    assert tasks, "demo task corpus missing"
    for path in tasks:
        runs = []
        for _ in range(2):
            res = subprocess.run(
                [sys.executable, "-m", "diffweil.cli", "run", str(path), "--json", "--stable"],
                capture_output=True,
                cwd=REPO,
                env={"PYTHONPATH": str(REPO / "src"), "PATH": "/usr/bin:/bin"},
            )
            assert res.returncode == 0, (path, res.stderr)
            runs.append(res.stdout)
        assert runs[0] == runs[1], f"nondeterministic output for {path.name}"
        golden = REPO / "tests" / "golden" / (path.stem + ".json")
        if golden.exists():
            assert runs[0] == golden.read_bytes(), f"golden mismatch for {path.name}"
    _passed(10, f"(byte-identical JSON over {len(tasks)} task files, golden-checked)")
