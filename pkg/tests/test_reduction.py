import random

from diffweil import (
    DiffPoly,
    Inconsistent,
    RankedSet,
    autoreduce,
    divide,
    membership_test,
)
from diffweil.diffpoly import DerIndet, is_reduced_wrt_set, mono_sort, multi_indices_upto
from diffweil.errors import BudgetExceeded


def DP(ring, n, m, xi, i):
    return DiffPoly.indet(ring, n, m, xi, i)


class TestAutoreduce:
    def test_singleton(self, kring_t, base_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        f = dx * dx - base_t.gen(1)
        out = autoreduce([f])
        assert isinstance(out, RankedSet)
        assert list(out) == [f]

    def test_square_drops(self, kring_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        out = autoreduce([dx * dx, dx])
        assert list(out) == [dx]

    def test_inconsistent(self, kring_t):
        x = DP(kring_t, 1, 1, (0,), 1)
        dx = DP(kring_t, 1, 1, (1,), 1)
        out = autoreduce([x, dx - 1])
        assert isinstance(out, Inconsistent)
        assert out.witness.is_constant() and not out.witness.is_zero()

    def test_output_is_autoreduced_and_not_higher(self, kring_t, base_t):
        # the output never ranks above the greedy autoreduced subset of the input
        from diffweil import compare_autoreduced, rank_of, reduction_status
        from diffweil.diffpoly import REDUCED

        random.seed(21)
        for _ in range(40):
            polys = [_random_poly(kring_t, base_t, 2, 1) for _ in range(2)]
            polys = [p for p in polys if not p.is_constant()]
            if not polys:
                continue
            try:
                out = autoreduce(polys, context=(kring_t, 2, 1), step_budget=300)
            except BudgetExceeded:
                continue
            if isinstance(out, Inconsistent):
                continue
            for a in out:
                for b in out:
                    if a is not b:
                        assert reduction_status(a, b) == REDUCED
            greedy = []
            for f in sorted(polys, key=rank_of):
                if all(reduction_status(f, g) == REDUCED for g in greedy):
                    greedy.append(f)
            baseline = RankedSet(greedy, autoreduced=True, _checked=True)
            assert compare_autoreduced(out, baseline) <= 0


class TestDivide:
    def test_already_reduced(self, kring_t, base_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        x = DP(kring_t, 1, 1, (0,), 1)
        lam = RankedSet([dx * dx - base_t.gen(1)], autoreduced=True)
        cert = divide(x, lam)
        assert cert.ell == 0 and cert.remainder == x and not cert.cofactors
        assert cert.check()

    def test_member_itself(self, kring_t, base_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        f = dx * dx - base_t.gen(1)
        lam = RankedSet([f], autoreduced=True)
        cert = divide(f, lam)
        assert cert.remainder.is_zero() and cert.ell == 0
        assert cert.check()

    def test_second_derivative_certificate(self, kring_t, base_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        d2x = DP(kring_t, 1, 1, (2,), 1)
        lam = RankedSet([dx * dx - base_t.gen(1)], autoreduced=True)
        cert = divide(d2x, lam)
        assert cert.ell == 1
        assert cert.remainder == 1
        assert cert.cofactors == {(0, (1,)): DiffPoly.const(kring_t, 1, 1, 1)}
        assert cert.check()


class TestMembership:
    def test_zero_is_member(self, kring_t, base_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        lam = RankedSet([dx * dx - base_t.gen(1)], autoreduced=True)
        v = membership_test(DiffPoly(kring_t, 1, 1, {}), lam)
        assert v.member

    def test_derivative_of_generator(self, kring_t, base_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        d2x = DP(kring_t, 1, 1, (2,), 1)
        lam = RankedSet([dx * dx - base_t.gen(1)], autoreduced=True)
        v = membership_test(2 * dx * d2x - 1, lam)
        assert v.member and v.certificate.check()

    def test_one_is_nonmember(self, kring_t, base_t):
        dx = DP(kring_t, 1, 1, (1,), 1)
        lam = RankedSet([dx * dx - base_t.gen(1)], autoreduced=True)
        v = membership_test(DiffPoly.const(kring_t, 1, 1, 1), lam)
        assert not v.member
        assert v.complete_only_for_characteristic_sets

    def test_divisor_choice_search(self, kring_2d):
        # only one of the two reduction paths ends in zero here
        x = DP(kring_2d, 1, 2, (0, 0), 1)
        d1x = DP(kring_2d, 1, 2, (1, 0), 1)
        d2x = DP(kring_2d, 1, 2, (0, 1), 1)
        lam = RankedSet([d1x - 1, d2x - x], autoreduced=True)
        target = (d2x - x).differentiate(1)
        v = membership_test(target, lam)
        assert v.member and v.certificate.check()


def _random_poly(ring, base, n, m, max_order=2, nterms=3, maxdeg=2):
    out = DiffPoly(ring, n, m, {})
    idx = multi_indices_upto(m, max_order)
    for _ in range(random.randint(1, nterms)):
        mono = {}
        for _ in range(random.randint(0, 2)):
            v = DerIndet(random.choice(idx), random.randint(1, n))
            mono[v] = mono.get(v, 0) + random.randint(1, maxdeg)
        t = base.gen(1)
        coeff = random.choice(
            [base.const(1), base.const(-1), base.const(2), t, base.const(1) / t]
        )
        out = out + DiffPoly(ring, n, m, {mono_sort(mono.items()): coeff})
    return out


def test_random_certificates_reexpand(kring_t, kring_2d, base_t, base_2d):
    random.seed(31)
    done = 0
    trials = 0
    while done < 40 and trials < 400:
        trials += 1
        n, m = random.choice([(1, 1), (2, 1), (1, 2)])
        ring = kring_t if m == 1 else kring_2d
        base = base_t if m == 1 else base_2d
        cands = [_random_poly(ring, base, n, m) for _ in range(random.randint(1, 2))]
        try:
            lam = autoreduce(cands, context=(ring, n, m), step_budget=300)
        except BudgetExceeded:
            continue
        if isinstance(lam, Inconsistent) or len(lam) == 0:
            continue
        if any(len(f.terms) > 6 for f in lam):
            continue
        f = _random_poly(ring, base, n, m)
        try:
            cert = divide(f, lam, step_budget=2000)
        except BudgetExceeded:
            continue
        assert cert.reexpand().is_zero()
        assert is_reduced_wrt_set(cert.remainder, lam)
        done += 1
    assert done >= 40
