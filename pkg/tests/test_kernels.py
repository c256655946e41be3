import pytest

from diffweil import (
    AlgPoly,
    BudgetExceeded,
    DerIndet,
    KernelPresentation,
    NotApplicable,
    ackermann,
    alpha_beta,
    bound_C,
    check_diamond,
    index_maps,
    leaders,
    validate_kernel,
)
from diffweil.kernels import BoundTable
from diffweil.errors import BadIndex


class TestAckermann:
    def test_successor_row(self):
        assert ackermann(0, 5) == 6

    def test_row_one(self):
        assert ackermann(1, 3) == 5

    def test_row_two(self):
        assert ackermann(2, 3) == 9

    def test_closed_forms_up_to_fifty(self):
        for y in range(51):
            assert ackermann(1, y) == y + 2
            assert ackermann(2, y) == 2 * y + 3

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            ackermann(4, 2, budget=10_000)


class TestBoundC:
    def test_ordinary_case(self):
        for n in range(1, 6):
            for r in range(11):
                assert bound_C(n, r, 1) == r

    def test_two_derivations(self):
        for n in range(1, 6):
            for r in range(6):
                assert bound_C(n, r, 2) == 2 ** n * r

    def test_three_derivations_single_variable(self):
        for r in range(7):
            assert bound_C(1, r, 3) == 3 * (2 ** r - 1)

    def test_paper_values(self):
        assert bound_C(1, 5, 1) == 5
        assert bound_C(3, 2, 2) == 16
        assert bound_C(1, 2, 3) == 9

    def test_monotone(self):
        table = BoundTable()
        for m in (1, 2):
            for n in (1, 2, 3):
                vals = [table.c(n, r, m) for r in range(5)]
                assert vals == sorted(vals)
        for r in (0, 1, 2, 3):
            vals = [BoundTable().c(n, r, 2) for n in (1, 2, 3, 4)]
            assert vals == sorted(vals)

    def test_feasible_m4(self):
        assert bound_C(1, 2, 4) == 253

    def test_infeasible_m4(self):
        with pytest.raises(BudgetExceeded):
            bound_C(1, 3, 4)

    def test_bad_indices(self):
        with pytest.raises(BadIndex):
            bound_C(0, 1, 1)


class TestAlphaBeta:
    def test_ordinary(self):
        for n in range(1, 11):
            assert alpha_beta(n, 1) == (2 * n, n)

    def test_two_derivations(self):
        assert alpha_beta(1, 2) == (6, 3)

    def test_bad_index(self):
        with pytest.raises(BadIndex):
            alpha_beta(0, 1)


class TestIndexMaps:
    def test_ordinary_identity(self):
        maps = index_maps(2, 1)
        assert maps.alpha == 4 and maps.beta == 2
        assert maps.pi == [0, 1]
        assert maps.psi == [0, 1, 2, 3]
        assert maps.phi == [0, 1, 2, 3]
        assert maps.phi_injective()

    def test_two_derivations_counts(self):
        maps = index_maps(1, 2)
        assert maps.alpha == 6 and maps.beta == 3
        assert len(maps.phi) == 3 * 3
        assert maps.phi_injective()

    def test_psi_is_prefix_of_pi_domain(self):
        maps = index_maps(1, 2)
        assert maps.psi == list(range(1 * 3))
        assert maps.pi == list(range(maps.beta))


@pytest.fixture()
def sqrt_kernel(base_t, kring_t):
    t = base_t.gen(1)
    a0 = DerIndet((0,), 1)
    a1 = DerIndet((1,), 1)
    z0 = AlgPoly.indet(kring_t, 1, 1, (0,), 1)
    z1 = AlgPoly.indet(kring_t, 1, 1, (1,), 1)
    good = KernelPresentation(base_t, 1, 1, {a0: z0 * z0 - t, a1: 2 * z0 * z1 - 1})
    bad = KernelPresentation(base_t, 1, 1, {a0: z0 * z0 - t, a1: z1})
    return good, bad


class TestValidateKernel:
    def test_all_transcendental(self, base_t):
        pres = KernelPresentation(base_t, 1, 1, {})
        assert validate_kernel(pres) is None

    def test_forced_derivative_accepted(self, sqrt_kernel):
        good, _ = sqrt_kernel
        assert validate_kernel(good) is None

    def test_inconsistent_assignment_rejected(self, sqrt_kernel):
        _, bad = sqrt_kernel
        rej = validate_kernel(bad)
        assert rej is not None
        assert rej.coord == DerIndet((0,), 1) and rej.k == 1

    def test_triangularity_enforced(self, base_t, kring_t):
        a0 = DerIndet((0,), 1)
        later = AlgPoly.indet(kring_t, 1, 1, (1,), 1)
        with pytest.raises(NotApplicable):
            KernelPresentation(base_t, 1, 1, {a0: later - 1})


class TestLeaders:
    def test_no_algebraic_coordinates(self, base_t):
        pres = KernelPresentation(base_t, 1, 1, {})
        assert leaders(pres) == ([], [])

    def test_upward_cone(self, base_t, kring_t):
        a1 = DerIndet((1,), 1)
        z1 = AlgPoly.indet(kring_t, 1, 1, (1,), 1)
        pres = KernelPresentation(base_t, 1, 1, {a1: z1 * z1 - base_t.gen(1)})
        lead, minimal = leaders(pres)
        assert lead == [a1]
        assert minimal == [a1]

    def test_base_coordinate_leader(self, sqrt_kernel):
        good, _ = sqrt_kernel
        lead, minimal = leaders(good)
        assert lead == [DerIndet((0,), 1), DerIndet((1,), 1)]
        assert minimal == [DerIndet((0,), 1)]

    def test_upward_closure_and_antichain(self, base_2d, kring_2d):
        a10 = DerIndet((1, 0), 1)
        a01 = DerIndet((0, 1), 1)
        z10 = AlgPoly.indet(kring_2d, 1, 2, (1, 0), 1)
        z01 = AlgPoly.indet(kring_2d, 1, 2, (0, 1), 1)
        pres = KernelPresentation(base_2d, 1, 1, {a10: z10 - 1, a01: z01 - 2})
        lead, minimal = leaders(pres)
        # minimal leaders pairwise incomparable in the product order
        for a in minimal:
            for b in minimal:
                if a != b:
                    assert not all(x <= y for x, y in zip(a.xi, b.xi))
        # leader set upward closed within range
        for v in lead:
            for w in pres.coords:
                if w.i == v.i and all(x <= y for x, y in zip(v.xi, w.xi)):
                    assert w in lead


class TestCheckDiamond:
    def test_vacuous_projection(self, base_t, kring_t):
        v0 = AlgPoly.indet(kring_t, 1, 1, (0,), 1)
        v1 = AlgPoly.indet(kring_t, 1, 1, (1,), 1)
        probes = [(base_t.const(2), base_t.const(2))]
        report = check_diamond([v1 - v0], [], probes, 1, 1)
        assert report.entries[0]["status"] == "pass"

    def test_origin(self, base_t, kring_t):
        v0 = AlgPoly.indet(kring_t, 1, 1, (0,), 1)
        v1 = AlgPoly.indet(kring_t, 1, 1, (1,), 1)
        probes = [(base_t.zero(), base_t.zero())]
        report = check_diamond([v0, v1], [v0], probes, 1, 1)
        assert report.entries[0]["status"] == "pass"

    def test_probe_off_w(self, base_t, kring_t):
        v0 = AlgPoly.indet(kring_t, 1, 1, (0,), 1)
        v1 = AlgPoly.indet(kring_t, 1, 1, (1,), 1)
        probes = [(base_t.one(), base_t.zero())]
        report = check_diamond([v0, v1], [v0], probes, 1, 1)
        assert report.entries[0]["status"] == "not_applicable"

    def test_failing_probe(self, base_t, kring_t):
        # W = V(x1 - 1): the probe (0, 1) lies on W but its image violates
        # the first-prolongation equations of pi(W) = V(x0)... use explicit data:
        v0 = AlgPoly.indet(kring_t, 1, 1, (0,), 1)
        v1 = AlgPoly.indet(kring_t, 1, 1, (1,), 1)
        # pi(W) = V(x0) but W allows x0 = 0 with x1 = 1; tau1 of V(x0) forces y = 0
        probes = [(base_t.zero(), base_t.one())]
        report = check_diamond([v0], [v0], probes, 1, 1)
        assert report.entries[0]["status"] == "fail"

    def test_dimension_mismatch(self, base_t, kring_t):
        v0 = AlgPoly.indet(kring_t, 1, 1, (0,), 1)
        with pytest.raises(BadIndex):
            check_diamond([v0], [], [(base_t.zero(),)], 1, 1)
