import numpy as np
import pytest

from orbitkit.catalog import affine_l1, commuting_constants, grushin, heisenberg
from orbitkit.errors import OrderTooHigh, OutOfDomain
from orbitkit.fields import (FieldFamily, constant_field, estimate_lb_bound,
                             eval_jet_norm, finite_difference_jacobian,
                             polynomial_field)
from orbitkit.space import ChartSpace, ball


@pytest.fixture
def plane():
    return ChartSpace(2)


def ysq_field(domain):
    # X(x, y) = (y^2, 0)
    return polynomial_field(domain, [((1.0, (0, 2)),), ()], label="Ysq")


class TestEvalJetNorm:
    def test_constant_field(self, plane):
        dom = ball([0, 0], 5.0)
        X = constant_field(dom, [3.0, 4.0])
        assert eval_jet_norm(X, np.zeros(2), 2, plane) == pytest.approx(5.0)

    def test_linear_identity(self, plane):
        dom = ball([0, 0], 10.0)
        X = polynomial_field(dom, [((1.0, (1, 0)),), ((1.0, (0, 1)),)], label="Id")
        got = eval_jet_norm(X, np.array([3.0, 4.0]), 1, plane)
        assert got == pytest.approx(6.0, abs=1e-9)

    def test_second_order(self, plane):
        dom = ball([0, 2], 3.0)
        X = ysq_field(dom)
        got = eval_jet_norm(X, np.array([0.0, 2.0]), 2, plane)
        # value 4 + Jacobian norm 4 + second-derivative norm 2
        assert got == pytest.approx(10.0, abs=1e-3)

    def test_out_of_domain(self, plane):
        X = constant_field(ball([0, 0], 1.0), [1.0, 0.0])
        with pytest.raises(OutOfDomain):
            eval_jet_norm(X, np.array([5.0, 0.0]), 1, plane)

    def test_order_too_high(self, plane):
        X = constant_field(ball([0, 0], 1.0), [1.0, 0.0])
        with pytest.raises(OrderTooHigh):
            eval_jet_norm(X, np.zeros(2), 4, plane)


class TestJacobians:
    @pytest.mark.parametrize("family_builder", [heisenberg, grushin])
    def test_analytic_matches_finite_differences(self, family_builder, rng):
        fam = family_builder()
        for _ in range(100):
            x = rng.uniform(-1, 1, fam.space.dimension)
            for m in fam.members:
                if not m.has_analytic_jacobian:
                    continue
                J = m.jacobian(x)
                J_fd = finite_difference_jacobian(m, x)
                scale = max(1.0, float(np.abs(J).max()))
                assert np.abs(J - J_fd).max() <= 1e-5 * scale


class TestEstimateLbBound:
    def test_constants_safety_factor(self):
        fam = commuting_constants(2, 2)
        rec = estimate_lb_bound(fam, ball([0, 0], 1.0), 2, 50, force_sampled=True)
        assert rec.bound_k == pytest.approx(1.25)
        assert rec.method == "sampled"

    def test_affine_family_triangle_bound(self):
        # members x + a with |a| <= 1 on the unit ball: jets at most 3
        fam = affine_l1(4, 4, decay=0.5, linear_part=True, radius=2.0)
        region = ball(np.zeros(4), 1.0, fam.space.norm_kind)
        rec = estimate_lb_bound(fam, region, 2, 100, force_sampled=True)
        assert rec.bound_k <= 3.75
        assert rec.bound_k >= 1.25 * 2.0  # at least the center jet, inflated

    def test_declared_bound_passthrough(self):
        fam = commuting_constants(2, 2)
        rec = estimate_lb_bound(fam, ball([0, 0], 1.0), 2, 10)
        assert rec.method == "declared"
        assert rec.bound_k == 1.0

    def test_quadratic_field_near_boundary(self):
        dom = ball([0, 2], 1.0)
        fam = FieldFamily(space=ChartSpace(2), members=(ysq_field(dom),),
                          common_domain=dom)
        rec = estimate_lb_bound(fam, ball([0, 2], 0.1), 2, 200, rng_seed=3)
        # center jet is 10, boundary jet 10.61; the sampled sup times 1.25
        # lands between those envelopes
        assert 10.0 <= rec.bound_k <= 13.3

    def test_monotone_in_region(self):
        fam = heisenberg()
        inner = estimate_lb_bound(fam, ball([0, 0, 0], 1.0), 2, 100, rng_seed=5,
                                  force_sampled=True)
        outer = estimate_lb_bound(fam, ball([0, 0, 0], 2.0), 2, 100, rng_seed=5,
                                  force_sampled=True)
        assert inner.bound_k <= outer.bound_k

    def test_region_must_fit_domain(self):
        fam = commuting_constants(2, 2, radius=1.0)
        with pytest.raises(OutOfDomain):
            estimate_lb_bound(fam, ball([0, 0], 3.0), 2, 10)

    @pytest.mark.parametrize("family_builder", [heisenberg, grushin,
                                                lambda: commuting_constants(3, 2)])
    def test_finite_smooth_families_certifiable(self, family_builder):
        # finite families of globally smooth fields always get a finite record
        fam = family_builder()
        for s in (0, 1, 2, 3):
            rec = estimate_lb_bound(fam, ball(np.zeros(fam.space.dimension), 1.0),
                                    s, 25, force_sampled=True)
            assert np.isfinite(rec.bound_k) and rec.bound_k > 0

    def test_operator_family_bounded_jets(self):
        from orbitkit.catalog import operator_family
        # matrix map [[1, 0], [x0, 1]] applied to decaying directions
        fam = operator_family(2, 2, [(1.0, (0, 0), 0, 0), (1.0, (0, 0), 1, 1),
                                     (1.0, (1, 0), 1, 0)], decay=0.5, radius=4.0)
        for s in (1, 2):
            rec = estimate_lb_bound(fam, ball([0, 0], 1.0), s, 50)
            assert np.isfinite(rec.bound_k) and rec.bound_k > 0
            assert rec.method == "sampled"
