import numpy as np
import pytest

from orbitkit.catalog import commuting_constants, heisenberg_full
from orbitkit.algebra import (FlowWord, bracket_chain, bracket_field, certify_h_prime,
                              enlarge_field, lie_bracket, lie_bracket_via_flows)
from orbitkit.fields import VectorField, estimate_lb_bound, polynomial_field
from orbitkit.flow import flow_single
from orbitkit.space import ball

TOL = 1e-9


def combo(a, X, b, Y, label="combo"):
    def ev(x):
        return a * X(x) + b * Y(x)

    def jac(x):
        return a * X.jacobian(x) + b * Y.jacobian(x)

    return VectorField(domain=X.domain, eval_fn=ev, jacobian_fn=jac, label=label)


class TestLieBracket:
    def test_self_bracket_vanishes(self, heis):
        for m in heis.members:
            assert np.allclose(lie_bracket(m, m, np.array([0.3, 0.1, -0.2])), 0.0)

    def test_heisenberg(self, heis, rng):
        for _ in range(5):
            x = rng.uniform(-1, 1, 3)
            assert np.allclose(lie_bracket(heis.members[0], heis.members[1], x),
                               [0.0, 0.0, 1.0])

    def test_grushin(self, grush, rng):
        for _ in range(5):
            x = rng.uniform(-1, 1, 2)
            assert np.allclose(lie_bracket(grush.members[0], grush.members[1], x),
                               [0.0, 1.0])

    def test_flow_limit_cross_validation(self, heis, grush):
        x = np.array([0.2, -0.3, 0.4])
        an = lie_bracket(heis.members[0], heis.members[1], x)
        fl = lie_bracket_via_flows(heis.members[0], heis.members[1], x)
        assert np.abs(an - fl).max() <= 1e-6
        y = np.array([0.4, 0.1])
        an = lie_bracket(grush.members[0], grush.members[1], y)
        fl = lie_bracket_via_flows(grush.members[0], grush.members[1], y)
        assert np.abs(an - fl).max() <= 1e-6

    def test_bilinearity_and_antisymmetry(self, heis, rng):
        X1, X2 = heis.members
        for _ in range(10):
            a, b = rng.uniform(-2, 2, 2)
            x = rng.uniform(-0.5, 0.5, 3)
            Z = combo(1.0, X1, 0.5, X2, "Z")
            lhs = lie_bracket(combo(a, X1, b, X2), Z, x)
            rhs = a * lie_bracket(X1, Z, x) + b * lie_bracket(X2, Z, x)
            assert np.abs(lhs - rhs).max() <= 1e-6
            assert np.abs(lie_bracket(X1, X2, x) + lie_bracket(X2, X1, x)).max() <= 1e-12

    def test_jacobi_identity(self, rng):
        dom = ball([0, 0, 0], 8.0)
        # cubic-ish fields with analytic Jacobians
        A = polynomial_field(dom, [((1.0, (0, 1, 0)),), ((0.5, (1, 0, 1)),),
                                   ((1.0, (0, 0, 0)),)], label="A")
        B = polynomial_field(dom, [((1.0, (0, 0, 1)),), ((-1.0, (1, 0, 0)),), ()],
                             label="B")
        C = polynomial_field(dom, [((0.5, (2, 0, 0)),), (), ((1.0, (0, 1, 0)),)],
                             label="C")
        for _ in range(50):
            x = rng.uniform(-0.5, 0.5, 3)
            s = (lie_bracket(A, bracket_field(B, C), x)
                 + lie_bracket(B, bracket_field(C, A), x)
                 + lie_bracket(C, bracket_field(A, B), x))
            assert np.abs(s).max() <= 1e-5


class TestEnlargement:
    def test_empty_word_is_base_field(self, heis, heis_lb):
        Y = enlarge_field(heis, FlowWord(()), 1, 1.0, heis_lb)
        x = np.array([0.3, 0.2, 0.1])
        assert np.allclose(Y(x), heis.members[1](x), atol=1e-12)
        assert Y.in_enlargement

    def test_translation_word_pushforward(self):
        # pushing the shear field through a unit translation shifts its
        # coefficient: eval(x, y) = (0, x - 1)
        dom = ball([0, 0], 8.0)
        from orbitkit.fields import FieldFamily
        from orbitkit.space import ChartSpace
        X1 = polynomial_field(dom, [((1.0, (0, 0)),), ()], label="X1")
        Y = polynomial_field(dom, [(), ((1.0, (1, 0)),)], label="xdy")
        fam = FieldFamily(space=ChartSpace(2), members=(X1, Y), common_domain=dom)
        lb = estimate_lb_bound(fam, ball([0, 0], 4.0), 2, 30)
        Z = enlarge_field(fam, FlowWord(((0, 1.0),)), 1, 1.0, lb)
        for x, y in [(0.0, 0.0), (0.5, -0.3), (2.0, 1.0)]:
            assert np.allclose(Z(np.array([x, y])), [0.0, x - 1.0], atol=1e-8)

    def test_heisenberg_word_closed_form(self, heis, heis_lb):
        # pushforward of the shear member through a unit flow of the first
        # member: closed form (0, 1, x - 1)
        Z = enlarge_field(heis, FlowWord(((0, 1.0),)), 1, 1.0, heis_lb)
        for x in ([0.5, 0.0, 0.0], [0.2, 0.3, -0.1]):
            got = Z(np.array(x))
            assert np.allclose(got, [0.0, 1.0, x[0] - 1.0], atol=1e-8)

    def test_conjugation_identity(self, heis, heis_lb, rng):
        # keystone: the flow of the enlarged field equals the conjugated flow
        ftol = 1e-8
        for _ in range(10):
            letters = tuple((int(rng.integers(0, 2)), float(rng.uniform(-0.4, 0.4)))
                            for _ in range(int(rng.integers(1, 3))))
            word = FlowWord(letters)
            base = int(rng.integers(0, 2))
            nu = float(rng.uniform(0.5, 2.0))
            Y = enlarge_field(heis, word, base, nu, heis_lb, tol=ftol)
            x = rng.uniform(-0.3, 0.3, 3)
            t = float(rng.uniform(-0.3, 0.3))
            lhs = flow_single(Y, x, t, tol=ftol).endpoint
            z = word.inverse().apply(heis, x, tol=ftol)
            mid = flow_single(heis.members[base], z, nu * t, tol=ftol).endpoint
            rhs = word.apply(heis, mid, tol=ftol)
            assert np.abs(lhs - rhs).max() <= 10 * ftol * (1 + np.abs(rhs).max())

    def test_idempotence_composes_words(self, heis, heis_lb):
        ftol = 1e-8
        w1 = FlowWord(((0, 0.5),))
        w2 = FlowWord(((1, 0.3),))
        inner = enlarge_field(heis, w1, 1, 2.0, heis_lb, tol=ftol)
        outer = enlarge_field(heis, w2, inner, 1.5, heis_lb, tol=ftol)
        assert outer.word.letters == w1.then(w2).letters
        assert outer.scale == pytest.approx(3.0)
        direct = enlarge_field(heis, w1.then(w2), 1, 3.0, heis_lb, tol=ftol)
        for _ in range(3):
            x = np.random.default_rng(3).uniform(-0.3, 0.3, 3)
            assert np.abs(outer(x) - direct(x)).max() <= 10 * ftol * (1 + np.abs(direct(x)).max())

    def test_screening_flags_oversized_fields(self, heis, heis_lb):
        # scaling far beyond the family bound must trip the membership screen
        Y = enlarge_field(heis, FlowWord(()), 0, 50.0, heis_lb)
        assert not Y.in_enlargement
        assert Y.screen_jet > heis_lb.bound_k

    def test_word_not_integrable(self):
        from orbitkit.errors import WordNotIntegrable
        from orbitkit.fields import FieldFamily, LbRecord
        from orbitkit.space import ChartSpace
        dom = ball([0, 0], 1.0)
        fam = FieldFamily(space=ChartSpace(2),
                          members=(polynomial_field(dom, [((1.0, (0, 0)),), ()],
                                                    label="X1"),),
                          common_domain=dom)
        lb = LbRecord(order_s=2, bound_k=1.25, region=dom)
        Z = enlarge_field(fam, FlowWord(((0, 0.2),)), 0, 1.0, lb)
        with pytest.raises(WordNotIntegrable):
            Z(np.array([-0.95, 0.0]))  # backward word exits the unit ball


class TestBracketChain:
    def test_heisenberg_ranks(self, heis):
        chain = bracket_chain(heis, np.zeros(3), 2)
        assert chain.rank_profile == (2, 3)
        assert chain.saturation_generation(3) == 2

    def test_commuting_ranks(self):
        fam = commuting_constants(3, 2)
        chain = bracket_chain(fam, np.zeros(3), 3)
        assert chain.rank_profile == (2, 2, 2)

    def test_grushin_origin(self, grush):
        chain = bracket_chain(grush, np.zeros(2), 2)
        assert chain.rank_profile == (1, 2)

    def test_generations_nest(self, heis):
        chain = bracket_chain(heis, np.zeros(3), 2)
        g1, g2 = chain.generations
        assert g2.source_labels[:len(g1.source_labels)] == g1.source_labels


class TestCertifyHPrime:
    def test_commuting_certified_zero(self):
        fam = commuting_constants(3, 2)
        rep = certify_h_prime(fam, fam.common_domain, grid_size=3, tol=1e-8)
        assert rep.certified
        assert rep.bound_C == 0.0

    def test_heisenberg_pair_refused(self, heis):
        rep = certify_h_prime(heis, ball([0, 0, 0], 0.5), grid_size=3, tol=1e-8)
        assert not rep.certified
        # the bracket is orthogonal to the span at the center and stays
        # order-one nearby
        assert rep.residuals.max() == pytest.approx(1.0, abs=1e-12)
        assert rep.residuals.min() >= 0.5

    def test_heisenberg_with_vertical_certified(self):
        fam = heisenberg_full()
        rep = certify_h_prime(fam, ball([0, 0, 0], 0.5), grid_size=3, tol=1e-8)
        assert rep.certified
        assert rep.bound_C == pytest.approx(1.0, abs=1e-8)
        pair_idx = rep.pairs.index((0, 1))
        assert np.allclose(rep.coefficients[:, pair_idx, 2], 1.0, atol=1e-8)

    def test_rank_deficiency_flagged_not_fatal(self, grush):
        region = ball([0, 0], 0.5)
        rep = certify_h_prime(grush, region, grid_size=3, tol=1e-8)
        # the x=0 line makes the dictionary rank-deficient there
        assert len(rep.rank_deficient_points) > 0
