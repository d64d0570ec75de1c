import numpy as np
import pytest

from orbitkit.space import Ball, ChartSpace, L1Coefficients, ball, norm1, truncate, vector_norm


class TestNorm1:
    def test_empty(self):
        assert norm1(L1Coefficients()) == 0.0

    def test_direct_sum(self):
        tau = L1Coefficients(((0, 1.0), (3, -2.0)))
        assert norm1(tau) == 3.0

    def test_tail_adds(self):
        tau = L1Coefficients(((0, 0.5),), tail_bound=0.25)
        assert norm1(tau) == 0.75

    def test_zero_iff_empty(self):
        assert norm1(L1Coefficients((), 0.0)) == 0.0
        assert norm1(L1Coefficients((), 0.1)) > 0.0
        assert norm1(L1Coefficients(((2, 0.1),))) > 0.0


class TestTruncate:
    def test_counting(self):
        tau = L1Coefficients(((0, 1.0), (1, 1.0), (2, 1.0)))
        kept, tail = truncate(tau, 2)
        assert kept.entries == ((0, 1.0), (1, 1.0))
        assert tail == 1.0

    def test_everything_dropped(self):
        kept, tail = truncate(L1Coefficients(((5, -4.0),)), 0)
        assert kept.entries == ()
        assert tail == 4.0

    def test_tail_passes_through(self):
        kept, tail = truncate(L1Coefficients(((0, 1.0),), tail_bound=0.5), 1)
        assert kept.entries == ((0, 1.0),)
        assert tail == 0.5

    def test_mass_conservation(self, rng):
        for _ in range(200):
            m = int(rng.integers(0, 8))
            idx = sorted(rng.choice(50, size=m, replace=False)) if m else []
            vals = rng.standard_normal(m)
            vals[vals == 0] = 1.0
            tau = L1Coefficients(tuple((int(i), float(v)) for i, v in zip(idx, vals)),
                                 float(rng.uniform(0, 2)))
            n = int(rng.integers(0, m + 3))
            kept, tail = truncate(tau, n)
            assert abs(norm1(kept) + tail - norm1(tau)) <= 1e-12


class TestL1CoefficientsValidation:
    def test_rejects_zero_values(self):
        with pytest.raises(ValueError):
            L1Coefficients(((0, 0.0),))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            L1Coefficients(((0, 1.0), (0, 2.0)))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            L1Coefficients(((3, 1.0), (1, 2.0)))

    def test_rejects_inconsistent_cache(self):
        with pytest.raises(ValueError):
            L1Coefficients(((0, 1.0),), 0.0, cached_norm1=2.0)

    def test_from_pairs_merges(self):
        tau = L1Coefficients.from_pairs([(2, 1.0), (0, 0.5), (2, -1.0)])
        assert tau.entries == ((0, 0.5),)

    def test_combine(self):
        a = L1Coefficients(((0, 1.0), (2, 2.0)))
        b = L1Coefficients(((0, -1.0), (1, 3.0)))
        c = a.combine(b)
        assert c.entries == ((1, 3.0), (2, 2.0))


class TestChartSpace:
    def test_norm_default_euclidean(self):
        assert ChartSpace(3).norm_kind == "euclidean"

    def test_norm_default_l1_on_truncation(self):
        assert ChartSpace(3, truncation_of_l1=True).norm_kind == "l1"

    def test_dimension_positive(self):
        with pytest.raises(ValueError):
            ChartSpace(0)

    @pytest.mark.parametrize("kind", ["sup", "euclidean", "l1"])
    def test_norm_axioms(self, kind, rng):
        # subadditivity and absolute homogeneity on 1000 random pairs
        for _ in range(1000):
            u = rng.standard_normal(4)
            v = rng.standard_normal(4)
            a = float(rng.standard_normal())
            nu, nv = vector_norm(u, kind), vector_norm(v, kind)
            assert vector_norm(u + v, kind) <= nu + nv + 1e-12
            assert abs(vector_norm(a * u, kind) - abs(a) * nu) <= 1e-12


class TestBall:
    def test_radius_positive(self):
        with pytest.raises(ValueError):
            Ball(np.zeros(2), 0.0, "euclidean")

    def test_contains(self):
        b = ball([0, 0], 1.0, "l1")
        assert b.contains([0.5, 0.5])
        assert not b.contains([0.6, 0.5])

    def test_contains_ball(self):
        outer = ball([0, 0], 2.0)
        inner = ball([0.5, 0], 1.0)
        assert outer.contains_ball(inner)
        assert not inner.contains_ball(outer)

    def test_immutable_center(self):
        b = ball([1.0, 2.0], 1.0)
        with pytest.raises(ValueError):
            b.center[0] = 5.0
