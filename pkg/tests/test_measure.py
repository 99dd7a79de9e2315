import io
import math
from fractions import Fraction

import numpy as np
import pytest

import fracspec as fs


class TestMuHat:
    def test_at_zero_exact(self, mu4, mu2, mu3):
        for m in (mu4, mu2, mu3):
            assert m.mu_hat(0.0, depth=10).value == 1.0

    def test_mu2_against_closed_form(self, mu2):
        v = mu2.mu_hat(0.5, depth=40).value
        assert abs(v - 2j / math.pi) < 1e-8

    def test_mu4_vanishes_at_one(self, mu4):
        assert abs(mu4.mu_hat(1.0, depth=40).value) <= 1e-8

    def test_recursion_consistency(self, mu4, scale4):
        rng = np.random.RandomState(5)
        for t in rng.uniform(-8, 8, 20):
            lhs = mu4.mu_hat(t, depth=30).value
            rhs = fs.chi_B(scale4, (t,)) * mu4.mu_hat(t / 4, depth=29).value
            assert abs(lhs - rhs) <= 1e-14

    def test_magnitude_bounded(self, mu4):
        rng = np.random.RandomState(6)
        T = rng.uniform(-50, 50, 200)
        vals, tail = mu4.mu_hat_batch(T, depth=25)
        assert (np.abs(vals) <= 1 + tail).all()

    def test_tail_bound_decreases_geometrically(self, mu4):
        tails = [mu4.tail_bound(d, 10.0) for d in (5, 10, 15, 20)]
        assert all(a > b for a, b in zip(tails, tails[1:]))
        assert tails[-1] < 1e-8 * tails[0]

    def test_adaptive_depth_reaches_tolerance(self, mu4):
        ev = mu4.mu_hat(7.25)
        assert ev.tail_bound < 1e-10

    def test_non_expansive_rejected(self):
        sysm = fs.make_system(1, [(0,), (Fraction(1, 2),)], [(0,), (1,)])
        with pytest.raises(ValueError):
            fs.SelfSimilarMeasure(sysm)

    def test_eiffel_value_finite(self, eiffel2):
        m = fs.SelfSimilarMeasure(eiffel2)
        ev = m.mu_hat((1.0, 2.0, 3.0))
        assert np.isfinite(abs(ev.value))


class TestClosedForm:
    def test_at_zero(self):
        assert fs.mu2_closed_form(0.0) == 1.0

    def test_at_one(self):
        assert abs(fs.mu2_closed_form(1.0)) < 1e-15

    def test_at_half(self):
        assert abs(fs.mu2_closed_form(0.5) - 2j / math.pi) < 1e-15

    def test_oracle_for_product(self, mu2):
        rng = np.random.RandomState(7)
        ts = rng.uniform(-10, 10, 100)
        vals, _ = mu2.mu_hat_batch(ts)
        assert np.abs(vals - fs.mu2_closed_form(ts)).max() <= 1e-8

    def test_mu4_cosine_product_oracle(self, mu4):
        # phase-extracted form: e^{i 2 pi t/3} prod_n cos(pi t / (2 4^n))
        for t in (0.3, 1.7, -2.25, 5.0):
            oracle = np.exp(2j * np.pi * t / 3) * np.prod(
                [math.cos(math.pi * t / (2 * 4 ** n)) for n in range(40)])
            assert abs(mu4.mu_hat(t, depth=40).value - oracle) <= 1e-12

    def test_mu3_cosine_product_oracle(self, mu3):
        # phase-extracted form: e^{i pi t} prod_{n>=1} cos(2 pi t / 3^n)
        for t in (0.4, 1.5, -2.2):
            oracle = np.exp(1j * np.pi * t) * np.prod(
                [math.cos(2 * math.pi * t / 3 ** n) for n in range(1, 60)])
            assert abs(mu3.mu_hat(t, depth=60).value - oracle) <= 1e-12


class TestMoments:
    def test_mass_is_one(self, scale4):
        assert fs.moments(scale4, 0)[(0,)] == 1

    def test_mu4_first_moment(self, scale4):
        assert fs.moments(scale4, 1)[(1,)] == Fraction(1, 3)

    def test_mu2_matches_lebesgue(self, scale2):
        table = fs.moments(scale2, 4)
        for k in range(1, 5):
            assert table[(k,)] == Fraction(1, k + 1)

    def test_eiffel_cross_moment(self, eiffel2):
        table = fs.moments(eiffel2, 2)
        assert table[(1, 0, 0)] == Fraction(1, 4)
        assert table[(2, 0, 0)] == Fraction(1, 8)

    def test_against_quadrature(self, scale4, mu4):
        table = fs.moments(scale4, 3)
        for k in (1, 2, 3):
            approx = mu4.integrate(lambda x, k=k: x ** k, depth=12)
            assert abs(approx - float(table[(k,)])) <= 1e-3


class TestQuadrature:
    def test_constant(self, mu4):
        assert mu4.integrate(lambda x: np.ones_like(x), depth=8) == 1.0

    def test_exponential_matches_transform(self, mu4):
        approx = mu4.integrate(lambda x: np.exp(-2j * np.pi * x), depth=12)
        expected = np.conj(mu4.mu_hat(1.0, depth=40).value)
        assert abs(approx - expected) <= 1e-3

    def test_atom_count(self, mu4):
        assert mu4.atoms(5).shape == (32, 1)


class TestSupportDiameter:
    def test_mu4(self, mu4):
        assert abs(mu4.support_diameter() - 2 / 3) < 1e-12

    def test_mu2_lebesgue(self, mu2):
        assert abs(mu2.support_diameter() - 1.0) < 1e-12

    def test_eiffel_from_hull(self, eiffel2):
        m = fs.SelfSimilarMeasure(eiffel2)
        assert abs(m.support_diameter() - math.sqrt(2)) < 1e-12


class TestZeroSets:
    def test_mu4_examples(self):
        assert fs.zero_set_member("mu4", 12)          # 12 = 4 * 3
        assert not fs.zero_set_member("mu4", 2)
        assert fs.zero_set_member("mu4", 1)
        assert not fs.zero_set_member("mu4", 0)

    def test_mu3_examples(self):
        assert fs.zero_set_member("mu3", Fraction(3, 4))
        assert fs.zero_set_member("mu3", Fraction(9, 4))
        assert not fs.zero_set_member("mu3", Fraction(3, 2))

    def test_mu2_is_nonzero_integers(self):
        for n in range(-5, 6):
            assert fs.zero_set_member("mu2", n) == (n != 0)

    def test_unknown_tag(self):
        with pytest.raises(KeyError):
            fs.zero_set_member("mu7", 1)

    def test_general_odd_scale_predicate(self):
        # two-digit measure at scale 5: the transform vanishes exactly on the
        # predicate set {5^n (2Z+1) / (2b)}
        sysm = fs.two_digit_system(5, Fraction(1, 2))
        m = fs.SelfSimilarMeasure(sysm)
        pred = fs.ZeroSetPredicate(5, Fraction(1, 2))
        for t in (1, 3, 5, 15, 25):
            assert pred.member(t)
            assert abs(m.mu_hat(float(t), depth=50).value) <= 1e-10
        for t in (2, 4, 10):
            assert not pred.member(t)
            assert abs(m.mu_hat(float(t), depth=50).value) >= 1e-4

    def test_agreement_with_product(self, mu4):
        rng = np.random.RandomState(8)
        hits = 0
        for _ in range(50):
            t = Fraction(int(rng.randint(-50, 51)), int(rng.randint(1, 5)))
            if abs(t) > 50 or t == 0:
                continue
            v = abs(mu4.mu_hat(float(t), depth=40).value)
            if fs.zero_set_member("mu4", t):
                hits += 1
                assert v <= 1e-8
            else:
                assert v >= 1e-4
        assert hits > 0


class TestConvolution:
    def test_value_at_zero(self, mu34):
        assert mu34.mu_hat(0.0).value == 1.0

    def test_vanishes_on_mu4_zero_set(self, mu34):
        for t in (1.0, 3.0, 4.0, 12.0):
            assert abs(mu34.mu_hat(t).value) <= 1e-8

    def test_pointwise_product(self, mu3, mu4, mu34):
        t = 1 / 6
        a = mu34.mu_hat(t, depth=40)
        b = mu3.mu_hat(t, depth=40).value * mu4.mu_hat(t, depth=40).value
        assert abs(a.value - b) < 1e-14

    def test_tail_bounds_add(self, mu3, mu4, mu34):
        t = 2.0
        d = 20
        assert abs(mu34.mu_hat(t, d).tail_bound
                   - (mu3.mu_hat(t, d).tail_bound + mu4.mu_hat(t, d).tail_bound)) < 1e-15

    def test_dimension_mismatch(self, mu4, eiffel2):
        with pytest.raises(ValueError):
            fs.convolve(mu4, fs.SelfSimilarMeasure(eiffel2))

    def test_support_diameter_adds(self, mu3, mu4, mu34):
        assert abs(mu34.support_diameter()
                   - (mu3.support_diameter() + mu4.support_diameter())) < 1e-12


class TestGrowthBound:
    def test_zero_imaginary_part(self, mu4):
        row = fs.growth_bound_check(mu4, [0.0])[0]
        assert row.norm_sq == 1.0 and row.ok

    def test_mu4_small_s(self, mu4):
        row = fs.growth_bound_check(mu4, [0.1])[0]
        assert row.ok
        assert row.bound == pytest.approx(math.exp(0.4 * math.pi * (2 / 3)))

    def test_mu2_closed_form(self, mu2):
        row = fs.growth_bound_check(mu2, [0.5], depth=14)[0]
        exact = (1 - math.exp(-2 * math.pi)) / (2 * math.pi)
        assert abs(row.norm_sq - exact) < 2e-4
        assert row.norm_sq <= math.exp(2 * math.pi)

    def test_vector_argument(self, eiffel2):
        m = fs.SelfSimilarMeasure(eiffel2)
        row = fs.growth_bound_check(m, [(0.1, -0.2, 0.05)], depth=6)[0]
        assert row.ok


class TestTransformProfile:
    def test_accepts_pq_strings(self, mu4):
        rows = fs.transform_profile(mu4, ["0", "1/2", "1"])
        assert rows[0][1] == 1.0                       # re at t=0
        assert abs(rows[2][3]) <= 1e-8                 # |mu_hat(1)|

    def test_csv_shape(self, mu4):
        buf = io.StringIO()
        fs.write_transform_csv(mu4, [0.0, 0.25], buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "t1,re,im,abs,tail_bound"
        assert len(lines) == 3
