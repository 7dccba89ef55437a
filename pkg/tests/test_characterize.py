import math

import numpy as np
import pytest
from scipy.stats import norm

from exptail.characterize import (CONSISTENT, VIOLATED,
                                  check_absolutely_monotonic,
                                  check_octant_monotonic, decomposition_check,
                                  mixed_forward_difference)
from exptail.errors import ParameterError

BOX2 = [(0.0, 1.0), (0.0, 1.0)]


def exp_linear(w):
    w = np.asarray(w, dtype=float)

    def f(x):
        return np.exp(np.atleast_2d(x) @ w)

    return f


class TestMixedForwardDifference:
    def test_matches_analytic_derivative(self):
        f = exp_linear([1.0, 1.0])
        pts = np.array([[0.2, 0.4]])
        got = mixed_forward_difference(f, pts, np.array([1, 1]),
                                       np.array([1e-4, 1e-4]))
        want = math.exp(0.6)        # every mixed partial of e^(x+y)
        assert got[0] == pytest.approx(want, rel=1e-3)

    def test_sign_of_negative_direction(self):
        f = exp_linear([1.0, -1.0])
        got = mixed_forward_difference(f, np.array([[0.0, 0.0]]),
                                       np.array([0, 1]),
                                       np.array([1e-4, 1e-4]))
        assert got[0] < 0.0


class TestAbsolutelyMonotonic:
    def test_exp_sum_consistent(self):
        v = check_absolutely_monotonic(exp_linear([1.0, 1.0]), BOX2, k_max=3)
        assert v.status == CONSISTENT

    def test_exp_difference_violated(self):
        v = check_absolutely_monotonic(exp_linear([1.0, -1.0]), BOX2, k_max=3)
        assert v.status == VIOLATED
        assert v.witness["k"].tolist() == [0, 1]

    def test_constant_one_consistent(self):
        one = lambda x: np.ones(np.atleast_2d(x).shape[0])
        assert check_absolutely_monotonic(one, BOX2, k_max=3).status == CONSISTENT

    def test_negative_function_violates_order_zero(self):
        neg = lambda x: -np.ones(np.atleast_2d(x).shape[0])
        v = check_absolutely_monotonic(neg, BOX2, k_max=2)
        assert v.status == VIOLATED
        assert v.witness["k"].tolist() == [0, 0]


class TestOctantMonotonic:
    def test_mixed_exponential_in_its_octant(self):
        v = check_octant_monotonic(exp_linear([1.0, -1.0]), [1, -1], BOX2,
                                   k_max=3)
        assert v.status == CONSISTENT

    def test_all_ones_reduces_to_absolute(self):
        v = check_octant_monotonic(exp_linear([1.0, 1.0]), [1, 1], BOX2,
                                   k_max=3)
        assert v.status == CONSISTENT

    def test_wrong_octant_violated_first_axis(self):
        v = check_octant_monotonic(exp_linear([1.0, 1.0]), [-1, -1], BOX2,
                                   k_max=3)
        assert v.status == VIOLATED
        assert v.witness["k"].tolist() == [1, 0]

    def test_flip_equivariance_exact(self):
        # K(eps)-consistency of f == K(1)-consistency of f(eps (x) .)
        f = exp_linear([0.7, -1.3])
        eps = np.array([1.0, -1.0])
        v1 = check_octant_monotonic(f, eps, BOX2, k_max=3)
        g = lambda x: f(np.atleast_2d(x) * eps)
        v2 = check_absolutely_monotonic(g, BOX2, k_max=3)
        assert v1.status == v2.status == CONSISTENT

    def test_deterministic(self):
        f = exp_linear([1.0, -1.0])
        a = check_octant_monotonic(f, [1, -1], BOX2, k_max=3)
        b = check_octant_monotonic(f, [1, -1], BOX2, k_max=3)
        assert a.status == b.status and a.grid_points == b.grid_points


class TestDecomposition:
    BOX1 = [(-1.0, 1.0)]

    def target_cosh(self, x):
        return np.cosh(np.atleast_2d(x)[:, 0])

    def parts_cosh(self):
        return [
            (np.array([1.0]), lambda x: 0.5 * np.exp(np.atleast_2d(x)[:, 0])),
            (np.array([-1.0]), lambda x: 0.5 * np.exp(-np.atleast_2d(x)[:, 0])),
        ]

    def test_cosh_decomposition_consistent(self):
        v = decomposition_check(self.parts_cosh(), self.target_cosh, self.BOX1,
                                k_max=3)
        assert v.status == CONSISTENT
        assert v.details["mass_at_zero"] == pytest.approx(1.0, abs=1e-12)

    def test_missing_part_violates(self):
        v = decomposition_check(self.parts_cosh()[:1], self.target_cosh,
                                self.BOX1, k_max=3)
        assert v.status == VIOLATED

    def test_duplicate_part_rejected(self):
        parts = self.parts_cosh() + [self.parts_cosh()[0]]
        with pytest.raises(ParameterError):
            decomposition_check(parts, self.target_cosh, self.BOX1)

    def test_gaussian_halfline_mc_quadrature(self):
        # exp(lam^2/2) = F_+ + F_- with F_± empirical half-line averages of
        # e^(lam x); each part is octant-monotonic exactly (positive
        # combination of pure exponentials supported on one side)
        rng = np.random.default_rng(0)
        draws = rng.standard_normal(400_000)
        pos, neg = draws[draws >= 0], draws[draws < 0]
        n = draws.size

        def part(points, side):
            def f(x):
                lam = np.atleast_2d(x)[:, 0]
                return np.exp(lam[:, None] * side[None, :]).sum(axis=1) / n
            return f

        parts = [(np.array([1.0]), part(pos, pos)),
                 (np.array([-1.0]), part(neg, neg))]
        target = lambda x: np.exp(0.5 * np.atleast_2d(x)[:, 0] ** 2)
        box = [(-1.0, 1.0)]
        # MC tolerance: |mean e^(lam x) - E| at lam <= 1 is a few 1e-3
        v = decomposition_check(parts, target, box, k_max=3, sum_tol=0.02,
                                origin_tol=1e-10)
        assert v.status == CONSISTENT
        # erf oracle for each half-line mass: F_+(lam) = e^(lam^2/2) Phi(lam)
        lam = 0.7
        want = math.exp(lam**2 / 2) * norm.cdf(lam)
        got = parts[0][1](np.array([[lam]]))[0]
        assert got == pytest.approx(want, abs=0.01)
