import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemoflow.fracops import (
    FracHistory,
    L1Weights,
    ShapeMismatch,
    caputo_quadrature_oracle,
    implicit_l1_step,
    l1_caputo,
)
from chemoflow.specfun import mittag_leffler


def make_history(fn, t_end, dt, shape=()):
    n = round(t_end / dt)
    hist = FracHistory(np.full(shape, fn(0.0)), 0.0, dt)
    for k in range(1, n + 1):
        hist.append(np.full(shape, fn(k * dt)))
    return hist


class TestWeights:
    @given(st.floats(0.05, 0.95))
    @settings(max_examples=40, deadline=None)
    def test_identities(self, alpha):
        k = 50
        w = L1Weights.build(alpha, 0.01, k)
        assert w.b[0] == 1.0
        assert (np.diff(w.b) < 0.0).all()
        assert (w.b > 0.0).all()
        assert np.sum(w.b) == pytest.approx(k ** (1.0 - alpha), rel=1e-12)


class TestL1Caputo:
    def test_constant_history(self):
        hist = make_history(lambda t: 3.0, 1.0, 1.0 / 32, shape=(4, 5))
        assert np.max(np.abs(l1_caputo(hist, 0.5))) < 1e-13

    def test_linear_exact(self):
        # L1 is exact (to round-off) for histories linear in t
        hist = make_history(lambda t: t, 1.0, 1.0 / 64)
        expected = 1.0 / math.gamma(1.5)  # = 1.1283791670955126
        assert l1_caputo(hist, 0.5) == pytest.approx(expected, rel=1e-12)
        assert l1_caputo(hist, 0.5) == pytest.approx(
            caputo_quadrature_oracle(lambda t: t, 0.5, 1.0), rel=1e-6
        )

    def test_quadratic_accuracy(self):
        hist = make_history(lambda t: t * t, 1.0, 1.0 / 64)
        expected = 2.0 / math.gamma(2.5)  # = 1.5045055561273501
        assert l1_caputo(hist, 0.5) == pytest.approx(expected, abs=5e-3)

    def test_order_two_minus_alpha(self):
        alpha = 0.5
        errs = []
        for nt in (32, 64, 128):
            hist = make_history(lambda t: t * t, 1.0, 1.0 / nt)
            errs.append(abs(l1_caputo(hist, alpha) - 2.0 / math.gamma(2.5)))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(rates - (2.0 - alpha)) < 0.1)

    def test_shape_mismatch(self):
        hist = FracHistory(np.zeros((3, 3)), 0.0, 0.1)
        with pytest.raises(ShapeMismatch):
            hist.append(np.zeros((3, 4)))


class TestOracle:
    def test_constant(self):
        assert caputo_quadrature_oracle(lambda t: 7.0, 0.4, 1.5) == pytest.approx(0.0, abs=1e-8)

    def test_linear_closed_form(self):
        # Gamma(2)/Gamma(2-a) * t^(1-a) at a=0.3, t=2
        expected = 2.0 ** 0.7 / math.gamma(1.7)  # = 1.7878445348804704
        assert caputo_quadrature_oracle(lambda t: t, 0.3, 2.0) == pytest.approx(expected, rel=1e-6)

    def test_sine_cross_check(self):
        # frozen from mpmath quadrature of int_0^1 (1-s)^(-1/2) cos(s) ds / Gamma(1/2)
        expected = 0.8460567867241529
        got = caputo_quadrature_oracle(lambda t: math.sin(t), 0.5, 1.0)
        assert got == pytest.approx(expected, rel=1e-6)

    def test_power_family(self):
        for alpha, p in [(0.25, 1.5), (0.6, 2.0), (0.8, 3.0)]:
            t = 1.3
            expected = math.gamma(p + 1.0) / math.gamma(p + 1.0 - alpha) * t ** (p - alpha)
            got = caputo_quadrature_oracle(lambda s: s ** p, alpha, t)
            assert got == pytest.approx(expected, rel=1e-5)


class TestImplicitStep:
    def test_zero_operator_constant_history(self):
        hist = FracHistory(np.array([2.5]), 0.0, 0.1)
        y = implicit_l1_step(hist, 0.5, np.array([0.0]), lambda rhs: rhs)
        assert y == pytest.approx(np.array([2.5]))

    @pytest.mark.parametrize("alpha", [0.4, 0.6, 0.7])
    def test_ml_relaxation(self, alpha):
        # D^a y = -y, y(0)=1 has solution E_a(-t^a). The uniform grid loses
        # accuracy inside the initial layer where the exact solution has a
        # t^a singularity; for small alpha that layer error is measured, not
        # corrected, so the 0.01 bound is asserted beyond t = 0.1 there.
        dt = 1.0 / 256
        lam = 1.0
        mu = math.gamma(2.0 - alpha) * dt ** alpha
        hist = FracHistory(np.array([1.0]), 0.0, dt)
        solve = lambda rhs: rhs / (1.0 + mu * lam)
        worst_late = 0.0
        worst_all = 0.0
        prev = 1.0
        for k in range(1, round(2.0 / dt) + 1):
            y = float(implicit_l1_step(hist, alpha, np.array([0.0]), solve)[0])
            assert 0.0 < y < prev
            prev = y
            exact = mittag_leffler(alpha, 1.0, -((k * dt) ** alpha))
            worst_all = max(worst_all, abs(y - exact))
            if k * dt >= 0.1:
                worst_late = max(worst_late, abs(y - exact))
        assert worst_late < 0.01
        if alpha >= 0.6:
            assert worst_all < 0.01
        else:
            assert worst_all < 0.03

    def test_alpha_near_one_matches_backward_euler(self):
        alpha = 0.999
        dt = 1.0 / 128
        lam = 2.0
        mu = math.gamma(2.0 - alpha) * dt ** alpha
        hist = FracHistory(np.array([1.0]), 0.0, dt)
        solve = lambda rhs: rhs / (1.0 + mu * lam)
        y_be = 1.0
        worst = 0.0
        for _ in range(round(1.0 / dt)):
            y = float(implicit_l1_step(hist, alpha, np.array([0.0]), solve)[0])
            y_be = y_be / (1.0 + dt * lam)
            worst = max(worst, abs(y - y_be))
        assert worst < 1e-2
