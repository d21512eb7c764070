import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemoflow import specfun
from chemoflow.specfun import (
    DomainError,
    EvalPolicy,
    NonConvergence,
    beta_fn,
    mainardi,
    mainardi_moment,
    mittag_leffler,
    mittag_leffler_array,
    wright,
)

from oracles import mainardi_ref, mittag_leffler_ref, wright_ref

E = math.e
# frozen from the mpmath oracles (tests/oracles.py)
M_HALF_AT_1 = 0.4393912894677224       # exp(-1/4)/sqrt(pi)
ML_HALF_AT_M1 = 0.42758357615580700    # e * erfc(1)
INV_GAMMA_HALF = 0.5641895835477563    # 1/Gamma(1/2)


class TestWright:
    def test_exponential_collapse(self):
        assert wright(0.0, 1.0, 1.0) == pytest.approx(E, rel=1e-14)

    def test_single_term(self):
        assert wright(1.0, 1.0, 0.0) == 1.0

    def test_mainardi_point(self):
        assert wright(-0.5, 0.5, -1.0) == pytest.approx(M_HALF_AT_1, abs=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            wright(-1.0, 1.0, 0.5)

    def test_nonconvergence_budget(self):
        with pytest.raises(NonConvergence):
            wright(0.0, 1.0, 60.0, EvalPolicy(series_tol=1e-14, max_terms=16))

    @pytest.mark.parametrize("kappa,lam,z", [(0.4, 0.7, 1.3), (1.5, 2.0, -2.0), (-0.3, 0.9, -4.0)])
    def test_against_reference(self, kappa, lam, z):
        assert wright(kappa, lam, z) == pytest.approx(float(wright_ref(kappa, lam, z)), rel=1e-11)


class TestMainardi:
    def test_at_zero(self):
        assert mainardi(0.5, 0.0) == pytest.approx(INV_GAMMA_HALF, rel=1e-14)

    def test_half_closed_form(self):
        z = np.linspace(0.0, 5.0, 41)
        closed = np.exp(-z * z / 4.0) / math.sqrt(math.pi)
        ours = np.array([mainardi(0.5, zi) for zi in z])
        assert np.max(np.abs(ours - closed)) < 1e-8

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
    def test_nonnegative_on_grid(self, alpha):
        for z in np.linspace(0.0, 20.0, 81):
            assert mainardi(alpha, float(z)) >= 0.0

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
    @pytest.mark.parametrize("gamma_exp", [0.0, 0.5, 1.0])
    def test_moment_identity(self, alpha, gamma_exp):
        expected = math.gamma(1 + gamma_exp) / math.gamma(1 + alpha * gamma_exp)
        assert mainardi_moment(alpha, gamma_exp) == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("alpha,z", [(0.3, 2.0), (0.7, 1.5), (0.25, 6.0)])
    def test_against_reference(self, alpha, z):
        assert mainardi(alpha, z) == pytest.approx(float(mainardi_ref(alpha, z)), rel=1e-9)


class TestMittagLeffler:
    def test_alpha_one_is_exp(self):
        for z in np.linspace(-10.0, 2.0, 49):
            assert abs(mittag_leffler(1.0, 1.0, float(z)) - math.exp(z)) < 1e-12

    def test_at_zero(self):
        assert mittag_leffler(0.5, 1.0, 0.0) == pytest.approx(1.0, rel=1e-14)

    def test_half_erfc_point(self):
        assert mittag_leffler(0.5, 1.0, -1.0) == pytest.approx(ML_HALF_AT_M1, abs=1e-10)

    def test_half_erfc_deep(self):
        # exp(x^2) erfc(x) across both branches of the evaluator
        from scipy.special import erfcx
        for x in [0.5, 2.0, 5.0, 10.0, 40.0]:
            ours = mittag_leffler(0.5, 1.0, -x)
            assert ours == pytest.approx(float(erfcx(x)), rel=1e-7)

    @pytest.mark.parametrize("alpha", [0.25, 0.4, 0.6, 0.8, 0.9])
    def test_monotone_positive(self, alpha):
        x = np.linspace(0.0, 50.0, 201)
        vals = mittag_leffler_array(alpha, 1.0, -x)
        assert (vals > 0.0).all()
        assert (np.diff(vals) < 0.0).all()

    @pytest.mark.parametrize("alpha,beta", [(0.5, 0.5), (0.7, 0.7), (0.3, 1.0)])
    def test_branch_agreement_at_switch(self, alpha, beta):
        # series vs asymptotic/integral cross-validation surrounding Z_SWITCH
        for z in [-4.9, -5.1, -8.0]:
            ref = float(mittag_leffler_ref(alpha, beta, z))
            assert mittag_leffler(alpha, beta, z) == pytest.approx(ref, rel=1e-7)

    def test_range_for_paper_betas(self):
        for alpha in (0.4, 0.6):
            for beta in (1.0, alpha):
                vals = mittag_leffler_array(alpha, beta, -np.linspace(0.0, 1e4, 64))
                assert (vals > 0.0).all()
                assert (vals <= 1.0 / math.gamma(beta) + 1e-12).all()

    def test_beta_domain(self):
        with pytest.raises(DomainError):
            mittag_leffler(0.5, 0.0, -1.0)


class TestBeta:
    def test_values(self):
        assert beta_fn(1.0, 1.0) == pytest.approx(1.0, rel=1e-14)
        assert beta_fn(0.5, 0.5) == pytest.approx(math.pi, rel=1e-13)
        assert beta_fn(2.0, 3.0) == pytest.approx(1.0 / 12.0, rel=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            beta_fn(-0.5, 1.0)
        with pytest.raises(DomainError):
            beta_fn(1.0, 0.0)

    @given(st.floats(0.05, 20.0), st.floats(0.05, 20.0))
    @settings(max_examples=80, deadline=None)
    def test_symmetry_and_recurrence(self, a, b):
        assert beta_fn(a, b) == pytest.approx(beta_fn(b, a), rel=1e-12)
        # B(a+1, b) = B(a, b) * a / (a + b)
        assert beta_fn(a + 1.0, b) == pytest.approx(beta_fn(a, b) * a / (a + b), rel=1e-11)


def test_policy_validation():
    with pytest.raises(DomainError):
        EvalPolicy(series_tol=0.0)
    with pytest.raises(DomainError):
        EvalPolicy(max_terms=4)
    with pytest.raises(DomainError):
        EvalPolicy(quad_points=8)


def test_subordination_identity():
    # int_0^inf M_a(s) exp(-s x) ds = E_a(-x): ties the Mainardi kernel to
    # the Mittag-Leffler operator definition through an independent route.
    from scipy.integrate import quad
    for alpha, x in [(0.5, 1.0), (0.7, 2.0), (0.4, 0.5)]:
        lhs, _ = quad(lambda s: mainardi(alpha, s) * math.exp(-s * x), 0.0, 40.0, limit=200)
        assert lhs == pytest.approx(mittag_leffler(alpha, 1.0, -x), abs=5e-8)
