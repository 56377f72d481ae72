"""Fourier operator: harmonic decomposition, Laguerre recurrence, involution,
and a numerical quadrature cross-check of the transform."""

import math
import random
from fractions import Fraction

import mpmath
import pytest

from packbound import fourier
from packbound.polyalg import (
    Coefficient,
    ExactPolynomial,
    NotInvariant,
    ThetaPolynomial,
    contract_theta,
    theta_monomials_upto,
)


def theta(i):
    return ThetaPolynomial.theta(i)


class TestLaplacian:
    def test_norm_squared(self):
        assert fourier.laplacian(theta(0).expand()) == ExactPolynomial.constant(6)

    def test_xyz_harmonic(self):
        p = ExactPolynomial.monomial((1, 1, 1))
        assert fourier.laplacian(p).is_zero()

    def test_theta2_by_termwise_oracle(self):
        # term-by-term second derivatives of x^4 sum: 12 x^2 each
        got = fourier.laplacian(theta(1).expand())
        oracle = ExactPolynomial(
            {
                (2, 0, 0): Coefficient.from_rational(12),
                (0, 2, 0): Coefficient.from_rational(12),
                (0, 0, 2): Coefficient.from_rational(12),
            }
        )
        assert got == oracle


class TestHarmonicDecompose:
    def test_theta1(self):
        comps = fourier.harmonic_decompose(theta(0).expand())
        assert len(comps) == 1
        c = comps[0]
        assert (c.r, c.k) == (1, 0)
        assert c.h == ExactPolynomial.one()

    def test_theta2(self):
        comps = {
            (c.r, c.k): c for c in fourier.harmonic_decompose(theta(1).expand())
        }
        assert set(comps) == {(0, 4), (2, 0)}
        assert comps[(2, 0)].h == ExactPolynomial.constant(Fraction(3, 5))
        h4 = comps[(0, 4)].h
        assert fourier.laplacian(h4).is_zero()
        expected = (theta(1) + ThetaPolynomial({(2, 0, 0): Fraction(-3, 5)})).expand()
        assert h4 == expected

    def test_degree_one_harmonic(self):
        x1 = ExactPolynomial.variable(0)
        comps = fourier.harmonic_decompose(x1)
        assert len(comps) == 1 and (comps[0].r, comps[0].k) == (0, 1)
        assert comps[0].h == x1

    def test_rejects_inhomogeneous(self):
        p = theta(0).expand() + ExactPolynomial.one()
        with pytest.raises(fourier.NotHomogeneous):
            fourier.harmonic_decompose(p)

    def test_reconstruction_property(self):
        rng = random.Random(5)
        norm2 = ThetaPolynomial.theta(0).expand()
        for _ in range(5):
            terms = {}
            for m in [(4, 0, 0), (2, 1, 0), (0, 2, 0), (1, 0, 1)]:
                terms[m] = Fraction(rng.randint(-5, 5))
            p = ThetaPolynomial(terms).expand()
            if p.is_zero():
                continue
            comps = fourier.harmonic_decompose(p)
            acc = ExactPolynomial.zero()
            for c in comps:
                acc = acc + (norm2 ** c.r) * c.h
            assert acc == p
            for c in comps:
                assert fourier.laplacian(c.h).is_zero()


def laguerre_closed_form(r, alpha, _binom=math.comb):
    """L_r^a(t) = sum_i (-1)^i binom(r+a, r-i) t^i / i!  (oracle)."""
    coeffs = []
    for i in range(r + 1):
        # generalized binomial (r+a choose r-i) with rational a
        top = Fraction(r) + alpha
        num = Fraction(1)
        for j in range(r - i):
            num *= top - j
        num /= math.factorial(r - i)
        coeffs.append((-1) ** i * num / math.factorial(i))
    return coeffs


class TestLaguerre:
    def test_degree_zero(self):
        assert fourier.laguerre(0, Fraction(7, 2)) == [Fraction(1)]

    def test_degree_one_half(self):
        assert fourier.laguerre(1, Fraction(1, 2)) == [Fraction(3, 2), Fraction(-1)]

    def test_degree_two_half(self):
        assert fourier.laguerre(2, Fraction(1, 2)) == [
            Fraction(15, 8),
            Fraction(-5, 2),
            Fraction(1, 2),
        ]

    @pytest.mark.parametrize("r", range(6))
    @pytest.mark.parametrize("alpha", [Fraction(1, 2), Fraction(5, 2), Fraction(9, 2)])
    def test_against_closed_form(self, r, alpha):
        assert fourier.laguerre(r, alpha) == laguerre_closed_form(r, alpha)


class TestFourierApply:
    def test_gaussian_self_dual(self):
        one = ExactPolynomial.one()
        assert fourier.fourier_apply(one) == one

    def test_theta1(self):
        got = contract_theta(fourier.fourier_apply(theta(0).expand()))
        expected = ThetaPolynomial(
            {
                (0, 0, 0): Coefficient.pi_power(-1, Fraction(3, 2)),
                (1, 0, 0): Coefficient.from_rational(-1),
            }
        )
        assert got == expected

    def test_degree4_eigenfunction(self):
        h = (theta(1) + ThetaPolynomial({(2, 0, 0): Fraction(-3, 5)})).expand()
        assert fourier.fourier_apply(h) == h

    def test_involution_random(self):
        rng = random.Random(3)
        for _ in range(6):
            terms = {
                m: Fraction(rng.randint(-9, 9), rng.randint(1, 4))
                for m in theta_monomials_upto(12)
                if rng.random() < 0.4
            }
            g = ThetaPolynomial(terms).expand()
            assert fourier.fourier_apply(fourier.fourier_apply(g)) == g

    def test_involution_degree_26(self):
        terms = {
            (13, 0, 0): Fraction(1),
            (1, 0, 4): Fraction(-2, 3),
            (0, 0, 0): Fraction(5),
        }
        g = ThetaPolynomial(terms).expand()
        assert g.degree() == 26
        assert fourier.fourier_apply(fourier.fourier_apply(g)) == g

    def test_linearity(self):
        g1 = theta(0).expand()
        g2 = theta(1).expand()
        a, b = Fraction(3, 7), Fraction(-2)
        lhs = fourier.fourier_apply(g1.scale(a) + g2.scale(b))
        rhs = fourier.fourier_apply(g1).scale(a) + fourier.fourier_apply(g2).scale(b)
        assert lhs == rhs

    def test_degree_preserved(self):
        g = (theta(2) * theta(0)).expand()
        assert fourier.fourier_apply(g).degree() == g.degree()

    def test_rejects_noninvariant(self):
        with pytest.raises(NotInvariant):
            fourier.fourier_apply(ExactPolynomial.variable(0))


# -- quadrature oracle -------------------------------------------------------


def gaussian_fourier_1d(a: int, x: float):
    """integral of u^a e^{-pi u^2} e^{-2 pi i u x} du via adaptive quadrature."""
    mpmath.mp.dps = 30

    def integrand(u):
        return u ** a * mpmath.exp(-mpmath.pi * u * u) * mpmath.expjpi(-2 * u * x)

    return mpmath.quad(integrand, [-mpmath.inf, 0, mpmath.inf])


def transform_by_quadrature(g: ExactPolynomial, x):
    """Separable 1D quadratures for the transform of g * Gaussian at x."""
    total = mpmath.mpf(0)
    cache = {}
    for m, c in g.items():
        term = mpmath.mpf(1)
        for axis in range(3):
            key = (m[axis], x[axis])
            if key not in cache:
                cache[key] = gaussian_fourier_1d(m[axis], x[axis])
            term *= cache[key]
        cf = mpmath.mpf(0)
        for e, q in c.items():
            cf += mpmath.mpf(q.numerator) / q.denominator * mpmath.pi ** e
        total += cf * term
    return total


def eval_poly_float(p: ExactPolynomial, x):
    out = mpmath.mpf(0)
    for m, c in p.items():
        cf = mpmath.mpf(0)
        for e, q in c.items():
            cf += mpmath.mpf(q.numerator) / q.denominator * mpmath.pi ** e
        out += cf * x[0] ** m[0] * x[1] ** m[1] * x[2] ** m[2]
    return out


@pytest.mark.slow
def test_quadrature_cross_check_theta1():
    g = theta(0).expand()
    fg = fourier.fourier_apply(g)
    rng = random.Random(17)
    for _ in range(10):
        x = tuple(rng.uniform(-1.2, 1.2) for _ in range(3))
        lhs = eval_poly_float(fg, x) * mpmath.exp(
            -mpmath.pi * sum(v * v for v in x)
        )
        rhs = transform_by_quadrature(g, x)
        assert abs(lhs - mpmath.re(rhs)) < 1e-6
        assert abs(mpmath.im(rhs)) < 1e-9


@pytest.mark.slow
def test_quadrature_cross_check_random():
    rng = random.Random(23)
    for _ in range(5):
        terms = {
            m: Fraction(rng.randint(-3, 3))
            for m in theta_monomials_upto(8)
            if rng.random() < 0.5
        }
        g = ThetaPolynomial(terms).expand()
        if g.is_zero():
            continue
        fg = fourier.fourier_apply(g)
        for _ in range(10):
            x = tuple(rng.uniform(-1.0, 1.0) for _ in range(3))
            lhs = eval_poly_float(fg, x) * mpmath.exp(
                -mpmath.pi * sum(v * v for v in x)
            )
            rhs = transform_by_quadrature(g, x)
            assert abs(lhs - mpmath.re(rhs)) < 1e-6
