"""Exact polynomial layer: ring axioms, theta contraction, rational solves."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from packbound.polyalg import (
    Coefficient,
    ExactPolynomial,
    Inconsistent,
    NotInvariant,
    RationalMatrix,
    Singular,
    ThetaPolynomial,
    contract_theta,
    expand_theta,
    is_b3_invariant,
    poly_arith,
    solve_exact,
    theta_monomials_upto,
)

# -- independent oracle: dict-based brute force multiplication ---------------


def brute_mul(p: dict, q: dict) -> dict:
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, Fraction(0)) + c1 * c2
    return {m: c for m, c in out.items() if c != 0}


def to_dict(p: ExactPolynomial) -> dict:
    return {m: c.rational_value() for m, c in p.items()}


def from_dict(d) -> ExactPolynomial:
    return ExactPolynomial(
        {m: Coefficient.from_rational(c) for m, c in d.items()}
    )


rationals = st.fractions(
    min_value=-4, max_value=4, max_denominator=6
).filter(lambda q: q != 0)

monomials = st.tuples(
    st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)
)

polys = st.dictionaries(monomials, rationals, min_size=0, max_size=5).map(
    from_dict
)


class TestRingAxioms:
    @settings(max_examples=60, deadline=None)
    @given(polys, polys)
    def test_commutativity(self, p, q):
        assert p * q == q * p
        assert p + q == q + p

    @settings(max_examples=40, deadline=None)
    @given(polys, polys, polys)
    def test_associativity_distributivity(self, p, q, r):
        assert (p * q) * r == p * (q * r)
        assert p * (q + r) == p * q + p * r

    @settings(max_examples=40, deadline=None)
    @given(polys, polys)
    def test_mul_matches_brute_force(self, p, q):
        assert to_dict(p * q) == brute_mul(to_dict(p), to_dict(q))

    @settings(max_examples=30, deadline=None)
    @given(polys)
    def test_additive_identity(self, p):
        assert poly_arith(p, ExactPolynomial.zero(), "add") == p


def test_monomial_product():
    x1 = ExactPolynomial.variable(0)
    assert poly_arith(x1, x1, "mul") == ExactPolynomial.monomial((2, 0, 0))


def test_square_of_linear_form():
    s = (
        ExactPolynomial.variable(0)
        + ExactPolynomial.variable(1)
        + ExactPolynomial.variable(2)
    )
    expected = brute_mul(
        {(1, 0, 0): Fraction(1), (0, 1, 0): Fraction(1), (0, 0, 1): Fraction(1)},
        {(1, 0, 0): Fraction(1), (0, 1, 0): Fraction(1), (0, 0, 1): Fraction(1)},
    )
    assert to_dict(s * s) == expected


def test_zero_polynomial_degree():
    assert ExactPolynomial.zero().degree() == -1
    assert ThetaPolynomial.zero().weighted_degree() == -1


class TestCoefficient:
    def test_pi_exponent_bookkeeping(self):
        a = Coefficient.pi_power(-1, Fraction(3, 2))
        b = Coefficient.pi_power(1, Fraction(2, 3))
        assert (a * b) == Coefficient.from_rational(1)
        assert (a * b).is_rational()

    def test_no_zero_terms_stored(self):
        c = Coefficient({2: Fraction(1)}) + Coefficient({2: Fraction(-1)})
        assert c.is_zero()
        assert dict(c.items()) == {}

    def test_text_roundtrip(self):
        c = Coefficient({-2: Fraction(5, 7), 0: Fraction(-3), 4: Fraction(1, 2)})
        assert Coefficient.parse(c.text()) == c


class TestThetaExpansion:
    def test_theta1(self):
        t1 = ThetaPolynomial.theta(0)
        assert to_dict(expand_theta(t1)) == {
            (2, 0, 0): Fraction(1),
            (0, 2, 0): Fraction(1),
            (0, 0, 2): Fraction(1),
        }

    def test_constant(self):
        c = ThetaPolynomial.constant(Fraction(7, 3))
        assert expand_theta(c) == ExactPolynomial.constant(Fraction(7, 3))

    def test_elementary_symmetric_identity(self):
        # t1^3 - 3 t1 t2 + 2 t3 = 6 (x1 x2 x3)^2, by direct expansion
        combo = ThetaPolynomial(
            {(3, 0, 0): 1, (1, 1, 0): -3, (0, 0, 1): 2}
        )
        # oracle: brute-force power of the quadratic power sums
        p2 = {(2, 0, 0): Fraction(1), (0, 2, 0): Fraction(1), (0, 0, 2): Fraction(1)}
        p4 = {(4, 0, 0): Fraction(1), (0, 4, 0): Fraction(1), (0, 0, 4): Fraction(1)}
        p6 = {(6, 0, 0): Fraction(1), (0, 6, 0): Fraction(1), (0, 0, 6): Fraction(1)}
        cube = brute_mul(brute_mul(p2, p2), p2)
        t1t2 = brute_mul(p2, p4)
        expected = {}
        for d, w in ((cube, 1), (t1t2, -3), (p6, 2)):
            for m, c in d.items():
                expected[m] = expected.get(m, Fraction(0)) + w * c
        expected = {m: c for m, c in expected.items() if c != 0}
        assert to_dict(expand_theta(combo)) == expected
        assert expected == {(2, 2, 2): Fraction(6)}

    def test_contract_basic(self):
        t1x = expand_theta(ThetaPolynomial.theta(0))
        assert contract_theta(t1x) == ThetaPolynomial.theta(0)

    def test_contract_sextic(self):
        p = ExactPolynomial.monomial((2, 2, 2), 6)
        assert contract_theta(p) == ThetaPolynomial(
            {(3, 0, 0): 1, (1, 1, 0): -3, (0, 0, 1): 2}
        )

    def test_contract_rejects_odd(self):
        with pytest.raises(NotInvariant):
            contract_theta(ExactPolynomial.variable(0))

    def test_contract_rejects_noninvariant_even(self):
        with pytest.raises(NotInvariant):
            contract_theta(ExactPolynomial.monomial((2, 0, 0)))

    def test_roundtrip_high_degree(self):
        rng = random.Random(7)
        for _ in range(3):
            terms = {}
            for m in theta_monomials_upto(26):
                if rng.random() < 0.3:
                    terms[m] = Coefficient.from_rational(
                        Fraction(rng.randint(-9, 9), rng.randint(1, 5))
                    )
            tp = ThetaPolynomial(terms)
            assert contract_theta(expand_theta(tp)) == tp

    def test_roundtrip_with_pi_coefficients(self):
        tp = ThetaPolynomial(
            {
                (1, 0, 0): Coefficient.pi_power(-1, Fraction(3, 2)),
                (0, 1, 0): Coefficient({0: Fraction(1), 2: Fraction(-2, 5)}),
            }
        )
        assert contract_theta(expand_theta(tp)) == tp


class TestGroupAction:
    def test_invariance_check(self):
        assert is_b3_invariant(expand_theta(ThetaPolynomial.theta(1)))
        assert not is_b3_invariant(ExactPolynomial.variable(1))

    def test_signed_permutation_action(self):
        # reflection x1 -> -x1
        g = ((-1, 0, 0), (0, 1, 0), (0, 0, 1))
        p = ExactPolynomial.monomial((3, 1, 0), 2)
        q = p.apply_group_element(g)
        assert to_dict(q) == {(3, 1, 0): Fraction(-2)}


class TestRationalMatrix:
    def test_identity_solve(self):
        a = RationalMatrix.identity(4)
        b = [Fraction(i, 3) for i in range(4)]
        assert solve_exact(a, b) == b

    def test_diagonal_solve(self):
        a = RationalMatrix([[2, 0], [0, 4]])
        assert solve_exact(a, [1, 1]) == [Fraction(1, 2), Fraction(1, 4)]

    def test_random_multiply_back(self):
        rng = random.Random(11)
        for _ in range(5):
            a = RationalMatrix(
                [
                    [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(6)]
                    for _ in range(6)
                ]
            )
            b = [Fraction(rng.randint(-5, 5)) for _ in range(6)]
            try:
                x = solve_exact(a, b)
            except Singular:
                continue
            assert a.matvec(x) == b

    def test_singular(self):
        with pytest.raises(Singular):
            solve_exact(RationalMatrix([[1, 1], [2, 2]]), [1, 2])

    def test_inconsistent_overdetermined(self):
        a = RationalMatrix([[1, 0], [0, 1], [1, 1]])
        with pytest.raises(Inconsistent):
            solve_exact(a, [1, 1, 3])
        # consistent overdetermined works
        assert solve_exact(a, [1, 1, 2]) == [Fraction(1), Fraction(1)]

    def test_inverse_inf_norm(self):
        a = RationalMatrix([[2, 0], [0, -4]])
        assert a.inverse_inf_norm() == Fraction(1, 2)

    def test_inverse(self):
        a = RationalMatrix([[1, 2], [3, 5]])
        inv = a.inverse()
        assert a.matmul(inv) == RationalMatrix.identity(2)


def test_text_serialization_roundtrip():
    p = ExactPolynomial(
        {
            (2, 0, 0): Coefficient({0: Fraction(1, 3)}),
            (0, 1, 1): Coefficient({-1: Fraction(2), 1: Fraction(-5, 4)}),
        }
    )
    assert ExactPolynomial.parse(p.text()) == p
    tp = ThetaPolynomial({(1, 2, 0): Coefficient.pi_power(-3, Fraction(1, 7))})
    assert ThetaPolynomial.parse(tp.text()) == tp


def test_canonical_order_graded_lex():
    p = from_dict({(0, 0, 2): 1, (1, 1, 0): 2, (3, 0, 0): 3, (0, 0, 1): 4})
    order = [m for m, _ in p.canonical_terms()]
    assert order == [(3, 0, 0), (1, 1, 0), (0, 0, 2), (0, 0, 1)]
