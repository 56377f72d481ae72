"""Fourier transform of Gaussian-weighted invariant polynomials.

For g a B3-invariant polynomial, the transform of x -> g(x) e^{-pi |x|^2}
is u -> F[g](u) e^{-pi |u|^2}; this module computes the linear operator F
exactly.  The route is the classical harmonic decomposition: write each
homogeneous piece as a sum of |x|^{2r} h_k(x) with h_k harmonic of degree
k, and map each summand to

    (-1)^{k/2} * pi^{-r} * r! * L_r^{k + 1/2}(pi |u|^2) * h_k(u),

L being the generalized Laguerre polynomial (three variables fixed, so the
parameter is n/2 + k - 1 = k + 1/2).  Coefficients stay in Q[pi, pi^-1].

Only even harmonic degrees are admitted: invariant polynomials are even,
and odd k would introduce imaginary eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .polyalg import (
    Coefficient,
    ExactPolynomial,
    NotInvariant,
    RationalMatrix,
    ThetaPolynomial,
    contract_theta,
    is_b3_invariant,
    theta_monomial_x,
    theta_monomials_of_weighted_degree,
    x_monomials,
)


@dataclass(frozen=True)
class HarmonicComponent:
    r: int  # radial exponent: |x|^{2r} factor
    k: int  # harmonic degree
    h: ExactPolynomial  # harmonic polynomial of degree k


def laplacian(p: ExactPolynomial) -> ExactPolynomial:
    return (
        p.derivative(0).derivative(0)
        + p.derivative(1).derivative(1)
        + p.derivative(2).derivative(2)
    )


@lru_cache(maxsize=None)
def harmonic_basis(k: int) -> tuple[ExactPolynomial, ...]:
    """Basis of all harmonic polynomials of degree k (kernel of the Laplacian)."""
    monoms = x_monomials(k)
    if k < 2:
        return tuple(ExactPolynomial.monomial(m) for m in monoms)
    lower = x_monomials(k - 2)
    lower_index = {m: i for i, m in enumerate(lower)}
    rows = []
    for m in monoms:
        img = laplacian(ExactPolynomial.monomial(m))
        vec = [Fraction(0)] * len(lower)
        for mm, c in img.items():
            vec[lower_index[mm]] = c.rational_value()
        rows.append(vec)
    # kernel of the transpose system: nullspace via RREF
    mat = RationalMatrix(rows).transpose()
    red, pivots = mat.rref()
    free = [j for j in range(len(monoms)) if j not in pivots]
    basis = []
    for j in free:
        coeffs = {monoms[j]: Coefficient.one()}
        for r, c in enumerate(pivots):
            v = red.entries[r][j]
            if v != 0:
                coeffs[monoms[c]] = Coefficient.from_rational(-v)
        basis.append(ExactPolynomial(coeffs))
    return tuple(basis)


@lru_cache(maxsize=None)
def invariant_harmonic_basis(k: int) -> tuple[ExactPolynomial, ...]:
    """Basis of B3-invariant harmonics of degree k.

    Solved inside the invariant ring, where the dimension count follows
    1 / ((1-t^4)(1-t^6)) instead of 2k+1; the linear systems shrink
    accordingly.
    """
    if k % 2:
        return ()
    thetas = theta_monomials_of_weighted_degree(k)
    if not thetas:
        return ()
    if k == 0:
        return (ExactPolynomial.one(),)
    lower = x_monomials(k - 2)
    lower_index = {m: i for i, m in enumerate(lower)}
    rows = []
    for t in thetas:
        img = laplacian(theta_monomial_x(t))
        vec = [Fraction(0)] * len(lower)
        for mm, c in img.items():
            vec[lower_index[mm]] = c.rational_value()
        rows.append(vec)
    mat = RationalMatrix(rows).transpose()
    red, pivots = mat.rref()
    free = [j for j in range(len(thetas)) if j not in pivots]
    basis = []
    for j in free:
        combo = {thetas[j]: Coefficient.one()}
        for r, c in enumerate(pivots):
            v = red.entries[r][j]
            if v != 0:
                combo[thetas[c]] = Coefficient.from_rational(-v)
        basis.append(ThetaPolynomial(combo).expand())
    return tuple(basis)


class NotHomogeneous(Exception):
    pass


def _decompose_homogeneous(p: ExactPolynomial, j: int, invariant: bool):
    """p = sum_r |x|^{2r} h_{j-2r}, one component per (r, k) with 2r + k = j."""
    monoms = x_monomials(j)
    index = {m: i for i, m in enumerate(monoms)}
    norm2 = theta_monomial_x((1, 0, 0))  # |x|^2

    basis_fn = invariant_harmonic_basis if invariant else harmonic_basis
    columns = []
    tags = []  # (r, k, harmonic basis polynomial)
    for r in range(j // 2 + 1):
        k = j - 2 * r
        radial = norm2 ** r
        for h in basis_fn(k):
            columns.append(radial * h)
            tags.append((r, k, h))
    if not columns:
        raise NotInvariant(f"no admissible components at degree {j}")

    # solve per pi-exponent; columns are rational so exponents separate
    col_vecs = []
    for q in columns:
        vec = [Fraction(0)] * len(monoms)
        for m, c in q.items():
            vec[index[m]] = c.rational_value()
        col_vecs.append(vec)
    mat = RationalMatrix(col_vecs).transpose()

    by_exp: dict[int, list[Fraction]] = {}
    for m, c in p.items():
        for e, qv in c.items():
            by_exp.setdefault(e, [Fraction(0)] * len(monoms))[index[m]] = qv

    weights = [dict() for _ in columns]
    for e, vec in by_exp.items():
        sol = mat.solve(vec)
        for i, v in enumerate(sol):
            if v != 0:
                weights[i][e] = v

    out = []
    for (r, k, h), w in zip(tags, weights):
        if w:
            out.append(HarmonicComponent(r=r, k=k, h=h.scale(Coefficient(w))))
    return out


def harmonic_decompose(p: ExactPolynomial, degree: int | None = None):
    """Exact harmonic decomposition of a homogeneous polynomial.

    Uses the small invariant-harmonic systems when p is invariant, the full
    monomial harmonic bases otherwise.
    """
    if p.is_zero():
        return []
    if not p.is_homogeneous():
        raise NotHomogeneous("polynomial is not homogeneous")
    j = p.degree()
    if degree is not None and degree != j:
        raise NotHomogeneous(f"degree {j}, expected {degree}")
    return _decompose_homogeneous(p, j, invariant=is_b3_invariant(p))


def laguerre(r: int, alpha: Fraction) -> list[Fraction]:
    """Coefficients of the generalized Laguerre polynomial L_r^alpha.

    Three-term recurrence over exact rationals; entry i is the coefficient
    of t^i.
    """
    if r < 0:
        raise ValueError("degree must be nonnegative")
    alpha = Fraction(alpha)
    prev = [Fraction(1)]
    if r == 0:
        return prev
    cur = [1 + alpha, Fraction(-1)]
    for n in range(1, r):
        # (n+1) L_{n+1} = (2n + 1 + alpha - t) L_n - (n + alpha) L_{n-1}
        nxt = [Fraction(0)] * (n + 2)
        for i, c in enumerate(cur):
            nxt[i] += (2 * n + 1 + alpha) * c
            nxt[i + 1] -= c
        for i, c in enumerate(prev):
            nxt[i] -= (n + alpha) * c
        nxt = [c / (n + 1) for c in nxt]
        prev, cur = cur, nxt
    return cur


def _factorial(r: int) -> int:
    out = 1
    for i in range(2, r + 1):
        out *= i
    return out


def fourier_component(comp: HarmonicComponent) -> ExactPolynomial:
    """Image of |x|^{2r} h_k(x) under the Gaussian-weighted transform."""
    r, k, h = comp.r, comp.k, comp.h
    if k % 2:
        raise NotInvariant("odd harmonic degree: transform is not real")
    sign = -1 if (k // 2) % 2 else 1
    coeffs = laguerre(r, Fraction(2 * k + 1, 2))
    norm2 = theta_monomial_x((1, 0, 0))
    fact = _factorial(r)
    acc = ExactPolynomial.zero()
    power = ExactPolynomial.one()
    for m, c in enumerate(coeffs):
        if c != 0:
            # coefficient c * pi^m from L(pi |u|^2), times pi^{-r} r!
            w = Coefficient.pi_power(m - r, c * fact * sign)
            acc = acc + (power * h).scale(w)
        if m < len(coeffs) - 1:
            power = power * norm2
    return acc


def fourier_apply(g: ExactPolynomial) -> ExactPolynomial:
    """The operator F: exact transform coefficients in Q[pi, pi^-1].

    Requires a B3-invariant input (even harmonic degrees only); linear, and
    an involution on invariants.
    """
    if g.is_zero():
        return g
    if not is_b3_invariant(g):
        raise NotInvariant("Fourier operator is defined on invariant polynomials")
    acc = ExactPolynomial.zero()
    for j, part in g.homogeneous_components().items():
        for comp in _decompose_homogeneous(part, j, invariant=True):
            acc = acc + fourier_component(comp)
    return acc


def fourier_theta(tp: ThetaPolynomial) -> ThetaPolynomial:
    """F carried through theta coordinates."""
    return contract_theta(fourier_apply(tp.expand()))
