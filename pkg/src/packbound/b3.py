"""The octahedral reflection group B3 and its invariant-theory data.

Builds the 48 signed permutation matrices from the three generating
reflections, tags conjugacy classes, projects onto isotypic components,
constructs coinvariant-algebra rows satisfying the matrix transformation
law (Serre's projection formulas), and assembles the per-irreducible Q
matrices that parametrize the cone of invariant sums of squares.

All computations are exact over the rationals.  Matrix representations are
taken in a rational (generally non-orthogonal) basis of the lowest-degree
irreducible component; the Q matrices are therefore formed as
Phi * M * Phi^T where M is the inverse Gram matrix of that basis, the
unique (up to scale) positive pairing making the result group-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import _tabledata
from .polyalg import (
    COEFF_ONE,
    Coefficient,
    ExactPolynomial,
    GENERATOR_MATRICES,
    RationalMatrix,
    ThetaPolynomial,
    contract_theta,
    monomial_key,
    x_monomials,
)

CLASS_NAMES = _tabledata.CLASS_NAMES
CLASS_SIZES = _tabledata.CLASS_SIZES
IRREP_NAMES = _tabledata.IRREP_NAMES

GROUP_ORDER = 48


class DegenerateChoice(Exception):
    """A Serre seed vector came out zero or dependent; caller re-seeds."""


@dataclass(frozen=True)
class GroupElement:
    matrix: tuple[tuple[int, int, int], ...]
    class_name: str
    det: int
    trace: int
    order: int


@dataclass(frozen=True)
class Irrep:
    name: str
    degree: int
    character: dict  # class name -> integer

    def chi(self, g: GroupElement) -> int:
        return self.character[g.class_name]


def _matmul3(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )


_IDENTITY = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _element_order(m):
    acc = m
    for n in range(1, 13):
        if acc == _IDENTITY:
            return n
        acc = _matmul3(acc, m)
    raise ValueError("element order exceeds 12")


def _perm_cycle_type(m):
    """Cycle type of the unsigned permutation: 'id', 'swap' or '3cyc'."""
    perm = tuple(next(j for j in range(3) if m[i][j] != 0) for i in range(3))
    fixed = sum(1 for i in range(3) if perm[i] == i)
    return {3: "id", 1: "swap", 0: "3cyc"}[fixed]


# (det, trace, order, cycle type) -> conjugacy class.  det/trace/order alone
# do not separate 3C2 from 6C2' (both rotations of order 2 with trace -1) nor
# 3s_h from 6s_d, hence the extra cycle-type component.
_CLASS_SIGNATURES = {
    (1, 3, 1, "id"): "E",
    (-1, -3, 2, "id"): "i",
    (1, -1, 2, "id"): "3C2",
    (-1, 1, 2, "id"): "3s_h",
    (1, -1, 2, "swap"): "6C2'",
    (-1, 1, 2, "swap"): "6s_d",
    (1, 0, 3, "3cyc"): "8C3",
    (1, 1, 4, "swap"): "6C4",
    (-1, -1, 4, "swap"): "6S4",
    (-1, 0, 6, "3cyc"): "8S6",
}


def classify(matrix) -> str:
    sig = (
        _det3(matrix),
        matrix[0][0] + matrix[1][1] + matrix[2][2],
        _element_order(matrix),
        _perm_cycle_type(matrix),
    )
    return _CLASS_SIGNATURES[sig]


@lru_cache(maxsize=1)
def enumerate_group() -> tuple[GroupElement, ...]:
    """All 48 elements, closed under the generating reflections."""
    seen = {_IDENTITY}
    frontier = [_IDENTITY]
    while frontier:
        m = frontier.pop()
        for g in GENERATOR_MATRICES:
            n = _matmul3(g, m)
            if n not in seen:
                seen.add(n)
                frontier.append(n)
    if len(seen) != GROUP_ORDER:
        raise AssertionError(f"group closure has {len(seen)} elements")
    elements = []
    for m in sorted(seen):
        elements.append(
            GroupElement(
                matrix=m,
                class_name=classify(m),
                det=_det3(m),
                trace=m[0][0] + m[1][1] + m[2][2],
                order=_element_order(m),
            )
        )
    return tuple(elements)


@lru_cache(maxsize=1)
def irreps() -> tuple[Irrep, ...]:
    table = _tabledata.CHARACTER_TABLE
    out = []
    for name in IRREP_NAMES:
        row = table[name]
        out.append(
            Irrep(
                name=name,
                degree=row[0],
                character=dict(zip(CLASS_NAMES, row)),
            )
        )
    return tuple(out)


def irrep(name: str) -> Irrep:
    for pi in irreps():
        if pi.name == name:
            return pi
    raise KeyError(name)


def is_invariant(p: ExactPolynomial) -> bool:
    return all(p.apply_group_element(g) == p for g in GENERATOR_MATRICES)


def symmetrize(p: ExactPolynomial) -> ExactPolynomial:
    """Group average (Reynolds operator)."""
    acc = ExactPolynomial.zero()
    for g in enumerate_group():
        acc = acc + p.apply_group_element(g.matrix)
    return acc.scale(Fraction(1, GROUP_ORDER))


def _poly_to_vector(p: ExactPolynomial, monoms, index) -> list[Fraction]:
    vec = [Fraction(0)] * len(monoms)
    for m, c in p.items():
        vec[index[m]] = c.rational_value()
    return vec


def _character_project(p: ExactPolynomial, pi: Irrep) -> ExactPolynomial:
    acc = ExactPolynomial.zero()
    for g in enumerate_group():
        # chi(g^-1) = chi(g): characters are real and integral here
        ch = pi.chi(g)
        if ch:
            acc = acc + p.apply_group_element(g.matrix).scale(ch)
    return acc.scale(Fraction(pi.degree, GROUP_ORDER))


def isotypic_project(k: int, pi: Irrep | str) -> list[ExactPolynomial]:
    """Exact basis of the isotypic component of type pi inside Hom_k.

    Rows come from the reduced row echelon form of the projected monomial
    images, so the basis is canonical for the monomial order.
    """
    if isinstance(pi, str):
        pi = irrep(pi)
    if k < 0:
        raise ValueError("degree must be nonnegative")
    monoms = x_monomials(k)
    index = {m: i for i, m in enumerate(monoms)}
    rows = []
    for m in monoms:
        img = _character_project(ExactPolynomial.monomial(m), pi)
        if not img.is_zero():
            rows.append(_poly_to_vector(img, monoms, index))
    if not rows:
        return []
    red, pivots = RationalMatrix(rows).rref()
    basis = []
    for r in range(len(pivots)):
        poly = ExactPolynomial(
            {
                monoms[j]: Coefficient.from_rational(red.entries[r][j])
                for j in range(len(monoms))
                if red.entries[r][j] != 0
            }
        )
        basis.append(poly)
    return basis


@lru_cache(maxsize=None)
def _graded_coinvariant_multiplicities(name: str) -> tuple[int, ...]:
    """Multiplicity of the irrep in each graded piece of the coinvariant algebra.

    Coefficientwise average of chi(g) * (1-t^2)(1-t^4)(1-t^6) / det(1 - t g),
    an exact power-series computation through degree 9.
    """
    pi = irrep(name)
    top = 9
    total = [Fraction(0)] * (top + 1)
    numerator = _poly_mul_trunc(
        _poly_mul_trunc([1, 0, -1], [1, 0, 0, 0, -1], top),
        [1, 0, 0, 0, 0, 0, -1],
        top,
    )
    for g in enumerate_group():
        ch = pi.chi(g)
        if ch == 0:
            continue
        series = _series_div(numerator, _char_poly_1_minus_tg(g.matrix), top)
        for k in range(top + 1):
            total[k] += Fraction(ch) * series[k]
    out = []
    for k in range(top + 1):
        v = total[k] / GROUP_ORDER
        if v.denominator != 1 or v < 0:
            raise AssertionError("multiplicity must be a nonnegative integer")
        out.append(int(v))
    return tuple(out)


def _poly_mul_trunc(a, b, top):
    out = [0] * (top + 1)
    for i, ai in enumerate(a):
        if ai == 0 or i > top:
            continue
        for j, bj in enumerate(b):
            if i + j <= top and bj != 0:
                out[i + j] += ai * bj
    return out


def _series_div(num, den, top):
    """Power series of num/den through degree top (den[0] != 0)."""
    out = [Fraction(0)] * (top + 1)
    lead = Fraction(den[0])
    for k in range(top + 1):
        acc = Fraction(num[k]) if k < len(num) else Fraction(0)
        for j in range(1, k + 1):
            if j < len(den) and den[j] != 0:
                acc -= den[j] * out[k - j]
        out[k] = acc / lead
    return out


def _char_poly_1_minus_tg(m):
    """Coefficients of det(I - t*M) for a 3x3 integer matrix."""
    tr = m[0][0] + m[1][1] + m[2][2]
    # sum of principal 2x2 minors
    c2 = (
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
        + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2] - m[1][2] * m[2][1]
    )
    return [1, -tr, c2, -_det3(m)]


def coinvariant_degrees(name: str) -> tuple[int, ...]:
    """Degrees at which the irrep occurs in the coinvariant algebra."""
    mult = _graded_coinvariant_multiplicities(name)
    out = []
    for k, c in enumerate(mult):
        if c not in (0, 1):
            raise AssertionError("coinvariant pieces must be multiplicity-free")
        if c:
            out.append(k)
    return tuple(out)


@dataclass(frozen=True)
class IsotypicRow:
    degree: int
    polys: tuple[ExactPolynomial, ...]  # phi_{k1}, ..., phi_{k d_pi}


@dataclass(frozen=True)
class IsotypicData:
    irrep: Irrep
    rows: tuple[IsotypicRow, ...]
    pairing: RationalMatrix  # M with pi(g) M pi(g)^T = M, positive definite
    rep_matrices: dict  # group matrix -> RationalMatrix of the irrep
    qpi: dict  # (k, l) 1-indexed, k <= l -> ThetaPolynomial


def _rep_matrices(pi: Irrep, basis: list[ExactPolynomial]):
    """Matrix of g on span(basis) in that basis: g.b_i = sum_j M[j][i] b_j."""
    k = basis[0].degree()
    monoms = x_monomials(k)
    index = {m: i for i, m in enumerate(monoms)}
    bmat = RationalMatrix(
        [_poly_to_vector(b, monoms, index) for b in basis]
    ).transpose()
    mats = {}
    for g in enumerate_group():
        cols = []
        for b in basis:
            img = b.apply_group_element(g.matrix)
            cols.append(bmat.solve(_poly_to_vector(img, monoms, index)))
        mats[g.matrix] = RationalMatrix(cols).transpose()
    return mats


def _serre_apply(pi: Irrep, mats, i: int, j: int, p: ExactPolynomial):
    """p^pi_{ij} = (d/|G|) sum_g pi_{ji}(g^-1) rho(g), applied to p."""
    acc = ExactPolynomial.zero()
    for g in enumerate_group():
        inv = tuple(zip(*g.matrix))  # transpose = inverse for orthogonal g
        w = mats[inv][j - 1, i - 1]
        if w != 0:
            acc = acc + p.apply_group_element(g.matrix).scale(w)
    return acc.scale(Fraction(pi.degree, GROUP_ORDER))


@lru_cache(maxsize=None)
def _ideal_rref(k: int):
    """RREF of the degree-k piece of the ideal (theta1, theta2, theta3)."""
    from .polyalg import THETA_X

    monoms = x_monomials(k)
    index = {m: i for i, m in enumerate(monoms)}
    rows = []
    for d, theta in zip((2, 4, 6), THETA_X):
        if k - d < 0:
            continue
        for m in x_monomials(k - d):
            p = theta * ExactPolynomial.monomial(m)
            rows.append(_poly_to_vector(p, monoms, index))
    if not rows:
        return None, monoms, index
    red, pivots = RationalMatrix(rows).rref()
    return (red, pivots), monoms, index


def _reduce_mod_ideal(vec, ideal):
    red, pivots = ideal
    v = list(vec)
    for r, c in enumerate(pivots):
        if v[c] != 0:
            f = v[c]
            row = red.entries[r]
            v = [a - f * b for a, b in zip(v, row)]
    return v


def _independent_mod_ideal(polys, k: int, existing_rows=()):
    """Check row polynomials remain independent modulo the invariant ideal."""
    ideal, monoms, index = _ideal_rref(k)
    vectors = []
    for p in list(existing_rows) + list(polys):
        v = _poly_to_vector(p, monoms, index)
        if ideal is not None:
            v = _reduce_mod_ideal(v, ideal)
        vectors.append(v)
    return RationalMatrix(vectors).rank() == len(vectors)


def _normalize_leading(p: ExactPolynomial) -> ExactPolynomial:
    lead = p.leading_monomial()
    c = p.coefficient(lead).rational_value()
    return p.scale(Fraction(1) / c)


def _primitive_integer_matrix(m: RationalMatrix) -> RationalMatrix:
    from math import gcd, lcm

    den = 1
    for row in m.entries:
        for v in row:
            den = lcm(den, v.denominator)
    nums = [int(v * den) for row in m.entries for v in row]
    g = 0
    for n in nums:
        g = gcd(g, n)
    g = g or 1
    scale = Fraction(den, g)
    return RationalMatrix([[v * scale for v in row] for row in m.entries])


def build_coinvariant_rows(pi: Irrep):
    """Rows Phi^pi: one row per coinvariant degree, matrix transformation law.

    Row 1 is the canonical (echelon) basis of the lowest isotypic component;
    every higher row is generated by the Serre projections from the first
    nonzero monomial seed in canonical order, normalized to leading
    coefficient one.  Seeds whose rows are dependent modulo the invariant
    ideal are skipped deterministically.
    """
    degrees = coinvariant_degrees(pi.name)
    k1 = degrees[0]
    basis = isotypic_project(k1, pi)
    if len(basis) != pi.degree:
        raise DegenerateChoice(
            f"lowest component of {pi.name} has dimension {len(basis)}"
        )
    mats = _rep_matrices(pi, basis)
    rows = [IsotypicRow(degree=k1, polys=tuple(basis))]
    all_row_polys = {k1: list(basis)}
    for k in degrees[1:]:
        found = False
        for m in x_monomials(k):
            seed = _serre_apply(pi, mats, 1, 1, ExactPolynomial.monomial(m))
            if seed.is_zero():
                continue
            seed = _normalize_leading(seed)
            polys = [seed]
            for i in range(2, pi.degree + 1):
                polys.append(_serre_apply(pi, mats, i, 1, seed))
            if not _independent_mod_ideal(polys, k, all_row_polys.get(k, ())):
                continue
            rows.append(IsotypicRow(degree=k, polys=tuple(polys)))
            all_row_polys.setdefault(k, []).extend(polys)
            found = True
            break
        if not found:
            raise DegenerateChoice(
                f"no usable seed for {pi.name} at degree {k}"
            )
    return rows, mats


def _gram(basis: list[ExactPolynomial]) -> RationalMatrix:
    """Gram matrix in the monomial inner product <x^a, x^b> = delta_ab."""
    n = len(basis)
    out = [[Fraction(0)] * n for _ in range(n)]
    dicts = []
    for b in basis:
        dicts.append({m: c.rational_value() for m, c in b.items()})
    for i in range(n):
        for j in range(i, n):
            acc = Fraction(0)
            for m, v in dicts[i].items():
                w = dicts[j].get(m)
                if w is not None:
                    acc += v * w
            out[i][j] = out[j][i] = acc
    return RationalMatrix(out)


@lru_cache(maxsize=None)
def isotypic_data(name: str) -> IsotypicData:
    pi = irrep(name)
    rows, mats = build_coinvariant_rows(pi)
    pairing = _primitive_integer_matrix(_gram(list(rows[0].polys)).inverse())
    d = pi.degree
    qpi = {}
    for a in range(len(rows)):
        for b in range(a, len(rows)):
            acc = ExactPolynomial.zero()
            for i in range(d):
                for j in range(d):
                    w = pairing[i, j]
                    if w != 0:
                        acc = acc + (rows[a].polys[i] * rows[b].polys[j]).scale(w)
            qpi[(a + 1, b + 1)] = contract_theta(acc)
    return IsotypicData(
        irrep=pi, rows=tuple(rows), pairing=pairing, rep_matrices=mats, qpi=qpi
    )


def build_qpi() -> dict[str, IsotypicData]:
    """Isotypic data (rows, pairing, Q matrix) for all ten irreducibles."""
    return {name: isotypic_data(name) for name in IRREP_NAMES}


def molien_coefficients(series: str, upto: int) -> list[int]:
    """Exact coefficients of the named dimension series through t^upto.

    'invariant':            1 / ((1-t^2)(1-t^4)(1-t^6))
    'coinvariant':          (1-t^2)(1-t^4)(1-t^6) / (1-t)^3
    'harmonic_invariant':   1 / ((1-t^4)(1-t^6))
    """
    if upto < 0:
        raise ValueError("upto must be nonnegative")
    if series == "invariant":
        den = _poly_mul_trunc(
            _poly_mul_trunc([1, 0, -1], [1, 0, 0, 0, -1], upto),
            [1, 0, 0, 0, 0, 0, -1],
            upto,
        )
        out = _series_div([1], den, upto)
    elif series == "coinvariant":
        # (1+t)(1+t+t^2+t^3)(1+t+...+t^5), a polynomial of degree 9
        num = _poly_mul_trunc(
            _poly_mul_trunc([1, 1], [1, 1, 1, 1], upto), [1] * 6, upto
        )
        out = [Fraction(v) for v in num] + [Fraction(0)] * (upto + 1 - len(num))
        out = out[: upto + 1]
    elif series == "harmonic_invariant":
        den = _poly_mul_trunc([1, 0, 0, 0, -1], [1, 0, 0, 0, 0, 0, -1], upto)
        out = _series_div([1], den, upto)
    else:
        raise ValueError(f"unknown series {series!r}")
    result = []
    for v in out:
        v = Fraction(v)
        if v.denominator != 1:
            raise AssertionError("series coefficients must be integers")
        result.append(int(v))
    return result


def molien_series_by_average(upto: int) -> list[int]:
    """Molien's group-average formula; independent cross-check of 'invariant'."""
    total = [Fraction(0)] * (upto + 1)
    for g in enumerate_group():
        series = _series_div([1], _char_poly_1_minus_tg(g.matrix), upto)
        for k in range(upto + 1):
            total[k] += series[k]
    out = []
    for k in range(upto + 1):
        v = total[k] / GROUP_ORDER
        if v.denominator != 1:
            raise AssertionError("Molien coefficients must be integers")
        out.append(int(v))
    return out


def dump_tables() -> str:
    """Text rendering of the character table, rows and Q matrices."""
    lines = ["Character table (classes: %s)" % ", ".join(CLASS_NAMES)]
    for name in IRREP_NAMES:
        row = _tabledata.CHARACTER_TABLE[name]
        lines.append("  %-5s %s" % (name, " ".join("%2d" % v for v in row)))
    lines.append("")
    for name in IRREP_NAMES:
        data = isotypic_data(name)
        lines.append(f"{name}: coinvariant degrees {[r.degree for r in data.rows]}")
        for r in data.rows:
            for p in r.polys:
                lines.append("  phi[deg %d] = %s" % (r.degree, _poly_line(p)))
        for (k, l), q in sorted(data.qpi.items()):
            lines.append("  Q[%d,%d] = %s" % (k, l, _theta_line(q)))
        lines.append("")
    return "\n".join(lines)


def _poly_line(p: ExactPolynomial) -> str:
    parts = []
    for m, c in p.canonical_terms():
        mono = " ".join(
            f"x{i+1}^{e}" if e > 1 else f"x{i+1}"
            for i, e in enumerate(m)
            if e
        )
        parts.append(f"{c.rational_value()} {mono}".strip())
    return " + ".join(parts) if parts else "0"


def _theta_line(q: ThetaPolynomial) -> str:
    parts = []
    for m, c in q.canonical_terms():
        mono = " ".join(
            f"t{i+1}^{e}" if e > 1 else f"t{i+1}"
            for i, e in enumerate(m)
            if e
        )
        parts.append(f"{c.rational_value()} {mono}".strip())
    return " + ".join(parts) if parts else "0"
