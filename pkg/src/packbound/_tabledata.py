"""Embedded reference data: the B3 character table, the published orthonormal
coinvariant rows, the published Q matrices, and the published packing-bound
tables.  Used for regression tests and the ``reference tables`` command.

The published Q-matrix and coinvariant-row tables label the six odd
(ungerade) irreducibles inconsistently with the character table they
accompany: the functions listed under A_1u/A_2u, T_1u/T_2u are swapped, and
the two E rows are swapped across the g/u pair (e.g. x1*x2*x3 is listed
under A_1u although its character is the A_2u row, and x1, x2, x3 are
listed under T_2u although coordinates carry the T_1u character).
``PUBLISHED_TO_STANDARD`` maps each published row label to the Mulliken
symbol its content actually transforms as; regression comparisons go
through this map.
"""

from __future__ import annotations

import re

from fractions import Fraction

from .polyalg import Coefficient, ThetaPolynomial

# Conjugacy classes in column order, with sizes.
CLASS_NAMES = ("E", "i", "3C2", "3s_h", "6C2'", "6s_d", "8C3", "6C4", "6S4", "8S6")
CLASS_SIZES = {
    "E": 1, "i": 1, "3C2": 3, "3s_h": 3, "6C2'": 6,
    "6s_d": 6, "8C3": 8, "6C4": 6, "6S4": 6, "8S6": 8,
}

# Character table of B3 (rows: Mulliken symbols, columns: CLASS_NAMES).
CHARACTER_TABLE = {
    "A_1g": (1, 1, 1, 1, 1, 1, 1, 1, 1, 1),
    "A_1u": (1, -1, 1, -1, 1, -1, 1, 1, -1, -1),
    "A_2g": (1, 1, 1, 1, -1, -1, 1, -1, -1, 1),
    "A_2u": (1, -1, 1, -1, -1, 1, 1, -1, 1, -1),
    "E_g": (2, 2, 2, 2, 0, 0, -1, 0, 0, -1),
    "E_u": (2, -2, 2, -2, 0, 0, -1, 0, 0, 1),
    "T_1g": (3, 3, -1, -1, -1, -1, 0, 1, 1, 0),
    "T_1u": (3, -3, -1, 1, -1, 1, 0, 1, -1, 0),
    "T_2g": (3, 3, -1, -1, 1, 1, 0, -1, -1, 0),
    "T_2u": (3, -3, -1, 1, 1, -1, 0, -1, 1, 0),
}

IRREP_NAMES = tuple(CHARACTER_TABLE)

# Published label -> Mulliken symbol of the listed content (see module docstring).
PUBLISHED_TO_STANDARD = {
    "A_1g": "A_1g",
    "A_1u": "A_2u",
    "A_2g": "A_2g",
    "A_2u": "A_1u",
    "E_g": "E_u",
    "E_u": "E_g",
    "T_1g": "T_1g",
    "T_1u": "T_2u",
    "T_2g": "T_2g",
    "T_2u": "T_1u",
}

STANDARD_TO_PUBLISHED = {v: k for k, v in PUBLISHED_TO_STANDARD.items()}

# Published lowest-degree coinvariant rows (one basis polynomial per line,
# x-monomial text), keyed by published label.  sqrt(3)/3 factors from the
# original normalization are dropped: only the spanned subspace is compared.
PUBLISHED_ROW_SPANS = {
    "A_1g": ["1"],
    "A_1u": ["x1 x2 x3"],
    "A_2g": ["x1^4 x2^2 - x1^4 x3^2 - x1^2 x2^4 + x1^2 x3^4 + x2^4 x3^2 - x2^2 x3^4"],
    "A_2u": [
        "x1^5 x2^3 x3 - x1^5 x2 x3^3 - x1^3 x2^5 x3 + x1^3 x2 x3^5"
        " + x1 x2^5 x3^3 - x1 x2^3 x3^5"
    ],
    "E_g": ["x1^3 x2 x3 - x1 x2 x3^3", "x1^3 x2 x3 - 2 x1 x2^3 x3 + x1 x2 x3^3"],
    "E_u": ["x1^2 - x3^2", "x1^2 - 2 x2^2 + x3^2"],
    "T_1g": ["x1^3 x2 - x1 x2^3", "x1^3 x3 - x1 x3^3", "x2^3 x3 - x2 x3^3"],
    "T_1u": ["x1^2 x2 - x2 x3^2", "x1^2 x3 - x2^2 x3", "x1 x2^2 - x1 x3^2"],
    "T_2g": ["x1 x2", "x1 x3", "x2 x3"],
    "T_2u": ["x1", "x2", "x3"],
}

# Published Q matrices in upper-triangular row-major order, keyed by
# published label; t1, t2, t3 stand for the basic invariants.
PUBLISHED_QPI = {
    "A_1g": ["1"],
    "A_1u": ["t1^3 - 3 t1 t2 + 2 t3"],
    "A_2g": [
        "-t1^6 + 9 t1^4 t2 - 8 t1^3 t3 - 21 t1^2 t2^2 + 36 t1 t2 t3 + 3 t2^3 - 18 t3^2"
    ],
    "A_2u": [
        "-t1^9 + 12 t1^7 t2 - 10 t1^6 t3 - 48 t1^5 t2^2 + 78 t1^4 t2 t3"
        " + 66 t1^3 t2^3 - 34 t1^3 t3^2 - 150 t1^2 t2^2 t3 - 9 t1 t2^4"
        " + 126 t1 t2 t3^2 + 6 t2^3 t3 - 36 t3^3"
    ],
    "E_g": [
        "-2 t1^5 + 12 t1^3 t2 - 4 t1^2 t3 - 18 t1 t2^2 + 12 t2 t3",
        "-2 t1^4 t2 + 6 t1^3 t3 + 6 t1^2 t2^2 - 22 t1 t2 t3 + 12 t3^2",
        "t1^7 - 9 t1^5 t2 + 10 t1^4 t3 + 19 t1^3 t2^2 - 36 t1^2 t2 t3"
        " - 3 t1 t2^3 + 16 t1 t3^2 + 2 t2^2 t3",
    ],
    "E_u": [
        "-2 t1^2 + 6 t2",
        "-2 t1 t2 + 6 t3",
        "t1^4 - 6 t1^2 t2 + 8 t1 t3 + t2^2",
    ],
    "T_1g": [
        "12 t1 t3 - 12 t2^2",
        "2 t1^5 - 12 t1^3 t2 + 16 t1^2 t3 + 6 t1 t2^2 - 12 t2 t3",
        "2 t1^6 - 12 t1^4 t2 + 10 t1^3 t3 + 12 t1^2 t2^2 - 6 t1 t2 t3 - 6 t2^3",
        "2 t1^6 - 10 t1^4 t2 + 10 t1^3 t3 + 10 t1 t2 t3 - 12 t3^2",
        "t1^7 - 3 t1^5 t2 + 2 t1^4 t3 - 9 t1^3 t2^2 + 24 t1^2 t2 t3"
        " + 3 t1 t2^3 - 12 t1 t3^2 - 6 t2^2 t3",
        "4 t1^6 t2 - 3 t1^5 t3 - 21 t1^4 t2^2 + 32 t1^3 t2 t3 + 12 t1^2 t2^3"
        " - 12 t1^2 t3^2 - 9 t1 t2^2 t3 - 3 t2^4",
    ],
    "T_1u": [
        "-12 t1^3 + 48 t1 t2 - 36 t3",
        "-6 t1^4 + 24 t1^2 t2 - 12 t1 t3 - 6 t2^2",
        "-6 t1^3 t2 + 6 t1^2 t3 + 18 t1 t2^2 - 18 t2 t3",
        "-2 t1^5 + 6 t1^3 t2 + 2 t1^2 t3 - 6 t2 t3",
        "t1^6 - 9 t1^4 t2 + 8 t1^3 t3 + 15 t1^2 t2^2 - 12 t1 t2 t3 - 3 t2^3",
        "t1^7 - 6 t1^5 t2 + 5 t1^4 t3 + 3 t1^3 t2^2 + 6 t1 t2^3 - 9 t2^2 t3",
    ],
    "T_2g": [
        "3 t1^2 - 3 t2",
        "6 t1 t2 - 6 t3",
        "-t1^4 + 6 t1^2 t2 - 2 t1 t3 - 3 t2^2",
        "-2 t1^4 + 12 t1^2 t2 - 10 t1 t3",
        "-t1^5 + 4 t1^3 t2 - 2 t1^2 t3 + 3 t1 t2^2 - 4 t2 t3",
        "-2 t1^4 t2 + t1^3 t3 + 9 t1^2 t2^2 - 7 t1 t2 t3 - 3 t2^3 + 2 t3^2",
    ],
    "T_2u": [
        "6 t1",
        "6 t2",
        "6 t3",
        "6 t3",
        "t1^4 - 6 t1^2 t2 + 8 t1 t3 + 3 t2^2",
        "t1^5 - 5 t1^3 t2 + 5 t1^2 t3 + 5 t2 t3",
    ],
}

# Densest known lattice packing densities of superballs (lower bounds for the
# translative problem) and the new rigorous translative upper bounds.
SUPERBALL_TABLE = {
    # p: (lower bound, upper bound)
    1: ("18/19 = 0.9473...", "0.9729..."),
    2: ("pi/sqrt(18) = 0.7404...", "pi/sqrt(18)"),
    3: ("0.8095...", "0.8236..."),
    4: ("0.8698...", "0.8742..."),
    5: ("0.9080...", "0.9224..."),
    6: ("0.9318...", "0.9338..."),
}

SUPERBALL_LOWER = {3: 0.8095, 4: 0.8698, 5: 0.9080, 6: 0.9318}

POLYTOPE_TABLE = {
    "tetrahedron": ("18/49 = 0.3673...", "0.3745..."),
    "truncated tetrahedron": ("0.6809...", "0.7292..."),
    "truncated cuboctahedron": ("0.8493...", "0.8758..."),
    "rhombicuboctahedron": ("0.8758...", "0.8758..."),
    "cuboctahedron": ("0.9183...", "0.9364..."),
    "truncated cube": ("0.9737...", "0.9845..."),
}

# Rigorously verified bounds with the enlargement factor alpha used.
VERIFIED_BOUNDS = [
    ("regular octahedron (B3^1)", "0.972912750", "1.001"),
    ("B3^3", "0.823611150", "1.002"),
    ("B3^4", "0.874257405", "1"),
    ("B3^5", "0.922441815", "1.005"),
    ("B3^6", "0.933843309", "1"),
    ("regular tetrahedron", "0.374568355", "1.02"),
    ("truncated cube", "0.984519783", "1.003"),
    ("truncated tetrahedron", "0.729209804", "1.023"),
]

_TERM_RE = re.compile(r"([+-]?[^+-]+)")


def _parse_vars(term: str, names: tuple[str, str, str]):
    exps = [0, 0, 0]
    coeff = Fraction(1)
    term = term.replace("*", " ")
    for factor in term.split():
        if factor == "+":
            continue
        if factor == "-":
            coeff = -coeff
            continue
        m = re.fullmatch(r"([+-]?)(\d*(?:/\d+)?)((?:%s)?)(?:\^(\d+))?" % "|".join(names), factor)
        if m is None:
            raise ValueError(f"cannot parse factor {factor!r}")
        sign, num, var, exp = m.groups()
        if sign == "-":
            coeff = -coeff
        if num:
            coeff *= Fraction(num)
        if var:
            exps[names.index(var)] += int(exp) if exp else 1
    return tuple(exps), coeff


def _parse_poly(text: str, names: tuple[str, str, str]):
    text = text.replace("- ", "-").replace("+ ", "+")
    terms = {}
    for raw in _TERM_RE.findall(text):
        raw = raw.strip()
        if not raw:
            continue
        m, c = _parse_vars(raw, names)
        terms[m] = terms.get(m, Fraction(0)) + c
    return terms


def parse_theta_poly(text: str) -> ThetaPolynomial:
    terms = _parse_poly(text, ("t1", "t2", "t3"))
    return ThetaPolynomial({m: Coefficient.from_rational(c) for m, c in terms.items()})


def parse_x_poly(text: str):
    from .polyalg import ExactPolynomial

    terms = _parse_poly(text, ("x1", "x2", "x3"))
    return ExactPolynomial({m: Coefficient.from_rational(c) for m, c in terms.items()})


def published_qpi_matrix(label: str) -> dict[tuple[int, int], ThetaPolynomial]:
    """Published Q matrix as {(k, l): entry} with k <= l, 1-indexed."""
    entries = PUBLISHED_QPI[label]
    # infer matrix dimension from the entry count n(n+1)/2
    n = 1
    while n * (n + 1) // 2 < len(entries):
        n += 1
    if n * (n + 1) // 2 != len(entries):
        raise ValueError(f"bad entry count for {label}")
    out = {}
    pos = 0
    for k in range(1, n + 1):
        for l in range(k, n + 1):
            out[(k, l)] = parse_theta_poly(entries[pos])
            pos += 1
    return out
