"""Exact sparse polynomial arithmetic in three variables over Q[pi, pi^-1].

Coefficients are finite sums sum_e q_e * pi^e with q_e rational and e any
integer, so Fourier-transformed polynomials (which pick up negative powers
of pi) stay exact through the whole symbolic pipeline.  Numeric rounding
happens only in the solver and interval layers, never here.

Monomials are ordered graded-lexicographically with x1 > x2 > x3, and
theta-monomials with theta1 > theta2 > theta3; the zero polynomial has
degree -1.
"""

from __future__ import annotations

from fractions import Fraction


class PolyError(Exception):
    pass


class NotInvariant(PolyError):
    """Input polynomial is not fixed by the full symmetry group."""


class NotInTheRing(PolyError):
    """Exact linear solve for a ring membership failed (internal error)."""


class Singular(PolyError):
    pass


class Inconsistent(PolyError):
    pass


_ZERO = Fraction(0)
_ONE = Fraction(1)


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected rational, got {type(x).__name__}")


class Coefficient:
    """Element of Q[pi, pi^-1]: mapping from integer pi-exponent to a rational.

    Immutable; zero rationals are never stored.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        t = {}
        if terms:
            for e, q in dict(terms).items():
                q = _as_fraction(q)
                if q != 0:
                    t[int(e)] = q
        self._terms = t
        self._hash = None

    @staticmethod
    def from_rational(q) -> "Coefficient":
        return Coefficient({0: _as_fraction(q)})

    @staticmethod
    def pi_power(e, q=1) -> "Coefficient":
        return Coefficient({e: _as_fraction(q)})

    @staticmethod
    def zero() -> "Coefficient":
        return Coefficient()

    @staticmethod
    def one() -> "Coefficient":
        return Coefficient({0: _ONE})

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return all(e == 0 for e in self._terms)

    def rational_value(self) -> Fraction:
        """The value when no pi powers are present; raises otherwise."""
        if not self._terms:
            return _ZERO
        if self.is_rational():
            return self._terms[0]
        raise PolyError("coefficient has nontrivial pi powers")

    def __add__(self, other):
        other = _coerce_coeff(other)
        t = dict(self._terms)
        for e, q in other._terms.items():
            s = t.get(e, _ZERO) + q
            if s == 0:
                t.pop(e, None)
            else:
                t[e] = s
        return Coefficient(t)

    __radd__ = __add__

    def __neg__(self):
        return Coefficient({e: -q for e, q in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce_coeff(other))

    def __rsub__(self, other):
        return _coerce_coeff(other) + (-self)

    def __mul__(self, other):
        other = _coerce_coeff(other)
        t = {}
        for e1, q1 in self._terms.items():
            for e2, q2 in other._terms.items():
                e = e1 + e2
                s = t.get(e, _ZERO) + q1 * q2
                if s == 0:
                    t.pop(e, None)
                else:
                    t[e] = s
        return Coefficient(t)

    __rmul__ = __mul__

    def scale(self, q) -> "Coefficient":
        q = _as_fraction(q)
        if q == 0:
            return Coefficient()
        return Coefficient({e: c * q for e, c in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Coefficient.from_rational(other)
        if not isinstance(other, Coefficient):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"Coefficient({self.text()})"

    def text(self) -> str:
        """Canonical text form, e.g. ``3/2 * pi^-1 + -1 * pi^0``."""
        if not self._terms:
            return "0 * pi^0"
        parts = []
        for e in sorted(self._terms, reverse=True):
            q = self._terms[e]
            parts.append(f"{q} * pi^{e}")
        return " + ".join(parts)

    @staticmethod
    def parse(s: str) -> "Coefficient":
        terms = {}
        for part in s.split("+"):
            q_str, e_str = part.split("*")
            e = int(e_str.strip().removeprefix("pi^"))
            q = Fraction(q_str.strip())
            if q != 0:
                terms[e] = terms.get(e, _ZERO) + q
        return Coefficient(terms)


def _coerce_coeff(x) -> Coefficient:
    if isinstance(x, Coefficient):
        return x
    if isinstance(x, (int, Fraction)):
        return Coefficient.from_rational(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Coefficient")


COEFF_ZERO = Coefficient.zero()
COEFF_ONE = Coefficient.one()


def monomial_key(m):
    """Graded-lex sort key; bigger key = later in the canonical (descending) order."""
    return (sum(m), m)


class _SparsePoly:
    """Shared guts of ExactPolynomial and ThetaPolynomial (dict monomial -> Coefficient)."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        t = {}
        if terms:
            for m, c in dict(terms).items():
                c = _coerce_coeff(c)
                if not c.is_zero():
                    t[tuple(int(v) for v in m)] = c
        self._terms = t
        self._hash = None

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, m) -> Coefficient:
        return self._terms.get(tuple(m), COEFF_ZERO)

    def canonical_terms(self):
        """Terms in canonical order (descending graded-lex)."""
        for m in sorted(self._terms, key=monomial_key, reverse=True):
            yield m, self._terms[m]

    def leading_monomial(self):
        if not self._terms:
            return None
        return max(self._terms, key=monomial_key)

    def _binop_add(self, other, negate=False):
        t = dict(self._terms)
        for m, c in other._terms.items():
            s = t.get(m, COEFF_ZERO) + (-c if negate else c)
            if s.is_zero():
                t.pop(m, None)
            else:
                t[m] = s
        return self.__class__(t)

    def __add__(self, other):
        if not isinstance(other, self.__class__):
            return NotImplemented
        return self._binop_add(other)

    def __sub__(self, other):
        if not isinstance(other, self.__class__):
            return NotImplemented
        return self._binop_add(other, negate=True)

    def __neg__(self):
        return self.__class__({m: -c for m, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Coefficient)):
            return self.scale(other)
        if not isinstance(other, self.__class__):
            return NotImplemented
        t = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2])
                c = c1 * c2
                s = t.get(m)
                s = c if s is None else s + c
                if s.is_zero():
                    t.pop(m, None)
                else:
                    t[m] = s
        return self.__class__(t)

    __rmul__ = __mul__

    def scale(self, c):
        c = _coerce_coeff(c)
        if c.is_zero():
            return self.__class__()
        return self.__class__({m: ci * c for m, ci in self._terms.items()})

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = self.__class__.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, self.__class__):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def one(cls):
        return cls({(0, 0, 0): COEFF_ONE})

    @classmethod
    def constant(cls, c):
        return cls({(0, 0, 0): _coerce_coeff(c)})

    def constant_term(self) -> Coefficient:
        return self._terms.get((0, 0, 0), COEFF_ZERO)

    def is_rational(self) -> bool:
        return all(c.is_rational() for c in self._terms.values())

    def text(self) -> str:
        """One term per line: ``a b c : <coefficient text>``, canonical order."""
        lines = []
        for m, c in self.canonical_terms():
            lines.append(f"{m[0]} {m[1]} {m[2]} : {c.text()}")
        return "\n".join(lines)

    @classmethod
    def parse(cls, s: str):
        terms = {}
        for line in s.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            mon, coeff = line.split(":")
            a, b, c = mon.split()
            terms[(int(a), int(b), int(c))] = Coefficient.parse(coeff)
        return cls(terms)


class ExactPolynomial(_SparsePoly):
    """Polynomial in x1, x2, x3 with Coefficient entries."""

    __slots__ = ()

    @staticmethod
    def variable(i: int) -> "ExactPolynomial":
        m = [0, 0, 0]
        m[i] = 1
        return ExactPolynomial({tuple(m): COEFF_ONE})

    @staticmethod
    def monomial(m, c=1) -> "ExactPolynomial":
        return ExactPolynomial({tuple(m): _coerce_coeff(c)})

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    def is_homogeneous(self) -> bool:
        degrees = {sum(m) for m in self._terms}
        return len(degrees) <= 1

    def homogeneous_components(self):
        """Mapping degree -> homogeneous part."""
        parts = {}
        for m, c in self._terms.items():
            parts.setdefault(sum(m), {})[m] = c
        return {d: ExactPolynomial(t) for d, t in sorted(parts.items())}

    def derivative(self, i: int) -> "ExactPolynomial":
        t = {}
        for m, c in self._terms.items():
            if m[i] == 0:
                continue
            mm = list(m)
            mm[i] -= 1
            t[tuple(mm)] = c.scale(m[i])
        return ExactPolynomial(t)

    def apply_group_element(self, matrix) -> "ExactPolynomial":
        """(g p)(x) = p(g^-1 x) for a signed permutation matrix g.

        ``matrix`` is a 3x3 integer matrix with entries in {-1, 0, 1} and one
        nonzero per row and column.
        """
        # g^-1 = g^T for orthogonal g; (g^-1 x)_i = sum_j g_ji x_j.
        # Row i of g^-1 has its nonzero at column col[i] with sign sgn[i].
        col = [0, 0, 0]
        sgn = [0, 0, 0]
        for i in range(3):
            for j in range(3):
                v = matrix[j][i]
                if v:
                    col[i] = j
                    sgn[i] = v
        t = {}
        for m, c in self._terms.items():
            mm = [0, 0, 0]
            s = 1
            for i in range(3):
                mm[col[i]] = m[i]
                if sgn[i] < 0 and (m[i] & 1):
                    s = -s
            key = tuple(mm)
            cc = c if s > 0 else -c
            prev = t.get(key)
            t[key] = cc if prev is None else prev + cc
        return ExactPolynomial(t)

    def evaluate(self, point):
        """Exact evaluation at a rational point; returns a Coefficient."""
        point = [_as_fraction(v) for v in point]
        acc = COEFF_ZERO
        for m, c in self._terms.items():
            v = point[0] ** m[0] * point[1] ** m[1] * point[2] ** m[2]
            acc = acc + c.scale(v)
        return acc


# Basic invariants of the octahedral group: power sums of the squared variables.
def _power_sum(p: int) -> ExactPolynomial:
    return ExactPolynomial(
        {(p, 0, 0): COEFF_ONE, (0, p, 0): COEFF_ONE, (0, 0, p): COEFF_ONE}
    )


THETA_DEGREES = (2, 4, 6)
THETA_X = (_power_sum(2), _power_sum(4), _power_sum(6))

_theta_power_cache: dict[tuple[int, int, int], ExactPolynomial] = {}


def theta_monomial_x(m) -> ExactPolynomial:
    """Expansion of theta1^i theta2^j theta3^k into x-variables (cached)."""
    m = tuple(m)
    got = _theta_power_cache.get(m)
    if got is not None:
        return got
    i, j, k = m
    if i + j + k == 0:
        result = ExactPolynomial.one()
    else:
        # peel one generator to reuse cached lower powers
        if i > 0:
            result = theta_monomial_x((i - 1, j, k)) * THETA_X[0]
        elif j > 0:
            result = theta_monomial_x((i, j - 1, k)) * THETA_X[1]
        else:
            result = theta_monomial_x((i, j, k - 1)) * THETA_X[2]
    _theta_power_cache[m] = result
    return result


class ThetaPolynomial(_SparsePoly):
    """Polynomial in the basic invariants theta1, theta2, theta3.

    Keys (i, j, k) mean theta1^i theta2^j theta3^k; the weighted degree
    (degree after expansion into x) is 2i + 4j + 6k.
    """

    __slots__ = ()

    @staticmethod
    def theta(i: int) -> "ThetaPolynomial":
        m = [0, 0, 0]
        m[i] = 1
        return ThetaPolynomial({tuple(m): COEFF_ONE})

    def weighted_degree(self) -> int:
        if not self._terms:
            return -1
        return max(2 * i + 4 * j + 6 * k for (i, j, k) in self._terms)

    def expand(self) -> ExactPolynomial:
        acc = ExactPolynomial.zero()
        for m, c in self._terms.items():
            acc = acc + theta_monomial_x(m).scale(c)
        return acc


def poly_arith(p, q, op: str):
    """Spec-level arithmetic entry point: op is 'add' or 'mul'."""
    if op == "add":
        return p + q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown op {op!r}")


def expand_theta(t: ThetaPolynomial) -> ExactPolynomial:
    return t.expand()


def theta_monomials_of_weighted_degree(d: int):
    """All (i, j, k) with 2i + 4j + 6k = d, canonical (descending) order."""
    out = []
    for k in range(d // 6 + 1):
        for j in range((d - 6 * k) // 4 + 1):
            rem = d - 6 * k - 4 * j
            if rem % 2 == 0:
                out.append((rem // 2, j, k))
    out.sort(key=monomial_key, reverse=True)
    return out


def theta_monomials_upto(d: int):
    """All theta-monomials of weighted degree <= d, canonical order by degree."""
    out = []
    for deg in range(0, d + 1, 2):
        out.extend(theta_monomials_of_weighted_degree(deg))
    return out


_x_monomial_cache: dict[int, list] = {}


def x_monomials(k: int):
    """Monomial exponent triples of total degree k, canonical (descending) order."""
    got = _x_monomial_cache.get(k)
    if got is None:
        got = [
            (a, b, k - a - b)
            for a in range(k, -1, -1)
            for b in range(k - a, -1, -1)
        ]
        got.sort(key=monomial_key, reverse=True)
        _x_monomial_cache[k] = got
    return got


class RationalMatrix:
    """Dense exact-rational matrix with Gaussian-elimination solvers."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        self.entries = [[_as_fraction(v) for v in row] for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError("ragged matrix")

    @staticmethod
    def identity(n: int) -> "RationalMatrix":
        return RationalMatrix(
            [[_ONE if i == j else _ZERO for j in range(n)] for i in range(n)]
        )

    @staticmethod
    def zeros(r: int, c: int) -> "RationalMatrix":
        return RationalMatrix([[_ZERO] * c for _ in range(r)])

    def copy(self) -> "RationalMatrix":
        return RationalMatrix([row[:] for row in self.entries])

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def __eq__(self, other):
        return (
            isinstance(other, RationalMatrix)
            and self.entries == other.entries
        )

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)]
        )

    def matmul(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = [[_ZERO] * other.cols for _ in range(self.rows)]
        for i in range(self.rows):
            rowi = self.entries[i]
            for k in range(self.cols):
                a = rowi[k]
                if a == 0:
                    continue
                rowk = other.entries[k]
                oi = out[i]
                for j in range(other.cols):
                    if rowk[j] != 0:
                        oi[j] += a * rowk[j]
        return RationalMatrix(out)

    def matvec(self, v):
        v = [_as_fraction(x) for x in v]
        if len(v) != self.cols:
            raise ValueError("shape mismatch")
        return [
            sum((self.entries[i][j] * v[j] for j in range(self.cols)), _ZERO)
            for i in range(self.rows)
        ]

    def rref(self):
        """Reduced row echelon form; returns (matrix, pivot column list)."""
        m = [row[:] for row in self.entries]
        pivots = []
        r = 0
        for c in range(self.cols):
            if r == self.rows:
                break
            pivot_row = None
            for i in range(r, self.rows):
                if m[i][c] != 0:
                    pivot_row = i
                    break
            if pivot_row is None:
                continue
            m[r], m[pivot_row] = m[pivot_row], m[r]
            pv = m[r][c]
            m[r] = [v / pv for v in m[r]]
            for i in range(self.rows):
                if i != r and m[i][c] != 0:
                    f = m[i][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
        return RationalMatrix(m), pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def solve(self, b):
        """Solve A x = b exactly; A square or overdetermined-consistent."""
        b = [_as_fraction(v) for v in b]
        if len(b) != self.rows:
            raise ValueError("shape mismatch")
        aug = RationalMatrix(
            [self.entries[i] + [b[i]] for i in range(self.rows)]
        )
        red, pivots = aug.rref()
        if self.cols in pivots:
            raise Inconsistent("no solution")
        if len(pivots) < self.cols:
            raise Singular("rank-deficient system")
        x = [_ZERO] * self.cols
        for r, c in enumerate(pivots):
            x[c] = red.entries[r][self.cols]
        return x

    def inverse(self) -> "RationalMatrix":
        if self.rows != self.cols:
            raise ValueError("inverse of non-square matrix")
        n = self.rows
        aug = RationalMatrix(
            [
                self.entries[i] + [_ONE if i == j else _ZERO for j in range(n)]
                for i in range(n)
            ]
        )
        red, pivots = aug.rref()
        if pivots != list(range(n)):
            raise Singular("matrix is singular")
        return RationalMatrix([row[n:] for row in red.entries])

    def inverse_inf_norm(self) -> Fraction:
        """Row-sum norm of the inverse, as an exact rational."""
        inv = self.inverse()
        return max(
            sum((abs(v) for v in row), _ZERO) for row in inv.entries
        )


def solve_exact(a: RationalMatrix, b):
    return a.solve(b)


# Reflections generating the full symmetry group; invariance under these
# three implies invariance under all 48 signed permutations.
GENERATOR_MATRICES = (
    ((-1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((1, 0, 0), (0, 0, -1), (0, -1, 0)),
    ((0, 0, 1), (0, 1, 0), (1, 0, 0)),
)


def is_b3_invariant(p: ExactPolynomial) -> bool:
    return all(p.apply_group_element(g) == p for g in GENERATOR_MATRICES)


# Per-degree contraction data: (theta monomial list, selected x-monomial rows,
# inverse of the square selection, full expansion columns).
_contract_cache: dict[int, tuple] = {}


def _contraction_data(degree: int):
    got = _contract_cache.get(degree)
    if got is not None:
        return got
    thetas = theta_monomials_of_weighted_degree(degree)
    monoms = x_monomials(degree)
    mono_index = {m: i for i, m in enumerate(monoms)}
    # column j = expansion of theta monomial j over x-monomials of this degree
    cols = []
    for t in thetas:
        vec = [_ZERO] * len(monoms)
        for m, c in theta_monomial_x(t).items():
            vec[mono_index[m]] = c.rational_value()
        cols.append(vec)
    # greedy row selection in canonical order to get an invertible square system
    selected = []
    probe_rows = []
    for ri in range(len(monoms)):
        if len(selected) == len(thetas):
            break
        candidate = probe_rows + [[cols[j][ri] for j in range(len(thetas))]]
        if RationalMatrix(candidate).rank() == len(candidate):
            probe_rows = candidate
            selected.append(ri)
    if len(selected) != len(thetas):
        raise Singular("theta monomials linearly dependent (internal error)")
    inv = RationalMatrix(probe_rows).inverse()
    data = (thetas, selected, inv, cols, mono_index)
    _contract_cache[degree] = data
    return data


def contract_theta(p: ExactPolynomial) -> ThetaPolynomial:
    """Write an invariant polynomial in the basic invariants, exactly.

    Raises NotInvariant if p is not fixed by the group, NotInTheRing if
    the exact solve fails to reproduce p (cannot happen for genuine
    invariants; kept as an internal consistency error).
    """
    if p.is_zero():
        return ThetaPolynomial()
    if not is_b3_invariant(p):
        raise NotInvariant("polynomial is not fixed by the octahedral group")
    out: dict[tuple[int, int, int], Coefficient] = {}
    for degree, part in p.homogeneous_components().items():
        if degree % 2:
            raise NotInvariant("invariant polynomials have even terms only")
        thetas, selected, inv, cols, mono_index = _contraction_data(degree)
        monoms = x_monomials(degree)
        # one exact solve per pi-exponent present in this component
        by_exp: dict[int, list[Fraction]] = {}
        for m, c in part.items():
            for e, q in c.items():
                by_exp.setdefault(e, [_ZERO] * len(monoms))[mono_index[m]] = q
        sol_by_exp = {}
        for e, vec in by_exp.items():
            rhs = [vec[ri] for ri in selected]
            sol = inv.matvec(rhs)
            # verify on the full row set: membership in the invariant ring
            for ri in range(len(monoms)):
                acc = _ZERO
                for j, cj in enumerate(sol):
                    if cj != 0:
                        acc += cj * cols[j][ri]
                if acc != vec[ri]:
                    raise NotInTheRing(
                        "exact expansion mismatch (internal error)"
                    )
            sol_by_exp[e] = sol
        for j, t in enumerate(thetas):
            terms = {
                e: sol[j] for e, sol in sol_by_exp.items() if sol[j] != 0
            }
            if terms:
                out[t] = Coefficient(terms)
    return ThetaPolynomial(out)
