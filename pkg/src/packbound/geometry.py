"""Solid descriptors, membership predicates, volumes and density formulas.

Two kinds of solids are supported: superballs (unit balls of the l^p norm)
and polytopes whose difference body K - K is described by an inequality
system with exact rational data.

Scaling conventions.  For even p the superball K is rescaled so that its
difference body is exactly {x : x1^p + x2^p + x3^p <= 2}, the sublevel
surface used by the sum-of-squares cutoff; for odd p the cutoff uses the
next even exponent and the difference body inscribes it, touching at the
axes.  Polytopes work in coordinates rescaled to unit circumradius of
K - K, so the cutoff is always |x|^2 - 1.  Packing density is
scale-invariant, so reported bounds are unaffected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import gmpy2
import numpy as np

from .intervals import IntervalScalar
from .polyalg import ExactPolynomial, ThetaPolynomial, contract_theta


class Position(enum.Enum):
    INTERIOR = "interior"
    EXTERIOR = "exterior"
    BORDER = "border"


class NoRoot(Exception):
    pass


DEFAULT_EPS = 1e-9


@dataclass(frozen=True)
class Halfspace:
    normal: tuple[Fraction, Fraction, Fraction]
    rhs: Fraction


@dataclass(frozen=True)
class Solid:
    kind: str  # 'superball' | 'polytope'
    name: str
    p: Fraction | None = None
    halfspaces: tuple[Halfspace, ...] = ()
    circumradius_sq: Fraction | None = None
    volume: Fraction | None = None  # volume of K at config scale
    volume_ratio: Fraction | None = None  # vol(K - K) / vol(K)
    default_alpha: Fraction = Fraction(1)

    # -- construction ------------------------------------------------------

    @staticmethod
    def superball(p) -> "Solid":
        p = Fraction(p)
        if p < 1:
            raise ValueError("superball exponent must be >= 1")
        return Solid(kind="superball", name=f"superball p={p}", p=p)

    @staticmethod
    def parse_config(text: str, name: str = "") -> "Solid":
        fields: dict = {}
        ineqs = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("superball"):
                p = Fraction(line.split("p=", 1)[1])
                return Solid.superball(p)
            key, rest = line.split(None, 1)
            if key == "ineq":
                a, b, c, rhs = (Fraction(v) for v in rest.split())
                ineqs.append(Halfspace(normal=(a, b, c), rhs=rhs))
            else:
                fields[key] = rest
        for h in ineqs:
            if not h.rhs > 0:
                raise ValueError("origin must be strictly interior to K - K")
        return Solid(
            kind="polytope",
            name=fields.get("name", name),
            halfspaces=tuple(ineqs),
            circumradius_sq=Fraction(fields["circumradius_sq"]),
            volume=Fraction(fields["volume"]),
            volume_ratio=Fraction(fields["volume_ratio"]),
            default_alpha=Fraction(fields.get("alpha", 1)),
        )

    @staticmethod
    def load(spec: str) -> "Solid":
        """Load 'superball:p=4', a bundled name like 'tetra', or a file path."""
        if spec.startswith("superball"):
            return Solid.superball(Fraction(spec.split("p=", 1)[1]))
        try:
            data = (
                resources.files("packbound").joinpath(f"data/{spec}.cfg").read_text()
            )
            return Solid.parse_config(data, name=spec)
        except FileNotFoundError:
            with open(spec) as fh:
                return Solid.parse_config(fh.read(), name=spec)

    # -- cutoff polynomial ---------------------------------------------------

    def sos_exponent(self) -> int:
        """Even exponent used by the sum-of-squares cutoff (superballs).

        p itself when p is an even integer, the next larger even integer
        otherwise.
        """
        if self.kind != "superball":
            raise ValueError("sos_exponent is a superball notion")
        p = self.p
        if p.denominator == 1 and p.numerator % 2 == 0:
            return int(p)
        return 2 * (int(p) // 2) + 2

    def cutoff_theta(self) -> ThetaPolynomial:
        """The invariant cutoff s with {s < 0} bounded and containing K - K."""
        if self.kind == "polytope":
            # unit circumradius coordinates: s = |x|^2 - 1
            return ThetaPolynomial({(1, 0, 0): 1, (0, 0, 0): -1})
        q = self.sos_exponent()
        power_sum = ExactPolynomial(
            {(q, 0, 0): 1, (0, q, 0): 1, (0, 0, q): 1}
        )
        s = contract_theta(power_sum)
        return s + ThetaPolynomial({(0, 0, 0): -2})

    def cutoff_degree_half(self) -> int:
        """d_s where deg s = 2 d_s."""
        return 1 if self.kind == "polytope" else self.sos_exponent() // 2

    def sample_region_empty(self) -> bool:
        """True when {s<0} minus the open difference body is empty (pure SOS)."""
        return (
            self.kind == "superball"
            and self.p.denominator == 1
            and self.p.numerator % 2 == 0
        )

    # -- membership ----------------------------------------------------------

    def _config_scale_float(self) -> float:
        return math.sqrt(float(self.circumradius_sq))

    def membership(self, x, region: str, mode: str = "float_eps",
                   alpha=1, eps: float = DEFAULT_EPS) -> Position:
        """Position of a point (or box, in interval mode) for a region.

        region: 'difference_body' (the alpha-enlarged open body) or
        'outer_ball' (the cutoff sublevel set).  mode: 'float_eps',
        'interval' (certified, accepts boxes) or 'exact' (rational points).
        """
        if mode == "float_eps":
            return self.membership_float(
                tuple(float(v) for v in x), region, float(alpha), eps
            )
        if mode == "interval":
            return self.membership_interval(x, region, Fraction(alpha))
        if mode == "exact":
            return self.membership_exact(x, region, Fraction(alpha))
        raise ValueError(f"unknown mode {mode!r}")

    def membership_float(
        self, x, region: str, alpha: float = 1.0, eps: float = DEFAULT_EPS
    ) -> Position:
        """Float membership with tolerance eps (border within eps)."""
        x = tuple(float(v) for v in x)
        values = []
        if region == "difference_body":
            if self.kind == "superball":
                p = float(self.p)
                if self.sample_region_empty():
                    values.append(
                        sum(abs(v / alpha) ** p for v in x) - 2.0
                    )
                else:
                    # difference body is 2^(1/p') B^p, inscribed in the cutoff
                    scale = 2.0 ** (1.0 / self.sos_exponent())
                    values.append(
                        sum(abs(v / (alpha * scale)) ** p for v in x) - 1.0
                    )
            else:
                sc = self._config_scale_float() / alpha
                for h in self.halfspaces:
                    a = h.normal
                    values.append(
                        (float(a[0]) * x[0] + float(a[1]) * x[1] + float(a[2]) * x[2])
                        * sc
                        - float(h.rhs)
                    )
        elif region == "outer_ball":
            if self.kind == "superball":
                q = self.sos_exponent()
                values.append(x[0] ** q + x[1] ** q + x[2] ** q - 2.0)
            else:
                values.append(x[0] ** 2 + x[1] ** 2 + x[2] ** 2 - 1.0)
        else:
            raise ValueError(f"unknown region {region!r}")
        if any(v > eps for v in values):
            return Position.EXTERIOR
        if all(v < -eps for v in values):
            return Position.INTERIOR
        return Position.BORDER

    def membership_interval(self, box, region: str, alpha=Fraction(1)) -> Position:
        """Certified membership of a point or box of IntervalScalars.

        INTERIOR/EXTERIOR are proved; BORDER means the box straddles (or
        the arithmetic could not separate it).
        """
        box = [IntervalScalar.from_any(v) for v in box]
        alpha_iv = IntervalScalar.from_fraction(Fraction(alpha))
        values = []
        if region == "difference_body":
            if self.kind == "superball":
                p = self.p
                if self.sample_region_empty():
                    acc = IntervalScalar.exact(0)
                    for v in box:
                        acc = acc + (abs(v) / alpha_iv) ** int(p)
                    values.append(acc - 2)
                else:
                    q = self.sos_exponent()
                    # |x| <= alpha * 2^(1/q) along the p-norm: compare
                    # sum |x_i/alpha|^p against 2^(p/q) via integer powers
                    if p.denominator != 1:
                        raise NotImplementedError(
                            "interval membership for non-integer p"
                        )
                    acc = IntervalScalar.exact(0)
                    for v in box:
                        acc = acc + (abs(v) / alpha_iv) ** int(p)
                    # acc^q vs 2^p: both sides integer powers, stays exactish
                    values.append(acc ** q - 2 ** int(p))
            else:
                for normals, rhs in _polytope_interval_data(
                    self, Fraction(alpha), _iv_precision()
                ):
                    acc = IntervalScalar.exact(0)
                    for a, v in zip(normals, box):
                        acc = acc + a * v
                    values.append(acc - rhs)
        elif region == "outer_ball":
            if self.kind == "superball":
                q = self.sos_exponent()
                acc = IntervalScalar.exact(0)
                for v in box:
                    acc = acc + v ** q
                values.append(acc - 2)
            else:
                acc = IntervalScalar.exact(0)
                for v in box:
                    acc = acc + v * v
                values.append(acc - 1)
        else:
            raise ValueError(f"unknown region {region!r}")
        if any(v.strictly_positive() for v in values):
            return Position.EXTERIOR
        if all(v.strictly_negative() for v in values):
            return Position.INTERIOR
        return Position.BORDER

    def membership_exact(self, x, region: str, alpha=Fraction(1)) -> Position:
        """Exact membership for rational points (no rounding at all).

        Irrational scale factors are compared through squared quantities,
        so the verdict is rigorous; useful for grid points of the domain
        checker.
        """
        x = tuple(Fraction(v) for v in x)
        alpha = Fraction(alpha)
        strict_in = True
        if region == "difference_body":
            if self.kind == "superball":
                p = self.p
                if p.denominator != 1:
                    raise NotImplementedError("exact membership needs integer p")
                pi = int(p)
                s = sum(abs(v / alpha) ** pi for v in x)
                if self.sample_region_empty():
                    lhs, rhs = s, Fraction(2)
                else:
                    q = self.sos_exponent()
                    lhs, rhs = s ** q, Fraction(2) ** pi
                if lhs > rhs:
                    return Position.EXTERIOR
                strict_in = lhs < rhs
            else:
                r = self.circumradius_sq
                for h in self.halfspaces:
                    lhs = sum(a * v for a, v in zip(h.normal, x))
                    rhs = alpha * h.rhs
                    if lhs <= 0:
                        continue  # satisfied strictly (rhs > 0)
                    lhs2, rhs2 = lhs * lhs * r, rhs * rhs
                    if lhs2 > rhs2:
                        return Position.EXTERIOR
                    if lhs2 == rhs2:
                        strict_in = False
        elif region == "outer_ball":
            if self.kind == "superball":
                q = self.sos_exponent()
                v = sum(t ** q for t in x) - 2
            else:
                v = sum(t * t for t in x) - 1
            if v > 0:
                return Position.EXTERIOR
            strict_in = v < 0
        else:
            raise ValueError(f"unknown region {region!r}")
        return Position.INTERIOR if strict_in else Position.BORDER

    def membership_batch(self, points: np.ndarray, region: str, alpha: float = 1.0,
                         eps: float = DEFAULT_EPS) -> np.ndarray:
        """Vectorized float membership: -1 interior, 0 border, +1 exterior."""
        x = np.asarray(points, dtype=float)
        if region == "difference_body":
            if self.kind == "superball":
                p = float(self.p)
                if self.sample_region_empty():
                    vals = np.sum(np.abs(x / alpha) ** p, axis=1) - 2.0
                else:
                    scale = 2.0 ** (1.0 / self.sos_exponent())
                    vals = np.sum(np.abs(x / (alpha * scale)) ** p, axis=1) - 1.0
                worst = vals
                best = vals
            else:
                sc = self._config_scale_float() / alpha
                normals = np.array(
                    [[float(v) for v in h.normal] for h in self.halfspaces]
                )
                rhs = np.array([float(h.rhs) for h in self.halfspaces])
                vals = x @ normals.T * sc - rhs
                worst = vals.max(axis=1)
                best = worst
        elif region == "outer_ball":
            if self.kind == "superball":
                q = self.sos_exponent()
                worst = np.sum(x ** q, axis=1) - 2.0
            else:
                worst = np.sum(x * x, axis=1) - 1.0
            best = worst
        else:
            raise ValueError(f"unknown region {region!r}")
        out = np.zeros(len(x), dtype=np.int8)
        out[worst > eps] = 1
        out[best < -eps] = -1
        return out

    def circumradius_bound(self) -> Fraction:
        """Rational upper bound on the circumradius of the working-scale
        difference body (exactly 1 for polytopes)."""
        if self.kind == "polytope":
            return Fraction(1)
        # superball cutoff region: sqrt(3) * (2/3)^(1/q), bounded above
        q = self.sos_exponent()
        value = math.sqrt(3.0) * (2.0 / 3.0) ** (1.0 / q)
        return Fraction(math.ceil(value * 1024), 1024)

    # -- volumes -------------------------------------------------------------

    def body_volume_interval(self) -> IntervalScalar:
        """Certified volume of K in the working (cutoff) coordinates."""
        if self.kind == "superball":
            p = self.p
            vol = superball_volume_interval(p)
            # K is scaled by lambda = 2^(1/q) / 2 with q the cutoff exponent
            q = self.sos_exponent()
            lam3 = _two_pow_interval(Fraction(3, q)) / 8
            return vol * lam3
        # polytope: config volume scaled to unit circumradius
        r32 = (
            IntervalScalar.from_fraction(self.circumradius_sq).sqrt()
            ** 3
        )
        return IntervalScalar.from_fraction(self.volume) / r32


def _iv_precision():
    from .intervals import get_precision

    return get_precision()


@lru_cache(maxsize=64)
def _polytope_interval_data(solid, alpha: Fraction, precision: int):
    """Halfspace data pre-scaled to unit circumradius over alpha (cached)."""
    sc = IntervalScalar.from_fraction(solid.circumradius_sq).sqrt() / (
        IntervalScalar.from_fraction(alpha)
    )
    out = []
    for h in solid.halfspaces:
        normals = tuple(IntervalScalar.from_fraction(a) * sc for a in h.normal)
        out.append((normals, IntervalScalar.from_fraction(h.rhs)))
    return tuple(out)


def _two_pow_interval(e: Fraction) -> IntervalScalar:
    """Enclosure of 2^e for rational e."""
    num, den = e.numerator, e.denominator
    base = IntervalScalar.exact(2) ** num
    if den == 1:
        return base
    # den-th root via exp(log/den)
    from .intervals import _DOWN, _UP  # noqa: SLF001 - module-internal

    lo = _DOWN.exp(_DOWN.div(_DOWN.log(base.lo), den))
    hi = _UP.exp(_UP.div(_UP.log(base.hi), den))
    return IntervalScalar(lo, hi)


def superball_volume(p) -> float:
    """vol B^p_3 = 8 Gamma(1 + 1/p)^3 / Gamma(1 + 3/p), double precision."""
    p = float(p)
    return float(
        8.0 * math.gamma(1.0 + 1.0 / p) ** 3 / math.gamma(1.0 + 3.0 / p)
    )


def _gamma_interval(x: Fraction) -> IntervalScalar:
    from .intervals import _DOWN, _UP  # noqa: SLF001

    pt = IntervalScalar.from_fraction(x)
    candidates_lo = [_DOWN.gamma(pt.lo), _DOWN.gamma(pt.hi)]
    candidates_hi = [_UP.gamma(pt.lo), _UP.gamma(pt.hi)]
    lo, hi = min(candidates_lo), max(candidates_hi)
    # Gamma has a single positive minimum near 1.4616; widen if straddled
    if pt.lo < Fraction(14617, 10000) < pt.hi:
        lo = min(lo, gmpy2.mpfr("0.885603194410888"))
    return IntervalScalar(lo, hi)


def superball_volume_interval(p) -> IntervalScalar:
    p = Fraction(p)
    g1 = _gamma_interval(1 + Fraction(1, 1) / p)
    g3 = _gamma_interval(1 + Fraction(3, 1) / p)
    return IntervalScalar.exact(8) * g1 * g1 * g1 / g3


def c1_density(p, precision: int = 256) -> Fraction:
    """Density of the densest known lattice family for p >= 2.302.

    Finds the smallest positive root s of (s + 2^(-1/p))^p + 2 s^p = 1 by
    bisection to 1e-30, then evaluates
    vol(B^p_3) / (2^(3 - 2/p) (3 s + 2^(-1/p))).
    """
    p = Fraction(p)
    if p < Fraction(2302, 1000):
        raise ValueError("formula applies for p >= 2.302")
    with gmpy2.context(precision=precision):
        pf = gmpy2.mpfr(p.numerator) / p.denominator
        c = 2 ** (-1 / pf)

        def f(s):
            return (s + c) ** pf + 2 * s ** pf - 1

        lo, hi = gmpy2.mpfr(0), gmpy2.mpfr(1)
        if not (f(lo) < 0 and f(hi) > 0):
            raise NoRoot("bisection bracket failed")
        for _ in range(220):
            mid = (lo + hi) / 2
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < gmpy2.mpfr("1e-30"):
                break
        s = (lo + hi) / 2
        vol = (
            8 * gmpy2.gamma(1 + 1 / pf) ** 3 / gmpy2.gamma(1 + 3 / pf)
        )
        dens = vol / (2 ** (3 - 2 / pf) * (3 * s + c))
        num, den = dens.as_integer_ratio()
        return Fraction(int(num), int(den))


def bound_transfer(bound, volume_ratio):
    """Carry a density bound for K to a bound for (K - K)/2.

    Returns (reported bound, clamped flag); densities above one are clamped.
    """
    value = Fraction(bound) * Fraction(volume_ratio)
    if value > 1:
        return Fraction(1), True
    return value, False

