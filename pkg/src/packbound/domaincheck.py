"""Rigorous nonpositivity check of the transformed function on the
bounded region D' = {s(x) < 0} minus the enlarged difference body.

The region is covered by axis-aligned cubes restricted to the fundamental
wedge 0 <= x1 <= x2 <= x3.  Each cube carries a certified gradient bound
nu_C (interval evaluation of the exact gradient over the box); a grid of
(N+1)^3 points then certifies nonpositivity when

    mu(C, N) < 0   and   nu_C * d(C, N) <= |mu(C, N)|,

where mu is the largest function value over grid points outside the
enlarged body and d(C, N) is (side/N) sqrt(3), halved when the cube
provably misses the body.  Cubes that would need grids beyond the split
threshold split into eight children, up to max_depth.

Two passes: a double-precision pass estimates the grid size per cube
(fast, vectorized); the interval pass then re-proves every retained cube
at exactly the recorded grid size, and re-proves discarded cubes
disjoint from the region, so the certificate never rests on floats.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import Position, Solid
from .intervals import IntervalScalar
from .polyalg import ThetaPolynomial, theta_monomial_x

SQRT3 = math.sqrt(3.0)
DEFAULT_SPLIT_THRESHOLD = 30
DEFAULT_MAX_DEPTH = 6


@dataclass(frozen=True)
class Cube:
    """Dyadic cube: corner index at refinement depth, side = delta / 2^depth."""

    corner: tuple[int, int, int]
    depth: int
    grid_size: int = 0  # 0 = discarded, >0 = certifying grid
    factor2: bool = False  # cube provably misses the enlarged body

    def children(self):
        cx, cy, cz = (2 * v for v in self.corner)
        return [
            Cube((cx + dx, cy + dy, cz + dz), self.depth + 1)
            for dx in (0, 1)
            for dy in (0, 1)
            for dz in (0, 1)
        ]

    def bounds_fraction(self, delta: Fraction):
        side = delta / (1 << self.depth)
        lo = [c * side for c in self.corner]
        return [(lo[i], lo[i] + side) for i in range(3)], side


@dataclass
class CheckReport:
    status: str  # 'Certified' | 'NonNegativeValue' | 'MaxGridSizeExceeded'
    detail: dict = field(default_factory=dict)
    cubes_processed: int = 0
    max_grid_size: int = 0
    cube_list: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def certified(self) -> bool:
        return self.status == "Certified"


def distance_bound(side: float, n: int, factor2: bool) -> float:
    """d(C, N): grid covering radius, halved off the body."""
    d = side / n * SQRT3
    return d / 2 if factor2 else d


# ---------------------------------------------------------------------------
# evaluators


def _as_interval_coefficients(fg) -> dict:
    """Accept a ThetaPolynomial or a ready {monomial: IntervalScalar} map."""
    if isinstance(fg, ThetaPolynomial):
        return {m: IntervalScalar.from_coefficient(c) for m, c in fg.items()}
    return {tuple(m): IntervalScalar.from_any(v) for m, v in fg.items()}


class ThetaEvaluator:
    """Evaluation of an invariant polynomial given in theta coordinates.

    Coefficients are held as intervals (exact coefficients become point
    enclosures), so certified solutions plug in directly.  Horner-style
    nesting in theta1 (innermost), then theta2, theta3 keeps interval
    widths tight compared to monomial summation; the float path uses
    midpoints and serves the estimation pass only.
    """

    def __init__(self, fg):
        self.coeffs = _as_interval_coefficients(fg)
        nested: dict = {}
        for (i, j, k), c in self.coeffs.items():
            nested.setdefault(k, {}).setdefault(j, {})[i] = c
        self.nested = {
            k: {
                j: [row.get(i) for i in range(max(row) + 1)]
                for j, row in by_j.items()
            }
            for k, by_j in nested.items()
        }
        self.float_nested = {
            k: {
                j: [None if c is None else float(c.mid()) for c in coeffs]
                for j, coeffs in by_j.items()
            }
            for k, by_j in self.nested.items()
        }
        # gradient: d/dx_i of sum_m c_m expand(theta^m), with exact rational
        # monomial-expansion derivatives weighted by the interval coefficients
        self.gradient = []
        for axis in range(3):
            parts = []
            for m, c in self.coeffs.items():
                dpoly = theta_monomial_x(m).derivative(axis)
                if not dpoly.is_zero():
                    terms = [
                        (mx, cx.rational_value()) for mx, cx in dpoly.items()
                    ]
                    parts.append((c, terms))
            self.gradient.append(parts)

    # -- doubles -------------------------------------------------------------

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        t1 = np.sum(x * x, axis=-1)
        x2 = x * x
        t2 = np.sum(x2 * x2, axis=-1)
        t3 = np.sum(x2 * x2 * x2, axis=-1)
        out = np.zeros_like(t1)
        for k, by_j in self.float_nested.items():
            acc_k = np.zeros_like(t1)
            for j, coeffs in by_j.items():
                acc = np.zeros_like(t1)
                for c in reversed(coeffs):
                    acc *= t1
                    if c is not None:
                        acc += c
                acc_k += acc * t2 ** j
            out += acc_k * t3 ** k
        return out

    # -- intervals -------------------------------------------------------------

    def eval_interval_box(self, box) -> IntervalScalar:
        box = [IntervalScalar.from_any(v) for v in box]
        sq = [v * v for v in box]
        t1 = sq[0] + sq[1] + sq[2]
        q = [s * s for s in sq]
        t2 = q[0] + q[1] + q[2]
        t3 = q[0] * sq[0] + q[1] * sq[1] + q[2] * sq[2]
        return self.eval_interval_theta(t1, t2, t3)

    @staticmethod
    def axis_powers(coord: IntervalScalar):
        """(square, fourth, sixth) powers for per-axis grid reuse."""
        sq = coord * coord
        q = sq * sq
        return sq, q, q * sq

    def eval_interval_theta(self, t1, t2, t3) -> IntervalScalar:
        zero = IntervalScalar.exact(0)
        out = zero
        for k, by_j in self.nested.items():
            acc_k = zero
            for j, coeffs in by_j.items():
                acc = zero
                for c in reversed(coeffs):
                    acc = acc * t1
                    if c is not None:
                        acc = acc + c
                acc_k = acc_k + acc * (t2 ** j)
            out = out + acc_k * (t3 ** k)
        return out

    def gradient_norm_bound(self, box) -> IntervalScalar:
        box = [IntervalScalar.from_any(v) for v in box]
        powers = [{0: IntervalScalar.exact(1)} for _ in range(3)]

        def pw(axis, e):
            got = powers[axis].get(e)
            if got is None:
                got = box[axis] ** e
                powers[axis][e] = got
            return got

        acc = IntervalScalar.exact(0)
        for parts in self.gradient:
            comp = IntervalScalar.exact(0)
            for c, terms in parts:
                val = IntervalScalar.exact(0)
                for (a, b, c2), q in terms:
                    val = val + IntervalScalar.from_fraction(q) * pw(0, a) * pw(1, b) * pw(2, c2)
                comp = comp + c * val
            m = comp.mag()
            acc = acc + IntervalScalar.exact(m) * IntervalScalar.exact(m)
        return acc.sqrt()


def gradient_bound(evaluator: ThetaEvaluator, cube: Cube, delta: Fraction):
    """Certified nu_C >= sup |grad F| over the cube."""
    bounds, _side = cube.bounds_fraction(Fraction(delta))
    box = [
        IntervalScalar.from_fraction(lo).hull(IntervalScalar.from_fraction(hi))
        for lo, hi in bounds
    ]
    return evaluator.gradient_norm_bound(box)


# ---------------------------------------------------------------------------
# cover construction


def _wedge_feasible(lo, hi) -> bool:
    """Does the box meet {0 <= x1 <= x2 <= x3}?"""
    return lo[0] <= hi[1] and lo[0] <= hi[2] and lo[1] <= hi[2]


def build_cover(solid: Solid, alpha, delta) -> list[Cube]:
    """Cubes meeting D' in the fundamental wedge (conservative, depth 0).

    A cube is kept unless it provably misses {s < 0}, provably sits inside
    the enlarged body, or misses the wedge.
    """
    alpha = Fraction(alpha)
    delta = Fraction(delta)
    reach = 2 if solid.kind == "superball" else 1
    nmax = int(math.ceil(reach / float(delta))) + 1
    out = []
    for i in range(nmax):
        for j in range(nmax):
            for k in range(nmax):
                cube = Cube((i, j, k), 0)
                bounds, _ = cube.bounds_fraction(delta)
                lo = [b[0] for b in bounds]
                hi = [b[1] for b in bounds]
                if not _wedge_feasible(lo, hi):
                    continue
                keep, factor2 = _classify_cube(solid, alpha, bounds)
                if keep:
                    out.append(
                        Cube((i, j, k), 0, grid_size=0, factor2=factor2)
                    )
    return out


def _classify_cube(solid: Solid, alpha: Fraction, bounds):
    """(meets D' possibly?, provably outside the enlarged body?)."""
    box = [
        IntervalScalar.from_fraction(lo).hull(IntervalScalar.from_fraction(hi))
        for lo, hi in bounds
    ]
    outer = solid.membership_interval(box, "outer_ball")
    if outer == Position.EXTERIOR:
        return False, False
    body = solid.membership_interval(box, "difference_body", alpha)
    if body == Position.INTERIOR:
        return False, False
    return True, body == Position.EXTERIOR


# ---------------------------------------------------------------------------
# per-cube checks


def _grid_points_float(cube: Cube, delta: float, n: int) -> np.ndarray:
    side = delta / (1 << cube.depth)
    base = np.array(cube.corner, dtype=float) * side
    ticks = np.arange(n + 1) * (side / n)
    gx, gy, gz = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    pts = np.stack(
        [base[0] + gx.ravel(), base[1] + gy.ravel(), base[2] + gz.ravel()],
        axis=1,
    )
    return pts


def check_cube_float(
    cube: Cube,
    n: int,
    evaluator: ThetaEvaluator,
    solid: Solid,
    alpha: float,
    delta: float,
    nu: float,
    margin: float = 0.8,
):
    """Double-precision version of the grid test.

    Returns ('passed', mu) | ('need_larger', mu) | ('nonneg', point).
    """
    pts = _grid_points_float(cube, delta, n)
    pos = solid.membership_batch(pts, "difference_body", alpha)
    outside = pts[pos >= 0]
    side = delta / (1 << cube.depth)
    if len(outside) == 0:
        # all grid points inside the body; cube itself may still poke out
        return "need_larger", None
    vals = evaluator.eval_batch(outside)
    mu = float(vals.max())
    if mu >= 0:
        return "nonneg", tuple(float(v) for v in outside[int(vals.argmax())])
    if nu * distance_bound(side, n, cube.factor2) <= margin * (-mu):
        return "passed", mu
    return "need_larger", mu


def check_cube(
    cube: Cube,
    n: int,
    evaluator: ThetaEvaluator,
    solid: Solid,
    alpha: Fraction,
    delta: Fraction,
    nu: IntervalScalar | None = None,
):
    """Interval version: Passed | NeedLargerN | NonNegativeValue(point).

    mu is -infinity when no grid point lies provably outside the enlarged
    body; the cube then passes only when it is entirely certified inside.
    """
    if n < 2:
        raise ValueError("grid size must be at least 2")
    alpha = Fraction(alpha)
    delta = Fraction(delta)
    if nu is None:
        nu = gradient_bound(evaluator, cube, delta)
    bounds, side = cube.bounds_fraction(delta)
    step = side / n
    # per-axis exact coordinates, enclosures and power tables
    coords = [
        [bounds[axis][0] + a * step for a in range(n + 1)] for axis in range(3)
    ]
    axes = [
        [IntervalScalar.from_fraction(v) for v in coords[axis]]
        for axis in range(3)
    ]
    powers = [
        [ThetaEvaluator.axis_powers(v) for v in axes[axis]]
        for axis in range(3)
    ]
    mu_hi = None  # running max of interval upper bounds
    mu_lo = None
    for a in range(n + 1):
        sqa, qa, sa = powers[0][a]
        for b in range(n + 1):
            sqb, qb, sb = powers[1][b]
            t1_ab = sqa + sqb
            t2_ab = qa + qb
            t3_ab = sa + sb
            for c in range(n + 1):
                if not cube.factor2:
                    pos = solid.membership_exact(
                        (coords[0][a], coords[1][b], coords[2][c]),
                        "difference_body",
                        alpha,
                    )
                    if pos == Position.INTERIOR:
                        continue  # provably inside: excluded from mu
                sqc, qc, sc = powers[2][c]
                v = evaluator.eval_interval_theta(
                    t1_ab + sqc, t2_ab + qc, t3_ab + sc
                )
                if not v.strictly_negative():
                    x = (coords[0][a], coords[1][b], coords[2][c])
                    return "NonNegativeValue", tuple(float(t) for t in x)
                if mu_hi is None or v.hi > mu_hi:
                    mu_hi = v.hi
                if mu_lo is None or v.lo > mu_lo:
                    mu_lo = v.lo
    if mu_hi is None:
        # mu = -infinity; pass only if the whole cube is certified inside
        box = [
            IntervalScalar.from_fraction(lo).hull(IntervalScalar.from_fraction(hi))
            for lo, hi in bounds
        ]
        if solid.membership_interval(box, "difference_body", alpha) == Position.INTERIOR:
            return "Passed", None
        return "NeedLargerN", None
    d = IntervalScalar.from_fraction(side / n) * IntervalScalar.exact(3).sqrt()
    if cube.factor2:
        d = d / 2
    lhs = nu * d
    rhs = IntervalScalar.exact(abs(mu_hi))  # |mu| from the certified upper bound
    if lhs.hi <= rhs.lo:
        return "Passed", mu_hi
    return "NeedLargerN", mu_hi


# ---------------------------------------------------------------------------
# the two-pass driver


def _escalate(n: int) -> int:
    return max(n + 2, (3 * n + 1) // 2)


def _pass1_cube(cube, evaluator, solid, alpha_f, delta_f, split_threshold,
                max_depth, delta, alpha):
    """Double pass on one cube; returns (kept list, exception or None)."""
    kept = []
    stack = [cube]
    while stack:
        cur = stack.pop()
        bounds, _ = cur.bounds_fraction(delta)
        lo = [b[0] for b in bounds]
        hi = [b[1] for b in bounds]
        if not _wedge_feasible(lo, hi):
            continue
        keep, factor2 = _classify_cube(solid, alpha, bounds)
        if not keep:
            kept.append(
                Cube(cur.corner, cur.depth, grid_size=0, factor2=factor2)
            )
            continue
        cur = Cube(cur.corner, cur.depth, factor2=factor2)
        nu = float(gradient_bound(evaluator, cur, delta).hi)
        n = 2
        while True:
            verdict, payload = check_cube_float(
                cur, n, evaluator, solid, alpha_f, delta_f, nu
            )
            if verdict == "nonneg":
                return kept, ("NonNegativeValue", {"cube": cur.corner,
                                                   "depth": cur.depth,
                                                   "point": payload})
            if verdict == "passed":
                kept.append(
                    Cube(cur.corner, cur.depth, grid_size=n, factor2=cur.factor2)
                )
                break
            if n < split_threshold:
                n = _escalate(n)
                continue
            if cur.depth >= max_depth:
                return kept, ("MaxGridSizeExceeded", {"cube": cur.corner,
                                                      "depth": cur.depth,
                                                      "grid": n})
            stack.extend(cur.children())
            break
    return kept, None


def _pass2_cube(cube, evaluator, solid, alpha, delta):
    """Interval re-verification at the recorded grid size."""
    bounds, _ = cube.bounds_fraction(delta)
    if cube.grid_size == 0:
        box = [
            IntervalScalar.from_fraction(lo).hull(IntervalScalar.from_fraction(hi))
            for lo, hi in bounds
        ]
        outer = solid.membership_interval(box, "outer_ball")
        if outer == Position.EXTERIOR:
            return "Passed", None
        body = solid.membership_interval(box, "difference_body", alpha)
        if body == Position.INTERIOR:
            return "Passed", None
        return "DiscardUnproved", {"cube": cube.corner, "depth": cube.depth}
    verdict, payload = check_cube(
        cube, cube.grid_size, evaluator, solid, alpha, delta
    )
    if verdict == "Passed":
        return "Passed", None
    if verdict == "NonNegativeValue":
        return "NonNegativeValue", {"cube": cube.corner, "depth": cube.depth,
                                    "point": payload}
    return "GridSizeInsufficient", {"cube": cube.corner, "depth": cube.depth,
                                    "grid": cube.grid_size}


def default_delta(solid: Solid, alpha) -> Fraction:
    """Initial cube side: one sixteenth of the enlarged body's circumradius."""
    return Fraction(alpha) * solid.circumradius_bound() / 16


def check_domain(
    fg: ThetaPolynomial,
    solid: Solid,
    alpha,
    delta=None,
    n_start: int = 2,
    split_threshold: int = DEFAULT_SPLIT_THRESHOLD,
    max_depth: int = DEFAULT_MAX_DEPTH,
    threads: int = 1,
) -> CheckReport:
    """Two-pass rigorous nonpositivity check over D'.

    Pass 1 (doubles, epsilon membership) assigns grid sizes, splitting
    cubes past the threshold; pass 2 re-proves every cube with interval
    arithmetic at exactly the recorded sizes.  The verdict is independent
    of the thread count: failures are reported for the smallest offending
    cube in corner order.
    """
    import time

    t0 = time.time()
    alpha = Fraction(alpha)
    delta = Fraction(delta) if delta is not None else default_delta(solid, alpha)
    evaluator = ThetaEvaluator(fg)
    cover = build_cover(solid, alpha, delta)
    alpha_f, delta_f = float(alpha), float(delta)

    def run1(cube):
        return _pass1_cube(cube, evaluator, solid, alpha_f, delta_f,
                           split_threshold, max_depth, delta, alpha)

    results = _map_maybe_parallel(run1, cover, threads)
    cube_list = []
    failures = []
    for kept, exc in results:
        cube_list.extend(kept)
        if exc is not None:
            failures.append(exc)
    report = CheckReport(status="Certified")
    report.cube_list = sorted(
        cube_list, key=lambda c: (c.depth, c.corner)
    )
    report.cubes_processed = len(report.cube_list)
    report.max_grid_size = max(
        (c.grid_size for c in report.cube_list), default=0
    )
    if failures:
        failures.sort(key=lambda f: (f[1]["cube"], f[1].get("depth", 0)))
        report.status = failures[0][0]
        report.detail = failures[0][1]
        report.wall_time = time.time() - t0
        return report

    def run2(cube):
        return _pass2_cube(cube, evaluator, solid, alpha, delta)

    results2 = _map_maybe_parallel(run2, report.cube_list, threads)
    bad = [
        (verdict, payload)
        for verdict, payload in results2
        if verdict != "Passed"
    ]
    if bad:
        bad.sort(key=lambda f: (f[1]["cube"], f[1].get("depth", 0)))
        verdict, payload = bad[0]
        report.status = (
            "NonNegativeValue" if verdict == "NonNegativeValue"
            else "MaxGridSizeExceeded"
        )
        report.detail = payload
    report.wall_time = time.time() - t0
    return report


def _map_maybe_parallel(fn, items, threads):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# cube_list file format: "cx cy cz depth grid_size factor2"


def write_cube_list(cubes, path):
    with open(path, "w") as fh:
        for c in cubes:
            fh.write(
                f"{c.corner[0]} {c.corner[1]} {c.corner[2]} "
                f"{c.depth} {c.grid_size} {int(c.factor2)}\n"
            )


def read_cube_list(path):
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cx, cy, cz, depth, gs, f2 = line.split()
            out.append(
                Cube(
                    (int(cx), int(cy), int(cz)),
                    int(depth),
                    grid_size=int(gs),
                    factor2=bool(int(f2)),
                )
            )
    return out


def scan_alpha(fg: ThetaPolynomial, solid: Solid, delta,
               alphas=None, spacing=Fraction(1, 50)) -> Fraction | None:
    """Float-only scan for the smallest alpha with no positive sample.

    Quick estimate on a fine grid; the rigorous pass still has to confirm
    the returned value.
    """
    if alphas is None:
        alphas = [Fraction(1) + Fraction(k, 1000) for k in
                  (0, 1, 2, 5, 10, 20, 30, 50)]
    evaluator = ThetaEvaluator(fg)
    pts = []
    reach = 2.0 if solid.kind == "superball" else 1.0
    n = int(reach / float(spacing)) + 1
    sp = float(spacing)
    for i in range(n + 1):
        for j in range(i, n + 1):
            for k in range(j, n + 1):
                pts.append((i * sp, j * sp, k * sp))
    pts = np.array(pts)
    inside_ball = solid.membership_batch(pts, "outer_ball") < 0
    pts = pts[inside_ball]
    vals = evaluator.eval_batch(pts)
    for alpha in alphas:
        pos = solid.membership_batch(pts, "difference_body", float(alpha))
        outside = pos >= 0
        if len(vals[outside]) and float(vals[outside].max()) < 0:
            return alpha
    return None
