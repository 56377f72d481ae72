"""Rigorous certification of numeric solutions.

Pipeline: repair each solution block to a provably positive definite
interval matrix (floating Cholesky of A - lambda I, then A~ = L L^T +
lambda I held in intervals, so A~ >= lambda exactly); evaluate the cutoff
identity's residual coefficients with interval arithmetic; bound the
correction matrices T^pi through the exact infinity norm of the inverse
of a maximal independent entry submatrix; compare against the S2 block
eigenvalue floors; and assemble the final density bound
alpha^3 * f(0) * vol(K) as an interval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .intervals import IntervalScalar, get_precision, mpfr_to_hex
from .polyalg import RationalMatrix

# re-exported spec types
__all__ = [
    "IntervalScalar",
    "CertifiedSolution",
    "CertificationFailed",
    "NotRepairable",
    "BasisDeficient",
    "repair_psd",
    "residual_basis",
    "residual_bound",
    "certify",
]


class CertificationFailed(Exception):
    def __init__(self, message, failing=None):
        super().__init__(message)
        self.failing = failing


class NotRepairable(CertificationFailed):
    pass


class BasisDeficient(Exception):
    pass


LAMBDA_FLOOR = Fraction(1, 10 ** 40)


def _chol(a):
    n = len(a)
    l = [[mpfr(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            s = a[i][j]
            for k in range(j):
                s -= l[i][k] * l[j][k]
            if i == j:
                if not s > 0:
                    return None
                l[i][j] = gmpy2.sqrt(s)
            else:
                l[i][j] = s / l[j][j]
    return l


def _shifted(a, lam):
    n = len(a)
    return [
        [a[i][j] - (lam if i == j else 0) for j in range(n)] for i in range(n)
    ]


def repair_psd(a, lam_floor: Fraction = LAMBDA_FLOOR):
    """Eigenvalue-floor repair of a symmetric float matrix.

    Binary search (to a factor of two) for the largest lambda such that
    a - lambda I admits a floating Cholesky factor L; returns
    (a_tilde, lambda, L) where a_tilde = L L^T + lambda I as an interval
    matrix.  a_tilde is positive definite with least eigenvalue >= lambda
    by construction, whatever floating errors occurred inside the search.

    Raises NotRepairable when even the floor shift fails.
    """
    n = len(a)
    if n == 0:
        raise NotRepairable("empty block")
    with gmpy2.context(precision=get_precision()):
        floor_v = mpfr(lam_floor.numerator) / lam_floor.denominator
        if _chol(_shifted(a, floor_v)) is None:
            raise NotRepairable(
                "matrix is not positive definite above the lambda floor",
                failing="repair_psd",
            )
        lo = floor_v
        hi = min(a[i][i] for i in range(n))  # min eigenvalue <= min diagonal
        if hi <= lo:
            hi = 2 * lo
        if _chol(_shifted(a, hi)) is not None:
            lo = hi
        else:
            while hi / lo > 2:
                mid = gmpy2.sqrt(lo * hi)
                if _chol(_shifted(a, mid)) is not None:
                    lo = mid
                else:
                    hi = mid
        lam = lo
        l_factor = _chol(_shifted(a, lam))
        if l_factor is None:
            raise NotRepairable("Cholesky failed at the accepted shift")
        tilde = _interval_llt(l_factor, lam)
        return tilde, lam, l_factor


def _interval_llt(l_factor, lam):
    """Interval enclosure of L L^T + lambda I."""
    n = len(l_factor)
    lam_iv = IntervalScalar.exact(lam)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            acc = IntervalScalar.exact(0)
            for k in range(j + 1):
                acc = acc + (
                    IntervalScalar.exact(l_factor[i][k])
                    * IntervalScalar.exact(l_factor[j][k])
                )
            if i == j:
                acc = acc + lam_iv
            out[i][j] = acc
            out[j][i] = acc
    return out


def _scale_interval_matrix(mat, rho: Fraction):
    r = IntervalScalar.from_fraction(rho)
    return [[v * r for v in row] for row in mat]


@dataclass
class ResidualBasis:
    """Maximal independent set of V-entry polynomials with its square system."""

    elements: list  # (irrep, i, j) positions into the S2 blocks
    monomials: tuple  # row monomials of the full coefficient matrix
    selected_rows: list  # indices of the invertible square submatrix
    ainv_inf_norm: Fraction
    placement: dict  # irrep -> number of diagonal / off-diagonal placements


def residual_basis(model) -> ResidualBasis:
    """Greedy maximal independent subset of V^{pi,d} entries (exact).

    Raises BasisDeficient when the entries do not span every theta
    monomial of the identity constraint (the correction T could then not
    represent the residual).
    """
    monomials = model.identity_monomials
    mono_index = {m: i for i, m in enumerate(monomials)}
    columns = []
    elements = []
    probe = []  # accumulated independent columns as vectors
    for name in model.irreps:
        vm = model.s2_blocks.get(name)
        if vm is None or not vm.size:
            continue
        for (i, j) in sorted(vm.entries):
            p = vm.entries[(i, j)]
            vec = [Fraction(0)] * len(monomials)
            for m, c in p.items():
                vec[mono_index[m]] = c.rational_value()
            candidate = probe + [vec]
            if RationalMatrix(candidate).rank() == len(candidate):
                probe = candidate
                columns.append(vec)
                elements.append((name, i, j))
    if len(columns) != len(monomials):
        raise BasisDeficient(
            f"{len(columns)} independent entries for {len(monomials)} monomials"
        )
    # square selection: greedy over monomial rows in canonical order
    selected = []
    probe_rows = []
    for ri in range(len(monomials)):
        candidate = probe_rows + [[col[ri] for col in columns]]
        if RationalMatrix(candidate).rank() == len(candidate):
            probe_rows = candidate
            selected.append(ri)
        if len(selected) == len(columns):
            break
    ahat = RationalMatrix(probe_rows)
    ainv_norm = ahat.inverse_inf_norm()
    placement = {}
    for name, i, j in elements:
        d, o = placement.get(name, (0, 0))
        if i == j:
            placement[name] = (d + 1, o)
        else:
            placement[name] = (d, o + 1)
    return ResidualBasis(
        elements=elements,
        monomials=monomials,
        selected_rows=selected,
        ainv_inf_norm=ainv_norm,
        placement=placement,
    )


def _pi_power_cache(model):
    exps = set()
    for m in model.identity_monomials:
        for fam in model.identity_rows[m].values():
            for c in fam.values():
                exps.update(e for e, _ in c.items())
    for mat in model.objective.values():
        for c in mat.values():
            exps.update(e for e, _ in c.items())
    return {e: IntervalScalar.pi_power(e) for e in exps}


def _block_inner(coeffs: dict, mat, pi_powers) -> IntervalScalar:
    acc = IntervalScalar.exact(0)
    for (i, j), c in coeffs.items():
        w = IntervalScalar.from_coefficient(c, pi_powers)
        v = mat[i][j]
        if not isinstance(v, IntervalScalar):
            v = IntervalScalar.exact(v)
        term = w * v
        if i != j:
            term = term * 2
        acc = acc + term
    return acc


def residual_bound(blocks: dict, model, basis: ResidualBasis | None = None,
                   pi_powers=None):
    """Interval residual of the cutoff identity and the correction bounds.

    blocks: {(role, irrep): interval matrix} for the repaired solution.
    Returns (linf, coeff_bound, per-irrep Frobenius bounds, coefficients).
    """
    if basis is None:
        basis = residual_basis(model)
    if pi_powers is None:
        pi_powers = _pi_power_cache(model)
    coeffs = []
    for m in model.identity_monomials:
        acc = IntervalScalar.exact(0)
        for (role, name), mat in model.identity_rows[m].items():
            blk = blocks.get((role, name))
            if blk is None:
                continue
            acc = acc + _block_inner(mat, blk, pi_powers)
        coeffs.append(acc)
    linf = IntervalScalar.exact(0)
    for c in coeffs:
        a = abs(c)
        linf = IntervalScalar(max(linf.lo, a.lo), max(linf.hi, a.hi))
    coeff_bound = linf * IntervalScalar.from_fraction(basis.ainv_inf_norm)
    frob = {}
    for name, (ndiag, noff) in basis.placement.items():
        # T places each basis coefficient at its entry: c on a diagonal
        # entry, c/2 on each of the two symmetric positions off-diagonal
        weight = Fraction(ndiag) + Fraction(noff, 2)
        frob[name] = coeff_bound * IntervalScalar.from_fraction(weight).sqrt()
    return linf, coeff_bound, frob, coeffs


@dataclass
class CertifiedSolution:
    block_labels: list
    tilde: dict  # (role, irrep) -> interval matrix
    lam: dict  # (role, irrep) -> mpfr lower eigenvalue bound
    cholesky: dict  # (role, irrep) -> recorded float factor
    rescale: Fraction
    normalization: IntervalScalar
    residual_linf: IntervalScalar
    coeff_bound: IntervalScalar
    frobenius: dict
    ainv_inf_norm: Fraction
    objective: IntervalScalar  # f(0), after rescale
    alpha: Fraction
    volume: IntervalScalar
    bound: IntervalScalar
    checks: dict = field(default_factory=dict)

    def report(self, body: str) -> str:
        lines = [
            "certified packing bound",
            f"  body:        {body}",
            f"  alpha:       {self.alpha}",
            f"  f(0):        [{self.objective.lo}, {self.objective.hi}]",
            f"  vol K:       [{self.volume.lo}, {self.volume.hi}]",
            f"  upper bound: {self.bound.hi}",
            f"  bound interval: [{self.bound.lo}, {self.bound.hi}]",
            f"  residual |r|_inf <= {self.residual_linf.hi}",
            f"  |A^-1|_inf = {float(self.ainv_inf_norm):.6g} (exact rational)",
        ]
        for key, (lam, frb) in sorted(self.checks.get("s2_margins", {}).items()):
            lines.append(f"  S2 {key}: lambda >= {lam}, |T|_F <= {frb}")
        return "\n".join(lines)

    def to_json(self) -> str:
        doc = {
            "rescale": str(self.rescale),
            "alpha": str(self.alpha),
            "normalization": self.normalization.to_json(),
            "residual_linf": self.residual_linf.to_json(),
            "coeff_bound": self.coeff_bound.to_json(),
            "ainv_inf_norm": str(self.ainv_inf_norm),
            "objective": self.objective.to_json(),
            "volume": self.volume.to_json(),
            "bound": self.bound.to_json(),
            "lam": {f"{r}:{n}": mpfr_to_hex(v) for (r, n), v in self.lam.items()},
            "frobenius": {n: v.to_json() for n, v in self.frobenius.items()},
            "checks": {
                k: v for k, v in self.checks.items() if isinstance(v, (bool, str))
            },
            "tilde": {
                f"{r}:{n}": [[e.to_json() for e in row] for row in mat]
                for (r, n), mat in self.tilde.items()
            },
        }
        return json.dumps(doc, indent=1, sort_keys=True)


def exact_transform_theta(model, bundle):
    """F[g] of a solution bundle as an exact theta polynomial.

    MPFR entries are exact rationals, so the result lives in Q[pi, 1/pi]
    and serializes through the term-per-line text format.
    """
    from .polyalg import Coefficient, ThetaPolynomial

    coeffs: dict = {}
    for name, fv in model.fv_entries.items():
        label = f"R:{name}"
        if label not in bundle.block_labels:
            continue
        mat = bundle.matrix(label)
        for (i, j), p in fv.items():
            num, den = mat[i][j].as_integer_ratio()
            w = Fraction(int(num), int(den)) * (2 if i != j else 1)
            if not w:
                continue
            for m, c in p.items():
                prev = coeffs.get(m, Coefficient.zero())
                coeffs[m] = prev + c.scale(w)
    return ThetaPolynomial(coeffs)


def transformed_coefficients(model, tilde: dict, pi_powers=None) -> dict:
    """Interval theta-coefficients of F[g] for the (repaired) solution.

    tilde maps (role, irrep) to interval matrices; only R blocks enter.
    The result feeds the domain checker directly.
    """
    if pi_powers is None:
        pi_powers = _pi_power_cache(model)
    out: dict = {}
    for name, fv in model.fv_entries.items():
        blk = tilde.get(("R", name))
        if blk is None:
            continue
        for (i, j), p in fv.items():
            w = blk[i][j]
            if not isinstance(w, IntervalScalar):
                w = IntervalScalar.exact(w)
            if i != j:
                w = w * 2
            for m, c in p.items():
                term = IntervalScalar.from_coefficient(c, pi_powers) * w
                prev = out.get(m)
                out[m] = term if prev is None else prev + term
    return out


def certify(solution, model, solid, alpha=Fraction(1),
            lam_floor: Fraction = LAMBDA_FLOOR) -> CertifiedSolution:
    """Turn a solver bundle into a rigorous bound (see module docstring).

    For even-p superballs the cutoff surface equals the difference-body
    boundary, the sample region is empty, and alpha must be 1; for sampled
    bodies the caller must separately certify nonpositivity on the bounded
    region at this alpha (the domain checker).
    """
    alpha = Fraction(alpha)
    if alpha < 1:
        raise CertificationFailed("alpha must be at least 1", failing="alpha")
    if solid.sample_region_empty() and alpha != 1:
        raise CertificationFailed(
            "even-exponent superballs certify at alpha = 1", failing="alpha"
        )

    # 1. repair blocks
    tilde, lam, chol = {}, {}, {}
    for label_index, label in enumerate(solution.block_labels):
        if ":" not in label:
            continue
        role, name = label.split(":", 1)
        if role not in ("R", "S1", "S2"):
            continue
        mat = solution.matrices[label_index]
        try:
            t, lv, lf = repair_psd(mat, lam_floor)
        except NotRepairable as exc:
            raise NotRepairable(
                f"block {label}: {exc}", failing=label
            ) from exc
        tilde[(role, name)] = t
        lam[(role, name)] = lv
        chol[(role, name)] = lf

    pi_powers = _pi_power_cache(model)

    # 2. normalization (a); rescale if violated
    def norm_value():
        acc = IntervalScalar.exact(0)
        for name, mat in model.norm_row.items():
            blk = tilde.get(("R", name))
            if blk is not None:
                acc = acc + _block_inner(mat, blk, pi_powers)
        return acc

    nv = norm_value()
    rescale = Fraction(1)
    if not nv.lo >= 1:
        if not nv.strictly_positive():
            raise CertificationFailed(
                "normalization value not provably positive", failing="norm"
            )
        inv = IntervalScalar.exact(1) / nv
        num, den = inv.hi.as_integer_ratio()
        rescale = Fraction(int(num), int(den)) * Fraction(1025, 1024)
        for key in list(tilde):
            tilde[key] = _scale_interval_matrix(tilde[key], rescale)
            scaled = IntervalScalar.exact(lam[key]) * IntervalScalar.from_fraction(rescale)
            lam[key] = scaled.lo
        nv = norm_value()
        if not nv.lo >= 1:
            raise CertificationFailed(
                "normalization still violated after rescale", failing="norm"
            )

    # 3. residual and correction bounds
    basis = residual_basis(model)
    linf, coeff_bound, frob, _ = residual_bound(tilde, model, basis, pi_powers)
    margins = {}
    for name, vm in model.s2_blocks.items():
        if not vm.size:
            continue
        fb = frob.get(name)
        if fb is None:
            # no independent entry placed in this block: T vanishes there
            continue
        lam_s2 = lam[("S2", name)]
        margins[name] = (str(lam_s2), str(fb.hi))
        if not fb.hi < lam_s2:
            raise CertificationFailed(
                f"correction bound {fb.hi} is not below the S2 eigenvalue "
                f"floor {lam_s2} for {name}",
                failing=f"S2:{name}",
            )

    # 4. objective and final bound
    obj = IntervalScalar.exact(0)
    for name, mat in model.objective.items():
        blk = tilde.get(("R", name))
        if blk is not None:
            obj = obj + _block_inner(mat, blk, pi_powers)
    vol = solid.body_volume_interval()
    a_iv = IntervalScalar.from_fraction(alpha)
    bound = a_iv * a_iv * a_iv * obj * vol

    return CertifiedSolution(
        block_labels=list(solution.block_labels),
        tilde=tilde,
        lam=lam,
        cholesky=chol,
        rescale=rescale,
        normalization=nv,
        residual_linf=linf,
        coeff_bound=coeff_bound,
        frobenius=frob,
        ainv_inf_norm=basis.ainv_inf_norm,
        objective=obj,
        alpha=alpha,
        volume=vol,
        bound=bound,
        checks={
            "normalization_ok": True,
            "s2_margins": margins,
            "alpha": str(alpha),
        },
    )
