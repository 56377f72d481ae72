"""Certification layer: eigenvalue repair, residual bounds, end-to-end
rigorous bound assembly and its failure modes."""

import random
from fractions import Fraction

import gmpy2
import mpmath
import pytest
from gmpy2 import mpfr

from packbound import certify as C, model as M, solver as S
from packbound.geometry import Solid
from packbound.intervals import IntervalScalar


def _sym_random(rng, n, scale=1.0):
    a = [[rng.uniform(-scale, scale) for _ in range(n)] for _ in range(n)]
    return [
        [mpfr((a[i][j] + a[j][i]) / 2) for j in range(n)] for i in range(n)
    ]


def _mineig_oracle(a):
    """High-precision symmetric eigenvalue oracle (independent library)."""
    mpmath.mp.dps = 60
    m = mpmath.matrix([[mpmath.mpf(str(v)) for v in row] for row in a])
    eigs = mpmath.mp.eigsy(m, eigvals_only=True)
    return min(eigs)


class TestRepairPsd:
    def test_identity(self):
        with gmpy2.context(precision=256):
            tilde, lam, l = C.repair_psd(
                [[mpfr(1), mpfr(0)], [mpfr(0), mpfr(1)]]
            )
            assert Fraction(1, 2) <= Fraction(*lam.as_integer_ratio()) <= 1
            # tilde encloses the exact matrix
            assert tilde[0][0].lo <= 1 <= tilde[0][0].hi

    def test_diag_2_3(self):
        with gmpy2.context(precision=256):
            _, lam, _ = C.repair_psd([[mpfr(2), mpfr(0)], [mpfr(0), mpfr(3)]])
            assert 1 <= Fraction(*lam.as_integer_ratio()) <= 2

    def test_not_repairable(self):
        with gmpy2.context(precision=256):
            with pytest.raises(C.NotRepairable):
                C.repair_psd([[mpfr(1), mpfr(0)], [mpfr(0), mpfr("-1e-3")]])

    @pytest.mark.slow
    def test_soundness_100_random(self):
        rng = random.Random(99)
        with gmpy2.context(precision=256):
            for trial in range(100):
                n = rng.randint(2, 6)
                base = _sym_random(rng, n)
                # shift to make most of them positive definite
                shift = rng.choice([0.0, 0.5, 2.0, 5.0])
                a = [
                    [
                        base[i][j] + (mpfr(shift) if i == j else 0)
                        for j in range(n)
                    ]
                    for i in range(n)
                ]
                true_min = _mineig_oracle(a)
                try:
                    _, lam, _ = C.repair_psd(a)
                except C.NotRepairable:
                    assert true_min < 1e-39
                    continue
                assert mpmath.mpf(str(lam)) <= true_min * (1 + mpmath.mpf("1e-40")) + mpmath.mpf("1e-60"), trial

    def test_tilde_min_eigenvalue_guarantee(self):
        rng = random.Random(5)
        with gmpy2.context(precision=256):
            for _ in range(20):
                n = rng.randint(2, 5)
                a = _sym_random(rng, n)
                for i in range(n):
                    a[i][i] += 3
                tilde, lam, _ = C.repair_psd(a)
                mid = [[float(v.mid()) for v in row] for row in tilde]
                assert _mineig_oracle(mid) >= mpmath.mpf(str(lam)) * (
                    1 - mpmath.mpf("1e-30")
                )


@pytest.fixture(scope="module")
def p4_model():
    return M.assemble(Solid.superball(4), 3)


@pytest.fixture(scope="module")
def p4_certified(p4_model):
    nm = S.build_numeric_model(p4_model, precision=256)
    sol = S.solve_builtin(nm)
    center = S.analytic_center_pass(nm, sol.objective)
    cert = C.certify(center, p4_model, Solid.superball(4), alpha=1)
    return nm, center, cert


class TestResidualBasis:
    def test_spans_identity_monomials(self, p4_model):
        basis = C.residual_basis(p4_model)
        assert len(basis.elements) == len(p4_model.identity_monomials)
        assert basis.ainv_inf_norm > 0

    def test_ainv_norm_exact_rational(self, p4_model):
        basis = C.residual_basis(p4_model)
        assert isinstance(basis.ainv_inf_norm, Fraction)


def _exact_feasible_bundle(model, nm, center, construction_bits=512):
    """Correct the S2 blocks at high precision so the residual nearly
    vanishes; the result is exactly feasible up to 2^-construction_bits."""
    basis = C.residual_basis(model)
    with gmpy2.context(precision=construction_bits):
        pi = gmpy2.const_pi()

        def coeff_val(c):
            acc = mpfr(0)
            for e, q in c.items():
                acc += (mpfr(q.numerator) / q.denominator) * pi ** e
            return acc

        blocks = {}
        for label, mat in zip(center.block_labels, center.matrices):
            if ":" in label:
                role, name = label.split(":", 1)
                blocks[(role, name)] = [
                    [mpfr(v) for v in row] for row in mat
                ]
        # residual coefficients at construction precision
        r_vals = []
        for m in model.identity_monomials:
            acc = mpfr(0)
            for (role, name), coeffs in model.identity_rows[m].items():
                mat = blocks.get((role, name))
                if mat is None:
                    continue
                for (i, j), c in coeffs.items():
                    acc += coeff_val(c) * mat[i][j] * (2 if i != j else 1)
            r_vals.append(acc)
        # expansion over the independent entry basis: solve the square system
        mono_index = {m: i for i, m in enumerate(model.identity_monomials)}
        rows = []
        for ri in basis.selected_rows:
            m = model.identity_monomials[ri]
            row = []
            for (name, i, j) in basis.elements:
                c = model.s2_blocks[name].entries[(i, j)].coefficient(m)
                row.append(
                    mpfr(c.rational_value().numerator)
                    / c.rational_value().denominator
                )
            rows.append(row)
        rhs = [r_vals[ri] for ri in basis.selected_rows]
        fact = S._lu_factor(rows)
        t_coeffs = S._lu_solve(fact, rhs)
        # subtract the correction from the S2 blocks
        for (name, i, j), t in zip(basis.elements, t_coeffs):
            mat = blocks[("S2", name)]
            if i == j:
                mat[i][i] -= t
            else:
                mat[i][j] -= t / 2
                mat[j][i] -= t / 2
        matrices = []
        for label, mat in zip(center.block_labels, center.matrices):
            if ":" in label:
                role, name = label.split(":", 1)
                matrices.append(blocks[(role, name)])
            else:
                matrices.append(mat)
    bundle = S.SolutionBundle(
        block_labels=list(center.block_labels),
        matrices=matrices,
        objective=center.objective,
        dual_objective=center.dual_objective,
        y=center.y,
        iterations=center.iterations,
        precision=construction_bits,
        mu=center.mu,
        primal_infeasibility=mpfr(0),
        dual_infeasibility=mpfr(0),
    )
    return bundle


class TestResidualPipeline:
    def test_exact_feasible_certifies(self, p4_model, p4_certified):
        nm, center, _ = p4_certified
        bundle = _exact_feasible_bundle(p4_model, nm, center)
        cert = C.certify(bundle, p4_model, Solid.superball(4), alpha=1)
        # residual interval contains zero with a tiny upper bound
        assert cert.residual_linf.lo <= 0
        assert float(cert.residual_linf.hi) <= 1e-30

    def test_small_perturbation_measured(self, p4_model, p4_certified):
        nm, center, _ = p4_certified
        bundle = _exact_feasible_bundle(p4_model, nm, center)
        label = bundle.block_labels.index("S2:A_1g")
        with gmpy2.context(precision=256):
            bundle.matrices[label][0][0] += mpfr("1e-10")
        cert = C.certify(bundle, p4_model, Solid.superball(4), alpha=1)
        # the (0,0) entry polynomial is the constant 1, so the residual
        # linf reflects the perturbation directly
        assert 1e-11 <= float(cert.residual_linf.hi) <= 1e-8

    def test_big_perturbation_rejected(self, p4_model, p4_certified):
        nm, center, _ = p4_certified
        bundle = _exact_feasible_bundle(p4_model, nm, center)
        label = bundle.block_labels.index("S2:A_1g")
        with gmpy2.context(precision=256):
            bundle.matrices[label][0][0] += mpfr("1e-3")
        with pytest.raises(C.CertificationFailed):
            C.certify(bundle, p4_model, Solid.superball(4), alpha=1)


class TestCertify:
    def test_p4_run_alpha_one(self, p4_certified):
        _, _, cert = p4_certified
        assert cert.alpha == 1
        assert 0.8698 < float(cert.bound.hi) <= 1.2
        assert cert.bound.lo <= cert.bound.hi
        assert cert.normalization.lo >= 1

    def test_even_superball_rejects_alpha(self, p4_model, p4_certified):
        _, center, _ = p4_certified
        with pytest.raises(C.CertificationFailed):
            C.certify(center, p4_model, Solid.superball(4), alpha=Fraction(51, 50))

    def test_bound_contains_float_estimate(self, p4_certified):
        nm, center, cert = p4_certified
        import math

        vol = 2 ** 0.75 * math.gamma(1.25) ** 3 / math.gamma(1.75)
        est = float(center.objective) * vol
        assert cert.bound.lo <= est * (1 + 1e-12)
        assert est * (1 - 1e-12) <= cert.bound.hi

    def test_report_and_json(self, p4_certified):
        _, _, cert = p4_certified
        text = cert.report("superball p=4")
        assert "upper bound" in text and "alpha" in text
        import json

        doc = json.loads(cert.to_json())
        assert "bound" in doc and "lam" in doc

    def test_monotone_conservatism(self, p4_model, p4_certified):
        """Widening any repaired block entry never shrinks the intervals."""
        _, _, cert = p4_certified
        widened = {
            key: [row[:] for row in mat] for key, mat in cert.tilde.items()
        }
        key = ("R", "A_1g")
        bump = IntervalScalar(mpfr("-1e-12"), mpfr("1e-12"))
        widened[key][0][0] = widened[key][0][0] + bump
        basis = C.residual_basis(p4_model)
        linf0, cb0, _, _ = C.residual_bound(cert.tilde, p4_model, basis)
        linf1, cb1, _, _ = C.residual_bound(widened, p4_model, basis)
        assert linf1.hi >= linf0.hi and linf1.lo <= linf0.lo + float(1e-30)
        assert cb1.hi >= cb0.hi

    def test_synthetic_scaled_objective(self, p4_model, p4_certified):
        """Doubling the R blocks doubles f(0) and trips the rescale logic
        the other way: the normalization stays satisfied."""
        nm, center, cert = p4_certified
        doubled = dict(cert.tilde)
        for key in list(doubled):
            if key[0] == "R":
                doubled[key] = [
                    [v * 2 for v in row] for row in doubled[key]
                ]
        pi_powers = C._pi_power_cache(p4_model)
        obj0 = IntervalScalar.exact(0)
        for name, mat in p4_model.objective.items():
            blk = cert.tilde.get(("R", name))
            if blk is not None:
                obj0 = obj0 + C._block_inner(mat, blk, pi_powers)
        obj1 = IntervalScalar.exact(0)
        for name, mat in p4_model.objective.items():
            blk = doubled.get(("R", name))
            if blk is not None:
                obj1 = obj1 + C._block_inner(mat, blk, pi_powers)
        ratio = float(obj1.mid()) / float(obj0.mid())
        assert abs(ratio - 2) < 1e-30
