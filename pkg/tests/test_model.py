"""Program assembly: V matrices, constraint data, sampling, reconstruction."""

import random
from fractions import Fraction

import pytest

from packbound import b3, model as M
from packbound.geometry import Position, Solid
from packbound.polyalg import (
    Coefficient,
    ExactPolynomial,
    RationalMatrix,
    ThetaPolynomial,
    is_b3_invariant,
    x_monomials,
)


class TestVMatrix:
    def test_trivial_block_t1(self):
        vm = M.build_v_matrix("A_1g", 1)
        assert vm.pairs == (((0, 0, 0), 1),)
        assert vm.entries[(0, 0)] == ThetaPolynomial.one()

    def test_trivial_block_t3(self):
        vm = M.build_v_matrix("A_1g", 3)
        assert [p for p, _ in vm.pairs] == [(0, 0, 0), (1, 0, 0)]
        assert vm.entries[(0, 1)] == ThetaPolynomial.theta(0)
        assert vm.entries[(1, 1)] == ThetaPolynomial(
            {(2, 0, 0): Coefficient.one()}
        )

    def test_index_set_degree_filter(self):
        # independent enumeration of admissible pairs
        for name in ("T_1u", "E_g", "A_2u"):
            for t in (1, 2, 3, 5):
                vm = M.build_v_matrix(name, t)
                data = b3.isotypic_data(name)
                expected = 0
                for row in data.rows:
                    if row.degree > t:
                        continue
                    budget = t - row.degree
                    count = sum(
                        1
                        for k in range(0, budget + 1, 2)
                        for m in M.theta_monomials_upto(k)
                        if 2 * m[0] + 4 * m[1] + 6 * m[2] == k
                    )
                    expected += count
                assert vm.size == expected, (name, t)

    def test_symmetry(self):
        vm = M.build_v_matrix("T_1u", 5)
        for i in range(vm.size):
            for j in range(vm.size):
                assert vm.entry(i, j) == vm.entry(j, i)

    def test_entry_degree_bound(self):
        for name in b3.IRREP_NAMES:
            vm = M.build_v_matrix(name, 5)
            for p in vm.entries.values():
                assert p.weighted_degree() <= 10


class TestZeroEvaluation:
    def test_trivial_block(self):
        vm = M.build_v_matrix("A_1g", 3)
        z = M.evaluate_block_at_zero(vm.entries, vm.size)
        assert z == {(0, 0): Coefficient.one()}

    def test_coordinate_block_vanishes(self):
        vm = M.build_v_matrix("T_1u", 3)
        assert M.evaluate_block_at_zero(vm.entries, vm.size) == {}

    def test_fourier_constant(self):
        fv = M.fourier_v_matrix("A_1g", 1)
        assert fv[(0, 0)].constant_term() == Coefficient.one()


class TestSamples:
    def test_even_superball_empty(self):
        assert M.generate_samples(Solid.superball(4), Fraction(1, 50)) == []
        assert M.generate_samples(Solid.superball(6), Fraction(1, 30)) == []

    def test_wedge_ordering(self):
        tetra = Solid.load("tetra")
        pts = M.generate_samples(tetra, Fraction(1, 12))
        assert pts
        for x in pts:
            assert 0 <= x[0] <= x[1] <= x[2]

    def test_membership_of_samples(self):
        tetra = Solid.load("tetra")
        for x in M.generate_samples(tetra, Fraction(1, 12)):
            fx = tuple(float(v) for v in x)
            assert tetra.membership_float(fx, "outer_ball") == Position.INTERIOR
            assert (
                tetra.membership_float(fx, "difference_body", 1.0)
                != Position.INTERIOR
            )

    def test_shell_refinement_adds_points(self):
        tetra = Solid.load("tetra")
        base = M.generate_samples(tetra, Fraction(1, 12))
        fine = M.generate_samples(
            tetra, Fraction(1, 12), shell_spacing=Fraction(1, 24)
        )
        assert set(base) <= set(fine)
        assert len(fine) > len(base)


class TestAssemble:
    def test_rejects_even_degree(self):
        with pytest.raises(M.EvenDegree):
            M.assemble(Solid.superball(4), 2)

    def test_rejects_degree_mismatch(self):
        with pytest.raises(M.DegreeMismatch):
            M.assemble(Solid.superball(4), 1)  # d_s = 2 > d = 1

    def test_p4_d3_structure(self):
        mdl = M.assemble(Solid.superball(4), 3)
        assert mdl.d_s == 2
        s1_sizes = {n: vm.size for n, vm in mdl.s1_blocks.items() if vm.size}
        assert s1_sizes == {"A_1g": 1, "T_1u": 1}  # built from V^{pi,1}
        assert not mdl.samples
        assert len(mdl.identity_monomials) == 7

    def test_identity_rows_reproduce_residual(self):
        """Constraint rows evaluated on rational assignments equal the
        direct polynomial expansion of the residual."""
        rng = random.Random(13)
        mdl = M.assemble(Solid.superball(4), 3)

        def random_sym(n):
            return {
                (i, j): Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                for i in range(n)
                for j in range(i, n)
            }

        assign = {}
        for role, name, vm in mdl.block_list():
            assign[(role, name)] = random_sym(vm.size)

        # direct residual: sum <F[V], R> + <sV, S1> + <V, S2>
        direct = ThetaPolynomial.zero()
        for name, fam in mdl.fv_entries.items():
            mat = assign.get(("R", name))
            if not mat:
                continue
            for (i, j), p in fam.items():
                w = mat[(i, j)] * (2 if i != j else 1)
                direct = direct + p.scale(w)
        for name, fam in mdl.sv_entries.items():
            mat = assign.get(("S1", name))
            if not mat:
                continue
            for (i, j), p in fam.items():
                w = mat[(i, j)] * (2 if i != j else 1)
                direct = direct + p.scale(w)
        for name, vm in mdl.s2_blocks.items():
            mat = assign.get(("S2", name))
            if not mat:
                continue
            for (i, j), p in vm.entries.items():
                w = mat[(i, j)] * (2 if i != j else 1)
                direct = direct + p.scale(w)

        # via the assembled identity rows
        for m in mdl.identity_monomials:
            acc = Coefficient.zero()
            for key, coeffs in mdl.identity_rows[m].items():
                mat = assign.get(key)
                if not mat:
                    continue
                for (i, j), c in coeffs.items():
                    acc = acc + c.scale(mat[(i, j)] * (2 if i != j else 1))
            assert acc == direct.coefficient(m), m

    def test_reconstruction_is_invariant_sos(self):
        """Random PSD rational blocks yield an invariant polynomial that an
        independent full-monomial Gram factorization certifies as SOS."""
        rng = random.Random(21)
        mdl = M.assemble(Solid.superball(4), 3)
        g = ThetaPolynomial.zero()
        for name, vm in mdl.r_blocks.items():
            if not vm.size:
                continue
            n = vm.size
            l = [
                [Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(n)]
                for _ in range(n)
            ]
            # R = L L^T is PSD with rational entries
            for i in range(n):
                for j in range(n):
                    w = sum(l[i][k] * l[j][k] for k in range(n))
                    if w:
                        g = g + vm.entries[(i, j) if i <= j else (j, i)].scale(w)
        gx = g.expand()
        assert is_b3_invariant(gx)
        assert _gram_sos_check(gx, 3)

    def test_sample_rows_match_evaluation(self):
        tetra = Solid.load("tetra")
        samples = M.generate_samples(tetra, Fraction(1, 6))
        mdl = M.assemble(tetra, 3, samples[:3])
        for x, row in zip(mdl.samples, mdl.sample_rows):
            tv = M.theta_value(x)
            for name, mat in row.items():
                fam = mdl.fv_entries[name]
                for (i, j), c in mat.items():
                    assert c == M.eval_theta_poly(fam[(i, j)], tv)


def _gram_sos_check(p: ExactPolynomial, d: int) -> bool:
    """Independent SOS oracle over the full monomial basis of degree <= d.

    Finds a PSD Gram matrix numerically (full basis, no symmetry reduction)
    and checks the fit; rational arithmetic only in the constraint setup.
    """
    import gmpy2
    from gmpy2 import mpfr

    from packbound import solver as S

    basis = [m for k in range(d + 1) for m in x_monomials(k)]
    n = len(basis)
    # constraints: for every monomial of degree <= 2d, sum of Gram entries
    # over basis pairs equals the coefficient of p
    rows = {}
    for i in range(n):
        for j in range(i, n):
            m = tuple(a + b for a, b in zip(basis[i], basis[j]))
            rows.setdefault(m, {})[(i, j)] = Fraction(1)
    support = set(rows)
    for m, _ in p.items():
        support.add(m)
    with gmpy2.context(precision=192):
        constraints = []
        b = []
        for m in sorted(support):
            ent = rows.get(m, {})
            constraints.append(
                {0: {ij: mpfr(v.numerator) / v.denominator for ij, v in ent.items()}}
            )
            c = p.coefficient(m).rational_value()
            b.append(mpfr(c.numerator) / c.denominator)
        nm = S.NumericModel(
            blocks=[S.NumericBlock("gram", n)],
            b=b,
            C=[[[mpfr(0)] * n for _ in range(n)]],
            constraints=constraints,
            precision=192,
        )
        try:
            S.check_feasibility(nm, precision=192)
            return True
        except S.Infeasible:
            return False


def test_model_json_dump():
    import json

    mdl = M.assemble(Solid.superball(4), 3)
    doc = json.loads(M.model_to_json(mdl))
    assert doc["d"] == 3 and doc["d_s"] == 2
    assert any(blk["role"] == "S1" for blk in doc["blocks"])
    # dump is deterministic
    assert M.model_to_json(mdl) == M.model_to_json(M.assemble(Solid.superball(4), 3))


class TestSosFeasibilityData:
    def test_rows_are_rational(self):
        target = ThetaPolynomial({(3, 0, 0): 1})
        blocks, monomials, rows, rhs = M.sos_feasibility_data(target, 3)
        assert all(isinstance(v, Fraction) for row in rows for mat in row.values() for v in mat.values())
        assert len(rows) == len(monomials) == len(rhs)
