"""Assembly of the semidefinite program for the packing bound.

For each irreducible pi and degree budget t, V^{pi,t} is the symmetric
matrix indexed by pairs (a, r) of an invariant monomial a and a row r of
the coinvariant family, with entries a * b * Q^pi_{rs}; a pair is admitted
when deg a + deg row <= t.  The program over PSD blocks R (for the
transform side), S1, S2 (for the cutoff identity) is

    minimize    sum_pi <F[V^{pi,d}](0), R^pi>
    subject to  sum_pi <V^{pi,d}(0), R^pi> >= 1                     (norm)
                sum_pi <F[V^{pi,d}], R^pi> + <s V^{pi,d-ds}, S1^pi>
                        + <V^{pi,d}, S2^pi> = 0  per theta-monomial (ident)
                sum_pi <F[V^{pi,d}](x), R^pi> <= 0  for sample x    (samp)

with d odd.  All constraint data is exact (coefficients in Q[pi, pi^-1]);
numeric rounding is deferred to the solver layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import b3
from .fourier import fourier_theta
from .geometry import Position, Solid
from .polyalg import (
    COEFF_ZERO,
    Coefficient,
    ThetaPolynomial,
    monomial_key,
    theta_monomials_upto,
)


class EvenDegree(ValueError):
    pass


class DegreeMismatch(ValueError):
    pass


def _wdeg(m) -> int:
    return 2 * m[0] + 4 * m[1] + 6 * m[2]


@dataclass(frozen=True)
class VMatrix:
    irrep: str
    t: int
    pairs: tuple  # ((theta-monomial triple, row index 1-based), ...)
    entries: dict  # (i, j) i <= j -> ThetaPolynomial

    @property
    def size(self) -> int:
        return len(self.pairs)

    def entry(self, i: int, j: int) -> ThetaPolynomial:
        return self.entries[(i, j) if i <= j else (j, i)]


@lru_cache(maxsize=None)
def build_v_matrix(irrep_name: str, t: int) -> VMatrix:
    """V^{pi,t}; may be empty when no pair satisfies the degree bound."""
    data = b3.isotypic_data(irrep_name)
    pairs = []
    for r, row in enumerate(data.rows, start=1):
        if row.degree > t:
            continue
        for a in theta_monomials_upto(t - row.degree):
            pairs.append((a, r))
    pairs.sort(key=lambda pr: (pr[1], monomial_key(pr[0])))
    entries = {}
    for i, (a, r) in enumerate(pairs):
        for j in range(i, len(pairs)):
            bmon, s = pairs[j]
            q = data.qpi[(r, s) if r <= s else (s, r)]
            shift = tuple(x + y for x, y in zip(a, bmon))
            entries[(i, j)] = ThetaPolynomial(
                {
                    tuple(x + y for x, y in zip(m, shift)): c
                    for m, c in q.items()
                }
            )
    return VMatrix(irrep=irrep_name, t=t, pairs=tuple(pairs), entries=entries)


@lru_cache(maxsize=None)
def fourier_v_matrix(irrep_name: str, t: int) -> dict:
    """Entrywise transform F[V^{pi,t}] (theta polynomials over Q[pi,pi^-1])."""
    vm = build_v_matrix(irrep_name, t)
    return {ij: fourier_theta(p) for ij, p in vm.entries.items()}


def evaluate_block_at_zero(entries: dict, size: int) -> dict:
    """Constant coefficients of a symmetric entry family (theta = 0)."""
    out = {}
    for (i, j), p in entries.items():
        c = p.constant_term()
        if not c.is_zero():
            out[(i, j)] = c
    return out


def theta_value(x) -> tuple[Fraction, Fraction, Fraction]:
    x = [Fraction(v) for v in x]
    return (
        sum(v ** 2 for v in x),
        sum(v ** 4 for v in x),
        sum(v ** 6 for v in x),
    )


def eval_theta_poly(p: ThetaPolynomial, tv) -> Coefficient:
    acc = COEFF_ZERO
    for m, c in p.items():
        acc = acc + c.scale(tv[0] ** m[0] * tv[1] ** m[1] * tv[2] ** m[2])
    return acc


def generate_samples(solid: Solid, spacing,
                     shell_spacing=None, shell_alpha=Fraction(11, 10)):
    """Grid points of the bounded nonpositivity region, fundamental wedge only.

    Empty for even-p superballs, where the cutoff surface coincides with the
    difference-body boundary.  When shell_spacing is given, a finer grid is
    added in the layer between the difference body and its shell_alpha
    enlargement, where the boundary-hugging function needs the most help.
    """
    spacing = Fraction(spacing)
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if solid.sample_region_empty():
        return []

    def grid(pitch, keep):
        nmax = int((2 if solid.kind == "superball" else 1) / pitch) + 1
        pts = []
        for i in range(nmax + 1):
            for j in range(i, nmax + 1):
                for k in range(j, nmax + 1):
                    x = (i * pitch, j * pitch, k * pitch)
                    if keep(tuple(float(v) for v in x)):
                        pts.append(x)
        return pts

    def in_region(fx):
        if solid.membership_float(fx, "outer_ball") != Position.INTERIOR:
            return False
        return solid.membership_float(fx, "difference_body", 1.0) != Position.INTERIOR

    out = grid(spacing, in_region)
    if shell_spacing is not None:
        a = float(shell_alpha)

        def in_shell(fx):
            if not in_region(fx):
                return False
            return solid.membership_float(fx, "difference_body", a) != Position.EXTERIOR

        seen = set(out)
        for x in grid(Fraction(shell_spacing), in_shell):
            if x not in seen:
                seen.add(x)
                out.append(x)
    return out


@dataclass
class SdpModel:
    """Exact data of the assembled program."""

    solid: Solid
    d: int
    d_s: int
    s_theta: ThetaPolynomial
    irreps: tuple[str, ...]
    r_blocks: dict  # irrep -> VMatrix (t = d)
    s1_blocks: dict  # irrep -> VMatrix (t = d - d_s)
    s2_blocks: dict  # irrep -> VMatrix (t = d)
    fv_entries: dict  # irrep -> {(i,j): ThetaPolynomial}
    sv_entries: dict  # irrep -> {(i,j): ThetaPolynomial}, s * V^{pi, d-ds}
    objective: dict  # irrep -> {(i,j): Coefficient}, F[V](0)
    norm_row: dict  # irrep -> {(i,j): Coefficient}, V(0)
    identity_monomials: tuple  # theta monomials of the identity constraint
    identity_rows: dict  # monomial -> {('R'|'S1'|'S2', irrep): {(i,j): Coefficient}}
    samples: list
    sample_rows: list  # per sample: {irrep: {(i,j): Coefficient}} on R blocks

    def block_list(self):
        """(role, irrep, VMatrix) for nonempty blocks, deterministic order."""
        out = []
        for role, blocks in (("R", self.r_blocks), ("S1", self.s1_blocks),
                             ("S2", self.s2_blocks)):
            for name in self.irreps:
                vm = blocks.get(name)
                if vm is not None and vm.size:
                    out.append((role, name, vm))
        return out


def assemble(solid: Solid, d: int, samples=None) -> SdpModel:
    if d <= 0 or d % 2 == 0:
        raise EvenDegree("degree budget d must be odd and positive")
    s_theta = solid.cutoff_theta()
    d_s = solid.cutoff_degree_half()
    if d_s > d:
        raise DegreeMismatch(f"cutoff degree {2 * d_s} exceeds 2d = {2 * d}")
    if samples is None:
        samples = []
    names = b3.IRREP_NAMES

    r_blocks, s1_blocks, s2_blocks = {}, {}, {}
    fv_entries, sv_entries, objective, norm_row = {}, {}, {}, {}
    for name in names:
        vm_d = build_v_matrix(name, d)
        vm_s = build_v_matrix(name, d - d_s)
        if vm_d.size:
            r_blocks[name] = vm_d
            s2_blocks[name] = vm_d
            fv = fourier_v_matrix(name, d)
            fv_entries[name] = fv
            objective[name] = evaluate_block_at_zero(fv, vm_d.size)
            norm_row[name] = evaluate_block_at_zero(vm_d.entries, vm_d.size)
        if vm_s.size:
            s1_blocks[name] = vm_s
            sv_entries[name] = {
                ij: s_theta * p for ij, p in vm_s.entries.items()
            }

    # identity constraint: one row per theta monomial appearing anywhere
    support = set()
    for name in names:
        for fam in (fv_entries.get(name), sv_entries.get(name)):
            if fam:
                for p in fam.values():
                    support.update(m for m, _ in p.items())
        vm = s2_blocks.get(name)
        if vm:
            for p in vm.entries.values():
                support.update(m for m, _ in p.items())
    monomials = sorted(support, key=monomial_key)
    identity_rows = {}
    for m in monomials:
        row = {}
        for name in names:
            if name in fv_entries:
                mat = _coeff_matrix(fv_entries[name], m)
                if mat:
                    row[("R", name)] = mat
            if name in sv_entries:
                mat = _coeff_matrix(sv_entries[name], m)
                if mat:
                    row[("S1", name)] = mat
            if name in s2_blocks:
                mat = _coeff_matrix(s2_blocks[name].entries, m)
                if mat:
                    row[("S2", name)] = mat
        identity_rows[m] = row

    sample_rows = []
    for x in samples:
        tv = theta_value(x)
        row = {}
        for name in names:
            if name not in fv_entries:
                continue
            mat = {}
            for ij, p in fv_entries[name].items():
                c = eval_theta_poly(p, tv)
                if not c.is_zero():
                    mat[ij] = c
            if mat:
                row[name] = mat
        sample_rows.append(row)

    return SdpModel(
        solid=solid,
        d=d,
        d_s=d_s,
        s_theta=s_theta,
        irreps=names,
        r_blocks=r_blocks,
        s1_blocks=s1_blocks,
        s2_blocks=s2_blocks,
        fv_entries=fv_entries,
        sv_entries=sv_entries,
        objective=objective,
        norm_row=norm_row,
        identity_monomials=tuple(monomials),
        identity_rows=identity_rows,
        samples=list(samples),
        sample_rows=sample_rows,
    )


def _coeff_matrix(entries: dict, m) -> dict:
    out = {}
    for ij, p in entries.items():
        c = p.coefficient(m)
        if not c.is_zero():
            out[ij] = c
    return out


def sos_feasibility_data(target: ThetaPolynomial, d: int):
    """Exact data for 'is this invariant polynomial a sum of squares?'.

    Returns (numeric-ready exact rows) for the equality system
    sum_pi <V^{pi,d}_m, R^pi> = coeff_m(target) over every theta monomial m
    in the blocks' joint support or the target.  All data is rational.
    """
    if d <= 0 or d % 2 == 0:
        raise EvenDegree("degree budget d must be odd and positive")
    blocks = {}
    for name in b3.IRREP_NAMES:
        vm = build_v_matrix(name, d)
        if vm.size:
            blocks[name] = vm
    support = set(m for m, _ in target.items())
    for vm in blocks.values():
        for p in vm.entries.values():
            support.update(m for m, _ in p.items())
    monomials = sorted(support, key=monomial_key)
    exact_constraints = []
    exact_b = []
    for m in monomials:
        row = {}
        for name, vm in blocks.items():
            mat = {}
            for ij, p in vm.entries.items():
                c = p.coefficient(m)
                if not c.is_zero():
                    mat[ij] = c.rational_value()
            if mat:
                row[f"R:{name}"] = mat
        exact_constraints.append(row)
        exact_b.append(target.coefficient(m).rational_value())
    return blocks, monomials, exact_constraints, exact_b


def model_to_json(model: SdpModel) -> str:
    """Sparse-triplet dump of the exact model (coefficients as text)."""
    blocks = [
        {
            "role": role,
            "irrep": name,
            "size": vm.size,
            "pairs": [[list(a), r] for a, r in vm.pairs],
        }
        for role, name, vm in model.block_list()
    ]
    rows = []
    for m in model.identity_monomials:
        row = model.identity_rows[m]
        triplets = []
        for (role, name), mat in sorted(row.items()):
            for (i, j), c in sorted(mat.items()):
                triplets.append([role, name, i, j, c.text()])
        rows.append({"monomial": list(m), "entries": triplets})
    doc = {
        "solid": model.solid.name,
        "d": model.d,
        "d_s": model.d_s,
        "blocks": blocks,
        "objective": {
            name: [[i, j, c.text()] for (i, j), c in sorted(mat.items())]
            for name, mat in model.objective.items()
        },
        "normalization": {
            name: [[i, j, c.text()] for (i, j), c in sorted(mat.items())]
            for name, mat in model.norm_row.items()
        },
        "identity_rows": rows,
        "samples": [[str(v) for v in x] for x in model.samples],
    }
    return json.dumps(doc, indent=1, sort_keys=True)
