"""High-precision semidefinite solver and SDPA-format bridge.

The built-in solver is a dense infeasible-start primal-dual path-following
method (XZ linearization, Mehrotra predictor-corrector) over MPFR floats,
solving

    min <C, Y>   s.t.  <A_i, Y> = b_i,  Y >= 0 (block diagonal).

Desk-scale problems only: blocks up to a few dozen rows, a few hundred
constraints.  Larger instances go through the SDPA sparse-format exporter
and an external high-precision solver; the importer reads the standard
output sections back.

Pure feasibility questions run through a phase-1 embedding
(min t s.t. A(Y) + t (b - A(I)) = b, t >= 0), which is strictly feasible
at Y = I, t = 1.  A positive certified optimum yields a dual improving
ray; for rational data the ray is verified in exact arithmetic, making
the infeasibility report rigorous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .intervals import mpfr_from_hex, mpfr_to_hex


class SolverError(Exception):
    pass


class NoProgress(SolverError):
    pass


class Infeasible(SolverError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class IoFailure(SolverError):
    pass


DEFAULT_PRECISION = 256
DEFAULT_TOL = Fraction(1, 10 ** 20)


# ---------------------------------------------------------------------------
# dense mpfr linear algebra on lists of lists


def _zeros(n):
    z = mpfr(0)
    return [[z] * n for _ in range(n)]


def _identity(n, scale=1):
    out = _zeros(n)
    s = mpfr(scale)
    for i in range(n):
        out[i] = out[i][:]
        out[i][i] = s
    return out


def _copy(a):
    return [row[:] for row in a]


def _sym_from_upper(entries, n):
    out = _zeros(n)
    out = [row[:] for row in out]
    for (i, j), v in entries.items():
        out[i][j] = v
        if i != j:
            out[j][i] = v
    return out


def _matmul(a, b):
    n, k, m2 = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        ai = a[i]
        row = [mpfr(0)] * m2
        for t in range(k):
            v = ai[t]
            if v:
                bt = b[t]
                for j in range(m2):
                    row[j] += v * bt[j]
        out.append(row)
    return out


def _cholesky(a):
    """Lower Cholesky factor; returns None when not positive definite."""
    n = len(a)
    l = [[mpfr(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            s = a[i][j]
            lj = l[j]
            li = l[i]
            for k in range(j):
                s -= li[k] * lj[k]
            if i == j:
                if not s > 0:
                    return None
                li[j] = gmpy2.sqrt(s)
            else:
                li[j] = s / lj[j]
    return l


def _chol_solve(l, rhs):
    n = len(l)
    y = list(rhs)
    for i in range(n):
        s = y[i]
        li = l[i]
        for k in range(i):
            s -= li[k] * y[k]
        y[i] = s / li[i]
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= l[k][i] * y[k]
        y[i] = s / l[i][i]
    return y


def _chol_inverse(l):
    n = len(l)
    out = []
    for j in range(n):
        e = [mpfr(0)] * n
        e[j] = mpfr(1)
        out.append(_chol_solve(l, e))
    # columns of the inverse, symmetric result
    return [[out[j][i] for j in range(n)] for i in range(n)]


def _lu_factor(a):
    n = len(a)
    m = _copy(a)
    piv = list(range(n))
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(m[r][c]))
        if m[p][c] == 0:
            raise SolverError("singular Schur system")
        if p != c:
            m[c], m[p] = m[p], m[c]
            piv[c], piv[p] = piv[p], piv[c]
        mc = m[c]
        inv = 1 / mc[c]
        for r in range(c + 1, n):
            f = m[r][c] * inv
            if f:
                m[r][c] = f
                mr = m[r]
                for k in range(c + 1, n):
                    mr[k] -= f * mc[k]
            else:
                m[r][c] = mpfr(0)
    return m, piv


def _lu_solve(fact, rhs):
    m, piv = fact
    n = len(m)
    x = [rhs[p] for p in piv]
    for i in range(n):
        mi = m[i]
        s = x[i]
        for k in range(i):
            s -= mi[k] * x[k]
        x[i] = s
    for i in range(n - 1, -1, -1):
        mi = m[i]
        s = x[i]
        for k in range(i + 1, n):
            s -= mi[k] * x[k]
        x[i] = s / mi[i]
    return x


# ---------------------------------------------------------------------------
# numeric model


@dataclass(frozen=True)
class NumericBlock:
    label: str  # e.g. "R:A_1g", "S1:T_1u", "slack"
    size: int
    diag: bool = False


@dataclass
class NumericModel:
    blocks: list
    b: list
    C: list  # per block: dense matrix, or vector for diag blocks
    constraints: list  # per i: dict block_index -> {(r, c): value} with r <= c
    precision: int = DEFAULT_PRECISION
    exact_model: object = None  # provenance: the exact SdpModel, when built from one
    meta: dict = field(default_factory=dict)
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.b)

    def block_index(self, label: str) -> int:
        for i, blk in enumerate(self.blocks):
            if blk.label == label:
                return i
        raise KeyError(label)


def coefficient_to_mpfr(c, precision: int) -> mpfr:
    """Round a Q[pi, pi^-1] coefficient at the given precision.

    Evaluated with a 64-bit guard then rounded once, so the result is
    within one rounding step of the exact value.
    """
    with gmpy2.context(precision=precision + 64):
        pi = gmpy2.const_pi()
        acc = mpfr(0)
        for e, q in c.items():
            term = mpfr(q.numerator) / q.denominator
            if e:
                acc += term * pi ** e
            else:
                acc += term
    with gmpy2.context(precision=precision):
        return acc + 0


def build_numeric_model(sdp, precision: int = DEFAULT_PRECISION) -> NumericModel:
    """Numeric rounding of an exact SdpModel, slacks appended.

    Block order: R blocks in character-table row order, then S1, then S2,
    then one diagonal slack block (normalization slack first, then one
    slack per sample constraint).
    """
    blocks = []
    key_to_index = {}
    for role, name, vm in sdp.block_list():
        key_to_index[(role, name)] = len(blocks)
        blocks.append(NumericBlock(label=f"{role}:{name}", size=vm.size))
    nslack = 1 + len(sdp.samples)
    slack_index = len(blocks)
    blocks.append(NumericBlock(label="slack", size=nslack, diag=True))

    def conv(c):
        return coefficient_to_mpfr(c, precision)

    constraints = []
    b = []
    # normalization: <V(0), R> - slack_0 = 1
    row = {}
    for name, mat in sdp.norm_row.items():
        idx = key_to_index.get(("R", name))
        if idx is not None and mat:
            row[idx] = {ij: conv(c) for ij, c in mat.items()}
    row[slack_index] = {(0, 0): mpfr(-1)}
    constraints.append(row)
    b.append(mpfr(1))
    # identity rows = 0
    for m in sdp.identity_monomials:
        row = {}
        for (role, name), mat in sdp.identity_rows[m].items():
            idx = key_to_index.get((role, name))
            if idx is not None and mat:
                row[idx] = {ij: conv(c) for ij, c in mat.items()}
        constraints.append(row)
        b.append(mpfr(0))
    # sample rows: <F[V](x), R> + slack = 0
    for si, srow in enumerate(sdp.sample_rows):
        row = {}
        for name, mat in srow.items():
            idx = key_to_index.get(("R", name))
            if idx is not None and mat:
                row[idx] = {ij: conv(c) for ij, c in mat.items()}
        row[slack_index] = {(1 + si, 1 + si): mpfr(1)}
        constraints.append(row)
        b.append(mpfr(0))

    C = []
    for blk in blocks:
        if blk.diag:
            C.append([mpfr(0)] * blk.size)
        else:
            C.append(_zeros(blk.size))
    for name, mat in sdp.objective.items():
        idx = key_to_index.get(("R", name))
        if idx is None:
            continue
        dense = _copy(C[idx])
        for (i, j), c in mat.items():
            v = conv(c)
            dense[i][j] = v
            dense[j][i] = v
        C[idx] = dense

    meta = {
        "roles": {f"{role}:{name}": (role, name) for role, name, _ in sdp.block_list()},
        "slack_index": slack_index,
        "n_samples": len(sdp.samples),
        "constraint_kinds": (
            ["norm"] + ["identity"] * len(sdp.identity_monomials)
            + ["sample"] * len(sdp.samples)
        ),
    }
    return NumericModel(
        blocks=blocks,
        b=b,
        C=C,
        constraints=constraints,
        precision=precision,
        exact_model=sdp,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# SDPA sparse format


def _format_value(x, precision) -> str:
    if x == 0:
        return "0.0"
    digits = int(precision * 0.30103) + 3
    mant, exp, _ = x.digits(10, digits)
    sign = "-" if mant.startswith("-") else ""
    return f"{sign}0.{mant.lstrip('-')}e{exp}"


def export_sdpa(nm: NumericModel, path=None) -> str:
    """Standard SDPA sparse format.

    The file encodes the problem whose SDPA dual is ours: F_0 = -C,
    F_i = A_i, c = b, so the solver's yMat corresponds to our Y.
    Deterministic ordering gives byte-identical exports for equal models.
    """
    with gmpy2.context(precision=nm.precision):
        lines = [f"{nm.m}", f"{len(nm.blocks)}"]
        lines.append(" ".join(
            str(-blk.size if blk.diag else blk.size) for blk in nm.blocks
        ))
        lines.append(" ".join(_format_value(v, nm.precision) for v in nm.b))

        def emit(matno, blkno, entries):
            for (r, c), v in sorted(entries.items()):
                if v:
                    lines.append(
                        f"{matno} {blkno} {r + 1} {c + 1} "
                        f"{_format_value(v, nm.precision)}"
                    )

        for bi, blk in enumerate(nm.blocks):
            if blk.diag:
                entries = {
                    (i, i): -nm.C[bi][i] for i in range(blk.size) if nm.C[bi][i]
                }
            else:
                entries = {}
                for i in range(blk.size):
                    for j in range(i, blk.size):
                        if nm.C[bi][i][j]:
                            entries[(i, j)] = -nm.C[bi][i][j]
            emit(0, bi + 1, entries)
        for ci, row in enumerate(nm.constraints):
            for bi, entries in sorted(row.items()):
                emit(ci + 1, bi + 1, entries)
        text = "\n".join(lines) + "\n"
    if path is not None:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
    return text


def import_sdpa(text: str, precision: int = DEFAULT_PRECISION) -> NumericModel:
    """Parse SDPA sparse format back into a NumericModel."""
    rows = []
    for raw in text.splitlines():
        raw = raw.split("*")[0].split('"')[0].strip()
        if raw:
            rows.append(raw)
    with gmpy2.context(precision=precision):
        m = int(rows[0])
        nblocks = int(rows[1])
        sizes = [int(v) for v in rows[2].replace(",", " ").split()]
        if len(sizes) != nblocks:
            raise IoFailure("block size list does not match block count")
        b = [mpfr(v) for v in rows[3].replace(",", " ").split()]
        if len(b) != m:
            raise IoFailure("objective vector length mismatch")
        blocks = [
            NumericBlock(label=f"block{i+1}", size=abs(s), diag=s < 0)
            for i, s in enumerate(sizes)
        ]
        C = [
            [mpfr(0)] * blk.size if blk.diag else _zeros(blk.size)
            for blk in blocks
        ]
        constraints = [dict() for _ in range(m)]
        for line in rows[4:]:
            parts = line.replace(",", " ").split()
            matno, blkno, i, j = (int(v) for v in parts[:4])
            val = mpfr(parts[4])
            r, c = i - 1, j - 1
            if r > c:
                r, c = c, r
            bi = blkno - 1
            if matno == 0:
                if blocks[bi].diag:
                    C[bi] = list(C[bi])
                    C[bi][r] = -val
                else:
                    dense = _copy(C[bi])
                    dense[r][c] = -val
                    dense[c][r] = -val
                    C[bi] = dense
            else:
                constraints[matno - 1].setdefault(bi, {})[(r, c)] = val
    return NumericModel(
        blocks=blocks, b=b, C=C, constraints=constraints, precision=precision
    )


def _parse_brace_numbers(text: str, start: int):
    """Parse one {...} group starting at text[start]; returns (tree, end)."""
    assert text[start] == "{"
    out = []
    i = start + 1
    token = []
    while i < len(text):
        ch = text[i]
        if ch == "{":
            sub, i = _parse_brace_numbers(text, i)
            out.append(sub)
            continue
        if ch == "}":
            if token:
                out.append(mpfr("".join(token)))
            return out, i + 1
        if ch in ",\n\r\t ":
            if token:
                out.append(mpfr("".join(token)))
                token = []
        else:
            token.append(ch)
        i += 1
    raise IoFailure("unbalanced braces in solver output")


def import_sdpa_solution(text: str, nm: NumericModel,
                         precision: int | None = None) -> SolutionBundle:
    """Parse the standard SDPA output sections (xVec, yMat, objective values).

    With the export convention used here the solver's yMat is our primal
    block matrix Y and xVec is our dual vector y.
    """
    precision = precision or nm.precision
    with gmpy2.context(precision=precision):
        def section(name):
            idx = text.find(name)
            if idx < 0:
                raise IoFailure(f"missing section {name!r} in solver output")
            brace = text.find("{", idx)
            if brace < 0:
                raise IoFailure(f"malformed section {name!r}")
            tree, _ = _parse_brace_numbers(text, brace)
            return tree

        y = section("xVec")
        if len(y) != nm.m:
            raise IoFailure(
                f"xVec has {len(y)} entries, expected {nm.m}"
            )
        ymat = section("yMat")
        if len(ymat) != len(nm.blocks):
            raise IoFailure(
                f"yMat has {len(ymat)} blocks, expected {len(nm.blocks)}"
            )
        matrices = []
        for blk, data in zip(nm.blocks, ymat):
            if blk.diag:
                flat = list(data)
                if len(flat) != blk.size:
                    raise IoFailure(f"diagonal block size mismatch in {blk.label}")
                matrices.append(flat)
            else:
                if len(data) != blk.size or any(len(r) != blk.size for r in data):
                    raise IoFailure(f"dense block size mismatch in {blk.label}")
                matrices.append([list(r) for r in data])

        def scalar_after(key):
            idx = text.find(key)
            if idx < 0:
                return mpfr(0)
            rest = text[idx:].split("=", 1)[1].strip().split()[0]
            return mpfr(rest)

        ops = _Blocks(nm)
        obj = ops.inner(nm.C, matrices)
        return SolutionBundle(
            block_labels=[blk.label for blk in nm.blocks],
            matrices=matrices,
            objective=obj,
            dual_objective=sum(b * v for b, v in zip(nm.b, y)),
            y=list(y),
            iterations=0,
            precision=precision,
            mu=mpfr(0),
            primal_infeasibility=max(
                abs(nm.b[i] - ops.constraint_inner(i, matrices))
                for i in range(nm.m)
            ),
            dual_infeasibility=mpfr(0),
            meta={
                "imported": True,
                "objValPrimal": str(scalar_after("objValPrimal")),
                "objValDual": str(scalar_after("objValDual")),
            },
        )


# ---------------------------------------------------------------------------
# solution container


@dataclass
class SolutionBundle:
    block_labels: list
    matrices: list  # dense lists (or diag vectors) of mpfr
    objective: mpfr
    dual_objective: mpfr
    y: list
    iterations: int
    precision: int
    mu: mpfr
    primal_infeasibility: mpfr
    dual_infeasibility: mpfr
    meta: dict = field(default_factory=dict)

    def matrix(self, label: str):
        return self.matrices[self.block_labels.index(label)]

    def to_json(self) -> str:
        def enc(mat):
            if mat and isinstance(mat[0], list):
                return [[mpfr_to_hex(v) for v in row] for row in mat]
            return [mpfr_to_hex(v) for v in mat]

        doc = {
            "block_labels": self.block_labels,
            "matrices": [enc(m) for m in self.matrices],
            "objective": mpfr_to_hex(self.objective),
            "dual_objective": mpfr_to_hex(self.dual_objective),
            "y": [mpfr_to_hex(v) for v in self.y],
            "iterations": self.iterations,
            "precision": self.precision,
            "mu": mpfr_to_hex(self.mu),
            "primal_infeasibility": mpfr_to_hex(self.primal_infeasibility),
            "dual_infeasibility": mpfr_to_hex(self.dual_infeasibility),
            "meta": {
                k: v for k, v in self.meta.items() if _json_safe(v)
            },
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SolutionBundle":
        doc = json.loads(text)

        def dec(mat):
            if mat and isinstance(mat[0], list):
                return [[mpfr_from_hex(v) for v in row] for row in mat]
            return [mpfr_from_hex(v) for v in mat]

        return SolutionBundle(
            block_labels=doc["block_labels"],
            matrices=[dec(m) for m in doc["matrices"]],
            objective=mpfr_from_hex(doc["objective"]),
            dual_objective=mpfr_from_hex(doc["dual_objective"]),
            y=[mpfr_from_hex(v) for v in doc["y"]],
            iterations=doc["iterations"],
            precision=doc["precision"],
            mu=mpfr_from_hex(doc["mu"]),
            primal_infeasibility=mpfr_from_hex(doc["primal_infeasibility"]),
            dual_infeasibility=mpfr_from_hex(doc["dual_infeasibility"]),
            meta=doc.get("meta", {}),
        )


def _json_safe(v):
    return isinstance(v, (str, int, float, bool, list, dict, type(None)))


# ---------------------------------------------------------------------------
# the interior point method


class _Blocks:
    """Block-diagonal symmetric matrix operations (dense + diagonal blocks)."""

    def __init__(self, model: NumericModel):
        self.model = model
        self.sizes = [blk.size for blk in model.blocks]
        self.diag = [blk.diag for blk in model.blocks]
        self.total = sum(
            blk.size if blk.diag else blk.size * blk.size
            for blk in model.blocks
        )
        self.n = sum(self.sizes)

    def identity(self, scale=1):
        out = []
        for blk in self.model.blocks:
            if blk.diag:
                out.append([mpfr(scale)] * blk.size)
            else:
                out.append(_identity(blk.size, scale))
        return out

    def zeros(self):
        out = []
        for blk in self.model.blocks:
            if blk.diag:
                out.append([mpfr(0)] * blk.size)
            else:
                out.append(_zeros(blk.size))
        return out

    def inner(self, a, b):
        acc = mpfr(0)
        for bi, blk in enumerate(self.model.blocks):
            if blk.diag:
                for x, y in zip(a[bi], b[bi]):
                    acc += x * y
            else:
                for ra, rb in zip(a[bi], b[bi]):
                    for x, y in zip(ra, rb):
                        acc += x * y
        return acc

    def axpy(self, alpha, x, y):
        """y + alpha x, fresh storage."""
        out = []
        for bi, blk in enumerate(self.model.blocks):
            if blk.diag:
                out.append([yy + alpha * xx for xx, yy in zip(x[bi], y[bi])])
            else:
                out.append(
                    [
                        [yy + alpha * xx for xx, yy in zip(rx, ry)]
                        for rx, ry in zip(x[bi], y[bi])
                    ]
                )
        return out

    def constraint_inner(self, i, X):
        acc = mpfr(0)
        for bi, entries in self.model.constraints[i].items():
            xb = X[bi]
            if self.diag[bi]:
                for (r, c), v in entries.items():
                    acc += v * xb[r]
            else:
                for (r, c), v in entries.items():
                    acc += v * xb[r][c] * (2 if r != c else 1)
        return acc

    def adjoint(self, y):
        """sum_i y_i A_i as block matrices."""
        out = self.zeros()
        for i, row in enumerate(self.model.constraints):
            yi = y[i]
            if not yi:
                continue
            for bi, entries in row.items():
                ob = out[bi]
                if self.diag[bi]:
                    for (r, c), v in entries.items():
                        ob[r] += yi * v
                else:
                    for (r, c), v in entries.items():
                        ob[r][c] += yi * v
                        if r != c:
                            ob[c][r] += yi * v
        return out

    def is_pd(self, X):
        for bi, blk in enumerate(self.model.blocks):
            if blk.diag:
                if any(not v > 0 for v in X[bi]):
                    return False
            else:
                if _cholesky(X[bi]) is None:
                    return False
        return True

    def max_abs(self):
        top = mpfr(0)
        for row in self.model.constraints:
            for bi, entries in row.items():
                for v in entries.values():
                    top = max(top, abs(v))
        for bi, blk in enumerate(self.model.blocks):
            if blk.diag:
                for v in self.model.C[bi]:
                    top = max(top, abs(v))
            else:
                for r in self.model.C[bi]:
                    for v in r:
                        top = max(top, abs(v))
        for v in self.model.b:
            top = max(top, abs(v))
        return top


def _step_length(ops: _Blocks, X, dX, tau="0.98"):
    """Largest safe fraction of dX keeping X positive definite."""
    one = mpfr(1)
    alpha = one
    for _ in range(80):
        if ops.is_pd(ops.axpy(alpha, dX, X)):
            break
        alpha *= mpfr("0.6")
    else:
        return mpfr(0)
    while alpha < 1:
        trial = min(one, alpha * mpfr("1.25"))
        if ops.is_pd(ops.axpy(trial, dX, X)):
            if trial == one:
                alpha = one
                break
            alpha = trial
        else:
            break
    return min(one, alpha * mpfr(tau))


def solve_builtin(
    nm: NumericModel,
    precision: int | None = None,
    tol=DEFAULT_TOL,
    max_iterations: int = 300,
    feasibility_mu: Fraction = Fraction(1, 10 ** 18),
) -> SolutionBundle:
    """Primal-dual path following with Mehrotra corrector steps.

    A zero objective is treated as a feasibility/analytic-center problem:
    with C = 0 the central path has constant primal block, so the iterates
    converge to the analytic center of the feasible region.
    """
    precision = precision or nm.precision
    tol = Fraction(tol)
    with gmpy2.context(precision=precision):
        return _ipm(nm, mpfr(tol.numerator) / tol.denominator,
                    max_iterations, feasibility_mu)


def _ipm(nm: NumericModel, tol, max_iterations, feasibility_mu):
    ops = _Blocks(nm)
    m = nm.m
    zero_objective = all(
        (not any(v for v in nm.C[bi])) if blk.diag
        else (not any(v for row in nm.C[bi] for v in row))
        for bi, blk in enumerate(nm.blocks)
    )
    scale = max(mpfr(1), ops.max_abs())
    X = ops.identity(scale)
    Z = ops.identity(scale)
    y = [mpfr(0)] * m
    n = ops.n
    bnorm = max(mpfr(1), max(abs(v) for v in nm.b))

    mu_target = mpfr(feasibility_mu.numerator) / feasibility_mu.denominator
    stalls = 0
    it = 0
    for it in range(1, max_iterations + 1):
        rp = [nm.b[i] - ops.constraint_inner(i, X) for i in range(m)]
        Aty = ops.adjoint(y)
        Rd = []
        for bi, blk in enumerate(nm.blocks):
            if blk.diag:
                Rd.append(
                    [c - a - z for c, a, z in zip(nm.C[bi], Aty[bi], Z[bi])]
                )
            else:
                Rd.append(
                    [
                        [c - a - z for c, a, z in zip(rc, ra, rz)]
                        for rc, ra, rz in zip(nm.C[bi], Aty[bi], Z[bi])
                    ]
                )
        mu = ops.inner(X, Z) / n
        pinf = max(abs(v) for v in rp) / bnorm
        dinf = mpfr(0)
        for bi, blk in enumerate(nm.blocks):
            if blk.diag:
                dinf = max(dinf, max(abs(v) for v in Rd[bi]))
            else:
                dinf = max(dinf, max(abs(v) for row in Rd[bi] for v in row))
        dinf = dinf / max(mpfr(1), scale)
        obj_p = ops.inner(nm.C, X)
        obj_d = sum(bv * yv for bv, yv in zip(nm.b, y))
        gap = abs(obj_p - obj_d) / max(mpfr(1), (abs(obj_p) + abs(obj_d)) / 2)

        done_feas = pinf <= tol and dinf <= tol
        if zero_objective:
            if done_feas and mu <= mu_target:
                break
        else:
            if done_feas and gap <= tol and mu / max(mpfr(1), abs(obj_p)) <= tol:
                break

        # factor Z blocks, inverse
        Zi = []
        for bi, blk in enumerate(nm.blocks):
            if blk.diag:
                if any(not v > 0 for v in Z[bi]):
                    raise NoProgress("dual iterate left the cone")
                Zi.append([1 / v for v in Z[bi]])
            else:
                L = _cholesky(Z[bi])
                if L is None:
                    raise NoProgress("dual iterate left the cone")
                Zi.append(_chol_inverse(L))

        # Schur system solver (dense, or low-rank eliminated for samples)
        schur = _build_schur_solver(nm, ops, X, Z, Zi)

        def solve_direction(Rc):
            # dX_hat = (Rc - X (Rd - A^T dy)) Z^-1 ; A(dX) = rp
            # rhs_i = rp_i - tr(A_i (Rc - X Rd) Z^-1)
            G = []
            for bi, blk in enumerate(nm.blocks):
                if blk.diag:
                    G.append(
                        [
                            (rc - xv * rd) * ziv
                            for rc, xv, rd, ziv in zip(
                                Rc[bi], X[bi], Rd[bi], Zi[bi]
                            )
                        ]
                    )
                else:
                    xr = _matmul(X[bi], Rd[bi])
                    inner = [
                        [rcv - xv for rcv, xv in zip(rrc, rxr)]
                        for rrc, rxr in zip(Rc[bi], xr)
                    ]
                    G.append(_matmul(inner, Zi[bi]))
            rhs = []
            for i in range(m):
                acc = rp[i]
                for bi, entries in nm.constraints[i].items():
                    gb = G[bi]
                    if ops.diag[bi]:
                        for (r, _c), v in entries.items():
                            acc -= v * gb[r]
                    else:
                        for (r, c), v in entries.items():
                            acc -= v * (gb[r][c] + gb[c][r]) if r != c else v * gb[r][r]
                rhs.append(acc)
            dy = schur.solve(rhs)
            AtDy = ops.adjoint(dy)
            dZ, dX = [], []
            for bi, blk in enumerate(nm.blocks):
                if blk.diag:
                    dzb = [rd - at for rd, at in zip(Rd[bi], AtDy[bi])]
                    dZ.append(dzb)
                    dX.append(
                        [
                            (rc - xv * dz) * ziv
                            for rc, xv, dz, ziv in zip(
                                Rc[bi], X[bi], dzb, Zi[bi]
                            )
                        ]
                    )
                else:
                    dzb = [
                        [rd - at for rd, at in zip(rrd, rat)]
                        for rrd, rat in zip(Rd[bi], AtDy[bi])
                    ]
                    dZ.append(dzb)
                    xdz = _matmul(X[bi], dzb)
                    inner = [
                        [rcv - xv for rcv, xv in zip(rrc, rxd)]
                        for rrc, rxd in zip(Rc[bi], xdz)
                    ]
                    dxh = _matmul(inner, Zi[bi])
                    dX.append(
                        [
                            [
                                (dxh[r][c] + dxh[c][r]) / 2
                                for c in range(blk.size)
                            ]
                            for r in range(blk.size)
                        ]
                    )
            return dX, dy, dZ

        # predictor
        Rc_aff = []
        for bi, blk in enumerate(nm.blocks):
            if blk.diag:
                Rc_aff.append([-xv * zv for xv, zv in zip(X[bi], Z[bi])])
            else:
                xz = _matmul(X[bi], Z[bi])
                Rc_aff.append([[-v for v in row] for row in xz])
        dXa, dya, dZa = solve_direction(Rc_aff)
        ap = _step_length(ops, X, dXa)
        ad = _step_length(ops, Z, dZa)
        Xa = ops.axpy(ap, dXa, X)
        Za = ops.axpy(ad, dZa, Z)
        mu_aff = ops.inner(Xa, Za) / n
        sigma = (mu_aff / mu) ** 3
        sigma = min(max(sigma, mpfr("1e-10")), mpfr("0.9999"))

        # corrector
        Rc = []
        for bi, blk in enumerate(nm.blocks):
            target = sigma * mu
            if blk.diag:
                Rc.append(
                    [
                        target - xv * zv - dx * dz
                        for xv, zv, dx, dz in zip(
                            X[bi], Z[bi], dXa[bi], dZa[bi]
                        )
                    ]
                )
            else:
                xz = _matmul(X[bi], Z[bi])
                dd = _matmul(dXa[bi], dZa[bi])
                blkmat = [
                    [
                        (target if r == c else mpfr(0)) - xz[r][c] - dd[r][c]
                        for c in range(blk.size)
                    ]
                    for r in range(blk.size)
                ]
                Rc.append(blkmat)
        dX, dy, dZ = solve_direction(Rc)
        ap = _step_length(ops, X, dX)
        ad = _step_length(ops, Z, dZ)
        if ap < mpfr("1e-24") and ad < mpfr("1e-24"):
            stalls += 1
            if stalls >= 3:
                raise NoProgress(f"step lengths vanished at iteration {it}")
        else:
            stalls = 0
        X = ops.axpy(ap, dX, X)
        y = [yv + ad * dv for yv, dv in zip(y, dy)]
        Z = ops.axpy(ad, dZ, Z)
    else:
        raise NoProgress(f"no convergence in {max_iterations} iterations")

    return SolutionBundle(
        block_labels=[blk.label for blk in nm.blocks],
        matrices=X,
        objective=ops.inner(nm.C, X),
        dual_objective=sum(bv * yv for bv, yv in zip(nm.b, y)),
        y=y,
        iterations=it,
        precision=gmpy2.get_context().precision,
        mu=ops.inner(X, Z) / n,
        primal_infeasibility=max(
            abs(nm.b[i] - ops.constraint_inner(i, X)) for i in range(m)
        ),
        dual_infeasibility=dinf,
        meta=dict(nm.meta),
    )


def _densify_constraints(nm: NumericModel, ops: _Blocks):
    got = nm._caches.get("dense")
    if got is not None:
        return got
    per_block = [dict() for _ in nm.blocks]
    for i, row in enumerate(nm.constraints):
        for bi, entries in row.items():
            if ops.diag[bi]:
                per_block[bi][i] = dict(entries)
            else:
                per_block[bi][i] = _sym_from_upper(entries, nm.blocks[bi].size)
    nm._caches["dense"] = per_block
    return per_block


# -- Schur complement machinery ---------------------------------------------
#
# Sample constraints (each touching only small coupled dense blocks plus one
# private diagonal slack entry) make the sample-sample part of the Schur
# matrix a diagonal plus a low-rank form A^T K A with K = Z^-1 (x) X on the
# coupled blocks.  That part is inverted by the Woodbury identity at
# O(k q^2) instead of O(k^3), with q the total squared size of the coupled
# blocks; remaining constraints go through a small dense LU.

_ELIMINATION_MIN = 32
_NO_STRUCTURE = object()


def _sample_structure(nm: NumericModel, ops: _Blocks):
    got = nm._caches.get("structure")
    if got is not None:
        return None if got is _NO_STRUCTURE else got
    m = nm.m
    diag_owner: dict = {}
    for i, row in enumerate(nm.constraints):
        for bi, entries in row.items():
            if ops.diag[bi]:
                for (r, c) in entries:
                    diag_owner.setdefault((bi, r), []).append(i)
    candidates = []
    for i, row in enumerate(nm.constraints):
        diag_hits = [
            (bi, r)
            for bi, entries in row.items()
            if ops.diag[bi]
            for (r, c) in entries
        ]
        if len(diag_hits) == 1 and len(diag_owner[diag_hits[0]]) == 1:
            candidates.append((i, diag_hits[0]))
    if len(candidates) < _ELIMINATION_MIN:
        result = None
    else:
        samples = [i for i, _ in candidates]
        sample_set = set(samples)
        heavy = [i for i in range(m) if i not in sample_set]
        coupled = sorted(
            {
                bi
                for i in samples
                for bi in nm.constraints[i]
                if not ops.diag[bi]
            }
        )
        offsets = {}
        q = 0
        for bi in coupled:
            offsets[bi] = q
            q += nm.blocks[bi].size ** 2
        dense_A = _densify_constraints(nm, ops)

        def flatten(i):
            vec = [mpfr(0)] * q
            for bi in coupled:
                mat = dense_A[bi].get(i)
                if mat is None:
                    continue
                off = offsets[bi]
                nb = nm.blocks[bi].size
                for r in range(nb):
                    row_m = mat[r]
                    base = off + r * nb
                    for c in range(nb):
                        vec[base + c] = row_m[c]
            return vec

        a_cols = {i: flatten(i) for i in samples}
        heavy_cols = {i: flatten(i) for i in heavy}
        slack_entry = {i: e for i, e in candidates}
        result = {
            "samples": samples,
            "heavy": heavy,
            "coupled": coupled,
            "offsets": offsets,
            "q": q,
            "a_cols": a_cols,
            "heavy_cols": heavy_cols,
            "slack_entry": slack_entry,
        }
    nm._caches["structure"] = _NO_STRUCTURE if result is None else result
    return result


class _DenseSchur:
    def __init__(self, nm, ops, X, Zi):
        m = nm.m
        dense_A = _densify_constraints(nm, ops)
        M = [[mpfr(0)] * m for _ in range(m)]
        for bi, blk in enumerate(nm.blocks):
            touching = dense_A[bi]
            if not touching:
                continue
            if blk.diag:
                xb, zib = X[bi], Zi[bi]
                w = [xb[r] * zib[r] for r in range(blk.size)]
                for i, Ai in touching.items():
                    Mi = M[i]
                    for j, Aj in touching.items():
                        if j < i:
                            continue
                        acc = mpfr(0)
                        for (r, _c), v in Ai.items():
                            vj = Aj.get((r, _c))
                            if vj is not None:
                                acc += v * vj * w[r]
                        Mi[j] += acc
                        if i != j:
                            M[j][i] += acc
            else:
                xb, zib = X[bi], Zi[bi]
                Ws = {j: _matmul(_matmul(xb, Aj), zib) for j, Aj in touching.items()}
                for i in touching:
                    entries = nm.constraints[i][bi]
                    Mi = M[i]
                    for j, Wj in Ws.items():
                        acc = mpfr(0)
                        for (r, c), v in entries.items():
                            acc += v * (Wj[c][r] + Wj[r][c]) if r != c else v * Wj[r][r]
                        Mi[j] += acc
        self.fact = _lu_factor(M)

    def solve(self, rhs):
        return _lu_solve(self.fact, rhs)


class _EliminatedSchur:
    """Partitioned Schur solve with Woodbury on the sample block."""

    def __init__(self, nm, ops, X, Z, Zi, structure):
        self.nm = nm
        self.st = st = structure
        samples, heavy = st["samples"], st["heavy"]
        coupled, offsets, q = st["coupled"], st["offsets"], st["q"]
        m = nm.m

        # диag part D and its inverse
        self.D = {}
        for i in samples:
            bi, r = st["slack_entry"][i]
            v = nm.constraints[i][bi][(r, r)]
            self.D[i] = v * v * X[bi][r] * Zi[bi][r]

        # K applied to sample columns: kappa_j = vec(X A_j Z^-1) on coupled blocks
        dense_A = _densify_constraints(nm, ops)
        self.kappa = {}
        for j in samples:
            vec = [mpfr(0)] * q
            for bi in coupled:
                Aj = dense_A[bi].get(j)
                if Aj is None:
                    continue
                W = _matmul(_matmul(X[bi], Aj), Zi[bi])
                off = offsets[bi]
                nb = nm.blocks[bi].size
                for r in range(nb):
                    wr = W[r]
                    base = off + r * nb
                    for c in range(nb):
                        vec[base + c] = wr[c]
            self.kappa[j] = vec

        # J = K^-1 + sum_j a_j a_j^T / D_j  on the coupled vec space
        Kinv = [[mpfr(0)] * q for _ in range(q)]
        for bi in coupled:
            nb = nm.blocks[bi].size
            off = offsets[bi]
            L = _cholesky(X[bi])
            if L is None:
                raise NoProgress("primal iterate left the cone")
            Xinv = _chol_inverse(L)
            Zb = Z[bi]
            for r in range(nb):
                for c in range(nb):
                    for r2 in range(nb):
                        base_rc = off + r * nb + c
                        row_out = Kinv[base_rc]
                        for c2 in range(nb):
                            row_out[off + r2 * nb + c2] = (
                                Zb[c][c2] * Xinv[r][r2]
                            )
        J = Kinv
        for j in samples:
            aj = st["a_cols"][j]
            dinv = 1 / self.D[j]
            nz = [(t, aj[t]) for t in range(q) if aj[t]]
            for t1, v1 in nz:
                row = J[t1]
                w = v1 * dinv
                for t2, v2 in nz:
                    row[t2] += w * v2
        self.J_fact = _lu_factor(J)
        self.q = q

        # heavy-heavy dense part over ALL blocks
        mh = len(heavy)
        self.heavy = heavy
        self.samples = samples
        hidx = {i: t for t, i in enumerate(heavy)}
        M_HH = [[mpfr(0)] * mh for _ in range(mh)]
        for bi, blk in enumerate(nm.blocks):
            touching = {
                i: mat for i, mat in dense_A[bi].items() if i in hidx
            }
            if not touching:
                continue
            if blk.diag:
                xb, zib = X[bi], Zi[bi]
                w = [xb[r] * zib[r] for r in range(blk.size)]
                for i, Ai in touching.items():
                    for j, Aj in touching.items():
                        acc = mpfr(0)
                        for (r, _c), v in Ai.items():
                            vj = Aj.get((r, _c))
                            if vj is not None:
                                acc += v * vj * w[r]
                        M_HH[hidx[i]][hidx[j]] += acc
            else:
                xb, zib = X[bi], Zi[bi]
                Ws = {j: _matmul(_matmul(xb, Aj), zib) for j, Aj in touching.items()}
                for i in touching:
                    entries = nm.constraints[i][bi]
                    for j, Wj in Ws.items():
                        acc = mpfr(0)
                        for (r, c), v in entries.items():
                            acc += (
                                v * (Wj[c][r] + Wj[r][c])
                                if r != c
                                else v * Wj[r][r]
                            )
                        M_HH[hidx[i]][hidx[j]] += acc

        # M_HS columns over the coupled blocks: a_i^H . kappa_j
        self.M_HS = []
        for i in heavy:
            hi = st["heavy_cols"][i]
            nzh = [(t, hi[t]) for t in range(q) if hi[t]]
            row = []
            for j in samples:
                kj = self.kappa[j]
                acc = mpfr(0)
                for t, v in nzh:
                    acc += v * kj[t]
                row.append(acc)
            self.M_HS.append(row)

        # S_H = M_HH - M_HS Mss^-1 M_SH  (M_SH = M_HS^T on the coupled part)
        self.mss_inv_cols = [
            self._mss_inv([self.M_HS[t][s] for s in range(len(samples))])
            for t in range(mh)
        ]
        S_H = [row[:] for row in M_HH]
        for t1 in range(mh):
            col = self.mss_inv_cols[t1]
            for t2 in range(mh):
                acc = mpfr(0)
                row2 = self.M_HS[t2]
                for s in range(len(samples)):
                    acc += row2[s] * col[s]
                S_H[t2][t1] -= acc
        self.SH_fact = _lu_factor(S_H) if mh else None

    def _mss_inv(self, v):
        """(D + A^T K A)^-1 v by the Woodbury identity."""
        samples = self.samples
        u = [v[s] / self.D[i] for s, i in enumerate(samples)]
        w = [mpfr(0)] * self.q
        for s, i in enumerate(samples):
            ai = self.st["a_cols"][i]
            us = u[s]
            if us:
                for t in range(self.q):
                    if ai[t]:
                        w[t] += us * ai[t]
        # note: A^T K A = (K A)^T A since K is symmetric; use kappa = K a
        t_vec = _lu_solve(self.J_fact, w)
        out = []
        for s, i in enumerate(samples):
            ai = self.st["a_cols"][i]
            acc = mpfr(0)
            for t in range(self.q):
                if ai[t]:
                    acc += ai[t] * t_vec[t]
            out.append(u[s] - acc / self.D[i])
        return out

    def solve(self, rhs):
        heavy, samples = self.heavy, self.samples
        h_H = [rhs[i] for i in heavy]
        h_S = [rhs[i] for i in samples]
        s_inv_hs = self._mss_inv(h_S)
        dy = [mpfr(0)] * len(rhs)
        if heavy:
            rhs_H = []
            for t, i in enumerate(heavy):
                acc = h_H[t]
                row = self.M_HS[t]
                for s in range(len(samples)):
                    acc -= row[s] * s_inv_hs[s]
                rhs_H.append(acc)
            dy_H = _lu_solve(self.SH_fact, rhs_H)
            # dy_S = Mss^-1 (h_S - M_SH dy_H); reuse Mss^-1 columns of M_SH
            corr = [mpfr(0)] * len(samples)
            for t in range(len(heavy)):
                w = dy_H[t]
                if w:
                    col = self.mss_inv_cols[t]
                    for s in range(len(samples)):
                        corr[s] += w * col[s]
            dy_S = [s_inv_hs[s] - corr[s] for s in range(len(samples))]
            for t, i in enumerate(heavy):
                dy[i] = dy_H[t]
        else:
            dy_S = s_inv_hs
        for s, i in enumerate(samples):
            dy[i] = dy_S[s]
        return dy


def _build_schur_solver(nm: NumericModel, ops: _Blocks, X, Z, Zi):
    structure = _sample_structure(nm, ops)
    if structure is None:
        return _DenseSchur(nm, ops, X, Zi)
    return _EliminatedSchur(nm, ops, X, Z, Zi, structure)


# ---------------------------------------------------------------------------
# feasibility via phase 1, with exact infeasibility certificates


def phase1_model(nm: NumericModel) -> NumericModel:
    """min t  s.t.  A(Y) + t (b - A(I)) = b, t >= 0; strictly feasible."""
    ops = _Blocks(nm)
    eye = ops.identity(1)
    r = [nm.b[i] - ops.constraint_inner(i, eye) for i in range(len(nm.b))]
    blocks = list(nm.blocks) + [NumericBlock(label="phase1_t", size=1, diag=True)]
    t_index = len(nm.blocks)
    constraints = []
    for i, row in enumerate(nm.constraints):
        new = {bi: dict(entries) for bi, entries in row.items()}
        if r[i]:
            new[t_index] = {(0, 0): r[i]}
        constraints.append(new)
    C = [
        ([mpfr(0)] * blk.size) if blk.diag else _zeros(blk.size)
        for blk in nm.blocks
    ]
    C.append([mpfr(1)])
    return NumericModel(
        blocks=blocks,
        b=list(nm.b),
        C=C,
        constraints=constraints,
        precision=nm.precision,
        meta={"phase1_of": nm.meta, "t_index": t_index},
    )


def check_feasibility(
    nm: NumericModel,
    precision: int | None = None,
    tol=Fraction(1, 10 ** 24),
    infeasibility_threshold=Fraction(1, 10 ** 10),
    exact_constraints=None,
    exact_b=None,
):
    """Solve the phase-1 embedding; return (bundle, t*) or raise Infeasible.

    On apparent infeasibility (t* above the threshold) the dual vector is
    an improving ray; when exact rational constraint data is supplied the
    ray is rounded to rationals and the Farkas conditions  -A^T(y) >= 0,
    b^T y > 0  are verified in exact arithmetic before reporting.
    """
    p1 = phase1_model(nm)
    bundle = solve_builtin(p1, precision=precision, tol=Fraction(tol))
    t_star = bundle.matrices[p1.meta["t_index"]][0]
    thresh = mpfr(infeasibility_threshold.numerator) / infeasibility_threshold.denominator
    if t_star <= thresh:
        return bundle, t_star
    certificate = None
    if exact_constraints is not None:
        certificate = _exact_farkas(exact_constraints, exact_b, bundle.y)
        if certificate is None:
            raise NoProgress(
                "phase-1 optimum is positive but the exact Farkas check failed"
            )
    raise Infeasible(
        f"no feasible point: phase-1 optimum {t_star} exceeds threshold",
        certificate=certificate or {"t_star": str(t_star), "y": bundle.y},
    )


def _exact_farkas(exact_constraints, exact_b, y_numeric):
    """Exact dual improving ray check over the rationals.

    exact_constraints: per i: dict block label -> {(r,c): Fraction}, r <= c
    exact_b: list of Fractions.
    """
    from .polyalg import RationalMatrix

    y = []
    for v in y_numeric:
        num, den = v.as_integer_ratio()
        y.append(Fraction(int(num), int(den)).limit_denominator(10 ** 40))
    value = sum(bi * yi for bi, yi in zip(exact_b, y))
    if not value > 0:
        return None
    sizes = {}
    for row in exact_constraints:
        for label, entries in row.items():
            top = max(max(r, c) for r, c in entries)
            sizes[label] = max(sizes.get(label, 0), top + 1)
    for label, n in sorted(sizes.items()):
        s = [[Fraction(0)] * n for _ in range(n)]
        for i, row in enumerate(exact_constraints):
            entries = row.get(label)
            if not entries or y[i] == 0:
                continue
            for (r, c), v in entries.items():
                s[r][c] -= y[i] * v
                if r != c:
                    s[c][r] -= y[i] * v
        if not _rational_psd(RationalMatrix(s)):
            return None
    return {"y": [str(v) for v in y], "objective": str(value)}


def _rational_psd(a) -> bool:
    """Exact PSD test by pivoted symmetric elimination."""
    m = [row[:] for row in a.entries]
    n = a.rows
    idx = list(range(n))
    for k in range(n):
        # pick the largest diagonal pivot among the remainder
        p = max(range(k, n), key=lambda r: m[r][r])
        if p != k:
            m[k], m[p] = m[p], m[k]
            for row in m:
                row[k], row[p] = row[p], row[k]
        piv = m[k][k]
        if piv < 0:
            return False
        if piv == 0:
            # remaining diagonal is <= 0; PSD requires the whole row zero
            for r in range(k, n):
                if any(m[r][c] != 0 for c in range(k, n)):
                    return False
            return True
        for r in range(k + 1, n):
            f = m[r][k] / piv
            if f:
                for c in range(k, n):
                    m[r][c] -= f * m[k][c]
    return True


def solve_sos_feasibility(target, d: int, precision: int = 192):
    """Decide invariant-SOS membership of a theta polynomial at budget d.

    Returns (bundle, t_star) when a Gram certificate exists; raises
    Infeasible (with an exactly verified dual ray for this all-rational
    system) when none does, e.g. for nonnegative non-SOS polynomials.
    """
    from .model import sos_feasibility_data

    blocks, monomials, exact_constraints, exact_b = sos_feasibility_data(target, d)
    with gmpy2.context(precision=precision):
        nb = [NumericBlock(label=f"R:{name}", size=vm.size) for name, vm in blocks.items()]
        label_to_idx = {blk.label: i for i, blk in enumerate(nb)}
        constraints = []
        for row in exact_constraints:
            nrow = {}
            for label, mat in row.items():
                nrow[label_to_idx[label]] = {
                    ij: mpfr(v.numerator) / v.denominator for ij, v in mat.items()
                }
            constraints.append(nrow)
        b = [mpfr(v.numerator) / v.denominator for v in exact_b]
        C = [_zeros(blk.size) for blk in nb]
        nm = NumericModel(
            blocks=nb, b=b, C=C, constraints=constraints, precision=precision,
            meta={"kind": "sos_feasibility", "d": d},
        )
    return check_feasibility(
        nm,
        precision=precision,
        exact_constraints=exact_constraints,
        exact_b=exact_b,
    )


# ---------------------------------------------------------------------------
# analytic center re-solve


def analytic_center_pass(
    nm: NumericModel,
    z_star,
    eta=Fraction(1, 10 ** 5),
    precision: int | None = None,
    tol=DEFAULT_TOL,
    mu_target=Fraction(1, 10 ** 18),
) -> SolutionBundle:
    """Feasibility re-solve with the objective turned into a constraint.

    Adds <C, Y> + s = z* + eta with a fresh slack s >= 0 and zero
    objective; the iterates then converge to the analytic center, whose
    blocks are positive definite with healthy least eigenvalues.
    """
    precision = precision or nm.precision
    with gmpy2.context(precision=precision):
        eta_v = mpfr(Fraction(eta).numerator) / Fraction(eta).denominator
        bound = mpfr(z_star) + eta_v
        blocks = list(nm.blocks) + [
            NumericBlock(label="center_slack", size=1, diag=True)
        ]
        s_index = len(nm.blocks)
        constraints = [
            {bi: dict(entries) for bi, entries in row.items()}
            for row in nm.constraints
        ]
        obj_row = {}
        for bi, blk in enumerate(nm.blocks):
            if blk.diag:
                ent = {
                    (i, i): nm.C[bi][i]
                    for i in range(blk.size)
                    if nm.C[bi][i]
                }
            else:
                ent = {}
                for i in range(blk.size):
                    for j in range(i, blk.size):
                        if nm.C[bi][i][j]:
                            ent[(i, j)] = nm.C[bi][i][j]
            if ent:
                obj_row[bi] = ent
        obj_row[s_index] = {(0, 0): mpfr(1)}
        constraints.append(obj_row)
        C = [
            ([mpfr(0)] * blk.size) if blk.diag else _zeros(blk.size)
            for blk in blocks
        ]
        center = NumericModel(
            blocks=blocks,
            b=list(nm.b) + [bound],
            C=C,
            constraints=constraints,
            precision=precision,
            exact_model=nm.exact_model,
            meta={**nm.meta, "center_slack_index": s_index, "z_bound": str(bound)},
        )
        bundle = solve_builtin(
            center, precision=precision, tol=Fraction(tol),
            feasibility_mu=Fraction(mu_target),
        )
        # report the original objective value of the centered point
        ops = _Blocks(nm)
        obj = ops.inner(nm.C, bundle.matrices[: len(nm.blocks)])
        bundle.meta["center_objective"] = str(obj)
        bundle.objective = obj
        return bundle


def block_min_eigenvalue_bound(mat) -> mpfr:
    """Cheap certified-ish lower bound via binary searched Cholesky shifts."""
    if mat and not isinstance(mat[0], list):
        return min(mat)
    n = len(mat)
    hi = min(mat[i][i] for i in range(n))
    if _cholesky([[mat[i][j] - (hi if i == j else 0) for j in range(n)] for i in range(n)]):
        return hi
    lo = mpfr(0)
    for _ in range(80):
        mid = (lo + hi) / 2
        shifted = [
            [mat[i][j] - (mid if i == j else 0) for j in range(n)]
            for i in range(n)
        ]
        if _cholesky(shifted) is not None:
            lo = mid
        else:
            hi = mid
    return lo
