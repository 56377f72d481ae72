"""Command-line pipeline: invariant tables, model building, solving,
certification, domain checking, full bound runs, and reference values.

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 certification
failure, 5 domain-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__, b3, certify as certify_mod, domaincheck, model as model_mod
from . import solver as solver_mod
from ._tabledata import (
    POLYTOPE_TABLE,
    PUBLISHED_QPI,
    SUPERBALL_TABLE,
    VERIFIED_BOUNDS,
)
from .geometry import Solid, bound_transfer, c1_density
from .intervals import IntervalScalar, set_precision

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_CERTIFY = 4
EXIT_DOMAIN = 5


class UsageError(Exception):
    pass


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _write_json(path, payload: dict, stamp=True):
    doc = dict(payload)
    if stamp:
        doc["meta"] = dict(doc.get("meta", {}))
        doc["meta"]["written_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    text = json.dumps(doc, indent=1, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(text + "\n")


def certified_schema() -> dict:
    """The JSON schema that certified-output documents conform to."""
    from importlib import resources

    text = resources.files("packbound").joinpath(
        "data/certified.schema.json"
    ).read_text()
    return json.loads(text)


def _load_config(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            overrides = json.load(fh)
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise UsageError(f"unknown config key {key!r}")
            cur = getattr(args, attr)
            if isinstance(cur, Fraction) or attr in (
                "alpha", "delta", "spacing", "shell_spacing", "shell_alpha",
                "tol", "eta",
            ):
                value = Fraction(str(value))
            setattr(args, attr, value)
    return args


def _validate_run(args):
    if getattr(args, "d", None) is not None:
        if args.d % 2 == 0 or args.d <= 0:
            raise UsageError("the degree budget d must be odd and positive")
    if getattr(args, "alpha", None) is not None and args.alpha < 1:
        raise UsageError("alpha must be at least 1")
    if getattr(args, "precision", None) is not None and args.precision < 64:
        raise UsageError("precision must be at least 64 bits")


def _samples_for(solid, args):
    if solid.sample_region_empty():
        return []
    return model_mod.generate_samples(
        solid,
        args.spacing,
        shell_spacing=args.shell_spacing,
        shell_alpha=args.shell_alpha,
    )


def _solve_pipeline(solid, args):
    samples = _samples_for(solid, args)
    mdl = model_mod.assemble(solid, args.d, samples)
    nm = solver_mod.build_numeric_model(mdl, precision=args.precision)
    if args.backend == "file":
        text = solver_mod.export_sdpa(nm)
        path = args.sdpa_out or "model.sdpa"
        with open(path, "w") as fh:
            fh.write(text)
        return mdl, nm, None, None, path
    first = solver_mod.solve_builtin(
        nm, tol=args.tol, feasibility_mu=Fraction(args.tol) / 10
    )
    center = solver_mod.analytic_center_pass(
        nm,
        first.objective,
        eta=args.eta,
        tol=args.tol,
        mu_target=Fraction(args.tol) / 1000,
    )
    return mdl, nm, first, center, None


def cmd_bound(args) -> int:
    solid = Solid.load(args.solid)
    alpha = Fraction(args.alpha if args.alpha is not None else solid.default_alpha)
    if solid.sample_region_empty():
        alpha = Fraction(1)
    set_precision(args.precision)
    mdl, nm, first, center, _ = _solve_pipeline(solid, args)
    cert = certify_mod.certify(center, mdl, solid, alpha=alpha)
    fg = certify_mod.transformed_coefficients(mdl, cert.tilde)
    needs_domain_check = bool(mdl.samples) or alpha != 1
    report = None
    if needs_domain_check:
        report = domaincheck.check_domain(
            fg,
            solid,
            alpha,
            args.delta,
            split_threshold=args.split_threshold,
            max_depth=args.max_depth,
            threads=args.threads,
        )
        if not report.certified:
            print(f"domain check failed: {report.status} {report.detail}")
            return EXIT_DOMAIN
    print(cert.report(solid.name))
    if report is not None:
        print(
            f"  domain check: {report.status} over {report.cubes_processed} cubes "
            f"(max grid {report.max_grid_size})"
        )
    if args.out_prefix:
        _write_bundle_files(args, solid, alpha, mdl, center, cert, fg, report)
    return 0


def _fg_json(fg):
    return {
        " ".join(str(v) for v in m): iv.to_json() for m, iv in sorted(fg.items())
    }


def _fg_from_json(doc):
    out = {}
    for key, iv in doc.items():
        m = tuple(int(v) for v in key.split())
        out[m] = IntervalScalar.from_json(iv)
    return out


def _write_bundle_files(args, solid, alpha, mdl, center, cert, fg, report):
    prefix = args.out_prefix
    # exact theta-coordinate transform rides along in the bundle file
    center.meta["transform_theta_text"] = certify_mod.exact_transform_theta(
        mdl, center
    ).text()
    with open(prefix + ".solution.json", "w") as fh:
        fh.write(center.to_json())
    payload = {
        "solid": solid.name,
        "d": args.d,
        "alpha": str(alpha),
        "seed": args.seed,
        "bound_upper": str(cert.bound.hi),
        "bound_interval": cert.bound.to_json(),
        "objective": cert.objective.to_json(),
        "volume": cert.volume.to_json(),
        "certificate": json.loads(cert.to_json()),
        "fg_coefficients": _fg_json(fg),
    }
    if report is not None:
        payload["domain_check"] = {
            "status": report.status,
            "cubes": report.cubes_processed,
            "max_grid_size": report.max_grid_size,
        }
    _write_json(prefix + ".certified.json", payload)


def cmd_model(args) -> int:
    solid = Solid.load(args.solid)
    samples = _samples_for(solid, args)
    mdl = model_mod.assemble(solid, args.d, samples)
    text = model_mod.model_to_json(mdl)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_solve(args) -> int:
    solid = Solid.load(args.solid)
    set_precision(args.precision)
    mdl, nm, first, center, sdpa_path = _solve_pipeline(solid, args)
    if sdpa_path is not None:
        print(f"SDPA model written to {sdpa_path}")
        return 0
    bundle = center if args.analytic_center else first
    print(
        f"objective {float(first.objective):.12f} after {first.iterations} "
        f"iterations (precision {args.precision} bits)"
    )
    if args.analytic_center:
        print(
            f"analytic center pass: {center.iterations} iterations, "
            f"objective {float(center.objective):.12f}"
        )
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(bundle.to_json())
    return 0


def cmd_certify(args) -> int:
    solid = Solid.load(args.solid)
    set_precision(args.precision)
    samples = _samples_for(solid, args)
    mdl = model_mod.assemble(solid, args.d, samples)
    with open(args.solution) as fh:
        bundle = solver_mod.SolutionBundle.from_json(fh.read())
    alpha = Fraction(args.alpha if args.alpha is not None else solid.default_alpha)
    if solid.sample_region_empty():
        alpha = Fraction(1)
    cert = certify_mod.certify(bundle, mdl, solid, alpha=alpha)
    print(cert.report(solid.name))
    if args.out:
        fg = certify_mod.transformed_coefficients(mdl, cert.tilde)
        payload = {
            "solid": solid.name,
            "d": args.d,
            "alpha": str(alpha),
            "bound_upper": str(cert.bound.hi),
            "certificate": json.loads(cert.to_json()),
            "fg_coefficients": _fg_json(fg),
        }
        _write_json(args.out, payload)
    return 0


def cmd_check_domain(args) -> int:
    solid = Solid.load(args.solid)
    set_precision(args.precision)
    with open(args.solution) as fh:
        doc = json.load(fh)
    fg = _fg_from_json(doc["fg_coefficients"])
    report = domaincheck.check_domain(
        fg,
        solid,
        args.alpha,
        args.delta,
        split_threshold=args.split_threshold,
        max_depth=args.max_depth,
        threads=args.threads,
    )
    print(
        f"{report.status}: {report.cubes_processed} cubes, max grid "
        f"{report.max_grid_size}, {report.wall_time:.1f}s"
    )
    if args.cube_list:
        domaincheck.write_cube_list(report.cube_list, args.cube_list)
    if not report.certified:
        print(f"detail: {report.detail}")
        return EXIT_DOMAIN
    return 0


def cmd_invariants(args) -> int:
    if args.dump:
        print(b3.dump_tables())
    else:
        for name in b3.IRREP_NAMES:
            data = b3.isotypic_data(name)
            degs = [r.degree for r in data.rows]
            print(f"{name}: degree {data.irrep.degree}, row degrees {degs}")
    return 0


def cmd_reference(args) -> int:
    if args.what == "c1":
        if args.p is None:
            raise UsageError("reference c1 requires --p")
        value = c1_density(args.p)
        print(f"densest-known lattice density for p={args.p}: {float(value):.10f}")
    elif args.what == "transfer":
        if args.bound is None or args.ratio is None:
            raise UsageError("reference transfer requires --bound and --ratio")
        value, clamped = bound_transfer(args.bound, args.ratio)
        suffix = " (clamped to 1)" if clamped else ""
        print(f"transferred bound: {float(value):.9f}{suffix}")
    elif args.what == "tables":
        print("superball packing density bounds (lower / translative upper):")
        for p, (lo, hi) in SUPERBALL_TABLE.items():
            print(f"  p={p}: {lo}  /  {hi}")
        print("polytope packing density bounds (lower / translative upper):")
        for name, (lo, hi) in POLYTOPE_TABLE.items():
            print(f"  {name}: {lo}  /  {hi}")
        print("rigorously verified bounds (body, upper bound, factor alpha):")
        for body, bound, alpha in VERIFIED_BOUNDS:
            print(f"  {body}: {bound} at alpha = {alpha}")
        print("published Q-matrix table: %d irreducibles" % len(PUBLISHED_QPI))
    else:
        raise UsageError(f"unknown reference {args.what!r}")
    return 0


def _add_run_options(p, with_alpha=True):
    p.add_argument("--solid", required=True, help="superball:p=Q, bundled name, or config path")
    p.add_argument("--d", type=int, required=True, help="odd degree budget")
    p.add_argument("--precision", type=int, default=256)
    p.add_argument("--tol", type=_fraction, default=Fraction(1, 10 ** 13))
    p.add_argument("--eta", type=_fraction, default=Fraction(1, 10 ** 5))
    p.add_argument("--spacing", type=_fraction, default=Fraction(1, 50))
    p.add_argument("--shell-spacing", type=_fraction, default=None)
    p.add_argument("--shell-alpha", type=_fraction, default=Fraction(11, 10))
    p.add_argument("--backend", choices=("builtin", "file"), default="builtin")
    p.add_argument("--sdpa-out", default=None)
    if with_alpha:
        p.add_argument("--alpha", type=_fraction, default=None)


def _add_domain_options(p):
    p.add_argument(
        "--delta", type=_fraction, default=None,
        help="initial cube side (default: alpha-body circumradius / 16)",
    )
    p.add_argument("--split-threshold", type=int, default=30)
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="packbound",
        description="Certified packing-density upper bounds for bodies with "
        "octahedral difference-body symmetry",
    )
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", default=None, help="JSON file overriding flags")
    ap.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="full pipeline: assemble, solve, certify, check")
    _add_run_options(p)
    _add_domain_options(p)
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("model", help="assemble and dump the exact model")
    _add_run_options(p, with_alpha=False)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("solve", help="solve (or export) the program")
    _add_run_options(p, with_alpha=False)
    p.add_argument("--out", default=None)
    p.add_argument(
        "--analytic-center", action=argparse.BooleanOptionalAction, default=True
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="certify a stored solution bundle")
    _add_run_options(p)
    p.add_argument("--solution", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("check-domain", help="rigorous nonpositivity check")
    p.add_argument("--solution", required=True, help="certified JSON with fg_coefficients")
    p.add_argument("--solid", required=True)
    p.add_argument("--alpha", type=_fraction, required=True)
    p.add_argument("--precision", type=int, default=256)
    _add_domain_options(p)
    p.add_argument("--cube-list", default=None)
    p.set_defaults(func=cmd_check_domain)

    p = sub.add_parser("invariants", help="group and invariant-theory tables")
    p.add_argument("--dump", action="store_true")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("reference", help="reference values and tables")
    p.add_argument("what", choices=("c1", "transfer", "tables"))
    p.add_argument("--p", type=_fraction, default=None)
    p.add_argument("--bound", type=_fraction, default=None)
    p.add_argument("--ratio", type=_fraction, default=None)
    p.set_defaults(func=cmd_reference)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args = _load_config(args)
        _validate_run(args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (model_mod.EvenDegree, model_mod.DegreeMismatch, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except solver_mod.Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except solver_mod.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except certify_mod.CertificationFailed as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFY


if __name__ == "__main__":
    sys.exit(main())
