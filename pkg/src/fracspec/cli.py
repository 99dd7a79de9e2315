"""Command-line front end: deterministic CSV/JSON reports over the catalog
and over user-supplied system files."""

from __future__ import annotations

import argparse
import json
import sys as _sys
from fractions import Fraction

import numpy as np

from . import geometry, rational as rat, spectrum, transfer
from .system import (AffineSystem, get_system, load_system_file, validate_system,
                     system_to_json)

EXIT_OK = 0
EXIT_CLAIM = 1
EXIT_USAGE = 2

GRID_RESOLUTIONS = {1: 64, 2: 48, 3: 24}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _config_echo(args, keys) -> dict:
    return {k: getattr(args, k.replace("-", "_")) for k in keys
            if getattr(args, k.replace("-", "_"), None) is not None}


def _emit(args, header: dict, rows: list, columns: list, json_payload=None) -> None:
    """Write CSV rows (with a config-echo comment) or the JSON payload."""
    out = open(args.out, "w") if args.out else _sys.stdout
    try:
        if args.format == "json":
            doc = {"config": header}
            doc.update(json_payload if json_payload is not None
                       else {"columns": columns, "rows": rows})
            json.dump(doc, out, indent=2, default=str)
            out.write("\n")
        else:
            echo = " ".join(f"{k}={v}" for k, v in header.items())
            out.write(f"# fracspec {echo}\n")
            out.write(",".join(columns) + "\n")
            for row in rows:
                out.write(",".join(str(c) for c in row) + "\n")
    finally:
        if args.out:
            out.close()


def _load(args) -> AffineSystem:
    if args.file:
        try:
            return load_system_file(args.file)
        except FileNotFoundError as exc:
            raise UsageError(f"system file not found: {exc}") from exc
        except (ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot parse system file: {exc}") from exc
    if args.system:
        try:
            return get_system(args.system, getattr(args, "r", None))
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
    raise UsageError("one of --system or --file is required")


GATE_AXIOMS = ("cardinality", "zero_in_B", "zero_in_L", "expansive", "hadamard")


def _gate(args, sys_obj: AffineSystem) -> int | None:
    """Usability gate for analysis commands; --force bypasses it.

    Compatibility is deliberately not gated: systems that break it (the
    triadic one, odd tower scales) are the counterexamples the analyses are
    for.  `validate` still treats it as mandatory for its own exit status.
    """
    report = validate_system(sys_obj)
    bad = [name for name in GATE_AXIOMS if not report.checks[name].passed]
    if bad and not args.force:
        print(f"system {sys_obj.name or '<file>'} fails {', '.join(bad)} "
              f"(rerun with --force to analyse anyway):", file=_sys.stderr)
        for line in report.summary_lines():
            print(line, file=_sys.stderr)
        return EXIT_CLAIM
    return None


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args) -> int:
    sys_obj = _load(args)
    report = validate_system(sys_obj, n_check=args.n_check)
    header = {"command": "validate", "system": sys_obj.name, "n_check": args.n_check}
    payload = {"system": system_to_json(sys_obj), "validation": report.to_dict()}
    if args.format == "json":
        _emit(args, header, [], [], json_payload=payload)
    else:
        out = open(args.out, "w") if args.out else _sys.stdout
        try:
            out.write(f"validation of {sys_obj.name or args.file} (n_check={args.n_check}):\n")
            for line in report.summary_lines():
                out.write(line + "\n")
        finally:
            if args.out:
                out.close()
    return EXIT_OK if report.passed else EXIT_CLAIM


def cmd_spectrum(args) -> int:
    sys_obj = _load(args)
    gate = _gate(args, sys_obj)
    if gate is not None:
        return gate
    if args.depth < 0 or sys_obj.N ** args.depth > 200_000:
        raise UsageError("spectrum depth out of range for exact enumeration")
    enum = spectrum.enumerate_P(sys_obj, args.depth)
    cols = [f"t{i + 1}" for i in range(sys_obj.dim)] + ["digits"]
    rows = []
    for p, word in enum.points:
        digits = "|".join(",".join(rat.format_fraction(c) for c in d) for d in word)
        rows.append([rat.format_fraction(c) for c in p] + [digits or "0"])
    header = {"command": "spectrum", "system": sys_obj.name, "depth": args.depth,
              "collisions": enum.collision_count}
    _emit(args, header, rows, cols)
    return EXIT_OK


def cmd_gram(args) -> int:
    sys_obj = _load(args)
    gate = _gate(args, sys_obj)
    if gate is not None:
        return gate
    if args.count < 2:
        raise UsageError("gram needs at least two points")
    depth = 0
    while sys_obj.N ** depth < args.count:
        depth += 1
        if depth > 16:
            raise UsageError("gram count too large")
    enum = spectrum.enumerate_P(sys_obj, depth)
    pts = [p for p, _ in enum.points][:args.count]
    rep = spectrum.gram_matrix(sys_obj, pts, fourier_depth=args.depth)
    header = {"command": "gram", "system": sys_obj.name, "count": args.count,
              "max_offdiag": fmt(rep.max_offdiag), "tail_bound": fmt(rep.tail_bound)}
    cols = ["i", "j", "re", "im", "abs"]
    rows = [[i, j, fmt(rep.matrix[i, j].real), fmt(rep.matrix[i, j].imag),
             fmt(abs(rep.matrix[i, j]))]
            for i in range(len(pts)) for j in range(len(pts))]
    payload = {"points": [[rat.format_fraction(c) for c in p] for p in pts],
               "max_offdiag": rep.max_offdiag, "worst_pair": rep.worst_pair,
               "tail_bound": rep.tail_bound,
               "matrix_abs": [[abs(x) for x in row] for row in rep.matrix.tolist()]}
    _emit(args, header, rows, cols, json_payload=payload)
    return EXIT_OK


def _completeness_grid(sys_obj: AffineSystem, hull, resolution: int):
    if hull.affine_dim == 0:
        return np.zeros((1, sys_obj.dim))
    origin = np.array(hull.origin, dtype=float)
    basis = np.array(hull.basis, dtype=float).reshape(hull.affine_dim, sys_obj.dim)
    us = transfer.Chart(origin, basis).param(hull.vertex_array())
    if hull.affine_dim == 1:
        line = np.linspace(us[:, 0].min(), us[:, 0].max(), resolution)
        return origin + line[:, None] * basis[0]
    axes = [np.linspace(us[:, d].min(), us[:, d].max(), resolution)
            for d in range(hull.affine_dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    U = np.stack([g.ravel() for g in mesh], axis=-1)
    pts = origin + U @ basis
    keep = [i for i, p in enumerate(pts) if transfer.contains_float(hull, p, tol=1e-9)]
    return pts[keep] if keep else hull.vertex_array()


def _auto_p_depth(sys_obj: AffineSystem, cap: int = spectrum.Q1_DEPTH_CAP,
                  budget: int = 300_000) -> int:
    d = 1
    while sys_obj.N ** (d + 1) <= budget and d < cap:
        d += 1
    return d


def cmd_q1(args) -> int:
    sys_obj = _load(args)
    gate = _gate(args, sys_obj)
    if gate is not None:
        return gate
    hull = geometry.dual_hull(sys_obj, 4)
    res = args.resolution or {1: 33, 2: 9, 3: 5}.get(sys_obj.dim, 5)
    grid = _completeness_grid(sys_obj, hull, res)
    p_depth = args.p_depth or _auto_p_depth(sys_obj)
    rep = spectrum.completeness_test(sys_obj, grid, eps_conv=args.tol,
                                     p_depth_cap=p_depth)
    prof = rep.profile
    cols = [f"t{i + 1}" for i in range(sys_obj.dim)] + ["partial_sum", "increment", "p_depth"]
    rows = []
    for i in range(len(grid)):
        rows.append([fmt(c) for c in np.atleast_1d(grid[i])]
                    + [fmt(prof.values()[i]), fmt(prof.last_increments()[i]), prof.depth])
    header = {"command": "q1", "system": sys_obj.name, "p_depth": p_depth,
              "eps_conv": args.tol, "verdict": rep.verdict}
    payload = {"verdict": rep.verdict, "p_depth": prof.depth,
               "grad_at_zero": [float(g) for g in rep.grad_at_zero],
               "values": [float(v) for v in prof.values()],
               "rows": rows, "columns": cols}
    _emit(args, header, rows, cols, json_payload=payload)
    return EXIT_OK


def cmd_transfer(args) -> int:
    sys_obj = _load(args)
    gate = _gate(args, sys_obj)
    if gate is not None:
        return gate
    res = args.resolution or GRID_RESOLUTIONS.get(sys_obj.dim, 16)
    if res < transfer.MIN_RESOLUTION:
        raise UsageError(f"resolution must be >= {transfer.MIN_RESOLUTION}")
    frame = transfer.grid_frame(sys_obj, res)
    Q0 = frame.quadratic_bump()
    result = transfer.iterate_fixed_point(sys_obj, Q0, max_iters=args.max_iters,
                                          tol=args.tol)
    if args.dump_grid:
        with open(args.dump_grid, "w") as fh:
            fh.write(",".join([f"x{i + 1}" for i in range(sys_obj.dim)] + ["value"]) + "\n")
            for row in result.final.rows():
                fh.write(",".join(fmt(c) for c in row) + "\n")
    header = {"command": "transfer", "system": sys_obj.name, "resolution": res,
              "converged": result.converged, "diverged": result.diverged}
    cols = ["iter", "sup_residual"]
    rows = [[i + 1, fmt(r)] for i, r in enumerate(result.residuals)]
    payload = {"converged": result.converged, "diverged": result.diverged,
               "residuals": [float(r) for r in result.residuals],
               "final_deviation_from_one": float(np.abs(result.final.values - 1).max())}
    _emit(args, header, rows, cols, json_payload=payload)
    return EXIT_OK


def cmd_gamma(args) -> int:
    sys_obj = _load(args)
    gate = _gate(args, sys_obj)
    if gate is not None:
        return gate
    rep = transfer.gamma_supnorm(sys_obj)
    doc = rep.to_dict()
    name = (sys_obj.name or "").split("(")[0]
    if name == "eiffel":
        scale = int(round(float(sys_obj.R.entries[0][0])))
        doc["gamma_closed_form"] = transfer.gamma_eiffel(scale)
    if sys_obj.dim == 1 and sys_obj.N == 2:
        Rv = sys_obj.R.entries[0][0]
        if Rv.denominator == 1 and abs(Rv) >= 2:
            doc["gamma_closed_form"] = transfer.gamma_1d(int(Rv))
    header = {"command": "gamma", "system": sys_obj.name}
    rows = [[k, fmt(v)] for k, v in doc.items()
            if isinstance(v, (int, float)) and not isinstance(v, bool)]
    rows += [[f"norm_{k}", fmt(v)] for k, v in doc["norms"].items()]
    _emit(args, header, rows, ["constant", "value"], json_payload=doc)
    return EXIT_OK


def cmd_attractor(args) -> int:
    sys_obj = _load(args)
    gate = _gate(args, sys_obj)
    if gate is not None:
        return gate
    if args.side not in geometry.SIDES:
        raise UsageError(f"--side must be one of {', '.join(geometry.SIDES)}")
    if args.depth < 1 or sys_obj.N ** args.depth > geometry.MAX_WORDS:
        raise UsageError("attractor depth out of range")
    sample = geometry.attractor_points(sys_obj, args.side, args.depth)
    cols = [f"x{i + 1}" for i in range(sys_obj.dim)]
    rows = [[fmt(c) for c in p] for p in sample.points]
    header = {"command": "attractor", "system": sys_obj.name, "side": args.side,
              "depth": args.depth, "count": len(sample.points)}
    _emit(args, header, rows, cols)
    return EXIT_OK


def cmd_report(args) -> int:
    sys_obj = _load(args)
    validation = validate_system(sys_obj)
    claims = {"axioms": validation.passed}
    doc = {"system": system_to_json(sys_obj), "name": sys_obj.name,
           "validation": validation.to_dict()}

    depth = min(3, 16)
    enum = spectrum.enumerate_P(sys_obj, depth)
    doc["spectrum"] = {
        "depth": depth,
        "collision_count": enum.collision_count,
        "count": len(enum.points),
        "min_gap": (spectrum.uniform_discreteness(enum)
                    if enum.collision_count == 0 and len(enum.points) <= 1000 else None),
    }

    pts = [p for p, _ in enum.points][:16]
    gram = spectrum.gram_matrix(sys_obj, pts)
    claims["orthogonality"] = gram.max_offdiag <= 1e-7
    doc["gram"] = {"count": len(pts), "max_offdiag": gram.max_offdiag,
                   "worst_pair": [[rat.format_fraction(Fraction(c).limit_denominator(10 ** 9))
                                   for c in p] for p in gram.worst_pair],
                   "tail_bound": gram.tail_bound}

    hull = geometry.dual_hull(sys_obj, 4)
    grid = _completeness_grid(sys_obj, hull, {1: 17, 2: 5, 3: 3}.get(sys_obj.dim, 3))
    comp = spectrum.completeness_test(sys_obj, grid,
                                      p_depth_cap=_auto_p_depth(sys_obj))
    doc["completeness"] = {
        "verdict": comp.verdict,
        "p_depth": comp.profile.depth,
        "min_value": float(comp.profile.values().min()),
        "max_value": float(comp.profile.values().max()),
        "grad_at_zero": [float(g) for g in comp.grad_at_zero],
    }

    gamma = transfer.gamma_supnorm(sys_obj, hull)
    doc["contractivity"] = gamma.to_dict()

    inv = geometry.invariance_check(sys_obj, hull)
    claims["hull_invariance"] = inv.passed
    doc["geometry"] = {
        "hull_vertices": [[rat.format_fraction(c) for c in v] for v in hull.vertices],
        "hull_affine_dim": hull.affine_dim,
        "hull_volume": rat.format_fraction(geometry.hull_volume(hull)),
        "hausdorff_dimension": geometry.hausdorff_dimension(sys_obj),
        "invariance": inv.passed,
    }
    doc["claims"] = claims
    doc["claims_pass"] = all(claims.values())

    header = {"command": "report", "system": sys_obj.name,
              "claims_pass": doc["claims_pass"]}
    rows = [[k, v] for k, v in claims.items()]
    _emit(args, header, rows, ["claim", "pass"], json_payload=doc)
    return EXIT_OK if doc["claims_pass"] else EXIT_CLAIM


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracspec",
                                description="spectral analysis of affine self-similar measures")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, depth_default=None):
        sp.add_argument("--system", help="catalog name, e.g. scale4 or eiffel(3)")
        sp.add_argument("--file", help="system definition JSON file")
        sp.add_argument("--r", type=int, help="scale multiplier / eiffel scale")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--force", action="store_true",
                        help="run analyses even when validation fails")
        if depth_default is not None:
            sp.add_argument("--depth", type=int, default=depth_default)

    sp = sub.add_parser("validate", help="check the axioms of a system")
    common(sp)
    sp.add_argument("--n-check", type=int, default=12)
    sp.set_defaults(handler=cmd_validate)

    sp = sub.add_parser("spectrum", help="enumerate the candidate spectrum")
    common(sp, depth_default=3)
    sp.set_defaults(handler=cmd_spectrum)

    sp = sub.add_parser("gram", help="Gram matrix of the first spectrum points")
    common(sp, depth_default=None)
    sp.add_argument("--depth", type=int, default=None,
                    help="fixed transform truncation depth (default adaptive)")
    sp.add_argument("--count", type=int, default=16)
    sp.set_defaults(handler=cmd_gram)

    sp = sub.add_parser("q1", help="completeness partial sums over the hull")
    common(sp)
    sp.add_argument("--p-depth", type=int, default=None)
    sp.add_argument("--resolution", type=int, default=None)
    sp.add_argument("--tol", type=float, default=spectrum.Q1_EPS_CONV)
    sp.set_defaults(handler=cmd_q1)

    sp = sub.add_parser("transfer", help="fixed-point iteration of the operator")
    common(sp)
    sp.add_argument("--resolution", type=int, default=None)
    sp.add_argument("--max-iters", type=int, default=200)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--dump-grid", help="also write the final grid as CSV here")
    sp.set_defaults(handler=cmd_transfer)

    sp = sub.add_parser("gamma", help="contractivity constants")
    common(sp)
    sp.set_defaults(handler=cmd_gamma)

    sp = sub.add_parser("attractor", help="attractor point clouds")
    common(sp, depth_default=4)
    sp.add_argument("--side", choices=geometry.SIDES, default="sigma")
    sp.set_defaults(handler=cmd_attractor)

    sp = sub.add_parser("report", help="consolidated per-system report")
    common(sp)
    sp.set_defaults(handler=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
