"""Command-line entry point: ``ffincidence <subcommand> ...``.

Every subcommand prints a one-line summary on stdout and, with
``--output``, writes a JSON or CSV report.  Logging goes to stderr.
Exit status: 0 on success, 2 on a precondition violation, 1 otherwise.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import decomposition as dec
from . import experiments as ex
from . import incidence as inc
from . import io
from . import paraboloid as par
from .ff_core import IsotropicLineError

log = logging.getLogger("ffincidence")

# O(n^3) and O(n^4) brute force caps; --force lifts them
CORNER_ORACLE_MAX = 64
RECT_ORACLE_MAX = 32
PROFILE_MAX = 400

PRECONDITION_ERRORS = (
    ValueError,  # includes malformed input, duplicates, isotropic lines, level-set checks
    inc.BudgetExceededError,
    IsotropicLineError,
)


class UsageError(Exception):
    pass


def _add_common(sp: argparse.ArgumentParser, needs_input: bool = True) -> None:
    sp.add_argument("--p", type=int, help="prime modulus (for --gen)")
    if needs_input:
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--input", help="point-set file ('p <prime> dim <2|3>' header)")
        src.add_argument("--gen", help="generator spec, e.g. random:n=12,seed=1")
    sp.add_argument("--seed", type=int, help="override the generator seed")
    sp.add_argument("--output", help="report path")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--force", action="store_true", help="ignore brute-force size budgets")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ffincidence", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("count-corners")
    _add_common(sp)
    sp.add_argument("--method", choices=("oracle", "fast"), default="fast")

    sp = sub.add_parser("count-rectangles")
    _add_common(sp)
    sp.add_argument("--method", choices=("oracle", "fast", "energy"), default="energy")

    sp = sub.add_parser("energy")
    _add_common(sp)
    sp.add_argument("--oracle", action="store_true")

    sp = sub.add_parser("incidences")
    _add_common(sp)
    sp.add_argument("--lines", default="rich",
                    help="'rich' (lines with >= 2 points), 'all', or random:m=20,seed=3")

    sp = sub.add_parser("rich-lines")
    _add_common(sp)
    sp.add_argument("--k", type=int, required=True)

    sp = sub.add_parser("decompose")
    _add_common(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--floor", type=float)

    sp = sub.add_parser("profile")
    _add_common(sp)

    sp = sub.add_parser("extension")
    _add_common(sp)
    sp.add_argument("--r", type=float, default=4.0)
    sp.add_argument("--method", choices=("direct", "transform"), default="transform")

    sp = sub.add_parser("restrict")
    _add_common(sp)

    sp = sub.add_parser("certify")
    _add_common(sp)

    sp = sub.add_parser("sweep")
    _add_common(sp, needs_input=False)
    sp.add_argument("--bound", choices=ex.BOUND_IDS, required=True)
    sp.add_argument("--primes", default="5,7,11")
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("fit")
    _add_common(sp, needs_input=False)
    sp.add_argument("--family", choices=("full-plane", "random"), default="full-plane")
    sp.add_argument("--primes", default="3,7,11,19")
    sp.add_argument("--sizes", default="8,12,16,24", help="set sizes for the random family")
    sp.add_argument("--counter", choices=tuple(ex.COUNTERS), default="corners")
    return ap


def _spec(args) -> ex.GeneratorSpec:
    if args.p is None:
        raise UsageError("--gen needs --p")
    return ex.GeneratorSpec.parse(args.gen, args.p, args.seed)


def _planar(args) -> inc.PointSet2:
    if getattr(args, "input", None):
        p, dim, coords, _ = io.read_point_file(args.input)
        if dim == 3:
            return io.load_paraboloid_set(args.input).base
        return inc.PointSet2(p, coords)
    if getattr(args, "gen", None):
        S = ex.generate(_spec(args))
        return S.base if isinstance(S, par.ParaboloidSet) else S
    raise UsageError("one of --input or --gen is required")


def _space_function(args) -> par.SpaceFunction:
    """Level-set input: a dim-3 file, or a planar set placed in the slice z = 0."""
    if getattr(args, "input", None):
        p, dim, coords, vals = io.read_point_file(args.input)
        if dim == 3:
            return par.SpaceFunction.from_sparse(p, coords, vals)
        A = inc.PointSet2(p, coords)
    else:
        A = _planar(args)
    return par.SpaceFunction.from_sparse(A.p, [(x, y, 0) for x, y in A])


def _surface_function(args) -> par.SurfaceFunction:
    if getattr(args, "input", None):
        return io.load_surface_function(args.input)
    return par.SurfaceFunction.indicator(_planar(args))


def _budget(args, n, cap, what):
    if n > cap and not args.force:
        raise inc.BudgetExceededError(f"{what} is capped at n={cap} (got {n}); pass --force")


def _meta(args, p) -> dict:
    spec = None
    if getattr(args, "gen", None):
        spec = _spec(args).describe()
    return {"p": p, "spec": spec, "seed": args.seed, "input": getattr(args, "input", None),
            "constants_version": ex.CONSTANTS_VERSION}


def cmd_count_corners(args):
    A = _planar(args)
    if args.method == "oracle":
        _budget(args, A.n, CORNER_ORACLE_MAX, "corner oracle")
        count, skipped = inc.count_corners_oracle(A), None
    else:
        count, skipped = inc.corner_count_with_skips(A)
    rep = {"meta": _meta(args, A.p), "n": A.n, "method": args.method, "count": count,
           "isotropic_skipped": skipped}
    return rep, f"corners n={A.n} method={args.method} count={count}"


def cmd_count_rectangles(args):
    A = _planar(args)
    if args.method == "oracle":
        _budget(args, A.n, RECT_ORACLE_MAX, "rectangle oracle")
        count = inc.count_rectangles_oracle(A)
    elif args.method == "fast":
        count = inc.count_rectangles_perp(A)
    else:
        count = inc.count_rectangles_via_energy(A)
    rep = {"meta": _meta(args, A.p), "n": A.n, "method": args.method, "count": count,
           "unordered": count // 8}
    return rep, f"rectangles n={A.n} method={args.method} count={count}"


def cmd_energy(args):
    A = _planar(args)
    S = par.lift(A)
    if args.oracle:
        _budget(args, A.n, RECT_ORACLE_MAX, "energy oracle")
        lam = par.additive_energy_oracle(S)
        rep = {"lambda": lam}
    else:
        er = par.energy_rectangle_identity_check(S)
        lam = er.lam
        rep = er.to_dict()
    rep = {"meta": _meta(args, A.p), "n": A.n, **rep}
    return rep, f"energy n={A.n} lambda={lam}"


def _lines(args, A):
    spec = args.lines
    if spec == "rich":
        return [l for l, _ in inc.MultiplicityTable(A).items()]
    if spec == "all":
        return inc.all_lines(A.p)
    kind, _, rest = spec.partition(":")
    if kind != "random":
        raise UsageError(f"unknown --lines {spec!r}")
    opts = dict(item.split("=") for item in filter(None, rest.split(",")))
    pool = inc.all_lines(A.p)
    rng = ex.rng_for(int(opts.get("seed", 0)))
    pick = rng.choice(len(pool), min(int(opts.get("m", 10)), len(pool)), replace=False)
    return [pool[int(i)] for i in sorted(pick)]


def cmd_incidences(args):
    A = _planar(args)
    L = _lines(args, A)
    product = None
    if getattr(args, "gen", None) and args.gen.startswith("cartesian-product"):
        _, X, Y = ex.generate_product(_spec(args))
        product = (X, Y)
    count = inc.incidences(A, L)
    reports = inc.verify_incidence_bounds(A, L, product)
    rep = {"meta": _meta(args, A.p), "n": A.n, "lines": len(L), "incidences": count,
           "instances": [r.to_dict() for r in reports],
           "aggregate": {"max_ratio": max((r.ratio for r in reports), default=0.0)}}
    return rep, f"incidences n={A.n} lines={len(L)} count={count}"


def cmd_rich_lines(args):
    A = _planar(args)
    lines = inc.rich_lines(A, args.k)
    hist = inc.dyadic_histogram(A)
    rep = {"meta": _meta(args, A.p), "n": A.n, "k": args.k, "count": len(lines),
           "lines": [[l.a, l.b, l.c] for l in lines],
           "histogram": {str(k): v for k, v in hist.classes.items()}}
    return rep, f"rich-lines n={A.n} k={args.k} count={len(lines)}"


def cmd_decompose(args):
    A = _planar(args)
    d = dec.greedy_grid_decomposition(A, args.k, args.levels, args.floor)
    checks = dec.verify_decomposition(A, d)
    rep = {"meta": _meta(args, A.p), **d.to_dict(), "checks": checks,
           "grid_counts": {str(k): v for k, v in d.grid_counts().items()},
           "empirical_grid_constants": {str(k): v for k, v in d.empirical_grid_constants(A.n).items()}}
    return rep, (f"decompose n={A.n} k={d.k} levels={d.levels} parts={d.grid_counts()} "
                 f"A'={d.A_prime.n} ok={all(checks.values())}")


def cmd_profile(args):
    A = _planar(args)
    _budget(args, A.n, PROFILE_MAX, "rectangle profile")
    prof = dec.dyadic_rectangle_profile(A)
    rep = {"meta": _meta(args, A.p), **prof.to_dict()}
    return rep, f"profile n={A.n} I={prof.I} II={prof.II} III={prof.III}"


def cmd_extension(args):
    f = _surface_function(args)
    ext = par.extension(f, method=args.method)
    lr = par.lr_norm(ext, args.r).value
    l2 = par.l2_sigma_norm(f).value
    ratio = lr / l2 if l2 else 0.0
    rep = {"meta": _meta(args, f.p), "support": f.support().n, "r": args.r,
           "lr_norm": lr, "l2_sigma_norm": l2, "restriction_ratio": ratio}
    return rep, f"extension p={f.p} r={args.r} ratio={ratio:.6g}"


def cmd_restrict(args):
    g = _space_function(args)
    norm = par.l2_sigma_norm(par.restriction(g)).value
    rep = {"meta": _meta(args, g.p), "support": g.support_size(), "l2_sigma_norm": norm}
    try:
        mt = par.mt_machine_check(g)
        rep["machine"] = {"lhs": mt.lhs, "rhs": mt.rhs, "ratio": mt.ratio}
    except par.NotLevelSetError:
        log.info("input is not a level-set function; skipping the slice-energy bound")
    return rep, f"restrict p={g.p} support={g.support_size()} norm={norm:.6g}"


def cmd_certify(args):
    g = _space_function(args)
    cr = par.certify_level_set(g)
    rep = {"meta": _meta(args, g.p), **cr.to_dict(),
           "slices": {str(z): s for z, s in cr.slice_sizes.items()}}
    return rep, f"certify p={g.p} n={cr.support} regime={cr.regime} ratio={cr.ratio:.6g}"


def _primes(text):
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_sweep(args):
    primes = _primes(args.primes)
    seed = args.seed or 0
    b = args.bound
    if b in ("stein_tomas", "certify", "mt_machine"):
        fam = ex.level_set_family(primes, args.count, seed)
    elif b in ("rich_lines_crude", "rich_lines_strong"):
        fam = ex.grid_union_family(primes, args.count, seed)
    elif b == "grid_union_rich_lines":
        fam = ex.grid_union_lemma_family(primes, args.count, seed)
    else:
        fam = []
        for p in primes:
            for i in range(args.count):
                A = ex.generate(ex.GeneratorSpec("random", p, (("n", 4 + i),), seed * 1009 + i))
                fam.append((A, [l for l, _ in inc.MultiplicityTable(A).items()]))
    rep = ex.bound_sweep(fam, b, workers=args.workers,
                         meta={"p": primes, "spec": f"{b}-family", "seed": seed})
    agg = rep.aggregate()
    return rep.to_json(), (f"sweep bound={b} instances={agg['count']} "
                           f"max_ratio={agg['max_ratio']:.6g} constant={agg['suite_constant']:.6g}")


def cmd_fit(args):
    if args.family == "full-plane":
        specs = ex.full_plane_family(_primes(args.primes))
    else:
        if args.p is None:
            raise UsageError("--family random needs --p")
        specs = [ex.GeneratorSpec("random", args.p, (("n", n),), args.seed or 0)
                 for n in _primes(args.sizes)]
    fit = ex.family_fit(specs, args.counter)
    instances = [{"n": s, "measured": c} for s, c in zip(fit.sizes, fit.counts)]
    rep = ex.report_envelope([s.p for s in specs], args.family, args.seed, instances,
                             {"fit": fit.to_dict(), "markers": {"99/41": 99 / 41, "17/7": 17 / 7,
                                                               "5/2": 2.5}})
    return rep, f"fit family={args.family} counter={args.counter} exponent={fit.exponent:.4f}+-{fit.stderr:.4f}"


COMMANDS = {
    "count-corners": cmd_count_corners,
    "count-rectangles": cmd_count_rectangles,
    "energy": cmd_energy,
    "incidences": cmd_incidences,
    "rich-lines": cmd_rich_lines,
    "decompose": cmd_decompose,
    "profile": cmd_profile,
    "extension": cmd_extension,
    "restrict": cmd_restrict,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        report, summary = COMMANDS[args.command](args)
    except UsageError as exc:
        log.error("%s", exc)
        return 2
    except PRECONDITION_ERRORS as exc:
        log.error("%s", exc)
        return 2
    except Exception:
        log.exception("internal error")
        return 1
    if args.output:
        io.write_report(args.output, report, args.format)
    print(summary)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
