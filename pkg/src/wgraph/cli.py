"""Command-line front end: ingest, distances, embed, anneal, diagnose.

Every subcommand reads a flow-matrix CSV, symmetrizes and normalizes it, and
writes plain CSV/JSON files into ``--output-dir``. Options may also come from
a ``key=value`` file given with ``--config``; command-line flags win.

Exit status: 0 on success, 2 on input or contract errors, 3 on numerical
failures (including non-convergence under ``--strict``).
"""

import argparse
import contextlib
import os
import sys
from dataclasses import replace

import numpy as np

from . import _csvio
from .distances import (
    GSpec,
    PhiSpec,
    distance_to_csv,
    jump_distance,
    natural_distance,
    schoenberg_transform,
    shortest_path_distance,
)
from .errors import InputError, NumericalError, WGraphError
from .euclid_mds import embedding_to_csv, is_squared_euclidean, mds
from .flow_ingest import (
    SYMMETRIZATION_METHODS,
    load_flow_matrix,
    matrix_to_csv,
    strip_diagonal,
    symmetrize,
    to_exchange,
)
from .spectral import (
    decompose,
    equivalence_classes,
    find_equivalent_pairs,
    raw_coordinates_csv,
    weakly_equivalent_pairs,
)
from .thermo_cluster import (
    AnnealOptions,
    anneal,
    geometric_schedule,
    load_reference_partition,
    membership_snapshot,
    snapshots_to_json,
    trace_to_csv,
)

FAMILY_CHOICES = (
    "chi2", "diffusive", "frozen", "commute", "absorption", "sif", "shortest-path", "jump",
)
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


@contextlib.contextmanager
def blame(flag):
    """Re-raise module errors as CLI errors naming the offending flag."""
    try:
        yield
    except CliError:
        raise
    except NumericalError as exc:
        raise CliError(f"{flag}: {exc}", EXIT_NUMERIC) from exc
    except (ValueError, OSError) as exc:
        raise CliError(f"{flag}: {exc}", EXIT_INPUT) from exc


# -- argument parsing ----------------------------------------------------------


def _positive_float(text):
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return val


def _add_common(p):
    p.add_argument("input", help="flow-matrix CSV (header of labels, then label,counts rows)")
    p.add_argument("--config", help="key=value file; flags given on the command line override it")
    p.add_argument("--symmetrize", choices=SYMMETRIZATION_METHODS, default="half_sum")
    p.add_argument("--diagonal", choices=("keep", "strip"), default="keep",
                   help="keep self-exchanges or use the diagonal-free exchange matrix")
    p.add_argument("-o", "--output-dir", default=".")


def _add_distance(p, multiple=False):
    helptext = "distance family" + (" (comma-separated list allowed)" if multiple else "")
    p.add_argument("--family", default="chi2", help=helptext + f"; one of {', '.join(FAMILY_CHOICES)}")
    p.add_argument("--rho", type=float, default=None, help="absorption parameter in (0, 1)")
    p.add_argument("--schoenberg", default=None,
                   help="power:A (0<A<=1), exp:B (B>0) or exp-inertia:C (b = 1/(C*inertia))")
    p.add_argument("--disconnected-tol", type=_positive_float, default=1e-12,
                   help="lambda_1 above 1 minus this counts as disconnected")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wgraph", description="Distances and soft clustering on weighted flow graphs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="write the exchange matrix")
    _add_common(p)

    p = sub.add_parser("distances", help="write distance matrices and a summary")
    _add_common(p)
    _add_distance(p, multiple=True)

    p = sub.add_parser("embed", help="weighted MDS coordinates")
    _add_common(p)
    _add_distance(p)
    p.add_argument("-k", "--dims", type=int, default=2)

    p = sub.add_parser("anneal", help="thermodynamic clustering trace")
    _add_common(p)
    _add_distance(p)
    p.add_argument("--t-start", type=_positive_float, default=0.02)
    p.add_argument("--t-end", type=_positive_float, default=2.0)
    p.add_argument("--ratio", type=float, default=1.05)
    p.add_argument("--merge-tol", type=_positive_float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.add_argument("--coalesce", action="store_true", help="force coalescence of metastable groups")
    p.add_argument("--stop-at-one", action="store_true", help="stop once a single group remains")
    p.add_argument("--reference", default=None, help="label,group CSV of a reference partition")
    p.add_argument("--snapshot", type=_positive_float, action="append", default=[],
                   help="relative temperature at which to save memberships (repeatable)")
    p.add_argument("--strict", action="store_true", help="exit 3 if any step fails to converge")

    p = sub.add_parser("diagnose", help="spectrum and equivalent-vertex report")
    _add_common(p)
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.add_argument("--raw-coords", type=int, default=0, metavar="K",
                   help="also write raw coordinates x_1..x_K")
    return parser


def _config_tokens(path, subparser):
    """Translate a key=value file into argv tokens for ``subparser``."""
    flags = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:]] = action
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"--config: line {lineno}: expected key=value", EXIT_INPUT)
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if key == "input":
                tokens.append(("input", value))
                continue
            action = flags.get(key)
            if action is None:
                raise CliError(f"--config: line {lineno}: unknown key {key!r}", EXIT_INPUT)
            if action.nargs == 0:
                if value.lower() in ("1", "true", "yes", "on"):
                    tokens.append((f"--{key}",))
            elif isinstance(action, argparse._AppendAction):
                for v in value.split(","):
                    tokens.append((f"--{key}", v.strip()))
            else:
                tokens.append((f"--{key}", value))
    return tokens


def parse_args(argv):
    parser = build_parser()
    argv = list(argv)
    config = None
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            config = argv[k + 1]
            del argv[k : k + 2]
            break
        if tok.startswith("--config="):
            config = tok.split("=", 1)[1]
            del argv[k]
            break
    if config is not None and argv:
        sub = parser._subparsers._group_actions[0].choices.get(argv[0])
        if sub is not None:
            try:
                tokens = _config_tokens(config, sub)
            except OSError as exc:
                raise CliError(f"--config: {exc}", EXIT_INPUT) from exc
            inputs = [t[1] for t in tokens if t[0] == "input"]
            opts = [x for t in tokens if t[0] != "input" for x in t]
            has_positional = _has_input(argv[1:], sub)
            argv = argv[:1] + opts + argv[1:]
            if inputs and not has_positional:
                argv.append(inputs[-1])
    return parser.parse_args(argv)


def _has_input(rest, sub):
    """Whether ``rest`` carries a positional argument for ``sub``."""
    takes_value = {
        opt for a in sub._actions if a.option_strings and a.nargs != 0 for opt in a.option_strings
    }
    skip = False
    for tok in rest:
        if skip:
            skip = False
            continue
        if tok.startswith("-"):
            skip = tok in takes_value
            continue
        return True
    return False


# -- pipeline ---------------------------------------------------------------------


def _exchange(args):
    with blame("input"):
        flow = load_flow_matrix(args.input)
    with blame("--symmetrize"):
        E = to_exchange(symmetrize(flow, args.symmetrize), flow.labels)
    if args.diagonal == "strip":
        with blame("--diagonal"):
            E = strip_diagonal(E)
    return E


def _parse_schoenberg(text, dist):
    kind, _, val = text.partition(":")
    try:
        x = float(val)
    except ValueError:
        raise InputError(f"bad transform parameter {val!r}") from None
    if kind == "power":
        return PhiSpec("power", x)
    if kind == "exp":
        return PhiSpec("saturating_exp", x)
    if kind == "exp-inertia":
        if not x > 0 or not dist.inertia > 0:
            raise InputError("exp-inertia needs a positive factor and a positive inertia")
        return PhiSpec("saturating_exp", 1.0 / (x * dist.inertia))
    raise InputError(f"unknown transform {kind!r}; use power:A, exp:B or exp-inertia:C")


def _distance(E, family, args):
    if family not in FAMILY_CHOICES:
        raise CliError(f"--family: unknown family {family!r}", EXIT_INPUT)
    with blame("--family"):
        if family == "shortest-path":
            dist = shortest_path_distance(E)
        elif family == "jump":
            if args.diagonal != "strip":
                raise CliError("--diagonal: the jump distance needs --diagonal strip", EXIT_INPUT)
            dist = jump_distance(E)
        else:
            if family == "absorption":
                if args.rho is None:
                    raise CliError("--rho: absorption family needs --rho", EXIT_INPUT)
                with blame("--rho"):
                    spec = GSpec("absorption", rho=args.rho)
            else:
                spec = GSpec(family)
            dist = natural_distance(E, spec, disconnected_tol=args.disconnected_tol)
    if args.schoenberg:
        with blame("--schoenberg"):
            dist = schoenberg_transform(dist, _parse_schoenberg(args.schoenberg, dist))
    return dist


def _verdict(dist):
    if not np.all(np.isfinite(dist.D)):
        return None, float("nan")
    return is_squared_euclidean(dist)


def _write(outdir, name, text):
    path = os.path.join(outdir, name)
    with blame("--output-dir"):
        _csvio.write_atomic(path, text)
    return path


def cmd_ingest(args, out, err):
    E = _exchange(args)
    path = _write(args.output_dir, "exchange.csv", matrix_to_csv(E.e, E.labels))
    print(f"wrote {path} (n={E.n}, diagonal mass={_csvio.fmt(E.diagonal_mass)})", file=out)


def cmd_distances(args, out, err):
    E = _exchange(args)
    families = [f.strip() for f in args.family.split(",") if f.strip()]
    if not families:
        raise CliError("--family: no family given", EXIT_INPUT)
    for family in families:
        dist = _distance(E, family, args)
        verdict, lo = _verdict(dist)
        dist = replace(dist, euclidean_verified=verdict)
        path = _write(args.output_dir, f"distances-{family}.csv", distance_to_csv(dist))
        inertia = dist.inertia if np.all(np.isfinite(dist.D)) else float("inf")
        ev = "unknown" if verdict is None else ("yes" if verdict else "no")
        print(
            f"family={dist.family} inertia={_csvio.fmt(inertia)} focused={int(dist.focused)}"
            f" irreducible={int(dist.irreducible)} euclidean={ev}"
            f" min_kernel_eigenvalue={_csvio.fmt(lo)} file={path}",
            file=out,
        )


def cmd_embed(args, out, err):
    if "," in args.family:
        raise CliError("--family: embed takes a single family", EXIT_INPUT)
    E = _exchange(args)
    dist = _distance(E, args.family, args)
    if args.dims < 1:
        raise CliError("--dims: must be >= 1", EXIT_INPUT)
    with blame("--family"):
        emb = mds(dist, dist.p)
    verdict, lo = _verdict(dist)
    if emb.dropped_negative_mass > 1e-10 * max(1.0, emb.mu[0] if emb.dim else 0.0):
        print(
            f"note: negative kernel mass {_csvio.fmt(emb.dropped_negative_mass)} dropped;"
            " distance is not squared Euclidean",
            file=err,
        )
    k = args.dims
    if k > emb.dim:
        print(
            f"warning: {k} dimensions requested but only {emb.dim} positive dimensions"
            f" available; truncated to {emb.dim}",
            file=err,
        )
        k = emb.dim
    path = _write(args.output_dir, f"embedding-{args.family}.csv", embedding_to_csv(emb, k))
    print(
        f"family={dist.family} dims={k} available={emb.dim}"
        f" inertia={_csvio.fmt(emb.total_inertia)}"
        f" euclidean={'yes' if verdict else 'no'} file={path}",
        file=out,
    )


def cmd_anneal(args, out, err):
    if "," in args.family:
        raise CliError("--family: anneal takes a single family", EXIT_INPUT)
    E = _exchange(args)
    dist = _distance(E, args.family, args)
    if not np.all(np.isfinite(dist.D)):
        raise CliError("--family: distance has infinite entries; cannot cluster", EXIT_INPUT)
    with blame("--t-start/--t-end/--ratio"):
        schedule = geometric_schedule(args.t_start, args.t_end, args.ratio)
    reference = None
    if args.reference:
        with blame("--reference"):
            reference = load_reference_partition(args.reference, E.labels)
    if args.max_iter < 1:
        raise CliError("--max-iter: must be >= 1", EXIT_INPUT)
    opts = AnnealOptions(
        max_iter=args.max_iter,
        tol=args.tol,
        merge_tol=args.merge_tol,
        stop_at_one=args.stop_at_one,
        coalesce=args.coalesce,
        reference=reference,
    )
    with blame("--family"):
        trace = anneal(dist, E, schedule, opts)
    wanted = set()
    ladder = trace.T_rel
    for t in args.snapshot:
        wanted.add(int(np.argmin(np.abs(np.log(ladder) - np.log(t)))))
    prev_m = None
    for k, rec in enumerate(trace.records):
        if rec.M != prev_m:
            wanted.add(k)
        prev_m = rec.M
    snaps = [
        membership_snapshot(trace.memberships[k], E.f, E.labels, trace.records[k].T,
                            trace.records[k].T_rel)
        for k in sorted(wanted)
    ]
    tpath = _write(args.output_dir, f"trace-{args.family}.csv", trace_to_csv(trace))
    mpath = _write(args.output_dir, f"memberships-{args.family}.json", snapshots_to_json(snaps))
    failed = sum(not r.converged for r in trace.records)
    print(
        f"family={dist.family} inertia={_csvio.fmt(trace.inertia)} steps={len(trace)}"
        f" final_M={trace.records[-1].M} unconverged={failed} trace={tpath} memberships={mpath}",
        file=out,
    )
    if failed:
        print(f"warning: {failed} temperature steps did not converge", file=err)
        if args.strict:
            raise CliError("--strict: non-convergence during annealing", EXIT_NUMERIC)


def cmd_diagnose(args, out, err):
    E = _exchange(args)
    with blame("input"):
        basis = decompose(E)
    lam = basis.lam
    print(f"n={E.n} diagonal_mass={_csvio.fmt(E.diagonal_mass)}", file=out)
    if E.n > 1:
        print(
            f"lambda_1={_csvio.fmt(lam[1])} lambda_min={_csvio.fmt(lam[-1])}"
            f" connected={int(basis.is_connected)} bipartite={int(basis.is_bipartite)}",
            file=out,
        )
    pairs = find_equivalent_pairs(E, args.tol)
    print(f"equivalent_pairs={len(pairs)}", file=out)
    for i, j in pairs:
        print(f"  {E.labels[i]} ~ {E.labels[j]}", file=out)
    for cls in equivalence_classes(pairs, E.n):
        print("  class: " + " ".join(E.labels[i] for i in cls), file=out)
    if np.any(np.diag(E.e)):
        try:
            E_hat = strip_diagonal(E)
        except InputError as exc:
            print(f"weakly_equivalent_pairs=unavailable ({exc})", file=out)
            E_hat = None
    else:
        E_hat = E
    if E_hat is not None:
        wpairs = weakly_equivalent_pairs(E_hat, args.tol)
        print(f"weakly_equivalent_pairs={len(wpairs)}", file=out)
        for i, j in wpairs:
            print(f"  {E.labels[i]} ~w {E.labels[j]}", file=out)
    if args.raw_coords > 0:
        path = _write(
            args.output_dir, "raw-coordinates.csv", raw_coordinates_csv(basis, E.labels, args.raw_coords)
        )
        print(f"wrote {path}", file=out)


COMMANDS = {
    "ingest": cmd_ingest,
    "distances": cmd_distances,
    "embed": cmd_embed,
    "anneal": cmd_anneal,
    "diagnose": cmd_diagnose,
}


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        COMMANDS[args.command](args, out, err)
    except CliError as exc:
        print(f"error: {exc}", file=err)
        return exc.code
    except WGraphError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_NUMERIC if isinstance(exc, NumericalError) else EXIT_INPUT
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
