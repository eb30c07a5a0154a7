"""Command-line front end.

Exit codes: 0 ok / feasible, 1 runtime or statistical failure, 2 usage
error, 3 infeasible marginals.  ``--config FILE`` reads an INI file with one
section per subcommand (``[spectra]``, ``[verify]``, ``[bell.feasible]``,
...) whose keys are the long flag names; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys

import numpy as np

from . import bell, diagnostics, io, kernels, smearing, wick
from .ensemble import run_ensemble
from .errors import MarginalError, RFieldError
from .kernels import Kind, SpectralKernel
from .sampler import Lattice, packet_on_lattice, sample_field
from .smearing import TestFunction

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3
Z_LIMIT = 4.0


def _default_seed() -> int:
    raw = os.environ.get("RFIELD_SEED")
    return int(raw) if raw not in (None, "") else 0


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


# ---------------------------------------------------------------------------
# shared option groups


def _add_kernel_opts(p, kind=True):
    g = p.add_argument_group("field state")
    if kind:
        g.add_argument("--kernel", default="vacuum", help="vacuum | classical | quantum_thermal (default vacuum)")
    g.add_argument("--mass", type=float, default=1.0, help="field mass m, inverse length (default 1)")
    g.add_argument("--hbar", type=float, default=1.0, help="Planck's constant (default 1)")
    g.add_argument("--kT", type=float, default=0.5, help="thermal energy kT (default 0.5; ignored by vacuum)")
    if kind:
        g.add_argument("--exclude-zero-mode", action="store_true", help="drop the k=0 lattice mode")


def _add_lattice_opts(p, n_default=2**14, a_default=0.05):
    g = p.add_argument_group("lattice")
    g.add_argument("--dim", type=int, default=1, help="spatial dimension 1, 2 or 3 (default 1)")
    g.add_argument("--n", type=int, default=n_default, help=f"sites per axis, power of two (default {n_default})")
    g.add_argument("--spacing", type=float, default=a_default, help=f"lattice spacing a (default {a_default})")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (default $RFIELD_SEED, else 0)")
    p.add_argument("--output", "-o", default=None, help="output file (written atomically); default stdout")
    p.add_argument("--config", default=None, help="INI config file; flags override its values")


def _kernel(args, kind=None) -> SpectralKernel:
    return SpectralKernel(
        Kind.parse(kind or args.kernel), mass=args.mass, hbar=args.hbar, kT=args.kT,
        dimension=getattr(args, "dim", 1), exclude_zero_mode=getattr(args, "exclude_zero_mode", False),
    )


def _lattice(args) -> Lattice:
    return Lattice(args.dim, args.n, args.spacing)


def _default_packet(lattice: Lattice) -> TestFunction:
    return TestFunction([lattice.length / 2] * lattice.dimension, 1.0)


def _config_echo(args) -> dict:
    # workers and output only affect how and where results are produced, never their content
    skip = {"func", "parser", "workers", "output"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text: str | bytes):
    if args.output:
        io.atomic_write(args.output, text)
    elif isinstance(text, bytes):
        sys.stdout.buffer.write(text)
        sys.stdout.flush()
    else:
        sys.stdout.write(text)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectra(args) -> int:
    if args.steps < 1:
        args.parser.error("--steps must be >= 1")
    if not (args.kmin > 0 and args.kmax > args.kmin):
        args.parser.error("need 0 < --kmin < --kmax")
    qt = _kernel(args, "quantum_thermal")
    vac = _kernel(args, "vacuum")
    cl = _kernel(args, "classical")
    if args.log:
        k = np.geomspace(args.kmin, args.kmax, args.steps)
    else:
        k = np.linspace(args.kmin, args.kmax, args.steps)
    cols = [
        k,
        kernels.omega(k, args.mass),
        kernels.mode_variance(vac, k),
        kernels.mode_variance(cl, k),
        kernels.mode_variance(qt, k),
        kernels.variance_ratio_to_classical(qt, k),
        kernels.variance_ratio_to_vacuum(qt, k),
    ]
    lines = ["k,omega,S_vacuum,S_classical,S_quantum_thermal,ratio_classical,ratio_vacuum"]
    for row in np.column_stack(cols):
        lines.append(",".join(io.fmt_float(float(x)) for x in row))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_crossover(args) -> int:
    kstar = kernels.crossover_wavenumber(_kernel(args, "quantum_thermal"))
    _emit(args, f"{kstar!r}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    kernel = _kernel(args)
    lattice = _lattice(args)
    packet = TestFunction.parse(args.packet) if args.packet else _default_packet(lattice)
    args.packet = packet.format()
    packet_on_lattice(packet, lattice)
    analytic = smearing.smeared_variance(packet, kernel)
    stats = run_ensemble(
        kernel, lattice, [packet], args.seed, args.samples, lambdas=tuple(args.lambdas), workers=args.workers
    )
    rows = diagnostics.charfun_zscores(stats, 0, analytic)
    z_var = diagnostics.variance_zscore(stats, 0, analytic)
    failing = [r["lambda"] for r in rows if max(abs(r["z_re"]), abs(r["z_im"])) >= Z_LIMIT]
    report = {
        "config": _config_echo(args),
        "kernel": kernel.describe(),
        "lattice": lattice.describe(),
        "packet": packet.to_dict(),
        "samples": stats.count,
        "analytic_variance": analytic,
        "empirical_variance": float(stats.variance[0]),
        "variance_z": z_var,
        "charfun": rows,
        "failing_lambdas": failing,
        "passed": not failing and abs(z_var) < Z_LIMIT,
    }
    _emit_json(args, report)
    if not report["passed"]:
        print(f"statistical check failed at lambda = {failing}, variance z = {z_var:.3f}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _read_cov(text: str) -> np.ndarray:
    if text.startswith("identity"):
        return np.eye(int(text[len("identity"):] or 1))
    if os.path.exists(text):
        with open(text) as fh:
            raw = fh.read()
        if text.endswith(".json"):
            return np.array(json.loads(raw), dtype=float)
        return np.loadtxt(text, delimiter=",", ndmin=2)
    return np.array([[float(x) for x in row.split(",")] for row in text.split(";")])


def cmd_wick(args) -> int:
    C = _read_cov(args.cov)
    if len(args.indices) != args.order:
        args.parser.error(f"--indices has {len(args.indices)} entries but --order is {args.order}")
    _emit(args, f"{wick.wick_moment(C, args.indices, max_order=args.max_order)!r}\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    kernel = _kernel(args)
    sample = sample_field(kernel, _lattice(args), args.seed, args.member)
    if args.format == "bin":
        _emit(args, io.sample_to_bytes(sample))
    else:
        _emit(args, io.sample_to_csv(sample))
    return EXIT_OK


def _bell_error(args, exc: RFieldError) -> int:
    _emit_json(args, {"config": _config_echo(args), "error": {"code": exc.code, "message": str(exc)}})
    return EXIT_FAIL


def cmd_bell_chsh(args) -> int:
    E = args.E
    S = bell.chsh_value(*E)
    _emit_json(args, {"config": _config_echo(args), "E": E, "S": S, "exceeds_local_bound": abs(S) > 2 + bell.TOL})
    return EXIT_OK


def cmd_bell_feasible(args) -> int:
    try:
        with open(args.input) as fh:
            text = fh.read()
        fmt = args.format
        if fmt == "auto":
            fmt = "json" if text.lstrip().startswith("{") else "csv"
        if fmt == "json":
            marginals = bell.MarginalSet.from_json(text, exact=True if args.exact else None)
        else:
            marginals = bell.MarginalSet.from_csv(text, exact=args.exact)
        result = bell.joint_feasible(marginals)
    except MarginalError as exc:
        return _bell_error(args, exc)
    report = result.to_dict()
    report["config"] = _config_echo(args)
    _emit_json(args, report)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_bell_field(args) -> int:
    if len(args.packet) != 4:
        args.parser.error("bell field needs exactly four --packet options (A1, A2, B1, B2)")
    packets = [TestFunction.parse(p) for p in args.packet]
    args.dim = packets[0].dimension
    kernel = _kernel(args)
    E = bell.field_correlators(*packets, kernel)
    S = bell.chsh_value(E[0, 0], E[0, 1], E[1, 0], E[1, 1])
    _emit_json(args, {"config": _config_echo(args), "E": E.tolist(), "S": S, "within_local_bound": abs(S) <= 2 + bell.TOL})
    return EXIT_OK if abs(S) <= 2 + bell.TOL else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser and config handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    p = sub.add_parser("spectra", help="tabulate S(k) of the three kernels and their ratios")
    _add_kernel_opts(p, kind=False)
    p.add_argument("--kmin", type=float, default=0.01, help="smallest wave number (> 0)")
    p.add_argument("--kmax", type=float, default=100.0, help="largest wave number")
    p.add_argument("--steps", type=int, default=200, help="number of rows")
    p.add_argument("--log", action="store_true", help="log-spaced k grid (default linear)")
    _add_common(p)
    p.set_defaults(func=cmd_spectra)
    parsers["spectra"] = p

    p = sub.add_parser("crossover", help="wave number where hbar*omega = 2kT")
    _add_kernel_opts(p, kind=False)
    _add_common(p)
    p.set_defaults(func=cmd_crossover)
    parsers["crossover"] = p

    p = sub.add_parser("verify", help="Monte Carlo vs analytic characteristic function of one smeared observable")
    _add_kernel_opts(p)
    _add_lattice_opts(p)
    p.add_argument("--packet", default=None, help="test function, e.g. 'x0=409.6,sigma=1,k0=0,A=1' (default: centred, sigma=1)")
    p.add_argument("--samples", type=int, default=100_000, help="ensemble size M (default 1e5)")
    p.add_argument("--lambdas", type=_float_list, default="0.25,0.5,1,2", help="comma-separated lambda grid")
    p.add_argument("--workers", type=int, default=1, help="worker processes (output does not depend on this)")
    _add_common(p)
    p.set_defaults(func=cmd_verify)
    parsers["verify"] = p

    p = sub.add_parser("wick", help="Gaussian moment by pairing enumeration")
    p.add_argument("--order", type=int, required=True, help="moment order")
    p.add_argument("--cov", required=True, help="identityN, inline 'c00,c01;c10,c11', or a .csv/.json file")
    p.add_argument("--indices", type=_int_list, required=True, help="comma-separated observable indices")
    p.add_argument("--max-order", type=int, default=wick.MAX_ORDER, help="refuse orders above this")
    _add_common(p)
    p.set_defaults(func=cmd_wick)
    parsers["wick"] = p

    p = sub.add_parser("sample", help="draw one lattice field sample")
    _add_kernel_opts(p)
    _add_lattice_opts(p, n_default=1024, a_default=0.05)
    p.add_argument("--member", type=int, default=0, help="ensemble member index")
    p.add_argument("--format", choices=("csv", "bin"), default="csv", help="output format")
    _add_common(p)
    p.set_defaults(func=cmd_sample)
    parsers["sample"] = p

    p = sub.add_parser("bell", help="Bell / CHSH tools")
    bsub = p.add_subparsers(dest="bell_command", required=True)

    q = bsub.add_parser("chsh", help="CHSH value of four correlators")
    q.add_argument("--E", type=float, nargs=4, required=True, metavar=("E11", "E12", "E21", "E22"),
                   help="correlators <A_i B_j> in the order E11 E12 E21 E22")
    _add_common(q)
    q.set_defaults(func=cmd_bell_chsh)
    parsers["bell.chsh"] = q

    q = bsub.add_parser("feasible", help="does a quadrivariate joint with these marginals exist?")
    q.add_argument("input", help="marginal tables, CSV (i,j,a,b,p) or JSON")
    q.add_argument("--format", choices=("auto", "csv", "json"), default="auto",
                   help="input format (default: sniff JSON by a leading brace)")
    q.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    _add_common(q)
    q.set_defaults(func=cmd_bell_feasible)
    parsers["bell.feasible"] = q

    q = bsub.add_parser("field", help="CHSH value of four sign-binned smeared field observables")
    q.add_argument("--packet", action="append", default=[], help="test function; give four (A1, A2, B1, B2)")
    _add_kernel_opts(q)
    _add_common(q)
    q.set_defaults(func=cmd_bell_field)
    parsers["bell.field"] = q

    parser.set_defaults(_subparsers=parsers)
    return parser


def _apply_config(parsers: dict, path: str, top: argparse.ArgumentParser):
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str
    if not cfg.read(path):
        top.error(f"cannot read config file {path}")
    for section in cfg.sections():
        if section not in parsers:
            top.error(f"config section [{section}] is not a subcommand")
        p = parsers[section]
        actions = {a.dest: a for a in p._actions}
        defaults = {}
        for key, raw in cfg.items(section):
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("help", "config"):
                top.error(f"unknown key {key!r} in config section [{section}]")
            act = actions[dest]
            if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[dest] = cfg.getboolean(section, key)
            elif isinstance(act, argparse._AppendAction):
                defaults[dest] = [s.strip() for s in raw.split("|") if s.strip()]
            elif act.nargs not in (None, "?"):
                conv = act.type or str
                defaults[dest] = [conv(s) for s in raw.split()]
            else:
                defaults[dest] = raw
            act.required = False
        p.set_defaults(**defaults)


def main(argv=None) -> int:
    try:
        return _main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


def _main(argv) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        _apply_config(parser.get_default("_subparsers"), known.config, parser)
    args = parser.parse_args(argv)
    key = args.command if args.command != "bell" else f"bell.{args.bell_command}"
    args.parser = args._subparsers[key]
    del args._subparsers
    if args.seed is None:
        args.seed = _default_seed()
    try:
        code = args.func(args)
    except RFieldError as exc:
        print(f"rfield: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError) as exc:
        print(f"rfield: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return code


if __name__ == "__main__":
    sys.exit(main())
