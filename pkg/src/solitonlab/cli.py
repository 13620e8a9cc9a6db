"""Command-line entry point.

Subcommands::

    solitonlab simulate --system bbs --init 110100 --steps 3
    solitonlab equiv --system dtoda --random 100 --steps 10 --tol 1e-9
    solitonlab verify invariance-core --report report.csv
    solitonlab sample --spec "gig(lambda=1,c=1,delta=0.5)" --n 1000

Exit codes: 0 success, 1 unexpected test outcome or tolerance exceeded,
2 malformed input (flags, spec literals, suite lines), 3 domain error while
running (the message names the site and step).

The default seed is 7; the environment variable ``SOLITONLAB_SEED`` replaces
it.  Random numbers come from numpy's PCG64, seeded through ``SeedSequence``.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from importlib import resources

import numpy as np

from . import covariables, measures
from .paths import SystemConfig
from .systems import WindowCapExceeded, evolve, spacetime_diagram, trajectory_csv
from .variables import SYSTEMS, TODA_SYSTEMS, DomainError
from .verify import SuiteError, reports_csv, run_suite

DEFAULT_SEED = 7
BUNDLED_SUITES = ("invariance-core",)

DEFAULT_BACKGROUND = {"bbs": "0", "udkdv": "0", "dkdv": "1", "udtoda": "0.25:1", "dtoda": "1.5:0.5"}
VACUUM_SITES = 10


class UsageError(ValueError):
    pass


def default_seed() -> int:
    raw = os.environ.get("SOLITONLAB_SEED")
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"SOLITONLAB_SEED must be an integer, got {raw!r}") from None


def _write(text: str, path: str | None):
    """Write to stdout, or atomically to ``path`` via a temporary file."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _float(tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise UsageError(f"not a number: {tok!r}") from None


def parse_background(system: str, text: str | None):
    text = DEFAULT_BACKGROUND[system] if text is None else text
    if system in TODA_SYSTEMS:
        parts = text.split(":")
        if len(parts) != 2:
            raise UsageError(f"Toda background must be q:e, got {text!r}")
        return tuple(_float(p) for p in parts)
    if system == "bbs":
        return int(_float(text))
    return _float(text)


def parse_init(system: str, text: str):
    """Site values from ``--init``.

    BBS takes a bit string (``110100``) or comma-separated 0/1 values; KdV
    systems take comma-separated numbers; Toda systems take comma-separated
    ``q:e`` pairs.  An empty string gives ``VACUUM_SITES`` background sites.
    """
    text = text.strip()
    if not text:
        return None
    if system == "bbs":
        toks = text.split(",") if "," in text else list(text)
        if any(t.strip() not in ("0", "1") for t in toks):
            raise UsageError(f"BBS init must be 0/1 values, got {text!r}")
        return np.array([int(t) for t in toks], dtype=np.int8)
    toks = [t.strip() for t in text.split(",")]
    if system in TODA_SYSTEMS:
        pairs = []
        for t in toks:
            parts = t.split(":")
            if len(parts) != 2:
                raise UsageError(f"Toda init entries must be q:e pairs, got {t!r}")
            pairs.append([_float(p) for p in parts])
        return np.array(pairs, dtype=float)
    return np.array([_float(t) for t in toks], dtype=float)


def parse_span(text: str | None):
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"span must be lo:hi, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"span bounds must be integers, got {text!r}") from None
    if hi < lo:
        raise UsageError("span must have lo <= hi")
    return lo, hi


def build_config(args) -> SystemConfig:
    system = args.system
    if args.init is not None and args.init_spec:
        raise UsageError("give either --init or --init-spec, not both")
    try:
        if args.init_spec:
            specs = [measures.parse_spec(s) for s in args.init_spec]
            return measures.build_iid_config(system, specs if len(specs) > 1 else specs[0], args.sites,
                                             args.seed, 1, args.L, args.delta)
        bg = parse_background(system, args.background)
        sites = parse_init(system, args.init or "")
        if sites is None:
            shape = (VACUUM_SITES, 2) if system in TODA_SYSTEMS else (VACUUM_SITES,)
            sites = np.empty(shape)
            sites[...] = bg
        return SystemConfig(system, sites, bg, 1, args.L, args.delta)
    except DomainError as exc:
        raise UsageError(f"invalid initial configuration: {exc}") from None


def cmd_simulate(args) -> int:
    config = build_config(args)
    fmt = args.format
    if fmt == "auto":
        fmt = "diagram" if config.system == "bbs" else "csv"
    if fmt == "diagram" and config.system != "bbs":
        raise UsageError("diagram output is only available for bbs")
    if args.steps < 0:
        raise UsageError("--steps must be >= 0")
    span = parse_span(args.span) or (config.start, config.stop)
    try:
        traj = evolve(config, args.steps, max_sites=args.max_sites)
    except WindowCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if fmt == "diagram":
        text = spacetime_diagram(traj, *span)
    else:
        text = trajectory_csv(traj, *span)
    _write(text, args.output)
    return 0


def cmd_equiv(args) -> int:
    if args.steps < 0:
        raise UsageError("--steps must be >= 0")
    rng = measures.rng_for(args.seed)
    worst, bad = 0.0, 0
    tol = covariables.DEFAULT_TOL[args.system] if args.tol is None else args.tol
    for i in range(args.random):
        config = covariables.random_config(args.system, args.sites, rng)
        rep = covariables.equivalence_check(config, args.steps, tol, args.seed)
        worst = max(worst, rep.subtests[0].statistic)
        if not rep.passed:
            bad += 1
            for note in rep.notes:
                print(f"config {i}: {note}", file=sys.stderr)
    print(f"system={args.system} configs={args.random} steps={args.steps} "
          f"max_abs_diff={worst!r} tol={tol!r} failures={bad}")
    return 0 if bad == 0 else 1


def _suite_text(name: str) -> str:
    if name in BUNDLED_SUITES:
        return resources.files("solitonlab").joinpath("suites", name + ".txt").read_text(encoding="utf-8")
    try:
        with open(name, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read suite {name!r}: {exc.strerror}") from None


def cmd_verify(args) -> int:
    text = _suite_text(args.suite)
    results = run_suite(text)
    for e, rep, ok in results:
        status = "ok" if ok else "UNEXPECTED"
        outcome = "pass" if rep.passed else "fail"
        print(f"line {e.line}: {e.kind} {rep.target} expect={e.expect} got={outcome} {status}")
    if args.report:
        _write(reports_csv([rep for _, rep, _ in results]), args.report)
    bad = sum(not ok for _, _, ok in results)
    print(f"{len(results) - bad}/{len(results)} outcomes as expected")
    return 0 if bad == 0 else 1


def cmd_sample(args) -> int:
    spec = measures.parse_spec(args.spec)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    x = measures.sample(spec, args.n, args.seed, args.stream)
    lines = ["even,odd" if x.ndim == 2 else "x"]
    if x.ndim == 2:
        lines += [f"{a!r},{b!r}" for a, b in x.tolist()]
    else:
        lines += [repr(v) for v in x.tolist()]
    _write("\n".join(lines) + "\n", args.output)
    return 0


def build_parser(seed: int) -> argparse.ArgumentParser:
    epilog = measures.grammar_help()
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="solitonlab", description=__doc__.split("\n\n")[0], epilog=epilog,
                                formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="evolve a configuration and print a trajectory", epilog=epilog,
                       formatter_class=fmt)
    s.add_argument("--system", choices=SYSTEMS, required=True)
    s.add_argument("--init", default=None,
                   help="site values: bit string for bbs, comma-separated numbers, or q:e pairs for Toda "
                        f"(default: {VACUUM_SITES} background sites)")
    s.add_argument("--init-spec", action="append", default=[],
                   help="i.i.d. initial law as a spec literal; repeat for the two Toda components")
    s.add_argument("--sites", type=int, default=100, help="sites (pairs for Toda) with --init-spec (default 100)")
    s.add_argument("--steps", type=int, default=10, help="time steps (default 10)")
    s.add_argument("--seed", type=int, default=seed, help=f"random seed (default {seed})")
    s.add_argument("--L", type=float, default=1.0, help="udKdV capacity (default 1)")
    s.add_argument("--delta", type=float, default=1.0, help="dKdV parameter (default 1)")
    s.add_argument("--background", default=None,
                   help="value outside the window, q:e for Toda (default: "
                        + ", ".join(f"{k} {v}" for k, v in DEFAULT_BACKGROUND.items()) + ")")
    s.add_argument("--format", choices=("auto", "csv", "diagram"), default="auto",
                   help="auto is diagram for bbs and csv otherwise (default auto)")
    s.add_argument("--span", default=None, help="output site range lo:hi, half open; write --span=lo:hi when lo < 0 (default: initial window)")
    s.add_argument("--max-sites", type=int, default=10**6, help="window cap (default 1000000)")
    s.add_argument("--output", default=None, help="output file (default stdout)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("equiv", help="compare carrier-sweep and path-transform evolution")
    e.add_argument("--system", choices=SYSTEMS, required=True)
    e.add_argument("--random", type=int, default=100, help="random configurations (default 100)")
    e.add_argument("--steps", type=int, default=10, help="time steps (default 10)")
    e.add_argument("--sites", type=int, default=50, help="lattice sites per configuration (default 50)")
    e.add_argument("--tol", type=float, default=None,
                   help="max allowed |diff| (default 0 for bbs/udkdv/udtoda, 1e-10 for dkdv/dtoda)")
    e.add_argument("--seed", type=int, default=seed, help=f"random seed (default {seed})")
    e.set_defaults(func=cmd_equiv)

    v = sub.add_parser("verify", help="run a statistical verification suite")
    v.add_argument("suite", help="suite file, or a bundled name: " + ", ".join(BUNDLED_SUITES))
    v.add_argument("--report", default=None, help="write the report CSV here (default: no file)")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("sample", help="dump i.i.d. draws from a spec literal", epilog=epilog,
                       formatter_class=fmt)
    m.add_argument("--spec", required=True, help="spec literal, e.g. truncexp(lambda=1,c=0,L=1)")
    m.add_argument("--n", type=int, default=1000, help="number of draws (default 1000)")
    m.add_argument("--seed", type=int, default=seed, help=f"random seed (default {seed})")
    m.add_argument("--stream", type=int, default=0, help="independent stream index (default 0)")
    m.add_argument("--output", default=None, help="output file (default stdout)")
    m.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    try:
        parser = build_parser(default_seed())
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SuiteError as exc:
        print(f"error: suite {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # UsageError, SpecError and other malformed input
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
