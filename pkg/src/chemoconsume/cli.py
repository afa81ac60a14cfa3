"""Command line entry point.

Subcommands::

    chemoconsume run CONFIG [--output-dir DIR] [--KEY VALUE ...]
    chemoconsume oracle-check CONFIG [--tol TOL] [--KEY VALUE ...]
    chemoconsume convergence-study CONFIG --k-levels N --m-levels M [--jobs J] [--out CSV]
    chemoconsume check CSV

Any configuration key can be overridden with ``--key value`` (for example
``--k 0.005 --t_final 0.5``).

Exit codes: 0 success, 2 invariant breach or failed check, 3 step failure
after the halving budget, 4 configuration error.
"""

import argparse
import logging
import sys

from .config import KEY_SECTION, parse_config
from .errors import ChemoError, ConfigError
from .runner import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_SOLVER,
    STUDY_FIELDS,
    check_csv,
    convergence_study,
    exit_code_for,
    oracle_check,
    run_simulation,
    write_study,
)

def build_parser():
    parser = argparse.ArgumentParser(prog="chemoconsume", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a configuration and write diagnostics")
    run.add_argument("config")
    run.add_argument("--output-dir", default=None, help="overrides run.output_dir")

    orc = sub.add_parser("oracle-check", help="compare constant data with the scalar recursion")
    orc.add_argument("config")
    orc.add_argument("--tol", type=float, default=1e-10)

    conv = sub.add_parser("convergence-study", help="joint (m, k) refinement table")
    conv.add_argument("config")
    conv.add_argument("--k-levels", type=int, required=True)
    conv.add_argument("--m-levels", type=int, required=True)
    conv.add_argument("--jobs", type=int, default=1)
    conv.add_argument("--out", default=None, help="write the table as CSV")

    chk = sub.add_parser("check", help="replay the estimate checks on a diagnostics CSV")
    chk.add_argument("csv")
    return parser


def parse_overrides(extra):
    """Turn ``["--k", "0.01", "--m=5"]`` into ``{"k": "0.01", "m": "5"}``."""
    out = {}
    it = iter(extra)
    for token in it:
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument {token!r}")
        key, sep, value = token[2:].partition("=")
        key = key.replace("-", "_")
        if key not in KEY_SECTION:
            raise ConfigError(f"unknown override key {key!r}", key)
        if not sep:
            value = next(it, None)
            if value is None:
                raise ConfigError(f"override --{key} needs a value", key)
        out[key] = value
    return out


def load_config(path, overrides):
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, overrides)


def _fmt(x):
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    return f"{x:.4e}" if isinstance(x, float) else str(x)


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "check":
            if extra:
                parser.error(f"unrecognized arguments: {' '.join(extra)}")
            return _check(args)
        cfg = load_config(args.config, parse_overrides(extra))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        return run_simulation(cfg, args.output_dir)
    if args.command == "oracle-check":
        return _oracle(cfg, args.tol)
    return _study(cfg, args)


def _check(args):
    report, energy = check_csv(args.csv)
    for line in list(report.lines()) + list(energy.lines()):
        print(line)
    return EXIT_OK if report.passed else EXIT_INVARIANT


def _oracle(cfg, tol):
    try:
        cmp = oracle_check(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChemoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    ok = True
    for name, diff in cmp.max_diff.items():
        status = "PASS" if diff <= tol else "FAIL"
        ok &= diff <= tol
        print(f"{status} {name}: max |field - scalar| = {diff:.3e} (tol {tol:.1e})")
    return EXIT_OK if ok else EXIT_INVARIANT


def _study(cfg, args):
    try:
        study = convergence_study(cfg, args.k_levels, args.m_levels, args.jobs)
    except ChemoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(" ".join(f"{name:>11}" for name in STUDY_FIELDS))
    for row in study.rows:
        print(" ".join(f"{_fmt(getattr(row, name)):>11}" for name in STUDY_FIELDS))
    if args.out:
        write_study(args.out, study)
    if study.failure:
        print(f"study aborted: {study.failure}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
