"""Command line entry point.

Subcommands:

``simulate``
    Evolve the configured scenario; writes diagnostics CSV, snapshots,
    checkpoints and a summary JSON.  Exit 1 if the run aborts (the last
    good checkpoint is retained).
``hypercheck``
    Sample states and directions; report wave-structure health and the
    compensator margin.
``sweep``
    Relaxation-time convergence study with fitted slopes.
``audit``
    Recompute diagnostics from a previous run's stored snapshots and
    compare with the originals.
``ledger``
    Evaluate the blow-up certificate ledger on the configured initial
    data without time stepping.

Shared flags: ``--config PATH`` (JSON run configuration), ``--out DIR``
(output directory, overriding the config), ``--threads K``.  ``simulate``
adds ``--until T`` (stop early without changing the snapshot cadence) and
``--resume CHECKPOINT``.  Environment variables prefixed ``HYPERNS_``
override individual config entries; see :mod:`hyperns.config`.

Exit status: 0 success, 1 run-level failure (abort, failed ledger
condition, audit mismatch), 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import runner
from .config import ConfigError, parse_config

__all__ = ["main"]


def _positive_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return val


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="hyperns",
        description="Finite-volume laboratory for hyperbolized compressible "
                    "flow with relaxing heat flux and bulk stress.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default: config output_dir)")
    common.add_argument("--threads", type=_positive_int, metavar="K",
                        default=None,
                        help="cap numeric library threads (results do not "
                             "depend on it)")

    sim = sub.add_parser("simulate", parents=[common],
                         help="evolve the configured scenario")
    sim.add_argument("--until", type=float, metavar="T", default=None,
                     help="stop at time T, keeping the snapshot cadence")
    sim.add_argument("--resume", metavar="CHECKPOINT", default=None,
                     help="continue from a checkpoint of the same config")

    sub.add_parser("hypercheck", parents=[common],
                   help="wave-structure and compensator report")
    sub.add_parser("sweep", parents=[common],
                   help="relaxation-time convergence study")
    sub.add_parser("ledger", parents=[common],
                   help="blow-up certificate ledger for the initial data")

    aud = sub.add_parser("audit",
                         help="recompute diagnostics from stored snapshots")
    aud.add_argument("--out", required=True, metavar="DIR",
                     help="directory of the run to audit")
    aud.add_argument("--threads", type=_positive_int, metavar="K",
                     default=None, help="cap numeric library threads")
    return parser


def _set_threads(k):
    # The stepping kernels are plain elementwise numpy and single threaded
    # either way; this only caps whatever BLAS the diagnostics pull in, so
    # CI boxes with tight cgroups do not oversubscribe.
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(k)


def _load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), env=os.environ)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        _set_threads(args.threads)
    try:
        if args.command == "audit":
            status = runner.audit(args.out)
            print(f"audit: wrote diagnostics_audit.csv and audit.json in "
                  f"{args.out} (status {status})")
            return status

        config = _load_config(args.config)
        out = args.out if args.out is not None else config.output_dir
        for note in config.notices:
            print(f"warning: {note}", file=sys.stderr)

        if args.command == "simulate":
            status = runner.simulate(config, out_dir=out, until=args.until,
                                     resume=args.resume)
            word = "aborted, last good checkpoint kept" if status else "completed"
            print(f"simulate: {word}; outputs in {out}")
        elif args.command == "hypercheck":
            status = runner.hypercheck(config, out_dir=out)
            print(f"hypercheck: {'all samples hyperbolic' if status == 0 else 'FAILED'}; "
                  f"report in {out}/hypercheck.json")
        elif args.command == "sweep":
            status = runner.sweep(config, out_dir=out)
            print(f"sweep: wrote sweep.csv and sweep.json in {out}")
        else:
            status = runner.ledger_report(config, out_dir=out)
            word = "all conditions hold" if status == 0 else "NOT certified"
            print(f"ledger: {word}; report in {out}/ledger.json")
        return status
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
