"""Command-line entry point: ``run``, ``inspect``, ``analyze``, ``verify``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import lpaley, monitor, persist, probes, spectral
from .config import ConfigError, load_config
from .runner import EXIT_BLOWUP, EXIT_CONFIG, EXIT_IO, EXIT_OK, ResumeRefused, run


def _cmd_run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"cannot read config: {e}", file=sys.stderr)
        return EXIT_IO
    if args.output_dir:
        cfg.output_dir = args.output_dir
    try:
        status = run(cfg, resume=args.resume)
    except ResumeRefused as e:
        print(f"resume refused: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, persist.SnapshotError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    if status == EXIT_BLOWUP:
        print("blow-up suspected; final-window report written", file=sys.stderr)
    return status


def _cmd_inspect(args):
    try:
        state, header = persist.read_snapshot(args.snapshot)
    except (OSError, persist.SnapshotError) as e:
        print(f"cannot read snapshot: {e}", file=sys.stderr)
        return EXIT_IO
    g = state.grid
    info = dict(header)
    info.update(
        l2_u=spectral.lp_norm(state.u, 2, g),
        l2_b=spectral.lp_norm(state.b, 2, g),
        sup_u=spectral.lp_norm(state.u, float("inf"), g),
        sup_b=spectral.lp_norm(state.b, float("inf"), g),
        sup_w=spectral.lp_norm(spectral.to_physical(spectral.curl(state.u_hat, g)), float("inf"), g),
        max_div_u=float(abs(spectral.to_physical(spectral.divergence(state.u_hat, g))).max()),
        max_div_b=float(abs(spectral.to_physical(spectral.divergence(state.b_hat, g))).max()),
    )
    for key, val in info.items():
        print(f"{key:>10s} = {val!r}")
    return EXIT_OK


def _cmd_analyze(args):
    try:
        _, records, shells = persist.read_records(args.records)
    except OSError as e:
        print(f"cannot read records: {e}", file=sys.stderr)
        return EXIT_IO
    j_min = shells[0] if shells else None
    c_h = None
    if args.n:
        c_h = lpaley.kernel_constant(lpaley.build_partition(spectral.make_grid(args.n, args.l)))
    try:
        ladder = monitor.bkm_ladder(records, args.eps, j_min=j_min, kernel_constant=c_h, m_alert=args.alert)
    except ValueError as e:
        print(f"analysis error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps([r.as_dict() for r in ladder], indent=2))
    return EXIT_OK


def _cmd_verify(args):
    return EXIT_OK if probes.run_all() else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="mhdbkm", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a configured run")
    p.add_argument("config")
    p.add_argument("--resume", help="checkpoint (.snap or .json) to continue from")
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("inspect", help="print a snapshot header and norms")
    p.add_argument("snapshot")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("analyze", help="recompute shell-criterion reports from a records file")
    p.add_argument("records")
    p.add_argument("--eps", type=float, nargs="+", required=True, help="window lengths")
    p.add_argument("--n", type=int, help="grid size, to report the kernel constant")
    p.add_argument("--l", type=float, default=2 * 3.141592653589793)
    p.add_argument("--alert", type=float, help="alert level for the shell criterion")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("verify", help="run the built-in identity/inequality probes")
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
