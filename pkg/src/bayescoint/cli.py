"""Command-line interface.

Results are JSON documents on stdout carrying a ``schema_version``; verdicts
are data, so a completed run exits 0 whatever it concludes. Exit status 2
marks bad input or usage, 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import experiments as ex
from .cointtest import DEFAULT_LOG_THRESHOLD, DEFAULT_RW_WIDTH, bayes_test, classical_test
from .em import EmConfig
from .errors import BayesCointError, InputError, NumericalError
from .series import SeriesPair, compute_residuals
from .switching import SwitchConfig, map_phi, map_regimes, switch_em

SCHEMA_VERSION = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def read_table(path: str, skip_bad: bool = False) -> tuple[SeriesPair, list[str]]:
    """Parse a CSV with columns x, y (and optionally t). Returns the pair and t labels."""
    try:
        fh = sys.stdin if path == "-" else open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in (reader.fieldnames or [])]
        if "x" not in cols or "y" not in cols:
            raise InputError("CSV header must contain columns 'x' and 'y'")
        reader.fieldnames = cols
        xs, ys, ts = [], [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                x = float(row["x"])
                y = float(row["y"])
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise ValueError
            except (TypeError, ValueError):
                if skip_bad:
                    continue
                raise InputError(f"malformed row at line {lineno} (use --skip-bad to drop it)") from None
            xs.append(x)
            ys.append(y)
            ts.append(row.get("t") or str(len(ts) + 1))
    return SeriesPair(np.array(xs), np.array(ys)), ts


def _em_cfg(args) -> EmConfig:
    return EmConfig(max_iters=args.max_iters, rel_tol=args.rel_tol)


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def _write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_test(args) -> int:
    pair, _ = read_table(args.csv, args.skip_bad)
    width = "range" if args.width == "range" else float(args.width)
    res = bayes_test(pair, _em_cfg(args), args.threshold_log_c, width=width)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "test",
        "input": {"path": args.csv, "t_len": len(pair)},
        "settings": {
            "threshold_log_c": args.threshold_log_c,
            "max_iters": args.max_iters,
            "rel_tol": args.rel_tol,
            "width": args.width,
        },
        "result": res.to_dict(),
    }
    if args.classical:
        doc["classical"] = classical_test(pair, level=args.level).to_dict()
    _emit(doc)
    return 0


def cmd_segment(args) -> int:
    pair, ts = read_table(args.csv, args.skip_bad)
    cfg = SwitchConfig(args.p_init_rw, args.p_rw_to_rw, args.p_c_to_c, args.reset_width, args.prune)
    res = switch_em(pair, cfg=cfg, em_cfg=_em_cfg(args))
    regimes = map_regimes(res.smoothed)
    eps = compute_residuals(pair, res.params)
    phi, flagged = map_phi(eps, res.params.sigma2, regimes)
    filt = res.filtered.rw_prob
    smooth = res.smoothed.rw_prob
    rows = [
        {
            "t": ts[k + 1],
            "filtered_rw_prob": float(filt[k]),
            "smoothed_rw_prob": float(smooth[k]),
            "regime": int(regimes[k]),
            "phi_hat": float(phi[k]),
            "phi_flagged": bool(flagged[k]),
        }
        for k in range(len(pair) - 1)
    ]
    header = {
        "schema_version": SCHEMA_VERSION,
        "command": "segment",
        "input": {"path": args.csv, "t_len": len(pair)},
        "settings": {
            "p_init_rw": cfg.p_init_rw,
            "p_rw_to_rw": cfg.p_rw_to_rw,
            "p_c_to_c": cfg.p_c_to_c,
            "reset_width": res.width,
            "prune": cfg.prune,
        },
        "fitted": res.params.to_dict(),
        "loglik": res.loglik,
        "em_iterations": res.trace.iterations,
        "em_converged": res.trace.converged,
    }
    if args.rows_csv:
        if args.rows_csv == "-":
            raise InputError("--rows-csv needs a file path")
        cols = list(rows[0])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else str(int(v)) if isinstance(v, bool) else v for v in r.values()])
        _write_text(buf.getvalue(), args.rows_csv)
        _emit(header)
    else:
        _emit({**header, "rows": rows})
    return 0


def cmd_simulate(args) -> int:
    spec = ex.SimSpec(args.t, args.alpha, args.beta, args.sigma2, args.phi, seed=args.seed)
    pair = ex.simulate(spec)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "y"])
    for i, (x, y) in enumerate(zip(pair.x, pair.y), start=1):
        w.writerow([i, repr(float(x)), repr(float(y))])
    _write_text(buf.getvalue(), args.out)
    return 0


def cmd_experiment(args) -> int:
    full = args.scale == "full"
    cfg = _em_cfg(args)
    if args.kind == "rates":
        n = args.n or (ex.FULL_RATES_N if full else ex.DESK_RATES_N)
        lengths = tuple(args.lengths) if args.lengths else ex.DESK_LENGTHS
        rep = ex.run_rates(lengths, n, args.seed, args.threshold_log_c, em_cfg=cfg, workers=args.workers)
    elif args.kind == "roc":
        n = args.n or (ex.FULL_ROC_N if full else ex.DESK_ROC_N)
        rep = ex.run_roc(args.t or ex.ROC_T, n, base_seed=args.seed, em_cfg=cfg, workers=args.workers)
    else:
        n = args.n or 100
        spec = ex.SegmentedSpec(seed=args.seed)
        rep = ex.run_segment_recovery(spec, ex.DEFAULT_SEGMENT_CFG, n, em_cfg=cfg, workers=args.workers)
    if args.out:
        _write_text(rep.to_csv(), args.out)
    doc = {"schema_version": SCHEMA_VERSION, "command": f"experiment {args.kind}", "scale": args.scale, "report": rep.to_dict()}
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def _add_em_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iters", type=int, default=EmConfig.max_iters, help="EM iteration cap")
    p.add_argument("--rel-tol", type=float, default=EmConfig.rel_tol, help="relative log-likelihood tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayescoint", description="Bayesian cointegration testing and segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a pair of series for cointegration")
    p.add_argument("csv", help="CSV with columns x,y[,t] ('-' for stdin)")
    p.add_argument("--threshold-log-c", type=float, default=DEFAULT_LOG_THRESHOLD,
                   help="declare cointegration when log(l_RW / l_C) is below this (default 2.0)")
    p.add_argument("--width", default=str(DEFAULT_RW_WIDTH),
                   help="eps_1 density width of the random-walk model, or 'range'")
    p.add_argument("--classical", action="store_true", help="also run OLS + Dickey-Fuller")
    p.add_argument("--level", type=float, default=0.05, help="significance level of the classical test")
    p.add_argument("--skip-bad", action="store_true", help="drop malformed rows instead of failing")
    _add_em_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("segment", help="infer intermittent cointegration regimes")
    p.add_argument("csv")
    p.add_argument("--p-init-rw", type=float, required=True, help="p(i_2 = random walk)")
    p.add_argument("--p-rw-to-rw", type=float, required=True, help="p(i_t = RW | i_{t-1} = RW)")
    p.add_argument("--p-c-to-c", type=float, required=True, help="p(i_t = C | i_{t-1} = C)")
    p.add_argument("--reset-width", type=float, default=None,
                   help="uniform density width at segment starts (default: range of the OLS residuals)")
    p.add_argument("--prune", action="store_true", help="drop components below exp(-40) of the slice maximum")
    p.add_argument("--rows-csv", default=None, help="write per-time rows to this CSV file; stdout then carries only the header")
    p.add_argument("--skip-bad", action="store_true")
    _add_em_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("simulate", help="write a simulated pair as CSV")
    p.add_argument("--t", type=int, required=True, help="series length")
    p.add_argument("--phi", type=float, default=1.0, help="AR coefficient of the residuals (1 = random walk)")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="Monte Carlo studies")
    p.add_argument("kind", choices=["rates", "roc", "segments"])
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--desk", dest="scale", action="store_const", const="desk", help="desk-scale sample sizes (default)")
    scale.add_argument("--paper-scale", dest="scale", action="store_const", const="full",
                       help="5000 series per length (rates), 10000 series (roc)")
    p.set_defaults(scale="desk")
    p.add_argument("--n", type=int, default=None, help="override the number of series")
    p.add_argument("--lengths", type=int, nargs="+", default=None, help="series lengths for rates")
    p.add_argument("--t", type=int, default=None, help="series length for roc")
    p.add_argument("--threshold-log-c", type=float, default=DEFAULT_LOG_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${ex.WORKERS_ENV} or CPU count)")
    p.add_argument("--out", default=None, help="write the report as CSV here")
    _add_em_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BayesCointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
