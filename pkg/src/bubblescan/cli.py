"""Command-line entry point: ``bubblescan <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 verification mismatch, 4 I/O error,
and 10-21 for the domain errors in :mod:`bubblescan.errors`.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from datetime import date, timedelta
from pathlib import Path

from . import __version__
from .bootstrap import build_ensemble
from .commitment import (
    CommitmentRecord,
    Verdict,
    append_to_file,
    commit,
    load_ledger,
    verify,
    verify_digests,
)
from .errors import BubbleScanError, InvalidRecord
from .fitting import FitConfig
from .forecast import ForecastDocument, document_to_json, make_forecast, render_document
from .lppl import LpplParams, QualificationFilter, generate_synthetic
from .market_data import AssetMeta, ingest_csv, slice_series, to_csv, to_log
from .post_analysis import (
    BUBBLE_INDEX_VERSION,
    SG_WINDOWS,
    UP_DAY_WINDOWS,
    bubble_index,
    max_drawdown,
    sg_derivative,
    up_day_fraction,
)
from .scanner import ScanGrid, report_from_dict, scan

log = logging.getLogger("bubblescan")

EXIT_MISMATCH = 3
EXIT_IO = 4


def _date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _write(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)
    log.info("wrote %s", path)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _add_asset_flags(p):
    p.add_argument("--input", required=True, type=Path, help="date,close CSV file")
    p.add_argument("--name", default="", help="asset name")
    p.add_argument("--ticker", default="")
    p.add_argument("--source", default="", help="data source tag, e.g. Y or B")
    p.add_argument("--category", default="Index", choices=["Index", "Equity", "Commodity", "Forex"])


def _add_fit_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1, help="parallel fitting threads")
    p.add_argument("--t2", type=_date, help="ignore observations after this date")
    p.add_argument("--n-starts", type=_positive_int, default=20)
    p.add_argument("--max-iterations", type=_positive_int, default=2000)
    p.add_argument("--grid.dt1", dest="dt1", type=_positive_int, default=7)
    p.add_argument("--grid.dt2", dest="dt2", type=_positive_int, default=7)
    p.add_argument("--grid.min-len", dest="min_len", type=_positive_int, default=91)
    p.add_argument("--grid.max-len", dest="max_len", type=_positive_int, default=1092)
    p.add_argument("--filter.alpha", dest="alpha", type=float, nargs=2, default=(0.1, 0.9), metavar=("LO", "HI"))
    p.add_argument("--filter.omega", dest="omega", type=float, nargs=2, default=(4.0, 25.0), metavar=("LO", "HI"))
    p.add_argument("--filter.tc-horizon", dest="tc_horizon", type=_positive_int, default=183)
    p.add_argument("--filter.allow-positive-b", dest="allow_positive_b", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubblescan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bubblescan {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a CSV and echo the normalised series")
    _add_asset_flags(p)
    p.add_argument("--output-dir", type=Path)

    p = sub.add_parser("synth", help="write a synthetic LPPL price series")
    p.add_argument("--output-dir", type=Path, required=True)
    p.add_argument("--start", type=_date, default=date(2010, 1, 4))
    p.add_argument("--days", type=_positive_int, default=400, help="calendar span in days")
    p.add_argument("--weekdays-only", action="store_true")
    for name, default in (("A", 4.6), ("B", -0.05), ("C", 0.005), ("alpha", 0.4),
                          ("omega", 8.0), ("phi", 0.0)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.add_argument("--tc-offset", type=float, default=40.0, help="tc in days after the last date")
    p.add_argument("--noise", type=float, default=0.0, help="log-price noise sigma")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("scan", help="fit the window grid and write scan_report.json")
    _add_asset_flags(p)
    _add_fit_flags(p)
    p.add_argument("--output-dir", type=Path, required=True)

    p = sub.add_parser("forecast", help="scan, bootstrap and write the forecast record/document")
    _add_asset_flags(p)
    _add_fit_flags(p)
    p.add_argument("--n-boot", type=_nonnegative_int, default=10)
    p.add_argument("--created-on", type=_date, help="document date (default: t2)")
    p.add_argument("--output-dir", type=Path, required=True)

    p = sub.add_parser("post", help="post-analysis measures after t2")
    _add_asset_flags(p)
    p.add_argument("--t2", type=_date, required=True, help="forecast date")
    p.add_argument("--window-days", type=int, nargs="+", choices=UP_DAY_WINDOWS + SG_WINDOWS,
                   default=list(UP_DAY_WINDOWS + SG_WINDOWS),
                   help="30/60/90 select up-day windows, 120/180 select derivative windows")
    p.add_argument("--scan-report", type=Path, help="scan_report.json for the bubble index")
    p.add_argument("--output-dir", type=Path, required=True)

    p = sub.add_parser("commit", help="fingerprint a document with SHA-256 and SHA-512")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--name", help="document name (default: file name)")
    p.add_argument("--committed-on", type=_date, required=True)
    p.add_argument("--reveal-on", type=_date, required=True)
    p.add_argument("--ledger", type=Path, help="append the record as a new ledger version")
    p.add_argument("--output-dir", type=Path)

    p = sub.add_parser("verify", help="check a document against a commitment")
    p.add_argument("--input", required=True, type=Path)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--record", type=Path, help="commitment.json written by `commit`")
    src.add_argument("--ledger", type=Path, help="look the document up in a ledger by --name")
    src.add_argument("--sha256", help="published SHA-256 (combine with --sha512)")
    p.add_argument("--sha512")
    p.add_argument("--name")

    p = sub.add_parser("ledger", help="validate and print a ledger file")
    p.add_argument("--ledger", type=Path, required=True)
    return parser


def _meta(args) -> AssetMeta:
    return AssetMeta(name=args.name, ticker=args.ticker, source=args.source, category=args.category)


def _load_series(args):
    series = ingest_csv(args.input.read_bytes(), _meta(args))
    if getattr(args, "t2", None) is not None and getattr(args, "command", "") in ("scan", "forecast"):
        series = slice_series(series, series.first_date, args.t2)
    return series


def _configs(args):
    flt = QualificationFilter(
        alpha_range=tuple(args.alpha),
        omega_range=tuple(args.omega),
        require_negative_B=not args.allow_positive_b,
        tc_horizon_days=args.tc_horizon,
    )
    fit = FitConfig.for_filter(flt, n_starts=args.n_starts, max_iterations=args.max_iterations, seed=args.seed)
    grid = ScanGrid(dt1=args.dt1, dt2=args.dt2, min_len=args.min_len, max_len=args.max_len)
    return flt, fit, grid


def _run_info(args, **extra) -> dict:
    info = {"tool": "bubblescan", "version": __version__, "command": args.command}
    info.update(extra)
    return info


def cmd_ingest(args) -> int:
    series = _load_series(args)
    echo = {
        "run": _run_info(args),
        "asset": asdict(_meta(args)),
        "n_obs": len(series),
        "first_date": series.first_date.isoformat(),
        "last_date": series.last_date.isoformat(),
        "span_days": series.span_days,
    }
    sys.stdout.write(_dump(echo))
    if args.output_dir:
        _write(args.output_dir / "series.csv", to_csv(series))
    return 0


def cmd_synth(args) -> int:
    dates = [args.start + timedelta(days=i) for i in range(args.days + 1)]
    if args.weekdays_only:
        dates = [d for d in dates if d.weekday() < 5]
    last_tau = (dates[-1] - dates[0]).days
    params = LpplParams.canonical(args.A, args.B, args.C, args.alpha, args.omega, args.phi,
                                  last_tau + args.tc_offset)
    series = generate_synthetic(params, dates, args.noise, args.seed)
    tc_date = dates[0] + timedelta(days=math.floor(params.tc))
    _write(args.output_dir / "synthetic.csv", to_csv(series))
    _write(args.output_dir / "synthetic.json", _dump({
        "run": _run_info(args, seed=args.seed, noise_sigma=args.noise),
        "params": params.as_dict(),
        "origin": dates[0].isoformat(),
        "tc_date": tc_date.isoformat(),
        "n_obs": len(series),
    }))
    return 0


def cmd_scan(args) -> int:
    series = _load_series(args)
    flt, fit, grid = _configs(args)
    report = scan(series, grid, fit, flt, workers=args.workers)
    out = {"run": _run_info(args, seed=args.seed), **report.as_dict()}
    _write(args.output_dir / "scan_report.json", _dump(out))
    log.info("windows %(windows_enumerated)d, converged %(fits_converged)d, qualified %(fits_qualified)d",
             report.counts)
    return 0


def cmd_forecast(args) -> int:
    series = _load_series(args)
    flt, fit, grid = _configs(args)
    report = scan(series, grid, fit, flt, workers=args.workers)
    _write(args.output_dir / "scan_report.json", _dump({"run": _run_info(args, seed=args.seed),
                                                         **report.as_dict()}))
    ensemble = build_ensemble(report, to_log(series), fit, flt, n_boot=args.n_boot,
                              seed=args.seed, workers=args.workers)
    run_echo = {**grid.as_dict(), "fit": fit.as_dict(), "n_boot": args.n_boot, "seed": args.seed}
    record = make_forecast(series.meta, ensemble, grid_echo=run_echo, filter_echo=flt.as_dict())
    doc = ForecastDocument((record,), args.created_on or series.last_date)
    _write(args.output_dir / "forecast.txt", render_document(doc))
    _write(args.output_dir / "forecast.json", document_to_json(doc))
    _write(args.output_dir / "ensemble.json", _dump({"run": _run_info(args, seed=args.seed),
                                                      **ensemble.as_dict()}))
    return 0


def cmd_post(args) -> int:
    series = _load_series(args)
    out = args.output_dir
    run = _run_info(args, t2=args.t2.isoformat(), window_days=args.window_days)
    dd = max_drawdown(series, args.t2)
    summary = {"run": run, "drawdown": dd.as_dict()}
    for w in args.window_days:
        measure = up_day_fraction(series, w) if w in UP_DAY_WINDOWS else sg_derivative(series, w)
        _write(out / f"{measure.name}.csv", measure.to_csv())
        if measure.gaps:
            summary.setdefault("gaps", {})[measure.name] = [d.isoformat() for d in measure.gaps]
    _write(out / "price.csv", to_csv(series))
    if args.scan_report:
        report = report_from_dict(json.loads(args.scan_report.read_text(encoding="utf-8")))
        summary["bubble_index"] = {"value": bubble_index(report), "definition": BUBBLE_INDEX_VERSION}
    _write(out / "post_analysis.json", _dump(summary))
    return 0


def cmd_commit(args) -> int:
    document = args.input.read_bytes()
    record = commit(document, args.name or args.input.name, args.committed_on, args.reveal_on)
    payload = {
        "run": _run_info(args),
        "document_name": record.document_name,
        "sha256": record.sha256_hex,
        "sha512": record.sha512_hex,
        "committed_on": record.committed_on.isoformat(),
        "reveal_on": record.reveal_on.isoformat(),
    }
    sys.stdout.write(record.to_line() + "\n")
    if args.output_dir:
        _write(args.output_dir / "commitment.json", _dump(payload))
    if args.ledger:
        ledger = append_to_file(args.ledger, [record], args.committed_on)
        log.info("ledger now at version %d", ledger.latest.number)
    return 0


def cmd_verify(args) -> int:
    document = args.input.read_bytes()
    if args.record:
        data = json.loads(args.record.read_text(encoding="utf-8"))
        record = CommitmentRecord(data["document_name"], data["sha256"], data["sha512"],
                                  date.fromisoformat(data["committed_on"]), date.fromisoformat(data["reveal_on"]))
        verdict = verify(document, record)
    elif args.ledger:
        if not args.name:
            raise InvalidRecord("--ledger needs --name")
        matches = [r for r in load_ledger(args.ledger).records() if r.document_name == args.name]
        if not matches:
            raise InvalidRecord(f"no record named {args.name!r} in {args.ledger}")
        verdict = verify(document, matches[0])
    else:
        verdict = verify_digests(document, args.sha256, args.sha512)
    sys.stdout.write(verdict.value + "\n")
    return 0 if verdict is Verdict.MATCH else EXIT_MISMATCH


def cmd_ledger(args) -> int:
    ledger = load_ledger(args.ledger)
    for version in ledger.versions:
        sys.stdout.write(f"version {version.number} {version.date.isoformat()} "
                         f"records={len(version.records)}\n")
        for record in version.records:
            sys.stdout.write("  " + record.to_line() + "\n")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "scan": cmd_scan,
    "forecast": cmd_forecast,
    "post": cmd_post,
    "commit": cmd_commit,
    "verify": cmd_verify,
    "ledger": cmd_ledger,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except BubbleScanError as exc:
        sys.stderr.write(f"bubblescan: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except ValueError as exc:
        # invariant violations in user-supplied configuration
        sys.stderr.write(f"bubblescan: invalid configuration: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"bubblescan: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
