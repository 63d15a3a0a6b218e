"""Command line entry point: ``fxlab optimize | simulate | signals | report``.

Settings resolve in order defaults < ``--config`` JSON file < ``FXLAB_*``
environment variables < flags. Exit codes: 0 ok, 1 data error, 2 config
error, 3 some jobs failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, DataError, FxLabError, InsufficientData
from .heuristics import HeuristicId
from .indicators import (
    MacdParams,
    RsiParams,
    count_macd_signals,
    count_priceaction_signals,
    count_rsi_signals,
)
from .market_data import (
    DataSubsetKey,
    Granularity,
    complete_day_count,
    discover_subsets,
    get_instrument,
    load_subset,
    subset_filename,
)
from .optimizer import (
    GridSpec,
    SubsetSource,
    default_workers,
    optimize_all,
    sort_records,
    write_results_csv,
)
from .reporting import (
    ReportConfig,
    ReportRecord,
    build_report,
    load_report_records,
    optimal_settings_text,
    published_deltas,
    render_text,
    write_report,
)
from .simulator import IntraCandlePolicy, TradeConfig, simulate, write_trade_log

log = logging.getLogger("fxlab")

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3

DEFAULT_INSTRUMENTS = ("EURUSD", "USDJPY", "EURJPY")
DEFAULT_GRANULARITIES = ("H1", "H2", "H4", "H8", "H12", "D1")

# settings accepted from flags, FXLAB_<NAME> variables and the config file
_SETTINGS = (
    "data_dir", "instruments", "granularities", "heuristics", "spread_pips", "sl_range",
    "tp_range", "policy", "max_total_loss", "workers", "out", "full_records", "trade_logs",
)


@dataclass
class RunConfig:
    data_dir: Path = Path("data")
    instruments: list[str] | None = None  # None: whatever the data dir holds
    granularities: list[str] | None = None
    heuristics: list[HeuristicId] = field(default_factory=lambda: list(HeuristicId))
    spread_pips: Decimal = Decimal("2.0")
    grid: GridSpec = field(default_factory=GridSpec)
    intra_candle_policy: IntraCandlePolicy = IntraCandlePolicy.PESSIMISTIC
    max_total_loss_pips: Decimal | None = None
    workers: int = field(default_factory=default_workers)
    output_dir: Path = Path("fxlab-out")
    keep_full_records: bool = False
    keep_trade_logs: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def trade_config(self, sl=3, tp=3) -> TradeConfig:
        return TradeConfig(tp, sl, self.spread_pips, self.max_total_loss_pips, self.intra_candle_policy)

    def subset_keys(self) -> list[DataSubsetKey]:
        """Subsets to run; explicit lists must all exist on disk."""
        if self.instruments is None and self.granularities is None:
            return discover_subsets(self.data_dir)
        insts = [get_instrument(i) for i in (self.instruments or DEFAULT_INSTRUMENTS)]
        grans = [Granularity.from_code(g) for g in (self.granularities or DEFAULT_GRANULARITIES)]
        keys = [DataSubsetKey(i, g) for i in insts for g in grans]
        missing = [k.label for k in keys if not (self.data_dir / subset_filename(k.instrument, k.granularity)).is_file()]
        if missing:
            raise ConfigError(f"missing subset files in {self.data_dir}: {', '.join(missing)}")
        return sorted(keys, key=DataSubsetKey.sort_key)


def _split(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _dec(value, what: str) -> Decimal:
    try:
        return Decimal(str(value))
    except ArithmeticError:
        raise ConfigError(f"bad {what} {value!r}") from None


def _truthy(v) -> bool:
    return v if isinstance(v, bool) else str(v).strip().lower() in ("1", "true", "yes", "on")


def resolve_settings(args: argparse.Namespace, environ=os.environ) -> dict:
    merged: dict = {}
    if getattr(args, "config", None):
        try:
            merged.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(merged) - set(_SETTINGS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for name in _SETTINGS:
        env = environ.get(f"FXLAB_{name.upper()}")
        if env is not None:
            merged[name] = env
    for name in _SETTINGS:
        v = getattr(args, name, None)
        if v is not None:
            merged[name] = v
    return merged


def build_run_config(settings: dict) -> RunConfig:
    kw = {}
    if "data_dir" in settings:
        kw["data_dir"] = Path(settings["data_dir"])
    if "out" in settings:
        kw["output_dir"] = Path(settings["out"])
    if "instruments" in settings:
        kw["instruments"] = [get_instrument(i).code for i in _split(settings["instruments"])]
    if "granularities" in settings:
        kw["granularities"] = [Granularity.from_code(g).code for g in _split(settings["granularities"])]
    if "heuristics" in settings:
        kw["heuristics"] = [HeuristicId.parse(h) for h in _split(settings["heuristics"])]
    if "spread_pips" in settings:
        kw["spread_pips"] = _dec(settings["spread_pips"], "spread")
    if "policy" in settings:
        kw["intra_candle_policy"] = IntraCandlePolicy.parse(settings["policy"])
    if settings.get("max_total_loss") not in (None, ""):
        kw["max_total_loss_pips"] = _dec(settings["max_total_loss"], "max total loss")
    if "workers" in settings:
        try:
            kw["workers"] = int(settings["workers"])
        except ValueError:
            raise ConfigError(f"bad worker count {settings['workers']!r}") from None
    kw["grid"] = GridSpec.from_ranges(settings.get("sl_range"), settings.get("tp_range"))
    kw["keep_full_records"] = _truthy(settings.get("full_records", False))
    kw["keep_trade_logs"] = _truthy(settings.get("trade_logs", False))
    cfg = RunConfig(**kw)
    cfg.trade_config()  # validates spread / max loss
    return cfg


# -- commands ------------------------------------------------------------------

def cmd_optimize(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    keys = cfg.subset_keys()
    if not keys:
        print(f"no subsets found in {cfg.data_dir}", file=sys.stderr)
        return EXIT_DATA
    sources = [SubsetSource(cfg.data_dir, k.instrument, k.granularity) for k in keys]
    base = cfg.trade_config()
    log.info("optimizing %d subsets x %d heuristics over %d grid tuples with %d workers",
             len(keys), len(cfg.heuristics), len(cfg.grid), cfg.workers)
    results = optimize_all(sources, cfg.heuristics, cfg.grid, base, cfg.workers,
                           keep_all=cfg.keep_full_records)

    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    good = [r for r in results if r.ok]
    failed = [r for r in results if not r.ok]
    write_results_csv([r.best for r in good], out_dir / "results.csv")
    if cfg.keep_full_records:
        write_results_csv(sort_records(rec for r in good for rec in r.all), out_dir / "all_records.csv")
    if cfg.keep_trade_logs:
        log_dir = out_dir / "trade_logs"
        log_dir.mkdir(exist_ok=True)
        for r in good:
            series = load_subset(cfg.data_dir, r.key.instrument, r.key.granularity)
            res = simulate(series, r.heuristic, base.with_levels(r.best.sl_pips, r.best.tp_pips), keep_log=True)
            write_trade_log(res.trade_log, log_dir / f"{r.key.label}-{r.heuristic.code}.csv")
    errors_path = out_dir / "errors.txt"
    if failed:
        errors_path.write_text("".join(f"{r.key.label} {r.heuristic.code}: {r.error}\n" for r in failed))
        for r in failed:
            print(f"error: {r.key.label} {r.heuristic.code}: {r.error}", file=sys.stderr)
    elif errors_path.exists():
        errors_path.unlink()
    if not good:
        return EXIT_DATA
    doc = build_report([ReportRecord.from_optimization(r.best) for r in good])
    write_report(doc, out_dir)
    out.write(optimal_settings_text(doc))
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_simulate(cfg: RunConfig, instrument: str, granularity: str, heuristic: str,
                 sl, tp, trade_log: Path | None = None, out=None) -> int:
    out = out or sys.stdout
    inst = get_instrument(instrument)
    gran = Granularity.from_code(granularity)
    h = HeuristicId.parse(heuristic)
    tc = cfg.trade_config(_dec(sl, "sl"), _dec(tp, "tp"))
    path = cfg.data_dir / subset_filename(inst, gran)
    if not path.is_file():
        raise ConfigError(f"no data file {path}")
    series = load_subset(cfg.data_dir, inst, gran)
    res = simulate(series, h, tc, keep_log=trade_log is not None)
    fields = [
        ("instrument", inst.code),
        ("granularity", gran.code),
        ("heuristic", h.code),
        ("tp_pips", tc.tp_pips),
        ("sl_pips", tc.sl_pips),
        ("total_profit_pips", res.total_profit_pips),
        ("total_loss_pips", res.total_loss_pips),
        ("final_balance_pips", res.final_balance_pips),
        ("n_long", res.n_long),
        ("n_short", res.n_short),
        ("ruined", str(res.ruined).lower()),
    ]
    for name, value in fields:
        out.write(f"{name}: {value}\n")
    if trade_log is not None:
        write_trade_log(res.trade_log, trade_log)
    return EXIT_OK


def _month_window(month: str) -> tuple[datetime, datetime]:
    try:
        start = datetime.strptime(month, "%Y-%m").replace(tzinfo=timezone.utc)
    except ValueError:
        raise ConfigError(f"bad month {month!r}, expected YYYY-MM") from None
    end = start.replace(year=start.year + 1, month=1) if start.month == 12 else start.replace(month=start.month + 1)
    return start, end


def signal_counts(series, start: datetime | None = None, end: datetime | None = None) -> list[tuple[str, str, int]]:
    """Rows of (heuristic, parameters, signature count) over ``[start, end)``."""
    if start is not None:
        first, last = int(series.timestamps[0]), int(series.timestamps[-1])
        if start.timestamp() > last or end.timestamp() <= first:
            raise InsufficientData(f"window {start:%Y-%m-%d}..{end:%Y-%m-%d} not covered by the data")
        series = series.window(start, end)
    return [
        ("MACD", "fast 12, slow 26, signal 9", count_macd_signals(series, MacdParams(12, 26, 9))),
        ("RSI", "length 14", count_rsi_signals(series, RsiParams(14))),
        ("price action", "n/a", count_priceaction_signals(series)),
    ]


def cmd_signals(cfg: RunConfig, instrument: str, granularity: str, month: str | None, out=None) -> int:
    out = out or sys.stdout
    series = load_subset(cfg.data_dir, instrument, granularity)
    start = end = None
    window = series
    if month:
        start, end = _month_window(month)
        window = series.window(start, end)
    rows = signal_counts(series, start, end)
    days = complete_day_count(window) if window.granularity.duration <= 86400 else None
    out.write(f"{series.key.label}  {month or 'all data'}  candles={len(window)}  full days={days}\n")
    width = max(len(r[1]) for r in rows)
    out.write(f"{'heuristic':<13}{'parameters':<{width + 2}}signatures\n")
    for name, params, n in rows:
        out.write(f"{name:<13}{params:<{width + 2}}{n}\n")
    return EXIT_OK


def cmd_report(paths: Sequence[Path], trades: Path | None, out_dir: Path | None,
               rcfg: ReportConfig = ReportConfig(), compare_published: bool = False, out=None) -> int:
    out = out or sys.stdout
    records = load_report_records(paths, trades)
    doc = build_report(records, rcfg)
    if out_dir is not None:
        write_report(doc, out_dir)
    out.write(render_text(doc))
    if compare_published:
        # no pass/fail here: the published balances came from another dataset
        out.write("\nDifference to published balances (pips)\n")
        for d in published_deltas(records):
            out.write(f"{d.simulation:<11} {d.heuristic}  ours {d.ours_pips}  published {d.published_pips}  "
                      f"delta {d.delta_pips}\n")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--data-dir", help="directory of {INSTRUMENT}-{GRANULARITY}.csv files")
    p.add_argument("--instruments", help="comma list, e.g. EURUSD,USDJPY")
    p.add_argument("--granularities", help="comma list, e.g. H1,H4,D1")
    p.add_argument("--heuristics", help="comma list of h1,h2")
    p.add_argument("--spread-pips")
    p.add_argument("--sl-range", help="A:B:S in pips (default 3:50:1)")
    p.add_argument("--tp-range", help="A:B:S in pips (default 3:50:1)")
    p.add_argument("--policy", help="pessimistic | optimistic | open-proximity")
    p.add_argument("--max-total-loss", help="ruin cutoff in pips")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--full-records", action="store_const", const=True)
    p.add_argument("--trade-logs", action="store_const", const=True)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fxlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="grid-search SL/TP for every subset and heuristic")
    _common(p)

    p = sub.add_parser("simulate", help="replay one subset with one SL/TP")
    _common(p)
    p.add_argument("--instrument", required=True)
    p.add_argument("--granularity", required=True)
    p.add_argument("--heuristic", required=True)
    p.add_argument("--sl", required=True)
    p.add_argument("--tp", required=True)
    p.add_argument("--trade-log", type=Path, help="write the trade log CSV here")

    p = sub.add_parser("signals", help="MACD / RSI / price-action signal counts")
    _common(p)
    p.add_argument("--instrument", required=True)
    p.add_argument("--granularity", default="H1")
    p.add_argument("--month", help="YYYY-MM window (default: all data)")

    p = sub.add_parser("report", help="summary tables from stored results")
    p.add_argument("results", nargs="+", type=Path, help="results CSV or published balances table")
    p.add_argument("--trades", type=Path, help="trade-count table in the same row order")
    p.add_argument("--out", type=Path, help="write report.json / report.txt / CSVs here")
    p.add_argument("--top", type=int, default=4)
    p.add_argument("--total-days", type=int, default=ReportConfig().total_days)
    p.add_argument("--trading-days", action="store_true", help="divide by total_days * 5/7")
    p.add_argument("--compare-published", action="store_true",
                   help="also list differences to the shipped published balances")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "report":
            return cmd_report(args.results, args.trades, args.out,
                              ReportConfig(args.total_days, args.trading_days, args.top),
                              args.compare_published)
        cfg = build_run_config(resolve_settings(args))
        if args.command == "optimize":
            return cmd_optimize(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.instrument, args.granularity, args.heuristic,
                                args.sl, args.tp, args.trade_log)
        return cmd_signals(cfg, args.instrument, args.granularity, args.month)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FxLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
