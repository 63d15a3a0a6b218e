"""Summary tables over best-per-job records.

Works on :class:`ReportRecord`, which both the optimizer output and the
shipped appendix fixtures convert into, so published tables can be
regenerated without re-running any simulation.
"""
from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, InsufficientRecords, MalformedResults, MissingHeuristic
from .heuristics import HeuristicId
from .market_data import GRANULARITY_ORDER, Granularity, Instrument, get_instrument
from .optimizer import RESULTS_HEADER, OptimizationRecord
from .simulator import pips_to_pipettes

CALENDAR_DAYS_10Y = 7 * 365 + 3 * 366  # 3653


@dataclass(frozen=True)
class ReportConfig:
    total_days: int = CALENDAR_DAYS_10Y
    trading_day_adjust: bool = False  # only count 5 of every 7 days
    top_n: int = 4

    def __post_init__(self):
        if self.total_days <= 0:
            raise ConfigError(f"total_days must be > 0, got {self.total_days}")

    @property
    def denominator(self) -> float:
        return self.total_days * 5 / 7 if self.trading_day_adjust else float(self.total_days)


@dataclass(frozen=True)
class ReportRecord:
    instrument: Instrument
    granularity: Granularity
    heuristic: HeuristicId
    balance_pips: Decimal
    n_trades: int | None = None
    sl_pips: Decimal | None = None
    tp_pips: Decimal | None = None

    @property
    def simulation(self) -> str:
        return f"{self.instrument.code}-{self.granularity.code}"

    @classmethod
    def from_optimization(cls, rec: OptimizationRecord) -> ReportRecord:
        return cls(rec.instrument, rec.granularity, rec.heuristic, rec.final_balance_pips,
                   rec.n_trades, rec.sl_pips, rec.tp_pips)

    def order_key(self) -> tuple:
        return (self.instrument.code, GRANULARITY_ORDER[self.granularity], self.heuristic.value)


def to_pips(balance_price_units, instrument: Instrument | str) -> Decimal:
    """Price-unit balance to pips: ``balance / pip_size`` (exact for decimal input)."""
    return Decimal(str(balance_price_units)) / get_instrument(instrument).pip_size


def per_day(value, cfg: ReportConfig = ReportConfig()) -> float:
    return float(value) / cfg.denominator


@dataclass(frozen=True)
class HeuristicSummary:
    heuristic: HeuristicId
    n_records: int
    mean_balance_pips: float
    stddev_balance_pips: float
    mean_trades: float | None
    stddev_trades: float | None
    stddev_defined: bool  # False with a single record (reported as 0)


def _sample_stdev(values: Sequence[float]) -> tuple[float, bool]:
    if len(values) < 2:
        return 0.0, False
    return statistics.stdev(values), True


def summarize_heuristics(
    records: Iterable[ReportRecord],
    heuristics: Iterable[HeuristicId | str] = tuple(HeuristicId),
) -> list[HeuristicSummary]:
    """Mean balance plus mean and sample stddev of trade counts per heuristic."""
    records = list(records)
    out = []
    for h in (HeuristicId.parse(h) for h in heuristics):
        rows = [r for r in records if r.heuristic == h]
        if not rows:
            raise MissingHeuristic(f"no records for heuristic {h}")
        balances = [float(r.balance_pips) for r in rows]
        bal_sd, defined = _sample_stdev(balances)
        mean_trades = sd_trades = None
        if all(r.n_trades is not None for r in rows):
            trades = [float(r.n_trades) for r in rows]
            mean_trades = statistics.fmean(trades)
            sd_trades, _ = _sample_stdev(trades)
        out.append(HeuristicSummary(h, len(rows), statistics.fmean(balances), bal_sd,
                                    mean_trades, sd_trades, defined))
    return out


@dataclass(frozen=True)
class RankedRow:
    instrument: str
    period: str
    heuristic: str
    balance_pips: Decimal
    avg_pips_per_day: float


def _ranked(records: Iterable[ReportRecord], n: int, cfg: ReportConfig, descending: bool) -> list[RankedRow]:
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rows = sorted(records, key=ReportRecord.order_key)
    rows.sort(key=lambda r: r.balance_pips, reverse=descending)  # stable: ties keep canonical order
    return [
        RankedRow(r.instrument.code, r.granularity.code, r.heuristic.code, r.balance_pips,
                  per_day(r.balance_pips, cfg))
        for r in rows[:n]
    ]


def top_n(records, n: int, cfg: ReportConfig = ReportConfig()) -> list[RankedRow]:
    return _ranked(records, n, cfg, descending=True)


def bottom_n(records, n: int, cfg: ReportConfig = ReportConfig()) -> list[RankedRow]:
    return _ranked(records, n, cfg, descending=False)


@dataclass(frozen=True)
class TradesSummary:
    mean_trades: float
    stddev_trades: float
    mean_trades_per_day: float


def trades_summary(records: Iterable[ReportRecord | int], cfg: ReportConfig = ReportConfig()) -> TradesSummary:
    """Sample statistics of trade counts; accepts records or bare counts."""
    counts = [float(r if isinstance(r, int) else r.n_trades) for r in records]
    if len(counts) < 2:
        raise InsufficientRecords(f"need at least 2 records, got {len(counts)}")
    mean = statistics.fmean(counts)
    return TradesSummary(mean, statistics.stdev(counts), per_day(mean, cfg))


# -- loading -------------------------------------------------------------------

def _split_simulation(label: str) -> tuple[Instrument, Granularity]:
    try:
        code, gran = label.strip().split("-")
        return get_instrument(code), Granularity.from_code(gran)
    except (ValueError, ConfigError):
        raise MalformedResults(f"bad simulation label {label!r}") from None


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise MalformedResults(f"{path}: empty results file")
    header = [c.strip().lower() for c in rows[0]]
    if len(rows) < 2:
        raise MalformedResults(f"{path}: no records")
    return header, rows[1:]


def read_results_csv(path: str | Path) -> list[OptimizationRecord]:
    header, rows = _read_rows(path)
    if header != RESULTS_HEADER.split(","):
        raise MalformedResults(f"{path}: unexpected header {','.join(header)!r}")
    out = []
    for lineno, r in enumerate(rows, start=2):
        try:
            inst, gran, h, sl, tp, profit, loss, balance, n_long, n_short = (c.strip() for c in r)
            rec = OptimizationRecord(
                get_instrument(inst), Granularity.from_code(gran), HeuristicId.parse(h),
                pips_to_pipettes(sl), pips_to_pipettes(tp), pips_to_pipettes(profit),
                pips_to_pipettes(loss), int(n_long), int(n_short),
            )
            if rec.final_balance_pipettes != pips_to_pipettes(balance):
                raise ValueError("final balance disagrees with profit - loss")
        except (ValueError, ArithmeticError, ConfigError) as exc:
            raise MalformedResults(f"{path}: line {lineno}: {exc}") from None
        out.append(rec)
    return out


def read_appendix_balances(path: str | Path) -> list[ReportRecord]:
    """Rows of ``simulation,balance,balance_pips,reversal``; pips recomputed from price units."""
    header, rows = _read_rows(path)
    if header[:1] != ["simulation"] or len(header) != 4:
        raise MalformedResults(f"{path}: not a balances table")
    out = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 4:
            raise MalformedResults(f"{path}: line {lineno}: expected 4 fields")
        sim, balance, _pips, reversal = row
        inst, gran = _split_simulation(sim)
        try:
            out.append(ReportRecord(inst, gran, HeuristicId.parse(reversal), to_pips(balance.strip(), inst)))
        except (InvalidOperation, ConfigError) as exc:
            raise MalformedResults(f"{path}: line {lineno}: {exc}") from None
    return out


def read_appendix_trades(path: str | Path) -> list[tuple[str, int]]:
    header, rows = _read_rows(path)
    if header[:2] != ["simulation", "n_trades"]:
        raise MalformedResults(f"{path}: not a trades table")
    try:
        return [(r[0].strip(), int(r[1])) for r in rows]
    except ValueError as exc:
        raise MalformedResults(f"{path}: {exc}") from None


def read_appendix_settings(path: str | Path) -> list[tuple[str, HeuristicId, Decimal, Decimal]]:
    """(simulation, heuristic, sl_pips, tp_pips) from a ``simulation,sl,tp,reverse`` table."""
    header, rows = _read_rows(path)
    out = []
    for sim, sl, tp, rev in rows:
        inst, _ = _split_simulation(sim)
        out.append((sim.strip(), HeuristicId.parse(rev), to_pips(sl.strip(), inst), to_pips(tp.strip(), inst)))
    return out


def join_trades(records: Sequence[ReportRecord], trades: Sequence[tuple[str, int]]) -> list[ReportRecord]:
    """Attach trade counts listed in the same row order as ``records``."""
    if len(records) != len(trades):
        raise MalformedResults(f"{len(records)} balance rows but {len(trades)} trade rows")
    out = []
    for rec, (sim, n) in zip(records, trades):
        if sim != rec.simulation:
            raise MalformedResults(f"row order mismatch: {rec.simulation} vs {sim}")
        out.append(ReportRecord(rec.instrument, rec.granularity, rec.heuristic, rec.balance_pips, n,
                                rec.sl_pips, rec.tp_pips))
    return out


def _fixture(name: str):
    return resources.files("fxlab") / "data" / name


def load_appendix_records(with_settings: bool = True) -> list[ReportRecord]:
    """The 36 published best-balance rows with trade counts (and SL/TP where published)."""
    with resources.as_file(_fixture("appendix_a_balances.csv")) as a, \
            resources.as_file(_fixture("appendix_c_trades.csv")) as c:
        records = join_trades(read_appendix_balances(a), read_appendix_trades(c))
    if with_settings:
        with resources.as_file(_fixture("appendix_b_settings.csv")) as b:
            settings = {(sim, h): (sl, tp) for sim, h, sl, tp in read_appendix_settings(b)}
        records = [
            ReportRecord(r.instrument, r.granularity, r.heuristic, r.balance_pips, r.n_trades,
                         *settings.get((r.simulation, r.heuristic), (None, None)))
            for r in records
        ]
    return records


def load_report_records(paths: Sequence[str | Path], trades_path: str | Path | None = None) -> list[ReportRecord]:
    """Load our results CSVs and/or published balance tables.

    A balances table needs ``trades_path`` (same row order) for trade counts.
    """
    records: list[ReportRecord] = []
    for path in paths:
        header, _ = _read_rows(path)
        if header == RESULTS_HEADER.split(","):
            records.extend(ReportRecord.from_optimization(r) for r in read_results_csv(path))
        elif header[:1] == ["simulation"]:
            recs = read_appendix_balances(path)
            if trades_path is not None:
                recs = join_trades(recs, read_appendix_trades(trades_path))
            records.extend(recs)
        else:
            raise MalformedResults(f"{path}: unrecognised header {','.join(header)!r}")
    return records


@dataclass(frozen=True)
class PublishedDelta:
    simulation: str
    heuristic: str
    ours_pips: Decimal
    published_pips: Decimal

    @property
    def delta_pips(self) -> Decimal:
        return self.ours_pips - self.published_pips


def published_deltas(records: Iterable[ReportRecord]) -> list[PublishedDelta]:
    """Balance differences against the shipped published table, matched by subset and heuristic.

    Informational only: the published numbers come from one historical
    dataset and are not expected to be reproduced.
    """
    published = {(r.simulation, r.heuristic): r.balance_pips for r in load_appendix_records(with_settings=False)}
    out = [
        PublishedDelta(r.simulation, r.heuristic.code, r.balance_pips, published[(r.simulation, r.heuristic)])
        for r in sorted(records, key=ReportRecord.order_key)
        if (r.simulation, r.heuristic) in published
    ]
    return out


# -- report document -----------------------------------------------------------

def _plain(d: Decimal) -> str:
    """Decimal text without exponent or trailing zeros."""
    return format(d.normalize(), "f")


def _num(x: float | None, digits: int = 4):
    return None if x is None or math.isnan(x) else round(x, digits)


def _price(pips: Decimal, instrument: Instrument) -> str:
    """Pips as a price distance, at least four decimals (``0.1400``, ``0.0003``)."""
    d = pips * instrument.pip_size
    return format(d.quantize(Decimal("0.0001")) if d == d.quantize(Decimal("0.0001")) else d.normalize(), "f")


def build_report(records: Sequence[ReportRecord], cfg: ReportConfig = ReportConfig()) -> dict:
    """All summary sections as a JSON-ready dict."""
    if not records:
        raise MalformedResults("no records to report on")
    ranked = lambda rows: [
        {"instrument": r.instrument, "period": r.period, "heuristic": r.heuristic,
         "balance_pips": str(r.balance_pips), "avg_pips_per_day": _num(r.avg_pips_per_day)}
        for r in rows
    ]
    present = sorted({r.heuristic for r in records}, key=lambda h: h.value)
    summary = [
        {"heuristic": s.heuristic.code, "n_records": s.n_records,
         "mean_balance_pips": _num(s.mean_balance_pips), "stddev_balance_pips": _num(s.stddev_balance_pips),
         "mean_trades": _num(s.mean_trades), "stddev_trades": _num(s.stddev_trades),
         "stddev_defined": s.stddev_defined}
        for s in summarize_heuristics(records, present)
    ]
    by_balance = sorted(records, key=ReportRecord.order_key)
    by_balance.sort(key=lambda r: r.balance_pips, reverse=True)
    settings = [
        {"simulation": r.simulation, "heuristic": r.heuristic.code,
         "sl_price": _price(r.sl_pips, r.instrument), "tp_price": _price(r.tp_pips, r.instrument),
         "sl_pips": _plain(r.sl_pips), "tp_pips": _plain(r.tp_pips), "balance_pips": str(r.balance_pips)}
        for r in by_balance
        if r.sl_pips is not None and r.tp_pips is not None
    ]
    trades = [
        {"simulation": r.simulation, "heuristic": r.heuristic.code, "n_trades": r.n_trades,
         "avg_trades_per_day": _num(per_day(r.n_trades, cfg))}
        for r in by_balance
        if r.n_trades is not None
    ]
    doc = {
        "config": {"total_days": cfg.total_days, "trading_day_adjust": cfg.trading_day_adjust,
                   "top_n": cfg.top_n},
        "best_performers": ranked(top_n(records, cfg.top_n, cfg)),
        "worst_performers": ranked(bottom_n(records, cfg.top_n, cfg)),
        "heuristic_summary": summary,
        "optimal_settings": settings,
        "trades": trades,
    }
    top = by_balance[: cfg.top_n]
    if len(top) >= 2 and all(r.n_trades is not None for r in top):
        ts = trades_summary(top, cfg)
        doc["top_trades_summary"] = {"mean_trades": _num(ts.mean_trades), "stddev_trades": _num(ts.stddev_trades),
                                     "mean_trades_per_day": _num(ts.mean_trades_per_day)}
    return doc


def report_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _table(title: str, header: list[str], rows: list[list]) -> str:
    cells = [header] + [["" if c is None else str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
    lines = [title, fmt(header), fmt(["-" * w for w in widths])] + [fmt(r) for r in cells[1:]]
    return "\n".join(lines) + "\n"


def optimal_settings_text(doc: dict) -> str:
    return _table(
        "Optimal SL/TP settings",
        ["simulation", "heuristic", "SL", "TP", "SL pips", "TP pips", "balance pips"],
        [[s["simulation"], s["heuristic"], s["sl_price"], s["tp_price"], s["sl_pips"], s["tp_pips"],
          s["balance_pips"]] for s in doc["optimal_settings"]],
    )


def render_text(doc: dict) -> str:
    ranked_cols = ["instrument", "period", "heuristic", "balance_pips", "avg_pips_per_day"]
    parts = [
        _table(f"Best {doc['config']['top_n']} balances", ranked_cols,
               [[r[c] for c in ranked_cols] for r in doc["best_performers"]]),
        _table(f"Worst {doc['config']['top_n']} balances", ranked_cols,
               [[r[c] for c in ranked_cols] for r in doc["worst_performers"]]),
        _table("Heuristic summary",
               ["heuristic", "runs", "mean balance pips", "balance sd", "mean trades", "trades sd"],
               [[s["heuristic"], s["n_records"], s["mean_balance_pips"], s["stddev_balance_pips"],
                 s["mean_trades"], s["stddev_trades"]] for s in doc["heuristic_summary"]]),
        optimal_settings_text(doc),
        _table("Trades", ["simulation", "heuristic", "trades", "per day"],
               [[t["simulation"], t["heuristic"], t["n_trades"], t["avg_trades_per_day"]] for t in doc["trades"]]),
    ]
    if "top_trades_summary" in doc:
        ts = doc["top_trades_summary"]
        parts.append(_table("Trades among the best runs", ["mean trades", "sd", "mean per day"],
                            [[ts["mean_trades"], ts["stddev_trades"], ts["mean_trades_per_day"]]]))
    return "\n".join(parts)


def write_report(doc: dict, out_dir: str | Path) -> None:
    """report.json, report.txt and one CSV per tabular section."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(doc), encoding="utf-8")
    (out / "report.txt").write_text(render_text(doc), encoding="utf-8")
    for section in ("best_performers", "worst_performers", "heuristic_summary", "optimal_settings", "trades"):
        rows = doc[section]
        if not rows:
            continue
        with open(out / f"report_{section}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
