"""Exhaustive (SL, TP) grid search per (subset x heuristic) job.

Jobs run on a thread pool; the replay kernel releases the GIL, so
threads give real parallelism while sharing the read-only series. Output
order is canonical, so results do not depend on the worker count.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import ConfigError, EmptySeries, FxLabError, InvalidSpec
from .heuristics import HeuristicId, candle_signals
from .market_data import (
    GRANULARITY_ORDER,
    CandleSeries,
    DataSubsetKey,
    Granularity,
    Instrument,
    get_instrument,
    load_subset,
)
from .simulator import TradeConfig, _replay_grid, format_pipettes, pips_to_pipettes

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    sl_min: Decimal = Decimal(3)
    sl_max: Decimal = Decimal(50)
    sl_step: Decimal = Decimal(1)
    tp_min: Decimal = Decimal(3)
    tp_max: Decimal = Decimal(50)
    tp_step: Decimal = Decimal(1)

    def __post_init__(self):
        for name in ("sl_min", "sl_max", "sl_step", "tp_min", "tp_max", "tp_step"):
            object.__setattr__(self, name, Decimal(str(getattr(self, name))))
        for axis in ("sl", "tp"):
            lo, hi, step = (getattr(self, f"{axis}_{k}") for k in ("min", "max", "step"))
            if step <= 0:
                raise InvalidSpec(f"{axis} step must be > 0, got {step}")
            if lo > hi:
                raise InvalidSpec(f"{axis} range {lo}:{hi} is empty")
            if lo <= 0:
                raise InvalidSpec(f"{axis} values must be > 0, got min {lo}")

    @classmethod
    def from_ranges(cls, sl: str | None = None, tp: str | None = None) -> GridSpec:
        """Build from ``A:B:S`` range strings (``A:B`` implies step 1)."""
        kw = {}
        for axis, text in (("sl", sl), ("tp", tp)):
            if text is None:
                continue
            parts = text.split(":")
            if len(parts) not in (2, 3):
                raise InvalidSpec(f"bad {axis} range {text!r}, expected A:B:S")
            try:
                vals = [Decimal(p) for p in parts] + ([Decimal(1)] if len(parts) == 2 else [])
            except ArithmeticError:
                raise InvalidSpec(f"bad {axis} range {text!r}") from None
            kw.update({f"{axis}_min": vals[0], f"{axis}_max": vals[1], f"{axis}_step": vals[2]})
        return cls(**kw)

    def _axis(self, axis: str) -> list[Decimal]:
        lo, hi, step = (getattr(self, f"{axis}_{k}") for k in ("min", "max", "step"))
        count = int((hi - lo) // step) + 1
        return [lo + i * step for i in range(count)]

    def __len__(self) -> int:
        return len(self._axis("sl")) * len(self._axis("tp"))


def enumerate_grid(spec: GridSpec) -> list[tuple[Decimal, Decimal]]:
    """All (sl, tp) pairs, SL outer ascending, TP inner ascending."""
    return [(sl, tp) for sl in spec._axis("sl") for tp in spec._axis("tp")]


@dataclass(frozen=True)
class OptimizationRecord:
    instrument: Instrument
    granularity: Granularity
    heuristic: HeuristicId
    sl_pipettes: int
    tp_pipettes: int
    total_profit_pipettes: int
    total_loss_pipettes: int
    n_long: int
    n_short: int
    ruined: bool = False

    @property
    def final_balance_pipettes(self) -> int:
        return self.total_profit_pipettes - self.total_loss_pipettes

    @property
    def sl_pips(self) -> Decimal:
        return Decimal(self.sl_pipettes) / 10

    @property
    def tp_pips(self) -> Decimal:
        return Decimal(self.tp_pipettes) / 10

    @property
    def total_profit_pips(self) -> Decimal:
        return Decimal(self.total_profit_pipettes) / 10

    @property
    def total_loss_pips(self) -> Decimal:
        return Decimal(self.total_loss_pipettes) / 10

    @property
    def final_balance_pips(self) -> Decimal:
        return Decimal(self.final_balance_pipettes) / 10

    @property
    def n_trades(self) -> int:
        return self.n_long + self.n_short

    @property
    def key(self) -> DataSubsetKey:
        return DataSubsetKey(self.instrument, self.granularity)

    def csv_row(self) -> str:
        return ",".join(
            [
                self.instrument.code,
                self.granularity.code,
                self.heuristic.code,
                format_pipettes(self.sl_pipettes),
                format_pipettes(self.tp_pipettes),
                format_pipettes(self.total_profit_pipettes),
                format_pipettes(self.total_loss_pipettes),
                format_pipettes(self.final_balance_pipettes),
                str(self.n_long),
                str(self.n_short),
            ]
        )


RESULTS_HEADER = (
    "instrument,granularity,heuristic,sl_pips,tp_pips,total_profit_pips,"
    "total_loss_pips,final_balance_pips,n_long,n_short"
)


@dataclass(frozen=True)
class JobResult:
    key: DataSubsetKey
    heuristic: HeuristicId
    best: OptimizationRecord | None
    all: tuple[OptimizationRecord, ...] | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def sort_key(self) -> tuple:
        return (*self.key.sort_key(), self.heuristic.value)


def _grid_arrays(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    pairs = enumerate_grid(spec)
    sls = np.array([pips_to_pipettes(sl, "sl") for sl, _ in pairs], dtype=np.int64)
    tps = np.array([pips_to_pipettes(tp, "tp") for _, tp in pairs], dtype=np.int64)
    return sls, tps


def optimize_job(
    series: CandleSeries,
    heuristic: HeuristicId | str,
    spec: GridSpec,
    config_base: TradeConfig,
    keep_all: bool = False,
) -> JobResult:
    """Simulate every grid tuple and keep the highest final balance.

    Ties go to the smaller SL, then the smaller TP: with SL-major
    enumeration that is simply the first maximum.
    """
    if len(series) == 0:
        raise EmptySeries(f"{series.key}: no candles")
    heuristic = HeuristicId.parse(heuristic)
    _, _, spread, max_loss = config_base.pipettes()
    sls, tps = _grid_arrays(spec)
    sig = candle_signals(heuristic, series.open, series.close)
    out = _replay_grid(
        series.open, series.high, series.low, series.close, sig,
        sls, tps, spread, max_loss, int(config_base.intra_candle_policy),
    )
    balances = out[:, 0] - out[:, 1]
    best_i = int(np.argmax(balances))

    def record(i: int) -> OptimizationRecord:
        return OptimizationRecord(
            series.instrument, series.granularity, heuristic,
            int(sls[i]), int(tps[i]), int(out[i, 0]), int(out[i, 1]),
            int(out[i, 2]), int(out[i, 3]), bool(out[i, 4]),
        )

    records = tuple(record(i) for i in range(len(sls))) if keep_all else None
    best = records[best_i] if records else record(best_i)
    return JobResult(series.key, heuristic, best, records)


@dataclass(frozen=True)
class SubsetSource:
    """A subset file to be parsed inside the worker pool."""

    data_dir: Path
    instrument: Instrument
    granularity: Granularity

    @property
    def key(self) -> DataSubsetKey:
        return DataSubsetKey(get_instrument(self.instrument), Granularity.from_code(self.granularity))

    def load(self) -> CandleSeries:
        return load_subset(self.data_dir, self.instrument, self.granularity)


Subset = Union[CandleSeries, SubsetSource]


def default_workers() -> int:
    return os.cpu_count() or 1


def _load(src: Subset) -> CandleSeries | str:
    if isinstance(src, CandleSeries):
        return src
    try:
        return src.load()
    except (FxLabError, OSError) as exc:
        return f"{type(exc).__name__}: {exc}"


def optimize_all(
    subsets: Sequence[Subset],
    heuristics: Iterable[HeuristicId | str],
    spec: GridSpec,
    config_base: TradeConfig,
    parallelism: int | None = None,
    keep_all: bool = False,
    progress: Callable[[JobResult], None] | None = None,
) -> list[JobResult]:
    """Run one job per (subset, heuristic), ``parallelism`` at a time.

    A subset that fails to load or simulate yields error entries for its
    jobs; sibling jobs still run. Results are sorted by (instrument,
    granularity, heuristic).
    """
    heuristics = sorted({HeuristicId.parse(h) for h in heuristics}, key=lambda h: h.value)
    if not subsets:
        raise ConfigError("no subsets given")
    if not heuristics:
        raise ConfigError("no heuristics given")
    workers = parallelism or default_workers()
    if workers < 1:
        raise ConfigError(f"parallelism must be >= 1, got {workers}")

    def run(series: CandleSeries, h: HeuristicId) -> JobResult:
        try:
            res = optimize_job(series, h, spec, config_base, keep_all)
        except FxLabError as exc:
            res = JobResult(series.key, h, None, error=f"{type(exc).__name__}: {exc}")
        if progress:
            progress(res)
        return res

    with ThreadPoolExecutor(max_workers=workers) as pool:
        loaded = list(pool.map(_load, subsets))
        futures, results = [], []
        for src, series in zip(subsets, loaded):
            if isinstance(series, str):
                log.warning("subset %s failed to load: %s", src.key, series)
                results.extend(JobResult(src.key, h, None, error=series) for h in heuristics)
                continue
            futures.extend(pool.submit(run, series, h) for h in heuristics)
        results.extend(f.result() for f in futures)
    return sorted(results, key=JobResult.sort_key)


def write_results_csv(records: Iterable[OptimizationRecord], path: str | Path) -> None:
    lines = [RESULTS_HEADER] + [r.csv_row() for r in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sort_records(records: Iterable[OptimizationRecord]) -> list[OptimizationRecord]:
    return sorted(
        records,
        key=lambda r: (r.instrument.code, GRANULARITY_ORDER[r.granularity], r.heuristic.value,
                       r.sl_pipettes, r.tp_pipettes),
    )
