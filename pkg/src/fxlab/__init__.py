"""Deterministic OHLC backtesting and TP/SL grid search for price-action Forex heuristics."""
from .errors import FxLabError
from .heuristics import HeuristicId, TradeSignal, evaluate
from .market_data import (
    Candle,
    CandleSeries,
    DataSubsetKey,
    Granularity,
    Instrument,
    complete_day_count,
    get_instrument,
    parse_csv,
    validate_series,
    write_csv,
)
from .optimizer import GridSpec, JobResult, OptimizationRecord, enumerate_grid, optimize_all, optimize_job
from .simulator import IntraCandlePolicy, SimulationResult, TradeConfig, simulate

__version__ = "0.1.0"
