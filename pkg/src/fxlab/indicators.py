"""MACD, RSI and signal-rate counts.

Conventions:

* EMA of length n: seeded with the simple mean of the first n values,
  then ``ema += alpha * (x - ema)`` with ``alpha = 2 / (n + 1)``.
* RSI: Wilder smoothing (``1/n``) seeded with the mean of the first n
  gains and losses; a window with no movement at all reads 50.
* MACD signature: a sign change of the histogram between consecutive
  candles, a zero histogram keeps the previous sign.
* RSI signature: a crossing of the 30 or 70 level, same zero rule.

Indicator arrays are float64, aligned to the candles, NaN during warm-up.
Everything is computed on pipette-valued closes, which keeps flat price
stretches exactly flat; MACD outputs are then scaled to price units.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .errors import ConfigError, InsufficientData
from .market_data import CandleSeries


@dataclass(frozen=True)
class MacdParams:
    fast_len: int = 12
    slow_len: int = 26
    signal_len: int = 9

    def __post_init__(self):
        if not 0 < self.fast_len < self.slow_len or self.signal_len <= 0:
            raise ConfigError(f"invalid MACD parameters {self}")


@dataclass(frozen=True)
class RsiParams:
    length: int = 14

    def __post_init__(self):
        if self.length < 2:
            raise ConfigError(f"RSI length must be >= 2, got {self.length}")


def ema(values: np.ndarray, n: int) -> np.ndarray:
    """EMA over the defined (non-NaN) suffix of ``values``."""
    values = np.asarray(values, dtype=np.float64)
    out = np.full(len(values), np.nan)
    defined = np.flatnonzero(~np.isnan(values))
    if len(defined) < n:
        return out
    start = defined[0]
    alpha = 2.0 / (n + 1)
    seed = start + n - 1
    acc = values[start : seed + 1].sum() / n
    out[seed] = acc
    for i in range(seed + 1, len(values)):
        acc += alpha * (values[i] - acc)
        out[i] = acc
    return out


def macd(series: CandleSeries, params: MacdParams = MacdParams()):
    """Return (macd_line, signal_line, histogram) in price units."""
    if len(series) < params.slow_len + params.signal_len:
        raise InsufficientData(
            f"MACD{params.fast_len, params.slow_len, params.signal_len} needs "
            f"{params.slow_len + params.signal_len} candles, got {len(series)}"
        )
    line, signal, hist = _macd_pipettes(series.close.astype(np.float64), params)
    scale = float(series.instrument.pipette_size)
    return line * scale, signal * scale, hist * scale


def _macd_pipettes(close: np.ndarray, params: MacdParams):
    fast = ema(close, params.fast_len)
    slow = ema(close, params.slow_len)
    line = fast - slow  # NaN until the slow EMA starts
    signal = ema(line, params.signal_len)
    hist = line - signal
    return line, signal, hist


def rsi(series: CandleSeries, params: RsiParams = RsiParams()) -> np.ndarray:
    n = params.length
    if len(series) <= n:
        raise InsufficientData(f"RSI({n}) needs more than {n} candles, got {len(series)}")
    delta = np.diff(series.close.astype(np.float64))
    gains = np.where(delta > 0, delta, 0.0)
    losses = np.where(delta < 0, -delta, 0.0)
    out = np.full(len(series), np.nan)
    avg_gain = gains[:n].sum() / n
    avg_loss = losses[:n].sum() / n
    out[n] = _rsi_value(avg_gain, avg_loss)
    for i in range(n, len(delta)):
        avg_gain = (avg_gain * (n - 1) + gains[i]) / n
        avg_loss = (avg_loss * (n - 1) + losses[i]) / n
        out[i + 1] = _rsi_value(avg_gain, avg_loss)
    return out


def _rsi_value(avg_gain: float, avg_loss: float) -> float:
    if avg_loss == 0.0:
        return 50.0 if avg_gain == 0.0 else 100.0
    return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss)


def count_sign_changes(values: np.ndarray, level: float = 0.0) -> int:
    """Crossings of ``level`` over the defined values; touching it keeps the side."""
    side = 0
    count = 0
    for v in values[~np.isnan(values)]:
        s = int(v > level) - int(v < level)
        if s == 0:
            continue
        if side and s != side:
            count += 1
        side = s
    return count


def count_macd_signals(series: CandleSeries, params: MacdParams = MacdParams()) -> int:
    _, _, hist = macd(series, params)
    return count_sign_changes(hist)


def count_rsi_signals(
    series: CandleSeries, params: RsiParams = RsiParams(), low: float = 30.0, high: float = 70.0
) -> int:
    values = rsi(series, params)
    return count_sign_changes(values, low) + count_sign_changes(values, high)


def count_priceaction_signals(series: CandleSeries) -> int:
    """Candles whose close differs from their open; each one is a trade signal."""
    return int(np.count_nonzero(series.close != series.open))


def expected_successful_trades(signal_count: int, success_rate) -> Decimal:
    rate = Decimal(str(success_rate))
    if not 0 <= rate <= 1:
        raise ConfigError(f"success rate must lie in [0, 1], got {success_rate}")
    return Decimal(signal_count) * rate
