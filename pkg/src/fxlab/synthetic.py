"""Deterministic synthetic candle series for tests, demos and benchmarks."""
from __future__ import annotations

from datetime import datetime, timezone

import numpy as np

from .market_data import CandleSeries, Granularity, Instrument, get_instrument

DEFAULT_START = datetime(2010, 1, 4, tzinfo=timezone.utc)  # a Monday


def _timestamps(n: int, granularity: Granularity, start: datetime, skip_weekends: bool) -> np.ndarray:
    step = granularity.duration
    t0 = int(start.timestamp())
    if not skip_weekends:
        return t0 + step * np.arange(n, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    t, k = t0, 0
    while k < n:
        # 1970-01-01 was a Thursday: weekday 5, 6 are Sat, Sun
        if (t // 86400 + 3) % 7 < 5:
            out[k] = t
            k += 1
        t += step
    return out


def from_closes(
    closes,
    instrument: Instrument | str = "EURUSD",
    granularity: Granularity | str = "H1",
    start: datetime = DEFAULT_START,
    wick: int = 0,
) -> CandleSeries:
    """Gapless series whose opens are the previous closes.

    ``closes`` are integer pipettes; the first open equals the first close.
    """
    c = np.asarray(closes, dtype=np.int64)
    o = np.concatenate([c[:1], c[:-1]])
    h = np.maximum(o, c) + wick
    l = np.minimum(o, c) - wick
    g = Granularity.from_code(granularity)
    return CandleSeries(get_instrument(instrument), g, _timestamps(len(c), g, start, False), o, h, l, c)


def random_walk(
    n: int,
    seed: int,
    instrument: Instrument | str = "EURUSD",
    granularity: Granularity | str = "H1",
    start: datetime = DEFAULT_START,
    step_pipettes: int = 150,
    doji_rate: float = 0.05,
    gap_rate: float = 0.02,
    skip_weekends: bool = True,
) -> CandleSeries:
    """Pseudo-random OHLC walk in pipettes, reproducible from ``seed``.

    Candle bodies are roughly normal with scale ``step_pipettes``; wicks
    are exponential. A fraction ``gap_rate`` of candles open away from the
    previous close and ``doji_rate`` close exactly at their open.
    """
    instrument = get_instrument(instrument)
    granularity = Granularity.from_code(granularity)
    rng = np.random.default_rng(seed)
    base = 100_000  # 1.00000 for 4-digit pairs, 100.000 for JPY pairs
    body = np.rint(rng.normal(0.0, step_pipettes, n)).astype(np.int64)
    body[rng.random(n) < doji_rate] = 0
    gaps = np.where(rng.random(n) < gap_rate, np.rint(rng.normal(0.0, 3 * step_pipettes, n)), 0).astype(np.int64)
    up_wick = np.rint(rng.exponential(step_pipettes / 2, n)).astype(np.int64)
    dn_wick = np.rint(rng.exponential(step_pipettes / 2, n)).astype(np.int64)

    o = np.empty(n, dtype=np.int64)
    c = np.empty(n, dtype=np.int64)
    prev = base
    floor = base // 4
    for i in range(n):
        o[i] = max(prev + gaps[i], floor)
        c[i] = max(o[i] + body[i], floor)
        prev = c[i]
    h = np.maximum(o, c) + up_wick
    l = np.maximum(np.minimum(o, c) - dn_wick, 1)
    volume = tuple(int(v) for v in rng.integers(0, 5000, n))
    return CandleSeries(
        instrument, granularity, _timestamps(n, granularity, start, skip_weekends), o, h, l, c, volume
    )


def sine_wave(n: int, period: float, amplitude: int = 500, level: int = 110000, **kw) -> CandleSeries:
    t = np.arange(n)
    closes = level + np.rint(amplitude * np.sin(2 * np.pi * t / period)).astype(np.int64)
    return from_closes(closes, **kw)


def square_wave(n: int, half_period: int, amplitude: int = 500, level: int = 110000, **kw) -> CandleSeries:
    phase = (np.arange(n) // half_period) % 2
    closes = level + np.where(phase == 0, amplitude, -amplitude)
    return from_closes(closes, **kw)


def ramp(n: int, slope: int = 10, level: int = 110000, **kw) -> CandleSeries:
    return from_closes(level + slope * np.arange(n, dtype=np.int64), **kw)


def constant(n: int, level: int = 110000, **kw) -> CandleSeries:
    return from_closes(np.full(n, level, dtype=np.int64), **kw)
