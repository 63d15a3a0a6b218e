"""Price-action heuristics: one trade decision per closed candle.

A heuristic is registered as a vectorised function of the open and close
arrays returning +1 (long), -1 (short) or 0 (no trade) per candle. The
one-position rule is applied on top, by :func:`evaluate` for a single
candle and by the simulator during replay.
"""
from __future__ import annotations

import enum
from typing import Callable

import numpy as np

from .errors import ConfigError
from .market_data import Candle


class TradeSignal(enum.IntEnum):
    SHORT = -1
    NO_TRADE = 0
    LONG = 1


class HeuristicId(enum.Enum):
    TREND_CONTINUATION = "h1"
    TREND_REVERSAL = "h2"

    @property
    def code(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value) -> HeuristicId:
        """Accept ``h1``/``h2``, enum names, or the reversal flag (``TRUE`` -> h2)."""
        if isinstance(value, HeuristicId):
            return value
        if isinstance(value, bool):
            return cls.TREND_REVERSAL if value else cls.TREND_CONTINUATION
        text = str(value).strip()
        for h in cls:
            if text.lower() == h.value or text.upper() == h.name:
                return h
        if text.upper() in ("TRUE", "FALSE"):
            return cls.TREND_REVERSAL if text.upper() == "TRUE" else cls.TREND_CONTINUATION
        raise ConfigError(f"unknown heuristic {value!r}")

    def __str__(self) -> str:
        return self.value


SignalFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
_REGISTRY: dict[HeuristicId, SignalFn] = {}


def register(heuristic: HeuristicId) -> Callable[[SignalFn], SignalFn]:
    def deco(fn: SignalFn) -> SignalFn:
        _REGISTRY[heuristic] = fn
        return fn

    return deco


@register(HeuristicId.TREND_CONTINUATION)
def _trend_continuation(open_, close):
    return np.sign(close - open_)


@register(HeuristicId.TREND_REVERSAL)
def _trend_reversal(open_, close):
    return np.sign(open_ - close)


def candle_signals(heuristic: HeuristicId, open_: np.ndarray, close: np.ndarray) -> np.ndarray:
    """Per-candle direction as int8, assuming no position is open."""
    fn = _REGISTRY[HeuristicId.parse(heuristic)]
    return np.asarray(fn(np.asarray(open_), np.asarray(close)), dtype=np.int8)


def evaluate(heuristic: HeuristicId, candle: Candle, has_open_position: bool) -> TradeSignal:
    if has_open_position:
        return TradeSignal.NO_TRADE
    sig = candle_signals(heuristic, np.array([candle.open]), np.array([candle.close]))
    return TradeSignal(int(sig[0]))
