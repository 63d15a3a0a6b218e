"""Single-configuration trade replay.

Trade model, all in integer pipettes of the bid quote:

* a signal is taken at candle ``i``'s close and filled at candle
  ``i + 1``'s open; a signal on the last candle is dropped
* longs buy at ask (bid + spread) and sell at bid; shorts sell at bid and
  buy back at ask, so each round trip pays the spread once
* TP/SL levels are placed so that an exit realises exactly ``+tp`` or
  ``-sl`` pips net of spread, even when a candle gaps through the level
* the fill candle is checked over its full range; when both levels fall
  inside one candle the :class:`IntraCandlePolicy` decides
* a position still open after the last candle closes at that close
* at most one position at a time; a new signal can come from the very
  candle that closed the previous trade
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import numpy as np
from numba import njit

from .errors import ConfigError, EmptySeries
from .heuristics import HeuristicId, TradeSignal, candle_signals
from .market_data import CandleSeries


class IntraCandlePolicy(enum.IntEnum):
    PESSIMISTIC = 0
    OPTIMISTIC = 1
    OPEN_PROXIMITY = 2

    @classmethod
    def parse(cls, value) -> IntraCandlePolicy:
        if isinstance(value, (IntraCandlePolicy, int)):
            return cls(value)
        key = str(value).strip().upper().replace("-", "_")
        if key == "OPENPROXIMITY":
            key = "OPEN_PROXIMITY"
        try:
            return cls[key]
        except KeyError:
            raise ConfigError(f"unknown intra-candle policy {value!r}") from None


class ExitReason(enum.IntEnum):
    TAKE_PROFIT = 0
    STOP_LOSS = 1
    END_OF_DATA = 2

    @property
    def label(self) -> str:
        return {0: "TakeProfit", 1: "StopLoss", 2: "EndOfData"}[self.value]


def pips_to_pipettes(value, what: str = "value") -> int:
    d = Decimal(str(value))
    q = d * 10
    if not d.is_finite() or q != q.to_integral_value():
        raise ConfigError(f"{what} {value} pips is not a whole number of pipettes")
    return int(q)


def format_pipettes(n: int) -> str:
    """Exact pips text for an integer pipette count, e.g. ``-123.4``."""
    n = int(n)
    sign = "-" if n < 0 else ""
    q, r = divmod(abs(n), 10)
    return f"{sign}{q}.{r}" if r else f"{sign}{q}"


@dataclass(frozen=True)
class TradeConfig:
    tp_pips: Decimal
    sl_pips: Decimal
    spread_pips: Decimal = Decimal("2.0")
    max_total_loss_pips: Decimal | None = None
    intra_candle_policy: IntraCandlePolicy = IntraCandlePolicy.PESSIMISTIC

    def __post_init__(self):
        for name in ("tp_pips", "sl_pips", "spread_pips", "max_total_loss_pips"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, Decimal(str(v)))
        object.__setattr__(self, "intra_candle_policy", IntraCandlePolicy.parse(self.intra_candle_policy))
        if not self.tp_pips > 0:
            raise ConfigError(f"tp_pips must be > 0, got {self.tp_pips}")
        if not self.sl_pips > 0:
            raise ConfigError(f"sl_pips must be > 0, got {self.sl_pips}")
        if self.spread_pips < 0:
            raise ConfigError(f"spread_pips must be >= 0, got {self.spread_pips}")
        if self.max_total_loss_pips is not None and not self.max_total_loss_pips > 0:
            raise ConfigError(f"max_total_loss_pips must be > 0, got {self.max_total_loss_pips}")
        # fail early on sub-pipette values
        self.pipettes()

    def pipettes(self) -> tuple[int, int, int, int]:
        """(tp, sl, spread, max_total_loss or -1) in pipettes."""
        max_loss = -1
        if self.max_total_loss_pips is not None:
            max_loss = pips_to_pipettes(self.max_total_loss_pips, "max_total_loss")
        return (
            pips_to_pipettes(self.tp_pips, "tp"),
            pips_to_pipettes(self.sl_pips, "sl"),
            pips_to_pipettes(self.spread_pips, "spread"),
            max_loss,
        )

    def with_levels(self, sl_pips, tp_pips) -> TradeConfig:
        return TradeConfig(tp_pips, sl_pips, self.spread_pips, self.max_total_loss_pips, self.intra_candle_policy)


@dataclass(frozen=True)
class Position:
    direction: TradeSignal
    entry_price: Decimal  # bid quote at the fill candle's open
    entry_fill: Decimal  # price actually paid/received
    opened_at_index: int
    tp_level: Decimal  # bid level
    sl_level: Decimal


@dataclass(frozen=True)
class ClosedTrade:
    index_open: int
    index_close: int
    direction: TradeSignal
    entry: Decimal  # fill price, spread included
    exit: Decimal
    pnl_pipettes: int
    exit_reason: ExitReason

    @property
    def pnl_pips(self) -> Decimal:
        return Decimal(self.pnl_pipettes) / 10


@dataclass(frozen=True)
class SimulationResult:
    """Outcome of one replay; pip fields are exact (integer pipettes / 10)."""

    total_profit_pipettes: int
    total_loss_pipettes: int
    n_long: int
    n_short: int
    ruined: bool = False
    trade_log: tuple[ClosedTrade, ...] | None = field(default=None, compare=True)

    @property
    def final_balance_pipettes(self) -> int:
        return self.total_profit_pipettes - self.total_loss_pipettes

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


# -- kernel --------------------------------------------------------------------

_TP = 0
_SL = 1
_EOD = 2


@njit(cache=True, nogil=True)
def _replay(o, h, l, c, sig, tp, sl, spread, max_loss, policy, keep_log, log):
    """Core replay loop; returns (profit, loss, n_long, n_short, ruined, n_trades).

    ``log`` is an (n, 7) int64 buffer: open idx, close idx, direction,
    entry fill, exit fill, pnl, reason. Only written when ``keep_log``.
    """
    n = o.shape[0]
    profit = 0
    loss = 0
    n_long = 0
    n_short = 0
    n_trades = 0
    ruined = False
    balance = 0

    pending = 0
    direction = 0
    fill = 0
    tp_lvl = 0
    sl_lvl = 0
    open_idx = 0

    for j in range(n):
        if pending != 0:
            direction = pending
            pending = 0
            open_idx = j
            if direction > 0:
                fill = o[j] + spread
                tp_lvl = fill + tp
                sl_lvl = fill - sl
                n_long += 1
            else:
                fill = o[j]
                tp_lvl = fill - spread - tp
                sl_lvl = fill - spread + sl
                n_short += 1

        if direction != 0:
            reason = -1
            if direction > 0:
                if o[j] >= tp_lvl:
                    reason = _TP
                elif o[j] <= sl_lvl:
                    reason = _SL
                else:
                    hit_tp = h[j] >= tp_lvl
                    hit_sl = l[j] <= sl_lvl
                    if hit_tp and hit_sl:
                        if policy == 1:
                            reason = _TP
                        elif policy == 2 and tp_lvl - o[j] < o[j] - sl_lvl:
                            reason = _TP
                        else:
                            reason = _SL
                    elif hit_tp:
                        reason = _TP
                    elif hit_sl:
                        reason = _SL
            else:
                if o[j] <= tp_lvl:
                    reason = _TP
                elif o[j] >= sl_lvl:
                    reason = _SL
                else:
                    hit_tp = l[j] <= tp_lvl
                    hit_sl = h[j] >= sl_lvl
                    if hit_tp and hit_sl:
                        if policy == 1:
                            reason = _TP
                        elif policy == 2 and o[j] - tp_lvl < sl_lvl - o[j]:
                            reason = _TP
                        else:
                            reason = _SL
                    elif hit_tp:
                        reason = _TP
                    elif hit_sl:
                        reason = _SL

            if reason >= 0:
                pnl = tp if reason == _TP else -sl
                if keep_log:
                    exit_bid = tp_lvl if reason == _TP else sl_lvl
                    log[n_trades, 0] = open_idx
                    log[n_trades, 1] = j
                    log[n_trades, 2] = direction
                    log[n_trades, 3] = fill
                    log[n_trades, 4] = exit_bid if direction > 0 else exit_bid + spread
                    log[n_trades, 5] = pnl
                    log[n_trades, 6] = reason
                n_trades += 1
                direction = 0
                if pnl > 0:
                    profit += pnl
                else:
                    loss -= pnl
                balance += pnl
                if max_loss > 0 and balance <= -max_loss:
                    ruined = True
                    return profit, loss, n_long, n_short, ruined, n_trades

        if direction == 0 and j + 1 < n:
            pending = sig[j]

    if direction != 0:
        last = c[n - 1]
        if direction > 0:
            exit_fill = last
            pnl = last - fill
        else:
            exit_fill = last + spread
            pnl = fill - exit_fill
        if keep_log:
            log[n_trades, 0] = open_idx
            log[n_trades, 1] = n - 1
            log[n_trades, 2] = direction
            log[n_trades, 3] = fill
            log[n_trades, 4] = exit_fill
            log[n_trades, 5] = pnl
            log[n_trades, 6] = _EOD
        n_trades += 1
        if pnl > 0:
            profit += pnl
        else:
            loss -= pnl
        balance += pnl
        if max_loss > 0 and balance <= -max_loss:
            ruined = True
    return profit, loss, n_long, n_short, ruined, n_trades


@njit(cache=True, nogil=True)
def _replay_grid(o, h, l, c, sig, sls, tps, spread, max_loss, policy):
    """Replay every (sl, tp) pair; rows are (profit, loss, n_long, n_short, ruined)."""
    k = sls.shape[0]
    out = np.empty((k, 5), dtype=np.int64)
    dummy = np.empty((0, 7), dtype=np.int64)
    for t in range(k):
        r = _replay(o, h, l, c, sig, tps[t], sls[t], spread, max_loss, policy, False, dummy)
        out[t, 0] = r[0]
        out[t, 1] = r[1]
        out[t, 2] = r[2]
        out[t, 3] = r[3]
        out[t, 4] = 1 if r[4] else 0
    return out


# -- public API ----------------------------------------------------------------

def simulate(
    series: CandleSeries,
    heuristic: HeuristicId | str,
    config: TradeConfig,
    keep_log: bool = False,
) -> SimulationResult:
    """Replay ``series`` under one heuristic and one TP/SL configuration."""
    if len(series) == 0:
        raise EmptySeries(f"{series.key}: no candles")
    heuristic = HeuristicId.parse(heuristic)
    tp, sl, spread, max_loss = config.pipettes()
    sig = candle_signals(heuristic, series.open, series.close)
    log = np.zeros((len(series) if keep_log else 0, 7), dtype=np.int64)
    profit, loss, n_long, n_short, ruined, n_trades = _replay(
        series.open, series.high, series.low, series.close, sig,
        tp, sl, spread, max_loss, int(config.intra_candle_policy), keep_log, log,
    )
    trades = None
    if keep_log:
        price = series.instrument.from_pipettes
        trades = tuple(
            ClosedTrade(
                index_open=int(r[0]),
                index_close=int(r[1]),
                direction=TradeSignal(int(r[2])),
                entry=price(r[3]),
                exit=price(r[4]),
                pnl_pipettes=int(r[5]),
                exit_reason=ExitReason(int(r[6])),
            )
            for r in log[:n_trades]
        )
    return SimulationResult(int(profit), int(loss), int(n_long), int(n_short), bool(ruined), trades)


TRADE_LOG_HEADER = "index_open,index_close,direction,entry,exit,pnl_pips,reason"


def write_trade_log(trades, path: str | Path) -> None:
    lines = [TRADE_LOG_HEADER]
    for t in trades:
        side = "long" if t.direction == TradeSignal.LONG else "short"
        lines.append(
            f"{t.index_open},{t.index_close},{side},{t.entry},{t.exit},"
            f"{format_pipettes(t.pnl_pipettes)},{t.exit_reason.label}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def open_position(series: CandleSeries, fill_index: int, direction: TradeSignal, config: TradeConfig) -> Position:
    """Position as the replay opens it at ``fill_index``'s open."""
    tp, sl, spread, _ = config.pipettes()
    bid = int(series.open[fill_index])
    if direction == TradeSignal.LONG:
        fill, tp_lvl, sl_lvl = bid + spread, bid + spread + tp, bid + spread - sl
    elif direction == TradeSignal.SHORT:
        fill, tp_lvl, sl_lvl = bid, bid - spread - tp, bid - spread + sl
    else:
        raise ValueError("no position for NO_TRADE")
    price = series.instrument.from_pipettes
    return Position(TradeSignal(direction), price(bid), price(fill), fill_index, price(tp_lvl), price(sl_lvl))
