"""Replay one heuristic with fixed SL/TP and look at the trade log."""
from collections import Counter

from fxlab import synthetic
from fxlab.simulator import TradeConfig, simulate

series = synthetic.random_walk(5_000, seed=3, step_pipettes=120)

cfg = TradeConfig(tp_pips=3, sl_pips=14, spread_pips=2)
result = simulate(series, "h2", cfg, keep_log=True)
print("balance:", result.final_balance_pips, "pips over", result.n_trades, "trades")
print("long/short:", result.n_long, result.n_short)
print("exits:", Counter(t.exit_reason.label for t in result.trade_log))

# %% The first few trades
for t in result.trade_log[:5]:
    print(t.index_open, t.index_close, t.direction.name, t.entry, t.exit, t.pnl_pips, t.exit_reason.label)

# %% How much the intra-candle assumption matters when both levels sit inside one candle
for policy in ("pessimistic", "open-proximity", "optimistic"):
    r = simulate(series, "h2", TradeConfig(3, 14, 2, intra_candle_policy=policy))
    print(f"{policy:<15} {r.final_balance_pips}")
