"""Compare how often MACD, RSI and raw candle direction produce a signal.

A price-action rule fires on every non-doji candle, while the indicator
signatures fire only on crossings. The month below is synthetic, so the
absolute counts say nothing about any real market.
"""
from datetime import datetime, timedelta, timezone

import numpy as np

from fxlab import synthetic
from fxlab.cli import signal_counts
from fxlab.indicators import expected_successful_trades, macd, rsi

start = datetime(2019, 11, 4, tzinfo=timezone.utc)
rng = np.random.default_rng(11)
steps = rng.integers(1, 80, 481) * rng.choice([-1, 1], 481)
# drop the first candle: it opens at its own close
month = synthetic.from_closes(110000 + np.cumsum(steps), start=start).window(start + timedelta(hours=1), None)

for name, params, count in signal_counts(month):
    print(f"{name:<13} {params:<28} {count}")

# %% Same success rate, more opportunities
line, signal, hist = macd(month)
print("last MACD histogram value:", hist[-1])
print("RSI range:", np.nanmin(rsi(month)), np.nanmax(rsi(month)))
for n in (480, 64):
    print(n, "signals at 50% success ->", expected_successful_trades(n, "0.5"), "winning trades")
