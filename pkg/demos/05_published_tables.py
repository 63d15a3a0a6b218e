"""Rebuild the summary tables from the shipped published per-run tables.

The balances, trade counts and chosen settings of the original 36 runs are
bundled as CSV files; no simulation is involved here.
"""
from fxlab.reporting import (
    bottom_n,
    build_report,
    load_appendix_records,
    render_text,
    summarize_heuristics,
    top_n,
    trades_summary,
)

records = load_appendix_records()
print(len(records), "published runs")

for row in top_n(records, 4):
    print("best ", row.instrument, row.period, row.heuristic, row.balance_pips, round(row.avg_pips_per_day, 2))
for row in bottom_n(records, 4):
    print("worst", row.instrument, row.period, row.heuristic, row.balance_pips)

for s in summarize_heuristics(records):
    print(s.heuristic.code, round(s.mean_balance_pips), round(s.mean_trades), round(s.stddev_trades))

top = sorted(records, key=lambda r: r.balance_pips, reverse=True)[:4]
print(trades_summary(top))

# %% The full plain-text report
print(render_text(build_report(records)))
