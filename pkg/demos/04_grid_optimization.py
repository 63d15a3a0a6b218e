"""Search the default SL/TP grid for a few synthetic subsets and print the report."""
import time

from fxlab import synthetic
from fxlab.optimizer import GridSpec, optimize_all
from fxlab.reporting import ReportRecord, build_report, optimal_settings_text
from fxlab.simulator import TradeConfig

subsets = [
    synthetic.random_walk(20_000, seed=10 + k, instrument=inst, granularity=gran)
    for k, (inst, gran) in enumerate([("EURUSD", "H1"), ("EURUSD", "H4"), ("USDJPY", "H1"), ("EURJPY", "H2")])
]
spec = GridSpec()
print(len(spec), "grid tuples per job")

t0 = time.perf_counter()
results = optimize_all(subsets, ["h1", "h2"], spec, TradeConfig(3, 3))
print(f"{len(results)} jobs in {time.perf_counter() - t0:.1f}s")

for r in results:
    b = r.best
    print(f"{r.key.label:<10} {r.heuristic.code}  SL {b.sl_pips:>4}  TP {b.tp_pips:>4}  balance {b.final_balance_pips}")

# %% Summary tables from the best records
doc = build_report([ReportRecord.from_optimization(r.best) for r in results])
print(optimal_settings_text(doc))
