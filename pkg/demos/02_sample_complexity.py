"""
How fast do the estimators approach their targets?
==================================================

Squared parameter error against n on log-log axes.  ERM and UW shrink
like 1/n; DS only sees 4 n_min samples, so its error is driven by the
minority count.  Writes ``sample_complexity.svg`` next to this script.
"""
from pathlib import Path

from wgelab import DS, MU, SRM, UW
from wgelab.experiments import SweepConfig, records_to_svg, slope_check, sweep_param_mse_vs_n

cfg = SweepConfig(methods=(SRM, UW, DS, MU(1.0)), grid=(1000, 3000, 10_000, 30_000, 100_000),
                  seeds=10, trials_per_seed=5)
records = sweep_param_mse_vs_n(cfg)

for label in ("SRM", "UW", "DS", "MU(1)"):
    mine = [r for r in records if r.method == label]
    against = "n_min" if label == "DS" else "n"
    fit = slope_check(mine, -1.0, 0.3, against=against)
    print(f"{label:6s} slope vs {against:5s} = {fit.slope:.2f}")

out = Path(__file__).with_name("sample_complexity.svg")
out.write_text(records_to_svg(records, title="parameter error vs n"))
print("wrote", out)
