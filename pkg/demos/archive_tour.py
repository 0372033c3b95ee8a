"""A mid-run Pareto archive, inspected from Python.

Steps the simulator through four epochs on the 3-site demo config (committing
the balanced pick each time, exactly what headless mode does), then pauses at
the fifth epoch's decision point and prints the archive it gets to choose
from: every non-dominated plan, the five labeled picks, and the hypervolume
the front covers. The first epochs run on a cold fleet where concentrating
everything is hard to beat; by epoch five the carry is warm and the real
routing trade-offs appear.
"""

import json
from pathlib import Path

from slitsim import parse_config
from slitsim.engine import SimulatorState
from slitsim.pareto import hypervolume

HERE = Path(__file__).resolve().parent
BALANCE = "SLIT-Balance"

cfg = parse_config(json.loads((HERE / "triad.json").read_text()))
state = SimulatorState(cfg, "slit", seed=7)

for _ in range(4):
    ctx = state.prepare()
    state.execute(ctx, ctx.labels[BALANCE], BALANCE)

ctx = state.prepare()
tagged: dict[str, list[str]] = {}
for name, entry in ctx.labels.items():
    tagged.setdefault(entry.plan_id, []).append(name)

print(f"epoch {ctx.epoch}: {len(ctx.archive)} plans on the front, "
      f"{sum(ctx.prediction.counts.values())} requests forecast\n")
print(f"{'ttft s':>8} {'carbon kg':>10} {'water L':>9} {'cost $':>8}  labels")
for entry in sorted(ctx.archive.entries, key=lambda e: e.objectives.ttft_s):
    o = entry.objectives
    names = ", ".join(tagged.get(entry.plan_id, []))
    print(f"{o.ttft_s:8.3f} {o.carbon_kg:10.3f} {o.water_l:9.1f} "
          f"{o.cost_usd:8.3f}  {names}")

vectors = [tuple(e.vector) for e in ctx.archive.entries]
ref = tuple(1.1 * max(v[k] for v in vectors) for k in range(4))
print(f"\nhypervolume vs 1.1x worst corner: {hypervolume(vectors, ref):.4g}")

print("\nwhere each labeled plan sends the east-asia bucket:")
for name, entry in ctx.labels.items():
    shares = entry.plan.assignment[("east-asia", "llm-7b")]
    split = ", ".join(f"{loc} {s:.0%}" for loc, s in zip(entry.plan.locations, shares)
                      if s > 0.005)
    print(f"  {name:<12} {split}")
