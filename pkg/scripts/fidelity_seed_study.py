"""Spread of the recovered fidelity over many seeded datasets.

Compares the scatter of F across seeds with the analytic and bootstrap
uncertainty of a single run, at a few integration times.
"""
import argparse

import numpy as np

from twocolor import analysis, config, sim
from twocolor.state import make_state

p = argparse.ArgumentParser()
p.add_argument("--runs", type=int, default=200)
p.add_argument("--times", type=float, nargs="+", default=[0.03, 0.1, 1.0, 10.0])
a = p.parse_args()

gamma = 2 * config.TARGET_FIDELITY - 1
state = make_state(0.0, gamma)
print(f"{'t_s':>6} {'counts/rec':>10} {'mean F':>8} {'sd F':>8} {'analytic':>9} {'bootstrap':>9}")
for t in a.times:
    conf = sim.SourceConfig(integration_time=t)
    reps = [analysis.analyze_records(sim.simulate_dataset(state, conf, seed=s)) for s in range(a.runs)]
    F = np.array([r.fidelity for r in reps])
    one = sim.simulate_dataset(state, conf, seed=0)
    boot = analysis.bootstrap_uncertainty(one, 500, seed=1)
    print(f"{t:6.2f} {conf.coincidence_rate * t:10.1f} {F.mean():8.4f} {F.std(ddof=1):8.4f} "
          f"{np.mean([r.sigma for r in reps]):9.4f} {boot:9.4f}")
