"""Closed-loop tracking with the three observers on identical measurements.

Run from the repository root:  python demos/02_tracking_and_observers.py
Takes well under a minute; writes figures into demo_tracking/.
"""
from pathlib import Path

import numpy as np

from dualmuscle.config import load_config
from dualmuscle.controller import reference_eval
from dualmuscle.plots import plot_all
from dualmuscle.simkit import compute_metrics, run_scenario

cfg = load_config("scenario_noisefree.cfg")
log = run_scenario(cfg)

# Tracking: the mass follows a slow 0.01-amplitude sinusoid.
r = np.array([reference_eval(t, cfg.reference).r for t in log.tau])
err = np.abs(log["x1"] - r)
print(f"max |x1 - r| after tau = 10: {err[log.tau >= 10].max():.2e}")

# The controller keeps both tendons inside the toe region, so both stay
# taut and the force difference can always be steered.
print(f"tendon lengths stay in [{min(log['x3'].min(), log['x4'].min()):.4f}, "
      f"{max(log['x3'].max(), log['x4'].max()):.4f}]")

m = compute_metrics(log, window=(5.0, 30.0), config=cfg).values
print(f"{'':6}{'state max':>12}{'delta rms':>12}{'u1 rms':>12}{'a1 rms':>12}")
for o in cfg.observers:
    print(f"{o:6}{m[o + '.state.max_abs']:12.2e}{m[o + '.delta.rmse']:12.2e}"
          f"{m[o + '.u1.rmse']:12.2e}{m[o + '.a1.rmse']:12.2e}")

# The adaptive observer starts its gain at l0 and tunes it online.
L_a = log["asmo_L_a"]
print(f"ASMO adaptive magnitude: start {L_a[0]:.3f}, end {L_a[-1]:.3f}")

out = Path("demo_tracking")
out.mkdir(exist_ok=True)
for p in plot_all(log, out):
    print("wrote", p)
