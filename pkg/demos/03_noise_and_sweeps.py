"""Measurement noise and two parameter studies.

Run from the repository root:  python demos/03_noise_and_sweeps.py
About a minute of simulation in total.
"""
from dualmuscle.config import apply_overrides, load_config
from dualmuscle.simkit import compute_metrics, run_scenario

base = load_config("scenario_noisefree.cfg")

# Held noise on all three channels plus a constant 0.001 drift on the forces.
noisy = load_config("scenario_noisy.cfg")
m = compute_metrics(run_scenario(noisy), window=(5.0, 30.0), config=noisy).values
for o in noisy.observers:
    print(f"noisy  {o:5} x2 rmse {m[o + '.x2.rmse']:.2e}  delta rmse {m[o + '.delta.rmse']:.2e}")

# High-gain observer: the steady error scales with eps_h.
for eps in (0.2, 0.1, 0.05):
    cfg = apply_overrides(base, [f"observer.hgo.eps_h={eps}", "sim.observers=hgo"])
    m = compute_metrics(run_scenario(cfg), window=(5.0, 30.0), config=cfg).values
    print(f"eps_h = {eps:4}: hgo state max error {m['hgo.state.max_abs']:.2e}")

# Equivalent-injection filters: a shorter time constant tracks the inputs more closely.
for tau in (0.05, 0.01):
    cfg = apply_overrides(base, [f"observer.smo.tau_s={tau}", f"observer.asmo.tau_a={tau}",
                                 "sim.observers=smo, asmo"])
    m = compute_metrics(run_scenario(cfg), window=(5.0, 30.0), config=cfg).values
    print(f"filter {tau}: smo u1 rms {m['smo.u1.rmse']:.4e}  asmo u1 rms {m['asmo.u1.rmse']:.4e}")
