"""Self-checks behind ``dualmuscle validate``.

Each check returns a :class:`Check`; nothing here raises on a failed check.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .config import BUNDLED, load_config
from .controller import ControllerGains
from .muscle import (
    MuscleParams, hill_velocity, hill_velocity_inverse, parallel_force, tendon_force,
    tendon_force_derivative, tendon_force_inverse, tendon_force_refit,
    tendon_force_second_derivative, tendon_force_verbatim,
)
from .observers import GainInequalityError, HgoParams, _hurwitz
from .simkit import rk4_step

__all__ = ["Check", "refit_boundary_residual", "refit_vs_verbatim", "hill_round_trip_error",
           "rk4_order_ratio", "model_checks", "gain_checks", "integrator_checks", "all_checks"]


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def refit_boundary_residual(curve=None):
    """Largest violation of the six C2 junction conditions of the toe quintic."""
    c = curve or tendon_force_refit()
    a, b = c.slack_end, c.toe_end
    # evaluate the quintic branch itself at the right end, not the linear one
    s = b - a
    q = c.quintic_coeffs
    F_b = sum(q[k] * s**k for k in range(6))
    dF_b = sum(k * q[k] * s ** (k - 1) for k in range(1, 6))
    d2F_b = sum(k * (k - 1) * q[k] * s ** (k - 2) for k in range(2, 6))
    res = [
        tendon_force(a, c),
        tendon_force_derivative(a, c),
        tendon_force_second_derivative(a, c),
        F_b - c.linear_offset,
        (dF_b - c.linear_slope) / c.linear_slope,
        d2F_b / c.linear_slope,
    ]
    return max(abs(r) for r in res)


def refit_vs_verbatim(n=4001):
    """Max |F_refit - F_verbatim| on a dense grid over the toe region."""
    refit, verb = tendon_force_refit(), tendon_force_verbatim()
    grid = np.linspace(refit.slack_end, refit.toe_end, n)
    # the right end belongs to the toe polynomial for this comparison
    grid[-1] = np.nextafter(refit.toe_end, 0)
    return max(abs(tendon_force(L, refit) - tendon_force(L, verb)) for L in grid)


def hill_round_trip_error(params=None, n=1491):
    p = params or MuscleParams()
    zs = np.linspace(0.0, 1.49, n)
    return max(abs(hill_velocity_inverse(hill_velocity(z, p), p) - z) for z in zs)


def rk4_order_ratio(h=0.1, t_end=2.0):
    """Global-error ratio for h and h/2 on y' = y cos t, y(0) = 1 (y = exp(sin t))."""
    def err(step):
        x, t = np.array([1.0]), 0.0
        for _ in range(round(t_end / step)):
            x = rk4_step(lambda tt, xx: xx * math.cos(tt), x, t, step)
            t += step
        return abs(x[0] - math.exp(math.sin(t_end)))
    return err(h) / err(h / 2)


def model_checks():
    out = []
    r = refit_boundary_residual()
    out.append(Check("tendon refit boundary conditions", r <= 1e-10, f"max residual {r:.3e} (tol 1e-10)"))
    d = refit_vs_verbatim()
    out.append(Check("tendon refit vs verbatim coefficients", d <= 5e-3,
                     f"max |dF| on [2, 2.04] = {d:.4e} (tol 5e-3)"))
    c = tendon_force_refit()
    grid = np.linspace(1.99, 2.1, 1101)
    F = np.array([tendon_force(L, c) for L in grid])
    mono = bool(np.all(np.diff(F) >= 0))
    out.append(Check("tendon force monotone", mono, "nondecreasing on [1.99, 2.1]"))
    inv = max(abs(tendon_force(tendon_force_inverse(f, c), c) - f) for f in np.linspace(0.001, 2.0, 400))
    out.append(Check("tendon inverse round trip", inv <= 1e-8, f"max |F(F^-1(f)) - f| = {inv:.2e}"))
    h = hill_round_trip_error()
    out.append(Check("hill velocity round trip", h <= 1e-10, f"max error on z in [0, 1.49] = {h:.2e}"))
    pp = abs(parallel_force(1.5) - 1.0)
    out.append(Check("parallel force cubic identity", pp <= 1e-12, f"|Phi_P(1.5) - 1| = {pp:.1e}"))
    return out


def _gain_ineq(label, fn):
    try:
        fn()
    except GainInequalityError as exc:
        return Check(label, False, str(exc))
    return Check(label, True, "satisfied")


def gain_checks(configs=BUNDLED):
    out = []
    for name in configs:
        cfg = load_config(name)
        smo, b = cfg.smo, cfg.bounds
        bound = smo.lambda11_bound()
        out.append(Check(f"{name}: alpha11 > f_plus", smo.alpha11 > smo.f_plus,
                         f"{smo.alpha11} vs {smo.f_plus}"))
        out.append(Check(f"{name}: lambda11 bound", smo.lambda11 > bound - 0.01,
                         f"lambda11 {smo.lambda11} vs bound {bound:.4f}"))
        out.append(Check(f"{name}: alpha2 > U1m", smo.alpha2 > b.u1m, f"{smo.alpha2} vs {b.u1m}"))
        out.append(Check(f"{name}: alpha3 > U2m", smo.alpha3 > b.u2m, f"{smo.alpha3} vs {b.u2m}"))
        out.append(_gain_ineq(f"{name}: high-gain polynomials Hurwitz", cfg.hgo.validate))
        a0 = cfg.asmo.alpha0_design()
        out.append(Check(f"{name}: asmo alpha0 = 2 sqrt(2 beta0)", abs(a0 - cfg.asmo.alpha0) <= 0.01,
                         f"{a0:.4f} vs {cfg.asmo.alpha0}"))
        out.append(_gain_ineq(f"{name}: asmo parameter ranges", cfg.asmo.validate))
    hg = HgoParams()
    out.append(Check("high-gain (s+1)^3 Hurwitz", _hurwitz([1, hg.h11, hg.h12, hg.h13]),
                     f"roots {np.round(np.roots([1, hg.h11, hg.h12, hg.h13]).real, 6).tolist()}"))
    g = ControllerGains()
    eig = np.linalg.eigvals(g.closed_loop())
    out.append(Check("controller A - BK Hurwitz", bool(eig.real.max() < 0),
                     f"max real part {eig.real.max():.4f}"))
    q = np.linalg.eigvalsh(g.implied_Q())
    out.append(Check("implied Q positive definite", bool(q.min() > 0), f"min eigenvalue {q.min():.4f}"))
    care, gain = g.riccati_residual(effort_weight=30.0)
    out.append(Check("Riccati residual (R = 30, Q = 10 I)", max(care, gain) <= 1e-2,
                     f"CARE {care:.2e}, gain {gain:.2e} (tol 1e-2)"))
    return out


def integrator_checks():
    r = rk4_order_ratio()
    return [Check("RK4 order ratio", 12 <= r <= 20, f"error ratio {r:.3f} (expect [12, 20])")]


def all_checks():
    return model_checks() + gain_checks() + integrator_checks()
