"""Fixed-step simulation of plant, controller and observers in lockstep.

The plant and every selected observer share one state vector integrated by
classical RK4. Observers only ever receive a :class:`Measurement`: evaluated
at each RK stage in the noise-free case, or sampled with additive noise every
``noise.period`` and held in between when noise is enabled.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .controller import (
    AllocationSingularError,
    ControllerGains,
    ReferenceSpec,
    control_detail,
    lyapunov_value,
    reference_eval,
)
from .muscle import ActivationSingularError, MuscleDomainError, MuscleParams, activation_from, tendon_force
from .observers import (
    OBSERVERS,
    AsmoParams,
    HgoParams,
    SmoParams,
    asmo_signals,
    initial_state,
    recover_activation,
)
from .plant import (
    Measurement,
    PlantDomainError,
    PlantState,
    Uncertainty,
    VirtualInput,
    check_domain,
    derivatives,
)

__all__ = [
    "NonFiniteError",
    "SimulationHalted",
    "ConfigError",
    "UncertaintySpec",
    "NoiseSpec",
    "NoiseSequence",
    "Bounds",
    "ScenarioConfig",
    "TrajectoryLog",
    "MetricsReport",
    "rk4_step",
    "sample_noise",
    "run_scenario",
    "compute_metrics",
    "log_columns",
]

OBSERVER_ORDER = ("hgo", "smo", "asmo")
OBSERVER_SIZES = {"hgo": 7, "smo": 7, "asmo": 13}


class NonFiniteError(FloatingPointError):
    pass


class ConfigError(ValueError):
    pass


class SimulationHalted(RuntimeError):
    """Integration stopped early; ``log`` holds every row up to ``tau``."""

    def __init__(self, tau, reason, log=None):
        self.tau = tau
        self.reason = reason
        self.log = log
        super().__init__(f"simulation halted at tau={tau:.6g}: {reason}")


def rk4_step(field, x, tau, h):
    """One classical Runge-Kutta step of dx/dtau = field(tau, x)."""
    if not h > 0:
        raise ValueError("step must be positive")
    k1 = field(tau, x)
    k2 = field(tau + 0.5 * h, x + 0.5 * h * k1)
    k3 = field(tau + 0.5 * h, x + 0.5 * h * k2)
    k4 = field(tau + h, x + h * k3)
    for i, k in enumerate((k1, k2, k3, k4), 1):
        if not np.all(np.isfinite(k)):
            raise NonFiniteError(f"non-finite derivative in RK stage {i} at tau={tau:.6g}")
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# -- scenario description ---------------------------------------------------

@dataclass(frozen=True)
class UncertaintySpec:
    """delta(tau) = offset + amplitude * sin(omega * tau)."""

    offset: float = 0.005
    amplitude: float = 0.005
    omega: float = 0.8

    def at(self, tau):
        s = self.omega * tau
        return Uncertainty(self.offset + self.amplitude * math.sin(s),
                           self.amplitude * self.omega * math.cos(s))


@dataclass(frozen=True)
class NoiseSpec:
    enabled: bool = False
    seed: int = 0
    period: float = 0.005
    position_amplitude: float = 0.001
    force_amplitude: float = 0.001
    force_drift: float = 0.001

    def validate(self):
        for name in ("position_amplitude", "force_amplitude", "force_drift"):
            if getattr(self, name) < 0:
                raise ConfigError(f"noise.{name} must be nonnegative")
        if not self.period > 0:
            raise ConfigError("noise.period must be positive")
        return self


class NoiseSequence:
    """Zero-order-hold measurement noise, one draw per sample period.

    Draws come from a single seeded generator and are extended lazily, so the
    value at a given sample index never depends on how far the caller has
    looked ahead.
    """

    _BLOCK = 4096

    def __init__(self, spec: NoiseSpec):
        self.spec = spec
        self._rng = np.random.default_rng(spec.seed)
        self._draws = np.empty((0, 3))

    def _extend(self, n):
        while len(self._draws) <= n:
            block = self._rng.uniform(-1.0, 1.0, size=(self._BLOCK, 3))
            self._draws = np.vstack([self._draws, block])

    def index(self, tau):
        return int(math.floor(tau / self.spec.period + 1e-9))

    def sample(self, k):
        sp = self.spec
        if not sp.enabled:
            return (0.0, 0.0, 0.0)
        self._extend(k)
        d = self._draws[k]
        return (sp.position_amplitude * d[0],
                sp.force_drift + sp.force_amplitude * d[1],
                sp.force_drift + sp.force_amplitude * d[2])

    def at(self, tau):
        return self.sample(self.index(tau))


def sample_noise(spec: NoiseSpec, tau, sequence: NoiseSequence | None = None):
    """Additive noise (position, force 1, force 2) held over the sample containing ``tau``."""
    if not spec.enabled:
        return (0.0, 0.0, 0.0)
    seq = sequence if sequence is not None else NoiseSequence(spec)
    return seq.at(tau)


@dataclass(frozen=True)
class Bounds:
    """Known bounds on the uncertainty and on |u_j|; the inputs are clamped to them."""

    delta_m: float = 1.0
    u1m: float = 0.9
    u2m: float = 0.9


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 30.0
    step: float = 1e-3
    params: MuscleParams = field(default_factory=MuscleParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    observers: tuple = OBSERVER_ORDER
    hgo: HgoParams = field(default_factory=HgoParams)
    smo: SmoParams = field(default_factory=SmoParams)
    asmo: AsmoParams = field(default_factory=AsmoParams)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    uncertainty: UncertaintySpec = field(default_factory=UncertaintySpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    x0: tuple = (2.6315, 0.0, 2.02, 2.02)
    bounds: Bounds = field(default_factory=Bounds)

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def validate(self):
        """Check every invariant; raises ConfigError naming the first violation."""
        if not self.step > 0:
            raise ConfigError("sim.step must be positive")
        if not self.duration > 0:
            raise ConfigError("sim.duration must be positive")
        unknown = [o for o in self.observers if o not in OBSERVERS]
        if unknown:
            raise ConfigError(f"unknown observer(s) {unknown}")
        if len(set(self.observers)) != len(self.observers):
            raise ConfigError("duplicate observer selection")
        if len(self.x0) != 4 or not all(math.isfinite(v) for v in self.x0):
            raise ConfigError("initial state needs four finite values")
        self.noise.validate()
        if self.noise.enabled:
            ratio = self.noise.period / self.step
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ConfigError("noise.period must be an integer multiple of sim.step")
        b = self.bounds
        if not (b.delta_m > 0 and b.u1m > 0 and b.u2m > 0):
            raise ConfigError("bounds must be positive")
        try:
            self.gains.validate(self.params.m)
            self.hgo.validate()
            self.smo.validate(b.u1m, b.u2m)
            self.asmo.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            check_domain(PlantState(*self.x0), self.params)
        except PlantDomainError as exc:
            raise ConfigError(f"initial state outside the plant domain: {exc}") from exc
        return self

    @property
    def effective_gains(self):
        return dataclasses.replace(self.gains, u_max=(self.bounds.u1m, self.bounds.u2m))


# -- logging ----------------------------------------------------------------

OBS_FIELDS = ("xhat1", "xhat2", "xhat3", "xhat4", "uhat1", "uhat2", "delta_hat", "ahat1", "ahat2")
ASMO_GAINS = ("L_a", "k1", "k2")


def log_columns(observers):
    cols = ["tau", "x1", "x2", "x3", "x4", "y1", "y2", "y3", "u1", "u2", "delta", "a1", "a2"]
    for o in observers:
        cols += [f"{o}_{f}" for f in OBS_FIELDS]
        if o == "asmo":
            cols += [f"asmo_{g}" for g in ASMO_GAINS]
    cols += ["flag_clamp", "flag_a1", "flag_a2"]
    for o in observers:
        cols += [f"flag_{o}_a1", f"flag_{o}_a2"]
    return cols


@dataclass
class TrajectoryLog:
    columns: list
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {c: i for i, c in enumerate(self.columns)}

    def __getitem__(self, name):
        return self.data[:, self._index[name]]

    def __len__(self):
        return len(self.data)

    @property
    def tau(self):
        return self["tau"]

    @property
    def observers(self):
        return tuple(o for o in OBSERVER_ORDER if f"{o}_xhat1" in self._index)

    def window(self, start, end=math.inf):
        t = self.tau
        return (t >= start - 1e-12) & (t <= end + 1e-12)

    def to_csv(self, path_or_buf):
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
        try:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.data:
                w.writerow([repr(float(v)) for v in row])
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path_or_buf):
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, newline="", encoding="utf-8") if own else path_or_buf
        try:
            rows = list(csv.reader(fh))
        finally:
            if own:
                fh.close()
        data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(rows[0]))
        return cls(rows[0], data)

    def to_csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


# -- the run ----------------------------------------------------------------

def _true_activation(x, u, params):
    lc = (x[0] - x[2], params.C - x[0] - x[3])
    out, flags = [], []
    for uj, ls, lc_j in zip(u, (x[2], x[3]), lc):
        try:
            a = activation_from(uj, ls, lc_j, params)[0]
        except (ActivationSingularError, MuscleDomainError):
            out.append(math.nan)
            flags.append(1.0)
            continue
        out.append(a)
        flags.append(0.0 if 0.0 <= a <= 1.0 else 1.0)
    return out, flags


def run_scenario(config: ScenarioConfig) -> TrajectoryLog:
    """Integrate the closed loop with the selected observers riding along.

    Raises :class:`SimulationHalted` (carrying the partial log) on a plant
    domain violation, a singular allocation, or a non-finite state.
    """
    config.validate()
    params = config.params
    curve = params.tendon
    m = params.m
    gains = config.effective_gains
    ref_spec = config.reference
    unc_spec = config.uncertainty
    observers = [o for o in OBSERVER_ORDER if o in config.observers]
    obs_params = {"hgo": config.hgo, "smo": config.smo, "asmo": config.asmo}
    h = config.step
    n_steps = int(round(config.duration / h))
    noise = NoiseSequence(config.noise)
    noisy = config.noise.enabled
    hold = int(round(config.noise.period / h)) if noisy else 1

    slices = []
    pos = 4
    for o in observers:
        slices.append((o, pos, pos + OBSERVER_SIZES[o], OBSERVERS[o][0], OBSERVERS[o][1], obs_params[o]))
        pos += OBSERVER_SIZES[o]

    def measure_at(x, k=None):
        y1, y2, y3 = x[0], tendon_force(x[2], curve), tendon_force(x[3], curve)
        if k is not None:
            n1, n2, n3 = noise.sample(k)
            # a load cell cannot report tension below zero
            y1, y2, y3 = y1 + n1, max(y2 + n2, 0.0), max(y3 + n3, 0.0)
        if k is None and x[2] >= curve.slack_end and x[3] >= curve.slack_end:
            return Measurement.with_lengths(y1, y2, y3, curve, x[2], x[3])
        return Measurement(y1, y2, y3, curve)

    def controller(tau, x):
        return control_detail(PlantState(x[0], x[1], x[2], x[3]), reference_eval(tau, ref_spec),
                              unc_spec.at(tau), gains, params)

    def make_field(y_held):
        def field(tau, z):
            x = z[:4].tolist()
            det = controller(tau, x)
            u = det.u
            delta = unc_spec.offset + unc_spec.amplitude * math.sin(unc_spec.omega * tau)
            acc = (tendon_force(x[3], curve) - tendon_force(x[2], curve)) / m + delta
            out = [x[1], acc, x[1] + u.u1, -x[1] + u.u2]
            y = y_held if y_held is not None else measure_at(x)
            zl = z.tolist()
            for _, a, b, state_t, deriv, p in slices:
                out.extend(deriv(state_t(*zl[a:b]), y, p, params))
            return np.array(out)
        return field

    x0 = list(config.x0)
    y0 = measure_at(x0, 0 if noisy else None)
    z = np.array(x0 + [v for o in observers for v in initial_state(o, y0, params)])

    columns = log_columns(observers)
    data = np.full((n_steps + 1, len(columns)), np.nan)

    def record(i, tau, z, y):
        x = z[:4].tolist()
        det = controller(tau, x)
        u = (det.u.u1, det.u.u2)
        a, aflags = _true_activation(x, u, params)
        row = [tau, *x, y.y1, y.y2, y.y3, *u, unc_spec.at(tau).delta, *a]
        oflags = []
        zl = z.tolist()
        for o, s, e, *_ in slices:
            st = zl[s:e]
            est = recover_activation(st[:4], st[5:7], params)
            row += [*st[:4], st[5], st[6], st[4], *est.raw]
            if o == "asmo":
                row += [config.asmo.l0 + st[7], st[9], st[10]]
            oflags += [float(f) for f in est.singular]
        row += [float(det.clamped), *aflags, *oflags]
        data[i] = row

    y = y0
    tau = 0.0
    i = 0
    try:
        record(0, tau, z, y)
        for i in range(1, n_steps + 1):
            if noisy and (i - 1) % hold == 0:
                y = measure_at(z[:4].tolist(), noise.index((i - 1) * h))
            field = make_field(y if noisy else None)
            z = rk4_step(field, z, tau, h)
            tau = i * h
            check_domain(PlantState(*z[:4].tolist()), params, tau)
            if not noisy:
                y = measure_at(z[:4].tolist())
            record(i, tau, z, y)
    except (PlantDomainError, AllocationSingularError, NonFiniteError, MuscleDomainError) as exc:
        partial = TrajectoryLog(columns, data[:i], {"config": config, "halted": str(exc)})
        raise SimulationHalted(i * h, str(exc), partial) from exc
    return TrajectoryLog(columns, data, {"config": config})


# -- metrics ----------------------------------------------------------------

@dataclass
class MetricsReport:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def to_text(self):
        return "".join(f"{k} = {v!r}\n" for k, v in self.values.items())

    @classmethod
    def from_text(cls, text):
        vals = {}
        for line in text.splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                vals[k.strip()] = float(v)
        return cls(vals)


def rmse(a, b):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if d.size == 0:
        raise ValueError("empty window")
    return float(np.sqrt(np.mean(d * d)))


def convergence_time(tau, err, threshold):
    """First time after which |err| stays below ``threshold`` (inf if never)."""
    bad = np.nonzero(~(np.abs(err) < threshold))[0]
    if len(bad) == 0:
        return float(tau[0])
    if bad[-1] == len(err) - 1:
        return math.inf
    return float(tau[bad[-1] + 1])


def lyapunov_trace(log: TrajectoryLog, config: ScenarioConfig):
    """V_a = e'Pe/2 + w^2/2 along the logged truth, plus the clamp flags."""
    gains = config.effective_gains
    V = np.empty(len(log))
    size = np.empty(len(log))
    for i, (t, x1, x2, x3, x4) in enumerate(zip(log.tau, log["x1"], log["x2"], log["x3"], log["x4"])):
        det = control_detail(PlantState(x1, x2, x3, x4), reference_eval(t, config.reference),
                             config.uncertainty.at(t), gains, config.params)
        V[i] = lyapunov_value(det.e, det.w, gains)
        size[i] = math.hypot(*det.e) + abs(det.w)
    return V, size


def compute_metrics(log: TrajectoryLog, window=(5.0, 30.0), thresholds=None, config=None) -> MetricsReport:
    """Per-observer error statistics over ``window`` plus tracking figures.

    ``thresholds`` maps signal names (x1..x4, u1, u2, delta, a1, a2) to the
    convergence threshold; default 1e-2 for all.
    """
    th = {k: 1e-2 for k in ("x1", "x2", "x3", "x4", "u1", "u2", "delta", "a1", "a2")}
    th.update(thresholds or {})
    mask = log.window(*window)
    if not mask.any():
        raise ValueError(f"window {window} contains no samples")
    tau = log.tau
    cfg = config if config is not None else log.meta.get("config")
    out = {}
    if cfg is not None:
        r = np.array([reference_eval(t, cfg.reference).r for t in tau])
        track = np.abs(log["x1"] - r)
        out["tracking.max_abs"] = float(track[mask].max())
        out["tracking.rmse"] = rmse(log["x1"][mask], r[mask])
        V, size = lyapunov_trace(log, cfg)
        active = (size[:-1] > 0.05) & (log["flag_clamp"][:-1] == 0)
        out["lyapunov.violations"] = float(np.sum(active & (np.diff(V) > 1e-12)))
    for o in log.observers:
        pairs = {
            "x1": (f"{o}_xhat1", "x1"), "x2": (f"{o}_xhat2", "x2"),
            "x3": (f"{o}_xhat3", "x3"), "x4": (f"{o}_xhat4", "x4"),
            "u1": (f"{o}_uhat1", "u1"), "u2": (f"{o}_uhat2", "u2"),
            "delta": (f"{o}_delta_hat", "delta"),
            "a1": (f"{o}_ahat1", "a1"), "a2": (f"{o}_ahat2", "a2"),
        }
        state_err = np.zeros(len(log))
        for sig, (est, true) in pairs.items():
            err = log[est] - log[true]
            sel = mask
            if sig in ("a1", "a2"):
                j = sig[1]
                sel = mask & (log[f"flag_a{j}"] == 0) & (log[f"flag_{o}_a{j}"] == 0)
                if not sel.any():
                    out[f"{o}.{sig}.rmse"] = math.nan
                    continue
            else:
                out[f"{o}.{sig}.convergence_time"] = convergence_time(tau, err, th[sig])
            out[f"{o}.{sig}.rmse"] = rmse(log[est][sel], log[true][sel])
            out[f"{o}.{sig}.max_abs"] = float(np.abs(err[sel]).max())
            if sig.startswith("x"):
                state_err = np.maximum(state_err, np.abs(err))
        out[f"{o}.state.max_abs"] = float(state_err[mask].max())
    return MetricsReport(out)
