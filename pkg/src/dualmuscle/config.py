"""Flat ``section.key = value`` scenario files.

Example::

    # comments start with '#'
    sim.duration = 30
    sim.observers = hgo, smo, asmo
    observer.asmo.gamma_a0 = 200
    controller.K = 0.5774, 1.2198

Every key maps onto one field of :class:`~dualmuscle.simkit.ScenarioConfig`
or of a nested parameter block; unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path

from .controller import ControllerGains, ReferenceSpec
from .muscle import MuscleParams, tendon_force_refit, tendon_force_verbatim
from .observers import AsmoParams, HgoParams, SmoParams
from .simkit import Bounds, ConfigError, NoiseSpec, ScenarioConfig, UncertaintySpec

__all__ = ["parse_text", "load_config", "loads_config", "dumps_config", "apply_overrides",
           "bundled_config_path", "BUNDLED", "MANIFEST_MARKER"]

BUNDLED = ("scenario_noisefree.cfg", "scenario_noisy.cfg")

# prefix -> (ScenarioConfig attribute, dataclass)
_BLOCKS = {
    "observer.hgo": ("hgo", HgoParams),
    "observer.smo": ("smo", SmoParams),
    "observer.asmo": ("asmo", AsmoParams),
    "noise": ("noise", NoiseSpec),
    "uncertainty": ("uncertainty", UncertaintySpec),
    "bounds": ("bounds", Bounds),
}
_MUSCLE_KEYS = ("W", "A", "g_max", "C", "m")
_TENDON_KEYS = ("slack_end", "toe_end", "linear_offset", "linear_slope")


def parse_text(text):
    """Dotted keys to raw string values, in file order."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {n}: empty key")
        out[key] = value
    return out


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(v) for v in s.replace(";", ",").split(",") if v.strip())


def _convert(key, raw, default):
    try:
        if isinstance(default, bool):
            return _bool(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, str):
            return raw
    except ConfigError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc
    raise ConfigError(f"{key}: unsupported value type")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def loads_config(text_or_mapping) -> ScenarioConfig:
    kv = parse_text(text_or_mapping) if isinstance(text_or_mapping, str) else dict(text_or_mapping)
    base = ScenarioConfig()
    kw = {}
    blocks = {attr: {} for attr, _ in _BLOCKS.values()}
    muscle, tendon, ctrl, ref, x0 = {}, {}, {}, {}, list(base.x0)
    tendon_kind = "refit"

    for key, raw in kv.items():
        prefix, _, name = key.rpartition(".")
        try:
            if prefix in _BLOCKS:
                attr, cls = _BLOCKS[prefix]
                defaults = {f.name: f.default for f in dataclasses.fields(cls)}
                if name not in defaults:
                    raise KeyError
                blocks[attr][name] = _convert(key, raw, defaults[name])
            elif key == "sim.duration":
                kw["duration"] = float(raw)
            elif key == "sim.step":
                kw["step"] = float(raw)
            elif key == "sim.observers":
                kw["observers"] = tuple(o.strip() for o in raw.split(",") if o.strip())
            elif prefix == "muscle" and name in _MUSCLE_KEYS:
                muscle[name] = float(raw)
            elif key == "muscle.tendon":
                tendon_kind = raw.strip()
            elif prefix == "tendon" and name in _TENDON_KEYS:
                tendon[name] = float(raw)
            elif key == "controller.K":
                ctrl["K"] = _floats(raw)
            elif key == "controller.P":
                p = _floats(raw)
                if len(p) != 4:
                    raise ConfigError("controller.P needs 4 values (row major)")
                ctrl["P"] = (p[:2], p[2:])
            elif key == "controller.gamma":
                ctrl["gamma"] = float(raw)
            elif key == "controller.delta_dot_feedforward":
                ctrl["include_delta_dot_feedforward"] = _bool(raw)
            elif key == "controller.law":
                ctrl["law"] = raw
            elif key == "reference.kind":
                ref["kind"] = raw
            elif prefix == "reference" and name in ("offset", "amplitude", "omega"):
                ref[name] = float(raw)
            elif key == "reference.table":
                pairs = [p.split(":") for p in raw.split(",") if p.strip()]
                ref["table"] = tuple((float(a), float(b)) for a, b in pairs)
            elif prefix == "initial" and name in ("x1", "x2", "x3", "x4"):
                x0[int(name[1]) - 1] = float(raw)
            else:
                raise KeyError
        except KeyError:
            raise ConfigError(f"unknown config key {key!r}") from None
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{key}: cannot parse {raw!r}") from exc

    try:
        if tendon_kind == "verbatim":
            if tendon:
                raise ConfigError("tendon.* keys only apply to the refit curve")
            curve = tendon_force_verbatim()
        elif tendon_kind == "refit":
            curve = tendon_force_refit(**tendon) if tendon else MuscleParams().tendon
        else:
            raise ConfigError(f"muscle.tendon must be 'refit' or 'verbatim', got {tendon_kind!r}")
        kw["params"] = MuscleParams(tendon=curve, **muscle)
        kw["gains"] = ControllerGains(**ctrl)
        kw["reference"] = ReferenceSpec(**ref)
        for attr, _ in _BLOCKS.values():
            kw[attr] = getattr(base, attr).__class__(**blocks[attr])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kw["x0"] = tuple(x0)
    return ScenarioConfig(**kw)


def dumps_config(cfg: ScenarioConfig) -> str:
    """Text that :func:`loads_config` turns back into an equal config."""
    lines = [
        f"sim.duration = {_fmt(float(cfg.duration))}",
        f"sim.step = {_fmt(float(cfg.step))}",
        f"sim.observers = {', '.join(cfg.observers)}",
    ]
    p = cfg.params
    for k in _MUSCLE_KEYS:
        lines.append(f"muscle.{k} = {_fmt(float(getattr(p, k)))}")
    if p.tendon == tendon_force_verbatim():
        lines.append("muscle.tendon = verbatim")
    else:
        lines.append("muscle.tendon = refit")
        for k in _TENDON_KEYS:
            lines.append(f"tendon.{k} = {_fmt(float(getattr(p.tendon, k)))}")
    g = cfg.gains
    lines += [
        f"controller.K = {_fmt(tuple(float(v) for v in g.K))}",
        f"controller.P = {_fmt(tuple(float(v) for row in g.P for v in row))}",
        f"controller.gamma = {_fmt(float(g.gamma))}",
        f"controller.delta_dot_feedforward = {_fmt(g.include_delta_dot_feedforward)}",
        f"controller.law = {g.law}",
    ]
    r = cfg.reference
    lines.append(f"reference.kind = {r.kind}")
    for k in ("offset", "amplitude", "omega"):
        lines.append(f"reference.{k} = {_fmt(float(getattr(r, k)))}")
    if r.table:
        lines.append("reference.table = " + ", ".join(f"{a!r}:{b!r}" for a, b in r.table))
    for i, v in enumerate(cfg.x0, 1):
        lines.append(f"initial.x{i} = {_fmt(float(v))}")
    for prefix, (attr, cls) in _BLOCKS.items():
        block = getattr(cfg, attr)
        for f in dataclasses.fields(cls):
            lines.append(f"{prefix}.{f.name} = {_fmt(getattr(block, f.name))}")
    return "\n".join(lines) + "\n"


def bundled_config_path(name):
    return resources.files("dualmuscle") / "configs" / name


MANIFEST_MARKER = "[config]"


def load_config(path) -> ScenarioConfig:
    """Read a config file.

    Bare names of bundled scenarios are accepted, and so is a run manifest,
    whose embedded snapshot follows a ``[config]`` line.
    """
    p = Path(path)
    if not p.exists() and p.name in BUNDLED:
        return loads_config(bundled_config_path(p.name).read_text(encoding="utf-8"))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    head, marker, tail = text.partition("\n" + MANIFEST_MARKER + "\n")
    return loads_config(tail if marker else text)


def apply_overrides(cfg: ScenarioConfig, overrides) -> ScenarioConfig:
    """Apply ``key=value`` strings on top of ``cfg`` (via a dump/reload round trip)."""
    if not overrides:
        return cfg
    kv = parse_text(dumps_config(cfg))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        if k.startswith("tendon.") and kv.get("muscle.tendon") == "verbatim":
            kv["muscle.tendon"] = "refit"
        kv[k] = v
    if kv.get("muscle.tendon") == "verbatim":
        for k in _TENDON_KEYS:
            kv.pop(f"tendon.{k}", None)
    return loads_config(kv)
