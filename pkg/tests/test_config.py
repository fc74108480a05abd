import pytest
from hypothesis import given, settings, strategies as st

from dualmuscle.config import BUNDLED, apply_overrides, dumps_config, load_config, loads_config, parse_text
from dualmuscle.controller import ReferenceSpec
from dualmuscle.muscle import tendon_force_verbatim
from dualmuscle.simkit import ConfigError, ScenarioConfig


def test_parse_text_comments_and_blank_lines():
    kv = parse_text("# header\n\nsim.duration = 4  # trailing\nobserver.asmo.gamma_a0=200\n")
    assert kv == {"sim.duration": "4", "observer.asmo.gamma_a0": "200"}
    with pytest.raises(ConfigError, match="line 1"):
        parse_text("just words")


def test_bundled_configs():
    clean, noisy = (load_config(n).validate() for n in BUNDLED)
    assert clean == ScenarioConfig()
    assert noisy.noise.enabled and noisy.replace(noise=clean.noise) == clean


@pytest.mark.parametrize("name", BUNDLED)
def test_dump_load_round_trip(name):
    cfg = load_config(name)
    assert loads_config(dumps_config(cfg)) == cfg


def test_round_trip_with_table_reference_and_verbatim_tendon():
    table = tuple((float(t), 2.6 + 0.001 * t) for t in range(6))
    cfg = ScenarioConfig(reference=ReferenceSpec(kind="table", table=table))
    cfg = apply_overrides(cfg, ["muscle.tendon = verbatim"])
    assert cfg.params.tendon == tendon_force_verbatim()
    back = loads_config(dumps_config(cfg))
    assert back == cfg and back.reference.table == table


@settings(max_examples=30)
@given(st.floats(0.01, 0.99), st.integers(0, 2**31), st.floats(0.1, 100))
def test_override_round_trip(eps, seed, gamma):
    cfg = apply_overrides(ScenarioConfig(), [f"observer.hgo.eps_h={eps!r}", f"noise.seed={seed}",
                                             f"observer.asmo.gamma_a0={gamma!r}"])
    assert (cfg.hgo.eps_h, cfg.noise.seed, cfg.asmo.gamma_a0) == (eps, seed, gamma)
    assert loads_config(dumps_config(cfg)) == cfg


@pytest.mark.parametrize("text, msg", [
    ("sim.nonsense = 1", "unknown config key"),
    ("observer.hgo.gain = 1", "unknown config key"),
    ("sim.duration = fast", "cannot parse"),
    ("noise.enabled = maybe", "boolean"),
    ("controller.P = 1, 2, 3", "4 values"),
    ("muscle.tendon = spline", "refit"),
    ("muscle.W = -1", "W must be positive"),
])
def test_bad_configs(text, msg):
    with pytest.raises(ConfigError, match=msg):
        loads_config(text)


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/scenario.cfg")


def test_override_needs_equals():
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), ["sim.duration"])
