import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from stochmech import ConfigError
from stochmech.config import bundled_scenario_text, parse_config, render_config

MINIMAL = """
[scenario]
kind = coherent_oscillator
"""


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.kind == "coherent_oscillator"
    assert cfg.name == "coherent_oscillator"  # name falls back to kind
    assert cfg.params.hbar == 1.0 and cfg.params.mass == 1.0
    assert cfg.omega == 1.0
    assert cfg.n_means == (0.0,)
    assert cfg.grid.n_points == 2001
    assert cfg.dt_sde == 0.001 and cfg.n_paths == 2000
    assert cfg.seed == 20260101
    assert cfg.boundary_policy == "reflect"
    assert cfg.horizon == 12.56
    assert cfg.analysis.analyses == ("density", "trajectories")
    assert cfg.analysis.ks_budget == 0.05
    assert cfg.outdir is None


def test_all_errors_collected_in_one_pass():
    text = """
[scenario]
kind = coherent_oscillator

[physics]
omega_typo = 2.0
n_mean = -1

[grid]
n_points = not_an_int

[sde]
boundary_policy = bounce
"""
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    message = str(err.value)
    assert "section [physics]: unknown key 'omega_typo'" in message
    assert "n_mean must be ≥ 0" in message
    assert "key 'n_points' expects an integer" in message
    assert "boundary_policy must be one of reflect, absorb" in message
    assert message.count("\n") >= 3  # all four reported together


def test_horizon_divisibility_is_enforced():
    text = MINIMAL + """
[sde]
dt_sde = 0.001
record_every = 10
horizon = 12.563
"""
    with pytest.raises(ConfigError, match="multiple of dt_sde"):
        parse_config(text)
    # ... and against the field-table clock for kinds that propagate
    text2 = MINIMAL + """
[grid]
dt_pde = 0.01

[sde]
horizon = 12.565
"""
    with pytest.raises(ConfigError, match="multiple of dt_pde"):
        parse_config(text2)


def test_kind_scoped_keys_are_rejected_elsewhere():
    text = """
[scenario]
kind = stationary_ground

[physics]
n_mean = 3
"""
    with pytest.raises(ConfigError, match="not applicable to kind"):
        parse_config(text)


def test_barrier_kind_rejects_stationary_analyses():
    text = """
[scenario]
kind = barrier_tunneling

[analysis]
analyses = density, psd
"""
    with pytest.raises(ConfigError, match="not applicable to barrier_tunneling"):
        parse_config(text)


def test_unknown_kind_and_section():
    with pytest.raises(ConfigError, match="unknown kind"):
        parse_config("[scenario]\nkind = warp_drive\n")
    with pytest.raises(ConfigError, match=r"unknown section \[extra\]"):
        parse_config(MINIMAL + "[extra]\nfoo = 1\n")
    with pytest.raises(ConfigError, match="missing required section"):
        parse_config("[grid]\nn_points = 64\n")


def test_n_mean_accepts_a_list():
    cfg = parse_config(MINIMAL + "[physics]\nn_mean = 0, 3\n")
    assert cfg.n_means == (0.0, 3.0)


def test_custom_potential_requires_variant():
    base = "[scenario]\nkind = custom_potential\n"
    with pytest.raises(ConfigError, match="requires key 'potential'"):
        parse_config(base)
    with pytest.raises(ConfigError, match="unknown potential"):
        parse_config(base + "[physics]\npotential = cubic\n")
    cfg = parse_config(base + "[physics]\npotential = quartic\npotential_a = 0.25\n"
                       "e_lo = 0.2\ne_hi = 0.9\n")
    assert cfg.potential_variant == "quartic"
    assert cfg.potential_params == {"a": 0.25}


def test_render_round_trips_every_bundled_scenario():
    for name in ("fig1", "coherent_n3", "ho_ground_truth", "quartic_ground",
                 "barrier_tunnel"):
        cfg = parse_config(bundled_scenario_text(name))
        assert parse_config(render_config(cfg)) == cfg


def test_unknown_bundle_name_lists_available():
    with pytest.raises(ConfigError, match="available:.*ho_ground_truth"):
        bundled_scenario_text("nonexistent")


def test_sde_window_cross_checks():
    with pytest.raises(ConfigError, match="dt_sde must not exceed dt_pde"):
        parse_config(MINIMAL + "[grid]\ndt_pde = 0.0005\n[sde]\ndt_sde = 0.001\n")
    with pytest.raises(ConfigError, match="e_lo must be below e_hi"):
        parse_config("[scenario]\nkind = stationary_ground\n"
                     "[physics]\ne_lo = 0.9\ne_hi = 0.2\n")


# every numeric key applicable to the coherent_oscillator kind
_NUMERIC_KEYS = [
    ("physics", "hbar"), ("physics", "mass"), ("physics", "omega"),
    ("physics", "n_mean"), ("grid", "x_min"), ("grid", "x_max"),
    ("grid", "n_points"), ("grid", "dt_pde"), ("sde", "dt_sde"),
    ("sde", "n_paths"), ("sde", "seed"), ("sde", "record_every"),
    ("sde", "horizon"), ("analysis", "bins"), ("analysis", "max_lag"),
    ("analysis", "segment_length"), ("analysis", "overlap"),
    ("analysis", "fpt_lo"), ("analysis", "fpt_hi"),
    ("analysis", "density_time"), ("analysis", "ks_budget"),
]


@settings(derandomize=True, max_examples=80, deadline=None)
@given(entry=st.sampled_from(_NUMERIC_KEYS),
       pos=st.integers(min_value=0, max_value=63),
       ch=st.sampled_from("abcdefghijklmnopqrstuvwxyz_"))
def test_any_single_character_key_typo_is_rejected(entry, pos, ch):
    from stochmech.config import _ALLOWED

    section, key = entry
    pos %= len(key)
    typo = key[:pos] + ch + key[pos + 1:]
    assume(typo != key)
    assume((section, typo) not in _ALLOWED)  # mutation may land on a sibling key
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(MINIMAL + f"\n[{section}]\n{typo} = 1\n")
