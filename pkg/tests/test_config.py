import math

import pytest
from hypothesis import given, strategies as st

from stoch_euler.config import ConfigError, RunConfig, emit_config, load_config, parse_config


def test_empty_text_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.noise.beta == 4.0 and cfg.noise.cutoff == 8
    assert cfg.sim.dt == 1e-3 and cfg.steps == 250


def test_sections_and_dotted_keys():
    cfg = parse_config("[sim]\ndt = 0.01  # comment\nT=0.5\nnoise.beta = 5\n[init]\nkind = \"blob_grid\"\n"
                       "[sim]\nparticles = 64\n")
    assert cfg.sim.dt == 0.01 and cfg.sim.T == 0.5 and cfg.sim.particles == 64
    assert cfg.noise.beta == 5.0 and cfg.init.kind == "blob_grid"


def test_beta_constraint_cites_line():
    with pytest.raises(ConfigError, match=r"line 2: noise.beta: must be > 3") as info:
        parse_config("[noise]\nbeta = 2.5\n")
    assert info.value.line == 2 and info.value.key == "noise.beta"


@pytest.mark.parametrize("text, pattern", [
    ("[sim]\nbogus = 1\n", "line 2: unknown key sim.bogus"),
    ("[nope]\n", "unknown section"),
    ("[sim]\nparticles = many\n", "line 2: sim.particles: expected an integer"),
    ("[sim]\ndt = 0.1\ndt = 0.2\n", "line 3: duplicate key sim.dt"),
    ("dt = 0.1\n", "outside any section"),
    ("[sim]\ndt = 0.003\nT = 0.01\n", "integer multiple"),
    ("[spectral]\nresolution = 48\n", "power of two"),
    ("[init]\nkind = spiral\n", "init.kind"),
])
def test_rejections(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


@given(st.floats(3.01, 10), st.integers(1, 15), st.sampled_from([1e-3, 2e-3, 5e-4]),
       st.integers(1, 1000), st.booleans())
def test_roundtrip(beta, cutoff, dt, particles, snaps):
    cfg = RunConfig().with_values(noise__beta=beta, noise__cutoff=cutoff, sim__dt=dt, sim__T=dt * 10,
                                  sim__particles=particles, output__snapshots=snaps,
                                  spectral__resolution=64, init__center1=math.pi / 3)
    assert parse_config(emit_config(cfg)) == cfg


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="missing.cfg"):
        load_config(tmp_path / "missing.cfg")
