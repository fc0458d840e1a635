"""Tests for the TOML job schema.

Oracles: hand-written TOML snippets with known effective values, and the
round-trip identity format -> parse -> equal config.
"""

import numpy as np
import pytest

from excitonspec.config import (
    JobConfig,
    apply_overrides,
    format_config,
    parse_config,
    parse_config_text,
)
from excitonspec.exceptions import ConfigError
from excitonspec.trajectory import OUConfig

MINIMAL = """
basis = "full"
[trajectory]
path = "traj.csv"
"""

OU_FULL = """
basis = "frenkel"
engine = "vqa"
tcf_method = "small_lambda"
lambda = 0.05
tau_fs = 33.0
rotating_frame_ev = 4.5
output_dir = "results"

[grid]
t_max_fs = 80.0
record_every_fs = 0.25
substep_fs = 0.01
omega_min_ev = 3.0
omega_max_ev = 6.0
omega_points = 1200

[ensemble]
n_trajectories = 4
seed = 7

[trajectory.ou]
n_chromophores = 3
mean_energy_ev = 4.4
energy_sigma_ev = 0.08
correlation_time_fs = 20.0
dt_fs = 0.5
n_frames = 181
spacing_ang = 5.0
mu01 = [0.0, 1.2, 0.0]
"""


def ou_config(**overrides):
    base = dict(
        n_chromophores=2,
        mean_energy_ev=4.5,
        energy_sigma_ev=0.05,
        correlation_time_fs=50.0,
        dt_fs=0.5,
        n_frames=21,
    )
    base.update(overrides)
    return OUConfig.line_aggregate(**base)


class TestParse:
    def test_minimal_fills_defaults(self):
        cfg = parse_config_text(MINIMAL)
        assert cfg.basis == "full"
        assert cfg.source_path == "traj.csv"
        assert cfg.source_ou is None
        assert cfg.engine == "exact"
        assert cfg.tcf_method == "direct"
        assert cfg.lambda_ == 0.1
        assert cfg.tau_fs == 50.0
        assert cfg.rotating_frame_ev is None
        assert cfg.output_dir == "out"
        assert cfg.t_max_fs == 100.0
        assert cfg.record_every_fs == 0.5
        assert cfg.substep_fs == 0.005
        assert (cfg.omega_min_ev, cfg.omega_max_ev, cfg.omega_points) == (
            2.0,
            7.0,
            2000,
        )
        assert (cfg.n_trajectories, cfg.seed) == (1, 0)

    def test_every_key_read(self):
        cfg = parse_config_text(OU_FULL)
        assert cfg.basis == "frenkel"
        assert cfg.engine == "vqa"
        assert cfg.tcf_method == "small_lambda"
        assert cfg.lambda_ == 0.05
        assert cfg.tau_fs == 33.0
        assert cfg.rotating_frame_ev == 4.5
        assert cfg.output_dir == "results"
        assert cfg.t_max_fs == 80.0
        assert cfg.omega_points == 1200
        assert cfg.n_trajectories == 4
        assert cfg.seed == 7
        ou = cfg.source_ou
        assert ou.n_chromophores == 3
        assert ou.mean_energy_ev[0] == 4.4
        assert ou.com[1, 2] == 5.0
        assert tuple(ou.mu01[0]) == (0.0, 1.2, 0.0)
        assert tuple(ou.mu00[2]) == (0.0, 0.0, 0.0)

    def test_integers_accepted_for_floats(self):
        cfg = parse_config_text("tau_fs = 50\n" + MINIMAL)
        assert cfg.tau_fs == 50.0 and isinstance(cfg.tau_fs, float)

    def test_omega_grid(self):
        cfg = parse_config_text(MINIMAL)
        grid = cfg.omega_grid()
        assert grid.shape == (2000,)
        assert grid[0] == 2.0 and grid[-1] == 7.0

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "job.toml"
        path.write_text(OU_FULL)
        assert parse_config(path) == parse_config_text(OU_FULL)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "nope.toml")

    def test_invalid_toml(self):
        with pytest.raises(ConfigError, match="TOML parse error"):
            parse_config_text("basis = \n")


class TestRejection:
    @pytest.mark.parametrize(
        "snippet, path",
        [
            ("wavelength = 3\n", "wavelength"),
            ("[grid]\ndt = 1.0\n", "grid.dt"),
            ("[ensemble]\nmembers = 3\n", "ensemble.members"),
        ],
    )
    def test_unknown_key_named_with_path(self, snippet, path):
        text = snippet + MINIMAL if "[" not in snippet else MINIMAL + snippet
        with pytest.raises(ConfigError, match=f"unknown key: {path}"):
            parse_config_text(text)

    def test_unknown_ou_key(self):
        text = OU_FULL + "temperature_k = 300\n"  # appends into trajectory.ou
        with pytest.raises(ConfigError, match="trajectory.ou.temperature_k"):
            parse_config_text(text)

    def test_negative_tau(self):
        with pytest.raises(ConfigError, match="tau_fs must be positive"):
            parse_config_text("tau_fs = -1\n" + MINIMAL)

    def test_negative_lambda(self):
        with pytest.raises(ConfigError, match="lambda must be positive"):
            parse_config_text("lambda = 0.0\n" + MINIMAL)

    def test_missing_basis(self):
        with pytest.raises(ConfigError, match="missing required key: basis"):
            parse_config_text("[trajectory]\npath = 'x'\n")

    def test_missing_trajectory_table(self):
        with pytest.raises(ConfigError, match="trajectory"):
            parse_config_text("basis = 'full'\n")

    def test_both_sources(self):
        text = OU_FULL.replace(
            "[trajectory.ou]", "[trajectory]\npath = 'also.csv'\n\n[trajectory.ou]"
        )
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config_text(text)

    def test_wrong_type(self):
        with pytest.raises(ConfigError, match="tau_fs must be a float"):
            parse_config_text("tau_fs = 'fifty'\n" + MINIMAL)

    def test_bool_rejected(self):
        with pytest.raises(ConfigError, match="must be a"):
            parse_config_text("tau_fs = true\n" + MINIMAL)

    def test_bad_vector(self):
        bad = OU_FULL.replace("mu01 = [0.0, 1.2, 0.0]", "mu01 = [0.0, 1.2]")
        with pytest.raises(ConfigError, match="list of three numbers"):
            parse_config_text(bad)

    def test_missing_ou_key(self):
        bad = OU_FULL.replace("dt_fs = 0.5\n", "")
        with pytest.raises(
            ConfigError, match="missing required key: trajectory.ou.dt_fs"
        ):
            parse_config_text(bad)

    @pytest.mark.parametrize(
        "snippet, message",
        [
            ("engine = 'trotter'\n", "engine must be one of"),
            ("basis = 'site'\n[trajectory]\npath = 'x'\n", "basis must be one of"),
            ("tcf_method = 'resolvent'\n", "tcf_method must be one of"),
            ("[grid]\nomega_points = 1\n", "omega_points must be at least 2"),
            ("[grid]\nomega_max_ev = 1.0\n", "omega_max_ev must exceed"),
            ("[grid]\nt_max_fs = 0.1\n", "record_every_fs must not exceed"),
            ("[grid]\nsubstep_fs = -0.1\n", "substep_fs must be positive"),
            ("[ensemble]\nseed = -2\n", "seed must be non-negative"),
            ("[ensemble]\nn_trajectories = 0\n", "n_trajectories must be at least 1"),
        ],
    )
    def test_constraint_named(self, snippet, message):
        if snippet.startswith("basis"):
            text = snippet
        elif snippet.startswith("["):
            text = MINIMAL + snippet
        else:
            text = snippet + MINIMAL
        with pytest.raises(ConfigError, match=message):
            parse_config_text(text)

    def test_ensemble_needs_ou(self):
        with pytest.raises(ConfigError, match="requires an 'ou'"):
            parse_config_text(MINIMAL + "[ensemble]\nn_trajectories = 3\n")


class TestEcho:
    def test_round_trip_equal(self):
        cfg = parse_config_text(OU_FULL)
        again = parse_config_text(format_config(cfg))
        assert again == cfg

    def test_round_trip_minimal(self):
        cfg = parse_config_text(MINIMAL)
        assert parse_config_text(format_config(cfg)) == cfg

    def test_round_trip_awkward_floats(self):
        text = (
            "tau_fs = 33.333333333333336\n" + MINIMAL + "[grid]\nsubstep_fs = 0.007\n"
        )
        cfg = parse_config_text(text)
        again = parse_config_text(format_config(cfg))
        assert again.tau_fs == cfg.tau_fs
        assert again.substep_fs == cfg.substep_fs
        assert again == cfg

    def test_echo_contains_defaults(self):
        text = format_config(parse_config_text(MINIMAL))
        assert 'engine = "exact"' in text
        assert "lambda = 0.1" in text
        assert "omega_points = 2000" in text

    def test_equality_discriminates(self):
        cfg = parse_config_text(OU_FULL)
        other = parse_config_text(OU_FULL.replace("seed = 7", "seed = 8"))
        assert cfg != other
        shifted = parse_config_text(
            OU_FULL.replace("mean_energy_ev = 4.4", "mean_energy_ev = 4.3")
        )
        assert cfg != shifted
        assert cfg != "not a config"  # NotImplemented falls back to False


class TestJobConfig:
    def test_direct_construction_validates(self):
        with pytest.raises(ConfigError, match="basis must be one of"):
            JobConfig(basis="nope", source_path="x")

    def test_source_exclusivity(self):
        with pytest.raises(ConfigError, match="exactly one"):
            JobConfig(basis="full")
        with pytest.raises(ConfigError, match="exactly one"):
            JobConfig(basis="full", source_path="x", source_ou=ou_config())

    def test_rotating_frame_finite(self):
        with pytest.raises(ConfigError, match="rotating_frame_ev must be finite"):
            JobConfig(basis="full", source_path="x", rotating_frame_ev=np.nan)

    def test_apply_overrides(self):
        cfg = JobConfig(basis="full", source_path="x")
        out = apply_overrides(cfg, engine="vqa", tau_fs=25.0, seed=None)
        assert out.engine == "vqa"
        assert out.tau_fs == 25.0
        assert out.seed == cfg.seed
        assert apply_overrides(cfg) is cfg

    def test_overrides_revalidate(self):
        cfg = JobConfig(basis="full", source_path="x")
        with pytest.raises(ConfigError, match="tau_fs must be positive"):
            apply_overrides(cfg, tau_fs=-3.0)
