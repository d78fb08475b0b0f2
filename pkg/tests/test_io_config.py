import numpy as np
import pytest

from vectorial.config import ConfigError, build_config, parse_config_text, read_config_file, with_overrides
from vectorial.integrator import Trajectory
from vectorial.io import HEADER, format_csv, parse_csv, plot_script, read_csv, write_csv
from vectorial.model import DEFAULT_INITIAL_STATE, get_scenario


@pytest.fixture
def traj(rng):
    t = np.cumsum(rng.uniform(0.01, 1.0, 40))
    return Trajectory(t, rng.uniform(0, 1e5, (40, 5)))


class TestCsv:
    def test_header(self, traj):
        text = format_csv(traj)
        assert text.splitlines()[0] == "t,S_h,I_h,R_h,S_m,I_m"
        assert "\r" not in text and text.endswith("\n")

    def test_control_column(self, traj):
        traj.u = np.linspace(0, 1, len(traj))
        assert format_csv(traj).splitlines()[0].endswith(",u")

    def test_round_trip_exact(self, traj):
        back = parse_csv(format_csv(traj))
        assert np.array_equal(back.t, traj.t) and np.array_equal(back.y, traj.y)

    def test_reemission_byte_identical(self, traj, tmp_path):
        traj.u = np.linspace(0, 1, len(traj)) ** 3
        path = tmp_path / "a.csv"
        write_csv(path, traj)
        first = path.read_bytes()
        write_csv(path, read_csv(path))
        assert path.read_bytes() == first

    @pytest.mark.parametrize("text", ["", "a,b\n1,2\n", ",".join(HEADER) + "\n"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            parse_csv(text)

    def test_plot_script_compiles(self, tmp_path):
        src = plot_script({"scenario 2": tmp_path / "s2.csv"}, "Infected", 112000.0)
        compile(src, "plot.py", "exec")
        assert "s2.csv" in src and "matplotlib" in src


class TestConfigText:
    def test_parse(self):
        values = parse_config_text("# scenario 3 run\nscenario = 3\nbeta_mh = 0.5  # override\nvariant = seasonal\n")
        assert values == {"scenario": 3, "beta_mh": 0.5, "variant": "seasonal"}

    def test_fraction_hint(self):
        with pytest.raises(ConfigError, match="fractions"):
            parse_config_text("eta_h = 1/7")

    def test_unknown_key_with_line(self):
        with pytest.raises(ConfigError, match=r":2: unknown key 'gamma'"):
            parse_config_text("t_f = 100\ngamma = 1\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_config_text("t_f 100")

    def test_fractional_scenario(self):
        with pytest.raises(ConfigError, match="scenario"):
            parse_config_text("scenario = 1.5")

    def test_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("t_f = 200\nI_h0 = 20\n", encoding="utf-8")
        cfg = build_config(read_config_file(path))
        assert cfg.t_f == 200.0
        assert cfg.initial_state.I_h == 20.0 and cfg.initial_state.S_h == DEFAULT_INITIAL_STATE[0]


class TestBuildConfig:
    def test_default_is_scenario2(self):
        cfg = build_config({})
        assert cfg.scenario == 2 and cfg.params == get_scenario(2).params

    def test_parameter_override(self):
        cfg = build_config({"scenario": 1, "beta_mh": 0.5})
        assert cfg.params.beta_mh == 0.5 and cfg.params.mu_m == 0.04

    @pytest.mark.parametrize(
        "values,field",
        [
            ({"beta_hm": 1.5}, "beta_hm"),
            ({"mu_m": -1.0}, "mu_m"),
            ({"alpha": 1.0}, "alpha"),
            ({"variant": "stochastic"}, "variant"),
            ({"t_f": 0.0}, "t_f"),
            ({"control": 2.0}, "control"),
            ({"gamma_D": 0.0, "gamma_S": 0.0}, "gamma"),
            ({"scenario": 4}, "scenario"),
            ({"I_h0": -3.0}, "initial state"),
        ],
    )
    def test_field_level_errors(self, values, field):
        with pytest.raises(ConfigError, match=field):
            build_config(values)

    def test_with_overrides_revalidates(self):
        with pytest.raises(ConfigError):
            with_overrides(build_config({}), integrator="euler")
        assert with_overrides(build_config({}), t_f=None, alpha=0.1).alpha == 0.1
