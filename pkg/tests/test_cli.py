import re

import numpy as np
import pytest

from vectorial.cli import run
from vectorial.io import format_csv, parse_csv, read_csv
from vectorial.model import get_scenario


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def summary_value(text, key):
    m = re.search(rf"^{re.escape(key)}\s*=\s*(\S+)$", text, re.M)
    assert m, f"{key} missing from summary"
    return m.group(1)


class TestSimulate:
    def test_scenario2_conserves_humans(self, capsys):
        code, out, _ = invoke(capsys, "simulate", "--scenario", "2")
        assert code == 0
        traj = parse_csv(out)
        assert traj.t[0] == 0.0 and traj.t[-1] == 365.0 and len(traj) == 366
        assert traj.y[-1, :3].sum() == pytest.approx(112000.0, rel=1e-6)

    def test_csv_round_trip(self, capsys, tmp_path):
        path = tmp_path / "s3.csv"
        assert invoke(capsys, "simulate", "--scenario", "3", "--out", str(path))[0] == 0
        assert format_csv(read_csv(path)).encode() == path.read_bytes()

    def test_seasonal_peak_exceeds_constant(self, capsys):
        _, constant, _ = invoke(capsys, "simulate", "--scenario", "2")
        _, seasonal, _ = invoke(capsys, "simulate", "--scenario", "2", "--variant", "seasonal", "--alpha", "0.3")
        assert parse_csv(seasonal).y[:, 1].max() > parse_csv(constant).y[:, 1].max()

    def test_controlled_has_u_column(self, capsys):
        code, out, _ = invoke(capsys, "simulate", "--variant", "controlled", "--control", "0.2", "--tf", "30")
        assert code == 0
        traj = parse_csv(out)
        assert np.all(traj.u == 0.2)

    def test_rk4_matches_dp45_at_days(self, capsys):
        _, a, _ = invoke(capsys, "simulate", "--scenario", "1", "--integrator", "rk4")
        _, b, _ = invoke(capsys, "simulate", "--scenario", "1")
        ya, yb = parse_csv(a).y, parse_csv(b).y
        assert np.max(np.abs(ya - yb) / np.abs(yb).max(axis=0)) <= 1e-3

    def test_sweep_and_plot_script(self, capsys, tmp_path):
        out = tmp_path / "run.csv"
        script = tmp_path / "plot.py"
        code, _, _ = invoke(capsys, "simulate", "--sweep", "--out", str(out), "--plot-script", str(script))
        assert code == 0
        for s in (1, 2, 3):
            assert (tmp_path / f"run_s{s}.csv").exists()
        compile(script.read_text(), str(script), "exec")


class TestAnalyze:
    def test_scenario2(self, capsys):
        code, out, _ = invoke(capsys, "analyze", "--scenario", "2")
        assert code == 0
        assert "r0_squared = 73.1322" in out
        assert "classification: endemic" in out

    def test_scenario1_dies_out(self, capsys):
        _, out, _ = invoke(capsys, "analyze", "--scenario", "1")
        assert "r0_squared = 0.7698" in out
        assert "classification: dies_out" in out

    def test_scenario3_warns(self, capsys):
        _, out, _ = invoke(capsys, "analyze", "--scenario", "3")
        assert re.search(r"^warning: .*0\.6221", out, re.M)

    @pytest.mark.parametrize("sid", [1, 2, 3])
    def test_columns_agree_and_presets_render_exactly(self, capsys, sid):
        _, out, _ = invoke(capsys, "analyze", "--scenario", str(sid))
        rows = re.findall(r"^  (\w+)\s+(-?\d+\.\d{5})\s+(-?\d+\.\d{5})$", out, re.M)
        assert len(rows) == 6
        for _, analytic, fd in rows:
            assert round(float(analytic), 4) == round(float(fd), 4)
        rendered = dict(re.findall(r"^  (\w+)\s+= (\S+)$", out, re.M))
        for name, value in get_scenario(sid).params.as_dict().items():
            assert float(rendered[name]) == value


class TestOptimize:
    def test_bang_bang(self, capsys, tmp_path):
        path = tmp_path / "bb.csv"
        code, out, _ = invoke(capsys, "optimize", "--gamma-d", "1", "--gamma-s", "0", "--out", str(path))
        assert code == 0
        u = read_csv(path).u
        assert np.all(np.minimum(np.abs(u), np.abs(u - 1)) <= 1e-12)
        assert summary_value(out, "converged") == "true"

    def test_economic_weighting(self, capsys, tmp_path):
        code, out, _ = invoke(capsys, "optimize", "--gamma-d", "0", "--gamma-s", "1", "--out", str(tmp_path / "e.csv"))
        assert code == 0
        assert float(summary_value(out, "cost")) <= 1e-4
        assert float(summary_value(out, "sup_u")) < 0.01

    def test_stdout_keeps_csv_clean(self, capsys):
        code, out, err = invoke(capsys, "optimize", "--gamma-d", "0", "--gamma-s", "1", "--tf", "30")
        assert code == 0
        assert parse_csv(out).u is not None
        assert "cost" in err

    def test_non_convergence_exit(self, capsys, tmp_path):
        code, out, _ = invoke(capsys, "optimize", "--max-iter", "1", "--out", str(tmp_path / "x.csv"))
        assert code == 3
        assert summary_value(out, "converged") == "false"


class TestExitCodes:
    def test_config_error(self, capsys):
        code, _, err = invoke(capsys, "simulate", "--alpha", "1.5")
        assert code == 1 and "alpha" in err

    def test_bad_config_file_line(self, capsys, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("eta_h = 1/7\n")
        code, _, err = invoke(capsys, "simulate", "--config", str(path))
        assert code == 1 and "bad.cfg:1" in err

    def test_usage_error(self, capsys):
        assert invoke(capsys, "simulate", "--scenario", "9")[0] == 1

    def test_unwritable_output(self, capsys, tmp_path):
        code, _, err = invoke(capsys, "simulate", "--tf", "5", "--out", str(tmp_path / "missing" / "x.csv"))
        assert code == 2 and "I/O" in err

    def test_missing_config_file(self, capsys, tmp_path):
        assert invoke(capsys, "analyze", "--config", str(tmp_path / "nope.cfg"))[0] == 2

    def test_optimize_rejects_other_variants(self, capsys):
        assert invoke(capsys, "optimize", "--variant", "seasonal")[0] == 1

    def test_help(self, capsys):
        code, out, _ = invoke(capsys, "--help")
        assert code == 0 and "optimize" in out
