import numpy as np
import pytest

from hypflow.cli import CSV_HEADER, ExperimentConfig, main, parse_config, run
from hypflow.errors import ConfigurationError
from hypflow.geometry import Background


class TestParseConfig:
    def test_empty_gives_defaults(self):
        config = parse_config("")
        assert config.command == "radial-flow"
        assert config.n == 4
        assert config.background == "hyperbolic"
        assert config.R == 6.0
        assert config.m == 600
        assert config.cfl == 0.2
        assert config.t_end == 5.0

    def test_sample_config(self):
        text = """
        # comment line
        command = eigen
        n = 2            # trailing comment
        R = 10.0
        m = 512
        """
        config = parse_config(text)
        assert config.command == "eigen"
        assert config.n == 2
        assert config.R == 10.0
        assert config.m == 512

    def test_out_of_range_reports_line(self):
        with pytest.raises(ConfigurationError) as err:
            parse_config("command = radial-flow\nn = 1\n")
        assert "line 2" in str(err.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError) as err:
            parse_config("frobnicate = 3\n")
        assert "frobnicate" in str(err.value)

    def test_malformed_line(self):
        with pytest.raises(ConfigurationError) as err:
            parse_config("n 4\n")
        assert "line 1" in str(err.value)

    def test_bad_enum(self):
        with pytest.raises(ConfigurationError):
            parse_config("background = spherical\n")

    def test_geometry_helper(self):
        config = parse_config("background = euclidean\nn = 3\n")
        assert config.geometry().kind is Background.EUCLIDEAN
        assert config.geometry().n == 3


def _read_summary(path):
    out = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("radial")
    config = parse_config(
        "command = radial-flow\nR = 3.0\nm = 80\nt_end = 0.4\n"
        "record_every = 50\n"
    )
    code = run(config, out, seed=0, quiet=True)
    return code, out


class TestRadialFlowCommand:
    def test_exit_code(self, small_run):
        code, _ = small_run
        assert code == 0

    def test_csv_contract(self, small_run):
        _, out = small_run
        lines = (out / "series.csv").read_text().splitlines()
        assert lines[0] == CSV_HEADER
        data = np.loadtxt(out / "series.csv", delimiter=",", skiprows=1)
        assert data.shape[1] == 7
        assert np.all(np.isfinite(data))
        t, i_l2 = data[:, 0], data[:, 1]
        assert np.all(np.diff(t) > 0)
        assert np.all(np.diff(i_l2) < 0)

    def test_summary_contract(self, small_run):
        _, out = small_run
        summary = _read_summary(out / "summary.txt")
        assert summary["command"] == "radial-flow"
        assert summary["exit_code"] == "0"
        assert summary["l2_monotone"] in ("true", "false")
        assert "I_L2_rate" in summary
        assert summary["wall_time_s"]
        assert list(summary)[-1] == "wall_time_s"


class TestEigenCommand:
    def test_summary_values(self, tmp_path):
        config = parse_config("command = eigen\nn = 2\nR = 10.0\nm = 512\n")
        code = run(config, tmp_path, seed=0, quiet=True)
        assert code == 0
        summary = _read_summary(tmp_path / "summary.txt")
        assert float(summary["sigma1_full"]) > 0.25
        assert summary["oracle_agreement"] == "true"
        assert summary["above_mckean_bound"] == "true"
        # eigen produces no time series
        assert (tmp_path / "series.csv").read_text().strip() == CSV_HEADER


class TestVerifyCommand:
    def test_all_checks_pass(self, tmp_path):
        config = parse_config("command = verify\n")
        code = run(config, tmp_path, seed=0, quiet=True)
        assert code == 0
        summary = _read_summary(tmp_path / "summary.txt")
        assert summary["all_passed"] == "true"


class TestConformalCommand:
    def test_requires_n2(self, tmp_path):
        config = parse_config("command = conformal\nn = 3\n")
        assert run(config, tmp_path, seed=0, quiet=True) == 2

    def test_small_run(self, tmp_path):
        config = parse_config(
            "command = conformal\nn = 2\nR = 3.0\nm = 80\nt_end = 0.3\n"
            "record_every = 50\n"
        )
        assert run(config, tmp_path, seed=0, quiet=True) == 0


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path):
        config = ExperimentConfig(command="conformal", n=5)
        assert run(config, tmp_path, seed=0, quiet=True) == 2
        summary = _read_summary(tmp_path / "summary.txt")
        assert summary["exit_code"] == "2"
        assert "error" in summary

    def test_numerical_failure_is_3(self, tmp_path):
        # a huge explicit step makes the parabolic solver blow up
        config = parse_config(
            "command = radial-flow\nR = 3.0\nm = 80\nt_end = 2.0\n"
            "dt = 1.0\nprofile = bump\namplitude = 0.05\n"
        )
        assert run(config, tmp_path, seed=0, quiet=True) == 3


class TestDeterminism:
    def test_repeat_runs_identical(self, tmp_path):
        text = (
            "command = radial-flow\nR = 3.0\nm = 64\nt_end = 0.2\n"
            "record_every = 40\n"
        )
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert run(parse_config(text), out, seed=7, quiet=True) == 0
            outs.append(out)
        a, b = outs
        assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()

        def stable_lines(p):
            # wall-clock is the only line allowed to differ
            return [
                line
                for line in (p / "summary.txt").read_text().splitlines()
                if not line.startswith("wall_time_s")
            ]

        assert stable_lines(a) == stable_lines(b)


class TestMain:
    def test_bad_seed(self, capsys):
        assert main(["--seed", "-1"]) == 2

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "nope.cfg")]) == 2

    def test_end_to_end(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "command = radial-flow\nR = 3.0\nm = 64\nt_end = 0.1\n"
            "record_every = 40\n"
        )
        code = main(
            ["--config", str(cfg), "--out", str(tmp_path / "out"), "--quiet"]
        )
        assert code == 0
        assert (tmp_path / "out" / "series.csv").exists()
        assert (tmp_path / "out" / "summary.txt").exists()
