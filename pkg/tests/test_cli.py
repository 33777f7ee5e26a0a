import csv
import xml.etree.ElementTree as ET

import pytest

from samedge.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, build_parser, main
from samedge.harness import config as cfg
from samedge.harness.logs import header

SVG = "{http://www.w3.org/2000/svg}"

QUADRATIC_INI = """\
[optim]
eta = 0.1
rho = 0.05
max_steps = 30

[objective]
kind = quadratic
dim = 3
eigenvalues = 4.0, 2.0, 1.0

[spectral]
k = 3
period = 5
"""


@pytest.fixture
def quad_ini(tmp_path):
    path = tmp_path / "quad.ini"
    path.write_text(QUADRATIC_INI)
    return path


@pytest.fixture
def quad_log(tmp_path, quad_ini):
    log = tmp_path / "quad.csv"
    assert main(["run", str(quad_ini), "--log.path", str(log)]) == EXIT_OK
    return log


def polylines(svg_path):
    root = ET.parse(svg_path).getroot()  # strict parse: raises on malformed XML
    lines = root.findall(f".//{SVG}polyline")
    legend = [t.text for g in root.iter(f"{SVG}g") if g.get("class") == "legend"
              for t in g.iter(f"{SVG}text")]
    return lines, legend


class TestRun:
    def test_valid_quadratic_config(self, tmp_path, quad_ini, capsys):
        log = tmp_path / "out" / "run.csv"
        assert main(["run", str(quad_ini), "--log.path", str(log)]) == EXIT_OK
        with open(log, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == header(3)
        assert [int(r[0]) for r in rows[1:]] == list(range(0, 31, 5))
        assert "completed" in capsys.readouterr().out

    def test_missing_eta(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text(QUADRATIC_INI.replace("eta = 0.1\n", ""))
        assert main(["run", str(path)]) != EXIT_OK
        assert "eta" in capsys.readouterr().err

    def test_negative_rho(self, quad_ini, capsys):
        assert main(["run", str(quad_ini), "--optim.rho", "-0.1"]) == EXIT_USAGE
        assert "rho" in capsys.readouterr().err

    def test_flag_overrides_file(self, tmp_path, quad_ini):
        log = tmp_path / "run.csv"
        main(["run", str(quad_ini), "--log.path", str(log), "--optim.max_steps", "10"])
        with open(log, newline="") as fh:
            steps = [int(r[0]) for r in list(csv.reader(fh))[1:]]
        assert steps[-1] == 10

    def test_log_dir_environment(self, tmp_path, quad_ini, monkeypatch):
        monkeypatch.setenv("SAMEDGE_LOG_DIR", str(tmp_path / "logs"))
        assert main(["run", str(quad_ini)]) == EXIT_OK
        assert (tmp_path / "logs" / "eta0.1_rho0.05.csv").exists()

    def test_missing_file_is_io_error(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.ini")]) == EXIT_IO

    def test_divergence_still_exits_zero(self, tmp_path, quad_ini):
        log = tmp_path / "run.csv"
        code = main(["run", str(quad_ini), "--log.path", str(log), "--optim.eta", "1.0",
                     "--optim.rho", "0", "--optim.max_steps", "200"])
        assert code == EXIT_OK
        with open(log, newline="") as fh:
            assert list(csv.reader(fh))[-1][-1] == "diverged"

    def test_deterministic(self, tmp_path, quad_ini):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["run", str(quad_ini), "--log.path", str(a)])
        main(["run", str(quad_ini), "--log.path", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestGrid:
    def test_grid_manifest(self, tmp_path, quad_ini, capsys):
        out = tmp_path / "grid"
        code = main(["grid", str(quad_ini), "--etas", "0.1,0.2", "--rhos", "0,0.05",
                     "--out", str(out)])
        assert code == EXIT_OK
        with open(out / "manifest.csv", newline="") as fh:
            assert len(list(csv.DictReader(fh))) == 4
        assert len(capsys.readouterr().out.splitlines()) == 4


class TestVerify:
    def test_four_summary_lines(self, capsys):
        assert main(["verify", "--trials", "10000", "--seed", "0"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert [ln.split()[0] for ln in lines] == [
            "prop1_sign", "prop3_sign", "eq3_closed_form", "edge_bisection"]
        assert all(ln.split()[1] == "PASS" for ln in lines)

    def test_zero_trials_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--trials", "0"])
        assert exc.value.code == EXIT_USAGE
        assert "trials" in capsys.readouterr().err


class TestPlot:
    def test_three_series_log_scale(self, tmp_path, quad_log):
        out = tmp_path / "p.svg"
        code = main(["plot", str(quad_log), "--series", "lambda1,sam_edge,gd_edge",
                     "--yscale", "log", "--out", str(out)])
        assert code == EXIT_OK
        lines, legend = polylines(out)
        assert len(lines) == 3
        assert legend == ["lambda1", "sam_edge", "gd_edge"]

    def test_empty_log_writes_nothing(self, tmp_path, capsys):
        log = tmp_path / "empty.csv"
        log.write_text(",".join(header(3)) + "\n")
        out = tmp_path / "p.svg"
        assert main(["plot", str(log), "--series", "loss", "--out", str(out)]) != EXIT_OK
        assert not out.exists()
        assert "no records" in capsys.readouterr().err

    def test_two_logs_prefixed(self, tmp_path, quad_ini, quad_log):
        other = tmp_path / "other.csv"
        main(["run", str(quad_ini), "--log.path", str(other), "--optim.rho", "0"])
        out = tmp_path / "p.svg"
        main(["plot", str(quad_log), str(other), "--series", "loss", "--out", str(out)])
        lines, legend = polylines(out)
        assert len(lines) == 2
        assert legend == ["quad:loss", "other:loss"]

    def test_unknown_series(self, tmp_path, quad_log, capsys):
        out = tmp_path / "p.svg"
        code = main(["plot", str(quad_log), "--series", "lambda9", "--out", str(out)])
        assert code == EXIT_USAGE
        assert "lambda9" in capsys.readouterr().err
        assert not out.exists()

    def test_unreadable_log(self, tmp_path):
        out = tmp_path / "p.svg"
        code = main(["plot", str(tmp_path / "missing.csv"), "--series", "loss",
                     "--out", str(out)])
        assert code == EXIT_IO

    def test_diverged_tail_is_dashed(self, tmp_path, quad_ini):
        log = tmp_path / "div.csv"
        main(["run", str(quad_ini), "--log.path", str(log), "--optim.eta", "1.0",
              "--optim.rho", "0", "--optim.max_steps", "200", "--spectral.period", "1"])
        out = tmp_path / "p.svg"
        assert main(["plot", str(log), "--series", "grad_norm", "--yscale", "log",
                     "--out", str(out)]) == EXIT_OK
        root = ET.parse(out).getroot()
        dashed = [ln for ln in root.iter(f"{SVG}line") if ln.get("stroke-dasharray")]
        assert len(dashed) == 1


class TestParser:
    def test_unknown_flag_is_error(self, quad_ini):
        with pytest.raises(SystemExit) as exc:
            main(["run", str(quad_ini), "--optim.bogus", "1"])
        assert exc.value.code == EXIT_USAGE

    @pytest.mark.parametrize("command", ["run", "grid"])
    def test_help_lists_every_config_key(self, command, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args([command, "--help"])
        text = capsys.readouterr().out
        for section in cfg.SECTIONS:
            for key in cfg.field_names(section):
                assert f"--{section}.{key}" in text

    def test_help_lists_plot_and_verify_flags(self, capsys):
        for command, flags in [("plot", ["--series", "--yscale", "--out"]),
                               ("verify", ["--trials", "--seed"])]:
            with pytest.raises(SystemExit):
                build_parser().parse_args([command, "--help"])
            text = capsys.readouterr().out
            assert all(f in text for f in flags)
