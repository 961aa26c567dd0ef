import csv
import json
import warnings

import pytest

from starmcf import harness
from starmcf.cli import main
from starmcf.harness import (
    ConfigError, emit_outputs, load_config, parse_config, report_json, run_experiment,
)
from starmcf.kernel import QuadratureWarning

SMALL = """\
shape: flower
eps: 0.3
k: 3
grids: [32, 64]
kernel_samples: 20
mc_samples: 2000
"""


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        yield


@pytest.fixture(scope="module")
def small_report():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        return run_experiment(parse_config(SMALL))


@pytest.fixture
def small_yaml(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


class TestParse:
    def test_defaults(self):
        cfg = parse_config("shape: round\n")
        assert cfg.params.get("R0", 1.0) == 1.0
        assert cfg.grids == (64, 128, 256)
        assert cfg.n == 1 and cfg.seed == 42
        assert cfg.id

    def test_float_strings(self):
        cfg = parse_config("shape: round\nblowup_threshold: 1e6\nsnapshot_interval: 1e-3\n")
        assert cfg.blowup_threshold == 1e6
        assert cfg.snapshot_interval == 1e-3

    @pytest.mark.parametrize("text,key", [
        ("shape: round\ngrids: [128, 64]\n", "grids"),
        ("shape: round\ngrids: []\n", "grids"),
        ("shape: round\nfoo: 1\n", "foo"),
        ("shape: round\nn: 3\n", "n"),
        ("shape: round\nn: 1.5\n", "n"),
        ("shape: round\ncfl_factor: fast\n", "cfl_factor"),
        ("shape: hexagon\n", "shape"),
        ("shape: flower\neps: 0.3\n", "k"),
        ("shape: flower\neps: 0.3\nk: 3\nn: 2\ngrids: [33]\n", r"shape \(flower, grids\[0\]=33\)"),
        ("shape: round\nR0: -1\n", "non-positive radius"),
        ("- a\n- b\n", "<document>"),
        ("shape: [\n", "<document>"),
        ("shape: round\nseed: true\n", "seed"),
    ])
    def test_errors(self, text, key):
        with pytest.raises(ConfigError, match=key):
            parse_config(text)

    def test_error_is_value_error(self):
        with pytest.raises(ValueError):
            parse_config("shape: round\ntau_min: 2.0\ntau_max: 1.0\n")

    def test_shipped_configs(self):
        for name in ("flower", "circle", "sphere"):
            cfg = load_config(f"configs/{name}.yaml")
            assert list(cfg.grids) == sorted(cfg.grids)


class TestReport:
    def test_verdict_shape(self, small_report):
        for name, v in small_report.verdicts.items():
            assert set(v) >= {"anchor", "status"}
            assert v["status"] in ("pass", "fail", "not-applicable")
            assert "eq" not in v["anchor"].lower().split()

    def test_core_verdicts_pass(self, small_report):
        for name in ("gradient_bound", "blowup_lower_bound", "phi_monitor", "kato", "q_bound",
                     "barrier", "monotonicity", "case_inequalities", "avoidance"):
            assert small_report.verdicts[name]["status"] == "pass", name

    def test_authoritative_is_finest(self, small_report):
        assert small_report.authoritative.N == 64
        assert small_report.authoritative.T_c == pytest.approx(0.5225, rel=1e-2)

    def test_json_roundtrip_and_determinism(self, small_report):
        text = report_json(small_report)
        doc = json.loads(text)
        assert doc["experiment_id"] == small_report.experiment_id
        assert "wall_clock" not in doc
        again = run_experiment(parse_config(SMALL))
        assert report_json(again) == text

    def test_emit(self, small_report, tmp_path):
        paths = emit_outputs(small_report, tmp_path / "out")
        with open(paths["diagnostics.csv"]) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(harness.DIAGNOSTIC_COLUMNS)
        assert len(rows) - 1 == len(small_report.authoritative.series.diagnostics)
        assert float(rows[1][0]) == 0.0
        with open(paths["snapshots.csv"]) as fh:
            snap = list(csv.reader(fh))
        assert snap[0] == ["t", "node", "angle", "r"]
        assert float(snap[1][3]) == pytest.approx(1.3)
        assert json.loads(paths["report.json"].read_text())["grids"][-1]["N"] == 64


class TestCli:
    def test_verify_pass(self, small_yaml, monkeypatch, capsys):
        monkeypatch.setattr(harness, "ORDER_TARGET", 0.0)
        assert main(["verify", "--config", str(small_yaml)]) == 0
        out = capsys.readouterr().out
        assert "gradient_bound" in out

    def test_verify_fail(self, small_yaml, monkeypatch):
        monkeypatch.setattr(harness, "ORDER_TARGET", 10.0)
        assert main(["verify", "--config", str(small_yaml)]) == 1

    def test_simulate(self, small_yaml, tmp_path, monkeypatch):
        monkeypatch.setenv(harness.OUT_ENV, str(tmp_path / "env-out"))
        assert main(["simulate", "--config", str(small_yaml), "--grids", "32"]) == 0
        assert (tmp_path / "env-out" / "report.json").exists()
        assert main(["simulate", "--config", str(small_yaml), "--grids", "32",
                     "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "diagnostics.csv").exists()

    def test_convergence(self, small_yaml, capsys):
        code = main(["convergence", "--config", str(small_yaml), "--grids", "32,64"])
        assert code in (0, 1)
        assert "orders" in capsys.readouterr().out

    @pytest.mark.parametrize("extra", [["--grids", "64,32"], ["--grids", "a,b"], ["--seed", "-1"]])
    def test_bad_overrides(self, small_yaml, extra):
        assert main(["verify", "--config", str(small_yaml), *extra]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["verify", "--config", str(tmp_path / "nope.yaml")]) == 2

    def test_bad_config(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("shape: round\nbogus: 1\n")
        assert main(["verify", "--config", str(p)]) == 2

    def test_unwritable_out(self, small_yaml, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["simulate", "--config", str(small_yaml), "--grids", "32",
                     "--out", str(blocker / "sub")]) == 2
