import json

import pytest

from kakutani import reports
from kakutani.cli import main
from kakutani.errors import ConfigInvalid, GoldenMismatch
from kakutani.symbolic import ExactLog


def test_parse_t_forms():
    assert reports.parse_t("log(8)") == (ExactLog(8), 0.0)
    assert reports.parse_t("log:25/6")[0] == ExactLog(reports.Fraction(25, 6))
    t, slack = reports.parse_t("2.0794415")
    assert slack == pytest.approx(5e-8)
    with pytest.raises(ConfigInvalid):
        reports.parse_t("abc")


def test_renewal_decimal_t(capsys):
    assert main(["renewal", "--system", "dyadic", "--t", "2.0794415"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 15


def test_split_writes_bundle(tmp_path):
    assert main(["split", "--alpha", "2/5", "--stages", "7", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_endpoints"] == 10
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["files"]) == {"endpoints.csv", "stages.csv", "summary.json"}
    header = (tmp_path / "endpoints.csv").read_text().splitlines()[0]
    assert header == "value_exact,value_float,first_stage_seen,set_membership"


def test_json_format(tmp_path):
    assert main(["renewal", "--alpha", "2/5", "--t-grid", "2:4:5", "--format", "json", "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "renewal.json").read_text())
    assert len(rows) == 5


def test_exit_codes():
    assert main(["split", "--alpha", "1/2,1/3", "--stages", "2"]) == 1
    assert main(["renewal", "--alpha", "2/5"]) == 1
    assert main(["renewal", "--alpha", "2/5", "--t", "40"]) == 3
    assert main(["reproduce", "finite-3"]) == 0


def test_reproduce_strict_raises_on_mismatch():
    with pytest.raises(GoldenMismatch) as info:
        reports.reproduce_paper("kakutani-2-5")
    assert len(info.value.failures) == 2


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        reports.ExperimentConfig("nope").validate()
    with pytest.raises(ConfigInvalid):
        reports.ExperimentConfig("split").validate()
