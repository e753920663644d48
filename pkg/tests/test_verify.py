import json

import pytest

from fastcv import verify
from fastcv.cli import main

QUICK = {"n_seeds": 1, "n_eigenpair_instances": 10, "n_identity_datasets": 3, "n_permutations": 5}


@pytest.fixture
def quick_config(tmp_path):
    path = tmp_path / "verify.json"
    path.write_text(json.dumps(QUICK))
    return str(path)


def test_default_verify_passes(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == len(verify.PROPERTIES) + 1
    assert all(line.startswith("PASS") for line in lines[:-1])


def test_injected_fault_is_caught(quick_config, capsys):
    assert main(["verify", "--config", quick_config, "--inject-fault", "skip_bias_adjustment"]) == 1
    out = capsys.readouterr().out
    failing = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert len(failing) == 1
    assert "bias_adjustment_sign_agreement" in failing[0]
    assert "failing cell" in failing[0]


def test_report_has_one_line_per_property(quick_config, tmp_path, capsys):
    out = tmp_path / "report.txt"
    assert main(["verify", "--config", quick_config, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == len(verify.PROPERTIES) + 1
    for name, line in zip(verify.PROPERTIES, lines):
        assert name in line and "max deviation" in line


def test_unknown_config_key(tmp_path):
    path = tmp_path / "v.json"
    path.write_text(json.dumps({"bogus": 1}))
    assert main(["verify", "--config", str(path)]) == 2


def test_failed_result_reports_cell():
    res = verify.PropertyResult("x", 2.0, 1.0, {"n": 3})
    assert not res.passed
    assert res.line().startswith("FAIL x") and "{'n': 3}" in res.line()
