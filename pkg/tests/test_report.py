import json

from redscore.calibration import CalibrationResult, SensitivityEntry
from redscore.fusion import FusionWeights
from redscore.rankstats import BootstrapSummary
from redscore import report


def test_bootstrap_line_formatting():
    # fixture shaped like a reference robustness row
    s = BootstrapSummary(runs=1000, mean=0.584, std_dev=0.0043,
                         ci_low=0.576, ci_high=0.592, seed=0)
    assert report.bootstrap_line(s) == "58.40 ± 0.43, CI [57.60, 59.20]"


def test_calibration_table_columns():
    w = FusionWeights.from_floats(0.15, 0.35, 0.5, 0.8)
    result = CalibrationResult(best=w, best_tau=0.584, p_value=0.001,
                               sensitivity=[SensitivityEntry(w, 0.58, -0.004)])
    table = report.calibration_table(result)
    header = table.splitlines()[0].split()
    assert header == ["alpha", "beta", "gamma", "lambda", "tau", "p"]
    assert "58.40" in table


def test_empty_ablation_table_is_header_only():
    table = report.ablation_table([])
    lines = table.strip().splitlines()
    assert len(lines) == 2  # header + rule
    assert lines[0].split()[0] == "combination"


def test_artifact_round_trip(tmp_path):
    path = tmp_path / "x.json"
    report.write_artifact(path, "bootstrap", {"seed": 1},
                          {"mean": 0.5, "std_dev": 0.1, "ci_low": 0.4, "ci_high": 0.6,
                           "runs": 10, "seed": 1})
    payload = report.load_artifact(path)
    assert payload["kind"] == "bootstrap"
    rendered = report.render_artifact(payload)
    assert rendered.startswith("50.00 ±")
    # identical write is byte-identical
    other = tmp_path / "y.json"
    report.write_artifact(other, "bootstrap", {"seed": 1}, payload["results"])
    assert path.read_bytes() == other.read_bytes()


def test_render_rejects_foreign_json(tmp_path):
    path = tmp_path / "foreign.json"
    path.write_text(json.dumps({"whatever": 1}))
    try:
        report.load_artifact(path)
    except ValueError as exc:
        assert "artifact" in str(exc)
    else:
        raise AssertionError("foreign JSON accepted")
