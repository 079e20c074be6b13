from __future__ import annotations

import hashlib
import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from fusedlasso import Segmentation, lambda_max, solve
from fusedlasso.cli import SegmentationDocument, main, parse_values


def schema(name):
    return json.loads(resources.files("fusedlasso").joinpath("schemas", name).read_text())


@pytest.fixture
def data_file(tmp_path):
    p = tmp_path / "y.csv"
    p.write_text("value\n0\n0\n1\n1\n")
    return p


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_denoise_fixture(capsys, data_file):
    code, out, _ = run(capsys, "denoise", data_file, "--lambda", 0.25, "--dual")
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema("segmentation_document.schema.json"))
    assert doc["change_points"] == [2]
    assert doc["levels"] == [0.125, 0.875]
    assert len(doc["dual"]) == 5
    assert doc["kkt"]["feasible"]
    assert doc["provenance"]["input_sha256"] == hashlib.sha256(data_file.read_bytes()).hexdigest()


def test_document_roundtrip(capsys, tmp_path, rng):
    p = tmp_path / "r.csv"
    y = rng.normal(size=50)
    p.write_text("\n".join(repr(float(v)) for v in y))
    code, out, _ = run(capsys, "denoise", p, "--lambda-frac", 0.2)
    assert code == 0
    doc = SegmentationDocument.from_dict(json.loads(out))
    assert doc.segmentation() == solve(y, 0.2 * lambda_max(y))
    assert SegmentationDocument.from_dict(doc.to_dict()) == doc


def test_denoise_full_fraction_is_mean(capsys, data_file):
    code, out, _ = run(capsys, "denoise", data_file, "--lambda-frac", 1.0, "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["start,stop,level", "0,4,0.5"]


def test_polish(capsys, data_file):
    code, out, _ = run(capsys, "denoise", data_file, "--lambda", 0.25, "--polish")
    doc = json.loads(out)
    assert doc["levels"] == [0.0, 1.0] and doc["polished"]


def test_lambda_selector_required(capsys, data_file):
    code, _, err = run(capsys, "denoise", data_file)
    assert code == 1 and "required" in err
    code, _, _ = run(capsys, "denoise", data_file, "--lambda", 1, "--lambda-frac", 0.5)
    assert code == 1


def test_negative_lambda_is_input_error(capsys, data_file):
    code, _, _ = run(capsys, "denoise", data_file, "--lambda", -1)
    assert code == 1


def test_lambda_max_command(capsys, tmp_path):
    p = tmp_path / "two.csv"
    p.write_text("1\n2\n")
    code, out, _ = run(capsys, "lambda-max", p)
    assert code == 0 and float(out) == 0.5


def test_parse_reports_line_numbers():
    assert parse_values("y\n1\n2\n").tolist() == [1.0, 2.0]
    with pytest.raises(ValueError, match="line\\(s\\) 3, 5"):
        parse_values("1\n2\nabc\n4\ninf\n")
    with pytest.raises(ValueError):
        parse_values("header only\n")


def test_bad_input_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1\nfoo\n")
    code, _, err = run(capsys, "lambda-max", p)
    assert code == 1 and "line(s) 2" in err
    code, _, _ = run(capsys, "lambda-max", tmp_path / "missing.csv")
    assert code == 1


def test_certificate_failure_exit_code(capsys, data_file, monkeypatch):
    import fusedlasso.cli as cli

    monkeypatch.setattr(cli, "solve",
                        lambda y, lam: Segmentation(4, [1], [0.0, 1.0], lam))
    code, _, err = run(capsys, "denoise", data_file, "--lambda", 0.25)
    assert code == 2 and "certificate" in err


def test_path_command(capsys, data_file):
    code, out, _ = run(capsys, "path", data_file)
    doc = json.loads(out)
    jsonschema.validate(doc, schema("path_document.schema.json"))
    assert [e["lambda"] for e in doc["events"]] == [0.0, 1.0]


def test_variance_command(capsys, tmp_path, rng):
    p = tmp_path / "v.csv"
    p.write_text("\n".join(map(repr, rng.normal(size=40).tolist())))
    code, out, _ = run(capsys, "variance", p, "--lambda", 2.0)
    doc = json.loads(out)
    jsonschema.validate(doc, schema("segmentation_document.schema.json"))
    assert code == 0 and doc["kind"] == "variance" and min(doc["levels"]) > 0


def test_trend_command(capsys, tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("\n".join(str(10 - abs(t - 10)) for t in range(21)))
    code, out, _ = run(capsys, "trend", p, "--lambda", 0.5)
    doc = json.loads(out)
    jsonschema.validate(doc, schema("trend_document.schema.json"))
    assert code == 0 and doc["kink_points"] == [10] and doc["kkt"]["feasible"]


def test_irrep_tent(capsys):
    code, out, _ = run(capsys, "irrep", "--n", 100, "--support", 50, "--signs", 1)
    rows = [r.split(",") for r in out.splitlines()[1:]]
    values = np.array([float(r[1]) for r in rows])
    assert code == 0 and values.max() == 1.0 and int(np.argmax(values)) + 1 == 50


def test_simulate_requires_seed(capsys):
    code, _, err = run(capsys, "simulate", "--model", "example1")
    assert code == 1 and "--seed" in err


def test_simulate_is_reproducible(capsys):
    _, a, _ = run(capsys, "simulate", "--lengths", "3,3", "--levels", "0,1", "--seed", 5)
    _, b, _ = run(capsys, "simulate", "--lengths", "3,3", "--levels", "0,1", "--seed", 5)
    assert a == b and len(a.splitlines()) == 7


def test_experiment_command(capsys, tmp_path):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"experiment": "example2", "reps": 2, "seed": 1, "grid_size": 4}))
    code, out, _ = run(capsys, "experiment", cfg, "--threads", 2)
    doc = json.loads(out)
    jsonschema.validate(doc, schema("experiment_report.schema.json"))
    assert code == 0 and set(doc["failure_frequency"]) == {"0", "1", "2", "3"}


def test_experiment_config_error(capsys, tmp_path):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"experiment": "sweep", "truth": {
        "lengths": [100, 100, 100], "levels": [1, 2, 3]}, "reps": 2, "n_values": [300]}))
    code, _, err = run(capsys, "experiment", cfg)
    assert code == 3 and "staircase" in err


def test_config_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(schema("experiment_config.schema.json"))
    for name in ("segmentation_document", "path_document", "trend_document",
                 "experiment_report"):
        jsonschema.Draft202012Validator.check_schema(schema(f"{name}.schema.json"))
