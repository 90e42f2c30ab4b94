import json

import numpy as np
import pytest

from entkit.cli import CSV_COLUMNS, load_state, main, save_state
from entkit.states import isotropic, max_entangled, random_state
from entkit.tensor import MultiState


@pytest.fixture()
def phi2_file(tmp_path):
    path = tmp_path / "phi2.json"
    save_state(max_entangled(2), str(path))
    return str(path)


@pytest.fixture()
def iso08_file(tmp_path):
    path = tmp_path / "iso08.json"
    save_state(isotropic(2, 0.8), str(path))
    return str(path)


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_load_save_roundtrip(tmp_path):
    st = random_state((2, 3), seed=3)
    path = tmp_path / "rt.json"
    save_state(st, str(path))
    back, stem = load_state(str(path))
    assert stem == "rt"
    assert back.dims == (2, 3)
    assert np.allclose(back.op, st.op, atol=1e-15)


def test_measure_rg_report(capsys, phi2_file):
    code, rep = run_json(capsys, ["measure", "--kind", "rg",
                                  "--state", phi2_file, "--tol", "1e-8"])
    assert code == 0
    assert rep["command"] == "measure"
    assert rep["inputs"]["state_id"] == "phi2"
    assert abs(rep["result"]["lower"] - 1.0) < 1e-5
    assert abs(rep["result"]["upper"] - 1.0) < 1e-5
    assert rep["result"]["lower"] <= rep["result"]["upper"] + 1e-9
    assert rep["wall_time_s"] > 0.0


def test_measure_slr_requires_eps(capsys, phi2_file):
    code = main(["measure", "--kind", "slr", "--state", phi2_file])
    assert code == 2
    code, rep = run_json(capsys, ["measure", "--kind", "slr", "--eps", "0.2",
                                  "--state", phi2_file])
    # drain stderr from the failed call above
    assert code == 0
    assert rep["result"]["upper"] <= 1.0 + 1e-9


def test_fsep_command_and_validation(capsys, iso08_file):
    code, rep = run_json(capsys, ["fsep", "--K", "2", "--state", iso08_file,
                                  "--tol", "1e-8"])
    assert code == 0
    assert abs(rep["result"]["upper"] - 0.8) < 1e-5
    assert main(["fsep", "--K", "1.5", "--state", iso08_file]) == 2
    assert main(["fsep", "--K", "2", "--variant", "relaxed",
                 "--state", iso08_file]) == 2
    assert main(["fsep", "--K", "2", "--variant", "relaxed", "--eps", "-0.5",
                 "--state", iso08_file]) == 2


def test_stein_command_with_envelope(capsys, phi2_file):
    code, rep = run_json(capsys, ["stein", "--n", "1", "--y", "1.0",
                                  "--state", phi2_file, "--tol", "1e-8"])
    assert code == 0
    assert rep["result"]["upper"] < 1e-5
    code, rep = run_json(capsys, ["stein", "--n", "1", "--y", "1.5", "--sfne",
                                  "--state", phi2_file, "--tol", "1e-8"])
    assert code == 0
    assert "b_star" in rep["result"]
    assert abs(rep["result"]["upper"] - 2.0 ** -0.5) < 1e-3


def test_protocol_demo_command(capsys, phi2_file):
    code, rep = run_json(capsys, ["protocol", "--kind", "demo", "--n", "1",
                                  "--state", phi2_file])
    assert code == 0
    body = rep["result"]
    assert abs(body["distill_rate"]["lower"] - 1.0) < 1e-9
    assert body["K_form"] == 2
    assert body["gap_form"] < 1e-2
    assert body["fidelity_table"][0]["K"] == 2


def test_protocol_formation_command(capsys, phi2_file):
    code, rep = run_json(capsys, ["protocol", "--kind", "formation",
                                  "--K", "2", "--state", phi2_file])
    assert code == 0
    body = rep["result"]
    assert body["cptp"]["ok"] is True
    assert body["epsilon"] <= 1.0 / (body["K"] - 1) + 1e-6
    assert main(["protocol", "--kind", "formation", "--state", phi2_file]) == 2
    assert main(["protocol", "--kind", "formation", "--K", "2.5",
                 "--state", phi2_file]) == 2


def test_protocol_distill_command(capsys, iso08_file):
    code, rep = run_json(capsys, ["protocol", "--kind", "distill",
                                  "--K", "2", "--state", iso08_file])
    assert code == 0
    body = rep["result"]
    assert body["cptp"]["ok"] is True
    assert abs(body["fidelity"]["upper"] - 0.8) < 1e-5
    assert body["epsilon"] < 1e-6


def test_parse_errors_exit_two(tmp_path, phi2_file):
    missing = str(tmp_path / "nope.json")
    assert main(["measure", "--kind", "rg", "--state", missing]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["measure", "--kind", "rg", "--state", str(bad)]) == 2
    shape = tmp_path / "shape.json"
    shape.write_text(json.dumps({"dims": [2, 2],
                                 "matrix": [[[1.0, 0.0]] * 3] * 3}))
    assert main(["measure", "--kind", "rg", "--state", str(shape)]) == 2


def test_state_invariant_violations_exit_three(tmp_path):
    # unit trace but one negative eigenvalue
    op = np.diag([1.3, -0.3, 0.0, 0.0]).astype(complex)
    payload = {"dims": [2, 2],
               "matrix": [[[float(z.real), float(z.imag)] for z in row]
                          for row in op]}
    path = tmp_path / "notpsd.json"
    path.write_text(json.dumps(payload))
    assert main(["measure", "--kind", "rg", "--state", str(path)]) == 3
    trace = tmp_path / "badtrace.json"
    payload["matrix"][0][0] = [0.4, 0.0]
    trace.write_text(json.dumps(payload))
    assert main(["measure", "--kind", "rg", "--state", str(trace)]) == 3


def test_dimension_cap_exit_five(tmp_path):
    st = random_state((3, 3), seed=0)
    path = tmp_path / "big.json"
    save_state(st, str(path))
    assert main(["stein", "--n", "3", "--y", "0.5", "--state", str(path)]) == 5
    assert main(["protocol", "--kind", "demo", "--n", "2",
                 "--state", str(tmp_path / "huge.json")]) == 2
    save_state(random_state((4, 4), seed=1), str(tmp_path / "huge.json"))
    assert main(["protocol", "--kind", "demo", "--n", "2",
                 "--state", str(tmp_path / "huge.json")]) == 5


def test_sweep_stein_csv_values_and_determinism(tmp_path, phi2_file):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    argv = ["sweep", "--kind", "stein", "--n", "1", "--y", "0:0.5:1",
            "--state", phi2_file, "--tol", "1e-8", "--seed", "3"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4
    rows = [dict(zip(CSV_COLUMNS, ln.split(","))) for ln in lines[1:]]
    for row, y in zip(rows, (0.0, 0.5, 1.0)):
        want = max(0.0, 1.0 - 2.0 ** (y - 1.0))
        assert abs(float(row["upper"]) - want) < 1e-6
        assert row["command"] == "stein"
        assert row["state_id"] == "phi2"


def test_sweep_fsep_csv(tmp_path, iso08_file):
    out = tmp_path / "f.csv"
    assert main(["sweep", "--kind", "fsep", "--K", "2:1:4",
                 "--state", iso08_file, "--tol", "1e-8",
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 4
    uppers = [float(dict(zip(CSV_COLUMNS, ln.split(",")))["upper"])
              for ln in lines[1:]]
    assert abs(uppers[0] - 0.8) < 1e-5
    for a, b in zip(uppers, uppers[1:]):
        assert b <= a + 1e-9
    assert main(["sweep", "--kind", "fsep", "--K", "1:1:3",
                 "--state", iso08_file]) == 2


def test_out_file_suppresses_stdout(capsys, phi2_file, tmp_path):
    out = tmp_path / "rep.json"
    code = main(["measure", "--kind", "rg", "--state", phi2_file,
                 "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    rep = json.loads(out.read_text())
    assert rep["command"] == "measure"
