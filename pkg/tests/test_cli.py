"""CLI subcommands, exit codes, file outputs, byte-stable reproducibility."""

import json

import pytest

import chisim as cs
from chisim.cli import main


def test_qft_sweep_writes_run_dir(tmp_path):
    out = tmp_path / "run"
    code = main(["qft-fidelity", "--qubits", "4", "--chi", "2,4", "--reps", "2",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    results = (out / "results.csv").read_text().splitlines()
    assert results[0] == "experiment,chi,rep,value"
    assert len(results) == 1 + 4  # 2 chi x 2 reps
    meta = json.loads((out / "meta.json").read_text())
    assert meta["experiment"] == "qft-fidelity"
    assert meta["config"]["seed"] == 1
    assert "versions" in meta and "timestamp" in meta


def test_results_csv_byte_identical(tmp_path):
    args = ["qft-fidelity", "--qubits", "4", "--chi", "2,4", "--reps", "2",
            "--seed", "7"]
    code = main(args + ["--out", str(tmp_path / "a")])
    assert code == 0
    code = main(args + ["--out", str(tmp_path / "b")])
    assert code == 0
    assert ((tmp_path / "a" / "results.csv").read_bytes()
            == (tmp_path / "b" / "results.csv").read_bytes())


def test_workers_do_not_change_output(tmp_path):
    base = ["grover", "--qubits", "4", "--chi", "2,4", "--reps", "2",
            "--num-marked", "2", "--seed", "3"]
    main(base + ["--out", str(tmp_path / "serial")])
    main(base + ["--workers", "2", "--out", str(tmp_path / "par")])
    assert ((tmp_path / "serial" / "results.csv").read_bytes()
            == (tmp_path / "par" / "results.csv").read_bytes())


def test_json_format(tmp_path):
    out = tmp_path / "run"
    code = main(["grover", "--qubits", "3", "--chi", "4", "--reps", "1",
                 "--marked", "101", "--seed", "0", "--format", "json",
                 "--out", str(out)])
    assert code == 0
    rows = json.loads((out / "results.json").read_text())
    assert rows[0]["experiment"] == "grover"
    assert 0.0 <= rows[0]["value"] <= 1.0


def test_config_error_exit_code():
    assert main(["qft-fidelity", "--qubits", "4", "--chi", "4,2"]) == 2


def test_counting_run(tmp_path):
    out = tmp_path / "run"
    code = main(["counting", "--qubits", "3", "--chi", "16", "--reps", "1",
                 "--n-top", "4", "--num-marked", "2", "--samples", "400",
                 "--draws", "400", "--seed", "5", "--out", str(out)])
    assert code == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["counting"]["n"] == 8
    assert meta["counting"]["n_read"] == 2


def test_entropy_map_files(tmp_path):
    out = tmp_path / "emap"
    code = main(["entropy-map", "--pipeline", "qft", "--qubits", "4",
                 "--chi", "4", "--depth-layers", "4", "--seed", "2",
                 "--out", str(out)])
    assert code == 0
    lines = (out / "entropy_map.csv").read_text().splitlines()
    assert lines[0] == "layer,bond,entropy"
    meta = json.loads((out / "meta.json").read_text())
    assert any(name == "QFT" for _, name in meta["phase_markers"])


def test_crk_distance_output(tmp_path):
    out = tmp_path / "crk"
    code = main(["crk-distance", "--k", "4,5", "--samples", "2000",
                 "--seed", "0", "--out", str(out)])
    assert code == 0
    rows = (out / "results.csv").read_text().splitlines()[1:]
    data = {}
    for row in rows:
        experiment, k, _, value = row.split(",")
        data[(experiment, int(k))] = float(value)
    assert data[("crk-distance-max", 5)] < 0.01 <= data[("crk-distance-max", 4)]


def test_sample_roundtrip(tmp_path):
    circuit = cs.Circuit(2).add_h(0).add_cnot(0, 1)
    path = tmp_path / "bell.txt"
    path.write_text(circuit.to_text())
    out = tmp_path / "hist"
    code = main(["sample", "--circuit", str(path), "--chi", "4",
                 "--samples", "500", "--seed", "4", "--out", str(out)])
    assert code == 0
    lines = (out / "histogram.csv").read_text().splitlines()
    assert lines[0] == "bitstring,count,frequency"
    keys = {line.split(",")[0] for line in lines[1:]}
    assert keys == {"00", "11"}


def test_sample_numerical_failure_exit_code(tmp_path):
    # a non-unitary single-qubit gate shrinks the norm; the conditional
    # probabilities then sum below one and sampling must fail with code 3
    path = tmp_path / "bad.txt"
    path.write_text("QUBITS 1\nU 1 0.5 0.0 0.0 0.0 0.0 0.0 0.5 0.0\n")
    assert main(["sample", "--circuit", str(path), "--chi", "2",
                 "--samples", "10", "--seed", "0"]) == 3


def test_utils_outputs(capsys):
    code = main(["utils", "--epsilon", "0.25", "--m", "30", "--n", "1024",
                 "--n-read", "4", "--qubits", "32", "--chi", "100"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["aux_qubits"] == 2
    assert payload["delta_m"] == pytest.approx(17.5, abs=0.01)
    assert payload["hilbert_fraction"] == pytest.approx(1.49e-4, rel=0.01)


def test_utils_without_args_is_config_error():
    assert main(["utils"]) == 2
