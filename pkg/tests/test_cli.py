import json
import subprocess
import sys

import numpy as np
import pytest

from brink.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main, write_atomic
from brink.envelopes import DecayModel, EnvelopeSpec
from brink.radial import GridFunction


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_sweep_writes_normalized_states(tmp_path, capsys):
    code, out, _ = _run(capsys, "solve", "--family", "well_coulomb_tail", "--sweep", "0.64,0.7,0.8", "--output", str(tmp_path))
    assert code == EXIT_OK
    summary = json.loads(out)["results"]
    assert [r["coupling"] for r in summary] == ["0.64", "0.7", "0.8"]
    energies = [r["energy"] for r in summary]
    assert energies[0] > energies[1] > energies[2]
    for token in ("0.64", "0.7", "0.8"):
        text = (tmp_path / f"groundstate_{token}.csv").read_text(encoding="utf-8")
        assert text.startswith("r,u\n") and "\r" not in text
        u = GridFunction.from_csv(text)
        assert u.norm() == pytest.approx(1.0, abs=1e-8)
        assert u.node_count == 0


def test_solve_from_problem_json(tmp_path, capsys):
    doc = {"potential": {"kind": "coulomb", "z": 2.0}, "dimension": 3, "grid": {"r_max": 60, "step": 0.005}}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    code, out, _ = _run(capsys, "solve", "--problem", str(path), "--output", str(tmp_path))
    assert code == EXIT_OK
    assert json.loads(out)["results"][0]["energy"] == pytest.approx(-1.0, abs=1e-6)
    assert (tmp_path / "groundstate_problem.csv").exists()


def test_critical_certificate(tmp_path, capsys):
    code, out, _ = _run(capsys, "critical", "--family", "well_coulomb_tail", "--output", str(tmp_path))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["lambda_cr"] == pytest.approx(0.634366, abs=5e-4)
    assert doc["predicate"] == "zero_energy_node"
    assert json.loads((tmp_path / "critical.json").read_text()) == doc


def test_envelope_outputs(tmp_path, capsys):
    code, out, _ = _run(
        capsys, "envelope", "--family", "well_coulomb_tail", "--coupling", "0.8", "--model", "ExpLinear", "--output", str(tmp_path)
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["verify"]["result"] == "Dominates"
    env = EnvelopeSpec.from_csv((tmp_path / "envelope.csv").read_text(), 10.0)
    assert env.F_values[-1] > 10
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert DecayModel(fit["model"]) is DecayModel.EXP_LINEAR
    assert fit["rate"] == pytest.approx(np.sqrt(-doc["energy"]), rel=0.02)


def test_classify_and_crosscheck(tmp_path, capsys):
    code, out, _ = _run(
        capsys, "classify", "--family", "square_well", "--dimension", "5", "--coupling", "8.0", "--crosscheck", "--output", str(tmp_path)
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["tail"] == "ExistenceSide"
    assert doc["crosscheck"] in ("SquareSummable", "Divergent", "Inconclusive")


def test_helium_and_natom(tmp_path, capsys):
    cfg = json.dumps({"Z": 1.0, "K": 1, "positions": [[1, 0, 0], [0, 0, 2]]})
    code, out, _ = _run(capsys, "natom", "--config", cfg, "--delta", "0.6", "--output", str(tmp_path))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["region"] == "ALess" and doc["bound"] == pytest.approx(-1.1875)
    assert doc["trace"][-1]["bound"] == pytest.approx(-1.1875)
    code, out, _ = _run(capsys, "helium", "--config", cfg, "--delta", "0.6", "--alpha", "1", "--output", str(tmp_path))
    assert code == EXIT_OK
    assert json.loads(out)["region"] == "Outside"
    code, out, _ = _run(capsys, "natom", "--samples", "1000", "--n-max", "3", "--seed", "2", "--output", str(tmp_path))
    assert code == EXIT_OK
    assert json.loads(out)["violations"] == 0
    lines = (tmp_path / "natom_sweep.csv").read_text().splitlines()
    assert lines[0] == "N,K,delta,samples,violations" and len(lines) == 1 + 3 * 3
    code, out, _ = _run(capsys, "helium", "--samples", "2000", "--seed", "1", "--output", str(tmp_path))
    counts = json.loads(out)
    assert counts["inside_violations"] == counts["outside_violations"] == 0


def test_volume_exponent(tmp_path, capsys):
    code, out, _ = _run(capsys, "volume", "--alpha", "0.6", "--delta", "1", "--seed", "7", "--output", str(tmp_path))
    assert code == EXIT_OK
    assert json.loads(out)["exponent"] == pytest.approx(2.2, abs=0.1)


def test_outputs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(capsys, "volume", "--alpha", "1", "--delta", "0.1", "--seed", "3", "--samples", "100000", "--output", str(d))[0] == 0
        assert _run(capsys, "natom", "--samples", "500", "--n-max", "3", "--seed", "5", "--output", str(d))[0] == 0
        assert _run(capsys, "solve", "--family", "well_global_coulomb", "--coupling", "2.5", "--output", str(d))[0] == 0
    for name in ("volume.json", "natom_sweep.csv", "groundstate_2.5.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_exit_code_invalid(tmp_path, capsys):
    code, _, err = _run(capsys, "solve", "--family", "well_coulomb_tail", "--output", str(tmp_path))
    assert code == EXIT_INVALID and "invalid input" in err
    code, _, _ = _run(capsys, "volume", "--alpha", "1.0", "--delta", "2", "--seed", "1", "--output", str(tmp_path))
    assert code == EXIT_INVALID
    code, _, _ = _run(capsys, "natom", "--config", "{not json", "--output", str(tmp_path))
    assert code == EXIT_INVALID
    code, _, _ = _run(capsys, "solve", "--problem", str(tmp_path / "missing.json"), "--output", str(tmp_path))
    assert code == EXIT_INVALID


def test_exit_code_numerical(tmp_path, capsys):
    code, _, err = _run(capsys, "solve", "--family", "well_coulomb_tail", "--coupling", "0.6", "--output", str(tmp_path))
    assert code == EXIT_NUMERICAL
    assert "ground_state" in err or "energy" in err
    code, _, _ = _run(capsys, "critical", "--family", "well_coulomb_tail", "--interval", "0.1,0.2", "--output", str(tmp_path))
    assert code == EXIT_NUMERICAL


def test_write_atomic_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "x.txt"
    write_atomic(target, "a\n")
    write_atomic(target, "b\n")
    assert target.read_text() == "b\n"
    assert [p.name for p in target.parent.iterdir()] == ["x.txt"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "brink", "natom", "--config", '{"Z": 1, "K": 1, "positions": [[1,0,0],[0,0,2]]}', "--delta", "0.4", "--output", str(tmp_path)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["bound"] == pytest.approx(-1.75)
