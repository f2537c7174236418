import json

import pytest
from typer.testing import CliRunner

from app.client.files import OBSERVATIONS_FILE, SECRET_FILE
from app.main import cli
from app.route.options import EXIT_ATTACK_FAILED, EXIT_CONFIG, EXIT_IO

runner = CliRunner()

MERSENNE_61 = str(2**61 - 1)


def invoke(*args):
    return runner.invoke(cli, ["--quiet", *[str(a) for a in args]])


def _csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    return [line.split(",") for line in lines[1:]]


@pytest.fixture
def noise_free_instance(tmp_path):
    out = tmp_path / "instance"
    result = invoke(
        "gen", "--prime", MERSENNE_61, "--n", 2, "--k", 1, "--h", 1000,
        "--delta", 0, "--d", 4, "--seed", 5, "--out", out,
    )
    assert result.exit_code == 0, result.output
    return out


def test_gen_writes_instance_files(noise_free_instance):
    assert (noise_free_instance / SECRET_FILE).is_file()
    rows = _csv_rows(noise_free_instance / OBSERVATIONS_FILE)
    assert rows[0] == ["t", "u", "delta"]
    assert len(rows) == 1 + 4


def test_gen_is_deterministic(tmp_path):
    args = ("gen", "--prime-bits", 64, "--n", 3, "--k", 1, "--h", 2**20, "--delta", 2**10, "--d", 8, "--seed", 9)
    out = tmp_path / "run"
    assert invoke(*args, "--out", out).exit_code == 0
    first = (out / OBSERVATIONS_FILE).read_bytes(), (out / SECRET_FILE).read_bytes()
    assert invoke(*args, "--out", out).exit_code == 0
    assert ((out / OBSERVATIONS_FILE).read_bytes(), (out / SECRET_FILE).read_bytes()) == first


def test_gen_refuses_degenerate_interval(tmp_path):
    result = invoke("gen", "--h", 0, "--delta", 1, "--out", tmp_path)
    assert result.exit_code == EXIT_CONFIG


def test_gen_needs_a_noise_bound(tmp_path):
    result = invoke("gen", "--n", 2, "--d", 4, "--out", tmp_path)
    assert result.exit_code == EXIT_CONFIG


def test_config_file_supplies_parameters(tmp_path):
    config = tmp_path / "gen.env"
    config.write_text(f"prime={MERSENNE_61}\nn=2\nk=1\nh=50\ndelta=3\nd=5\n")
    out = tmp_path / "from-config"
    result = invoke("gen", "--config", config, "--d", 6, "--out", out)
    assert result.exit_code == 0, result.output
    header = (out / OBSERVATIONS_FILE).read_text().splitlines()[0]
    record = json.loads(header[len("# config: ") :])
    assert record["d"] == 6
    assert record["h"] == 50
    assert record["p"] == int(MERSENNE_61)


def test_unknown_config_key_is_rejected(tmp_path):
    config = tmp_path / "bad.env"
    config.write_text("colour=blue\n")
    assert invoke("gen", "--config", config, "--out", tmp_path).exit_code == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    result = invoke("gen", "--config", tmp_path / "absent.env", "--out", tmp_path)
    assert result.exit_code == EXIT_IO


def test_attack_recovers_noise_free_instance(noise_free_instance, tmp_path):
    out = tmp_path / "attack"
    result = invoke("attack", "--instance", noise_free_instance, "--out", out)
    assert result.exit_code == 0, result.output
    assert "recovered" in result.output
    assert (out / "recovered.txt").read_text() == (noise_free_instance / SECRET_FILE).read_text()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["success"] is True
    assert summary["cvp_sq_distance"] == "0"


def test_attack_reports_malformed_instance(noise_free_instance, tmp_path):
    path = noise_free_instance / OBSERVATIONS_FILE
    lines = path.read_text().splitlines()
    lines[3] = "1,not-a-number,0"
    path.write_text("\n".join(lines) + "\n")
    result = invoke("attack", "--instance", noise_free_instance, "--out", tmp_path / "attack")
    assert result.exit_code == EXIT_IO
    assert ":4:" in result.output


def test_attack_missing_instance_directory(tmp_path):
    result = invoke("attack", "--instance", tmp_path / "nowhere", "--out", tmp_path)
    assert result.exit_code == EXIT_IO


def test_attack_trials_fail_under_overwhelming_noise(tmp_path):
    out = tmp_path / "trials"
    result = invoke(
        "attack", "--prime", 101, "--n", 3, "--k", 1, "--h", 50,
        "--delta", 50, "--d", 3, "--trials", 3, "--out", out,
    )
    assert result.exit_code == EXIT_ATTACK_FAILED
    rows = _csv_rows(out / "trials.csv")
    assert rows[0][:3] == ["seed", "d", "success"]
    assert len(rows) == 1 + 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["successes"] == 0
    assert summary["wilson_low"] == pytest.approx(0.0, abs=1e-12)


def test_attack_trials_on_noise_free_batch(tmp_path):
    out = tmp_path / "batch"
    result = invoke(
        "attack", "--prime", MERSENNE_61, "--n", 2, "--k", 1, "--h", 10**6,
        "--delta", 0, "--d", 5, "--trials", 4, "--out", out,
    )
    assert result.exit_code == 0, result.output
    assert "success 4/4" in result.output


def test_sweep_writes_one_row_per_d(tmp_path):
    out = tmp_path / "sweep"
    result = invoke(
        "sweep", "--prime", MERSENNE_61, "--n", 2, "--k", 1, "--h", 1000,
        "--delta", 0, "--d-min", 3, "--d-max", 5, "--trials", 2, "--out", out,
    )
    assert result.exit_code == 0, result.output
    rows = _csv_rows(out / "sweep.csv")
    assert rows[0] == ["d", "trials", "successes", "rate", "wilson_low", "wilson_high"]
    assert [row[0] for row in rows[1:]] == ["3", "4", "5"]
    assert len(_csv_rows(out / "trials.csv")) == 1 + 6


def test_approx_noise_free_profile(tmp_path):
    out = tmp_path / "approx"
    result = invoke(
        "approx", "--prime", 101, "--n", 1, "--h", 10, "--delta", 0,
        "--d", 4, "--window", 10, "--seed", 2, "--out", out,
    )
    assert result.exit_code == 0, result.output
    rows = _csv_rows(out / "profile.csv")
    assert rows[0] == ["t", "x", "error"]
    assert [row[0] for row in rows[1:]] == [str(t) for t in range(10)]
    assert all(float(row[2]) == 0.0 for row in rows[1:])
    assert (out / "recovered.txt").read_text() == (out / "secret.txt").read_text()


def test_approx_needs_enough_points(tmp_path):
    result = invoke("approx", "--n", 3, "--d", 3, "--delta", 1, "--out", tmp_path)
    assert result.exit_code == EXIT_CONFIG


def test_predict_finds_word_size_crossover(tmp_path):
    out = tmp_path / "predict"
    result = invoke("predict", "--n", 5, "--b", 16, "--d-min", 20, "--d-max", 30, "--out", out)
    assert result.exit_code == 0, result.output
    assert "S first positive at d = 23" in result.output
    rows = _csv_rows(out / "predict.csv")
    assert rows[0] == ["d", "S", "in_regime"]
    assert len(rows) == 1 + 11
    by_d = {int(row[0]): float(row[1]) for row in rows[1:]}
    assert by_d[22] <= 0 < by_d[23]


def test_predict_requires_noise_setting(tmp_path):
    assert invoke("predict", "--n", 5, "--h", 100, "--out", tmp_path).exit_code == EXIT_CONFIG


def test_flat_reference_profile(tmp_path):
    out = tmp_path / "flat"
    result = invoke("flat", "--reference", "--grid", 50, "--out", out)
    assert result.exit_code == 0, result.output
    rows = _csv_rows(out / "flat.csv")
    assert len(rows) == 1 + 50
    assert all(float(row[1]) < 2.0**-32 for row in rows[1:])
    assert len((out / "flat.txt").read_text().splitlines()) == 7


def test_oscillate_reference_audit(tmp_path):
    out = tmp_path / "osc"
    result = invoke("oscillate", "--reference", "--h", 20, "--out", out)
    assert result.exit_code == 0, result.output
    assert "holds on 41 points" in result.output
    rows = _csv_rows(out / "oscillate.csv")
    assert rows[0] == ["x", "value", "d", "c"]


def test_nfij_counts(tmp_path):
    out = tmp_path / "nfij"
    result = invoke("nfij", "--ell", 2, "--H", 30, "--K", 30, "--prime", 10007, "--trials", 3, "--out", out)
    assert result.exit_code == 0, result.output
    rows = _csv_rows(out / "nfij.csv")
    assert rows[0] == ["trial", "ell", "H", "K", "count", "bound"]
    assert all(0 <= int(row[4]) <= 30 for row in rows[1:])


def test_nfij_scaled_family(tmp_path):
    out = tmp_path / "scaled"
    result = invoke(
        "nfij", "--ell", 2, "--H", 16, "--K", 2**20, "--s", 2,
        "--prime", MERSENNE_61, "--out", out,
    )
    assert result.exit_code == 0, result.output
    rows = _csv_rows(out / "nfij.csv")
    assert int(rows[1][4]) >= 16 // 2 - 1
