import json

import pytest

from app.client.files import (
    CONFIG_PREFIX,
    OBSERVATIONS_FILE,
    SECRET_FILE,
    csv_text,
    matrix_from_text,
    matrix_to_text,
    poly_from_text,
    poly_to_text,
    read_instance,
    read_observations,
    write_instance,
)
from app.errors import InstanceParseError
from app.model.schema import FpPolynomial, IntegerLattice
from app.service.attack_service import AttackService
from app.service.field_service import FieldService
from app.service.observation_service import ObservationService


@pytest.fixture
def instance_dir(tmp_path, mersenne_ctx):
    f = FieldService.random_polynomial(mersenne_ctx, 3, 1, seed=1)
    points = ObservationService.sample_points(h=1000, d=6, seed=2)
    inst = AttackService.generate_instance(f, 1000, points, 2**20, seed=3)
    write_instance(tmp_path, f, inst, {"seed": 3})
    return tmp_path, f, inst


def _replace_line(path, line_no, text):
    lines = path.read_text().splitlines()
    lines[line_no - 1] = text
    path.write_text("\n".join(lines) + "\n")


def test_polynomial_text_round_trip(small_ctx):
    f = FpPolynomial(ctx=small_ctx, coeffs=(3, 0, 100))
    assert poly_to_text(f) == "101\n3\n0\n100\n"
    assert poly_from_text(poly_to_text(f)) == f


@pytest.mark.parametrize(
    "text, line",
    [("101\n5\nseven\n", 3), ("101\n5\n101\n", 3), ("91\n1\n", 1), ("101\n", 2)],
)
def test_polynomial_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(InstanceParseError) as info:
        poly_from_text(text, "f.txt")
    assert info.value.line == line
    assert str(info.value).startswith(f"f.txt:{line}:")


def test_matrix_text_round_trip():
    lattice = IntegerLattice(rows=((25, 0), (10, 2)), scale=5)
    text = matrix_to_text(lattice)
    assert text.splitlines()[0] == "2 5"
    assert matrix_from_text(text) == lattice


def test_matrix_row_length_is_checked():
    with pytest.raises(InstanceParseError) as info:
        matrix_from_text("2 1\n1 0\n\n0 1 2\n")
    assert info.value.line == 4


def test_csv_text_starts_with_config():
    text = csv_text(("a", "b"), [(1, 2)], {"seed": 4})
    first, header, row = text.splitlines()
    assert json.loads(first[len(CONFIG_PREFIX) :]) == {"seed": 4}
    assert header == "a,b"
    assert row == "1,2"


def test_instance_round_trip(instance_dir):
    directory, f, inst = instance_dir
    loaded, secret = read_instance(directory)
    assert loaded == inst
    assert secret.coeffs == f.coeffs


def test_instance_without_secret(instance_dir):
    directory, _, inst = instance_dir
    (directory / SECRET_FILE).unlink()
    loaded, secret = read_instance(directory)
    assert loaded == inst
    assert secret is None


def test_observation_violating_the_secret_is_reported(instance_dir):
    directory, _, inst = instance_dir
    p = inst.ctx.p
    t, u = inst.points[1], inst.observations[1]
    _replace_line(directory / OBSERVATIONS_FILE, 4, f"{t},{(u + p // 2) % p},{inst.delta}")
    with pytest.raises(InstanceParseError) as info:
        read_instance(directory)
    assert info.value.line == 4


def test_unreduced_observation_is_reported(instance_dir):
    directory, _, inst = instance_dir
    _replace_line(directory / OBSERVATIONS_FILE, 3, f"{inst.points[0]},{inst.ctx.p},{inst.delta}")
    with pytest.raises(InstanceParseError) as info:
        read_observations(directory / OBSERVATIONS_FILE)
    assert info.value.line == 3


def test_malformed_observation_row(instance_dir):
    directory, _, _ = instance_dir
    _replace_line(directory / OBSERVATIONS_FILE, 5, "1,2")
    with pytest.raises(InstanceParseError) as info:
        read_instance(directory)
    assert info.value.line == 5


def test_missing_config_line(tmp_path):
    path = tmp_path / OBSERVATIONS_FILE
    path.write_text("t,u,delta\n1,2,3\n")
    with pytest.raises(InstanceParseError, match="config"):
        read_observations(path)
