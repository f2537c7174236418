import itertools
import random
from fractions import Fraction

import mpmath
import pytest

from app.config import settings
from app.errors import DomainError, EnumerationRefusedError, RankDeficientError
from app.model.schema import CvpMethod, IntegerLattice
from app.service.lattice_service import LatticeService, _zz_matrix


def _lattice(*rows, scale=1):
    return IntegerLattice(rows=tuple(tuple(r) for r in rows), scale=scale)


def _sq_norm(v):
    return sum(x * x for x in v)


def _brute_force_cvp(rows, target, box=12):
    best = None
    for xs in itertools.product(range(-box, box + 1), repeat=len(rows)):
        v = [sum(x * r[j] for x, r in zip(xs, rows)) for j in range(len(target))]
        dist = sum((a - b) ** 2 for a, b in zip(v, target))
        best = dist if best is None else min(best, dist)
    return best


def test_gram_schmidt_small_basis():
    bstar, mu = LatticeService.gram_schmidt(_lattice((1, 1), (1, 0)))
    assert bstar[0] == [Fraction(1), Fraction(1)]
    assert bstar[1] == [Fraction(1, 2), Fraction(-1, 2)]
    assert mu[1][0] == Fraction(1, 2)
    assert mu[0][0] == mu[1][1] == Fraction(1)


def test_gram_schmidt_reports_dependent_row():
    with pytest.raises(RankDeficientError) as info:
        LatticeService.gram_schmidt(_lattice((1, 2), (2, 4)))
    assert info.value.row == 1


def test_lll_finds_short_basis():
    basis = _lattice((201, 37), (1648, 297))
    reduced, transform = LatticeService.lll_reduce_with_transform(basis)
    assert sorted(_sq_norm(r) for r in reduced.rows) == [1025, 1601]
    for row, coeffs in zip(reduced.rows, transform):
        combined = tuple(sum(c * b[j] for c, b in zip(coeffs, basis.rows)) for j in range(2))
        assert combined == row
    det = transform[0][0] * transform[1][1] - transform[0][1] * transform[1][0]
    assert abs(det) == 1


def test_lll_rejects_bad_lovasz_parameter():
    with pytest.raises(DomainError):
        LatticeService.lll_reduce(_lattice((1, 0), (0, 1)), "1/5")


def test_lll_satisfies_lovasz_condition():
    basis = _lattice((1, 0, 0, 12345), (0, 1, 0, 54321), (0, 0, 1, 11111), (0, 0, 0, 100003))
    reduced = LatticeService.lll_reduce(basis)
    bstar, mu = LatticeService.gram_schmidt(reduced)
    norms = [sum(x * x for x in v) for v in bstar]
    for i in range(1, len(norms)):
        assert all(abs(mu[i][j]) <= Fraction(1, 2) for j in range(i))
        assert norms[i] >= (Fraction(99, 100) - mu[i][i - 1] ** 2) * norms[i - 1]


def test_babai_on_orthogonal_basis():
    solution = LatticeService.babai_nearest_plane(_lattice((3, 0), (0, 4)), (5, 7))
    assert solution.vector == (6, 8)
    assert solution.sq_distance == 2
    assert solution.method == CvpMethod.BABAI
    assert not solution.exact


def test_babai_rejects_dimension_mismatch():
    with pytest.raises(DomainError):
        LatticeService.babai_nearest_plane(_lattice((1, 0), (0, 1)), (1, 2, 3))


@pytest.mark.parametrize(
    "rows, target",
    [
        (((5, 1), (2, 7)), (13, 4)),
        (((4, 1, 0), (1, 5, 1), (0, 2, 6)), (9, -7, 3)),
        (((17, 3), (29, 5)), (100, 18)),
    ],
)
def test_cvp_exact_matches_brute_force(rows, target):
    solution = LatticeService.cvp_exact(_lattice(*rows), target)
    assert solution.exact
    assert solution.method == CvpMethod.EXACT
    box = 40 if len(rows) == 2 else 15
    assert solution.sq_distance == _brute_force_cvp(rows, target, box)
    combined = tuple(
        sum(c * r[j] for c, r in zip(solution.coefficients, rows)) for j in range(len(target))
    )
    assert combined == solution.vector


def test_cvp_exact_lattice_point_has_zero_distance():
    rows = ((3, 1, 4), (1, 5, 9), (2, 6, 5))
    target = tuple(2 * a - b + 3 * c for a, b, c in zip(*rows))
    solution = LatticeService.cvp_exact(_lattice(*rows), target)
    assert solution.sq_distance == 0
    assert solution.coefficients == (2, -1, 3)


def test_cvp_exact_refuses_large_dimension(monkeypatch):
    monkeypatch.setattr(settings, "ENUM_MAX_DIM", 1)
    with pytest.raises(EnumerationRefusedError):
        LatticeService.cvp_exact(_lattice((1, 0), (0, 1)), (0, 0))


def test_solve_cvp_falls_back_to_babai(monkeypatch):
    monkeypatch.setattr(settings, "ENUM_MAX_DIM", 1)
    solution = LatticeService.solve_cvp(_lattice((3, 0), (0, 4)), (5, 7))
    assert solution.method == CvpMethod.BABAI
    assert solution.vector == (6, 8)


def test_coefficients_of():
    basis = _lattice((2, 0), (0, 3))
    assert LatticeService.coefficients_of(basis, (4, 9)) == [2, 3]
    assert LatticeService.coefficients_of(basis, (3, 9)) is None


def test_basis_from_generators_and_membership():
    generators = _lattice((2, 0), (0, 2), (1, 1))
    basis = LatticeService.basis_from_generators(generators)
    assert basis.row_count == 2
    assert LatticeService.lattice_volume(generators) == 2
    assert LatticeService.contains(generators, (3, 1))
    assert not LatticeService.contains(generators, (1, 0))


def test_volume_of_scaled_interpolation_basis():
    # p = 5, delta = 1, t = 2
    basis = _lattice((25, 0), (10, 2), scale=5)
    assert LatticeService.lattice_volume(basis) == 2


def test_volume_of_non_square_lattice():
    assert LatticeService.lattice_volume(_lattice((1, 1, 1, 1))) == 2
    irrational = LatticeService.lattice_volume(_lattice((1, 1, 0)))
    assert mpmath.almosteq(irrational, mpmath.sqrt(2), rel_eps=1e-12)


def test_volume_of_zero_lattice():
    assert LatticeService.lattice_volume(_lattice((0, 0), (0, 0))) == 0


def test_gauss_reduce_gives_shortest_vector():
    a, b = LatticeService.gauss_reduce((201, 37), (1648, 297))
    assert _sq_norm(a) == 1025
    assert _sq_norm(b) == 1601


def test_gauss_reduce_rejects_dependent_pair():
    with pytest.raises(RankDeficientError):
        LatticeService.gauss_reduce((1, 2), (2, 4))


def _random_basis(rng, dim, diagonal=(10, 20), spread=3):
    return [
        [rng.randint(*diagonal) if i == j else rng.randint(-spread, spread) for j in range(dim)]
        for i in range(dim)
    ]


def _box_cvp(rows, target, center, radius):
    best = None
    ranges = [range(c - radius, c + radius + 1) for c in center]
    for xs in itertools.product(*ranges):
        v = [sum(x * r[j] for x, r in zip(xs, rows)) for j in range(len(target))]
        dist = sum((a - b) ** 2 for a, b in zip(v, target))
        best = dist if best is None else min(best, dist)
    return best


def test_cvp_exact_matches_brute_force_on_random_3d_instances():
    # Diagonally dominant rows keep the optimum within 4 steps of the planted point.
    rng = random.Random(11)
    for _ in range(200):
        rows = _random_basis(rng, 3)
        planted = [rng.randint(-5, 5) for _ in range(3)]
        target = [
            sum(x * r[j] for x, r in zip(planted, rows)) + rng.randint(-2, 2) for j in range(3)
        ]
        solution = LatticeService.cvp_exact(_lattice(*rows), target)
        assert solution.exact
        assert solution.sq_distance == _box_cvp(rows, target, planted, 4)


def test_babai_stays_within_lll_factor_of_closest_vector():
    rng = random.Random(12)
    for _ in range(50):
        rows = [[rng.randint(-30, 30) for _ in range(4)] for _ in range(4)]
        basis = _lattice(*rows)
        if LatticeService.gram_determinant(basis) == 0:
            continue
        target = [rng.randint(-500, 500) for _ in range(4)]
        exact = LatticeService.cvp_exact(basis, target)
        babai = LatticeService.babai_nearest_plane(LatticeService.lll_reduce(basis), target)
        assert exact.sq_distance <= babai.sq_distance <= 2**4 * exact.sq_distance
        assert LatticeService.contains(basis, babai.vector)


def test_lll_preserves_determinant():
    rng = random.Random(13)
    checked = 0
    while checked < 100:
        basis = _lattice(*[[rng.randint(-50, 50) for _ in range(6)] for _ in range(6)])
        gram = LatticeService.gram_determinant(basis)
        if gram == 0:
            continue
        reduced, transform = LatticeService.lll_reduce_with_transform(basis)
        assert LatticeService.gram_determinant(reduced) == gram
        assert LatticeService.lattice_volume(reduced) == LatticeService.lattice_volume(basis)
        assert abs(int(_zz_matrix(transform).det())) == 1
        checked += 1
