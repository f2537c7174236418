from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import gmpy2
import mpmath
from gmpy2 import mpq, mpz
from sympy import QQ, ZZ, Matrix
from sympy.matrices.normalforms import hermite_normal_form
from sympy.polys.matrices import DomainMatrix

from app.client.logger import logger
from app.config import settings
from app.errors import DomainError, EnumerationRefusedError, RankDeficientError
from app.model.schema import CvpMethod, CvpSolution, IntegerLattice

Vector = Sequence[int]


@dataclass
class _Reduction:
    """Rows with their integral Gram-Schmidt data.

    d[i] is the Gram determinant of the first i rows (d[0] = 1) and
    lam[i][j] = d[j+1] * mu_ij for j < i, both exact integers.
    """

    rows: list[list[mpz]]
    transform: list[list[mpz]]
    d: list[mpz]
    lam: list[list[mpz]]


class _BudgetExhausted(Exception):
    pass


def _dot(x: Sequence, y: Sequence) -> mpz:
    acc = mpz(0)
    for a, b in zip(x, y):
        acc += a * b
    return acc


def _round(q) -> mpz:
    """floor(q + 1/2) for an exact rational."""
    q = mpq(q)
    return (2 * q.numerator + q.denominator) // (2 * q.denominator)


def _to_fraction(q) -> Fraction:
    q = mpq(q)
    return Fraction(int(q.numerator), int(q.denominator))


def _lovasz_parameter(delta_param) -> mpq:
    if delta_param is None:
        delta_param = settings.LLL_DELTA
    delta = mpq(Fraction(str(delta_param)))
    if not mpq(1, 4) < delta < 1:
        raise DomainError(f"LLL parameter {delta_param} must lie in (1/4, 1)")
    return delta


def _integral_gso(rows: list[list[mpz]]) -> tuple[list[mpz], list[list[mpz]]]:
    n = len(rows)
    d = [mpz(1)] + [mpz(0)] * n
    lam = [[mpz(0)] * n for _ in range(n)]
    for k in range(n):
        for j in range(k + 1):
            u = _dot(rows[k], rows[j])
            for i in range(j):
                u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
            if j < k:
                lam[k][j] = u
            elif u == 0:
                raise RankDeficientError(k)
            else:
                d[k + 1] = u
    return d, lam


def _integral_lll(source: Sequence[Vector], delta: mpq) -> _Reduction:
    # Integral LLL: every quantity stays an exact integer (Cohen, Alg. 2.6.7).
    num, den = delta.numerator, delta.denominator
    b = [[mpz(x) for x in row] for row in source]
    n = len(b)
    h = [[mpz(int(i == j)) for j in range(n)] for i in range(n)]
    d = [mpz(1)] + [mpz(0)] * n
    lam = [[mpz(0)] * n for _ in range(n)]

    def red(k: int, l: int) -> None:
        if 2 * abs(lam[k][l]) > d[l + 1]:
            q = (2 * lam[k][l] + d[l + 1]) // (2 * d[l + 1])
            b[k] = [x - q * y for x, y in zip(b[k], b[l])]
            h[k] = [x - q * y for x, y in zip(h[k], h[l])]
            lam[k][l] -= q * d[l + 1]
            for i in range(l):
                lam[k][i] -= q * lam[l][i]

    def swap(k: int, kmax: int) -> None:
        b[k], b[k - 1] = b[k - 1], b[k]
        h[k], h[k - 1] = h[k - 1], h[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lmb = lam[k][k - 1]
        big = (d[k - 1] * d[k + 1] + lmb * lmb) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lmb * t) // d[k]
            lam[i][k - 1] = (big * t + lmb * lam[i][k]) // d[k + 1]
        d[k] = big

    if n == 0:
        return _Reduction(b, h, d, lam)
    d[1] = _dot(b[0], b[0])
    if d[1] == 0:
        raise RankDeficientError(0)
    k, kmax, swaps = 1, 0, 0
    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k + 1):
                u = _dot(b[k], b[j])
                for i in range(j):
                    u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
                if j < k:
                    lam[k][j] = u
                elif u == 0:
                    raise RankDeficientError(k)
                else:
                    d[k + 1] = u
        red(k, k - 1)
        if den * d[k + 1] * d[k - 1] < num * d[k] * d[k] - den * lam[k][k - 1] ** 2:
            swap(k, kmax)
            swaps += 1
            k = max(1, k - 1)
            continue
        for l in range(k - 2, -1, -1):
            red(k, l)
        k += 1
    logger.debug("lll finished", rows=n, swaps=swaps)
    return _Reduction(b, h, d, lam)


def _gso_coordinates(red: _Reduction, target: Vector):
    """mu, squared GSO norms and the target's GSO coordinates as mpq."""
    n = len(red.rows)
    d, lam = red.d, red.lam
    mu = [[mpq(lam[i][j], d[j + 1]) for j in range(i)] for i in range(n)]
    bnorm = [mpq(d[i + 1], d[i]) for i in range(n)]
    t = [mpz(x) for x in target]
    proj: list[mpq] = []
    for i in range(n):
        value = mpq(_dot(t, red.rows[i]))
        for j in range(i):
            value -= mu[i][j] * proj[j]
        proj.append(value)
    centers = [proj[i] / bnorm[i] for i in range(n)]
    return mu, bnorm, centers


def _center(level: int, x: list, mu, centers) -> mpq:
    value = centers[level]
    for j in range(level + 1, len(x)):
        value -= x[j] * mu[j][level]
    return value


def _nearest_plane(mu, bnorm, centers) -> tuple[list[mpz], mpq]:
    n = len(centers)
    x = [mpz(0)] * n
    partial = mpq(0)
    for level in range(n - 1, -1, -1):
        c = _center(level, x, mu, centers)
        x[level] = _round(c)
        partial += bnorm[level] * (x[level] - c) ** 2
    return x, partial


def _zigzag(center) -> Iterator[mpz]:
    # Candidates in nondecreasing distance from center.
    x0 = _round(center)
    yield x0
    first = 1 if center >= x0 else -1
    step = 1
    while True:
        yield x0 + first * step
        yield x0 - first * step
        step += 1


def _combine(coefficients: Sequence, rows: Sequence[Sequence]) -> list[mpz]:
    width = len(rows[0])
    out = [mpz(0)] * width
    for c, row in zip(coefficients, rows):
        if c:
            for j in range(width):
                out[j] += c * row[j]
    return out


def _zz_matrix(rows: Sequence[Sequence[int]]) -> DomainMatrix:
    return DomainMatrix(
        [[ZZ(int(x)) for x in row] for row in rows], (len(rows), len(rows[0])), ZZ
    )


class LatticeService:
    """LLL, Babai nearest plane, exact CVP and volumes over integer lattices.

    All Gram-Schmidt quantities are exact: integral d_i / lambda_ij inside
    LLL, gmpy2 rationals elsewhere.
    """

    @staticmethod
    def gram_schmidt(
        basis: IntegerLattice,
    ) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
        rows = [[mpq(x) for x in row] for row in basis.rows]
        n = len(rows)
        bstar: list[list[mpq]] = []
        norms: list[mpq] = []
        mu = [[Fraction(0)] * n for _ in range(n)]
        for i, row in enumerate(rows):
            v = list(row)
            for j in range(i):
                coeff = _dot(row, bstar[j]) / norms[j]
                mu[i][j] = _to_fraction(coeff)
                v = [a - coeff * w for a, w in zip(v, bstar[j])]
            norm = _dot(v, v)
            if norm == 0:
                raise RankDeficientError(i)
            mu[i][i] = Fraction(1)
            bstar.append(v)
            norms.append(norm)
        return [[_to_fraction(x) for x in v] for v in bstar], mu

    @staticmethod
    def lll_reduce(basis: IntegerLattice, delta_param=None) -> IntegerLattice:
        return LatticeService.lll_reduce_with_transform(basis, delta_param)[0]

    @staticmethod
    def lll_reduce_with_transform(
        basis: IntegerLattice, delta_param=None
    ) -> tuple[IntegerLattice, list[list[int]]]:
        """LLL-reduce and return the unimodular U with reduced = U * basis."""
        red = LatticeService._reduce(basis, delta_param)
        reduced = IntegerLattice(
            rows=tuple(tuple(int(x) for x in row) for row in red.rows), scale=basis.scale
        )
        return reduced, [[int(x) for x in row] for row in red.transform]

    @staticmethod
    def _reduce(basis: IntegerLattice, delta_param=None) -> _Reduction:
        delta = _lovasz_parameter(delta_param)
        with logger.span(
            "lll_reduce {rows}x{cols}", rows=basis.row_count, cols=basis.dimension
        ):
            return _integral_lll(basis.rows, delta)

    @staticmethod
    def babai_nearest_plane(reduced: IntegerLattice, target: Vector) -> CvpSolution:
        if len(target) != reduced.dimension:
            raise DomainError(
                f"target has length {len(target)}, lattice dimension is {reduced.dimension}"
            )
        rows = [[mpz(x) for x in row] for row in reduced.rows]
        d, lam = _integral_gso(rows)
        red = _Reduction(rows, [], d, lam)
        mu, bnorm, centers = _gso_coordinates(red, target)
        x, _ = _nearest_plane(mu, bnorm, centers)
        return LatticeService._solution(
            rows, x, target, exact=False, method=CvpMethod.BABAI, coefficients=x
        )

    @staticmethod
    def cvp_exact(basis: IntegerLattice, target: Vector) -> CvpSolution:
        """Exact CVP by LLL plus Schnorr-Euchner enumeration.

        The search radius starts at the Babai distance and is inclusive, so
        every minimizer is visited; among ties the lexicographically smallest
        coefficient vector (in the input basis) wins. When the node budget runs
        out the best vector seen so far comes back with exact=False.
        """
        if len(target) != basis.dimension:
            raise DomainError(
                f"target has length {len(target)}, lattice dimension is {basis.dimension}"
            )
        if basis.row_count > settings.ENUM_MAX_DIM:
            raise EnumerationRefusedError(
                "CVP enumeration", basis.row_count, settings.ENUM_MAX_DIM
            )
        red = LatticeService._reduce(basis)
        mu, bnorm, centers = _gso_coordinates(red, target)
        babai_x, radius = _nearest_plane(mu, bnorm, centers)
        n = len(red.rows)

        state = {"best": radius, "ties": set(), "nodes": 0}
        x = [mpz(0)] * n
        budget = settings.ENUM_MAX_NODES

        def search(level: int, partial: mpq) -> None:
            center = _center(level, x, mu, centers)
            for xi in _zigzag(center):
                state["nodes"] += 1
                if state["nodes"] > budget:
                    raise _BudgetExhausted
                total = partial + bnorm[level] * (xi - center) ** 2
                if total > state["best"]:
                    break
                x[level] = xi
                if level == 0:
                    if total < state["best"]:
                        state["best"] = total
                        state["ties"] = set()
                    state["ties"].add(tuple(x))
                else:
                    search(level - 1, total)
            x[level] = mpz(0)

        exact = True
        with logger.span("cvp enumeration dim={dim}", dim=n):
            try:
                search(n - 1, mpq(0))
            except _BudgetExhausted:
                exact = False
                logger.warn(
                    "enumeration node budget exhausted, returning best vector found",
                    budget=budget,
                )
        ties = state["ties"] or {tuple(babai_x)}
        candidates = [
            tuple(int(c) for c in _combine(tie, red.transform)) for tie in ties
        ]
        coefficients = min(candidates)
        rows = [[mpz(v) for v in row] for row in basis.rows]
        solution = LatticeService._solution(
            rows,
            coefficients,
            target,
            exact=exact,
            method=CvpMethod.EXACT,
            coefficients=coefficients,
            nodes=state["nodes"],
        )
        if settings.VERIFY_CVP_MEMBERSHIP:
            solved = LatticeService.coefficients_of(basis, solution.vector)
            if solved is None or tuple(solved) != tuple(coefficients):
                raise AssertionError("enumeration returned a vector outside the lattice")
        return solution

    @staticmethod
    def solve_cvp(basis: IntegerLattice, target: Vector) -> CvpSolution:
        """cvp_exact within the enumeration cap, LLL + Babai above it."""
        if basis.row_count <= settings.ENUM_MAX_DIM:
            return LatticeService.cvp_exact(basis, target)
        logger.warn(
            "dimension {dim} above enumeration cap, falling back to Babai",
            dim=basis.row_count,
        )
        red = LatticeService._reduce(basis)
        mu, bnorm, centers = _gso_coordinates(red, target)
        x, _ = _nearest_plane(mu, bnorm, centers)
        coefficients = [int(c) for c in _combine(x, red.transform)]
        return LatticeService._solution(
            red.rows, x, target, exact=False, method=CvpMethod.BABAI, coefficients=coefficients
        )

    @staticmethod
    def _solution(
        rows, x, target, exact: bool, method: CvpMethod, coefficients, nodes: int = 0
    ) -> CvpSolution:
        vector = _combine(x, rows)
        sq = sum((int(t) - int(v)) ** 2 for t, v in zip(target, vector))
        return CvpSolution(
            vector=tuple(int(v) for v in vector),
            sq_distance=Fraction(sq),
            exact=exact,
            method=method,
            coefficients=tuple(int(c) for c in coefficients),
            nodes=nodes,
        )

    @staticmethod
    def coefficients_of(basis: IntegerLattice, vector: Vector) -> Optional[list[int]]:
        """Exact solve of x * basis = vector; None unless x exists and is integral.

        The rows must be linearly independent.
        """
        r, s = basis.row_count, basis.dimension
        if len(vector) != s:
            raise DomainError("vector length does not match the lattice dimension")
        augmented = DomainMatrix(
            [
                [QQ(int(basis.rows[i][j])) for i in range(r)] + [QQ(int(vector[j]))]
                for j in range(s)
            ],
            (s, r + 1),
            QQ,
        )
        reduced, pivots = augmented.rref()
        if r in pivots:
            return None
        if len(pivots) < r:
            raise RankDeficientError(
                next(i for i in range(r) if i not in pivots)
            )
        solved = reduced.to_Matrix()
        x = []
        for row, col in enumerate(pivots):
            value = solved[row, r]
            if value.q != 1:
                return None
            x.append(int(value.p))
        return x

    @staticmethod
    def basis_from_generators(generators: IntegerLattice) -> IntegerLattice:
        """Full-rank basis (HNF) of the lattice spanned by possibly dependent rows."""
        hnf = hermite_normal_form(Matrix([list(row) for row in generators.rows]).T)
        rows = [
            tuple(int(hnf[i, j]) for i in range(hnf.rows))
            for j in range(hnf.cols)
            if any(hnf[i, j] != 0 for i in range(hnf.rows))
        ]
        if not rows:
            raise DomainError("the zero lattice has no basis")
        return IntegerLattice(rows=tuple(rows), scale=generators.scale)

    @staticmethod
    def contains(generators: IntegerLattice, vector: Vector) -> bool:
        basis = LatticeService.basis_from_generators(generators)
        return LatticeService.coefficients_of(basis, vector) is not None

    @staticmethod
    def gram_determinant(basis: IntegerLattice) -> int:
        rows = basis.rows
        gram = [[int(_dot(a, b)) for b in rows] for a in rows]
        return int(_zz_matrix(gram).det())

    @staticmethod
    def lattice_volume(basis: IntegerLattice):
        """Volume of (1/scale) * lattice.

        Exact Fraction when the Gram determinant is a perfect square, otherwise
        an mpmath value at LOG_PRECISION_DIGITS significant digits.
        """
        if all(x == 0 for row in basis.rows for x in row):
            logger.warn("volume of the zero lattice requested")
            return Fraction(0)
        if basis.row_count == basis.dimension:
            det = int(_zz_matrix(basis.rows).det())
            if det != 0:
                return Fraction(abs(det), basis.scale**basis.row_count)
        full = LatticeService.basis_from_generators(basis)
        gram = LatticeService.gram_determinant(full)
        denominator = basis.scale**full.row_count
        root = gmpy2.isqrt(gram)
        if root * root == gram:
            return Fraction(int(root), denominator)
        with mpmath.workdps(settings.LOG_PRECISION_DIGITS):
            return mpmath.sqrt(mpmath.mpf(gram)) / denominator

    @staticmethod
    def gauss_reduce(u: Vector, v: Vector) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Lagrange-Gauss reduction of a two-dimensional basis."""
        a = [mpz(x) for x in u]
        b = [mpz(x) for x in v]
        if _dot(a, a) > _dot(b, b):
            a, b = b, a
        if _dot(a, a) == 0:
            raise RankDeficientError(0)
        while True:
            q = _round(mpq(_dot(a, b), _dot(a, a)))
            b = [y - q * x for x, y in zip(a, b)]
            if _dot(b, b) == 0:
                raise RankDeficientError(1)
            if _dot(b, b) >= _dot(a, a):
                break
            a, b = b, a
        return tuple(int(x) for x in a), tuple(int(x) for x in b)
