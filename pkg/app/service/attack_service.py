import random
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
import mpmath
from sympy import Rational
from sympy.ntheory.continued_fraction import (
    continued_fraction_convergents,
    continued_fraction_iterator,
)

from app.client.logger import logger
from app.config import settings
from app.errors import DomainError
from app.model.schema import (
    ApproxRecoveryResult,
    CvpSolution,
    ExceptionalWitness,
    FpPolynomial,
    IntegerLattice,
    InterpolationInstance,
    NoiseDistribution,
    PrimeContext,
    RecoveryResult,
)
from app.service.field_service import FieldService
from app.service.lattice_service import LatticeService, _zz_matrix
from app.service.observation_service import ObservationService
from app.types.request import ApproxTrialRequest, ExactTrialRequest
from app.types.response import TrialOutcome


def _coefficient_weight(delta: int) -> int:
    # Scaled image of the 2*delta/p entry; unit weight keeps delta = 0 well posed.
    return 2 * delta if delta >= 1 else 1


def _scaled_lattice(
    ctx: PrimeContext,
    points: Sequence[int],
    observations: Sequence[int],
    low: int,
    high: int,
    delta: int,
) -> tuple[IntegerLattice, list[int]]:
    p = ctx.p
    if delta >= p:
        raise DomainError("delta must be below p")
    d, m = len(points), high - low + 1
    omega = _coefficient_weight(delta)
    rows = []
    for i in range(d):
        row = [0] * (d + m)
        row[i] = p * p
        rows.append(tuple(row))
    for j in range(low, high + 1):
        row = [p * pow(t, j, p) for t in points] + [0] * m
        row[d + j - low] = omega
        rows.append(tuple(row))
    target = [p * u for u in observations] + [0] * m
    return IntegerLattice(rows=tuple(rows), scale=p), target


def _read_coefficients(solution: CvpSolution, d: int, p: int) -> list[int]:
    # Power row j is the only row touching its weight column, so its
    # coordinate in the input basis is the coefficient a_j.
    if solution.coefficients is None:
        raise DomainError("CVP solution carries no basis coordinates")
    return [c % p for c in solution.coefficients[d:]]


def _unscaled_distance(
    solution: CvpSolution, target: Sequence[int], d: int, delta: int, p: int
) -> Fraction:
    # With delta = 0 the coefficient columns vanish from the unscaled lattice.
    if delta >= 1:
        return solution.sq_distance / (p * p)
    head = sum((v - t) ** 2 for v, t in zip(solution.vector[:d], target[:d]))
    return Fraction(head, p * p)


def trial_seeds(seed: int, count: int) -> list[int]:
    """Independent sub-seeds for the polynomial, points, noise and grid."""
    rng = random.Random(seed)
    return [rng.getrandbits(64) for _ in range(count)]


class AttackService:
    @staticmethod
    def generate_instance(
        f: FpPolynomial,
        h: int,
        points: Sequence[int],
        delta: int,
        seed: int,
        window: Optional[tuple[int, int]] = None,
        k: Optional[int] = None,
        distribution: Optional[NoiseDistribution] = None,
    ) -> InterpolationInstance:
        """Noisy view of f at the given points.

        k defaults to f.support_low. A larger k publishes a_0..a_{k-1} to the
        attacker as known coefficients.
        """
        observations = ObservationService.observe_points(f, points, delta, seed, distribution)
        k = f.support_low if k is None else k
        if k < f.support_low or k > f.degree:
            raise DomainError("need support_low <= k <= n")
        return InterpolationInstance(
            ctx=f.ctx,
            n=f.degree,
            k=k,
            h=h,
            delta=delta,
            points=tuple(points),
            observations=tuple(o.u for o in observations),
            window=window,
            known_low=tuple(f.coeffs[:k]) if k > f.support_low else (),
        )

    @staticmethod
    def _adjusted_observations(inst: InterpolationInstance) -> list[int]:
        p = inst.ctx.p
        if not inst.known_low:
            return list(inst.observations)
        known = FpPolynomial(ctx=inst.ctx, coeffs=inst.known_low)
        return [
            (u - FieldService.poly_eval(known, t)) % p
            for t, u in zip(inst.points, inst.observations)
        ]

    @staticmethod
    def build_interpolation_lattice(
        inst: InterpolationInstance,
    ) -> tuple[IntegerLattice, list[int]]:
        """Uniformly p-scaled basis: p^2 e_i rows, then one row per degree k..n.

        Power row j holds p*(t_i^j mod p) in the first d columns and 2*delta in
        column d + j - k. The target is p*(u_1..u_d, 0..0).
        """
        return _scaled_lattice(
            inst.ctx,
            inst.points,
            AttackService._adjusted_observations(inst),
            inst.k,
            inst.n,
            inst.delta,
        )

    @staticmethod
    def build_approx_lattice(
        points: Sequence[int],
        observations: Sequence[int],
        n: int,
        ctx: PrimeContext,
        delta: int,
    ) -> tuple[IntegerLattice, list[int]]:
        if len(points) < n + 1:
            raise DomainError(f"need at least n+1 = {n + 1} points")
        if len(points) < n + 2:
            logger.warn("d = n+1 leaves no redundancy for approximate recovery", n=n)
        return _scaled_lattice(ctx, points, observations, 0, n, delta)

    @staticmethod
    def approx_point_lattice(
        points: Sequence[int], n: int, ctx: PrimeContext
    ) -> IntegerLattice:
        """Generators of the first-d-columns lattice: p e_i and (t_i^j mod p)_i."""
        p, d = ctx.p, len(points)
        rows = [tuple(p if c == i else 0 for c in range(d)) for i in range(d)]
        rows += [tuple(pow(t, j, p) for t in points) for j in range(n + 1)]
        return IntegerLattice(rows=tuple(rows))

    @staticmethod
    def lagrange_basis(points: Sequence[int], n: int, ctx: PrimeContext) -> IntegerLattice:
        """Square basis [[p I, 0], [M, I]] of the first-d-columns lattice.

        M holds the Lagrange basis polynomials of the last n+1 nodes evaluated
        at the first d-n-1 points.
        """
        p, d = ctx.p, len(points)
        free = d - n - 1
        if free < 0:
            raise DomainError(f"need at least n+1 = {n + 1} points")
        nodes = [t % p for t in points[free:]]
        if len(set(nodes)) != len(nodes):
            raise DomainError("the last n+1 points must be distinct modulo p")
        rows = [tuple(p if c == i else 0 for c in range(d)) for i in range(free)]
        for j, xj in enumerate(nodes):
            denominator = 1
            for l, xl in enumerate(nodes):
                if l != j:
                    denominator = denominator * (xj - xl) % p
            scale = FieldService.mod_inverse(denominator, ctx)
            values = []
            for t in points[:free]:
                numerator = scale
                for l, xl in enumerate(nodes):
                    if l != j:
                        numerator = numerator * (t - xl) % p
                values.append(numerator)
            rows.append(tuple(values) + tuple(int(c == j) for c in range(n + 1)))
        return IntegerLattice(rows=tuple(rows))

    @staticmethod
    def regime_holds(inst: InterpolationInstance) -> bool:
        """h^k > delta * p^eps, the regime where exact recovery is guaranteed."""
        with mpmath.workdps(settings.LOG_PRECISION_DIGITS):
            lhs = inst.k * mpmath.log(inst.h) if inst.h > 1 else mpmath.mpf(0)
            rhs = mpmath.log(max(inst.delta, 1)) + settings.REGIME_EPSILON * mpmath.log(
                inst.ctx.p
            )
            return bool(lhs > rhs)

    @staticmethod
    def recover_coefficients(inst: InterpolationInstance) -> RecoveryResult:
        p = inst.ctx.p
        with logger.span(
            "recover_coefficients n={n} k={k} d={d}", n=inst.n, k=inst.k, d=inst.d
        ):
            if not AttackService.regime_holds(inst):
                logger.warn(
                    "h^k <= delta * p^eps: exact recovery is not guaranteed",
                    h=inst.h,
                    k=inst.k,
                    eps=settings.REGIME_EPSILON,
                )
            if inst.d < inst.m + 1:
                logger.warn("d = n-k+1 leaves no redundancy in the lattice", d=inst.d)
            lattice, target = AttackService.build_interpolation_lattice(inst)
            solution = LatticeService.solve_cvp(lattice, target)
            distance = _unscaled_distance(solution, target, inst.d, inst.delta, p)
            recovered = _read_coefficients(solution, inst.d, p)
            low = list(inst.known_low) or [0] * inst.k
            candidate = FpPolynomial(
                ctx=inst.ctx, coeffs=tuple(low + recovered), support_low=0 if inst.known_low else inst.k
            )
            residuals = [
                FieldService.dist_mod(FieldService.poly_eval(candidate, t) - u, p)
                for t, u in zip(inst.points, inst.observations)
            ]
            bound_sq = (inst.d + inst.m) * inst.delta**2
            result = RecoveryResult(
                coefficients=tuple(recovered),
                candidate=candidate,
                cvp_sq_distance=distance,
                verified=all(r <= inst.delta for r in residuals),
                within_residual_bound=all(r * r <= bound_sq for r in residuals),
                max_residual=max(residuals),
                method=solution.method,
                exact=solution.exact,
            )
            logger.info(
                "recovery finished",
                verified=result.verified,
                within_residual_bound=result.within_residual_bound,
                method=result.method.value,
            )
            return result

    @staticmethod
    def evaluation_grid(
        low: int, high: int, grid_size: Optional[int], seed: int
    ) -> list[int]:
        """All of [low, high) when small enough, else a seeded sorted subsample."""
        size = high - low
        if grid_size is None:
            if size <= settings.GRID_ENUMERATION_LIMIT:
                return list(range(low, high))
            grid_size = settings.GRID_SAMPLE_SIZE
        if grid_size >= size:
            return list(range(low, high))
        rng = random.Random(seed)
        return sorted(rng.sample(range(low, high), grid_size))

    @staticmethod
    def approximate_recover(
        inst: InterpolationInstance,
        truth: FpPolynomial,
        grid_size: Optional[int] = None,
        seed: int = 0,
    ) -> ApproxRecoveryResult:
        """Find f~ close to the observations, then profile |f~(t) - f(t)|_p / p.

        The instance's k is ignored: every coefficient a_0..a_n is unknown.
        """
        ctx, p = inst.ctx, inst.ctx.p
        with logger.span("approximate_recover n={n} d={d}", n=inst.n, d=inst.d):
            lattice, target = AttackService.build_approx_lattice(
                inst.points, inst.observations, inst.n, ctx, inst.delta
            )
            solution = LatticeService.solve_cvp(lattice, target)
            distance = _unscaled_distance(solution, target, inst.d, inst.delta, p)
            recovered = _read_coefficients(solution, inst.d, p)
            candidate = FpPolynomial(ctx=ctx, coeffs=tuple(recovered))
            verified = all(
                FieldService.dist_mod(FieldService.poly_eval(candidate, t) - u, p) <= inst.delta
                for t, u in zip(inst.points, inst.observations)
            )
            size = max(len(candidate.coeffs), len(truth.coeffs))
            a = list(candidate.coeffs) + [0] * (size - len(candidate.coeffs))
            b = list(truth.coeffs) + [0] * (size - len(truth.coeffs))
            difference = FpPolynomial(
                ctx=ctx, coeffs=tuple((x - y) % p for x, y in zip(a, b))
            )
            low, high = inst.window_bounds
            profile = []
            hits = 0
            for t in AttackService.evaluation_grid(low, high, grid_size, seed):
                error = FieldService.dist_mod(FieldService.poly_eval(difference, t), p)
                hits += error <= inst.delta
                profile.append((t, Fraction(error, p)))
            fraction = hits / len(profile)
            logger.info("approximate recovery profiled", points=len(profile), success_fraction=fraction)
            return ApproxRecoveryResult(
                candidate=candidate,
                error_profile=tuple(profile),
                success_fraction=fraction,
                verified=verified,
                cvp_sq_distance=distance,
                method=solution.method,
                exact=solution.exact,
            )

    @staticmethod
    def vandermonde_witness(f: FpPolynomial, xs: Sequence[int]) -> ExceptionalWitness:
        """Cramer's rule on l+1 evaluation points.

        With V the integer Vandermonde matrix of xs and z_j the centered values
        f(x_j), A_i * det V = det V_i (mod p) where V_i has column i replaced by z.
        """
        p, ell = f.ctx.p, f.degree
        if len(xs) != ell + 1 or len(set(xs)) != len(xs):
            raise DomainError(f"need {ell + 1} distinct points")
        z = [FieldService.centered_int(FieldService.poly_eval(f, x), p) for x in xs]
        vander = [[x**i for i in range(ell + 1)] for x in xs]
        v = int(_zz_matrix(vander).det())
        if v % p == 0:
            raise DomainError("Vandermonde determinant vanishes modulo p")
        u = []
        for i in range(ell + 1):
            replaced = [row[:i] + [zj] + row[i + 1 :] for row, zj in zip(vander, z)]
            u.append(int(_zz_matrix(replaced).det()))
        if v < 0:
            v, u = -v, [-x for x in u]
        return ExceptionalWitness(v=v, u=tuple(u), bounds_met=tuple(None for _ in u))

    @staticmethod
    def _candidate_multipliers(
        coeffs: Sequence[int], constrained: Sequence[int], bounds, v_bound: int, p: int
    ) -> set[int]:
        candidates: set[int] = set()
        minimal = []
        for i in constrained:
            a = coeffs[i]
            if a == 0:
                continue
            found = set()
            for vec in LatticeService.gauss_reduce((p, 0), (a, 1)):
                if 1 <= abs(vec[1]) <= v_bound:
                    found.add(abs(vec[1]))
            for convergent in continued_fraction_convergents(
                continued_fraction_iterator(Rational(a, p))
            ):
                q = int(convergent.q)
                if q > v_bound:
                    break
                found.add(q)
            candidates |= found
            good = [
                q for q in found if abs(FieldService.centered_int(a * q, p)) <= bounds[i]
            ]
            if good:
                minimal.append(min(good))
        if minimal:
            common = 1
            for q in minimal:
                common = int(gmpy2.lcm(common, q))
            if common <= v_bound:
                candidates.add(common)
        return candidates

    @staticmethod
    def detect_exceptional_structure(
        f: FpPolynomial, v_bound: int, u_bounds: Sequence[Optional[int]]
    ) -> Optional[ExceptionalWitness]:
        """Smallest v <= v_bound with |centered(A_i v)| <= u_bounds[i] for all i.

        u_bounds[i] = None leaves coefficient i unconstrained. Small v_bound is
        scanned exhaustively; otherwise candidates come from 2D reduction of
        [[p, 0], [A_i, 1]] and continued-fraction convergents of A_i/p.
        """
        p, coeffs = f.ctx.p, f.coeffs
        if v_bound < 1:
            raise DomainError("v_bound must be at least 1")
        if len(u_bounds) > len(coeffs):
            raise DomainError("more bounds than coefficients")
        bounds = list(u_bounds) + [None] * (len(coeffs) - len(u_bounds))
        constrained = [i for i, b in enumerate(bounds) if b is not None]

        def witness(v: int) -> ExceptionalWitness:
            u = tuple(FieldService.centered_int(a * v, p) for a in coeffs)
            met = tuple(None if b is None else abs(ui) <= b for ui, b in zip(u, bounds))
            return ExceptionalWitness(v=v, u=u, bounds_met=met)

        with logger.span("detect_exceptional_structure v_bound={v_bound}", v_bound=v_bound):
            if v_bound <= settings.DETECTOR_SCAN_CAP:
                residues = [0] * len(constrained)
                steps = [coeffs[i] for i in constrained]
                limits = [bounds[i] for i in constrained]
                for v in range(1, v_bound + 1):
                    ok = True
                    for idx in range(len(residues)):
                        r = (residues[idx] + steps[idx]) % p
                        residues[idx] = r
                        if ok and min(r, p - r) > limits[idx]:
                            ok = False
                    if ok:
                        return witness(v)
                return None
            candidates = AttackService._candidate_multipliers(
                coeffs, constrained, bounds, v_bound, p
            )
            for v in sorted(candidates):
                if all(
                    abs(FieldService.centered_int(coeffs[i] * v, p)) <= bounds[i]
                    for i in constrained
                ):
                    return witness(v)
            return None

    @staticmethod
    def run_exact_trial(request: ExactTrialRequest) -> TrialOutcome:
        """One seeded exact-recovery trial; picklable for process pools."""
        ctx = PrimeContext(p=request.p)
        poly_seed, point_seed, noise_seed = trial_seeds(request.seed, 3)
        f = FieldService.random_polynomial(ctx, request.n, request.k, poly_seed)
        low, high = request.window or (-request.h, request.h + 1)
        points = ObservationService.sample_window_points(low, high, request.d, point_seed)
        inst = AttackService.generate_instance(
            f, request.h, points, request.delta, noise_seed, window=request.window
        )
        result = AttackService.recover_coefficients(inst)
        success = result.coefficients == tuple(f.coeffs[request.k :])
        return TrialOutcome(
            seed=request.seed,
            d=request.d,
            success=success,
            verified=result.verified,
            cvp_sq_distance=str(result.cvp_sq_distance),
            method=result.method,
            exact=result.exact,
        )

    @staticmethod
    def approx_trial(
        request: ApproxTrialRequest,
    ) -> tuple[ApproxRecoveryResult, FpPolynomial]:
        """One seeded approximate-recovery run and its secret."""
        ctx = PrimeContext(p=request.p)
        poly_seed, point_seed, noise_seed, grid_seed = trial_seeds(request.seed, 4)
        f = FieldService.random_polynomial(ctx, request.n, 0, poly_seed)
        low, high = request.window or (-request.h, request.h + 1)
        points = ObservationService.sample_window_points(low, high, request.d, point_seed)
        inst = AttackService.generate_instance(
            f, request.h, points, request.delta, noise_seed, window=request.window
        )
        return AttackService.approximate_recover(inst, f, request.grid, grid_seed), f

    @staticmethod
    def approx_outcome(
        request: ApproxTrialRequest, result: ApproxRecoveryResult
    ) -> TrialOutcome:
        """A trial succeeds when at least half of the profiled grid is within delta."""
        return TrialOutcome(
            seed=request.seed,
            d=request.d,
            success=result.success_fraction >= 0.5,
            verified=result.verified,
            cvp_sq_distance=str(result.cvp_sq_distance),
            method=result.method,
            exact=result.exact,
            success_fraction=result.success_fraction,
        )

    @staticmethod
    def run_approx_trial(request: ApproxTrialRequest) -> TrialOutcome:
        result, _ = AttackService.approx_trial(request)
        return AttackService.approx_outcome(request, result)
