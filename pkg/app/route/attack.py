from pathlib import Path
from typing import Annotated, Optional

import typer

from app.client.files import poly_to_text, read_instance, write_csv, write_summary, write_text
from app.client.logger import logger
from app.dependencies import trial_pool
from app.route.options import (
    EXIT_ATTACK_FAILED,
    ConfigOpt,
    DeltaExpOpt,
    DeltaOpt,
    DMaxOpt,
    DMinOpt,
    DOpt,
    HOpt,
    KOpt,
    NOpt,
    OutOpt,
    PrimeBitsOpt,
    PrimeOpt,
    SeedOpt,
    TrialsOpt,
    WorkersOpt,
    command_errors,
)
from app.service.analysis_service import AnalysisService
from app.service.attack_service import AttackService
from app.types.request import AttackConfig, ExactTrialRequest, SweepConfig
from app.types.response import AttackSummary, TrialOutcome

router = typer.Typer()

TRIAL_COLUMNS = ("seed", "d", "success", "verified", "cvp_sq_distance", "method", "exact")


def _trial_rows(outcomes: list[TrialOutcome]):
    return (
        (o.seed, o.d, int(o.success), int(o.verified), o.cvp_sq_distance, o.method.value, int(o.exact))
        for o in outcomes
    )


def _run_trials(requests: list[ExactTrialRequest], workers: int) -> list[TrialOutcome]:
    trial_pool.init(workers)
    try:
        return trial_pool.map(AttackService.run_exact_trial, requests)
    finally:
        trial_pool.close()


def _attack_instance(cfg: AttackConfig) -> bool:
    inst, secret = read_instance(cfg.instance)
    result = AttackService.recover_coefficients(inst)
    if secret is not None:
        success = result.coefficients == tuple(secret.coeffs[inst.k :])
    else:
        success = result.verified
    write_text(cfg.out / "recovered.txt", poly_to_text(result.candidate))
    write_summary(
        cfg.out / "summary.json",
        AttackSummary(
            n=inst.n,
            k=inst.k,
            h=inst.h,
            delta=inst.delta,
            d=inst.d,
            seed=cfg.seed,
            success=success,
            cvp_sq_distance=str(result.cvp_sq_distance),
            successes=int(success),
        ),
    )
    if success:
        typer.echo("recovered")
    elif result.verified:
        typer.echo("failure: a different polynomial matches every observation")
    else:
        typer.echo(f"failure: residuals exceed delta (max {result.max_residual})")
    return success


def _attack_trials(cfg: AttackConfig) -> bool:
    ctx = cfg.resolve_prime()
    delta = cfg.resolve_delta(ctx)
    requests = [
        ExactTrialRequest(p=ctx.p, n=cfg.n, k=cfg.k, h=cfg.h, delta=delta, d=cfg.d, seed=cfg.seed + i)
        for i in range(cfg.trials)
    ]
    outcomes = _run_trials(requests, cfg.workers)
    successes = sum(o.success for o in outcomes)
    low, high = AnalysisService.wilson_interval(successes, cfg.trials)
    write_csv(cfg.out / "trials.csv", TRIAL_COLUMNS, _trial_rows(outcomes), cfg.record())
    write_summary(
        cfg.out / "summary.json",
        AttackSummary(
            n=cfg.n,
            k=cfg.k,
            h=cfg.h,
            delta=delta,
            d=cfg.d,
            seed=cfg.seed,
            success=successes == cfg.trials,
            cvp_sq_distance=outcomes[0].cvp_sq_distance if cfg.trials == 1 else None,
            trials=cfg.trials,
            successes=successes,
            wilson_low=low,
            wilson_high=high,
        ),
    )
    typer.echo(f"success {successes}/{cfg.trials} (95% Wilson [{low:.3f}, {high:.3f}])")
    return successes > 0


@router.command("attack")
def attack(
    config: ConfigOpt = None,
    instance: Annotated[
        Optional[Path], typer.Option("--instance", help="Instance directory from gen")
    ] = None,
    n: NOpt = None,
    k: KOpt = None,
    h: HOpt = None,
    delta: DeltaOpt = None,
    delta_exp: DeltaExpOpt = None,
    prime_bits: PrimeBitsOpt = None,
    prime: PrimeOpt = None,
    d: DOpt = None,
    seed: SeedOpt = None,
    trials: TrialsOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
) -> None:
    """Recover a_k..a_n from an instance, or run seeded trials.

    Exits with 1 when the attack fails: a single run that misses the secret,
    or a trial batch without any success.
    """
    with command_errors():
        cfg = AttackConfig.load(
            config,
            instance=instance,
            n=n,
            k=k,
            h=h,
            delta=delta,
            delta_exp=delta_exp,
            prime_bits=prime_bits,
            prime=prime,
            d=d,
            seed=seed,
            trials=trials,
            out=out,
            workers=workers,
        )
        success = _attack_instance(cfg) if cfg.instance else _attack_trials(cfg)
    if not success:
        raise typer.Exit(code=EXIT_ATTACK_FAILED)


@router.command("sweep")
def sweep(
    config: ConfigOpt = None,
    n: NOpt = None,
    k: KOpt = None,
    h: HOpt = None,
    delta: DeltaOpt = None,
    delta_exp: DeltaExpOpt = None,
    prime_bits: PrimeBitsOpt = None,
    prime: PrimeOpt = None,
    d_min: DMinOpt = None,
    d_max: DMaxOpt = None,
    seed: SeedOpt = None,
    trials: TrialsOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
) -> None:
    """Exact-recovery success rate across a range of d."""
    with command_errors():
        cfg = SweepConfig.load(
            config,
            n=n,
            k=k,
            h=h,
            delta=delta,
            delta_exp=delta_exp,
            prime_bits=prime_bits,
            prime=prime,
            d_min=d_min,
            d_max=d_max,
            seed=seed,
            trials=trials,
            out=out,
            workers=workers,
        )
        ctx = cfg.resolve_prime()
        noise = cfg.resolve_delta(ctx)
        ds = list(range(cfg.d_min, cfg.d_max + 1))
        requests = [
            ExactTrialRequest(p=ctx.p, n=cfg.n, k=cfg.k, h=cfg.h, delta=noise, d=d, seed=cfg.seed + i)
            for d in ds
            for i in range(cfg.trials)
        ]
        with logger.span("sweep d={d_min}..{d_max}", d_min=cfg.d_min, d_max=cfg.d_max):
            outcomes = _run_trials(requests, cfg.workers)
        rows = []
        for d in ds:
            successes = sum(o.success for o in outcomes if o.d == d)
            low, high = AnalysisService.wilson_interval(successes, cfg.trials)
            rows.append((d, cfg.trials, successes, successes / cfg.trials, f"{low:.6f}", f"{high:.6f}"))
        write_csv(
            cfg.out / "sweep.csv",
            ("d", "trials", "successes", "rate", "wilson_low", "wilson_high"),
            rows,
            cfg.record(),
        )
        write_csv(cfg.out / "trials.csv", TRIAL_COLUMNS, _trial_rows(outcomes), cfg.record())
