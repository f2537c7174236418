from fractions import Fraction

import typer

from app.client.files import poly_to_text, write_csv, write_summary, write_text
from app.dependencies import trial_pool
from app.route.options import (
    EXIT_ATTACK_FAILED,
    BOpt,
    ConfigOpt,
    DeltaExpOpt,
    DeltaOpt,
    DOpt,
    GridOpt,
    HOpt,
    NOpt,
    OutOpt,
    PrimeBitsOpt,
    PrimeOpt,
    SeedOpt,
    TrialsOpt,
    WindowOpt,
    WorkersOpt,
    command_errors,
)
from app.route.attack import TRIAL_COLUMNS
from app.service.analysis_service import AnalysisService
from app.service.attack_service import AttackService
from app.types.request import ApproxConfig, ApproxTrialRequest
from app.types.response import AttackSummary

router = typer.Typer()


@router.command("approx")
def approx(
    config: ConfigOpt = None,
    n: NOpt = None,
    h: HOpt = None,
    b: BOpt = None,
    window: WindowOpt = None,
    delta: DeltaOpt = None,
    delta_exp: DeltaExpOpt = None,
    prime_bits: PrimeBitsOpt = None,
    prime: PrimeOpt = None,
    d: DOpt = None,
    seed: SeedOpt = None,
    trials: TrialsOpt = None,
    grid: GridOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
) -> None:
    """Approximate recovery with all coefficients unknown, plus its error profile.

    The profile CSV of the first trial has columns t, t scaled by the window
    (or by h) and |f~(t) - f(t)|_p / p.
    """
    with command_errors():
        cfg = ApproxConfig.load(
            config,
            n=n,
            h=h,
            b=b,
            window=window,
            delta=delta,
            delta_exp=delta_exp,
            prime_bits=prime_bits,
            prime=prime,
            d=d,
            seed=seed,
            trials=trials,
            grid=grid,
            out=out,
            workers=workers,
        )
        ctx = cfg.resolve_prime()
        noise = cfg.resolve_delta(ctx)
        requests = [
            ApproxTrialRequest(
                p=ctx.p,
                n=cfg.n,
                h=cfg.h,
                delta=noise,
                d=cfg.d,
                seed=cfg.seed + i,
                window=cfg.window_bounds(),
                grid=cfg.grid,
            )
            for i in range(cfg.trials)
        ]
        first, secret = AttackService.approx_trial(requests[0])
        outcomes = [AttackService.approx_outcome(requests[0], first)]
        if len(requests) > 1:
            trial_pool.init(cfg.workers)
            try:
                outcomes += trial_pool.map(AttackService.run_approx_trial, requests[1:])
            finally:
                trial_pool.close()

        scale = cfg.window or cfg.h or 1
        write_csv(
            cfg.out / "profile.csv",
            ("t", "x", "error"),
            ((t, float(Fraction(t, scale)), float(err)) for t, err in first.error_profile),
            cfg.record(),
        )
        write_csv(
            cfg.out / "trials.csv",
            (*TRIAL_COLUMNS, "success_fraction"),
            (
                (o.seed, o.d, int(o.success), int(o.verified), o.cvp_sq_distance, o.method.value, int(o.exact), o.success_fraction)
                for o in outcomes
            ),
            cfg.record(),
        )
        write_text(cfg.out / "secret.txt", poly_to_text(secret))
        write_text(cfg.out / "recovered.txt", poly_to_text(first.candidate))
        successes = sum(o.success for o in outcomes)
        low, high = AnalysisService.wilson_interval(successes, cfg.trials)
        mean_fraction = sum(o.success_fraction for o in outcomes) / len(outcomes)
        write_summary(
            cfg.out / "summary.json",
            AttackSummary(
                n=cfg.n,
                k=0,
                h=cfg.h,
                delta=noise,
                d=cfg.d,
                seed=cfg.seed,
                success=successes == cfg.trials,
                cvp_sq_distance=str(first.cvp_sq_distance) if cfg.trials == 1 else None,
                success_fraction=mean_fraction,
                trials=cfg.trials,
                successes=successes,
                wilson_low=low,
                wilson_high=high,
            ),
        )
        typer.echo(f"mean success fraction {mean_fraction:.4f} over {cfg.trials} trial(s)")
    if successes == 0:
        raise typer.Exit(code=EXIT_ATTACK_FAILED)
