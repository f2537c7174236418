from typing import Annotated

import typer

from app.client.files import write_instance
from app.client.logger import logger
from app.route.options import (
    ConfigOpt,
    DeltaExpOpt,
    DeltaOpt,
    DOpt,
    HOpt,
    KOpt,
    NOpt,
    OutOpt,
    PrimeBitsOpt,
    PrimeOpt,
    SeedOpt,
    command_errors,
    flag,
)
from app.service.attack_service import AttackService, trial_seeds
from app.service.field_service import FieldService
from app.service.observation_service import ObservationService
from app.types.request import GenConfig

router = typer.Typer()


@router.command("gen")
def gen(
    config: ConfigOpt = None,
    n: NOpt = None,
    k: KOpt = None,
    h: HOpt = None,
    delta: DeltaOpt = None,
    delta_exp: DeltaExpOpt = None,
    prime_bits: PrimeBitsOpt = None,
    prime: PrimeOpt = None,
    d: DOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    reveal_low: Annotated[
        bool, typer.Option("--reveal-low", help="Publish a_0..a_{k-1}")
    ] = False,
) -> None:
    """Write a seeded secret polynomial and its noisy observations."""
    with command_errors():
        cfg = GenConfig.load(
            config,
            n=n,
            k=k,
            h=h,
            delta=delta,
            delta_exp=delta_exp,
            prime_bits=prime_bits,
            prime=prime,
            d=d,
            seed=seed,
            out=out,
            reveal_low=flag(reveal_low),
        )
        ctx = cfg.resolve_prime()
        noise = cfg.resolve_delta(ctx)
        poly_seed, point_seed, noise_seed = trial_seeds(cfg.seed, 3)
        # Revealed low coefficients are random; hidden ones are zero.
        support = 0 if cfg.reveal_low else cfg.k
        f = FieldService.random_polynomial(ctx, cfg.n, support, poly_seed)
        points = ObservationService.sample_points(cfg.h, cfg.d, point_seed)
        inst = AttackService.generate_instance(
            f, cfg.h, points, noise, noise_seed, k=cfg.k
        )
        write_instance(cfg.out, f, inst, cfg.record())
        logger.info("instance written", out=str(cfg.out), d=cfg.d, bits=ctx.r)
