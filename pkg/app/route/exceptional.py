from fractions import Fraction
from typing import Annotated, Optional

import typer

from app.client.files import poly_to_text, write_csv, write_text
from app.client.logger import logger
from app.route.options import (
    ConfigOpt,
    DeltaExpOpt,
    DeltaOpt,
    GridOpt,
    HOpt,
    NOpt,
    OutOpt,
    PrimeBitsOpt,
    PrimeOpt,
    ReferenceOpt,
    SeedOpt,
    command_errors,
    flag,
)
from app.service.attack_service import AttackService
from app.service.exceptional_service import ExceptionalService
from app.service.field_service import FieldService
from app.types.request import FlatConfig, OscillateConfig

router = typer.Typer()

DEFAULT_TRANSITION_SAMPLES = 2000


@router.command("flat")
def flat(
    config: ConfigOpt = None,
    reference: ReferenceOpt = False,
    n: NOpt = None,
    h: HOpt = None,
    delta: DeltaOpt = None,
    delta_exp: DeltaExpOpt = None,
    prime_bits: PrimeBitsOpt = None,
    prime: PrimeOpt = None,
    seed: SeedOpt = None,
    grid: GridOpt = None,
    out: OutOpt = None,
    scan_multiple: Annotated[
        Optional[int],
        typer.Option("--scan-multiple", help="Scan [0, m*h) for the flat-to-random transition"),
    ] = None,
) -> None:
    """Flat polynomial: large coefficients, values below delta on [0, h)."""
    with command_errors():
        cfg = FlatConfig.load(
            config,
            reference=flag(reference),
            n=n,
            h=h,
            delta=delta,
            delta_exp=delta_exp,
            prime_bits=prime_bits,
            prime=prime,
            seed=seed,
            grid=grid,
            out=out,
            scan_multiple=scan_multiple,
        )
        if cfg.reference:
            spec = ExceptionalService.reference_flat_spec()
        else:
            ctx = cfg.resolve_prime()
            spec = ExceptionalService.random_flat_spec(
                ctx, cfg.n, cfg.h, cfg.resolve_delta(ctx), cfg.seed
            )
        f = ExceptionalService.construct_flat(spec, cfg.seed)
        p = spec.ctx.p
        write_text(cfg.out / "flat.txt", poly_to_text(f))
        xs = AttackService.evaluation_grid(0, spec.h, cfg.grid, cfg.seed)
        write_csv(
            cfg.out / "flat.csv",
            ("x", "value"),
            ((x, float(Fraction(FieldService.poly_eval(f, x), p))) for x in xs),
            cfg.record(),
        )
        if cfg.scan_multiple:
            transition = ExceptionalService.flat_transition(
                f, spec.h, cfg.scan_multiple, cfg.grid or DEFAULT_TRANSITION_SAMPLES
            )
            write_csv(cfg.out / "transition.csv", ("x", "value"), transition.profile, cfg.record())
            if transition.first_x is None:
                typer.echo(f"no value reached {transition.threshold} within {cfg.scan_multiple}h")
            else:
                typer.echo(
                    f"transition at x = {transition.first_x} "
                    f"({transition.first_x / spec.h:.1f}h)"
                )
        largest = max(abs(FieldService.centered_int(a, p)) for a in f.coeffs)
        logger.info("flat polynomial written", largest_coefficient_bits=largest.bit_length())


@router.command("oscillate")
def oscillate(
    config: ConfigOpt = None,
    reference: ReferenceOpt = False,
    n: NOpt = None,
    h: HOpt = None,
    delta: DeltaOpt = None,
    delta_exp: DeltaExpOpt = None,
    prime_bits: PrimeBitsOpt = None,
    prime: PrimeOpt = None,
    seed: SeedOpt = None,
    grid: GridOpt = None,
    out: OutOpt = None,
    d0: Annotated[Optional[int], typer.Option("--d0", help="d(0)")] = None,
) -> None:
    """Oscillating polynomial with an audit of f = d + p*c on [-h, h]."""
    with command_errors():
        cfg = OscillateConfig.load(
            config,
            reference=flag(reference),
            n=n,
            h=h,
            delta=delta,
            delta_exp=delta_exp,
            prime_bits=prime_bits,
            prime=prime,
            seed=seed,
            grid=grid,
            out=out,
            d0=d0,
        )
        if cfg.reference:
            spec = ExceptionalService.reference_oscillating_spec()
        else:
            ctx = cfg.resolve_prime()
            noise = None
            if cfg.delta is not None or cfg.delta_exp is not None:
                noise = cfg.resolve_delta(ctx)
            spec = ExceptionalService.oscillating_spec(ctx, cfg.n, cfg.d0, noise)
        osc = ExceptionalService.construct_oscillating(spec)
        p = spec.ctx.p
        write_text(cfg.out / "oscillate.txt", poly_to_text(osc.polynomial))
        rows = []
        for x in AttackService.evaluation_grid(-cfg.h, cfg.h + 1, cfg.grid, cfg.seed):
            d_x, c_x = ExceptionalService.oscillation_values(osc, x)
            value = FieldService.centered_int(FieldService.poly_eval(osc.polynomial, x), p)
            rows.append((x, float(Fraction(value, p)), d_x, c_x))
        write_csv(cfg.out / "oscillate.csv", ("x", "value", "d", "c"), rows, cfg.record())
        typer.echo(f"identity f = d + p*c holds on {len(rows)} points")
