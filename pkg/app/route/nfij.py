import random
from typing import Annotated, Optional

import mpmath
import typer

from app.client.files import write_csv
from app.model.schema import IntervalPair
from app.route.options import (
    ConfigOpt,
    OutOpt,
    PrimeBitsOpt,
    PrimeOpt,
    SeedOpt,
    TrialsOpt,
    command_errors,
)
from app.service.analysis_service import AnalysisService
from app.service.exceptional_service import ExceptionalService
from app.service.field_service import FieldService
from app.types.request import NfijConfig

router = typer.Typer()


@router.command("nfij")
def nfij(
    config: ConfigOpt = None,
    ell: Annotated[Optional[int], typer.Option("--ell", help="Degree of F")] = None,
    i_length: Annotated[Optional[int], typer.Option("--H", help="I = {1..H}")] = None,
    j_length: Annotated[Optional[int], typer.Option("--K", help="J = {1..K}")] = None,
    s: Annotated[
        Optional[int], typer.Option("--s", help="Scaled family base; J becomes {0..K}")
    ] = None,
    prime_bits: PrimeBitsOpt = None,
    prime: PrimeOpt = None,
    seed: SeedOpt = None,
    trials: TrialsOpt = None,
    out: OutOpt = None,
) -> None:
    """Count N_F(I, J) by brute force next to the reference upper bound."""
    with command_errors():
        cfg = NfijConfig.load(
            config,
            ell=ell,
            i_length=i_length,
            j_length=j_length,
            s=s,
            prime_bits=prime_bits,
            prime=prime,
            seed=seed,
            trials=trials,
            out=out,
        )
        ctx = cfg.resolve_prime()
        H, K = cfg.i_length, cfg.j_length
        bound = AnalysisService.nfij_bound(H, K, ctx.p, cfg.ell)
        rows = []
        for trial in range(cfg.trials):
            trial_seed = cfg.seed + trial
            if cfg.s is None:
                f = FieldService.random_polynomial(ctx, cfg.ell, 0, trial_seed)
                pair = IntervalPair(i_offset=0, i_length=H, j_offset=0, j_length=K)
            else:
                rng = random.Random(trial_seed)
                r = [rng.randrange(cfg.s**i) for i in range(cfg.ell + 1)]
                f = ExceptionalService.construct_scaled(cfg.s, r, K, H, ctx, trial_seed)
                pair = IntervalPair(i_offset=0, i_length=H, j_offset=-1, j_length=K + 1)
            count = AnalysisService.count_nfij(f, pair)
            rows.append((trial, cfg.ell, H, K, count, mpmath.nstr(bound, 12)))
        write_csv(
            cfg.out / "nfij.csv",
            ("trial", "ell", "H", "K", "count", "bound"),
            rows,
            cfg.record(),
        )
        typer.echo(f"max count {max(row[4] for row in rows)} vs reference bound {mpmath.nstr(bound, 6)}")
