import mpmath
import typer

from app.client.files import write_csv
from app.model.schema import PredictorInput
from app.route.options import (
    BOpt,
    ConfigOpt,
    DeltaExpOpt,
    DeltaOpt,
    DMaxOpt,
    DMinOpt,
    HOpt,
    NOpt,
    OutOpt,
    PrimeOpt,
    command_errors,
)
from app.service.analysis_service import AnalysisService
from app.types.request import PredictConfig
from app.types.response import PredictRow

router = typer.Typer()


@router.command("predict")
def predict(
    config: ConfigOpt = None,
    n: NOpt = None,
    h: HOpt = None,
    b: BOpt = None,
    delta: DeltaOpt = None,
    delta_exp: DeltaExpOpt = None,
    prime: PrimeOpt = None,
    d_min: DMinOpt = None,
    d_max: DMaxOpt = None,
    out: OutOpt = None,
) -> None:
    """Tabulate the success predictor S over a range of d."""
    with command_errors():
        cfg = PredictConfig.load(
            config,
            n=n,
            h=h,
            b=b,
            delta=delta,
            delta_exp=delta_exp,
            prime=prime,
            d_min=d_min,
            d_max=d_max,
            out=out,
        )
        p = noise = exponent = None
        if cfg.prime is not None:
            ctx = cfg.resolve_prime()
            p, noise = ctx.p, cfg.resolve_delta(ctx)
        else:
            exponent = cfg.delta_exp
        rows = []
        first_positive = None
        for d in range(cfg.d_min, cfg.d_max + 1):
            inp = PredictorInput(
                n=cfg.n, h=cfg.h, d=d, p=p, delta=noise, delta_exponent=exponent
            )
            value = AnalysisService.predictor_s(inp)
            if first_positive is None and value > 0:
                first_positive = d
            rows.append(
                PredictRow(
                    d=d,
                    s=mpmath.nstr(value, 20),
                    in_regime=AnalysisService.predictor_in_regime(inp),
                )
            )
        write_csv(
            cfg.out / "predict.csv",
            ("d", "S", "in_regime"),
            ((row.d, row.s, int(row.in_regime)) for row in rows),
            cfg.record(),
        )
        if first_positive is None:
            typer.echo(f"S <= 0 for all d in [{cfg.d_min}, {cfg.d_max}]")
        else:
            typer.echo(f"S first positive at d = {first_positive}")
