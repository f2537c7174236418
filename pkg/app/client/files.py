"""Flat-file formats: polynomials, matrices, observation CSVs and summaries."""

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from pydantic import BaseModel, ValidationError

from app.client.logger import logger
from app.errors import InstanceParseError
from app.model.schema import (
    FpPolynomial,
    IntegerLattice,
    InterpolationInstance,
    NoisyObservation,
    PrimeContext,
)
from app.service.field_service import FieldService

CONFIG_PREFIX = "# config: "


def _parse_int(path: Path | str, line: int, token: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceParseError(path, line, f"expected a decimal integer, got {token!r}")


def poly_to_text(f: FpPolynomial) -> str:
    return "\n".join([str(f.ctx.p), *(str(a) for a in f.coeffs)]) + "\n"


def poly_from_text(text: str, path: Path | str = "<text>") -> FpPolynomial:
    lines = [(i, line.strip()) for i, line in enumerate(text.splitlines(), start=1)]
    lines = [(i, line) for i, line in lines if line]
    if len(lines) < 2:
        raise InstanceParseError(path, len(lines) + 1, "need p and at least one coefficient")
    p = _parse_int(path, *lines[0])
    try:
        ctx = PrimeContext(p=p)
    except ValueError as e:
        raise InstanceParseError(path, lines[0][0], f"invalid modulus: {e}")
    coeffs = []
    for line_no, token in lines[1:]:
        a = _parse_int(path, line_no, token)
        if not 0 <= a < p:
            raise InstanceParseError(path, line_no, "coefficient is not reduced modulo p")
        coeffs.append(a)
    return FpPolynomial(ctx=ctx, coeffs=tuple(coeffs))


def matrix_to_text(lattice: IntegerLattice) -> str:
    header = f"{lattice.dimension} {lattice.scale}"
    body = [" ".join(str(x) for x in row) for row in lattice.rows]
    return "\n".join([header, *body]) + "\n"


def matrix_from_text(text: str, path: Path | str = "<text>") -> IntegerLattice:
    """Parse the "s scale" header followed by one row per line."""
    lines = [(i, line.split()) for i, line in enumerate(text.splitlines(), start=1)]
    lines = [(i, tokens) for i, tokens in lines if tokens]
    if not lines:
        raise InstanceParseError(path, 1, "empty matrix file")
    header_no, header = lines[0]
    if len(header) != 2:
        raise InstanceParseError(path, header_no, "header must be 's scale'")
    s, scale = (_parse_int(path, header_no, token) for token in header)
    if s < 1 or scale < 1:
        raise InstanceParseError(path, header_no, "s and scale must be positive")
    rows = []
    for line_no, tokens in lines[1:]:
        if len(tokens) != s:
            raise InstanceParseError(path, line_no, f"expected {s} entries, got {len(tokens)}")
        rows.append(tuple(_parse_int(path, line_no, token) for token in tokens))
    if not rows:
        raise InstanceParseError(path, header_no + 1, "matrix has no rows")
    return IntegerLattice(rows=tuple(rows), scale=scale)


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote {path}", path=str(path))


def read_text(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def config_line(config: Mapping[str, Any]) -> str:
    return CONFIG_PREFIX + json.dumps(config, sort_keys=True, default=str)


def csv_text(
    header: Sequence[str], rows: Iterable[Sequence[Any]], config: Mapping[str, Any]
) -> str:
    """CSV with a leading config comment and a header row."""
    buffer = io.StringIO()
    buffer.write(config_line(config) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: Mapping[str, Any],
) -> None:
    write_text(path, csv_text(header, rows, config))


def write_observations(
    path: Path, observations: Sequence[NoisyObservation], config: Mapping[str, Any]
) -> None:
    write_csv(
        path, ("t", "u", "delta"), ((o.t, o.u, o.delta) for o in observations), config
    )


def read_observations(
    path: Path,
) -> tuple[dict[str, Any], list[tuple[int, NoisyObservation]]]:
    """Return the recorded config and the (line number, observation) rows.

    When the config records p, every u is checked to be a residue.
    """
    config: Optional[dict[str, Any]] = None
    observations = []
    header_seen = False
    for line_no, line in enumerate(read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith(CONFIG_PREFIX):
            try:
                config = json.loads(line[len(CONFIG_PREFIX) :])
            except json.JSONDecodeError as e:
                raise InstanceParseError(path, line_no, f"bad config comment: {e}")
            continue
        if line.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        if not header_seen:
            if fields != ["t", "u", "delta"]:
                raise InstanceParseError(path, line_no, "expected header t,u,delta")
            header_seen = True
            continue
        if len(fields) != 3:
            raise InstanceParseError(path, line_no, f"expected 3 fields, got {len(fields)}")
        t, u, delta = (_parse_int(path, line_no, x.strip()) for x in fields)
        if u < 0 or delta < 0:
            raise InstanceParseError(path, line_no, "u and delta must be nonnegative")
        if config is not None and "p" in config and u >= int(config["p"]):
            raise InstanceParseError(path, line_no, "u is not reduced modulo p")
        observations.append((line_no, NoisyObservation(t=t, u=u, delta=delta)))
    if config is None:
        raise InstanceParseError(path, 1, "missing '# config:' line")
    if not observations:
        raise InstanceParseError(path, 1, "no observations")
    return config, observations


def write_summary(path: Path, record: BaseModel) -> None:
    write_text(path, record.model_dump_json(indent=2) + "\n")


SECRET_FILE = "secret.txt"
OBSERVATIONS_FILE = "observations.csv"


def write_instance(
    directory: Path,
    secret: FpPolynomial,
    inst: InterpolationInstance,
    config: Mapping[str, Any],
) -> None:
    """Instance directory: the secret polynomial plus the attacker's CSV."""
    record = {
        **config,
        "p": inst.ctx.p,
        "n": inst.n,
        "k": inst.k,
        "h": inst.h,
        "delta": inst.delta,
        "window": list(inst.window) if inst.window else None,
        "known_low": list(inst.known_low),
    }
    write_text(directory / SECRET_FILE, poly_to_text(secret))
    observations = [
        NoisyObservation(t=t, u=u, delta=inst.delta)
        for t, u in zip(inst.points, inst.observations)
    ]
    write_observations(directory / OBSERVATIONS_FILE, observations, record)


def read_instance(
    directory: Path,
) -> tuple[InterpolationInstance, Optional[FpPolynomial]]:
    """Load an instance directory; the secret is optional.

    When the secret is present every observation is rechecked against it.
    """
    path = directory / OBSERVATIONS_FILE
    config, rows = read_observations(path)
    for key in ("p", "n", "k", "h"):
        if key not in config:
            raise InstanceParseError(path, 1, f"config lacks '{key}'")
    deltas = {obs.delta for _, obs in rows}
    if len(deltas) != 1:
        raise InstanceParseError(path, rows[0][0], "observations disagree on delta")
    try:
        inst = InterpolationInstance(
            ctx=PrimeContext(p=int(config["p"])),
            n=int(config["n"]),
            k=int(config["k"]),
            h=int(config["h"]),
            delta=deltas.pop(),
            points=tuple(obs.t for _, obs in rows),
            observations=tuple(obs.u for _, obs in rows),
            window=tuple(config["window"]) if config.get("window") else None,
            known_low=tuple(config.get("known_low") or ()),
        )
    except ValidationError as e:
        raise InstanceParseError(path, 1, f"inconsistent instance: {e}")

    secret_path = directory / SECRET_FILE
    if not secret_path.is_file():
        return inst, None
    secret = poly_from_text(read_text(secret_path), secret_path)
    if secret.ctx.p != inst.ctx.p:
        raise InstanceParseError(secret_path, 1, "secret and observations use different p")
    for line_no, obs in rows:
        value = FieldService.poly_eval(secret, obs.t)
        if FieldService.dist_mod(obs.u - value, inst.ctx.p) > obs.delta:
            raise InstanceParseError(path, line_no, "observation violates its error bound")
    return inst, secret
