"""Command-line front end: ``secrecy-relay <command> [options]``.

Exit codes: 0 on success, 2 for invalid parameters or configuration, 3 for
numerical failures (the failing grid point is named on stderr).
"""

import functools
import io
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Tuple

import click

from secrecy_relay import __version__
from secrecy_relay.config import Settings, configure_logging, get_settings
from secrecy_relay.errors import GridPointError, InvalidParameterError, SecrecyRelayError
from secrecy_relay.models import SystemParams
from secrecy_relay.services.experiments import RunConfig, RunResult, load_run_config, run_experiment, with_mean_snr
from secrecy_relay.services.job_queue import get_job_queue
from secrecy_relay.services.monte_carlo import MonteCarloConfig, SimulationMode
from secrecy_relay.services.output import write_result
from secrecy_relay.services.quadrature import QuadratureConfig
from secrecy_relay.utils.grids import parse_sweep
from secrecy_relay.utils.units import dbm_to_watts

logger = logging.getLogger("secrecy_relay")

EXIT_NUMERICAL = 3


def _physical_options(func: Callable) -> Callable:
    options = [
        click.option("--eta", type=float, default=4.0, show_default=True, help="Path-loss exponent (>= 2)."),
        click.option("--n", "num_antennas", type=int, default=4, show_default=True, help="Source antennas N."),
        click.option("--lambda", "density", type=float, default=1.0, show_default=True, help="Eavesdropper density."),
        click.option("--ps-dbm", type=float, default=30.0, show_default=True, help="Source power P_s."),
        click.option("--pr-dbm", type=float, default=30.0, show_default=True, help="Relay power P_r."),
        click.option("--dsr", type=float, default=1.0, show_default=True, help="Source-relay distance."),
        click.option("--drd", type=float, default=1.0, show_default=True, help="Relay-destination distance."),
        click.option("--noise-relay-dbm", type=float, default=10.0, show_default=True),
        click.option("--noise-dest-dbm", type=float, default=10.0, show_default=True),
        click.option("--noise-eav1-dbm", type=float, default=23.0103, show_default=True),
        click.option("--noise-eav2-dbm", type=float, default=23.0103, show_default=True),
        click.option(
            "--gamma-b-db",
            type=float,
            default=None,
            help="Mean legitimate SNR; rebuilds powers and noises with unit powers.",
        ),
        click.option(
            "--gamma-e-db",
            type=float,
            default=None,
            help="Mean eavesdropper SNR at d_sr; rebuilds powers and noises with unit powers.",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _run_options(func: Callable) -> Callable:
    options = [
        click.option("--rb", "rate_b", type=float, default=2.0, show_default=True, help="Codeword rate R_b."),
        click.option("--re", "rate_e", type=float, default=1.0, show_default=True, help="Redundancy rate R_e."),
        click.option("--phi", type=float, default=0.4, show_default=True, help="Secrecy outage constraint."),
        click.option(
            "--sweep",
            nargs=3,
            type=str,
            default=None,
            metavar="VAR START..STOP xPOINTS",
            help="Sweep one variable, e.g. --sweep tau-e 0.1..10 x50.",
        ),
        click.option("--log", "log_spacing", is_flag=True, help="Log-spaced sweep."),
        click.option("--with-mc", is_flag=True, help="Add Monte Carlo estimates."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--trials", type=int, default=1_000_000, show_default=True),
        click.option(
            "--mode",
            type=click.Choice([m.value for m in SimulationMode]),
            default=SimulationMode.DISTRIBUTIONAL.value,
            show_default=True,
        ),
        click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None),
        click.option(
            "--format", "output_format", type=click.Choice(["csv", "json"]), default="csv", show_default=True
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_params(
    eta: float,
    num_antennas: int,
    density: float,
    ps_dbm: float,
    pr_dbm: float,
    dsr: float,
    drd: float,
    noise_relay_dbm: float,
    noise_dest_dbm: float,
    noise_eav1_dbm: float,
    noise_eav2_dbm: float,
    gamma_b_db: Optional[float],
    gamma_e_db: Optional[float],
) -> SystemParams:
    params = SystemParams(
        num_antennas=num_antennas,
        path_loss_exp=eta,
        eav_density=density,
        power_source=dbm_to_watts(ps_dbm),
        power_relay=dbm_to_watts(pr_dbm),
        dist_sr=dsr,
        dist_rd=drd,
        noise_relay=dbm_to_watts(noise_relay_dbm),
        noise_dest=dbm_to_watts(noise_dest_dbm),
        noise_eav_slot1=dbm_to_watts(noise_eav1_dbm),
        noise_eav_slot2=dbm_to_watts(noise_eav2_dbm),
    )
    if gamma_b_db is not None or gamma_e_db is not None:
        params = with_mean_snr(params, gamma_b_db=gamma_b_db, gamma_e_db=gamma_e_db)
    return params


def _parse_curves(text: Optional[str]) -> Optional[Tuple[float, ...]]:
    if text is None:
        return None
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as error:
        raise InvalidParameterError(f"malformed --curves {text!r}, expected comma-separated numbers") from error


def _build_run(command: str, settings: Settings, options: dict) -> RunConfig:
    physical = {
        key: options.pop(key)
        for key in (
            "eta",
            "num_antennas",
            "density",
            "ps_dbm",
            "pr_dbm",
            "dsr",
            "drd",
            "noise_relay_dbm",
            "noise_dest_dbm",
            "noise_eav1_dbm",
            "noise_eav2_dbm",
            "gamma_b_db",
            "gamma_e_db",
        )
    }
    sweep_tokens = options.get("sweep")
    sweep = None
    if sweep_tokens:
        sweep = parse_sweep(*sweep_tokens, log=options.get("log_spacing", False))
    return RunConfig(
        command=command,
        params=build_params(**physical),
        beta=options.get("beta"),
        rate_b=options["rate_b"],
        rate_e=options["rate_e"],
        phi=options["phi"],
        sweep=sweep,
        with_mc=options["with_mc"],
        mc=MonteCarloConfig(num_trials=options["trials"], seed=options["seed"], mode=options["mode"]),
        quadrature=QuadratureConfig(cross_check_closed_forms=settings.cross_check),
        figure_id=options.get("figure_id"),
        curves=_parse_curves(options.get("curves")),
        output_format=options["output_format"],
        out=str(options["out"]) if options.get("out") else None,
    )


def _emit(result: RunResult, out: Optional[Path], output_format: str) -> None:
    buffer = io.StringIO()
    write_result(result, buffer, output_format)
    if out is None:
        click.echo(buffer.getvalue(), nl=False)
        return
    out.write_text(buffer.getvalue(), encoding="utf-8")
    logger.info(f"Wrote {len(result.rows)} row(s) to {out}")


def _execute(settings: Settings, run: RunConfig, out: Optional[Path], output_format: str) -> None:
    try:
        result = run_experiment(run, get_job_queue(settings))
    except GridPointError as error:
        if isinstance(error.root_cause, InvalidParameterError):
            raise click.UsageError(str(error)) from error
        click.echo(f"error: {error}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except InvalidParameterError as error:
        raise click.UsageError(str(error)) from error
    except SecrecyRelayError as error:
        click.echo(f"error: {error}", err=True)
        sys.exit(EXIT_NUMERICAL)
    _emit(result, out, output_format)


def _command(name: str) -> Callable[[Callable], Callable]:
    """Shared body of the evaluation commands: build the run config, execute, emit."""

    def decorate(func: Callable) -> Callable:
        @functools.wraps(func)
        @click.pass_obj
        def wrapper(settings: Settings, **options: Any) -> None:
            try:
                run = _build_run(name, settings, dict(options))
            except InvalidParameterError as error:
                raise click.UsageError(str(error)) from error
            _execute(settings, run, options.get("out"), options["output_format"])

        return wrapper

    return decorate


@click.group()
@click.version_option(__version__, prog_name="secrecy-relay")
@click.option("--log-level", default=None, help="Overrides SECRECY_RELAY_LOG_LEVEL.")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]) -> None:
    """Secrecy throughput of a DF relay wiretap channel with PPP eavesdroppers."""
    try:
        settings = get_settings()
    except InvalidParameterError as error:
        raise click.UsageError(str(error)) from error
    level = (log_level or settings.log_level).upper()
    if level not in logging.getLevelNamesMapping():
        raise click.BadParameter(f"not a logging level: {log_level!r}", param_hint="--log-level")
    configure_logging(level)
    ctx.obj = settings


@cli.command("pto")
@_physical_options
@_run_options
@click.option("--beta", type=float, default=0.5, show_default=True, help="Information power share.")
@_command("pto")
def pto_command(**options: Any) -> None:
    """Transmission outage probability P_to."""


@cli.command("pso")
@_physical_options
@_run_options
@click.option("--beta", type=float, default=0.5, show_default=True, help="Information power share.")
@_command("pso")
def pso_command(**options: Any) -> None:
    """Secrecy outage probability P_so."""


@cli.command("throughput")
@_physical_options
@_run_options
@click.option("--beta", type=float, default=0.5, show_default=True, help="Information power share.")
@_command("throughput")
def throughput_command(**options: Any) -> None:
    """P_to, P_so and the secrecy throughput T_s at fixed rates."""


@cli.command("optimize")
@_physical_options
@_run_options
@click.option("--beta", type=float, default=None, help="Fix beta and optimise the rates only.")
@_command("optimize")
def optimize_command(**options: Any) -> None:
    """Optimal wiretap code rates, and the power allocation unless --beta is given."""


@cli.command("figure")
@click.argument("figure_id", type=int)
@_physical_options
@_run_options
@click.option("--beta", type=float, default=0.5, show_default=True, help="Information power share.")
@click.option("--curves", default=None, help="Comma-separated curve values overriding the preset.")
@_command("figure")
def figure_command(**options: Any) -> None:
    """Data series of a figure preset (2, 3, 4 or 5)."""


@cli.command("replay")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--format", "output_format", type=click.Choice(["csv", "json"]), default=None)
@click.pass_obj
def replay_command(settings: Settings, path: Path, out: Optional[Path], output_format: Optional[str]) -> None:
    """Re-run the config stored in a JSON result file."""
    try:
        run = load_run_config(path)
    except InvalidParameterError as error:
        raise click.UsageError(str(error)) from error
    _execute(settings, run, out, output_format or run.output_format)


if __name__ == "__main__":
    cli()
