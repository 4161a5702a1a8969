"""Run configurations, sweep evaluation and the figure presets.

A RunConfig is everything needed to reproduce one command: it is echoed in
every output file and can be re-ingested from a JSON result (see replay).
Rows are computed as jobs on the worker queue and always come back in grid
order.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from secrecy_relay.errors import InvalidParameterError
from secrecy_relay.models import (
    SystemParams,
    WiretapCode,
    mean_snr_sr,
    threshold_to_rate,
)
from secrecy_relay.services import analytic, monte_carlo, optimizer
from secrecy_relay.services.job_queue import JobQueue
from secrecy_relay.services.monte_carlo import MonteCarloConfig
from secrecy_relay.services.quadrature import QuadratureConfig
from secrecy_relay.utils.grids import SweepSpec
from secrecy_relay.utils.units import db_to_linear, dbm_to_watts

logger = logging.getLogger(__name__)

COMMANDS = ("pto", "pso", "throughput", "optimize", "figure")

PTO_COLUMNS = ["index", "sweep_value", "beta", "rate_b", "tau_b", "p_to", "p_to_mc", "p_to_mc_std_error"]
PSO_COLUMNS = [
    "index",
    "sweep_value",
    "beta",
    "eav_density",
    "rate_e",
    "tau_e",
    "p_so",
    "j1",
    "j2",
    "j3",
    "p_so_mc",
    "p_so_mc_std_error",
    "disc_radius",
]
THROUGHPUT_COLUMNS = [
    "index",
    "sweep_value",
    "beta",
    "rate_b",
    "rate_e",
    "p_to",
    "p_so",
    "t_s",
    "p_to_mc",
    "p_to_mc_std_error",
    "p_so_mc",
    "p_so_mc_std_error",
]
OPTIMIZE_COLUMNS = [
    "index",
    "sweep_value",
    "beta",
    "r_b_star",
    "r_e_star",
    "t_s_star",
    "feasible",
    "p_so",
    "p_to",
    "method",
    "is_optimum",
]

Row = Dict[str, Any]


@dataclass(frozen=True)
class FigurePreset:
    figure_id: int
    x_axis: SweepSpec
    curves: Tuple[float, ...]
    curve_label: str
    description: str


FIGURE_PRESETS: Dict[int, FigurePreset] = {
    2: FigurePreset(2, SweepSpec("tau-b", 0.1, 20.0, 20, log=True), (0.0, 10.0, 20.0), "gamma_b_db", "P_to vs tau_b"),
    3: FigurePreset(3, SweepSpec("tau-e", 0.1, 10.0, 20, log=True), (0.0, 10.0), "gamma_e_db", "P_so vs tau_e"),
    4: FigurePreset(4, SweepSpec("rb", 0.05, 10.0, 200), (2, 4, 8), "n", "T_s vs R_b at beta = 0.5"),
    5: FigurePreset(5, SweepSpec("beta", 0.05, 1.0, 20), (2, 4, 8), "n", "T_s* vs beta"),
}

# Shared figure settings: eta = 4 with lambda d_sr^2 = lambda d_rd^2 = 1.
FIGURE_PATH_LOSS = 4.0
FIGURE_DENSITY = 1.0
FIGURE_BETA = 0.5
FIGURE_OUTAGE_CONSTRAINT = 0.4
FIGURE_GAMMA_B_DB = 20.0
# gamma_b / gamma_e = 20 in linear terms.
FIGURE_GAMMA_RATIO = 20.0


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: SystemParams
    beta: Optional[float] = 0.5
    rate_b: float = 2.0
    rate_e: float = 1.0
    phi: float = FIGURE_OUTAGE_CONSTRAINT
    sweep: Optional[SweepSpec] = None
    with_mc: bool = False
    mc: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    figure_id: Optional[int] = None
    curves: Optional[Tuple[float, ...]] = None
    output_format: str = "csv"
    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidParameterError(f"unknown command {self.command!r}")
        if self.output_format not in ("csv", "json"):
            raise InvalidParameterError(f"output format must be csv or json, got {self.output_format!r}")
        if self.command == "figure" and self.figure_id not in FIGURE_PRESETS:
            raise InvalidParameterError(
                f"unknown figure {self.figure_id!r}; choose one of {sorted(FIGURE_PRESETS)}"
            )
        if self.beta is None and self.command != "optimize":
            raise InvalidParameterError(f"{self.command} needs a power allocation beta")
        if not 0 < self.phi < 1:
            raise InvalidParameterError(f"phi must lie in (0, 1), got {self.phi}")
        if self.curves is not None:
            object.__setattr__(self, "curves", tuple(float(c) for c in self.curves))

    def to_dict(self) -> Dict[str, Any]:
        """Everything that determines the results; the output path is left out."""
        return {
            "command": self.command,
            "params": self.params.to_dict(),
            "beta": self.beta,
            "rate_b": self.rate_b,
            "rate_e": self.rate_e,
            "phi": self.phi,
            "sweep": self.sweep.to_dict() if self.sweep else None,
            "with_mc": self.with_mc,
            "mc": self.mc.to_dict(),
            "quadrature": dataclasses.asdict(self.quadrature),
            "figure_id": self.figure_id,
            "curves": list(self.curves) if self.curves is not None else None,
            "output_format": self.output_format,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RunConfig:
        try:
            sweep = data.get("sweep")
            curves = data.get("curves")
            return cls(
                command=data["command"],
                params=SystemParams.from_dict(data["params"]),
                beta=data.get("beta"),
                rate_b=float(data.get("rate_b", 2.0)),
                rate_e=float(data.get("rate_e", 1.0)),
                phi=float(data.get("phi", FIGURE_OUTAGE_CONSTRAINT)),
                sweep=SweepSpec.from_dict(sweep) if sweep else None,
                with_mc=bool(data.get("with_mc", False)),
                mc=MonteCarloConfig(**data.get("mc", {})),
                quadrature=QuadratureConfig(**data.get("quadrature", {})),
                figure_id=data.get("figure_id"),
                curves=tuple(curves) if curves is not None else None,
                output_format=data.get("output_format", "json"),
            )
        except (KeyError, TypeError) as error:
            raise InvalidParameterError(f"malformed run config: {error}") from error


@dataclass
class RunResult:
    config: RunConfig
    columns: List[str]
    rows: List[Row]
    results: List[Dict[str, Any]]
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "results": self.results,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class OperatingPoint:
    params: SystemParams
    beta: Optional[float]
    code: WiretapCode
    phi: float


# ---------------------------------------------------------------------------
# Sweep axes
# ---------------------------------------------------------------------------


def mean_snr_eavesdropper(params: SystemParams) -> float:
    """P_s d_sr^-eta / sigma_i1^2, the figure normalisation of gamma_e."""
    return params.power_source * params.dist_sr**-params.path_loss_exp / params.noise_eav_slot1


def with_mean_snr(
    params: SystemParams, gamma_b_db: Optional[float] = None, gamma_e_db: Optional[float] = None
) -> SystemParams:
    """Rebuild params in the figure normalisation, keeping whichever mean SNR is not given."""
    gamma_b = db_to_linear(gamma_b_db) if gamma_b_db is not None else mean_snr_sr(params)
    gamma_e = db_to_linear(gamma_e_db) if gamma_e_db is not None else mean_snr_eavesdropper(params)
    return SystemParams.from_mean_snr(
        num_antennas=params.num_antennas,
        path_loss_exp=params.path_loss_exp,
        eav_density=params.eav_density,
        mean_snr_b=gamma_b,
        mean_snr_e=gamma_e,
        dist_sr=params.dist_sr,
        dist_rd=params.dist_rd,
    )


def _code(rate_b: float, rate_e: float, keep: str) -> WiretapCode:
    # The swept rate wins; the other one is moved so that R_e <= R_b still holds.
    if keep == "rate_b":
        return WiretapCode(rate_b=rate_b, rate_e=min(rate_e, rate_b))
    return WiretapCode(rate_b=max(rate_b, rate_e), rate_e=rate_e)


def operating_point(run: RunConfig, variable: Optional[str] = None, value: Optional[float] = None) -> OperatingPoint:
    """The run's operating point with one sweep variable replaced."""
    params = run.params
    beta = run.beta
    rate_b, rate_e = run.rate_b, run.rate_e
    phi = run.phi
    keep = "rate_b"
    if variable is not None:
        assert value is not None
        if variable == "tau-b":
            rate_b = threshold_to_rate(value)
        elif variable == "tau-e":
            rate_e, keep = threshold_to_rate(value), "rate_e"
        elif variable == "rb":
            rate_b = value
        elif variable == "re":
            rate_e, keep = value, "rate_e"
        elif variable == "beta":
            beta = value
        elif variable == "lambda":
            params = params.replace(eav_density=value)
        elif variable == "ps-dbm":
            params = params.replace(power_source=dbm_to_watts(value))
        elif variable == "pr-dbm":
            params = params.replace(power_relay=dbm_to_watts(value))
        elif variable == "dsr":
            params = params.replace(dist_sr=value)
        elif variable == "drd":
            params = params.replace(dist_rd=value)
        elif variable == "phi":
            phi = value
        elif variable == "gamma-b-db":
            params = with_mean_snr(params, gamma_b_db=value)
        elif variable == "gamma-e-db":
            params = with_mean_snr(params, gamma_e_db=value)
        else:
            raise InvalidParameterError(f"unknown sweep variable {variable!r}")
    code = _code(rate_b, rate_e, keep) if variable is not None else WiretapCode(rate_b=rate_b, rate_e=rate_e)
    return OperatingPoint(params=params, beta=beta, code=code, phi=phi)


def _grid(run: RunConfig) -> List[Tuple[Optional[float], str]]:
    if run.sweep is None:
        return [(None, "single point")]
    return [(value, f"{run.sweep.variable}={value:.6g}") for value in run.sweep.values()]


# ---------------------------------------------------------------------------
# Row evaluators
# ---------------------------------------------------------------------------


def _empty_row(columns: Sequence[str], index: int, sweep_value: Optional[float]) -> Row:
    row: Row = {name: None for name in columns}
    row["index"] = index
    row["sweep_value"] = sweep_value
    return row


def _pto_row(run: RunConfig, index: int, sweep_value: Optional[float]) -> Row:
    point = operating_point(run, run.sweep.variable if run.sweep else None, sweep_value)
    assert point.beta is not None
    row = _empty_row(PTO_COLUMNS, index, sweep_value)
    row.update(
        beta=point.beta,
        rate_b=point.code.rate_b,
        tau_b=point.code.tau_b,
        p_to=analytic.p_to(point.params, point.beta, point.code),
    )
    if run.with_mc:
        estimate = monte_carlo.estimate_p_to(point.params, point.beta, point.code, run.mc.for_point(index))
        row.update(p_to_mc=estimate.estimate, p_to_mc_std_error=estimate.std_error)
    return row


def _pso_row(run: RunConfig, index: int, sweep_value: Optional[float]) -> Row:
    point = operating_point(run, run.sweep.variable if run.sweep else None, sweep_value)
    assert point.beta is not None
    tau_e = point.code.tau_e
    row = _empty_row(PSO_COLUMNS, index, sweep_value)
    row.update(
        beta=point.beta,
        eav_density=point.params.eav_density,
        rate_e=point.code.rate_e,
        tau_e=tau_e,
        p_so=analytic.p_so(point.params, point.beta, point.code, run.quadrature),
    )
    if tau_e > 0 and point.params.eav_density > 0:
        terms = analytic.so_terms(point.params, point.beta, tau_e, run.quadrature)
        row.update(j1=terms.j1, j2=terms.j2, j3=terms.j3)
    if run.with_mc:
        estimate = monte_carlo.estimate_p_so(point.params, point.beta, point.code, run.mc.for_point(index))
        row.update(
            p_so_mc=estimate.estimate,
            p_so_mc_std_error=estimate.std_error,
            disc_radius=estimate.disc_radius,
        )
    return row


def _throughput_row(run: RunConfig, index: int, sweep_value: Optional[float]) -> Row:
    point = operating_point(run, run.sweep.variable if run.sweep else None, sweep_value)
    assert point.beta is not None
    metrics = analytic.throughput(point.params, point.beta, point.code, run.quadrature)
    row = _empty_row(THROUGHPUT_COLUMNS, index, sweep_value)
    row.update(
        beta=point.beta,
        rate_b=point.code.rate_b,
        rate_e=point.code.rate_e,
        p_to=metrics.p_to,
        p_so=metrics.p_so,
        t_s=metrics.throughput,
    )
    if run.with_mc:
        mc = run.mc.for_point(index)
        p_to_mc = monte_carlo.estimate_p_to(point.params, point.beta, point.code, mc)
        p_so_mc = monte_carlo.estimate_p_so(point.params, point.beta, point.code, mc)
        row.update(
            p_to_mc=p_to_mc.estimate,
            p_to_mc_std_error=p_to_mc.std_error,
            p_so_mc=p_so_mc.estimate,
            p_so_mc_std_error=p_so_mc.std_error,
        )
    return row


def optimizer_config(run: RunConfig, phi: Optional[float] = None) -> optimizer.OptimizerConfig:
    return optimizer.OptimizerConfig(
        outage_constraint=run.phi if phi is None else phi,
        quadrature=run.quadrature,
    )


def _optimize_point(run: RunConfig, index: int, sweep_value: Optional[float]) -> Dict[str, Any]:
    point = operating_point(run, run.sweep.variable if run.sweep else None, sweep_value)
    cfg = optimizer_config(run, point.phi)
    if point.beta is not None:
        pair = optimizer.solve_rate_pair(point.params, point.beta, cfg)
        return {"index": index, "sweep_value": sweep_value, "kind": "rate-pair", "result": pair}
    joint = optimizer.solve_joint(point.params, cfg)
    return {"index": index, "sweep_value": sweep_value, "kind": "joint", "result": joint}


def _optimize_rows(outcome: Dict[str, Any], expand_trace: bool) -> List[Row]:
    result = outcome["result"]
    if isinstance(result, optimizer.RatePairResult):
        entries = [(result, result.feasible)]
    elif expand_trace:
        entries = [(entry, result.feasible and entry.beta == result.beta_star) for entry in result.trace]
    else:
        best = next((e for e in result.trace if e.beta == result.beta_star), None)
        entries = [(best, True)] if best is not None else []
    rows = []
    for entry, is_optimum in entries:
        row = _empty_row(OPTIMIZE_COLUMNS, outcome["index"], outcome["sweep_value"])
        row.update(entry.to_dict())
        row["is_optimum"] = is_optimum
        rows.append(row)
    if not entries:
        row = _empty_row(OPTIMIZE_COLUMNS, outcome["index"], outcome["sweep_value"])
        row.update(t_s_star=0.0, feasible=False, is_optimum=False)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def figure_params(num_antennas: int, gamma_b_db: float, gamma_e_db: float) -> SystemParams:
    return SystemParams.from_mean_snr(
        num_antennas=num_antennas,
        path_loss_exp=FIGURE_PATH_LOSS,
        eav_density=FIGURE_DENSITY,
        mean_snr_b=db_to_linear(gamma_b_db),
        mean_snr_e=db_to_linear(gamma_e_db),
    )


def _figure_gamma_e_db() -> float:
    return FIGURE_GAMMA_B_DB - 10.0 * math.log10(FIGURE_GAMMA_RATIO)


def _curve_column(prefix: str, preset: FigurePreset, value: float) -> str:
    return f"{prefix}_{preset.curve_label}_{value:g}"


def _std_error_column(estimate_column: str) -> str:
    """p_so_mc_gamma_e_db_0 -> p_so_mc_std_error_gamma_e_db_0"""
    head, _, tail = estimate_column.partition("_mc_")
    return f"{head}_mc_std_error_{tail}"


def _figure(run: RunConfig, queue: JobQueue) -> RunResult:
    assert run.figure_id is not None
    preset = FIGURE_PRESETS[run.figure_id]
    axis = run.sweep if run.sweep is not None else preset.x_axis
    if axis.variable != preset.x_axis.variable:
        raise InvalidParameterError(
            f"figure {preset.figure_id} sweeps {preset.x_axis.variable}, not {axis.variable}"
        )
    curves = run.curves if run.curves is not None else preset.curves
    xs = axis.values()
    x_column = axis.variable.replace("-", "_")
    diagnostics: List[Dict[str, Any]] = [{"kind": "figure", "id": preset.figure_id, "title": preset.description}]
    num_antennas = run.params.num_antennas
    beta = run.beta if run.beta is not None else FIGURE_BETA

    columns = ["index", x_column]
    # Monte Carlo evaluators return a MonteCarloEstimate, which fills two columns.
    evaluators: List[Tuple[str, Callable[[int, float], Any]]] = []

    if preset.figure_id == 2:
        for gamma_b_db in curves:
            params = figure_params(num_antennas, gamma_b_db, _figure_gamma_e_db())
            evaluators.append(
                (
                    _curve_column("p_to", preset, gamma_b_db),
                    lambda i, x, p=params: analytic.p_to(p, beta, WiretapCode.from_thresholds(x, 0.0)),
                )
            )
            if run.with_mc:
                evaluators.append(
                    (
                        _curve_column("p_to_mc", preset, gamma_b_db),
                        lambda i, x, p=params: monte_carlo.estimate_p_to(
                            p, beta, WiretapCode.from_thresholds(x, 0.0), run.mc.for_point(i)
                        ),
                    )
                )
    elif preset.figure_id == 3:
        for gamma_e_db in curves:
            params = figure_params(num_antennas, FIGURE_GAMMA_B_DB, gamma_e_db)
            evaluators.append(
                (
                    _curve_column("p_so", preset, gamma_e_db),
                    lambda i, x, p=params: analytic.p_so(p, beta, WiretapCode.from_thresholds(x, x), run.quadrature),
                )
            )
            if run.with_mc:
                evaluators.append(
                    (
                        _curve_column("p_so_mc", preset, gamma_e_db),
                        lambda i, x, p=params: monte_carlo.estimate_p_so(
                            p, beta, WiretapCode.from_thresholds(x, x), run.mc.for_point(i)
                        ),
                    )
                )
    elif preset.figure_id == 4:
        cfg = optimizer_config(run)
        for n in curves:
            params = figure_params(int(n), FIGURE_GAMMA_B_DB, _figure_gamma_e_db())
            r_e = optimizer.solve_re_star(params, beta, cfg)
            diagnostics.append({"kind": "r_e_star", "n": int(n), "beta": beta, "r_e_star": r_e})
            if r_e is None:
                evaluators.append((_curve_column("t_s", preset, n), lambda i, x: None))
                continue
            evaluators.append(
                (
                    _curve_column("t_s", preset, n),
                    lambda i, x, p=params, r=r_e: optimizer.throughput_curve(p, beta, r, [x])[0],
                )
            )
    else:
        cfg = optimizer_config(run)
        for n in curves:
            params = figure_params(int(n), FIGURE_GAMMA_B_DB, _figure_gamma_e_db())
            evaluators.append(
                (
                    _curve_column("t_s_star", preset, n),
                    lambda i, x, p=params: (
                        optimizer.solve_rate_pair(p, x, cfg).t_s_star if p.supports_beta(x) else None
                    ),
                )
            )

    for name, _ in evaluators:
        columns.append(name)
        if name.startswith(("p_to_mc_", "p_so_mc_")):
            columns.append(_std_error_column(name))

    def make_row(index: int, x: float) -> Row:
        row: Row = {"index": index, x_column: x}
        for name, evaluate in evaluators:
            value = evaluate(index, x)
            if isinstance(value, monte_carlo.MonteCarloEstimate):
                row[name] = value.estimate
                row[_std_error_column(name)] = value.std_error
            else:
                row[name] = value
        return row

    tasks = [(f"{axis.variable}={x:.6g}", lambda i=i, x=x: make_row(i, x)) for i, x in enumerate(xs)]
    rows = queue.run_all(tasks)
    return RunResult(config=run, columns=columns, rows=rows, results=rows, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

_ROW_EVALUATORS: Dict[str, Tuple[List[str], Callable[[RunConfig, int, Optional[float]], Row]]] = {
    "pto": (PTO_COLUMNS, _pto_row),
    "pso": (PSO_COLUMNS, _pso_row),
    "throughput": (THROUGHPUT_COLUMNS, _throughput_row),
}


def run_experiment(run: RunConfig, queue: JobQueue) -> RunResult:
    """Evaluate a run over its grid; rows are in grid order."""
    logger.info(f"Running {run.command} over {len(_grid(run))} grid point(s)")
    if run.command == "figure":
        result = _figure(run, queue)
    elif run.command == "optimize":
        outcomes = queue.run_all(
            [(label, lambda i=i, v=value: _optimize_point(run, i, v)) for i, (value, label) in enumerate(_grid(run))]
        )
        expand = run.sweep is None
        rows = [row for outcome in outcomes for row in _optimize_rows(outcome, expand)]
        results = [
            {"index": o["index"], "sweep_value": o["sweep_value"], "kind": o["kind"], **o["result"].to_dict()}
            for o in outcomes
        ]
        result = RunResult(config=run, columns=OPTIMIZE_COLUMNS, rows=rows, results=results)
    else:
        columns, evaluate = _ROW_EVALUATORS[run.command]
        rows = queue.run_all(
            [(label, lambda i=i, v=value: evaluate(run, i, v)) for i, (value, label) in enumerate(_grid(run))]
        )
        result = RunResult(config=run, columns=columns, rows=rows, results=rows)
    result.diagnostics.append({"kind": "jobs", **queue.status_counts()})
    logger.info(f"Finished {run.command}: {len(result.rows)} row(s)")
    return result


def load_run_config(path: Path) -> RunConfig:
    """Read the config block of a JSON result file written by this tool."""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as error:
        raise InvalidParameterError(f"cannot read run config from {path}: {error}") from error
    if not isinstance(document, dict) or "config" not in document:
        raise InvalidParameterError(f"{path} has no config block")
    return RunConfig.from_dict(document["config"])

