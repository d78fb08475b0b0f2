"""Command-line front end: ``vectorial simulate|analyze|optimize``.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 the sweep did
not converge. Diagnostics go to standard error at the level named by the
``VECTORIAL_LOG`` environment variable (error, info or debug).
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import io as csv_io
from .analysis import (
    SENSITIVITY_PARAMETERS,
    classify_threshold,
    equilibria,
    reproduction_metrics,
    sensitivity_index_fd,
    sensitivity_indices,
)
from .config import ConfigError, RunConfig, build_config, read_config_file
from .control import FbsmOptions, FbsmResult, fbsm_solve, simulate_control
from .integrator import IntegrationError, TimeGrid, Trajectory, integrate_dp45, integrate_rk4, resample
from .model import ModelError, check_nonnegative, get_scenario, vector_field

log = logging.getLogger("vectorial")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NOT_CONVERGED = 0, 1, 2, 3

BIOECONOMIC_WEIGHTS = ((1.0, 1.0), (1.0, 0.0), (0.0, 1.0))

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def configure_logging() -> None:
    level_name = os.environ.get("VECTORIAL_LOG", "error").strip().lower()
    level = _LOG_LEVELS.get(level_name, logging.ERROR)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False
    logging.captureWarnings(True)
    if level_name not in _LOG_LEVELS:
        log.error("ignoring VECTORIAL_LOG=%r; expected error, info or debug", level_name)


def daily_times(t_f: float) -> np.ndarray:
    times = np.arange(0.0, math.floor(t_f) + 1.0)
    return times if times[-1] == t_f else np.append(times, t_f)


def run_simulation(config: RunConfig) -> Trajectory:
    """Integrate the configured variant and resample onto one sample per day."""
    p = config.params
    if config.variant == "controlled":
        level = config.control
        f = vector_field("controlled", p, control=lambda t: level)
    else:
        f = vector_field(config.variant, p, forcing=config.forcing)

    def project(y):
        return check_nonnegative(y, p.N_h)

    y0 = np.array(config.initial_state, dtype=float)
    if config.integrator == "rk4":
        traj = integrate_rk4(f, y0, TimeGrid.from_step(0.0, config.t_f, config.grid_step), project=project)
    else:
        traj = integrate_dp45(f, y0, 0.0, config.t_f, config.rel_tol, config.abs_tol, project=project)
    out = resample(traj, daily_times(config.t_f))
    out.meta.update(variant=config.variant, scenario=config.scenario, integrator=traj.meta)
    if config.variant == "controlled":
        out.u = np.full(out.t.shape, config.control)
    return out


def run_optimization(config: RunConfig, max_iter: int = 200) -> FbsmResult:
    grid = TimeGrid.from_step(0.0, config.t_f, config.grid_step)
    opts = FbsmOptions(grid=grid, max_iter=max_iter)
    return fbsm_solve(config.params, config.initial_state, config.weights, opts)


def analysis_report(config: RunConfig) -> str:
    p = config.params
    preset = get_scenario(config.scenario)
    lines = [f"scenario {preset.id} ({preset.label})", "", "parameters"]
    for name, value in p.as_dict().items():
        lines.append(f"  {name:<8} = {value!r}")
    lines.append(f"  {'N_m':<8} = {p.N_m!r}")

    metrics = reproduction_metrics(p)
    lines += ["", f"r0         = {metrics.r0:.4f}", f"r0_squared = {metrics.r0_squared:.4f}"]
    reported = preset.reported_r0_squared
    if reported is not None and p == preset.params:
        if math.isclose(metrics.r0_squared, reported, rel_tol=1e-4):
            lines.append(f"             matches the published value {reported:.4f}")
        else:
            message = f"computed r0_squared {metrics.r0_squared:.4f} does not reproduce the published {reported:.4f}"
            lines.append(f"warning: {message}")
            log.warning("scenario %d: %s", preset.id, message)

    lines += ["", "sensitivity indices of r0", f"  {'param':<8} {'analytic':>12} {'finite-diff':>12}"]
    table = sensitivity_indices(p)
    for name in SENSITIVITY_PARAMETERS:
        fd = sensitivity_index_fd(p, name)
        lines.append(f"  {name:<8} {table[name]:>12.5f} {fd:>12.5f}")

    eq = equilibria(p)
    res_dfe, res_end = eq.residuals(p)
    lines += ["", "equilibria", f"  {'':<14}" + "".join(f"{c:>14}" for c in ("S_h", "I_h", "R_h", "S_m", "I_m")) + f"{'residual':>12}"]
    lines.append(f"  {'disease-free':<14}" + "".join(f"{v:>14.4f}" for v in eq.dfe) + f"{res_dfe:>12.3e}")
    lines.append(f"  {'endemic':<14}" + "".join(f"{v:>14.4f}" for v in eq.endemic) + f"{res_end:>12.3e}")
    lines.append(f"  endemic point feasible: {'yes' if eq.feasible else 'no'}")
    lines += ["", f"classification: {classify_threshold(p)}"]
    return "\n".join(lines) + "\n"


def optimization_summary(result: FbsmResult, config: RunConfig, baseline: Trajectory | None = None) -> str:
    n_h = config.params.N_h
    t = result.t
    lines = [
        f"gamma_D     = {result.weights.gamma_D!r}",
        f"gamma_S     = {result.weights.gamma_S!r}",
        f"cost        = {result.cost!r}",
        f"iterations  = {result.iterations}",
        f"converged   = {'true' if result.converged else 'false'}",
        f"sup_u       = {float(np.max(result.control))!r}",
        f"peak_I_h    = {float(np.max(result.states.y[:, 1]))!r}",
    ]
    if t[-1] >= 150.0:
        frac = float(np.interp(150.0, t, result.states.y[:, 1])) / n_h
        lines.append(f"I_h(150)/N_h = {frac!r}")
    if baseline is not None:
        lines.append(f"uncontrolled I_h(t_f)/N_h = {float(baseline.y[-1, 1]) / n_h!r}")
    return "\n".join(lines) + "\n"


def _load_config(scenario, config_path, **flags) -> RunConfig:
    values = read_config_file(config_path) if config_path else {}
    if scenario is not None:
        values["scenario"] = scenario
    values.update({k: v for k, v in flags.items() if v is not None})
    return build_config(values)


def _suffixed(path: str, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}")


def _emit_csv(traj: Trajectory, out: str | None) -> None:
    if out is None:
        click.echo(csv_io.format_csv(traj), nl=False)
    else:
        csv_io.write_csv(out, traj)
        log.info("wrote %s", out)


def _fmt_weight(x: float) -> str:
    return f"{x:g}"


common_options = [
    click.option("--scenario", type=click.IntRange(1, 3), default=None, help="Parameter preset (default 2)."),
    click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="key = value file."),
    click.option("--variant", type=click.Choice(["constant", "seasonal", "controlled"]), default=None),
    click.option("--alpha", type=float, default=None, help="Seasonal amplitude in [0, 1)."),
    click.option("--tf", "t_f", type=float, default=None, help="Final time in days."),
    click.option("--gamma-d", "gamma_D", type=float, default=None, help="Weight on infected humans."),
    click.option("--gamma-s", "gamma_S", type=float, default=None, help="Weight on squared insecticide effort."),
    click.option("--grid-step", type=float, default=None, help="RK4 / sweep step in days."),
    click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout)."),
]


def with_common_options(f):
    for option in reversed(common_options):
        f = option(f)
    return f


@click.group()
def cli():
    """Dengue transmission model: simulation, threshold analysis and insecticide control."""
    configure_logging()


@cli.command()
@with_common_options
@click.option("--integrator", type=click.Choice(["dp45", "rk4"]), default=None)
@click.option("--rtol", "rel_tol", type=float, default=None)
@click.option("--atol", "abs_tol", type=float, default=None)
@click.option("--control", type=float, default=None, help="Constant insecticide level for the controlled variant.")
@click.option("--sweep", is_flag=True, help="Run all three scenarios concurrently (needs --out).")
@click.option("--plot-script", type=click.Path(dir_okay=False), default=None, help="Write a matplotlib script for the CSV.")
def simulate(scenario, config_path, out, sweep, plot_script, **flags):
    """Integrate the model and write a daily CSV time series."""
    if sweep:
        if out is None:
            raise ConfigError("--sweep writes one file per scenario and needs --out")
        configs = [_load_config(s, config_path, **flags) for s in (1, 2, 3)]
        with ThreadPoolExecutor(max_workers=3) as pool:
            trajs = list(pool.map(run_simulation, configs))
        files = {}
        for cfg, traj in zip(configs, trajs):
            path = _suffixed(out, f"s{cfg.scenario}")
            _emit_csv(traj, str(path))
            files[f"scenario {cfg.scenario}"] = path
        n_h = configs[0].params.N_h
    else:
        config = _load_config(scenario, config_path, **flags)
        _emit_csv(run_simulation(config), out)
        files = {f"scenario {config.scenario}, {config.variant}": out} if out else {}
        n_h = config.params.N_h
    if plot_script:
        if not files:
            raise ConfigError("--plot-script needs --out so the script has a CSV to read")
        csv_io.write_plot_script(plot_script, files, "Infected humans", n_h)
    return EXIT_OK


@cli.command()
@with_common_options
@click.option("--sweep", is_flag=True, help="Report all three scenarios.")
def analyze(scenario, config_path, out, sweep, **flags):
    """Print reproduction number, sensitivity indices, equilibria and threshold class."""
    ids = (1, 2, 3) if sweep else (scenario,)
    report = "\n".join(analysis_report(_load_config(s, config_path, **flags)) for s in ids)
    if out is None:
        click.echo(report, nl=False)
    else:
        Path(out).write_text(report, encoding="utf-8")
    return EXIT_OK


@cli.command()
@with_common_options
@click.option("--max-iter", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--baseline", type=click.Path(dir_okay=False), default=None, help="Also write the uncontrolled run here.")
@click.option("--sweep", is_flag=True, help="Solve the three bioeconomic weightings concurrently (needs --out).")
@click.option("--plot-script", type=click.Path(dir_okay=False), default=None, help="Write a matplotlib script for the CSVs.")
def optimize(scenario, config_path, out, max_iter, baseline, sweep, plot_script, **flags):
    """Solve the insecticide control problem by forward-backward sweeps."""
    flags["variant"] = flags.get("variant") or "controlled"
    if flags["variant"] != "controlled":
        raise ConfigError("optimize needs variant = controlled")
    base = _load_config(scenario, config_path, **flags)
    if sweep:
        if out is None:
            raise ConfigError("--sweep writes one file per weighting and needs --out")
        configs = [build_config_like(base, gamma_D=gd, gamma_S=gs) for gd, gs in BIOECONOMIC_WEIGHTS]
    else:
        configs = [base]

    with ThreadPoolExecutor(max_workers=len(configs)) as pool:
        results = list(pool.map(lambda c: run_optimization(c, max_iter), configs))

    reference = None
    if baseline is not None or plot_script:
        grid = TimeGrid.from_step(0.0, base.t_f, base.grid_step)
        reference = simulate_control(base.params, base.initial_state, 0.0, grid)

    files = {}
    summaries = []
    for cfg, result in zip(configs, results):
        traj = result.states
        if sweep:
            path = _suffixed(out, f"gD{_fmt_weight(cfg.gamma_D)}_gS{_fmt_weight(cfg.gamma_S)}")
            _emit_csv(traj, str(path))
        else:
            path = out
            if out is not None:
                _emit_csv(traj, out)
        if path is not None:
            files[f"gamma_D={_fmt_weight(cfg.gamma_D)}, gamma_S={_fmt_weight(cfg.gamma_S)}"] = path
        summaries.append(optimization_summary(result, cfg, reference))
    if baseline is not None:
        _emit_csv(reference, baseline)
        files["no control"] = baseline

    if out is None and not sweep:
        # stdout carries the CSV; the summary goes to stderr to keep it parseable
        _emit_csv(results[0].states, None)
        click.echo("\n".join(summaries), nl=False, err=True)
    else:
        click.echo("\n".join(summaries), nl=False)
    if plot_script:
        if not files:
            raise ConfigError("--plot-script needs --out so the script has CSVs to read")
        csv_io.write_plot_script(plot_script, files, "Infected humans under optimal insecticide", base.params.N_h)
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


def build_config_like(config: RunConfig, **changes) -> RunConfig:
    try:
        return dataclasses.replace(config, **changes)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc


def run(argv=None) -> int:
    """Invoke the CLI and map failures onto the documented exit codes."""
    try:
        code = cli.main(args=argv, prog_name="vectorial", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    except click.exceptions.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except (ConfigError, ModelError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return EXIT_CONFIG
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO
    except IntegrationError as exc:
        click.echo(f"integration failed: {exc}", err=True)
        return EXIT_NOT_CONVERGED
    return EXIT_OK if code is None else int(code)


def main() -> None:
    sys.exit(run())


__all__ = ["analysis_report", "cli", "main", "run", "run_optimization", "run_simulation"]
