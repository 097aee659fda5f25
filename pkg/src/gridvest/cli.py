"""CLI interface for the battery investment planner."""

from __future__ import annotations

import logging
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, NoReturn

import typer
from rich.logging import RichHandler

from . import __version__
from .cashflow import build_cashflow, capacity_table, cashflow_bars, summary_report, yearly_cash_table
from .checker import check_curve_file, check_plan_files
from .core import ensure_output_directory, load_config, write_csv, write_json
from .exceptions import GridvestError
from .igdt import DeviationGrid, sweep, write_curve
from .milp import write_lp
from .models import BATTERY_TYPES, RunConfig
from .planner import (
    PlanningInputs,
    build_model,
    compare_types,
    export_plan,
    load_inputs,
    problem_from_config,
    solve_plan,
)
from .reporter import (
    format_check_report,
    format_curve,
    format_inputs_summary,
    format_summary_table,
    format_type_results,
)
from .timeseries import TimeGrid, default_catalog_path, synth_scenario, write_scenario

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="gridvest",
    help="Plan community battery investments and measure their robustness to PV and EV uncertainty.",
    add_completion=False,
)


@dataclass
class GlobalOptions:
    config: Path | None = None
    out: Path | None = None
    seed: int | None = None
    representative_day: bool | None = None
    curtailment: bool | None = None

    def overrides(self) -> dict[str, Any]:
        result: dict[str, Any] = {}
        if self.out is not None:
            result.setdefault("paths", {})["output_dir"] = str(self.out)
        if self.seed is not None:
            result["seed"] = self.seed
        if self.representative_day is not None:
            result.setdefault("grid", {})["representative_day"] = self.representative_day
        if self.curtailment is not None:
            result.setdefault("planning", {})["allow_curtailment"] = self.curtailment
        return result


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        typer.echo(f"gridvest version: {__version__}")
        raise typer.Exit(0)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(show_path=False, markup=False)],
        force=True,
    )


@app.callback()
def callback(
    ctx: typer.Context,
    version: Annotated[
        bool | None,
        typer.Option("--version", "-V", callback=version_callback, is_eager=True),
    ] = None,
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Log solver progress at DEBUG level.")] = False,
    config: Annotated[Path | None, typer.Option("--config", "-c", help="Run configuration JSON file.")] = None,
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Output directory for reports.")] = None,
    seed: Annotated[int | None, typer.Option("--seed", help="Seed for synthetic data.")] = None,
    rep_day: Annotated[
        bool | None,
        typer.Option("--rep-day/--full", help="Representative day per quarter, or every day."),
    ] = None,
    curtailment: Annotated[
        bool | None,
        typer.Option("--curtailment/--no-curtailment", help="Allow PV curtailment."),
    ] = None,
) -> None:
    """Plan community battery investments under PV and EV uncertainty."""
    _setup_logging(verbose)
    ctx.obj = GlobalOptions(config, out, seed, rep_day, curtailment)


def _fail(error: GridvestError) -> NoReturn:
    typer.echo(f"Error: {error.message}", err=True)
    if error.details:
        typer.echo(f"Details: {error.details}", err=True)
    raise typer.Exit(error.exit_code)


def _config(ctx: typer.Context, extra: dict[str, Any] | None = None) -> RunConfig:
    options: GlobalOptions = ctx.obj or GlobalOptions()
    overrides = options.overrides()
    for section, values in (extra or {}).items():
        overrides.setdefault(section, {}).update(values)
    return load_config(options.config, overrides)


def _parse_list(text: str, cast: type, label: str) -> list[Any]:
    try:
        return [cast(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise typer.BadParameter(f"Invalid {label} list '{text}'") from None


@app.command()
def validate(ctx: typer.Context) -> None:
    """Load configuration, scenario and catalog, and print a summary. Solves nothing."""
    try:
        config = _config(ctx)
        inputs = load_inputs(config)
    except GridvestError as e:
        _fail(e)
    typer.echo(format_inputs_summary(inputs))
    typer.echo("\n✅ Inputs are valid")


def _export_tables(inputs: PlanningInputs, results: list[Any], baseline: Any, config: RunConfig, literal: bool) -> list[Path]:
    out = config.paths.output_dir
    seed = config.seed
    plans = sorted((r.plan for r in results if r.plan is not None), key=lambda p: p.battery_type)
    written = [
        write_csv(capacity_table(plans), "table1_capacity.csv", out, seed),
        write_csv(yearly_cash_table(plans, "capex"), "table2_capex.csv", out, seed),
        write_csv(yearly_cash_table(plans, "opex_no_battery", baseline), "table3_opex_no_battery.csv", out, seed),
        write_csv(yearly_cash_table(plans, "opex"), "table4_opex_with_battery.csv", out, seed),
    ]
    summary = summary_report(results, baseline, literal_profit=literal)
    written.append(write_csv(summary, "table5_summary.csv", out, seed))
    for plan in plans:
        report = build_cashflow(plan, baseline, literal_profit=literal)
        written.append(write_csv(cashflow_bars(report), f"cashflow_type{plan.battery_type}.csv", out, seed))

    winner = next((r.battery_type for r in results if r.winner), None)
    written.append(
        write_json(
            {
                "baseline_objective": baseline.objective,
                "winner": winner,
                "years": inputs.grid.years,
                "representative_day": inputs.grid.representative_day,
                "synthetic_inputs": inputs.synthetic,
                "types": [
                    {
                        "battery_type": r.battery_type,
                        "rank": r.rank,
                        "winner": r.winner,
                        "objective": r.plan.objective if r.plan else None,
                        "capex": r.plan.capex if r.plan else None,
                        "opex": r.plan.opex if r.plan else None,
                        "error": r.error,
                    }
                    for r in sorted(results, key=lambda r: r.battery_type)
                ],
            },
            "summary.json",
            out,
            seed,
        )
    )
    typer.echo("\n" + format_summary_table(summary))
    return written


@app.command()
def plan(
    ctx: typer.Context,
    types: Annotated[
        str | None,
        typer.Option("--types", help="Comma-separated battery types (1,2,4,8). Empty runs the baseline only."),
    ] = None,
    workers: Annotated[int | None, typer.Option("--workers", "-w", help="Worker processes.")] = None,
    literal_profit: Annotated[
        bool, typer.Option("--literal-profit", help="Profit as cumulative baseline Opex minus current-year Opex.")
    ] = False,
    lp_dump: Annotated[bool, typer.Option("--lp-dump", help="Also write each model in LP format.")] = False,
) -> None:
    """Solve the investment plan for every battery type and write all reports."""
    try:
        extra = {"planning": {"types": _parse_list(types, int, "type")}} if types is not None else None
        config = _config(ctx, extra)
        inputs = load_inputs(config)
    except GridvestError as e:
        _fail(e)

    chosen = config.planning.types
    out = ensure_output_directory(config.paths.output_dir)
    typer.echo(f"Planning {inputs.grid.years} years for types {chosen or 'none (baseline only)'}")
    base = problem_from_config(config, chosen[0] if chosen else BATTERY_TYPES[0], inputs)

    try:
        baseline = solve_plan(base.no_battery())
    except GridvestError as e:
        typer.echo("Baseline (no battery) solve failed.", err=True)
        _fail(e)

    results = compare_types(base, chosen, max_workers=workers)
    typer.echo(format_type_results(results, baseline))

    written = export_plan(base.no_battery(), baseline, out, config.seed)
    for result in results:
        if result.plan is not None:
            written += export_plan(base.with_type(result.battery_type), result.plan, out, config.seed)
        if lp_dump:
            written.append(write_lp(build_model(base.with_type(result.battery_type)), out / f"model_type{result.battery_type}.lp"))
    written += _export_tables(inputs, results, baseline, config, literal_profit)

    typer.echo(f"\n📁 Wrote {len(written)} files to {out}")
    failed = [r for r in results if r.plan is None]
    if chosen and len(failed) == len(results):
        typer.echo(f"\n⚠️  All {len(results)} battery types failed.", err=True)
        raise typer.Exit(1)
    if failed:
        typer.echo(f"\n⚠️  {len(failed)} of {len(results)} battery types failed.", err=True)


@app.command()
def igdt(
    ctx: typer.Context,
    battery_type: Annotated[int | None, typer.Option("--type", "-t", help="Battery type to analyse.")] = None,
    betas: Annotated[str | None, typer.Option("--betas", help="Comma-separated deviation factors.")] = None,
    mode: Annotated[str | None, typer.Option("--mode", help="robustness, opportunity or both.")] = None,
    coupling: Annotated[str | None, typer.Option("--coupling", help="independent or joint.")] = None,
    workers: Annotated[int | None, typer.Option("--workers", "-w", help="Worker processes.")] = None,
) -> None:
    """Sweep robustness and opportunity radii around the deterministic plan."""
    try:
        section: dict[str, Any] = {}
        if betas is not None:
            section["betas"] = _parse_list(betas, float, "beta")
        if mode is not None:
            section["mode"] = mode.lower()
        if coupling is not None:
            section["coupling"] = coupling.lower()
        if battery_type is not None:
            section["battery_type"] = battery_type
        config = _config(ctx, {"igdt": section} if section else None)
        inputs = load_inputs(config)
        grid = DeviationGrid(tuple(config.igdt.betas), config.igdt.mode)
    except GridvestError as e:
        _fail(e)
    except ValueError as e:
        raise typer.BadParameter(str(e)) from e

    chosen = config.igdt.battery_type
    base = problem_from_config(config, chosen or BATTERY_TYPES[0], inputs)
    if chosen is None:
        typer.echo("No battery type given; picking the cheapest of the planning types")
        ranked = compare_types(base, config.planning.types, max_workers=workers)
        winner = next((r for r in ranked if r.winner), None)
        if winner is None:
            typer.echo("Error: every battery type failed; no plan to analyse", err=True)
            raise typer.Exit(1)
        chosen = winner.battery_type
        base = base.with_type(chosen)

    typer.echo(f"Battery type: {chosen}h  betas: {list(grid.betas)}  mode: {grid.mode}  coupling: {config.igdt.coupling}")
    try:
        anchor = solve_plan(base).objective
    except GridvestError as e:
        typer.echo("Deterministic anchor solve failed.", err=True)
        _fail(e)

    curve = sweep(
        base,
        grid,
        coupling=config.igdt.coupling,
        alpha_tol=config.igdt.alpha_tol,
        max_iter=config.igdt.max_iter,
        anchor=anchor,
        max_workers=workers,
    )
    typer.echo(format_curve(curve))
    written = write_curve(curve, config.paths.output_dir, config.seed)
    typer.echo(f"\n📁 Wrote {', '.join(str(p) for p in written)}")
    failed = sum(1 for r in curve.results if r.failed)
    if failed:
        typer.echo(f"\n⚠️  {failed} of {len(curve.results)} radius computations failed.", err=True)


@app.command()
def synth(
    ctx: typer.Context,
    output: Annotated[Path | None, typer.Option("--output", help="Scenario CSV path.")] = None,
    catalog: Annotated[bool, typer.Option("--catalog", help="Also copy the packaged battery price catalog.")] = False,
) -> None:
    """Write a synthetic scenario CSV for the configured grid and seed."""
    try:
        config = _config(ctx)
    except GridvestError as e:
        _fail(e)
    g = config.grid
    grid = TimeGrid(years=g.years, quarter_days=tuple(g.quarter_days), representative_day=g.representative_day)
    scenario = synth_scenario(config.seed, grid, config.synth)
    target = output or config.paths.output_dir / f"scenario_seed{config.seed}.csv"
    written = write_scenario(scenario, target)
    typer.echo(f"Wrote {grid.num_slots} slots to {written}")
    if catalog:
        copy = ensure_output_directory(written.parent) / "table1_catalog.csv"
        shutil.copyfile(default_catalog_path(), copy)
        typer.echo(f"Wrote catalog to {copy}")


@app.command()
def check(
    ctx: typer.Context,
    dispatch: Annotated[Path, typer.Argument(help="dispatch_*.csv written by 'plan'.")],
    plan_summary: Annotated[Path, typer.Argument(help="Matching plan_*.json.")],
    curve: Annotated[Path | None, typer.Option("--curve", help="IGDT curve JSON to band-check.")] = None,
) -> None:
    """Re-verify written plan files (and optionally an IGDT curve)."""
    try:
        reports = [check_plan_files(dispatch, plan_summary)]
        if curve is not None:
            config = _config(ctx)
            problem = problem_from_config(config, BATTERY_TYPES[0])
            reports.append(check_curve_file(curve, problem, config.igdt.alpha_tol))
    except GridvestError as e:
        _fail(e)

    for report in reports:
        typer.echo(format_check_report(report))
    if not all(r.passed for r in reports):
        raise typer.Exit(1)


def main() -> None:
    """Entry point for the CLI application."""
    app()
