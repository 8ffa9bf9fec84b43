"""Command-line interface.

``regimebench run -c config.json`` drives the whole pipeline; the other
subcommands expose individual stages on intermediate CSV artifacts.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import ingest as ingest_mod
from .em import FitConfig, fit
from .errors import RegimeBenchError
from .forecast import ForecastConfig, evaluate
from .labeling import assign_labels, parse_labels_csv, serialize_labels_csv
from .pipeline import PipelineConfig, PipelineStageError, emit_plot_data
from .pipeline import run as run_pipeline
from .selection import select_k
from .stationarity import adf_test


def _read_returns(path: str, asset_id: str | None, frequency: str | None):
    """Load a returns CSV, recovering metadata from its comment preamble."""
    text = Path(path).read_text(encoding="utf-8")
    meta = {}
    for line in text.splitlines():
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    key, value = token.split("=", 1)
                    meta[key] = value
        else:
            break
    return ingest_mod.parse_returns_csv(
        text,
        asset_id or meta.get("asset_id", "asset"),
        frequency or meta.get("source_frequency", "weekly"),
    )


def _fit_config(restarts, max_iterations, tolerance, seed, demean) -> FitConfig:
    return FitConfig(
        restarts=restarts,
        max_iterations=max_iterations,
        loglik_tolerance=tolerance,
        seed=seed,
        demean=demean,
    )


fit_options = [
    click.option("--restarts", default=200, show_default=True),
    click.option("--max-iterations", default=500, show_default=True),
    click.option("--tolerance", default=1e-6, show_default=True),
    click.option("--seed", default=0, show_default=True),
    click.option("--demean", is_flag=True, default=False),
]


def add_options(options):
    def wrap(func):
        for option in reversed(options):
            func = option(func)
        return func

    return wrap


@click.group()
def main():
    """Regime-labeled benchmark datasets from asset price series."""


@main.command("ingest")
@click.option("--input", "-i", "input_path", required=True, type=click.Path(exists=True))
@click.option("--asset", "-a", "asset_id", required=True)
@click.option("--frequency", "-f", type=click.Choice(["daily", "monthly"]), required=True)
@click.option("--target", "-t", type=click.Choice(["weekly", "monthly", "2d"]), default="weekly", show_default=True)
@click.option("--start", default=None, help="inclusive ISO date window start")
@click.option("--end", default=None, help="inclusive ISO date window end")
@click.option("--missing-marker", default=".", show_default=True)
@click.option("--out", "-o", "out_path", required=True, type=click.Path())
def ingest_cmd(input_path, asset_id, frequency, target, start, end, missing_marker, out_path):
    """Parse, window, resample, and write the percent-change returns CSV."""
    import datetime as dt

    raw = Path(input_path).read_text(encoding="utf-8")
    series = ingest_mod.parse_price_csv(raw, asset_id, frequency, missing_marker)
    series = ingest_mod.clip_window(
        series,
        dt.date.fromisoformat(start) if start else None,
        dt.date.fromisoformat(end) if end else None,
    )
    resampled = ingest_mod.resample_period_end(series, target)
    returns = ingest_mod.percent_change(resampled)
    text = f"# asset_id={asset_id} source_frequency={target}\n"
    text += ingest_mod.serialize_returns_csv(returns)
    Path(out_path).write_text(text, encoding="utf-8")
    sidecar = {
        "rows": len(series),
        "missing": series.n_missing,
        "dropped_periods": ingest_mod.count_dropped_periods(series, target),
    }
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8"
    )
    click.echo(f"wrote {out_path} ({len(returns)} returns)")


@main.command("adf")
@click.option("--returns", "-r", "returns_path", required=True, type=click.Path(exists=True))
@click.option("--asset", "asset_id", default=None)
@click.option("--max-lags", default=None, type=int)
def adf_cmd(returns_path, asset_id, max_lags):
    """Augmented Dickey-Fuller unit-root test on a returns CSV."""
    returns = _read_returns(returns_path, asset_id, None)
    result = adf_test(returns, max_lags=max_lags)
    click.echo(json.dumps(result.to_dict(), indent=2, sort_keys=True))


@main.command("select")
@click.option("--returns", "-r", "returns_path", required=True, type=click.Path(exists=True))
@click.option("--asset", "asset_id", default=None)
@click.option("--k-min", default=2, show_default=True)
@click.option("--k-max", default=5, show_default=True)
@add_options(fit_options)
@click.option("--json-out", default=None, type=click.Path())
def select_cmd(returns_path, asset_id, k_min, k_max, restarts, max_iterations,
               tolerance, seed, demean, json_out):
    """Fit each candidate k and print the information-criteria table."""
    returns = _read_returns(returns_path, asset_id, None)
    report = select_k(
        returns,
        range(k_min, k_max + 1),
        _fit_config(restarts, max_iterations, tolerance, seed, demean),
        asset_id=returns.asset_id,
    )
    click.echo(report.to_table(), nl=False)
    click.echo(f"chosen k = {report.chosen_k}")
    if json_out:
        Path(json_out).write_text(report.to_json(), encoding="utf-8")


@main.command("fit")
@click.option("--returns", "-r", "returns_path", required=True, type=click.Path(exists=True))
@click.option("--asset", "asset_id", default=None)
@click.option("-k", "k", required=True, type=int)
@add_options(fit_options)
@click.option("--out", "-o", "out_path", default=None, type=click.Path())
def fit_cmd(returns_path, asset_id, k, restarts, max_iterations, tolerance, seed,
            demean, out_path):
    """Multi-restart EM fit at a fixed regime count."""
    returns = _read_returns(returns_path, asset_id, None)
    report = fit(k, returns, _fit_config(restarts, max_iterations, tolerance, seed, demean))
    payload = report.to_json()
    if out_path:
        Path(out_path).write_text(payload, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(payload)


@main.command("label")
@click.option("--returns", "-r", "returns_path", required=True, type=click.Path(exists=True))
@click.option("--asset", "asset_id", default=None)
@click.option("-k", "k", required=True, type=int)
@add_options(fit_options)
@click.option("--mode", type=click.Choice(["smoothed", "filtered"]), default="smoothed", show_default=True)
@click.option("--out", "-o", "out_path", required=True, type=click.Path())
def label_cmd(returns_path, asset_id, k, restarts, max_iterations, tolerance, seed,
              demean, mode, out_path):
    """Fit and write argmax regime labels with their probability rows."""
    from .em import fit_inference

    returns = _read_returns(returns_path, asset_id, None)
    report = fit(k, returns, _fit_config(restarts, max_iterations, tolerance, seed, demean))
    inference = fit_inference(report, returns)
    labels = assign_labels(inference, returns.dates, returns.asset_id, mode=mode)
    Path(out_path).write_text(serialize_labels_csv(labels), encoding="utf-8")
    click.echo(f"wrote {out_path} ({len(labels)} labels, k={labels.k})")


@main.command("evaluate")
@click.option("--returns", "-r", "returns_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "-l", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--asset", "asset_id", default=None)
@click.option("--horizons", default="1,4,13", show_default=True)
@click.option("--seeds", default=10, show_default=True, help="number of seeds (0..n-1)")
@click.option("--lags", default=None, type=int)
@click.option("--ridge-lambda", default=1.0, show_default=True)
@click.option("--out", "-o", "out_path", default=None, type=click.Path())
def evaluate_cmd(returns_path, labels_path, asset_id, horizons, seeds, lags,
                 ridge_lambda, out_path):
    """Percent MSE improvement from adding labels to a ridge forecaster."""
    returns = _read_returns(returns_path, asset_id, None)
    labels = parse_labels_csv(
        Path(labels_path).read_text(encoding="utf-8"), returns.asset_id
    )
    report = evaluate(
        returns,
        labels,
        horizons=tuple(int(h) for h in horizons.split(",")),
        seeds=range(seeds),
        config=ForecastConfig(ridge_lambda=ridge_lambda),
        lags=lags,
    )
    payload = report.to_json()
    if out_path:
        Path(out_path).write_text(payload, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(payload)


@main.command("run")
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="override a config field (repeatable)")
def run_cmd(config_path, overrides):
    """Run the full pipeline from a flat JSON config file."""
    payload = json.loads(Path(config_path).read_text(encoding="utf-8"))
    for override in overrides:
        if "=" not in override:
            raise click.BadParameter(f"--set expects KEY=VALUE, got {override!r}")
        key, value = override.split("=", 1)
        try:
            payload[key] = json.loads(value)
        except json.JSONDecodeError:
            payload[key] = value
    try:
        config = PipelineConfig.from_dict(payload)
        report = run_pipeline(config)
    except PipelineStageError as exc:
        click.echo(f"pipeline failed at stage {exc.stage!r}: {exc.cause}", err=True)
        sys.exit(exc.exit_code)
    except RegimeBenchError as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        sys.exit(2)
    click.echo(
        f"run {report['run_id']} complete: k={report['selection']['effective_k']}, "
        f"artifacts in {config.out_dir}"
    )


@main.command("plot-data")
@click.option("--run-dir", required=True, type=click.Path(exists=True))
@click.option("--asset", "-a", "asset_id", required=True)
def plot_data_cmd(run_dir, asset_id):
    """Emit per-panel CSVs (price, returns, probabilities, labels)."""
    try:
        names = emit_plot_data(run_dir, asset_id)
    except PipelineStageError as exc:
        click.echo(f"plot-data failed: {exc.cause}", err=True)
        sys.exit(exc.exit_code)
    for name in names:
        click.echo(f"wrote {name}")


if __name__ == "__main__":
    main()
