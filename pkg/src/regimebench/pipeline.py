"""End-to-end orchestration: raw prices in, labeled benchmark dataset out.

Stages run in order: ingest -> unit-root check -> regime-count selection
(-> optional global-k override) -> fit at the chosen k -> canonical
ordering -> labels -> event annotation -> label-utility evaluation. Every
artifact embeds the run id and config hash; identical configs and inputs
produce byte-identical artifacts (no timestamps anywhere). A stage failure
leaves that stage's files with a ``.partial`` suffix and aborts with the
stage name.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ingest as ingest_mod
from .em import FitConfig, fit, fit_inference
from .errors import RegimeBenchError, ValidationError
from .forecast import DEFAULT_HORIZONS, DEFAULT_LAGS, ForecastConfig, evaluate
from .labeling import (
    EventAnnotation,
    annotate,
    assign_labels,
    parse_events_csv,
    parse_labels_csv,
    serialize_labels_csv,
)
from .selection import information_criteria, select_k

STAGES = ("ingest", "adf", "select", "fit", "label", "annotate", "forecast", "emit")


class PipelineStageError(RegimeBenchError):
    """Wraps a stage failure with the stage name for exit-code mapping."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")

    @property
    def exit_code(self) -> int:
        return 10 + STAGES.index(self.stage)


@dataclass(frozen=True)
class PipelineConfig:
    input_path: str
    asset_id: str
    frequency: str
    out_dir: str
    missing_marker: str = "."
    start: str | None = None
    end: str | None = None
    resample: str = "weekly"
    k_min: int = 2
    k_max: int = 5
    global_k: int | None = None
    restarts: int = 200
    max_iterations: int = 500
    loglik_tolerance: float = 1e-6
    seed: int = 0
    demean: bool = False
    adf_max_lags: int | None = None
    horizons: tuple[int, ...] | None = None
    forecast_lags: int | None = None
    forecast_seeds: int = 10
    ridge_lambda: float = 1.0
    label_mode: str = "smoothed"
    events_path: str | None = None

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValidationError(f"k_min {self.k_min} > k_max {self.k_max}")
        if self.label_mode not in ("smoothed", "filtered"):
            raise ValidationError("label_mode must be smoothed or filtered")
        paths = [str(Path(self.input_path)), str(Path(self.out_dir))]
        if self.events_path:
            paths.append(str(Path(self.events_path)))
        if len(set(paths)) != len(paths):
            raise ValidationError("input, events, and output paths must be distinct")
        if self.horizons is not None:
            object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))

    def to_dict(self) -> dict:
        payload = {
            "input_path": self.input_path,
            "asset_id": self.asset_id,
            "frequency": self.frequency,
            "out_dir": self.out_dir,
            "missing_marker": self.missing_marker,
            "start": self.start,
            "end": self.end,
            "resample": self.resample,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "global_k": self.global_k,
            "restarts": self.restarts,
            "max_iterations": self.max_iterations,
            "loglik_tolerance": self.loglik_tolerance,
            "seed": self.seed,
            "demean": self.demean,
            "adf_max_lags": self.adf_max_lags,
            "horizons": list(self.horizons) if self.horizons else None,
            "forecast_lags": self.forecast_lags,
            "forecast_seeds": self.forecast_seeds,
            "ridge_lambda": self.ridge_lambda,
            "label_mode": self.label_mode,
            "events_path": self.events_path,
        }
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if "horizons" in payload and payload["horizons"] is not None:
            payload = dict(payload)
            payload["horizons"] = tuple(payload["horizons"])
        return cls(**payload)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def fit_config(self) -> FitConfig:
        return FitConfig(
            restarts=self.restarts,
            max_iterations=self.max_iterations,
            loglik_tolerance=self.loglik_tolerance,
            seed=self.seed,
            demean=self.demean,
        )

    def config_hash(self) -> str:
        """Hash of the analytical fields; file locations are excluded so the
        same analysis hashes identically anywhere (input content is mixed
        into the run id separately)."""
        payload = self.to_dict()
        for key in ("input_path", "out_dir", "events_path"):
            payload.pop(key)
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


class _ArtifactWriter:
    """Two-phase artifact emission: stage files stay .partial until the
    stage completes, so an abort leaves them identifiable. Every artifact
    carries the run id and config hash (comment line for text formats,
    top-level keys for JSON)."""

    def __init__(self, out_dir: Path, run_id: str, config_hash: str):
        self.out_dir = out_dir
        self.run_id = run_id
        self.config_hash = config_hash
        self.pending: list[tuple[Path, Path]] = []
        self.hashes: dict[str, str] = {}

    def stage_file(self, name: str, text: str, comment: bool = True) -> None:
        if comment:
            text = f"# run_id={self.run_id} config_hash={self.config_hash}\n{text}"
        partial = self.out_dir / (name + ".partial")
        partial.write_text(text, encoding="utf-8")
        self.pending.append((partial, self.out_dir / name))
        self.hashes[name] = _sha256(text)

    def stage_json(self, name: str, payload: dict) -> None:
        tagged = {"run_id": self.run_id, "config_hash": self.config_hash, **payload}
        self.stage_file(name, json.dumps(tagged, indent=2, sort_keys=True), comment=False)

    def finalize_stage(self) -> None:
        for partial, final in self.pending:
            os.replace(partial, final)
        self.pending = []


def _parse_date(value: str | None) -> dt.date | None:
    return dt.date.fromisoformat(value) if value else None


def label_switch_frequency(labels) -> float:
    """Share of adjacent timestep pairs whose label differs."""
    values = np.asarray(labels.labels if hasattr(labels, "labels") else labels)
    if len(values) < 2:
        return 0.0
    return float(np.mean(values[1:] != values[:-1]))


def run(config: PipelineConfig) -> dict:
    """Execute the full pipeline; returns the run report dict."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PipelineStageError("ingest", ValidationError(f"cannot write {out_dir}"))
    try:
        raw_text = Path(config.input_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineStageError("ingest", exc) from exc

    config_hash = config.config_hash()
    events_text = ""
    if config.events_path:
        try:
            events_text = Path(config.events_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise PipelineStageError("annotate", exc) from exc
    run_id = hashlib.sha256(
        (config_hash + _sha256(raw_text) + _sha256(events_text)).encode()
    ).hexdigest()[:16]
    writer = _ArtifactWriter(out_dir, run_id, config_hash)
    asset = config.asset_id
    report: dict = {
        "run_id": run_id,
        "config_hash": config_hash,
        "config": config.to_dict(),
        "asset_id": asset,
    }

    # ingest
    try:
        parsed = ingest_mod.parse_price_csv(
            raw_text, asset, config.frequency, config.missing_marker
        )
        windowed = ingest_mod.clip_window(
            parsed, _parse_date(config.start), _parse_date(config.end)
        )
        resampled = ingest_mod.resample_period_end(windowed, config.resample)
        returns = ingest_mod.percent_change(resampled)
        meta = {
            "rows": len(windowed),
            "missing": windowed.n_missing,
            "dropped_periods": ingest_mod.count_dropped_periods(
                windowed, config.resample
            ),
            "resampled_length": len(resampled),
            "returns_length": len(returns),
        }
        writer.stage_file(
            f"{asset}_resampled_prices.csv", ingest_mod.serialize_price_csv(resampled)
        )
        writer.stage_file(
            f"{asset}_returns.csv",
            f"# asset_id={asset} source_frequency={config.resample}\n"
            + ingest_mod.serialize_returns_csv(returns),
        )
        writer.stage_json(f"{asset}_returns_meta.json", meta)
        writer.finalize_stage()
        report["ingest"] = meta
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError("ingest", exc) from exc

    # adf
    try:
        from .stationarity import adf_test

        adf_result = adf_test(returns, max_lags=config.adf_max_lags)
        report["adf"] = adf_result.to_dict()
    except Exception as exc:
        raise PipelineStageError("adf", exc) from exc

    # select
    try:
        fit_config = config.fit_config()
        selection = select_k(
            returns, range(config.k_min, config.k_max + 1), fit_config, asset_id=asset
        )
        effective_k = config.global_k if config.global_k is not None else selection.chosen_k
        writer.stage_file(f"{asset}_selection.txt", selection.to_table())
        writer.stage_json(f"{asset}_selection.json", selection.to_dict())
        writer.finalize_stage()
        report["selection"] = {
            "chosen_k": selection.chosen_k,
            "global_k_override": config.global_k,
            "effective_k": effective_k,
            "table": [c.to_dict() for c, _ in selection.per_k],
        }
    except Exception as exc:
        raise PipelineStageError("select", exc) from exc

    # fit at the effective k (reuse the selection fit when available)
    try:
        fit_report = None
        for criteria, candidate in selection.per_k:
            if criteria.k == effective_k:
                fit_report = candidate
                break
        if fit_report is None:
            fit_report = fit(effective_k, returns, fit_config)
        criteria = information_criteria(fit_report, effective_k, len(returns))
        writer.stage_json(f"{asset}_fit.json", fit_report.to_dict())
        writer.finalize_stage()
        report["fit"] = {
            "k": effective_k,
            "loglik": fit_report.best_loglik,
            "converged": fit_report.converged,
            "occupancy": [int(c) for c in fit_report.occupancy],
            "occupancy_ok": bool((fit_report.occupancy > 0).all()),
            "params": fit_report.best_params.to_dict(),
            "criteria": criteria.to_dict(),
        }
    except Exception as exc:
        raise PipelineStageError("fit", exc) from exc

    # label
    try:
        inference = fit_inference(fit_report, returns)
        labels = assign_labels(
            inference, returns.dates, asset_id=asset, mode=config.label_mode
        )
        writer.stage_file(f"{asset}_labels.csv", serialize_labels_csv(labels))
        writer.finalize_stage()
        report["labels"] = {
            "mode": config.label_mode,
            "switch_frequency": label_switch_frequency(labels),
            "counts": {
                str(label): int((labels.labels == label).sum())
                for label in range(1, labels.k + 1)
            },
        }
    except Exception as exc:
        raise PipelineStageError("label", exc) from exc

    # annotate
    try:
        if config.events_path:
            events = parse_events_csv(events_text)
        else:
            events = EventAnnotation(intervals=())
        annotated = annotate(labels, events)
        writer.stage_json(f"{asset}_annotated.json", annotated)
        writer.finalize_stage()
        report["annotate"] = {
            "n_events": len(annotated["events"]),
            "n_segments": len(annotated["segments"]),
        }
    except Exception as exc:
        raise PipelineStageError("annotate", exc) from exc

    # forecast
    try:
        horizons = config.horizons or DEFAULT_HORIZONS.get(
            returns.source_frequency, (1, 4, 13)
        )
        lags = config.forecast_lags or DEFAULT_LAGS.get(returns.source_frequency, 13)
        forecast_config = ForecastConfig(
            ridge_lambda=config.ridge_lambda, label_mode=config.label_mode
        )
        mse_report = evaluate(
            returns,
            labels,
            horizons=horizons,
            seeds=range(config.forecast_seeds),
            config=forecast_config,
            lags=lags,
        )
        writer.stage_json(f"{asset}_mse.json", mse_report.to_dict())
        writer.stage_file(f"{asset}_mse.csv", mse_report.to_plot_csv())
        writer.finalize_stage()
        report["forecast"] = {
            "per_horizon": mse_report.per_horizon,
            "label_mode": mse_report.label_mode,
            "lags": mse_report.lags,
            "horizons": [int(h) for h in horizons],
        }
    except Exception as exc:
        raise PipelineStageError("forecast", exc) from exc

    # run report
    try:
        report["artifacts"] = dict(sorted(writer.hashes.items()))
        report_text = json.dumps(report, indent=2, sort_keys=True)
        writer.stage_file(f"{asset}_run.json", report_text, comment=False)
        writer.finalize_stage()
    except Exception as exc:
        raise PipelineStageError("emit", exc) from exc
    return report


def emit_plot_data(run_dir: str | Path, asset_id: str) -> list[str]:
    """Recreate the four figure panels from a completed run's artifacts.

    One CSV per panel: price series, return series, smoothed regime
    probabilities, and label series.
    """
    run_dir = Path(run_dir)
    report_path = run_dir / f"{asset_id}_run.json"
    try:
        report = json.loads(report_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PipelineStageError("emit", exc) from exc
    writer = _ArtifactWriter(run_dir, report["run_id"], report["config_hash"])
    try:
        prices_text = (run_dir / f"{asset_id}_resampled_prices.csv").read_text(
            encoding="utf-8"
        )
        prices = ingest_mod.parse_price_csv(
            "\n".join(
                line for line in prices_text.splitlines() if not line.startswith("#")
            ),
            asset_id,
            "daily" if report["config"]["resample"] != "monthly" else "monthly",
        )
        labels = parse_labels_csv(
            (run_dir / f"{asset_id}_labels.csv").read_text(encoding="utf-8"), asset_id
        )
        returns_text = (run_dir / f"{asset_id}_returns.csv").read_text(encoding="utf-8")

        price_lines = ["date,price"] + [
            f"{day.isoformat()},{float(p)!r}"
            for day, p in zip(prices.dates, prices.prices)
        ]
        writer.stage_file(f"{asset_id}_panel_price.csv", "\n".join(price_lines) + "\n")

        returns_body = "\n".join(
            line for line in returns_text.splitlines() if not line.startswith("#")
        )
        writer.stage_file(f"{asset_id}_panel_returns.csv", returns_body + "\n")

        prob_header = "date," + ",".join(f"p_{i}" for i in range(1, labels.k + 1))
        prob_lines = [prob_header] + [
            labels.dates[t].isoformat()
            + ","
            + ",".join(repr(float(v)) for v in labels.probabilities[t])
            for t in range(len(labels))
        ]
        writer.stage_file(
            f"{asset_id}_panel_probabilities.csv", "\n".join(prob_lines) + "\n"
        )

        label_lines = ["date,label"] + [
            f"{labels.dates[t].isoformat()},{int(labels.labels[t])}"
            for t in range(len(labels))
        ]
        writer.stage_file(f"{asset_id}_panel_labels.csv", "\n".join(label_lines) + "\n")
        writer.finalize_stage()
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError("emit", exc) from exc
    return sorted(writer.hashes)
