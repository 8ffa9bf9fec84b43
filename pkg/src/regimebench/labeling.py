"""Task labels from regime probabilities, plus event annotation.

Regime identity is canonicalized to ascending emission scale, so label k is
always the highest-volatility regime no matter how a fit happened to order
its restarts. Labels are the per-timestep argmax of the smoothed
probabilities; full probability rows travel with the labels so downstream
users can apply their own thresholds.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SigmaTieWarning, ValidationError
from .regime import InferenceResult, RegimeParams

SIGMA_TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LabelSeries:
    """Per-timestep regime labels (1..k) with their probability rows."""

    dates: tuple[dt.date, ...]
    labels: np.ndarray
    probabilities: np.ndarray
    k: int
    asset_id: str

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        labels = np.asarray(self.labels, dtype=np.int64)
        probs = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probabilities", probs)
        if not (len(self.dates) == len(labels) == len(probs)):
            raise ValidationError("dates, labels, probabilities lengths differ")
        if probs.ndim != 2 or probs.shape[1] != self.k:
            raise ValidationError(f"probabilities must be (T, {self.k})")
        if len(labels) and not ((labels >= 1) & (labels <= self.k)).all():
            raise ValidationError(f"labels must lie in 1..{self.k}")
        if len(labels) and not (labels == probs.argmax(axis=1) + 1).all():
            raise ValidationError("labels must be the argmax of their probability row")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class EventInterval:
    start: dt.date
    end: dt.date
    tag: str
    kind: str  # "recession" or "event"

    def __post_init__(self):
        if self.start > self.end:
            raise ValidationError(f"event {self.tag!r}: start after end")
        if self.kind not in ("recession", "event"):
            raise ValidationError(f"event kind must be recession/event, got {self.kind!r}")


@dataclass(frozen=True)
class EventAnnotation:
    intervals: tuple[EventInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))


def order_regimes(
    params: RegimeParams, inference: InferenceResult
) -> tuple[RegimeParams, InferenceResult]:
    """Permute regimes so sigma ascends; probabilities permuted consistently.

    Ties within 1e-12 keep their original relative order and raise a
    SigmaTieWarning.
    """
    perm = np.argsort(params.sigma, kind="stable")
    ordered = np.sort(params.sigma)
    if len(ordered) > 1 and np.min(np.diff(ordered)) <= SIGMA_TIE_TOL:
        warnings.warn(
            "duplicate emission scales; regime order tie-broken by original index",
            SigmaTieWarning,
            stacklevel=2,
        )
    return params.permuted(perm), inference.permuted(perm)


def assign_labels(
    inference: InferenceResult,
    dates,
    asset_id: str = "",
    mode: str = "smoothed",
) -> LabelSeries:
    """Argmax labels (lowest index on exact ties) from probability rows.

    ``mode`` selects smoothed (default) or filtered probabilities; filtered
    labels are a leakage-safe diagnostic.
    """
    if mode == "smoothed":
        probs = inference.smoothed
        if probs is None:
            raise ValidationError("inference has no smoothed probabilities")
    elif mode == "filtered":
        probs = inference.filtered
    else:
        raise ValidationError(f"mode must be smoothed/filtered, got {mode!r}")
    dates = tuple(dates)
    if len(dates) != probs.shape[0]:
        raise ValidationError(
            f"{len(dates)} dates for {probs.shape[0]} probability rows"
        )
    labels = probs.argmax(axis=1) + 1
    return LabelSeries(
        dates=dates,
        labels=labels,
        probabilities=probs,
        k=probs.shape[1],
        asset_id=asset_id,
    )


def label_segments(labels: LabelSeries) -> list[dict]:
    """Contiguous constant-label runs; together they partition the date range."""
    segments = []
    if len(labels) == 0:
        return segments
    run_start = 0
    for t in range(1, len(labels) + 1):
        if t == len(labels) or labels.labels[t] != labels.labels[run_start]:
            segments.append(
                {
                    "start": labels.dates[run_start].isoformat(),
                    "end": labels.dates[t - 1].isoformat(),
                    "label": int(labels.labels[run_start]),
                    "n_obs": t - run_start,
                }
            )
            run_start = t
    return segments


def annotate(labels: LabelSeries, events: EventAnnotation | None = None) -> dict:
    """Join label segments with event intervals.

    Each event interval reports the label distribution inside it and its
    dominant label; each segment lists the tags of events it overlaps.
    """
    events = events or EventAnnotation(intervals=())
    segments = label_segments(labels)
    for segment in segments:
        seg_start = dt.date.fromisoformat(segment["start"])
        seg_end = dt.date.fromisoformat(segment["end"])
        segment["events"] = [
            interval.tag
            for interval in events.intervals
            if interval.start <= seg_end and seg_start <= interval.end
        ]
    event_reports = []
    date_arr = labels.dates
    for interval in events.intervals:
        idx = [
            t
            for t, day in enumerate(date_arr)
            if interval.start <= day <= interval.end
        ]
        counts = np.bincount(
            labels.labels[idx] if idx else np.array([], dtype=np.int64),
            minlength=labels.k + 1,
        )[1:]
        n_obs = int(counts.sum())
        shares = {
            str(label): float(counts[label - 1] / n_obs) if n_obs else 0.0
            for label in range(1, labels.k + 1)
        }
        dominant = int(np.argmax(counts) + 1) if n_obs else None
        event_reports.append(
            {
                "start": interval.start.isoformat(),
                "end": interval.end.isoformat(),
                "kind": interval.kind,
                "tag": interval.tag,
                "n_obs": n_obs,
                "label_shares": shares,
                "dominant_label": dominant,
            }
        )
    return {
        "asset_id": labels.asset_id,
        "k": labels.k,
        "segments": segments,
        "events": event_reports,
    }


def serialize_labels_csv(labels: LabelSeries) -> str:
    header = ["date", "label"] + [f"p_{i}" for i in range(1, labels.k + 1)]
    lines = [",".join(header)]
    for t in range(len(labels)):
        row = [labels.dates[t].isoformat(), str(int(labels.labels[t]))]
        row += [repr(float(p)) for p in labels.probabilities[t]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_labels_csv(raw_text: str, asset_id: str = "") -> LabelSeries:
    rows = [
        r
        for r in csv.reader(io.StringIO(raw_text))
        if r and not r[0].lstrip().startswith("#")
    ]
    if len(rows) < 2:
        raise ValidationError("labels CSV has no data rows")
    k = len(rows[0]) - 2
    if k < 1:
        raise ValidationError("labels CSV must have p_1..p_k columns")
    dates, labels, probs = [], [], []
    for row in rows[1:]:
        dates.append(dt.date.fromisoformat(row[0]))
        labels.append(int(row[1]))
        probs.append([float(v) for v in row[2:]])
    return LabelSeries(
        dates=tuple(dates),
        labels=np.array(labels),
        probabilities=np.array(probs),
        k=k,
        asset_id=asset_id,
    )


def parse_events_csv(raw_text: str) -> EventAnnotation:
    """Events CSV: header then rows of (start, end, kind, tag)."""
    rows = [r for r in csv.reader(io.StringIO(raw_text)) if r]
    intervals = []
    for row in rows[1:]:
        if len(row) < 4:
            raise ValidationError(f"event row needs 4 columns: {row!r}")
        intervals.append(
            EventInterval(
                start=dt.date.fromisoformat(row[0].strip()),
                end=dt.date.fromisoformat(row[1].strip()),
                kind=row[2].strip(),
                tag=row[3].strip(),
            )
        )
    return EventAnnotation(intervals=tuple(intervals))
