"""Price CSV parsing, period-end resampling, and percent-change returns.

Raw price files are two-column CSVs (header row, then ``date,value`` rows)
where the value may be a missing-marker token. Resampling to period-end
prices removes every missing slot by construction: each calendar period
keeps its last present price and periods with no present price are dropped.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

RAW_FREQUENCIES = ("daily", "monthly")
RESAMPLE_TARGETS = ("weekly", "monthly", "2d")
DEFAULT_MISSING_MARKER = "."


def _freeze(values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Timestamped prices; absent observations are NaN slots in ``prices``.

    ``frequency`` is "daily" or "monthly" for raw input and the resample
    target ("weekly", "monthly", "2d") for resampled output.
    """

    dates: tuple[dt.date, ...]
    prices: np.ndarray
    frequency: str
    asset_id: str

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", _freeze(self.prices))
        if len(self.dates) != len(self.prices):
            raise ValidationError(
                f"{len(self.dates)} dates but {len(self.prices)} prices"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise ValidationError(f"dates not strictly increasing at {b}")
        present = ~np.isnan(self.prices)
        if not present.any():
            raise ValidationError("series has no present price")
        if (self.prices[present] <= 0).any():
            raise ValidationError("present prices must be strictly positive")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.prices).sum())


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Percent-change volatility proxy; no missing values."""

    dates: tuple[dt.date, ...]
    values: np.ndarray
    source_frequency: str
    asset_id: str

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", _freeze(self.values))
        if len(self.dates) != len(self.values):
            raise ValidationError(
                f"{len(self.dates)} dates but {len(self.values)} values"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise ValidationError(f"dates not strictly increasing at {b}")
        if not np.isfinite(self.values).all():
            raise ValidationError("return series contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


def parse_price_csv(
    raw_text: str,
    asset_id: str,
    frequency: str,
    missing_marker: str = DEFAULT_MISSING_MARKER,
) -> PriceSeries:
    """Parse a two-column price CSV into a PriceSeries.

    The first row is a header and is discarded. Values equal to
    ``missing_marker`` (or empty) become absent slots. Rows are sorted by
    date; duplicate dates are rejected.
    """
    if frequency not in RAW_FREQUENCIES:
        raise ValidationError(f"frequency must be one of {RAW_FREQUENCIES}")
    rows = list(csv.reader(io.StringIO(raw_text)))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise ValidationError("CSV has a header but no data rows")
    parsed: list[tuple[dt.date, float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise ParseError(f"row {lineno}: expected 2 columns, got {len(row)}")
        date_text = row[0].strip()
        value_text = row[1].strip()
        try:
            day = dt.date.fromisoformat(date_text)
        except ValueError:
            raise ParseError(f"row {lineno}: malformed date {date_text!r}") from None
        if value_text == missing_marker or value_text == "":
            value = math.nan
        else:
            try:
                value = float(value_text)
            except ValueError:
                raise ParseError(
                    f"row {lineno}: malformed value {value_text!r}"
                ) from None
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(
                    f"row {lineno}: non-positive price {value_text!r}"
                )
        parsed.append((day, value))
    parsed.sort(key=lambda item: item[0])
    for (a, _), (b, _) in zip(parsed, parsed[1:]):
        if a == b:
            raise ValidationError(f"duplicate date {a}")
    return PriceSeries(
        dates=tuple(d for d, _ in parsed),
        prices=np.array([v for _, v in parsed]),
        frequency=frequency,
        asset_id=asset_id,
    )


def serialize_price_csv(
    series: PriceSeries, missing_marker: str = DEFAULT_MISSING_MARKER
) -> str:
    lines = ["date,value"]
    for day, price in zip(series.dates, series.prices):
        cell = missing_marker if math.isnan(price) else repr(float(price))
        lines.append(f"{day.isoformat()},{cell}")
    return "\n".join(lines) + "\n"


def clip_window(
    series: PriceSeries,
    start: dt.date | None = None,
    end: dt.date | None = None,
) -> PriceSeries:
    """Drop observations outside the closed [start, end] window."""
    keep = [
        i
        for i, day in enumerate(series.dates)
        if (start is None or day >= start) and (end is None or day <= end)
    ]
    if not keep:
        raise ValidationError("window leaves no observations")
    return PriceSeries(
        dates=tuple(series.dates[i] for i in keep),
        prices=series.prices[keep],
        frequency=series.frequency,
        asset_id=series.asset_id,
    )


def period_key(day: dt.date, target: str):
    """Bucket identifier for a calendar day under the given resample target."""
    if target == "weekly":
        iso = day.isocalendar()
        return (iso[0], iso[1])
    if target == "monthly":
        return (day.year, day.month)
    if target == "2d":
        return day.toordinal() // 2
    raise ValidationError(f"unknown resample target {target!r}")


def resample_period_end(series: PriceSeries, target: str) -> PriceSeries:
    """One observation per calendar period: the last present price in it.

    Weeks are ISO-8601 (Mon-Sun); months are calendar months; "2d" buckets
    pair consecutive calendar days. Periods with no present price are
    dropped, so the output has no absent values. Monthly input passes
    through a monthly target unchanged.
    """
    if target not in RESAMPLE_TARGETS:
        raise ValidationError(f"target must be one of {RESAMPLE_TARGETS}")
    if series.frequency == "monthly":
        if target != "monthly":
            raise ValidationError(
                f"target {target!r} requires daily input, got monthly"
            )
        if not np.isnan(series.prices).any():
            return series
    out_dates: list[dt.date] = []
    out_prices: list[float] = []
    current_key = None
    current: tuple[dt.date, float] | None = None
    for day, price in zip(series.dates, series.prices):
        key = period_key(day, target)
        if key != current_key:
            if current is not None:
                out_dates.append(current[0])
                out_prices.append(current[1])
            current_key = key
            current = None
        if not math.isnan(price):
            current = (day, price)
    if current is not None:
        out_dates.append(current[0])
        out_prices.append(current[1])
    if not out_dates:
        raise ValidationError("resampling produced an empty series")
    return PriceSeries(
        dates=tuple(out_dates),
        prices=np.array(out_prices),
        frequency=target,
        asset_id=series.asset_id,
    )


def count_dropped_periods(series: PriceSeries, target: str) -> int:
    """Periods touched by the input that contribute no output observation."""
    touched = {period_key(day, target) for day in series.dates}
    kept = {
        period_key(day, target)
        for day, price in zip(series.dates, series.prices)
        if not math.isnan(price)
    }
    return len(touched) - len(kept)


def percent_change(series: PriceSeries) -> ReturnSeries:
    """return_t = 100 * (p_t - p_{t-1}) / p_{t-1}, dated at the later price."""
    if np.isnan(series.prices).any():
        raise ValidationError(
            "series has absent values; resample before computing returns"
        )
    if len(series) < 2:
        raise ValidationError("need at least 2 observations for percent change")
    prices = series.prices
    values = 100.0 * (prices[1:] - prices[:-1]) / prices[:-1]
    return ReturnSeries(
        dates=series.dates[1:],
        values=values,
        source_frequency=series.frequency,
        asset_id=series.asset_id,
    )


def serialize_returns_csv(returns: ReturnSeries) -> str:
    lines = ["date,return"]
    for day, value in zip(returns.dates, returns.values):
        lines.append(f"{day.isoformat()},{float(value)!r}")
    return "\n".join(lines) + "\n"


def parse_returns_csv(raw_text: str, asset_id: str, source_frequency: str) -> ReturnSeries:
    rows = [
        r
        for r in csv.reader(io.StringIO(raw_text))
        if r and not r[0].lstrip().startswith("#")
    ]
    if len(rows) < 2:
        raise ValidationError("returns CSV has no data rows")
    dates = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise ParseError(f"row {lineno}: expected 2 columns, got {len(row)}")
        try:
            dates.append(dt.date.fromisoformat(row[0].strip()))
            values.append(float(row[1]))
        except ValueError as exc:
            raise ParseError(f"row {lineno}: {exc}") from None
    return ReturnSeries(
        dates=tuple(dates),
        values=np.array(values),
        source_frequency=source_frequency,
        asset_id=asset_id,
    )
