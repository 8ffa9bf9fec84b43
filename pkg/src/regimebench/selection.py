"""Information criteria per candidate regime count and the choice of k.

The parameter count is p = k^2 (k emission variances plus k(k-1) free
transition entries; the common mean is excluded). The winner minimizes
AIC + BIC + HQIC among candidates that converged and keep every regime
occupied for at least one timestep, ties going to the smaller k.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .em import FitConfig, FitReport, fit
from .errors import SelectionFailureError, ValidationError


@dataclass(frozen=True)
class InfoCriteria:
    k: int
    p: int
    n: int
    loglik: float
    aic: float
    bic: float
    hqic: float
    sum: float
    occupancy_ok: bool
    converged: bool

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "p": self.p,
            "n": self.n,
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "hqic": self.hqic,
            "sum": self.sum,
            "occupancy_ok": self.occupancy_ok,
            "converged": self.converged,
        }


@dataclass(frozen=True, eq=False)
class SelectionReport:
    per_k: tuple[tuple[InfoCriteria, FitReport], ...]
    chosen_k: int
    asset_id: str = ""

    @property
    def chosen(self) -> tuple[InfoCriteria, FitReport]:
        for criteria, report in self.per_k:
            if criteria.k == self.chosen_k:
                return criteria, report
        raise KeyError(self.chosen_k)

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "chosen_k": self.chosen_k,
            "per_k": [
                {"criteria": criteria.to_dict(), "fit": report.to_dict()}
                for criteria, report in self.per_k
            ],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def to_table(self) -> str:
        """Text table with one row per candidate k (selection-table layout)."""
        header = f"{'Oil':<10}{'k Tasks':>8}{'AIC':>10}{'BIC':>10}{'HQIC':>10}{'Sum':>12}{'Converge':>10}"
        lines = [header]
        for criteria, _ in self.per_k:
            marker = "*" if criteria.k == self.chosen_k else ""
            lines.append(
                f"{self.asset_id:<10}"
                f"{criteria.k:>8}"
                f"{criteria.aic:>10.0f}"
                f"{criteria.bic:>10.0f}"
                f"{criteria.hqic:>10.0f}"
                f"{criteria.sum:>11.0f}{marker:<1}"
                f"{'Y' if criteria.converged else 'N':>9}"
            )
        return "\n".join(lines) + "\n"


def information_criteria(fit_report: FitReport, k: int, n: int) -> InfoCriteria:
    """AIC/BIC/HQIC for a fitted model with p = k^2 parameters.

    aic = -2 loglik + 2p, bic = -2 loglik + p ln n,
    hqic = -2 loglik + 2p ln ln n (natural logs).
    """
    if n < 3:
        raise ValidationError(f"need n >= 3 for ln ln n, got {n}")
    if k != fit_report.k:
        raise ValidationError(f"k={k} does not match fit report k={fit_report.k}")
    p = k * k
    loglik = fit_report.best_loglik
    aic = -2.0 * loglik + 2.0 * p
    bic = -2.0 * loglik + p * math.log(n)
    hqic = -2.0 * loglik + 2.0 * p * math.log(math.log(n))
    return InfoCriteria(
        k=k,
        p=p,
        n=n,
        loglik=loglik,
        aic=aic,
        bic=bic,
        hqic=hqic,
        sum=aic + bic + hqic,
        occupancy_ok=bool((fit_report.occupancy > 0).all()),
        converged=fit_report.converged,
    )


def select_k(
    returns,
    k_range,
    config: FitConfig | None = None,
    asset_id: str = "",
) -> SelectionReport:
    """Fit every candidate k and choose the summed-criteria minimizer.

    Candidates that did not converge or leave a regime unoccupied stay in
    the report but cannot be chosen. Ties break toward the smaller k.
    """
    config = config or FitConfig()
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValidationError("k_range is empty")
    try:
        n = len(returns.values)
    except AttributeError:
        n = len(returns)
    if ks[0] < 1 or ks[-1] > max(1, n // 10):
        raise ValidationError(
            f"k_range {ks[0]}..{ks[-1]} outside sanity bound [1, {max(1, n // 10)}]"
        )
    per_k = []
    for k in ks:
        fit_report = fit(k, returns, config)
        per_k.append((information_criteria(fit_report, k, n), fit_report))
    eligible = [c for c, _ in per_k if c.occupancy_ok and c.converged]
    if not eligible:
        raise SelectionFailureError(
            "no candidate k converged with every regime occupied", tuple(per_k)
        )
    chosen = min(eligible, key=lambda c: (c.sum, c.k))
    return SelectionReport(per_k=tuple(per_k), chosen_k=chosen.k, asset_id=asset_id)
