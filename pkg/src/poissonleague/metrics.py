"""Title, top-k, relegation and 40-point-rule figures from an ensemble."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .simulate import RELEGATION_SLOTS, EnsembleSummary

SAFETY_POINTS = 40
REPORT_COLUMNS = ("team", "champion_pct", "top4_pct", "relegation_pct", "mean_points")


def top_k_prob(summary: EnsembleSummary, k: int) -> dict[str, float]:
    n = len(summary.teams)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    counts = summary.rank_counts[:, :k].sum(axis=1)
    return {t: 100.0 * c / summary.n_sims for t, c in zip(summary.teams, counts)}


def champion_prob(summary: EnsembleSummary) -> dict[str, float]:
    return top_k_prob(summary, 1)


def relegation_prob(summary: EnsembleSummary) -> dict[str, float]:
    counts = summary.rank_counts[:, -RELEGATION_SLOTS:].sum(axis=1)
    return {t: 100.0 * c / summary.n_sims for t, c in zip(summary.teams, counts)}


def mean_points(summary: EnsembleSummary) -> dict[str, float]:
    return {t: s / summary.n_sims for t, s in zip(summary.teams, summary.points_sum)}


@dataclass(frozen=True)
class FortyPointReport:
    seasons_violating: int
    teams_violating: int

    def to_dict(self) -> dict:
        return {"seasons": self.seasons_violating, "teams": self.teams_violating}


def forty_point_rule(summary: EnsembleSummary, threshold: int = SAFETY_POINTS) -> FortyPointReport:
    """Seasons (and team-seasons) where a relegated club had >= ``threshold`` points."""
    hits = summary.relegated_points >= threshold
    return FortyPointReport(int(hits.any(axis=1).sum()), int(hits.sum()))


@dataclass(frozen=True)
class ProbabilityReport:
    subset: str
    n_sims: int
    rows: tuple[tuple[str, float, float, float, float], ...]
    # points of the club finishing just above the drop zone
    safety_line_mean: float
    safety_line_quantiles: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for team, *vals in self.rows:
            w.writerow([team, *(f"{v:.2f}" for v in vals)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "subset": self.subset,
            "n_sims": self.n_sims,
            "columns": list(REPORT_COLUMNS),
            "teams": [dict(zip(REPORT_COLUMNS, row)) for row in self.rows],
            "safety_line": {"mean_points": self.safety_line_mean, "quantiles": self.safety_line_quantiles},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def probability_report(summary: EnsembleSummary, subset: str) -> ProbabilityReport:
    """Rows sorted by champion share, then top-4 share, then name."""
    champ = champion_prob(summary)
    top4 = top_k_prob(summary, min(4, len(summary.teams)))
    releg = relegation_prob(summary)
    pts = mean_points(summary)
    rows = tuple(
        sorted(
            ((t, champ[t], top4[t], releg[t], pts[t]) for t in summary.teams),
            key=lambda r: (-r[1], -r[2], r[0]),
        )
    )
    safe = summary.place_points[:, -RELEGATION_SLOTS - 1]
    q = np.quantile(safe, [0.05, 0.5, 0.95])
    return ProbabilityReport(
        subset=subset,
        n_sims=summary.n_sims,
        rows=rows,
        safety_line_mean=float(safe.mean()),
        safety_line_quantiles={"p05": float(q[0]), "p50": float(q[1]), "p95": float(q[2])},
    )
