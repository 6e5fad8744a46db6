"""Per-team Poisson scoring rates from a log-link GLM fitted by IRLS.

Two independent models are fitted, one on home goals and one on away goals.
Each has one indicator column per team and no intercept, so a team's rate is
exp(beta_team). For this design the maximum likelihood estimate is the
weighted mean of the team's goals, which the tests use as an oracle for the
IRLS path.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import WeightedMatch

log = logging.getLogger(__name__)

VENUES = ("home", "away")
TOL = 1e-10
MAX_ITER = 50


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class DesignSpec:
    """Indicator design: row i has a single 1 in column ``columns[i]``."""

    venue: str
    teams: tuple[str, ...]
    columns: np.ndarray = field(repr=False)

    @property
    def n_rows(self) -> int:
        return len(self.columns)

    def matrix(self) -> np.ndarray:
        X = np.zeros((self.n_rows, len(self.teams)))
        X[np.arange(self.n_rows), self.columns] = 1.0
        return X


@dataclass(frozen=True)
class GlmFit:
    teams: tuple[str, ...]
    coefficients: np.ndarray
    deviance: float
    iterations: int
    converged: bool
    # teams whose responses were all zero; their rate is clamped
    clamped: tuple[str, ...] = ()

    def coefficient(self, team: str) -> float:
        try:
            return float(self.coefficients[self.teams.index(team)])
        except ValueError:
            raise KeyError(f"team {team!r} not in fit") from None

    def rate(self, team: str) -> float:
        return math.exp(self.coefficient(team))

    def rates(self) -> dict[str, float]:
        return {t: math.exp(b) for t, b in zip(self.teams, self.coefficients)}


def build_design(
    matches: Sequence[WeightedMatch], venue: str, teams: Sequence[str] | None = None
) -> tuple[DesignSpec, np.ndarray, np.ndarray]:
    """Observation per match for the scoring team at ``venue``.

    Teams default to every club seen at that venue, sorted by name.
    """
    if venue not in VENUES:
        raise ValueError(f"venue must be 'home' or 'away', got {venue!r}")
    if not matches:
        raise ValueError("no matches to fit")
    if venue == "home":
        scorer = [m.record.home_team for m in matches]
        y = np.array([m.record.home_goals for m in matches], dtype=float)
    else:
        scorer = [m.record.away_team for m in matches]
        y = np.array([m.record.away_goals for m in matches], dtype=float)
    w = np.array([m.weight for m in matches], dtype=float)
    if teams is None:
        teams = sorted(set(scorer))
    lookup = {t: i for i, t in enumerate(teams)}
    try:
        columns = np.array([lookup[t] for t in scorer], dtype=np.intp)
    except KeyError as exc:
        raise ValueError(f"team {exc.args[0]!r} missing from the design's team list") from None
    return DesignSpec(venue, tuple(teams), columns), y, w


def _wls_general(X: np.ndarray, z: np.ndarray, wt: np.ndarray) -> np.ndarray:
    # least squares on the sqrt-weighted system (QR/SVD) instead of forming X'WX
    s = np.sqrt(wt)
    beta, *_ = np.linalg.lstsq(X * s[:, None], z * s, rcond=None)
    return beta


def _wls_indicator(columns: np.ndarray, p: int, z: np.ndarray, wt: np.ndarray) -> np.ndarray:
    # X'WX is diagonal for a one-indicator-per-row design
    num = np.bincount(columns, weights=wt * z, minlength=p)
    den = np.bincount(columns, weights=wt, minlength=p)
    return num / den


def poisson_deviance(y: np.ndarray, mu: np.ndarray, w: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        ylogy = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(w * (ylogy - (y - mu))))


def fit_poisson_glm(
    design: DesignSpec,
    y: np.ndarray,
    w: np.ndarray | None = None,
    *,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    method: str = "general",
) -> GlmFit:
    """Weighted Poisson regression with log link by IRLS.

    ``method="general"`` solves each weighted least-squares step by a
    least-squares factorization of the dense design; ``"indicator"`` uses the
    diagonal normal equations of the indicator design.
    """
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    p = len(design.teams)
    if y.shape != (design.n_rows,) or w.shape != y.shape:
        raise ValueError("responses and weights must have one entry per design row")
    if not np.all(np.isfinite(y)) or np.any(y < 0):
        raise ValueError("responses must be finite non-negative counts")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")

    counts = np.bincount(design.columns, minlength=p)
    if np.any(counts == 0):
        missing = [design.teams[i] for i in np.flatnonzero(counts == 0)]
        raise FitError(f"no observations for team(s): {', '.join(missing)}")

    weight_sum = np.bincount(design.columns, weights=w, minlength=p)
    goal_sum = np.bincount(design.columns, weights=w * y, minlength=p)
    zero = goal_sum == 0
    beta = np.empty(p)
    if zero.any():
        # MLE is -inf; pin to half a goal spread over the team's rows
        beta[zero] = np.log(0.5 / weight_sum[zero])
        log.warning("clamped all-zero teams: %s", [design.teams[i] for i in np.flatnonzero(zero)])

    keep_cols = np.flatnonzero(~zero)
    rows = ~zero[design.columns]
    remap = np.full(p, -1, dtype=np.intp)
    remap[keep_cols] = np.arange(len(keep_cols))
    cols = remap[design.columns[rows]]
    yk, wk = y[rows], w[rows]
    q = len(keep_cols)

    if method == "general":
        X = np.zeros((len(cols), q))
        X[np.arange(len(cols)), cols] = 1.0
        solve = lambda z, wt: _wls_general(X, z, wt)  # noqa: E731
    elif method == "indicator":
        solve = lambda z, wt: _wls_indicator(cols, q, z, wt)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")

    converged = q == 0
    iterations = 0
    b = np.zeros(q)
    if q:
        ybar = np.sum(wk * yk) / np.sum(wk)
        mu = (yk + ybar) / 2.0
        eta = np.log(mu)
        for iterations in range(1, max_iter + 1):
            z = eta + (yk - mu) / mu
            b_new = solve(z, wk * mu)
            step = np.max(np.abs(b_new - b)) if iterations > 1 else np.inf
            b = b_new
            eta = b[cols]
            mu = np.exp(eta)
            if step < tol:
                converged = True
                break
    beta[keep_cols] = b
    if not converged:
        log.warning("IRLS did not converge in %d iterations", max_iter)

    mu_all = np.exp(beta[design.columns])
    return GlmFit(
        teams=design.teams,
        coefficients=beta,
        deviance=poisson_deviance(y, mu_all, w),
        iterations=iterations,
        converged=converged,
        clamped=tuple(design.teams[i] for i in np.flatnonzero(zero)),
    )


# ---------------------------------------------------------------------------
# rate tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TeamRates:
    lambda_home: float
    lambda_away: float

    def __post_init__(self):
        for v in (self.lambda_home, self.lambda_away):
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"rates must be positive and finite, got {v!r}")


class RateTable(dict):
    """Mapping team -> TeamRates, in roster order.

    CSV form has the header ``team,lambda_home,lambda_away``; JSON form is
    ``{"teams": [{"team": ..., "lambda_home": ..., "lambda_away": ...}, ...]}``.
    Floats are written with ``repr`` so a round trip is exact.
    """

    @property
    def teams(self) -> list[str]:
        return list(self)

    def home(self, team: str) -> float:
        return self[team].lambda_home

    def away(self, team: str) -> float:
        return self[team].lambda_away

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["team", "lambda_home", "lambda_away"])
        for team, r in self.items():
            writer.writerow([team, repr(r.lambda_home), repr(r.lambda_away)])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{"team": t, "lambda_home": r.lambda_home, "lambda_away": r.lambda_away} for t, r in self.items()]
        return json.dumps({"teams": rows}, indent=2) + "\n"

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping]) -> "RateTable":
        table = cls()
        for row in rows:
            team = str(row["team"]).strip()
            if team in table:
                raise ValueError(f"duplicate team {team!r} in rate table")
            table[team] = TeamRates(float(row["lambda_home"]), float(row["lambda_away"]))
        if not table:
            raise ValueError("rate table is empty")
        return table

    @classmethod
    def from_csv(cls, text: str) -> "RateTable":
        reader = csv.DictReader(io.StringIO(text))
        missing = {"team", "lambda_home", "lambda_away"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"rate table missing column(s): {', '.join(sorted(missing))}")
        return cls.from_rows(reader)

    @classmethod
    def from_json(cls, text: str) -> "RateTable":
        return cls.from_rows(json.loads(text)["teams"])

    @classmethod
    def load(cls, path) -> "RateTable":
        from pathlib import Path

        text = Path(path).read_text(encoding="utf-8")
        return cls.from_json(text) if str(path).endswith(".json") else cls.from_csv(text)


def extract_rates(home_fit: GlmFit, away_fit: GlmFit, roster: Sequence[str]) -> RateTable:
    for name, fit in (("home", home_fit), ("away", away_fit)):
        if not fit.converged:
            raise FitError(f"{name} model did not converge")
    table = RateTable()
    for team in roster:
        for name, fit in (("home", home_fit), ("away", away_fit)):
            if team not in fit.teams:
                raise FitError(f"{team!r} has no {name} matches in the training data")
        table[team] = TeamRates(home_fit.rate(team), away_fit.rate(team))
    return table


def fit_rates(matches: Sequence[WeightedMatch], roster: Sequence[str]) -> tuple[RateTable, GlmFit, GlmFit]:
    fits = []
    for venue in VENUES:
        design, y, w = build_design(matches, venue)
        fits.append(fit_poisson_glm(design, y, w))
    home_fit, away_fit = fits
    return extract_rates(home_fit, away_fit, roster), home_fit, away_fit
