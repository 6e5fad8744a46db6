"""Season simulation from per-team scoring rates.

Random streams
--------------
Simulation ``k`` of an ensemble with master seed ``s`` draws from
``Generator(Philox(SeedSequence([s, k])))``. Each season consumes exactly
760 uniforms from its stream: for fixture ``i`` (fixtures in lexicographic
(home, away) order) uniform ``2i`` gives the home goals and ``2i + 1`` the
away goals, each by inverting the Poisson CDF. Because every season owns its
stream, results do not depend on how seasons are batched or spread across
threads.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence, TextIO

import numpy as np

from .dist import poisson_cdf_table, poisson_from_uniform
from .regression import RateTable

RELEGATION_SLOTS = 3
BLOCK_SIZE = 250


@dataclass(frozen=True)
class Fixture:
    home: str
    away: str

    def __post_init__(self):
        if self.home == self.away:
            raise ValueError(f"team cannot play itself: {self.home!r}")


def score_points(home_goals: int, away_goals: int) -> tuple[int, int]:
    if home_goals > away_goals:
        return 3, 0
    if home_goals == away_goals:
        return 1, 1
    return 0, 3


@dataclass(frozen=True)
class MatchResult:
    fixture: Fixture
    home_goals: int
    away_goals: int

    @property
    def home_points(self) -> int:
        return score_points(self.home_goals, self.away_goals)[0]

    @property
    def away_points(self) -> int:
        return score_points(self.home_goals, self.away_goals)[1]


@dataclass(frozen=True)
class StandingRow:
    rank: int
    team: str
    played: int
    points: int
    gd: int
    gf: int


@dataclass(frozen=True)
class SimulatedSeason:
    results: tuple[MatchResult, ...]
    table: tuple[StandingRow, ...]


def generate_fixtures(teams: Sequence[str], n_teams: int | None = 20) -> list[Fixture]:
    """Double round robin in (home, away) lexicographic order.

    Pass ``n_teams=None`` to accept any league size of at least two.
    """
    if len(set(teams)) != len(teams):
        raise ValueError("duplicate team names")
    if n_teams is not None and len(teams) != n_teams:
        raise ValueError(f"expected {n_teams} teams, got {len(teams)}")
    if len(teams) < 2:
        raise ValueError("need at least two teams")
    return [Fixture(h, a) for h, a in permutations(sorted(teams), 2)]


def season_stream(master_seed: int, k: int) -> np.random.Generator:
    if master_seed < 0 or k < 0:
        raise ValueError("seed and simulation index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, k])))


def simulate_match(fx: Fixture, rates: RateTable, rng: np.random.Generator) -> MatchResult:
    """One match: home goals from the first uniform, away goals from the second."""
    for team in (fx.home, fx.away):
        if team not in rates:
            raise KeyError(f"no rates for {team!r}")
    u = rng.random(2)
    hg = int(poisson_from_uniform(u[0], poisson_cdf_table(rates.home(fx.home))))
    ag = int(poisson_from_uniform(u[1], poisson_cdf_table(rates.away(fx.away))))
    return MatchResult(fx, hg, ag)


def compute_table(results: Sequence[MatchResult]) -> list[StandingRow]:
    """Standings ordered by points, goal difference, goals scored, then name."""
    stats: dict[str, list[int]] = {}
    for r in results:
        for team in (r.fixture.home, r.fixture.away):
            stats.setdefault(team, [0, 0, 0, 0])  # played, points, gf, ga
        h, a = stats[r.fixture.home], stats[r.fixture.away]
        hp, ap = score_points(r.home_goals, r.away_goals)
        h[0] += 1
        a[0] += 1
        h[1] += hp
        a[1] += ap
        h[2] += r.home_goals
        h[3] += r.away_goals
        a[2] += r.away_goals
        a[3] += r.home_goals
    full = 2 * (len(stats) - 1)
    short = sorted(t for t, s in stats.items() if s[0] != full)
    if short:
        raise ValueError(f"incomplete season: {', '.join(short)} did not play {full} matches")
    order = sorted(stats, key=lambda t: (-stats[t][1], -(stats[t][2] - stats[t][3]), -stats[t][2], t))
    return [
        StandingRow(rank, t, stats[t][0], stats[t][1], stats[t][2] - stats[t][3], stats[t][2])
        for rank, t in enumerate(order, start=1)
    ]


# ---------------------------------------------------------------------------
# vectorized engine
# ---------------------------------------------------------------------------


class _Engine:
    def __init__(self, rates: RateTable):
        self.teams = tuple(sorted(rates))
        n = len(self.teams)
        if n <= RELEGATION_SLOTS:
            raise ValueError(f"need more than {RELEGATION_SLOTS} teams, got {n}")
        self.fixtures = generate_fixtures(self.teams, n_teams=None)
        idx = {t: i for i, t in enumerate(self.teams)}
        self.home_idx = np.array([idx[f.home] for f in self.fixtures])
        self.away_idx = np.array([idx[f.away] for f in self.fixtures])
        self.n_matches = len(self.fixtures)

        home_tabs = [poisson_cdf_table(rates.home(t)) for t in self.teams]
        away_tabs = [poisson_cdf_table(rates.away(t)) for t in self.teams]
        width = max(len(c) for c in home_tabs + away_tabs)
        pad = lambda c: np.concatenate([c, np.ones(width - len(c))])  # noqa: E731
        H = np.array([pad(c) for c in home_tabs])
        A = np.array([pad(c) for c in away_tabs])
        self.cdf_home = H[self.home_idx]  # (matches, width)
        self.cdf_away = A[self.away_idx]

        self.inc_home = np.zeros((self.n_matches, n))
        self.inc_home[np.arange(self.n_matches), self.home_idx] = 1.0
        self.inc_away = np.zeros((self.n_matches, n))
        self.inc_away[np.arange(self.n_matches), self.away_idx] = 1.0

    def uniforms(self, master_seed: int, sims: range) -> np.ndarray:
        return np.stack([season_stream(master_seed, k).random(2 * self.n_matches) for k in sims])

    def goals(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # inverse CDF: number of table entries strictly below u
        hg = (self.cdf_home[None, :, :] < u[:, 0::2, None]).sum(axis=-1)
        ag = (self.cdf_away[None, :, :] < u[:, 1::2, None]).sum(axis=-1)
        return hg, ag

    def standings(self, hg: np.ndarray, ag: np.ndarray):
        hp = np.where(hg > ag, 3, np.where(hg == ag, 1, 0))
        ap = np.where(hg < ag, 3, np.where(hg == ag, 1, 0))
        pts = np.rint(hp @ self.inc_home + ap @ self.inc_away).astype(np.int64)
        gf = np.rint(hg @ self.inc_home + ag @ self.inc_away).astype(np.int64)
        ga = np.rint(ag @ self.inc_home + hg @ self.inc_away).astype(np.int64)
        gd = gf - ga
        name = np.broadcast_to(np.arange(len(self.teams)), pts.shape)
        order = np.lexsort((name, -gf, -gd, -pts), axis=-1)
        return pts, gd, gf, order


@dataclass
class EnsembleSummary:
    """Aggregated outcome of ``n_sims`` simulated seasons.

    ``rank_counts[t, r]`` counts seasons in which team ``t`` finished in
    position ``r + 1``. The per-season arrays are indexed by simulation.
    """

    teams: tuple[str, ...]
    n_sims: int
    master_seed: int
    rank_counts: np.ndarray
    points_hist: np.ndarray
    points_sum: np.ndarray
    relegated_teams: np.ndarray = field(repr=False)
    relegated_points: np.ndarray = field(repr=False)
    place_points: np.ndarray = field(repr=False)  # (n_sims, n_teams) points by finishing position
    season_points: np.ndarray = field(repr=False)
    season_gd: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, EnsembleSummary):
            return NotImplemented
        return self.to_json() == other.to_json()

    def to_dict(self) -> dict:
        return {
            "teams": list(self.teams),
            "n_sims": self.n_sims,
            "master_seed": self.master_seed,
            "rank_counts": self.rank_counts.tolist(),
            "points_hist": self.points_hist.tolist(),
            "points_sum": self.points_sum.tolist(),
            "relegated_teams": self.relegated_teams.tolist(),
            "relegated_points": self.relegated_points.tolist(),
            "place_points": self.place_points.tolist(),
            "season_points": self.season_points.tolist(),
            "season_gd": self.season_gd.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "EnsembleSummary":
        d = json.loads(text)
        arr = lambda k: np.asarray(d[k], dtype=np.int64)  # noqa: E731
        return cls(
            teams=tuple(d["teams"]),
            n_sims=d["n_sims"],
            master_seed=d["master_seed"],
            rank_counts=arr("rank_counts"),
            points_hist=arr("points_hist"),
            points_sum=arr("points_sum"),
            relegated_teams=arr("relegated_teams"),
            relegated_points=arr("relegated_points"),
            place_points=arr("place_points"),
            season_points=arr("season_points"),
            season_gd=arr("season_gd"),
        )


def _run_block(engine: _Engine, master_seed: int, sims: range):
    u = engine.uniforms(master_seed, sims)
    hg, ag = engine.goals(u)
    pts, gd, gf, order = engine.standings(hg, ag)
    return sims, pts, gd, gf, order


def run_ensemble(
    rates: RateTable,
    n_sims: int,
    master_seed: int = 0,
    threads: int = 1,
    audit: TextIO | None = None,
) -> EnsembleSummary:
    """Simulate ``n_sims`` seasons and aggregate ranks and points.

    ``threads`` only changes scheduling; the summary is identical for any
    value. If ``audit`` is given, one CSV row per team per season is written
    to it (``sim,rank,team,points,gd,gf``).
    """
    if n_sims < 1:
        raise ValueError(f"n_sims must be >= 1, got {n_sims}")
    engine = _Engine(rates)
    n = len(engine.teams)
    max_points = 3 * 2 * (n - 1)

    rank_counts = np.zeros((n, n), dtype=np.int64)
    points_hist = np.zeros((n, max_points + 1), dtype=np.int64)
    points_sum = np.zeros(n, dtype=np.int64)
    place_points = np.zeros((n_sims, n), dtype=np.int64)
    relegated_teams = np.zeros((n_sims, RELEGATION_SLOTS), dtype=np.int64)
    season_points = np.zeros(n_sims, dtype=np.int64)
    season_gd = np.zeros(n_sims, dtype=np.int64)

    writer = None
    if audit is not None:
        writer = csv.writer(audit, lineterminator="\n")
        writer.writerow(["sim", "rank", "team", "points", "gd", "gf"])

    blocks = [range(s, min(s + BLOCK_SIZE, n_sims)) for s in range(0, n_sims, BLOCK_SIZE)]
    team_ids = np.arange(n)

    def consume(out):
        sims, pts, gd, gf, order = out
        sl = slice(sims.start, sims.stop)
        ranks = np.empty_like(order)
        np.put_along_axis(ranks, order, np.arange(n)[None, :], axis=-1)
        np.add.at(rank_counts, (np.broadcast_to(team_ids, ranks.shape), ranks), 1)
        np.add.at(points_hist, (np.broadcast_to(team_ids, pts.shape), pts), 1)
        points_sum[:] += pts.sum(axis=0)
        place_points[sl] = np.take_along_axis(pts, order, axis=-1)
        relegated_teams[sl] = order[:, -RELEGATION_SLOTS:]
        season_points[sl] = pts.sum(axis=1)
        season_gd[sl] = gd.sum(axis=1)
        if writer is not None:
            for b, k in enumerate(sims):
                for r, t in enumerate(order[b]):
                    writer.writerow([k, r + 1, engine.teams[t], pts[b, t], gd[b, t], gf[b, t]])

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # map yields in submission order, so audit rows stay ordered
            for out in pool.map(lambda s: _run_block(engine, master_seed, s), blocks):
                consume(out)
    else:
        for sims in blocks:
            consume(_run_block(engine, master_seed, sims))

    return EnsembleSummary(
        teams=engine.teams,
        n_sims=n_sims,
        master_seed=master_seed,
        rank_counts=rank_counts,
        points_hist=points_hist,
        points_sum=points_sum,
        relegated_teams=relegated_teams,
        relegated_points=place_points[:, -RELEGATION_SLOTS:].copy(),
        place_points=place_points,
        season_points=season_points,
        season_gd=season_gd,
    )


def simulate_season(rates: RateTable, master_seed: int, k: int) -> SimulatedSeason:
    """Season ``k`` of the ensemble with ``master_seed``, with full match detail."""
    engine = _Engine(rates)
    u = engine.uniforms(master_seed, range(k, k + 1))
    hg, ag = engine.goals(u)
    results = tuple(
        MatchResult(fx, int(h), int(a)) for fx, h, a in zip(engine.fixtures, hg[0], ag[0])
    )
    return SimulatedSeason(results, tuple(compute_table(results)))


def default_threads() -> int:
    import os

    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
