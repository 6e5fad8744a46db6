"""Loading match results and goal-time logs.

Match data follows the football-data.co.uk layout: one CSV per season with
at least ``Div, Date, HomeTeam, AwayTeam, FTHG, FTAG``. The season of every
row comes from the manifest entry for its file; ``Date`` is never parsed.

A data directory holds the season files plus ``manifest.csv``::

    # start_year,path
    1992,E0_9293.csv
    1993,E0_9394.csv
    ...

Relative paths are resolved against the manifest's directory.
"""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

FIRST_SEASON = 1992
TARGET_SEASON = 2018
LAST_TRAINING_SEASON = TARGET_SEASON - 1

REQUIRED_COLUMNS = ("Div", "Date", "HomeTeam", "AwayTeam", "FTHG", "FTAG")
MANIFEST_NAME = "manifest.csv"

# Football-data naming for the clubs in the 2018-19 season.
ROSTER_2018 = (
    "Arsenal",
    "Bournemouth",
    "Brighton",
    "Burnley",
    "Cardiff",
    "Chelsea",
    "Crystal Palace",
    "Everton",
    "Fulham",
    "Huddersfield",
    "Leicester",
    "Liverpool",
    "Man City",
    "Man United",
    "Newcastle",
    "Southampton",
    "Tottenham",
    "Watford",
    "West Ham",
    "Wolves",
)


class DataFormatError(ValueError):
    """Input file does not have the expected layout."""


class RowError(DataFormatError):
    def __init__(self, line: int, message: str, source: str = ""):
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__(f"{where}: {message}")
        self.line = line


@dataclass(frozen=True)
class MatchRecord:
    season: int
    home_team: str
    away_team: str
    home_goals: int
    away_goals: int

    def __post_init__(self):
        if self.home_team == self.away_team:
            raise ValueError(f"team cannot play itself: {self.home_team!r}")
        if self.home_goals < 0 or self.away_goals < 0:
            raise ValueError("goal counts must be non-negative")


@dataclass(frozen=True)
class WeightedMatch:
    record: MatchRecord
    weight: int = 1

    def __post_init__(self):
        if self.weight < 1:
            raise ValueError(f"weight must be >= 1, got {self.weight}")


@dataclass(frozen=True)
class GoalTimeRecord:
    minute: float
    matchweek: int
    stoppage_h1: float
    stoppage_h2: float
    gap: float

    @property
    def match_length(self) -> float:
        return 90 + self.stoppage_h1 + self.stoppage_h2


# ---------------------------------------------------------------------------
# text helpers
# ---------------------------------------------------------------------------


def decode_bytes(raw: bytes) -> str:
    """UTF-8 (with or without BOM), falling back to Latin-1."""
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def read_text(path: str | Path) -> str:
    return decode_bytes(Path(path).read_bytes())


def _parse_count(value: str, column: str, line: int, source: str) -> int:
    text = value.strip()
    try:
        number = int(text)
    except ValueError:
        try:
            as_float = float(text)
        except ValueError:
            raise RowError(line, f"{column} is not an integer: {value!r}", source) from None
        if not as_float.is_integer():
            raise RowError(line, f"{column} is not an integer: {value!r}", source)
        number = int(as_float)
    if number < 0:
        raise RowError(line, f"{column} is negative: {value!r}", source)
    return number


# ---------------------------------------------------------------------------
# match results
# ---------------------------------------------------------------------------


def parse_season(stream: IO[str], season: int, source: str = "") -> list[MatchRecord]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{source or 'input'}: empty file") from None
    header = [h.strip().lstrip("﻿") for h in header]
    index = {}
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise DataFormatError(f"{source or 'input'}: missing required column {col}")
        index[col] = header.index(col)

    records = []
    for line, row in enumerate(reader, start=2):
        # Older files pad the table with rows of bare commas.
        if not any(cell.strip() for cell in row):
            continue
        if len(row) <= max(index.values()):
            raise RowError(line, f"expected at least {max(index.values()) + 1} fields, got {len(row)}", source)
        home = row[index["HomeTeam"]].strip()
        away = row[index["AwayTeam"]].strip()
        if not home or not away:
            raise RowError(line, "missing team name", source)
        hg = _parse_count(row[index["FTHG"]], "FTHG", line, source)
        ag = _parse_count(row[index["FTAG"]], "FTAG", line, source)
        try:
            records.append(MatchRecord(season, home, away, hg, ag))
        except ValueError as exc:
            raise RowError(line, str(exc), source) from None
    if not records:
        raise DataFormatError(f"{source or 'input'}: no match rows")
    return records


def parse_matches(sources: Iterable[tuple[int, IO[str]]]) -> list[MatchRecord]:
    """Parse ``(season, stream)`` pairs in order into one list of records."""
    out: list[MatchRecord] = []
    for season, stream in sources:
        out.extend(parse_season(stream, season, source=getattr(stream, "name", f"season {season}")))
    return out


def serialize_matches(matches: Sequence[MatchRecord]) -> dict[int, str]:
    """Write records back out as one minimal football-data CSV per season."""
    buffers: dict[int, io.StringIO] = {}
    for m in matches:
        buf = buffers.get(m.season)
        if buf is None:
            buf = buffers[m.season] = io.StringIO()
            csv.writer(buf, lineterminator="\n").writerow(REQUIRED_COLUMNS)
        csv.writer(buf, lineterminator="\n").writerow(
            ["E0", "", m.home_team, m.away_team, m.home_goals, m.away_goals]
        )
    return {season: buf.getvalue() for season, buf in buffers.items()}


def read_manifest(path: str | Path) -> list[tuple[int, Path]]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise DataFormatError(f"manifest not found: {path}")
    entries = []
    seen = set()
    for line_no, line in enumerate(read_text(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",", 1)]
        if len(parts) != 2 or not parts[1]:
            raise RowError(line_no, "expected 'start_year,path'", str(path))
        if parts[0].lower() in ("start_year", "season"):
            continue
        try:
            season = int(parts[0])
        except ValueError:
            raise RowError(line_no, f"bad season {parts[0]!r}", str(path)) from None
        if season in seen:
            raise RowError(line_no, f"season {season} listed twice", str(path))
        seen.add(season)
        file_path = Path(parts[1])
        if not file_path.is_absolute():
            file_path = path.parent / file_path
        entries.append((season, file_path))
    if not entries:
        raise DataFormatError(f"{path}: manifest lists no seasons")
    return entries


def load_matches(data_dir: str | Path) -> list[MatchRecord]:
    out: list[MatchRecord] = []
    for season, file_path in read_manifest(data_dir):
        if not file_path.exists():
            raise DataFormatError(f"season {season}: file not found: {file_path}")
        text = read_text(file_path)
        out.extend(parse_season(io.StringIO(text), season, source=str(file_path)))
    return out


def data_checksum(data_dir: str | Path) -> str:
    """SHA-256 over the manifest and every season file it lists, in order."""
    manifest = Path(data_dir)
    if manifest.is_dir():
        manifest = manifest / MANIFEST_NAME
    h = hashlib.sha256(manifest.read_bytes())
    for season, file_path in read_manifest(manifest):
        h.update(str(season).encode())
        h.update(file_path.read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# subsets and weighting
# ---------------------------------------------------------------------------


def filter_seasons(matches: Iterable[MatchRecord], lo: int, hi: int) -> list[MatchRecord]:
    if lo > hi:
        raise ValueError(f"empty season range: {lo} > {hi}")
    return [m for m in matches if lo <= m.season <= hi]


def weight_schedule() -> dict[int, int]:
    """Duplication count per season for the recency-weighted subset."""
    schedule = {season: 1 for season in range(FIRST_SEASON, 2013)}
    schedule.update({2013: 2, 2014: 3, 2015: 4, 2016: 8, 2017: 8})
    return schedule


def uniform_schedule() -> dict[int, int]:
    return {season: 1 for season in range(FIRST_SEASON, TARGET_SEASON)}


def apply_weights(matches: Iterable[MatchRecord], schedule: Mapping[int, int]) -> list[WeightedMatch]:
    out = []
    for m in matches:
        try:
            w = schedule[m.season]
        except KeyError:
            raise KeyError(f"season {m.season} has no weight in the schedule") from None
        out.append(WeightedMatch(m, int(w)))
    return out


SUBSETS = ("all", "2010s", "weighted")


def training_subset(matches: Iterable[MatchRecord], subset: str) -> list[WeightedMatch]:
    """Matches used to fit rates for the target season under ``subset``."""
    if subset == "all":
        return apply_weights(filter_seasons(matches, FIRST_SEASON, LAST_TRAINING_SEASON), uniform_schedule())
    if subset == "2010s":
        return apply_weights(filter_seasons(matches, 2009, LAST_TRAINING_SEASON), uniform_schedule())
    if subset == "weighted":
        return apply_weights(filter_seasons(matches, FIRST_SEASON, LAST_TRAINING_SEASON), weight_schedule())
    raise ValueError(f"unknown subset {subset!r}; expected one of {', '.join(SUBSETS)}")


def roster(matches: Iterable[MatchRecord], season: int = TARGET_SEASON) -> list[str]:
    """Teams appearing in ``season``, sorted; the built-in 2018-19 list if absent."""
    teams = sorted({t for m in matches if m.season == season for t in (m.home_team, m.away_team)})
    if teams:
        return teams
    if season == TARGET_SEASON:
        return list(ROSTER_2018)
    raise ValueError(f"no matches for season {season}")


# ---------------------------------------------------------------------------
# goal times
# ---------------------------------------------------------------------------

GOAL_TIME_COLUMNS = ("minute", "matchweek", "stoppage_h1", "stoppage_h2", "gap")


def _number(value: str, column: str, line: int, source: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise RowError(line, f"{column} is not a number: {value!r}", source) from None
    return int(x) if x.is_integer() else x


def parse_goal_times(stream: IO[str], source: str = "") -> list[GoalTimeRecord]:
    """Five columns in order: minute, matchweek, first- and second-half
    stoppage minutes, and minutes since the previous goal. The first row is
    a header. Minutes are absolute and stoppage-inclusive (a goal in the
    third minute of first-half stoppage is 48).
    """
    source = source or getattr(stream, "name", "")
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{source or 'input'}: empty file") from None
    if len(header) < 5:
        raise DataFormatError(f"{source or 'input'}: expected 5 columns, header has {len(header)}")
    records = []
    for line, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) < 5:
            raise RowError(line, f"expected 5 fields, got {len(row)}", source)
        minute, week, s1, s2, gap = (_number(v.strip(), c, line, source) for v, c in zip(row, GOAL_TIME_COLUMNS))
        if not 1 <= week <= 38 or int(week) != week:
            raise RowError(line, f"matchweek must be an integer in 1..38, got {week}", source)
        if s1 < 0 or s2 < 0:
            raise RowError(line, "stoppage time must be non-negative", source)
        length = 90 + s1 + s2
        if not 0 < minute <= length:
            raise RowError(line, f"minute {minute} outside (0, {length}]", source)
        if gap < 0:
            raise RowError(line, f"negative gap {gap}", source)
        if records and gap == 0:
            raise RowError(line, "gap must be positive after the first goal", source)
        records.append(GoalTimeRecord(minute, int(week), s1, s2, gap))
    if not records:
        raise DataFormatError(f"{source or 'input'}: no goal rows")
    return records


def load_goal_times(path: str | Path) -> list[GoalTimeRecord]:
    return parse_goal_times(io.StringIO(read_text(path)), source=str(path))


def normalize_minutes(records: Sequence[GoalTimeRecord]) -> list[float]:
    """Goal minute as a fraction of its match's total length."""
    if not records:
        raise ValueError("no goal records")
    return [r.minute / r.match_length for r in records]


def goals_scored(matches: Iterable[MatchRecord], team: str) -> list[int]:
    """Goals ``team`` scored in each of its matches, home or away, in input order."""
    out = []
    for m in matches:
        if m.home_team == team:
            out.append(m.home_goals)
        elif m.away_team == team:
            out.append(m.away_goals)
    return out


def all_teams(matches: Iterable[MatchRecord]) -> set[str]:
    return {t for m in matches for t in (m.home_team, m.away_team)}
