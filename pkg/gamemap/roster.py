"""Patches delimited text rosters (team name, player names, player ratings) in place.

Line and field indexes in a layout are zero-based. Only the addressed
cells change; their surrounding padding is kept so column alignment in
the game's file survives.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple


class RosterError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[int] = None):
        super().__init__(message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class CellRef:
    line: int
    field: int


@dataclass(frozen=True)
class PlayerSlot:
    name: CellRef
    ratings: Dict[str, CellRef] = field(default_factory=dict)


@dataclass(frozen=True)
class TeamSlot:
    team_name: CellRef
    players: Tuple[PlayerSlot, ...] = ()


@dataclass(frozen=True)
class RosterLayout:
    delimiter: str
    teams: Tuple[TeamSlot, ...]
    ranges: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    formats: Dict[str, str] = field(default_factory=dict)


def _cell(data) -> CellRef:
    try:
        return CellRef(line=int(data["line"]), field=int(data["field"]))
    except (KeyError, TypeError, ValueError):
        raise RosterError(f"layout cell {data!r} needs integer line and field")


def layout_from_dict(data: dict) -> RosterLayout:
    delimiter = data.get("delimiter")
    if not delimiter:
        raise RosterError("roster layout needs a non-empty delimiter")
    teams = []
    for team in data.get("teams", ()):
        players = tuple(
            PlayerSlot(name=_cell(player["name"]),
                       ratings={key: _cell(ref) for key, ref in player.get("ratings", {}).items()})
            for player in team.get("players", ())
        )
        teams.append(TeamSlot(team_name=_cell(team["team_name"]), players=players))
    ranges = {}
    for key, bounds in data.get("ranges", {}).items():
        low, high = (float(value) for value in bounds)
        if low > high:
            raise RosterError(f"range for {key} is empty: [{low}, {high}]")
        ranges[key] = (low, high)
    return RosterLayout(delimiter=delimiter, teams=tuple(teams), ranges=ranges, formats=dict(data.get("formats", {})))


def load_layout(path) -> RosterLayout:
    with open(path, "r", encoding="utf-8") as stream:
        return layout_from_dict(json.load(stream))


class _Roster:
    def __init__(self, text: str, delimiter: str):
        self.delimiter = delimiter
        self.lines = text.split("\n")

    def set(self, ref: CellRef, value: str):
        if not 0 <= ref.line < len(self.lines):
            raise RosterError(f"line {ref.line} is outside the roster ({len(self.lines)} lines)", ref.line, ref.field)
        line = self.lines[ref.line]
        ending = "\r" if line.endswith("\r") else ""
        fields = line[:len(line) - len(ending)].split(self.delimiter)
        if not 0 <= ref.field < len(fields):
            raise RosterError(f"field {ref.field} is outside line {ref.line} ({len(fields)} fields)", ref.line, ref.field)
        fields[ref.field] = _padded(fields[ref.field], value)
        self.lines[ref.line] = self.delimiter.join(fields) + ending

    def text(self) -> str:
        return "\n".join(self.lines)


def _padded(original: str, value: str) -> str:
    value = value.strip()
    core = original.strip()
    if not core:
        return original + value
    start = original.index(core)
    return original[:start] + value + original[start + len(core):]


def _format_rating(layout: RosterLayout, key: str, value: float, ref: CellRef) -> str:
    if key in layout.ranges:
        low, high = layout.ranges[key]
        if not low <= value <= high:
            raise RosterError(f"{key} rating {value} is outside [{low}, {high}] at line {ref.line} field {ref.field}",
                              ref.line, ref.field)
    if key in layout.formats:
        return layout.formats[key].format(value)
    return str(int(value)) if float(value).is_integer() else str(value)


def patch_roster(roster_text: str, layout: RosterLayout, config) -> str:
    """Writes crawler team names, contributor names and tier ratings into a roster.

    Assignments fill the layout's teams in rank order. Contributor names
    cycle when a team has more players than contributors; without
    contributors the player names stay as they are.
    """
    roster = _Roster(roster_text, layout.delimiter)
    assignments = sorted(config.assignments, key=lambda a: a.rank)
    if len(assignments) > len(layout.teams):
        logging.warning(f"Roster layout has {len(layout.teams)} teams; "
                        f"{len(assignments) - len(layout.teams)} crawlers get no team")
    for assignment, team in zip(assignments, layout.teams):
        roster.set(team.team_name, assignment.team_name or assignment.crawler_name)
        names: List[str] = list(assignment.player_names)
        for index, player in enumerate(team.players):
            if names:
                roster.set(player.name, names[index % len(names)])
            for key, ref in sorted(player.ratings.items()):
                if key in assignment.ratings:
                    roster.set(ref, _format_rating(layout, key, assignment.ratings[key], ref))
    return roster.text()
