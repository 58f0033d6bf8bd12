"""Multi-round leaderboard in the shape of the published speedrun results table."""
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .rounds import RoundResult, determine_winner, is_complete, leader
from .timing import format_hms

DNF = "DNF"
ABSENT = "n/a"


@dataclass(frozen=True)
class LeaderboardRow:
    round: int
    # None: crawler ran but did not complete; missing key: crawler absent from the round
    times: Dict[str, Optional[float]]
    winner: Optional[str]
    leader: Optional[str]
    pages: Dict[str, int]


@dataclass(frozen=True)
class Leaderboard:
    crawlers: Tuple[str, ...]
    rows: Tuple[LeaderboardRow, ...]
    averages: Dict[str, Optional[float]]
    overall_winner_counts: Dict[str, int]
    flagged: Tuple[str, ...] = ()


def build_leaderboard(rounds: List[RoundResult]) -> Leaderboard:
    crawlers: List[str] = []
    rows = []
    for result in sorted(rounds, key=lambda r: r.round):
        for name in result.per_crawler:
            if name not in crawlers:
                crawlers.append(name)
        times = {
            name: run.results.speedrun_seconds if is_complete(run, len(result.seeds)) else None
            for name, run in result.per_crawler.items()
        }
        winner = determine_winner(result)
        rows.append(LeaderboardRow(
            round=result.round,
            times=times,
            winner=winner,
            leader=None if winner else leader(result),
            pages={name: run.results.pages_archived for name, run in result.per_crawler.items()},
        ))

    averages = {}
    flagged = []
    for name in crawlers:
        finished = [row.times[name] for row in rows if row.times.get(name) is not None]
        averages[name] = sum(finished) / len(finished) if finished else None
        if len(finished) != len(rows):
            flagged.append(name)

    wins = {name: 0 for name in crawlers}
    for row in rows:
        if row.winner:
            wins[row.winner] += 1
    return Leaderboard(
        crawlers=tuple(crawlers),
        rows=tuple(rows),
        averages=averages,
        overall_winner_counts=wins,
        flagged=tuple(flagged),
    )


def _cell(row: LeaderboardRow, name: str) -> str:
    if name not in row.times:
        return ABSENT
    seconds = row.times[name]
    if seconds is None:
        if row.leader == name:
            return f"{DNF} (leader, {row.pages[name]} pages)"
        return DNF
    text = format_hms(seconds)
    return f"**{text}**" if row.winner == name else text


def render_markdown(board: Leaderboard) -> str:
    header = ["Round"] + [f"{name}{'*' if name in board.flagged else ''} speedrun time" for name in board.crawlers]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join([":---:"] + ["---:"] * len(board.crawlers)) + "|",
    ]
    for row in board.rows:
        lines.append("| " + " | ".join([str(row.round)] + [_cell(row, name) for name in board.crawlers]) + " |")

    known = [value for value in board.averages.values() if value is not None]
    best = min(known) if known else None
    averages = []
    for name in board.crawlers:
        value = board.averages[name]
        if value is None:
            averages.append(DNF)
        else:
            text = format_hms(value)
            averages.append(f"**{text}**" if value == best else text)
    lines.append("| Average speedrun time | " + " | ".join(averages) + " |")
    lines.append("| Rounds won | " + " | ".join(str(board.overall_winner_counts[name]) for name in board.crawlers) + " |")
    if board.flagged:
        lines.append("")
        lines.append("\\* average covers only the rounds this crawler finished")
    return "\n".join(lines) + "\n"


def leaderboard_to_dict(board: Leaderboard) -> dict:
    return {
        "crawlers": list(board.crawlers),
        "rounds": [
            {
                "round": row.round,
                "winner": row.winner,
                "leader": row.leader,
                "speedrun_seconds": {name: row.times.get(name) for name in board.crawlers},
                "pages_archived": {name: row.pages.get(name) for name in board.crawlers},
            }
            for row in board.rows
        ],
        "averages": {
            name: {
                "seconds": board.averages[name],
                "display": format_hms(board.averages[name]) if board.averages[name] is not None else None,
            }
            for name in board.crawlers
        },
        "rounds_won": dict(board.overall_winner_counts),
        "flagged": list(board.flagged),
    }


def render_json(board: Leaderboard) -> str:
    return json.dumps(leaderboard_to_dict(board), indent=2) + "\n"
