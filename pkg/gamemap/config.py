import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from warc_core import payload_digest

from .profiles import GameProfile, ProfileError
from .ranking import TierAssignment


@dataclass(frozen=True)
class PlayerAssignment:
    crawler_name: str
    rank: int
    tier_label: str
    perks: Tuple[str, ...] = ()
    weapon_tier: str = ""
    ratings: Dict[str, float] = field(default_factory=dict)
    team_name: str = ""
    player_names: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "crawler_name": self.crawler_name,
            "rank": self.rank,
            "tier_label": self.tier_label,
            "perks": list(self.perks),
            "weapon_tier": self.weapon_tier,
            "ratings": dict(sorted(self.ratings.items())),
            "team_name": self.team_name,
            "player_names": list(self.player_names),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlayerAssignment":
        return cls(
            crawler_name=data["crawler_name"],
            rank=int(data["rank"]),
            tier_label=data.get("tier_label", ""),
            perks=tuple(data.get("perks", ())),
            weapon_tier=data.get("weapon_tier", ""),
            ratings={key: float(value) for key, value in data.get("ratings", {}).items()},
            team_name=data.get("team_name", data["crawler_name"]),
            player_names=tuple(data.get("player_names", ())),
        )


@dataclass(frozen=True)
class GameConfig:
    game_name: str
    assignments: Tuple[PlayerAssignment, ...] = ()
    source_results: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "game_name": self.game_name,
            "assignments": [assignment.to_dict() for assignment in self.assignments],
            "source_results": list(self.source_results),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "GameConfig":
        return cls(
            game_name=data["game_name"],
            assignments=tuple(PlayerAssignment.from_dict(item) for item in data.get("assignments", ())),
            source_results=tuple(data.get("source_results", ())),
        )


def results_digest(results) -> str:
    return payload_digest(results.to_json().encode("utf-8"))


def assign_perks(ranking: Sequence[TierAssignment], profile: GameProfile,
                 contributors: Optional[Mapping[str, Iterable[str]]] = None,
                 source_results: Iterable[str] = ()) -> GameConfig:
    """Gives each ranked crawler its rank's table entry; teams are named after crawlers."""
    contributors = contributors or {}
    ordered = sorted(ranking, key=lambda item: item.rank)
    ranks = [item.rank for item in ordered]
    if ranks != list(range(1, len(ordered) + 1)):
        raise ProfileError(f"ranking is not a permutation of 1..{len(ordered)}: {ranks}")

    missing = []
    assignments = []
    for item in ordered:
        try:
            entry = profile.entry_for_rank(item.rank, len(ordered))
        except ProfileError as e:
            missing.extend(e.missing_ranks)
            continue
        assignments.append(PlayerAssignment(
            crawler_name=item.crawler_name,
            rank=item.rank,
            tier_label=item.tier_label,
            perks=entry.perks,
            weapon_tier=entry.weapon_tier,
            ratings=dict(entry.ratings),
            team_name=item.crawler_name,
            player_names=tuple(contributors.get(item.crawler_name, ())),
        ))
    if missing:
        raise ProfileError(f"{profile.game_name} rank table lacks entries for ranks {missing} "
                           f"(ranking has {len(ordered)} crawlers)", missing_ranks=missing)

    logging.info(f"Assigned {profile.game_name} tiers: "
                 + ", ".join(f"{a.rank}. {a.crawler_name} ({a.weapon_tier or 'no weapon'}, "
                             f"perks: {', '.join(a.perks) or 'none'})" for a in assignments))
    return GameConfig(game_name=profile.game_name, assignments=tuple(assignments), source_results=tuple(source_results))


def write_config(config: GameConfig, path) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(config.to_json())


def load_config(path) -> GameConfig:
    with open(path, "r", encoding="utf-8") as stream:
        return GameConfig.from_dict(json.load(stream))


def digests_in_rank_order(ranking: Sequence[TierAssignment], results) -> List[str]:
    by_name = {result.crawler_name: result for result in results}
    return [results_digest(by_name[item.crawler_name]) for item in sorted(ranking, key=lambda item: item.rank)]
