"""Game profiles: what each rank receives in a game, and where the game's buttons are."""
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

PROFILE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "profiles")
ACTION_DELAY_MS = int(os.environ.get("SPEEDRUN_ACTION_DELAY_MS", "250"))

RATING_KEYS = ("speed", "passing", "kicking")
# 40-yard dash style speed: lower numbers are faster
DEFAULT_POLARITY = {"speed": "lower", "passing": "higher", "kicking": "higher"}
POLARITIES = ("lower", "higher")
ACTION_TYPES = ("click", "key")


class ProfileError(ValueError):
    def __init__(self, message: str, missing_ranks: Sequence[int] = ()):
        super().__init__(message)
        self.missing_ranks = tuple(missing_ranks)


@dataclass(frozen=True)
class UiAction:
    action: str
    x: Optional[int] = None
    y: Optional[int] = None
    key_code: Optional[str] = None
    delay_ms: int = ACTION_DELAY_MS

    def __post_init__(self):
        if self.action not in ACTION_TYPES:
            raise ProfileError(f"unknown UI action {self.action!r}")
        if self.action == "click" and (self.x is None or self.y is None):
            raise ProfileError("click actions need x and y")
        if self.action == "key" and not self.key_code:
            raise ProfileError("key actions need a key_code")
        if self.delay_ms < 0:
            raise ProfileError(f"delay_ms must be non-negative, got {self.delay_ms}")

    def to_dict(self) -> dict:
        return {"type": self.action, "x": self.x, "y": self.y, "key_code": self.key_code, "delay_ms": self.delay_ms}


@dataclass(frozen=True)
class RankEntry:
    perks: Tuple[str, ...] = ()
    weapon_tier: str = ""
    ratings: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class GameProfile:
    game_name: str
    rank_table: Dict[int, RankEntry]
    rating_polarity: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_POLARITY))
    ui_layout: Dict[str, Tuple[UiAction, ...]] = field(default_factory=dict)
    delay_ms: int = ACTION_DELAY_MS
    notes: str = ""

    def entry_for_rank(self, rank: int, count: int) -> RankEntry:
        """Rank 1 gets the best entry, the last rank the worst; middle ranks need their own entry."""
        if not self.rank_table:
            raise ProfileError(f"{self.game_name} has an empty rank table", missing_ranks=[rank])
        if rank == 1:
            return self.rank_table[1]
        if rank == count:
            return self.rank_table[max(self.rank_table)]
        if rank in self.rank_table and rank < max(self.rank_table):
            return self.rank_table[rank]
        raise ProfileError(f"{self.game_name} rank table has no entry for rank {rank} of {count}", missing_ranks=[rank])

    def layout_for(self, option: str, slot: Optional[int] = None) -> Optional[Tuple[UiAction, ...]]:
        if slot is not None and f"player{slot}.{option}" in self.ui_layout:
            return self.ui_layout[f"player{slot}.{option}"]
        return self.ui_layout.get(option)


def _better(value, other, polarity: str) -> bool:
    return value <= other if polarity == "lower" else value >= other


def validate_profile(profile: GameProfile) -> None:
    ranks = sorted(profile.rank_table)
    if not ranks:
        raise ProfileError(f"{profile.game_name}: rank table is empty")
    missing = [rank for rank in range(1, ranks[-1] + 1) if rank not in profile.rank_table]
    if missing or ranks[0] != 1:
        raise ProfileError(f"{profile.game_name}: rank table has gaps at {missing}", missing_ranks=missing)
    for key, polarity in profile.rating_polarity.items():
        if polarity not in POLARITIES:
            raise ProfileError(f"{profile.game_name}: rating {key} has unknown polarity {polarity!r}")
    for better, worse in zip(ranks, ranks[1:]):
        upper, lower = profile.rank_table[better].ratings, profile.rank_table[worse].ratings
        for key in sorted(set(upper) & set(lower)):
            polarity = profile.rating_polarity.get(key, "higher")
            if not _better(upper[key], lower[key], polarity):
                raise ProfileError(f"{profile.game_name}: rank {better} has a worse {key} than rank {worse} "
                                   f"({upper[key]} vs {lower[key]}, {polarity} is better)")


def _actions(option: str, value, delay_ms: int) -> Tuple[UiAction, ...]:
    items = value if isinstance(value, list) else [value]
    actions = []
    for item in items:
        if not isinstance(item, dict):
            raise ProfileError(f"ui_layout[{option}] must be an action object or a list of them")
        actions.append(UiAction(
            action=item.get("action"),
            x=item.get("x"),
            y=item.get("y"),
            key_code=item.get("key_code"),
            delay_ms=int(item.get("delay_ms", delay_ms)),
        ))
    return tuple(actions)


def profile_from_dict(data: dict) -> GameProfile:
    try:
        name = data["game_name"]
        table = data["rank_table"]
    except KeyError as e:
        raise ProfileError(f"profile lacks {e}")
    delay_ms = int(data.get("delay_ms", ACTION_DELAY_MS))
    rank_table = {}
    for key, entry in table.items():
        try:
            rank = int(key)
        except ValueError:
            raise ProfileError(f"{name}: rank table key {key!r} is not a rank number")
        rank_table[rank] = RankEntry(
            perks=tuple(entry.get("perks", ())),
            weapon_tier=entry.get("weapon_tier", ""),
            ratings={rating: float(value) for rating, value in entry.get("ratings", {}).items()},
        )
    polarity = dict(DEFAULT_POLARITY)
    polarity.update(data.get("rating_polarity", {}))
    profile = GameProfile(
        game_name=name,
        rank_table=dict(sorted(rank_table.items())),
        rating_polarity=polarity,
        ui_layout={option: _actions(option, value, delay_ms) for option, value in data.get("ui_layout", {}).items()},
        delay_ms=delay_ms,
        notes=data.get("notes", ""),
    )
    validate_profile(profile)
    return profile


def load_profile(path) -> GameProfile:
    """Loads a profile file, or a shipped profile by name (e.g. 'gun_mayhem_2')."""
    if not os.path.exists(path) and os.path.exists(os.path.join(PROFILE_DIR, f"{path}.json")):
        path = os.path.join(PROFILE_DIR, f"{path}.json")
    with open(path, "r", encoding="utf-8") as stream:
        try:
            data = json.load(stream)
        except ValueError as e:
            raise ProfileError(f"{path}: not valid JSON: {e}")
    return profile_from_dict(data)


def shipped_profiles() -> List[str]:
    return sorted(name[:-5] for name in os.listdir(PROFILE_DIR)
                  if name.endswith(".json") and not name.endswith("_layout.json"))
