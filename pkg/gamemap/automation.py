import json
from typing import List

from .profiles import GameProfile, UiAction

START_MATCH = "start_match"


class AutomationError(ValueError):
    def __init__(self, option: str, game_name: str = ""):
        super().__init__(f"{game_name or 'profile'} ui_layout has no entry for option {option!r}")
        self.option = option


def emit_automation_script(config, profile: GameProfile) -> List[UiAction]:
    """Ordered UI actions that select every assignment's options in the game."""
    actions: List[UiAction] = []
    for slot, assignment in enumerate(sorted(config.assignments, key=lambda a: a.rank), start=1):
        player = profile.ui_layout.get(f"player{slot}")
        if player:
            actions.extend(player)
        options = ([assignment.weapon_tier] if assignment.weapon_tier else []) + list(assignment.perks)
        for option in options:
            selected = profile.layout_for(option, slot)
            if not selected:
                raise AutomationError(option, profile.game_name)
            actions.extend(selected)
    if actions and profile.ui_layout.get(START_MATCH):
        actions.extend(profile.ui_layout[START_MATCH])
    return actions


def automation_lines(actions) -> str:
    return "".join(json.dumps(action.to_dict()) + "\n" for action in actions)


def write_automation_script(actions, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(automation_lines(actions))
