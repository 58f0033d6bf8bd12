"""Turns speedrun results into game configurations, roster patches and UI action scripts."""
from .automation import AutomationError, automation_lines, emit_automation_script, write_automation_script
from .config import (GameConfig, PlayerAssignment, assign_perks, digests_in_rank_order, load_config,
                     results_digest, write_config)
from .profiles import (PROFILE_DIR, GameProfile, ProfileError, RankEntry, UiAction, load_profile,
                       profile_from_dict, shipped_profiles, validate_profile)
from .ranking import RankingError, TierAssignment, rank_crawlers
from .roster import CellRef, RosterError, RosterLayout, layout_from_dict, load_layout, patch_roster
