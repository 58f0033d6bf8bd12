"""Speedrun rounds: seeds, progress events, supervision, winners and leaderboards."""
from .adapters import AdapterConfigError, CrawlerAdapter, adapter_from_dict, load_adapter
from .events import (EVENT_KINDS, ERROR, PAGE_COMPLETE, ROUND_FINISH, ROUND_START, EventTail, EventWriter,
                     ProgressEvent, check_event_order, format_event_time, halfway_split, now_utc,
                     parse_event_time, read_events, write_events)
from .leaderboard import Leaderboard, LeaderboardRow, build_leaderboard, leaderboard_to_dict, render_json, render_markdown
from .rounds import (CrawlerRun, RoundResult, determine_winner, is_complete, leader, load_round_results,
                     round_summary, with_winner, write_round_summary)
from .seeds import SeedListError, load_seed_list, write_seed_list
from .supervisor import RoundError, round_directory, run_round, salvage_warc_records
from .timing import ClockSkewError, compute_speedrun_time, format_hms, parse_hms
