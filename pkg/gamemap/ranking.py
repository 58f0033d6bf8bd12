from dataclasses import dataclass
from typing import Iterable, List


class RankingError(ValueError):
    pass


@dataclass(frozen=True)
class TierAssignment:
    crawler_name: str
    rank: int
    tier_label: str


def tier_label(rank: int, count: int) -> str:
    if rank == 1:
        return "fastest"
    if rank == count:
        return "slowest"
    return f"rank-{rank}"


def rank_crawlers(results, unfinished: Iterable[str] = ()) -> List[TierAssignment]:
    """Finishers by ascending speedrun time, then unfinished crawlers by pages archived.

    Names break every remaining tie, so the output is always a permutation
    of the input names.
    """
    results = list(results)
    if not results:
        raise RankingError("cannot rank an empty set of results")
    names = [result.crawler_name for result in results]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise RankingError(f"duplicate crawler names: {', '.join(duplicates)}")
    rounds = sorted({result.round for result in results})
    if len(rounds) > 1:
        raise RankingError(f"results come from different rounds: {rounds}")

    unfinished = set(unfinished)
    finishers = sorted((r for r in results if r.crawler_name not in unfinished),
                       key=lambda r: (r.speedrun_seconds, r.crawler_name))
    stragglers = sorted((r for r in results if r.crawler_name in unfinished),
                        key=lambda r: (-r.pages_archived, r.crawler_name))
    ordered = finishers + stragglers
    return [TierAssignment(crawler_name=result.crawler_name, rank=rank, tier_label=tier_label(rank, len(ordered)))
            for rank, result in enumerate(ordered, start=1)]
