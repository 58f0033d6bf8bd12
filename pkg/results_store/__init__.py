import json
import logging
import os
from collections import OrderedDict
from datetime import datetime

import pytz
from azure.core.exceptions import HttpResponseError, ResourceExistsError
from azure.data.tables import TableServiceClient, UpdateMode

from metrics import PerformanceResults
from race import CrawlerRun, RoundResult, with_winner

# --- Configuration ---
RESULTS_TABLE_NAME = os.environ.get("SPEEDRUN_RESULTS_TABLE", "speedrunresults")


def partition_key(round_number: int) -> str:
    """Zero-padded so partitions list in round order."""
    return f"round-{round_number:04d}"


def get_table_client():
    conn_string = os.environ.get("AZURE_STORAGE_CONNECTION_STRING")
    if not conn_string:
        raise ValueError("AZURE_STORAGE_CONNECTION_STRING is not set")
    table_service = TableServiceClient.from_connection_string(conn_string)
    table_client = table_service.get_table_client(table_name=RESULTS_TABLE_NAME)
    # Ensure table exists
    try:
        table_client.create_table()
        logging.info(f"Table '{RESULTS_TABLE_NAME}' created.")
    except ResourceExistsError:
        pass
    except HttpResponseError as e:
        if "TableAlreadyExists" not in str(e):
            raise
    return table_client


def results_entity(results: PerformanceResults, finished: bool) -> dict:
    return {
        "PartitionKey": partition_key(results.round),
        "RowKey": results.crawler_name,
        "crawler_name": results.crawler_name,
        "round": results.round,
        "pages_archived": results.pages_archived,
        "speedrun_seconds": float(results.speedrun_seconds),
        "resources_404": results.resources_404,
        "resources_other_4xx_5xx": results.resources_other_4xx_5xx,
        "missing_by_type": json.dumps(results.to_dict()["missing_by_type"], sort_keys=True),
        "finished": bool(finished),
        "published_at": datetime.now(pytz.utc).isoformat(),
    }


def results_from_entity(entity) -> PerformanceResults:
    return PerformanceResults.from_dict({
        "crawler_name": entity.get("crawler_name", entity.get("RowKey")),
        "round": int(entity["round"]),
        "pages_archived": int(entity["pages_archived"]),
        "speedrun_seconds": float(entity["speedrun_seconds"]),
        "resources_404": int(entity.get("resources_404", 0)),
        "resources_other_4xx_5xx": int(entity.get("resources_other_4xx_5xx", 0)),
        "missing_by_type": json.loads(entity.get("missing_by_type") or "{}"),
    })


def publish_results(results: PerformanceResults, finished: bool, table_client=None) -> dict:
    """Upserts one crawler's round results for the scoreboard overlay."""
    table_client = table_client or get_table_client()
    entity = results_entity(results, finished)
    table_client.upsert_entity(entity=entity, mode=UpdateMode.REPLACE)
    logging.info(f"Published results for {results.crawler_name} round {results.round} "
                 f"(finished: {finished}) to table {RESULTS_TABLE_NAME}")
    return entity


def load_published_rounds(table_client=None) -> list:
    """Reads every published entity back as RoundResults, ordered by round."""
    table_client = table_client or get_table_client()
    grouped = {}
    skipped = 0
    for entity in table_client.list_entities():
        try:
            results = results_from_entity(entity)
        except (KeyError, TypeError, ValueError) as e:
            skipped += 1
            logging.warning(f"Skipping entity {entity.get('PartitionKey')}/{entity.get('RowKey')}: {e}")
            continue
        finished = str(entity.get("finished", "true")).lower() == "true"
        runs = grouped.setdefault(results.round, OrderedDict())
        runs[results.crawler_name] = CrawlerRun(name=results.crawler_name, results=results, finished=finished)

    rounds = [with_winner(RoundResult(round=number, seeds=(), per_crawler=dict(grouped[number])))
              for number in sorted(grouped)]
    logging.info(f"Loaded {len(rounds)} published rounds from {RESULTS_TABLE_NAME}. Skipped: {skipped}.")
    return rounds
