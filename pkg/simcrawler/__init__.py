"""Simulated crawler and fault-injecting fixture server used to exercise speedrun rounds."""
from .crawler import CrawlAbortedError, SimCrawlResult, SpeedProfile, create_session, http_payload, run_sim_crawl
from .server import (SITE_DIR, FaultRule, FixtureServer, FixtureServerError, fault_from_dict, load_faults,
                     serve_fixture)
