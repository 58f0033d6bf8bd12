"""Archive-quality analytics: resource categories, missing resources, results files, CDX summaries."""
from .categories import ResourceCategory, classify_resource
from .cdx_summary import CdxSummary, status_class, summarize_cdx
from .references import extract_references
from .results import (MissingRoundBoundaryError, PerformanceResults, ResultsFormatError, capture_key,
                      compute_performance_results, load_results, results_filename, write_results)
