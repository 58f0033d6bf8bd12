import json
import logging
import os

import azure.functions as func
from azure.core.exceptions import HttpResponseError

from race import build_leaderboard, leaderboard_to_dict, render_markdown
from results_store import load_published_rounds

# Comma-separated, e.g. SPEEDRUN_ALLOWED_ORIGINS="http://localhost:5173,https://overlay.example.org"
ALLOWED_ORIGINS = [origin.strip() for origin in os.environ.get("SPEEDRUN_ALLOWED_ORIGINS", "").split(",")
                   if origin.strip()]
FORMATS = ("json", "markdown")


def add_cors_headers(response, origin):
    """Adds CORS headers to the response."""
    if origin in ALLOWED_ORIGINS:
        response.headers['Access-Control-Allow-Origin'] = origin
    response.headers['Access-Control-Allow-Methods'] = 'GET, OPTIONS'
    response.headers['Access-Control-Allow-Headers'] = 'Content-Type'
    return response


def main(req: func.HttpRequest) -> func.HttpResponse:
    origin = req.headers.get('Origin', '')

    if req.method == "OPTIONS":
        response = func.HttpResponse(status_code=204)
        return add_cors_headers(response, origin)

    output_format = (req.params.get('format') or 'json').lower()
    if output_format not in FORMATS:
        response = func.HttpResponse(f"Bad Request: format must be one of {', '.join(FORMATS)}", status_code=400)
        return add_cors_headers(response, origin)

    try:
        rounds = load_published_rounds()
        board = build_leaderboard(rounds)
        logging.info(f"Serving leaderboard over {len(board.rows)} rounds as {output_format}")
        if output_format == "markdown":
            response = func.HttpResponse(render_markdown(board), mimetype="text/markdown", status_code=200)
        else:
            response = func.HttpResponse(json.dumps(leaderboard_to_dict(board)), mimetype="application/json",
                                         status_code=200)
        return add_cors_headers(response, origin)

    except HttpResponseError as hre:
        logging.error(f"Azure Storage Error reading leaderboard: Status={hre.status_code}, Message={hre.message}")
        response = func.HttpResponse(json.dumps({"error": f"storage error: {hre.message}"}),
                                     mimetype="application/json", status_code=500)
        return add_cors_headers(response, origin)

    except Exception as e:
        logging.error(f"Unexpected error building leaderboard: {type(e).__name__}: {str(e)}", exc_info=True)
        response = func.HttpResponse(json.dumps({"error": f"{type(e).__name__}: {str(e)}"}),
                                     mimetype="application/json", status_code=500)
        return add_cors_headers(response, origin)
