"""CSV and JSON writers for run results.

CSV layout: ``#`` provenance lines (tool version, config echo, seed), then
the column header, then one line per row. Floats carry 12 significant
digits and missing values are empty cells. Nothing time-dependent is
written, so identical runs give byte-identical files.
"""

import csv
import json
import math
from typing import Any, Dict, List, TextIO

from secrecy_relay import __version__
from secrecy_relay.services.experiments import RunResult

TOOL_NAME = "secrecy-relay"


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def provenance_lines(result: RunResult) -> List[str]:
    config = result.config.to_dict()
    return [
        f"# {TOOL_NAME} {__version__}",
        f"# config: {json.dumps(config, sort_keys=True)}",
        f"# seed: {result.config.mc.seed}",
    ]


def write_csv(result: RunResult, stream: TextIO) -> None:
    for line in provenance_lines(result):
        stream.write(line + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([format_value(row.get(column)) for column in result.columns])


def _json_safe(value: Any) -> Any:
    """Non-finite floats become strings; JSON has no literal for them."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


def result_document(result: RunResult) -> Dict[str, Any]:
    document = result.to_dict()
    document["diagnostics"] = [{"kind": "tool", "name": TOOL_NAME, "version": __version__}] + document["diagnostics"]
    return _json_safe(document)


def write_json(result: RunResult, stream: TextIO) -> None:
    json.dump(result_document(result), stream, indent=2, sort_keys=True)
    stream.write("\n")


def write_result(result: RunResult, stream: TextIO, output_format: str) -> None:
    if output_format == "json":
        write_json(result, stream)
    else:
        write_csv(result, stream)
