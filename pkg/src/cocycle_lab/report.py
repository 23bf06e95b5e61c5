"""Report and CSV emission.

Reports are JSON documents validated against the published schema below.
CSV files put the timestamp in a single leading comment line; everything
after that line (the body: header row plus data rows) is a deterministic
function of the scenario and its seeds.
"""

import datetime
import hashlib
import json
from importlib import metadata

import jsonschema

try:
    __version__ = metadata.version("cocycle-lab")
except metadata.PackageNotFoundError:       # running from a source tree
    __version__ = "0.1.0"

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "cocycle-lab report",
    "type": "object",
    "required": ["schema_version", "command", "scenario", "seed",
                 "version_hash", "wall_clock_s", "results"],
    "properties": {
        "schema_version": {"const": 1},
        "command": {"type": "string"},
        "scenario": {"type": "object"},
        "scenario_path": {"type": "string"},
        "seed": {"type": "integer"},
        "version_hash": {"type": "string"},
        "generated": {"type": "string"},
        "wall_clock_s": {"type": "number"},
        "results": {"type": "object"},
        "perturbation_ledger": {"type": "array", "items": {"type": "object"}},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


def version_hash(scenario_data):
    digest = hashlib.sha256()
    digest.update(json.dumps(scenario_data, sort_keys=True, default=str).encode())
    digest.update(__version__.encode())
    return digest.hexdigest()[:16]


def build_report(command, scenario, results, wall_clock_s, ledger=(), notes=()):
    report = {
        "schema_version": 1,
        "command": command,
        "scenario": scenario.data,
        "scenario_path": scenario.path,
        "seed": scenario.seed,
        "version_hash": version_hash(scenario.data),
        "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "wall_clock_s": float(wall_clock_s),
        "results": results,
        "perturbation_ledger": list(ledger),
        "notes": list(notes),
    }
    jsonschema.validate(report, REPORT_SCHEMA)
    return report


def validate_report(report):
    jsonschema.validate(report, REPORT_SCHEMA)


def write_report(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def format_cell(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path, columns, rows):
    """Comma-separated, '.' decimals, LF endings; timestamp on line one only."""
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# cocycle-lab {__version__} generated {stamp}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def csv_body(path):
    """Everything below the timestamp line (the deterministic part)."""
    with open(path, "rb") as fh:
        data = fh.read()
    return data.split(b"\n", 1)[1]
