"""Reading and writing experiment artifacts.

records.jsonl starts with a header line (config, hash, seed, library
version, PRNG) followed by one TrialRecord per line; summaries are JSON and
comparison tables CSV.  Every load error names the file and line.
"""

from __future__ import annotations

import json
from pathlib import Path

from .. import __version__
from ..errors import InvalidInputError
from ..matgen import PRNG_NAME
from .config import ExperimentConfig
from .experiment import TrialRecord
from .stats import ComparisonReport, Prediction
from .summary import ExperimentSummary

RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.json"
PREDICTIONS_FILE = "predictions.json"
COMPARISON_FILE = "comparison.csv"


def _header(config: ExperimentConfig) -> dict:
    return {
        "header": True,
        "config": config.to_json(),
        "config_hash": config.config_hash,
        "master_seed": config.master_seed,
        "version": __version__,
        "prng": PRNG_NAME,
    }


def write_records(path, config: ExperimentConfig, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(_header(config), sort_keys=True) + "\n")
        for rec in records:
            f.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


def read_records(path) -> tuple[ExperimentConfig, list[TrialRecord]]:
    records = []
    config = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if lineno == 1:
                    if not obj.get("header"):
                        raise ValueError("missing header line")
                    config = ExperimentConfig.from_json(obj["config"])
                    if config.config_hash != obj["config_hash"]:
                        raise ValueError("config hash does not match header config")
                else:
                    records.append(TrialRecord.from_json(obj))
            except (ValueError, KeyError, TypeError) as exc:
                raise InvalidInputError(f"{path}:{lineno}: corrupt record file: {exc}") from exc
    if config is None:
        raise InvalidInputError(f"{path}:1: empty record file")
    return config, records


def write_summary(path, summary: ExperimentSummary) -> None:
    Path(path).write_text(summary.dumps(), encoding="utf-8")


def _load_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc


def read_summary(path) -> ExperimentSummary:
    obj = _load_json(path)
    try:
        return ExperimentSummary.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path}:1: corrupt summary: {exc}") from exc


def write_predictions(path, config: ExperimentConfig, predictions) -> None:
    obj = {"config_hash": config.config_hash, "predictions": [p.to_json() for p in predictions]}
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_predictions(path) -> list[Prediction]:
    obj = _load_json(path)
    try:
        items = obj["predictions"] if isinstance(obj, dict) else obj
        return [Prediction.from_json(p) for p in items]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path}:1: corrupt predictions: {exc}") from exc


def write_comparison(path, report: ComparisonReport) -> None:
    Path(path).write_text(report.to_csv(), encoding="utf-8")


def save_run(out_dir, config, summary, records, predictions, report) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / RECORDS_FILE, config, records)
    write_summary(out / SUMMARY_FILE, summary)
    write_predictions(out / PREDICTIONS_FILE, config, predictions)
    write_comparison(out / COMPARISON_FILE, report)
    return out
