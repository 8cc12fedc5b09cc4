"""CSV/TSV schemas written and read by the pipeline.

Every file has a header row; reals are fixed six-decimal; missing values are
written as ``NA``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import OrderedDict
from pathlib import Path
from typing import Iterable, Sequence

from . import tables
from .trust_core import EPS, DetectorOutcome, TrustTrajectory

log = logging.getLogger(__name__)

MISSING = "NA"

TRAJECTORY_COLUMNS = (
    "agent_id", "trial", "reported_trust", "outcome_class", "behavior", "detection_score", "tracking_score",
)
REQUIRED_TRAJECTORY_COLUMNS = ("agent_id", "trial", "reported_trust", "outcome_class")
PROFILE_COLUMNS = ("agent_id",) + tables.DIMENSIONS
SCHEDULE_COLUMNS = ("agent_id", "level", "trial", "outcome_class")
AGENT_COLUMNS = ("agent_id", "archetype", "level", "alpha0", "beta0", "gain_success", "gain_failure")
PARAM_COLUMNS = (
    "agent_id", "estimator", "alpha0", "beta0", "gain_success", "gain_failure", "objective", "converged", "degenerate",
)
PREDICTION_COLUMNS = ("agent_id", "trial", "reported_trust", "predicted_trust")
CLUSTER_COLUMNS = ("agent_id", "label", "avg_log_trust", "rmse", "centroid_distance")


class SchemaError(ValueError):
    def __init__(self, column: str, path=None):
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")
        self.column = column


class EmptyFile(ValueError):
    pass


def fmt(value) -> str:
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return MISSING
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        out = f"{value:.6f}"
        return "0.000000" if out == "-0.000000" else out
    return str(value)


def render(columns: Sequence[str], rows: Iterable[Sequence], delimiter: str = ",") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, rows, delimiter: str = ",") -> Path:
    path = Path(path)
    path.write_text(render(columns, rows, delimiter), encoding="utf-8", newline="")
    return path


def read_table(path, required: Sequence[str] = (), delimiter: str = ",") -> list[dict[str, str]]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise EmptyFile(f"{path} is empty")
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            raise SchemaError(col, path)
    return list(reader)


def parse_float(value: str):
    return None if value == MISSING else float(value)


def ingest_trajectories(path, expected_trials: int = 100, notes: list[str] | None = None) -> list[TrustTrajectory]:
    """Load trajectories.csv, clamping trust into [EPS, 1 - EPS].

    Agents whose trial count differs from ``expected_trials`` are loaded but
    noted. Notes go to the logger and, when given, to ``notes``.
    """
    notes = notes if notes is not None else []
    rows = read_table(path, REQUIRED_TRAJECTORY_COLUMNS)
    if not rows:
        raise EmptyFile(f"{path} has no data rows")
    by_agent: OrderedDict[str, list] = OrderedDict()
    for r in rows:
        by_agent.setdefault(r["agent_id"], []).append(r)
    out = []
    for agent_id, agent_rows in by_agent.items():
        agent_rows.sort(key=lambda r: int(r["trial"]))
        reports = [float(r["reported_trust"]) for r in agent_rows]
        outcomes = [DetectorOutcome.from_class(r["outcome_class"]) for r in agent_rows]
        traj = TrustTrajectory(agent_id, reports, outcomes)
        if traj.clamped:
            notes.append(f"{agent_id}: {traj.clamped} trust value(s) clamped into [{EPS}, {1 - EPS}]")
        if len(traj) != expected_trials:
            notes.append(f"{agent_id}: {len(traj)} trials, expected {expected_trials}")
        out.append(traj)
    for note in notes:
        log.warning(note)
    return out


def trajectory_rows(records) -> list[tuple]:
    rows = []
    for rec in records:
        for i, trial in enumerate(rec.schedule.trials):
            rows.append((
                rec.agent_id, trial.index, float(rec.trajectory.reports[i]), trial.outcome_class,
                rec.behaviors[i], float(rec.detection[i]), int(rec.tracking[i]),
            ))
    return rows
