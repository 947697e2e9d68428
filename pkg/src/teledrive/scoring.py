"""Infraction scoring for the three driving tasks.

A run starts from an ideal score of 1.0, scaled by the completed route
fraction C and penalized multiplicatively per infraction:

    score = C * 0.8^N_c * 0.9^N_l * 0.9^N_s

where N_c counts collisions, N_l lane deviations, and N_s running stop
signs or red lights. Human evaluator sheets may log uncertain infractions
as 0.5 increments; simulator-sourced counts are integers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from teledrive.stats import mean_sd

COLLISION_PENALTY = 0.8
LANE_PENALTY = 0.9
SIGN_PENALTY = 0.9

# mcity: free driving, traffic signals ignored by protocol, N_s forced 0.
MODES = ("mcity", "town", "obstacle")


@dataclass(frozen=True)
class InfractionCounts:
    completion: float  # C, fraction of route completed in [0, 1]
    collisions: float = 0.0  # N_c
    lane_deviations: float = 0.0  # N_l
    signs_run: float = 0.0  # N_s (stop signs or red lights, task-dependent)

    def __post_init__(self):
        if not 0.0 <= self.completion <= 1.0:
            raise ValueError(f"completion must be in [0, 1], got {self.completion}")
        for name in ("collisions", "lane_deviations", "signs_run"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a non-negative number, got {v}")

    def require_half_steps(self):
        """Evaluator sheets may only use 0.5 increments."""
        for name in ("collisions", "lane_deviations", "signs_run"):
            v = getattr(self, name)
            if (2 * v) != int(2 * v):
                raise ValueError(f"{name}={v} is not a multiple of 0.5")

    def require_integers(self):
        """Simulator-sourced counts cannot carry the 0.5 uncertainty step."""
        for name in ("collisions", "lane_deviations", "signs_run"):
            v = getattr(self, name)
            if v != int(v):
                raise ValueError(f"simulator-sourced {name}={v} must be an integer")


def driving_score(counts: InfractionCounts, mode: str = "town") -> float:
    """Composite driving score; mode='mcity' ignores N_s by protocol."""
    if mode not in MODES:
        raise ValueError(f"unknown task mode {mode!r}")
    n_s = 0.0 if mode == "mcity" else counts.signs_run
    return (counts.completion
            * COLLISION_PENALTY ** counts.collisions
            * LANE_PENALTY ** counts.lane_deviations
            * SIGN_PENALTY ** n_s)


@dataclass
class EvaluatorSheet:
    """One evaluator's per-run infraction counts for a session."""
    evaluator_id: str
    runs: dict[str, InfractionCounts]
    notes: str = ""

    def __post_init__(self):
        for counts in self.runs.values():
            counts.require_half_steps()


@dataclass
class RunScore:
    run_id: str
    per_evaluator: dict[str, float]
    mean: float
    sd: float


@dataclass
class ScoreReport:
    mode: str
    runs: list[RunScore] = field(default_factory=list)

    @property
    def overall_mean_sd(self) -> tuple[float, float]:
        return mean_sd([r.mean for r in self.runs])

    def render(self) -> str:
        lines = [f"task mode: {self.mode}",
                 f"{'run':<16} {'mean':<10} {'SD':<10} per-evaluator"]
        for r in self.runs:
            per = ", ".join(f"{k}={v:.4f}" for k, v in r.per_evaluator.items())
            lines.append(f"{r.run_id:<16} {r.mean:<10.4f} {r.sd:<10.4f} {per}")
        if len(self.runs) > 1:
            m, sd = self.overall_mean_sd
            lines.append(f"overall: {m:.4f} ({sd:.4f})")
        return "\n".join(lines)


def aggregate_evaluators(sheets: list[EvaluatorSheet], mode: str) -> ScoreReport:
    """Score each run per evaluator, then average scores across evaluators.

    Scores (not raw counts) are the aggregated unit, since the composite
    score is the published quantity.
    """
    if not sheets:
        raise ValueError("no evaluator sheets given")
    run_ids = list(sheets[0].runs)
    for sheet in sheets[1:]:
        if list(sheet.runs) != run_ids:
            raise ValueError(f"evaluator {sheet.evaluator_id!r} covers different runs")
    report = ScoreReport(mode=mode)
    for run_id in run_ids:
        per = {s.evaluator_id: driving_score(s.runs[run_id], mode) for s in sheets}
        m, sd = mean_sd(list(per.values()))
        report.runs.append(RunScore(run_id, per, m, sd))
    return report


def counts_from_events(events, completion: float, aborted: bool = False) -> InfractionCounts:
    """Fold simulator infraction events into counts; C comes from route
    progress (frozen below 1.0 when the run was aborted)."""
    kinds = {"collision": 0.0, "lane_deviation": 0.0, "ran_stop": 0.0, "ran_red": 0.0}
    for ev in events:
        kind = getattr(ev, "kind", None) or ev["kind"]
        weight = getattr(ev, "weight", None) or ev.get("weight", 1.0)
        if kind not in kinds:
            raise ValueError(f"unknown infraction kind {kind!r}")
        kinds[kind] += weight
    if aborted and completion >= 1.0:
        raise ValueError("aborted run cannot have full completion")
    return InfractionCounts(
        completion=completion,
        collisions=kinds["collision"],
        lane_deviations=kinds["lane_deviation"],
        signs_run=kinds["ran_stop"] + kinds["ran_red"],
    )


# ---------------------------------------------------------------------------
# structured-text I/O for sheets and reports


def _counts_to_dict(c: InfractionCounts) -> dict:
    return {"C": c.completion, "N_c": c.collisions,
            "N_l": c.lane_deviations, "N_s": c.signs_run}


def _counts_from_dict(d: dict) -> InfractionCounts:
    return InfractionCounts(d["C"], d.get("N_c", 0.0), d.get("N_l", 0.0), d.get("N_s", 0.0))


def save_sheet(sheet: EvaluatorSheet, path: str | Path):
    doc = {"version": 1, "evaluator_id": sheet.evaluator_id, "notes": sheet.notes,
           "runs": {rid: _counts_to_dict(c) for rid, c in sheet.runs.items()}}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_sheet(path: str | Path) -> EvaluatorSheet:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != 1:
        raise ValueError(f"unsupported sheet version {doc.get('version')!r}")
    runs = {rid: _counts_from_dict(c) for rid, c in doc["runs"].items()}
    return EvaluatorSheet(doc["evaluator_id"], runs, doc.get("notes", ""))


def save_report(report: ScoreReport, path: str | Path):
    doc = {"version": 1, "mode": report.mode,
           "runs": [{"run_id": r.run_id, "per_evaluator": r.per_evaluator,
                     "mean": r.mean, "sd": r.sd} for r in report.runs]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
