"""GO/NO-GO reaction-time tasks: schedule generation, outcome labeling,
and confusion-matrix metrics.

The simple task shows a brief visual target at a random onset (NO-GO catch
trials are cued and must not be clicked). The braking task wraps each trial
around an obstacle-spawn GO phase preceded by a NO-GO phase, with the
braking-trial timing law deciding collisions. A response is a valid
reaction only within [50, 1000] ms of stimulus onset.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from teledrive.vehicle import BrakeTrialSpec, run_brake_trial, spawn_brake_trial

logger = logging.getLogger(__name__)

VALID_RT_MIN = 50.0  # ms
VALID_RT_MAX = 1000.0
SIMPLE_TRIALS = 50
SIMPLE_NOGO = 10
SIMPLE_STIM_MS = 60.0
SIMPLE_ONSET_RANGE = (1000.0, 3000.0)
BRAKING_TRIALS = 40

# display metadata only; labeling is geometry-free
DISPLAY_GEOMETRY = {"viewing_distance_cm": 150.0, "screen_diagonal_cm": 54.0,
                    "target_radius_cm": 5.0}


class TrialKind(str, enum.Enum):
    GO = "GO"
    NOGO = "NOGO"


class Label(str, enum.Enum):
    TP = "TP"
    TN = "TN"
    FP = "FP"
    FN = "FN"


@dataclass(frozen=True)
class TrialSpec:
    kind: TrialKind
    stimulus_onset: float  # ms into the trial
    stimulus_duration: float = SIMPLE_STIM_MS
    cue: bool = False  # auditory marker during the ITI (NO-GO catch trials)

    def __post_init__(self):
        if self.stimulus_onset < 0:
            raise ValueError("onset must be non-negative")


@dataclass(frozen=True)
class BrakingTrialSpec:
    """One braking trial: a NO-GO phase (drive, no obstacle) followed by a
    GO phase opened by the obstacle spawn."""
    nogo_duration: float  # ms
    go_duration: float = 5000.0  # ms, the time-to-collision window
    trial: BrakeTrialSpec = spawn_brake_trial()

    @property
    def go_onset(self) -> float:
        return self.nogo_duration


@dataclass(frozen=True)
class TrialOutcome:
    label: Label
    valid_rt: float | None = None  # ms, present iff label is TP

    def __post_init__(self):
        if (self.label is Label.TP) != (self.valid_rt is not None):
            raise ValueError("valid_rt present iff the trial is a true positive")
        if self.valid_rt is not None and not (VALID_RT_MIN <= self.valid_rt <= VALID_RT_MAX):
            raise ValueError("valid_rt outside the accepted window")


def gen_simple_run(seed: int) -> list[TrialSpec]:
    """50 trials with exactly 10 seeded-random NO-GO catch trials; onsets
    drawn uniformly from 1000-3000 ms."""
    rng = np.random.default_rng(seed)
    nogo_at = set(rng.choice(SIMPLE_TRIALS, SIMPLE_NOGO, replace=False).tolist())
    onsets = rng.uniform(*SIMPLE_ONSET_RANGE, SIMPLE_TRIALS)
    return [
        TrialSpec(
            kind=TrialKind.NOGO if i in nogo_at else TrialKind.GO,
            stimulus_onset=float(onsets[i]),
            cue=i in nogo_at,
        )
        for i in range(SIMPLE_TRIALS)
    ]


def gen_braking_run(seed: int) -> list[BrakingTrialSpec]:
    """40 trials, each one NO-GO phase then one GO phase (obstacle spawn)."""
    rng = np.random.default_rng(seed)
    durations = rng.uniform(3000.0, 8000.0, BRAKING_TRIALS)
    return [BrakingTrialSpec(nogo_duration=float(d)) for d in durations]


def label_trial(spec: TrialSpec, clicks) -> TrialOutcome:
    """Label one trial from trial-relative click times (ms).

    GO: exactly one click inside [50, 1000] ms of onset and none outside is
    a TP carrying the reaction time; any click outside the window, or more
    than one inside it, is an FP; no clicks is an FN. NO-GO: any click is an
    FP, none is a TN. Clicks before the trial started are dropped with a
    warning.
    """
    kept = []
    for t in clicks:
        if t < 0:
            logger.warning("click at %.1f ms precedes trial start; ignored", t)
            continue
        kept.append(float(t))

    if spec.kind is TrialKind.NOGO:
        return TrialOutcome(Label.TN) if not kept else TrialOutcome(Label.FP)

    if not kept:
        return TrialOutcome(Label.FN)
    latencies = [t - spec.stimulus_onset for t in kept]
    in_window = [lat for lat in latencies
                 if VALID_RT_MIN <= lat <= VALID_RT_MAX]
    if len(in_window) == 1 and len(latencies) == 1:
        return TrialOutcome(Label.TP, valid_rt=in_window[0])
    return TrialOutcome(Label.FP)


def label_braking_trial(spec: BrakingTrialSpec, clicks,
                        dt: float = 0.02) -> tuple[TrialOutcome, TrialOutcome, bool]:
    """Label both phases of a braking trial and run the collision check.

    clicks are trial-relative ms. Returns (nogo_outcome, go_outcome,
    collision); a successful GO phase requires no collision, so a TP whose
    simulated brake onset still collides is demoted to FN.
    """
    clicks = sorted(float(t) for t in clicks)
    nogo_clicks = [t for t in clicks if 0 <= t < spec.go_onset]
    go_clicks = [t - spec.go_onset for t in clicks if t >= spec.go_onset]

    nogo = TrialOutcome(Label.TN) if not nogo_clicks else TrialOutcome(Label.FP)
    go = label_trial(TrialSpec(TrialKind.GO, 0.0), go_clicks)

    brake_onset_s = go_clicks[0] / 1000.0 if go_clicks else None
    collision = run_brake_trial(spec.trial, brake_onset_s, dt).collision
    if go.label is Label.TP and collision:
        go = TrialOutcome(Label.FN)  # cannot count a success that crashed
    return nogo, go, collision


@dataclass(frozen=True)
class RTMetrics:
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    valid_rts: tuple[float, ...]

    @property
    def mean_rt(self) -> float | None:
        return float(np.mean(self.valid_rts)) if self.valid_rts else None

    @property
    def sd_rt(self) -> float | None:
        if len(self.valid_rts) < 2:
            return None
        return float(np.std(self.valid_rts, ddof=1))


def run_metrics(outcomes) -> RTMetrics:
    """Confusion-matrix metrics; a metric with an empty denominator is
    reported absent rather than zero."""
    counts = {label: 0 for label in Label}
    rts = []
    for outcome in outcomes:
        counts[outcome.label] += 1
        if outcome.valid_rt is not None:
            rts.append(outcome.valid_rt)
    tp, tn = counts[Label.TP], counts[Label.TN]
    fp, fn = counts[Label.FP], counts[Label.FN]

    def ratio(num, den):
        return num / den if den > 0 else None

    return RTMetrics(
        accuracy=ratio(tp + tn, tp + tn + fp + fn),
        sensitivity=ratio(tp, tp + fn),
        specificity=ratio(tn, tn + fp),
        valid_rts=tuple(rts),
    )


@dataclass(frozen=True)
class ScriptedOperator:
    """Synthetic participant: clicks a fixed latency after each GO stimulus,
    with seeded lapses (misses) and false alarms."""
    latency_mean: float = 300.0  # ms
    latency_sd: float = 0.0
    fp_rate: float = 0.0  # probability of a click on a NO-GO trial/phase
    fn_rate: float = 0.0  # probability of missing a GO stimulus
    seed: int = 0

    def clicks_for_simple_run(self, specs) -> list[list[float]]:
        rng = np.random.default_rng(self.seed)
        out = []
        for spec in specs:
            if spec.kind is TrialKind.GO:
                if rng.random() < self.fn_rate:
                    out.append([])
                else:
                    latency = max(VALID_RT_MIN, self.latency_mean
                                  + self.latency_sd * rng.standard_normal())
                    out.append([spec.stimulus_onset + latency])
            else:
                if rng.random() < self.fp_rate:
                    out.append([spec.stimulus_onset + rng.uniform(100.0, 900.0)])
                else:
                    out.append([])
        return out

    def clicks_for_braking_run(self, specs) -> list[list[float]]:
        rng = np.random.default_rng(self.seed)
        out = []
        for spec in specs:
            clicks = []
            if rng.random() < self.fp_rate:
                clicks.append(rng.uniform(200.0, spec.nogo_duration - 200.0))
            if rng.random() >= self.fn_rate:
                latency = max(VALID_RT_MIN, self.latency_mean
                              + self.latency_sd * rng.standard_normal())
                clicks.append(spec.go_onset + latency)
            out.append(sorted(clicks))
        return out


# ---------------------------------------------------------------------------
# run logs (append-only event records for persistence and replay)


def build_simple_run_log(specs, clicks_per_trial, effector: str = "scripted",
                         trial_gap_ms: float = 1500.0) -> list[dict]:
    """Flatten a simple run into an ordered absolute-time event list."""
    events = [{"type": "run_start", "t": 0.0, "task": "simple_rt",
               "effector": effector, "display": DISPLAY_GEOMETRY}]
    t0 = 0.0
    for idx, (spec, clicks) in enumerate(zip(specs, clicks_per_trial)):
        events.append({"type": "trial_start", "t": t0, "index": idx,
                       "kind": spec.kind.value})
        if spec.cue:
            events.append({"type": "nogo_cue", "t": t0 + 200.0, "index": idx})
        # rel carries the exact trial-relative time so replay is bit-exact
        events.append({"type": "stimulus_on", "t": t0 + spec.stimulus_onset,
                       "rel": spec.stimulus_onset, "index": idx})
        events.append({"type": "stimulus_off",
                       "t": t0 + spec.stimulus_onset + spec.stimulus_duration,
                       "rel": spec.stimulus_onset + spec.stimulus_duration,
                       "index": idx})
        for c in clicks:
            events.append({"type": "click", "t": t0 + c, "rel": c, "index": idx})
        t0 += spec.stimulus_onset + spec.stimulus_duration + trial_gap_ms
    events.append({"type": "run_end", "t": t0})
    events.sort(key=lambda e: e["t"])
    return events


def outcomes_from_simple_log(events) -> list[TrialOutcome]:
    """Recompute trial outcomes from a run log (replay path)."""
    trials: dict[int, dict] = {}
    for ev in events:
        idx = ev.get("index")
        if idx is None:
            continue
        slot = trials.setdefault(idx, {"clicks": []})
        if ev["type"] == "trial_start":
            slot["kind"] = TrialKind(ev["kind"])
            slot["start"] = ev["t"]
        elif ev["type"] == "stimulus_on":
            slot["onset"] = ev.get("rel", ev["t"])
        elif ev["type"] == "click":
            slot["clicks"].append(ev.get("rel", ev["t"]))
    outcomes = []
    for idx in sorted(trials):
        slot = trials[idx]
        spec = TrialSpec(slot["kind"], slot["onset"],
                         cue=slot["kind"] is TrialKind.NOGO)
        outcomes.append(label_trial(spec, slot["clicks"]))
    return outcomes
