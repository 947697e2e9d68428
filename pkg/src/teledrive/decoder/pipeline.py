"""Streaming decode pipeline and model persistence.

A fitted decoder maps each broadband bin to smoothed cursor velocity,
integrates it into an overlay position, and runs the click classifier;
models serialize to a versioned JSON document with matrices as nested
arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from teledrive.decoder.classifier import (
    HMMModel,
    LDAModel,
    fit_lda,
    fit_transition,
    hmm_filter_step,
    lda_posterior,
)
from teledrive.decoder.fenet import BroadbandWindow, FENetConfig, fenet_extract, haar_config
from teledrive.decoder.plsr import PLSRModel, plsr_fit
from teledrive.decoder.preprocess import FeatureStats
from teledrive.decoder.synth import SynthConfig, SyntheticSession, smooth_intent_trace

MODEL_VERSION = 1


def exp_smooth(prev: float, x: float, beta: float) -> float:
    """One step of exponential smoothing: beta pulls toward the new value."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must be in [0, 1]")
    return beta * x + (1.0 - beta) * prev


@dataclass(frozen=True)
class DecoderModel:
    fenet: FENetConfig
    stats: FeatureStats
    plsr: PLSRModel
    lda: LDAModel
    hmm: HMMModel
    bin_rate: float = 30.0
    smoothing_beta: float = 0.4


@dataclass
class DecodeOutput:
    vx: float
    vy: float
    x: float
    y: float
    click: bool
    click_prob: float


@dataclass
class StreamingDecoder:
    """Per-session decode state: smoothed velocity, integrated position,
    click belief, and click edge detection."""
    model: DecoderModel
    x: float = 0.5
    y: float = 0.5
    _vx: float = 0.0
    _vy: float = 0.0
    _belief: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    _click_on: bool = False

    def decode_bin(self, window: BroadbandWindow) -> DecodeOutput:
        m = self.model
        raw = fenet_extract(window, m.fenet).reshape(-1)
        z = m.stats.apply(raw)
        vx_pred, vy_pred = m.plsr.predict(z)
        self._vx = exp_smooth(self._vx, float(vx_pred), m.smoothing_beta)
        self._vy = exp_smooth(self._vy, float(vy_pred), m.smoothing_beta)
        dt = 1.0 / m.bin_rate
        self.x = min(1.0, max(0.0, self.x + self._vx * dt))
        self.y = min(1.0, max(0.0, self.y + self._vy * dt))
        prob = lda_posterior(z, m.lda)
        self._belief, click_on = hmm_filter_step(self._belief, prob, m.hmm)
        edge = click_on and not self._click_on
        self._click_on = click_on
        return DecodeOutput(self._vx, self._vy, self.x, self.y, edge, prob)

    @property
    def click_held(self) -> bool:
        return self._click_on


def extract_feature_matrix(windows, cfg: FENetConfig) -> np.ndarray:
    """Stack flattened per-window feature matrices into (n_bins, features)."""
    return np.array([fenet_extract(w, cfg).reshape(-1) for w in windows])


def train_decoder(windows, velocities, click_labels,
                  fenet_cfg: FENetConfig | None = None,
                  n_components: int = 4, bin_rate: float = 30.0,
                  smoothing_beta: float = 0.4) -> DecoderModel:
    """Fit the full pipeline from aligned windows and intent labels."""
    fenet_cfg = fenet_cfg or haar_config()
    raw = extract_feature_matrix(windows, fenet_cfg)
    stats = FeatureStats.fit(raw)
    Z = stats.apply(raw)
    n_components = min(n_components, stats.dim)
    plsr = plsr_fit(Z, np.asarray(velocities, dtype=float), n_components)
    lda = fit_lda(Z, np.asarray(click_labels).astype(bool))
    hmm = fit_transition(np.asarray(click_labels).astype(int))
    return DecoderModel(fenet_cfg, stats, plsr, lda, hmm, bin_rate, smoothing_beta)


@dataclass(frozen=True)
class DecoderRig:
    """A fitted decoder plus the synthetic signal source it was calibrated
    on (same channel mixing and noise level, fresh noise per session)."""
    model: DecoderModel
    synth_cfg: SynthConfig
    noise_std: float


def train_synthetic_decoder(seed: int, snr: float, n_bins: int = 900,
                            channels: int = 16, sample_rate: float = 3000.0,
                            bin_rate: float = 30.0, n_components: int = 4,
                            smoothing_beta: float = 0.4,
                            fenet_cfg: FENetConfig | None = None) -> DecoderRig:
    """Calibration run: generate a training session from a smooth intent
    trace and fit the decoder on it."""
    cfg = SynthConfig(channels=channels, sample_rate=sample_rate,
                      bin_rate=bin_rate, snr=snr, seed=seed)
    intent = smooth_intent_trace(n_bins, seed=seed + 1, bin_rate=bin_rate)
    session = SyntheticSession(intent, cfg)
    windows = [w for w, _ in session.windows()]
    model = train_decoder(windows, intent[:, :2], intent[:, 2] > 0.5,
                          fenet_cfg=fenet_cfg, n_components=n_components,
                          bin_rate=bin_rate, smoothing_beta=smoothing_beta)
    return DecoderRig(model, cfg, session.noise_std)


# ---------------------------------------------------------------------------
# persistence


def _arr(a) -> list:
    return np.asarray(a).tolist()


def save_model(model: DecoderModel, path: str | Path):
    doc = {
        "version": MODEL_VERSION,
        "fenet": {
            "upper_filters": [list(f) for f in model.fenet.upper_filters],
            "lower_filters": [list(f) for f in model.fenet.lower_filters],
            "leaky_slope": model.fenet.leaky_slope,
            "emit_final_lower": model.fenet.emit_final_lower,
        },
        "stats": {
            "mean": _arr(model.stats.mean),
            "std": _arr(model.stats.std),
            "kept": _arr(model.stats.kept),
            "dropped": list(model.stats.dropped),
        },
        "plsr": {
            "n_components": model.plsr.n_components,
            "x_mean": _arr(model.plsr.x_mean),
            "y_mean": _arr(model.plsr.y_mean),
            "x_weights": _arr(model.plsr.x_weights),
            "x_loadings": _arr(model.plsr.x_loadings),
            "y_loadings": _arr(model.plsr.y_loadings),
            "coef": _arr(model.plsr.coef),
        },
        "lda": {
            "mean_off": _arr(model.lda.mean_off),
            "mean_on": _arr(model.lda.mean_on),
            "covariance": _arr(model.lda.covariance),
            "priors": list(model.lda.priors),
            "ridge_eps": model.lda.ridge_eps,
            "w": _arr(model.lda.w),
            "b": model.lda.b,
        },
        "hmm": {"transition": _arr(model.hmm.transition)},
        "bin_rate": model.bin_rate,
        "smoothing_beta": model.smoothing_beta,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path: str | Path) -> DecoderModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    f = doc["fenet"]
    fenet = FENetConfig(
        tuple(tuple(t) for t in f["upper_filters"]),
        tuple(tuple(t) for t in f["lower_filters"]),
        f["leaky_slope"], f["emit_final_lower"])
    s = doc["stats"]
    stats = FeatureStats(np.array(s["mean"]), np.array(s["std"]),
                         np.array(s["kept"], dtype=int), tuple(s["dropped"]))
    p = doc["plsr"]
    plsr = PLSRModel(p["n_components"], np.array(p["x_mean"]), np.array(p["y_mean"]),
                     np.array(p["x_weights"]), np.array(p["x_loadings"]),
                     np.array(p["y_loadings"]), np.array(p["coef"]))
    l = doc["lda"]
    lda = LDAModel(np.array(l["mean_off"]), np.array(l["mean_on"]),
                   np.array(l["covariance"]), tuple(l["priors"]),
                   l["ridge_eps"], np.array(l["w"]), l["b"])
    hmm = HMMModel(np.array(doc["hmm"]["transition"]))
    return DecoderModel(fenet, stats, plsr, lda, hmm,
                        doc["bin_rate"], doc["smoothing_beta"])
