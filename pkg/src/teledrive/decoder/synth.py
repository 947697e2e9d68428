"""Synthetic broadband generator standing in for implanted recordings.

Each channel carries a fixed random linear mixture of the intended
(vx, vy, click) trace, held constant across the samples of a bin, plus
white Gaussian noise scaled to a target signal-to-noise power ratio.
Everything is deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from teledrive.decoder.fenet import BroadbandWindow


@dataclass(frozen=True)
class SynthConfig:
    """The seed fixes the channel mixing (one synthetic 'participant');
    per-session noise uses its own stream so calibration and live runs share
    the mixing but not the noise."""
    channels: int = 16
    sample_rate: float = 3000.0
    bin_rate: float = 30.0
    snr: float = 10.0  # signal power / noise power; inf = noiseless
    seed: int = 0
    mix_scale: float = 1.0

    def __post_init__(self):
        if self.channels < 3:
            raise ValueError("need at least 3 channels to mix 3 intent axes")
        if self.sample_rate <= 0 or self.bin_rate <= 0:
            raise ValueError("rates must be positive")
        if self.snr <= 0:
            raise ValueError("snr must be positive (use math.inf for noiseless)")

    @property
    def samples_per_bin(self) -> int:
        return max(1, int(round(self.sample_rate / self.bin_rate)))


def mixing_matrix(cfg: SynthConfig) -> np.ndarray:
    """Fixed (channels x 3) intent-to-channel mixture for this seed."""
    rng = np.random.default_rng(cfg.seed)
    return rng.standard_normal((cfg.channels, 3)) * cfg.mix_scale


class SyntheticSession:
    """Streams one broadband window per intent bin.

    intent: array (n_bins, 3) of (vx, vy, click) rows; velocities in
    normalized overlay units/s, click in {0, 1}.
    """

    def __init__(self, intent: np.ndarray, cfg: SynthConfig,
                 noise_seed: int | None = None):
        intent = np.asarray(intent, dtype=float)
        if intent.ndim != 2 or intent.shape[1] != 3:
            raise ValueError("intent must be (n_bins, 3)")
        self.intent = intent
        self.cfg = cfg
        self.mixing = mixing_matrix(cfg)
        # per-bin, per-channel signal amplitude
        self.amplitudes = intent @ self.mixing.T
        signal_power = float(np.mean(self.amplitudes ** 2))
        if math.isinf(cfg.snr):
            self.noise_std = 0.0
        else:
            self.noise_std = math.sqrt(max(signal_power, 1e-30) / cfg.snr)
        self._rng = np.random.default_rng(cfg.seed + 1 if noise_seed is None
                                          else noise_seed)

    def __len__(self) -> int:
        return len(self.intent)

    def windows(self):
        """Yield (BroadbandWindow, intent_row) pairs in bin order."""
        n_samples = self.cfg.samples_per_bin
        for i in range(len(self.intent)):
            data = np.repeat(self.amplitudes[i][:, None], n_samples, axis=1)
            if self.noise_std > 0.0:
                data = data + self.noise_std * self._rng.standard_normal(data.shape)
            yield BroadbandWindow(data, self.cfg.sample_rate), self.intent[i]


class LiveSynth:
    """Closed-loop variant of SyntheticSession: intent rows arrive one at a
    time, so the noise level is supplied (from the calibration session)
    instead of being derived from a full trace."""

    def __init__(self, cfg: SynthConfig, noise_std: float, noise_seed: int):
        self.cfg = cfg
        self.mixing = mixing_matrix(cfg)
        self.noise_std = noise_std
        self._rng = np.random.default_rng(noise_seed)

    def gen_bin(self, intent_row) -> BroadbandWindow:
        intent_row = np.asarray(intent_row, dtype=float)
        if intent_row.shape != (3,):
            raise ValueError("intent row must be (vx, vy, click)")
        amplitude = self.mixing @ intent_row
        data = np.repeat(amplitude[:, None], self.cfg.samples_per_bin, axis=1)
        if self.noise_std > 0.0:
            data = data + self.noise_std * self._rng.standard_normal(data.shape)
        return BroadbandWindow(data, self.cfg.sample_rate)


def smooth_intent_trace(n_bins: int, seed: int, bin_rate: float = 30.0,
                        click_fraction: float = 0.15,
                        max_speed: float = 0.6) -> np.ndarray:
    """Deterministic calibration trace: low-pass-filtered random velocities
    plus interleaved click blocks, suitable for fitting the decode models."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n_bins, 2))
    # single-pole smoothing for plausible cursor kinematics
    vel = np.empty_like(raw)
    state = np.zeros(2)
    for i in range(n_bins):
        state = 0.92 * state + 0.08 * raw[i]
        vel[i] = state
    peak = np.abs(vel).max()
    if peak > 0:
        vel *= max_speed / peak

    clicks = np.zeros(n_bins)
    block = max(2, int(round(bin_rate / 3)))  # ~1/3 s click bursts
    i = 0
    while i < n_bins:
        if rng.random() < click_fraction:
            clicks[i:i + block] = 1.0
            i += block * 3  # refractory gap keeps ON/OFF segments distinct
        else:
            i += block
    return np.column_stack([vel, clicks])
