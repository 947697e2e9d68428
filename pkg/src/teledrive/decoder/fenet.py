"""Cascaded dual-branch 1-D convolutional feature extraction.

Each stage runs two temporal filters over its input: the upper branch is
downsampled by 2, passed through a leaky ReLU, and average-pooled to a
single scalar feature; the lower branch (no downsampling) feeds the next
stage. After the last stage the final lower output can optionally be
pooled into one extra feature, giving M features per channel from M-1
stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BroadbandWindow:
    """One bin of multi-channel broadband samples (channels x samples)."""
    data: np.ndarray
    sample_rate: float = 30_000.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2:
            raise ValueError("window data must be 2-D (channels x samples)")
        if not np.all(np.isfinite(arr)):
            raise ValueError("window contains non-finite samples")
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples_per_channel(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class FENetConfig:
    upper_filters: tuple[tuple[float, ...], ...]
    lower_filters: tuple[tuple[float, ...], ...]
    leaky_slope: float = 0.01
    emit_final_lower: bool = True

    def __post_init__(self):
        up = tuple(tuple(float(c) for c in f) for f in self.upper_filters)
        low = tuple(tuple(float(c) for c in f) for f in self.lower_filters)
        object.__setattr__(self, "upper_filters", up)
        object.__setattr__(self, "lower_filters", low)
        if len(up) != len(low) or not up:
            raise ValueError("need one (upper, lower) filter pair per stage")
        if any(len(f) < 1 for f in up + low):
            raise ValueError("filters must have at least one tap")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError("leaky_slope must be in (0, 1)")

    @property
    def num_modules(self) -> int:
        return len(self.upper_filters)

    @property
    def features_per_channel(self) -> int:
        return self.num_modules + (1 if self.emit_final_lower else 0)

    def min_window_length(self) -> int:
        """Smallest input length for which every branch yields >= 1 sample."""
        needed = 1 if self.emit_final_lower else 0
        for up, low in zip(reversed(self.upper_filters), reversed(self.lower_filters)):
            if needed >= 1:
                needed = max(len(up), needed + len(low) - 1, 1)
            else:
                needed = len(up)
        return needed


def haar_config(num_modules: int = 7, leaky_slope: float = 0.01,
                emit_final_lower: bool = True) -> FENetConfig:
    """Default filter bank: two-tap quadrature pair per stage (the lower
    branch smooths, the upper extracts local differences), echoing a
    wavelet-style cascade."""
    s = 1.0 / np.sqrt(2.0)
    upper = tuple((s, -s) for _ in range(num_modules))
    lower = tuple((s, s) for _ in range(num_modules))
    return FENetConfig(upper, lower, leaky_slope, emit_final_lower)


def _conv_valid(x: np.ndarray, taps: tuple[float, ...]) -> np.ndarray:
    """Sliding dot product (channels x n) -> (channels x n-k+1)."""
    n = x.shape[1]
    k = len(taps)
    out = taps[0] * x[:, : n - k + 1]
    for i in range(1, k):
        out = out + taps[i] * x[:, i : n - k + 1 + i]
    return out


def fenet_extract(window: BroadbandWindow, cfg: FENetConfig) -> np.ndarray:
    """Extract the per-channel feature matrix (channels x features)."""
    min_len = cfg.min_window_length()
    if window.samples_per_channel < min_len:
        raise ValueError(
            f"window too short: need at least {min_len} samples per channel, "
            f"got {window.samples_per_channel}")
    x = window.data
    features = np.empty((window.channels, cfg.features_per_channel))
    for i, (up, low) in enumerate(zip(cfg.upper_filters, cfg.lower_filters)):
        branch = _conv_valid(x, up)[:, ::2]
        branch = np.where(branch > 0.0, branch, cfg.leaky_slope * branch)
        features[:, i] = branch.mean(axis=1)
        last = i == cfg.num_modules - 1
        if not last or cfg.emit_final_lower:
            x = _conv_valid(x, low)
    if cfg.emit_final_lower:
        features[:, -1] = x.mean(axis=1)
    return features
