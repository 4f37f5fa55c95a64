"""Synthetic balanced-homodyne data and variance estimation.

Samples are white Gaussian per analysis bin with variance
``cos(theta)**2 * v1 + sin(theta)**2 * v2 + dark`` (vacuum = 1). Randomness
comes from numpy's PCG64 bit generator; every segment gets its own stream
derived from ``(seed, segment index)`` so the output does not depend on
generation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .gaussian import GaussianState

RNG_NAME = "numpy.random.PCG64"


def dark_variance(dark_noise_db: float | None) -> float:
    """Dark-noise variance relative to vacuum; ``None`` means no dark noise."""
    if dark_noise_db is None:
        return 0.0
    if math.isinf(dark_noise_db) and dark_noise_db < 0:
        return 0.0
    if not math.isfinite(dark_noise_db):
        raise ValidationError("dark_noise_db must be finite or -inf")
    return 10.0 ** (dark_noise_db / 10.0)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def quadrature_variance(state: GaussianState, theta) -> np.ndarray:
    v1, v2 = state.unity()
    c = np.cos(theta)
    s = np.sin(theta)
    return c * c * v1 + s * s * v2


@dataclass(frozen=True)
class HomodyneConfig:
    state: GaussianState
    phase_schedule: list  # [(theta, sample_count), ...]
    dark_noise_db: float | None = None
    seed: int = 0
    vacuum_samples: int | None = None

    def __post_init__(self):
        if not self.phase_schedule:
            raise ValidationError("phase_schedule must contain at least one segment")
        sched = []
        for theta, count in self.phase_schedule:
            if int(count) < 2:
                raise ValidationError("each segment needs at least 2 samples")
            if not math.isfinite(theta):
                raise ValidationError("phase angles must be finite")
            sched.append((float(theta), int(count)))
        object.__setattr__(self, "phase_schedule", sched)
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        dark_variance(self.dark_noise_db)
        if self.vacuum_samples is not None and int(self.vacuum_samples) < 2:
            raise ValidationError("vacuum reference needs at least 2 samples")

    @property
    def reference_length(self) -> int:
        if self.vacuum_samples is not None:
            return int(self.vacuum_samples)
        return max(c for _, c in self.phase_schedule)


@dataclass(frozen=True)
class HomodyneTrace:
    segments: list  # [(theta, samples), ...]
    vacuum_reference: np.ndarray
    seed_used: int
    rng: str = RNG_NAME
    dark_noise_db: float | None = None
    metadata: dict = field(default_factory=dict)


def simulate(config: HomodyneConfig) -> HomodyneTrace:
    dark = dark_variance(config.dark_noise_db)
    segments = []
    for i, (theta, count) in enumerate(config.phase_schedule):
        sd = math.sqrt(float(quadrature_variance(config.state, theta)) + dark)
        segments.append((theta, sd * _stream(config.seed, 0, i).standard_normal(count)))
    ref = math.sqrt(1.0 + dark) * _stream(config.seed, 1).standard_normal(config.reference_length)
    return HomodyneTrace(segments, ref, int(config.seed), RNG_NAME, config.dark_noise_db)


@dataclass(frozen=True)
class VarianceEstimate:
    value: float  # vacuum-normalised
    stderr: float

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.value)

    @property
    def db_stderr(self) -> float:
        return 10.0 / math.log(10.0) * self.stderr / self.value


def estimate_variance(samples, vacuum_reference, dark_noise_db: float | None = None
                      ) -> VarianceEstimate:
    """Signal variance over vacuum-reference variance, dark noise optionally removed.

    Standard error combines ``var(s^2) = 2 sigma^4 / (n - 1)`` of both series.
    """
    x = np.asarray(samples, dtype=float)
    y = np.asarray(vacuum_reference, dtype=float)
    if x.size < 2 or y.size < 2:
        raise ValidationError("need at least 2 samples in each series")
    sx = float(np.var(x, ddof=1))
    sy = float(np.var(y, ddof=1))
    dark = dark_variance(dark_noise_db)
    num = sx - dark
    den = sy - dark
    if den <= 0:
        raise ValidationError("vacuum reference variance does not exceed dark noise")
    se_x = sx * math.sqrt(2.0 / (x.size - 1))
    se_y = sy * math.sqrt(2.0 / (y.size - 1))
    value = num / den
    stderr = math.hypot(se_x / den, value * se_y / den)
    return VarianceEstimate(value, stderr)


def sweep_trace(state: GaussianState, rotation_rate: float, total_samples: int, window: int,
                seed: int = 0, dark_noise_db: float | None = None, theta0: float = 0.0,
                vacuum_samples: int | None = None, max_phase_change: float = 0.05
                ) -> list[tuple[float, VarianceEstimate]]:
    """Estimate the variance along a slow linear phase ramp, window by window.

    Sample ``k`` is taken at ``theta0 + rotation_rate * k``; windows do not
    overlap and any tail shorter than ``window`` is dropped.
    """
    if window < 16:
        raise ValidationError("window must hold at least 16 samples")
    if abs(rotation_rate) * window >= max_phase_change:
        raise ValidationError(
            f"phase changes by {abs(rotation_rate) * window:.3g} rad within a window "
            f"(limit {max_phase_change})"
        )
    if total_samples < window:
        raise ValidationError("total_samples shorter than one window")
    dark = dark_variance(dark_noise_db)
    theta = theta0 + rotation_rate * np.arange(total_samples)
    sd = np.sqrt(quadrature_variance(state, theta) + dark)
    samples = sd * _stream(seed, 0, 0).standard_normal(total_samples)
    ref = math.sqrt(1.0 + dark) * _stream(seed, 1).standard_normal(
        vacuum_samples if vacuum_samples is not None else total_samples)
    out = []
    for start in range(0, total_samples - window + 1, window):
        chunk = samples[start:start + window]
        centre = theta0 + rotation_rate * (start + 0.5 * (window - 1))
        out.append((float(centre), estimate_variance(chunk, ref, dark_noise_db)))
    return out
