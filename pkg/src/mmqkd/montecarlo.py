"""Key-rate series for sources whose per-mode variances fluctuate run to run."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .network import DetectionWeights
from .protocol import Scenario, SourceSpec
from .security import KeyRateReport, key_rate

GENERATOR = "numpy.random.PCG64 seeded by SeedSequence([seed, run_index])"
VACUUM_FLOOR = 1.0


@dataclass(frozen=True)
class FluctuationSpec:
    """Normal law for the per-mode variance draws.

    ``spread`` is the variance of the law unless ``spread_is_std`` is set.
    """

    mean: float = 3.0
    spread: float = 0.75
    n_modes: int = 5
    n_runs: int = 1000
    seed: int = 0
    spread_is_std: bool = False

    def __post_init__(self):
        if not self.mean > 1:
            raise ValueError(f"mean variance must exceed 1, got {self.mean}")
        if self.spread < 0:
            raise ValueError(f"spread must be nonnegative, got {self.spread}")
        if self.n_modes < 1 or self.n_runs < 1:
            raise ValueError("n_modes and n_runs must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def std(self) -> float:
        return float(self.spread if self.spread_is_std else np.sqrt(self.spread))


def draws_hash(draws: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(draws, dtype="<f8").tobytes()).hexdigest()[:16]


def draw_variances(spec: FluctuationSpec, run_index: int) -> tuple[np.ndarray, int]:
    """Variances for one run plus the number of draws lifted to the vacuum floor."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, run_index]))
    raw = rng.normal(spec.mean, spec.std, spec.n_modes)
    clamped = int(np.sum(raw < VACUUM_FLOOR))
    return np.maximum(raw, VACUUM_FLOOR), clamped


@dataclass
class MonteCarloSeries:
    spec: FluctuationSpec
    reports: list[KeyRateReport] = field(default_factory=list)
    hashes: list[str] = field(default_factory=list)
    clamped_draws: int = 0

    @property
    def key_rates(self) -> np.ndarray:
        return np.array([r.key_rate for r in self.reports])

    @property
    def clamp_fraction(self) -> float:
        return self.clamped_draws / (self.spec.n_runs * self.spec.n_modes)

    def metadata(self) -> dict:
        return {
            "generator": GENERATOR,
            "seed": self.spec.seed,
            "mean": self.spec.mean,
            "spread": self.spec.spread,
            "spread_is_std": self.spec.spread_is_std,
            "n_modes": self.spec.n_modes,
            "n_runs": self.spec.n_runs,
            "clamped_draws": self.clamped_draws,
            "clamp_fraction": self.clamp_fraction,
        }


def run_fluctuating(spec: FluctuationSpec, base: Scenario) -> MonteCarloSeries:
    """One key rate per run with balanced detection over ``spec.n_modes`` modes.

    Only the channel, trust model, attack and ``beta`` of ``base`` are used.
    Each run draws from its own generator keyed by ``(seed, run_index)``, so
    any subset of runs can be recomputed independently.
    """
    weights = DetectionWeights.balanced(spec.n_modes)
    series = MonteCarloSeries(spec)
    template = replace(
        base,
        source=SourceSpec((spec.mean,) * spec.n_modes),
        alice_weights=weights,
        bob_weights=weights,
    )
    for run in range(spec.n_runs):
        v, clamped = draw_variances(spec, run)
        series.clamped_draws += clamped
        series.reports.append(key_rate(replace(template, source=SourceSpec(tuple(v)))))
        series.hashes.append(draws_hash(v))
    return series


def summarize(series) -> dict:
    """Mean, sample std, minimum and secure fraction of a key-rate series."""
    if isinstance(series, MonteCarloSeries):
        k = series.key_rates
    else:
        k = np.array([getattr(r, "key_rate", r) for r in series], dtype=float)
    if k.size == 0:
        raise ValueError("cannot summarize an empty series")
    return {
        "mean": float(k.mean()),
        "std": float(k.std(ddof=1)) if k.size > 1 else 0.0,
        "min": float(k.min()),
        "fraction_secure": float(np.mean(k > 0)),
    }
