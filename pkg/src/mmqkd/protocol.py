"""Assembly of multimode entanglement-based protocol states."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .gaussian_core import partial_trace, tensor, tmsv
from .network import (
    ChannelSpec,
    DetectionWeights,
    apply_channel,
    apply_lossy_channel_with_environment,
    apply_loc,
)

TRUST_LEVELS = ("trusted", "untrusted")
ATTACKS = ("individual", "collective")


@dataclass(frozen=True)
class SourceSpec:
    """Per-mode variances of independent twin-beam pairs; 1 means an empty mode."""

    variances: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.variances)
        object.__setattr__(self, "variances", v)
        if not v:
            raise ValueError("source needs at least one mode")
        if any(not x >= 1 for x in v):
            raise ValueError(f"unphysical variance in source: {v}")

    def __len__(self) -> int:
        return len(self.variances)


@dataclass(frozen=True)
class Scenario:
    source: SourceSpec
    alice_weights: DetectionWeights
    bob_weights: DetectionWeights
    channel: ChannelSpec
    trust: str = "untrusted"
    attack: str = "collective"
    beta: float = 1.0

    def __post_init__(self):
        n = len(self.source)
        if len(self.alice_weights) != n or len(self.bob_weights) != n:
            raise ValueError(
                f"weight lengths ({len(self.alice_weights)}, {len(self.bob_weights)}) "
                f"do not match the {n} source modes"
            )
        if self.trust not in TRUST_LEVELS:
            raise ValueError(f"trust must be one of {TRUST_LEVELS}, got {self.trust!r}")
        if self.attack not in ATTACKS:
            raise ValueError(f"attack must be one of {ATTACKS}, got {self.attack!r}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.attack == "individual" and self.channel.eps != 0:
            raise ValueError("individual-attack pathway requires pure loss (eps = 0)")

    @classmethod
    def build(
        cls,
        variances: Sequence[float],
        weights: Sequence[float] | DetectionWeights | None = None,
        T: float = 1.0,
        eps: float = 0.0,
        *,
        trust: str = "untrusted",
        attack: str = "collective",
        beta: float = 1.0,
        bob_weights: Sequence[float] | DetectionWeights | None = None,
        squared: bool = False,
    ) -> "Scenario":
        """Convenience constructor from plain numbers.

        ``weights`` are raw gains (normalized here) or, with ``squared=True``,
        squared proportions. ``None`` means balanced detection. Bob uses
        Alice's weights unless ``bob_weights`` is given.
        """
        source = SourceSpec(tuple(variances))
        alice = _as_weights(weights, len(source), squared)
        bob = alice if bob_weights is None else _as_weights(bob_weights, len(source), squared)
        return cls(source, alice, bob, ChannelSpec(T, eps), trust, attack, beta)

    @property
    def n_modes(self) -> int:
        return len(self.source)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "variances": list(self.source.variances),
            "alice_weights": list(self.alice_weights.weights),
            "bob_weights": list(self.bob_weights.weights),
            "T": self.channel.T,
            "eps": self.channel.eps,
            "trust": self.trust,
            "attack": self.attack,
            "beta": self.beta,
        }


def _as_weights(w, n: int, squared: bool) -> DetectionWeights:
    if w is None:
        return DetectionWeights.balanced(n)
    if isinstance(w, DetectionWeights):
        return w
    return DetectionWeights.from_squared(w) if squared else DetectionWeights.from_gains(w)


@dataclass(frozen=True)
class AssembledState:
    """Full protocol state with mode bookkeeping.

    Alice's modes come first (``0..N-1``), then Bob's (``N..2N-1``), then the
    channel environment when it is modeled explicitly.
    """

    gamma: np.ndarray
    measured: tuple[int, int]
    aux_alice: tuple[int, ...]
    aux_bob: tuple[int, ...]
    env: tuple[int, ...] = field(default=())

    @property
    def alice(self) -> int:
        return self.measured[0]

    @property
    def bob(self) -> int:
        return self.measured[1]

    @property
    def trusted_modes(self) -> tuple[int, ...]:
        """All modes held inside the trusted stations, measured outputs first."""
        return self.measured + self.aux_alice + self.aux_bob


def source_state(source: SourceSpec) -> np.ndarray:
    """Product of twin beams ordered ``A_1..A_N, B_1..B_N``."""
    n = len(source)
    interleaved = tensor(*(tmsv(v) for v in source.variances))
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    return partial_trace(interleaved, order)


def assemble(scenario: Scenario, with_environment: bool = False) -> AssembledState:
    """Source, channel on Bob's beams, then each side's LOC."""
    n = scenario.n_modes
    alice = list(range(n))
    bob = list(range(n, 2 * n))
    gamma = source_state(scenario.source)
    env: list[int] = []
    if with_environment:
        gamma, env = apply_lossy_channel_with_environment(gamma, bob, scenario.channel.T, scenario.channel.eps)
    else:
        gamma = apply_channel(gamma, bob, scenario.channel)
    gamma = apply_loc(gamma, alice, scenario.alice_weights)
    gamma = apply_loc(gamma, bob, scenario.bob_weights)
    return AssembledState(
        gamma=gamma,
        measured=(0, n),
        aux_alice=tuple(alice[1:]),
        aux_bob=tuple(bob[1:]),
        env=tuple(env),
    )


def measured_pair(state: AssembledState) -> np.ndarray:
    return partial_trace(state.gamma, state.measured)


def ignorant_matrix(scenario: Scenario) -> np.ndarray:
    """Two-mode matrix seen by parties unaware of the mode structure.

    The weighted average of the per-mode post-channel twin-beam matrices. With
    distinct Alice and Bob weights the cross term carries ``la_i * lb_i``.
    """
    v = np.asarray(scenario.source.variances)
    c = np.sqrt(v**2 - 1)
    T, eps = scenario.channel.T, scenario.channel.eps
    la2 = scenario.alice_weights.squared
    lb2 = scenario.bob_weights.squared
    lab = np.asarray(scenario.alice_weights.weights) * np.asarray(scenario.bob_weights.weights)
    va = float(la2 @ v)
    vb = float(lb2 @ (T * (v + eps) + 1 - T))
    cab = float(np.sqrt(T) * (lab @ c))
    sz = np.diag([1.0, -1.0])
    return np.block([[va * np.eye(2), cab * sz], [cab * sz, vb * np.eye(2)]])
