"""Passive linear optics and the lossy/noisy channel acting on covariance matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._tolerances import TOL
from .gaussian_core import _check_modes, n_modes, tensor, vacuum, validate_covariance


@dataclass(frozen=True)
class DetectionWeights:
    """Normalized mode weights of a multimode homodyne detector.

    Construct from raw gains with :meth:`from_gains` or from squared
    proportions with :meth:`from_squared`; the plain constructor expects
    weights already normalized to unit sum of squares.
    """

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ValueError("detection weights must not be empty")
        if any(v < 0 or v > 1 for v in w):
            raise ValueError(f"detection weights must lie in [0, 1], got {w}")
        if not any(v > 0 for v in w):
            raise ValueError("at least one detection weight must be positive")
        if abs(sum(v * v for v in w) - 1.0) > TOL.weights:
            raise ValueError(f"squared detection weights must sum to 1, got {sum(v * v for v in w)!r}")

    @classmethod
    def from_gains(cls, gains: Sequence[float]) -> "DetectionWeights":
        g = np.asarray(gains, dtype=float)
        if g.size == 0 or np.any(g < 0) or not np.any(g > 0):
            raise ValueError(f"gains must be nonnegative with at least one positive entry, got {list(gains)}")
        return cls(tuple(g / np.sqrt(np.sum(g**2))))

    @classmethod
    def from_squared(cls, squared: Sequence[float]) -> "DetectionWeights":
        s = np.asarray(squared, dtype=float)
        if s.size == 0 or np.any(s < 0):
            raise ValueError(f"squared weights must be nonnegative, got {list(squared)}")
        return cls.from_gains(np.sqrt(s))

    @classmethod
    def balanced(cls, n: int) -> "DetectionWeights":
        return cls.from_gains(np.ones(n))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def squared(self) -> np.ndarray:
        return np.asarray(self.weights) ** 2


@dataclass(frozen=True)
class ChannelSpec:
    """Mode-insensitive channel: transmittance and input-referred excess noise (SNU)."""

    T: float
    eps: float = 0.0

    def __post_init__(self):
        if not 0 < self.T <= 1:
            raise ValueError(f"transmittance must lie in (0, 1], got {self.T}")
        if self.eps < 0:
            raise ValueError(f"excess noise must be nonnegative, got {self.eps}")


@dataclass(frozen=True)
class BeamsplitterStep:
    i: int
    j: int
    t: float = field(default=1.0)


def beamsplitter_matrix(total_modes: int, i: int, j: int, t: float) -> np.ndarray:
    """Symplectic matrix of a beamsplitter coupling modes ``i`` and ``j``.

    ``x_i -> sqrt(t) x_i + sqrt(1-t) x_j`` and ``x_j -> -sqrt(1-t) x_i + sqrt(t) x_j``,
    identically for the p quadratures.
    """
    if i == j:
        raise ValueError("beamsplitter needs two distinct modes")
    _check_modes([i, j], total_modes)
    if not 0 <= t <= 1:
        raise ValueError(f"beamsplitter transmittance must lie in [0, 1], got {t}")
    a, b = np.sqrt(t), np.sqrt(1 - t)
    s = np.eye(2 * total_modes)
    for q in (0, 1):
        ii, jj = 2 * i + q, 2 * j + q
        s[ii, ii], s[ii, jj] = a, b
        s[jj, ii], s[jj, jj] = -b, a
    return s


def apply_beamsplitter(gamma, i: int, j: int, t: float) -> np.ndarray:
    """Congruence ``S gamma S^T`` for a single beamsplitter.

    Only the four affected rows and columns are touched, which keeps long
    mode-coupling chains on large matrices linear in the mode count.
    """
    gamma = validate_covariance(gamma)
    m = n_modes(gamma)
    if i == j:
        raise ValueError("beamsplitter needs two distinct modes")
    _check_modes([i, j], m)
    if not 0 <= t <= 1:
        raise ValueError(f"beamsplitter transmittance must lie in [0, 1], got {t}")
    a, b = np.sqrt(t), np.sqrt(1 - t)
    rot = np.array([[a, b], [-b, a]])
    out = gamma.copy()
    for q in (0, 1):
        rows = [2 * i + q, 2 * j + q]
        out[rows, :] = rot @ out[rows, :]
        out[:, rows] = out[:, rows] @ rot.T
    return out


def synthesize_loc(weights: DetectionWeights) -> list[BeamsplitterStep]:
    """Beamsplitter chain realizing the weighted joint quadrature on mode 0.

    Step ``k`` couples the accumulator (mode 0) with mode ``k`` at
    ``t = S_k / S_{k+1}``, ``S_k`` being the running sum of squared weights.
    Zero-weight modes give ``t = 1`` and stay in the chain as no-ops.
    """
    sq = weights.squared
    steps = []
    running = sq[0]
    for k in range(1, len(sq)):
        nxt = running + sq[k]
        t = 1.0 if nxt == 0 else running / nxt
        steps.append(BeamsplitterStep(0, k, min(1.0, t)))
        running = nxt
    return steps


def apply_loc(gamma, modes: Sequence[int], weights: DetectionWeights) -> np.ndarray:
    """Apply the LOC of ``weights`` to ``modes`` (``modes[0]`` becomes the measured output)."""
    modes = list(modes)
    if len(modes) != len(weights):
        raise ValueError(f"{len(weights)} weights given for {len(modes)} modes")
    out = validate_covariance(gamma)
    for step in synthesize_loc(weights):
        out = apply_beamsplitter(out, modes[step.i], modes[step.j], step.t)
    return out


def apply_channel(gamma, modes: Sequence[int], channel: ChannelSpec) -> np.ndarray:
    """Apply the same lossy, noisy channel independently to each listed mode.

    Diagonal blocks become ``T (block + eps I) + (1 - T) I``; correlations
    picked up ``sqrt(T)`` per listed mode they involve.
    """
    gamma = validate_covariance(gamma)
    modes = _check_modes(modes, n_modes(gamma))
    scale = np.ones(gamma.shape[0])
    idx = [2 * m + q for m in modes for q in (0, 1)]
    scale[idx] = np.sqrt(channel.T)
    out = gamma * np.outer(scale, scale)
    out[idx, idx] += channel.T * channel.eps + (1 - channel.T)
    return out


def apply_lossy_channel_with_environment(gamma, modes: Sequence[int], T: float, eps: float = 0.0):
    """Pure-loss channel with the environment kept explicitly.

    One vacuum mode per listed mode is appended and mixed with it on a
    beamsplitter of transmittance ``T``. Returns the enlarged matrix and the
    indices of the environment outputs, in the order of ``modes``.
    """
    if eps != 0:
        raise ValueError("individual-attack pathway requires pure loss")
    ChannelSpec(T, 0.0)
    gamma = validate_covariance(gamma)
    m = n_modes(gamma)
    modes = _check_modes(modes, m)
    out = tensor(gamma, vacuum(len(modes)))
    env = list(range(m, m + len(modes)))
    for signal, e in zip(modes, env):
        out = apply_beamsplitter(out, signal, e, T)
    return out, env
