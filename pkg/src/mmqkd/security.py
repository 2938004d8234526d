"""Mutual information, eavesdropper bounds and key rates.

Reverse reconciliation throughout: every eavesdropper bound refers to Bob's
data. Individual attacks use the Shannon bound on Eve's homodyne data;
collective attacks use the Holevo quantity.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .gaussian_core import (
    bosonic_entropy,
    condition_on_homodyne,
    partial_trace,
    von_neumann_entropy,
)
from .network import ChannelSpec
from .protocol import AssembledState, Scenario, SourceSpec, assemble, ignorant_matrix

CONTOUR_BRACKET = (1.0, 1e3)
CONTOUR_XTOL = 1e-10


@dataclass(frozen=True)
class KeyRateReport:
    i_ab: float
    eve_bound: float
    eve_bound_kind: str
    beta: float
    key_rate: float
    scenario_echo: Scenario

    def to_dict(self) -> dict:
        return {
            "i_ab": self.i_ab,
            "eve_bound": self.eve_bound,
            "eve_bound_kind": self.eve_bound_kind,
            "beta": self.beta,
            "key_rate": self.key_rate,
            "scenario": self.scenario_echo.to_dict(),
        }


def mutual_information(gamma_ab, quadrature: str = "x") -> float:
    """Shannon information between the two homodyne outcomes of a two-mode state."""
    g = np.asarray(gamma_ab, dtype=float)
    q = 0 if quadrature == "x" else 1
    va, vb, c = g[q, q], g[2 + q, 2 + q], g[q, 2 + q]
    if vb <= 0:
        raise ValueError("Bob's variance must be positive")
    return 0.5 * math.log2(va / (va - c * c / vb))


def individual_eve_information(state: AssembledState, trust: str) -> float:
    """Shannon bound ``I_BE`` for an eavesdropper homodyning all her modes.

    Eve always holds the channel environment; in the untrusted case she also
    holds every auxiliary LOC output on both sides. ``state`` must carry the
    explicit environment (pure-loss channel).
    """
    if not state.env:
        raise ValueError("individual-attack bound needs the channel environment; assemble with_environment=True")
    eve = list(state.env)
    if trust == "untrusted":
        eve += list(state.aux_alice) + list(state.aux_bob)
    elif trust != "trusted":
        raise ValueError(f"unknown trust level {trust!r}")
    g = partial_trace(state.gamma, [state.bob] + eve)
    vb = g[0, 0]
    vb_given_e = condition_on_homodyne(g, range(1, len(eve) + 1), "x")[0, 0]
    return 0.5 * math.log2(vb / vb_given_e)


def holevo_from_pair(gamma_ab) -> float:
    """Holevo bound when Eve purifies the measured two-mode state (Bob is mode 1)."""
    return von_neumann_entropy(gamma_ab) - von_neumann_entropy(condition_on_homodyne(gamma_ab, [1], "x"))


def holevo_bound(state: AssembledState, trust: str) -> float:
    """Holevo bound on Eve's information about Bob's measured output."""
    if trust == "untrusted":
        return holevo_from_pair(partial_trace(state.gamma, state.measured))
    if trust != "trusted":
        raise ValueError(f"unknown trust level {trust!r}")
    g = partial_trace(state.gamma, state.trusted_modes)
    return von_neumann_entropy(g) - von_neumann_entropy(condition_on_homodyne(g, [1], "x"))


def key_rate(scenario: Scenario) -> KeyRateReport:
    """Key-rate lower bound for the scenario's attack and trust model.

    The untrusted collective case only needs the averaged two-mode matrix,
    which equals the reduction of the full assembled state, so the
    assembly is skipped there.
    """
    if scenario.attack == "individual":
        state = assemble(scenario, with_environment=True)
        i_ab = mutual_information(partial_trace(state.gamma, state.measured))
        eve = individual_eve_information(state, scenario.trust)
        return KeyRateReport(i_ab, eve, "shannon_individual", scenario.beta, i_ab - eve, scenario)
    if scenario.trust == "untrusted":
        pair = ignorant_matrix(scenario)
        i_ab = mutual_information(pair)
        eve = holevo_from_pair(pair)
    else:
        state = assemble(scenario)
        i_ab = mutual_information(partial_trace(state.gamma, state.measured))
        eve = holevo_bound(state, "trusted")
    return KeyRateReport(i_ab, eve, "holevo_collective", scenario.beta, scenario.beta * i_ab - eve, scenario)


# --- closed forms ---------------------------------------------------------


def _iab_vacuum_modes(N, V, T):
    return 0.5 * math.log2((N + T * (V - 1)) / (T * (N - 2) * (V - 1) / (N + V - 1) + N))


def _ibe_vacuum_untrusted(N, V, T):
    return 0.5 * math.log2((N + T * (V - 1)) * (T * (N - 2) * (V - 1) / (N**2 * (N + V - 1)) + 1 / N))


def _iab_two_mode(V1, V2, l1_sq, T):
    c1, c2 = math.sqrt(V1**2 - 1), math.sqrt(V2**2 - 1)
    a = l1_sq * (V1 - V2) + V2
    corr = l1_sq * c1 + (1 - l1_sq) * c2
    return 0.5 * math.log2(1 / (1 - T * corr**2 / (a * (1 + T * (a - 1)))))


def _vbe_two_mode_untrusted(V1, V2, l1_sq, T):
    c1, c2 = math.sqrt(V1**2 - 1), math.sqrt(V2**2 - 1)
    inner = 2 + V1 - V2 - 2 * V1 * V2 + 2 * c1 * c2 - 2 * l1_sq * (1 - V1 * V2 + c1 * c2)
    num = T * (V2 - 1 + l1_sq * inner)
    return 1 / (1 - num / (l1_sq * V1 + (1 - l1_sq) * V2))


def _ibe_two_mode_untrusted(V1, V2, l1_sq, T):
    vb = T * (l1_sq * V1 + (1 - l1_sq) * V2) + 1 - T
    return 0.5 * math.log2(vb / _vbe_two_mode_untrusted(V1, V2, l1_sq, T))


def _ibe_vacuum_trusted(N, V, T):
    return 0.5 * math.log2((N + T * (V - 1)) * (T * (V - 1) - V) / (T * (N - 1) * (V - 1) - N * V))


def _k_two_mode_asymptotic(T):
    return 0.5 * math.log2((1 - T / 2) / (1 - T))


def _k_single_mode_asymptotic(T):
    return math.log2(1 / (1 - T))


def _iab_perfect_channel_vacuum(V):
    return 0.5 * math.log2((V + 1) / 2)


def _holevo_perfect_channel_vacuum(V):
    nu = math.sqrt((V + 1) / 2)
    return bosonic_entropy((nu - 1) / 2)


ANALYTIC_FORMULAS: dict[str, Callable[..., float]] = {
    "iab_vacuum_modes": _iab_vacuum_modes,
    "ibe_vacuum_untrusted": _ibe_vacuum_untrusted,
    "iab_two_mode": _iab_two_mode,
    "vbe_two_mode_untrusted": _vbe_two_mode_untrusted,
    "ibe_two_mode_untrusted": _ibe_two_mode_untrusted,
    "ibe_vacuum_trusted": _ibe_vacuum_trusted,
    "k_two_mode_asymptotic": _k_two_mode_asymptotic,
    "k_single_mode_asymptotic": _k_single_mode_asymptotic,
    "iab_perfect_channel_vacuum": _iab_perfect_channel_vacuum,
    "holevo_perfect_channel_vacuum": _holevo_perfect_channel_vacuum,
}


def _check_domain(params: dict) -> None:
    for name, val in params.items():
        if name == "N" and (val < 1 or int(val) != val):
            raise ValueError(f"N must be a positive integer, got {val}")
        if name.startswith("V") and val < 1:
            raise ValueError(f"{name} must be >= 1, got {val}")
        if name == "T" and not 0 < val <= 1:
            raise ValueError(f"T must lie in (0, 1], got {val}")
        if name == "l1_sq" and not 0 <= val <= 1:
            raise ValueError(f"l1_sq must lie in [0, 1], got {val}")


def analytic_rate(formula_id: str, **params) -> float:
    """Evaluate one of the closed-form expressions in :data:`ANALYTIC_FORMULAS`.

    The asymptotic rates diverge at ``T = 1``; that point is out of domain.
    """
    try:
        fn = ANALYTIC_FORMULAS[formula_id]
    except KeyError:
        raise ValueError(f"unknown formula {formula_id!r}; choose from {sorted(ANALYTIC_FORMULAS)}") from None
    _check_domain(params)
    if formula_id.startswith("k_") and params.get("T") == 1:
        raise ValueError("asymptotic rate diverges at T = 1")
    try:
        return float(fn(**params))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{formula_id} undefined at {params}: {exc}") from exc


# --- security thresholds --------------------------------------------------


@dataclass(frozen=True)
class SecurityThreshold:
    """Result of solving the trusted individual-attack bound.

    ``status`` is ``"threshold"`` when ``value`` splits the domain, otherwise
    ``"always secure"`` or ``"never secure"``. ``secure_side`` tells which
    side of ``value`` is secure: ``"below"`` or ``"above"``.
    """

    variable: str
    value: float | None
    status: str
    secure_side: str | None = None


def trusted_bound_rhs(V: float, T: float) -> float:
    """Right-hand side of ``1/N = (1-T)(V-1) / (3V - 2T(V-1) - 1)``."""
    return (1 - T) * (V - 1) / (3 * V - 2 * T * (V - 1) - 1)


def security_bound_trusted(*, N: float | None = None, V: float | None = None, T: float | None = None) -> SecurityThreshold:
    """Solve the trusted-detection individual-attack bound for the missing variable.

    Exactly two of ``N``, ``V``, ``T`` are given. With a single vacuum-free
    source mode of variance ``V`` and ``N - 1`` empty modes, the protocol is
    secure when ``N`` is at most the threshold, ``T`` at least the threshold,
    and ``V`` at most the threshold. Pass ``T=0`` for the strong-loss limit.
    """
    given = {k: v for k, v in (("N", N), ("V", V), ("T", T)) if v is not None}
    if len(given) != 2:
        raise ValueError("give exactly two of N, V, T")
    if V is not None and V <= 1:
        raise ValueError("V must exceed 1")
    if T is not None and not 0 <= T <= 1:
        raise ValueError("T must lie in [0, 1]")
    if N is not None and N < 1:
        raise ValueError("N must be at least 1")

    if N is None:
        rhs = trusted_bound_rhs(V, T)
        if rhs <= 0:
            return SecurityThreshold("N", None, "always secure")
        return SecurityThreshold("N", 1 / rhs, "threshold", "below")
    if T is None:
        if N <= 2:
            return SecurityThreshold("T", None, "always secure")
        t_star = (N * (V - 1) - (3 * V - 1)) / ((V - 1) * (N - 2))
        if t_star <= 0:
            return SecurityThreshold("T", None, "always secure")
        if t_star >= 1:
            return SecurityThreshold("T", None, "never secure")
        return SecurityThreshold("T", t_star, "threshold", "above")
    a = N * (1 - T) - 3 + 2 * T
    if a <= 0:
        return SecurityThreshold("V", None, "always secure")
    v_star = (a + 2) / a
    return SecurityThreshold("V", v_star, "threshold", "below")


def unbalanced_threshold(l1_sq: float) -> float:
    """Second-mode variance below which the untrusted strong-signal limit is insecure."""
    if not 0 < l1_sq < 0.5:
        raise ValueError(f"l1_sq must lie in (0, 0.5), got {l1_sq}")
    return 1 - l1_sq + 1 / (4 - 4 * l1_sq)


# --- scans ----------------------------------------------------------------


def distance_to_transmittance(distance_km, loss_db_per_km: float = 0.2):
    return 10 ** (-loss_db_per_km * np.asarray(distance_km, dtype=float) / 10)


AXES = ("distance", "T", "eps", "V1", "V2")


def scenario_at(template: Scenario, axis: str, value: float) -> Scenario:
    """Copy of ``template`` with one parameter replaced."""
    if axis == "distance":
        return replace(template, channel=ChannelSpec(float(distance_to_transmittance(value)), template.channel.eps))
    if axis == "T":
        return replace(template, channel=ChannelSpec(value, template.channel.eps))
    if axis == "eps":
        return replace(template, channel=ChannelSpec(template.channel.T, value))
    if axis in ("V1", "V2"):
        k = int(axis[1]) - 1
        v = list(template.source.variances)
        if k >= len(v):
            raise ValueError(f"axis {axis} needs at least {k + 1} source modes")
        v[k] = value
        return replace(template, source=SourceSpec(tuple(v)))
    raise ValueError(f"unknown axis {axis!r}; choose from {AXES}")


@dataclass(frozen=True)
class ScanRow:
    value: float
    T: float
    report: KeyRateReport | None
    status: str = "ok"
    message: str = ""

    @property
    def key_rate(self) -> float:
        return self.report.key_rate if self.report is not None else float("nan")


def _scan_point(args) -> ScanRow:
    template, axis, value = args
    try:
        s = scenario_at(template, axis, value)
        return ScanRow(value, s.channel.T, key_rate(s))
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return ScanRow(value, float("nan"), None, "failed", str(exc))


def default_jobs() -> int:
    return int(os.environ.get("MMQKD_JOBS", "1"))


def scan(template: Scenario, axis: str, values: Sequence[float], jobs: int | None = None) -> list[ScanRow]:
    """Key rate at each grid value; rows come back in grid order."""
    values = [float(v) for v in values]
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("scan grid must be strictly monotone")
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; choose from {AXES}")
    jobs = default_jobs() if jobs is None else jobs
    work = [(template, axis, v) for v in values]
    if jobs <= 1 or len(work) < 2:
        return [_scan_point(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_scan_point, work))


def _bisect_zero(f, lo: float, hi: float) -> float | None:
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        return None
    return brentq(f, lo, hi, xtol=CONTOUR_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class ContourPoint:
    V2: float
    V1: float | None
    status: str


def _roots_on_grid(f, grid: np.ndarray) -> list[float]:
    vals = np.array([f(x) for x in grid])
    roots = []
    for k in range(len(grid) - 1):
        if vals[k] == 0:
            roots.append(float(grid[k]))
        elif np.sign(vals[k]) != np.sign(vals[k + 1]) and vals[k + 1] != 0:
            roots.append(float(brentq(f, grid[k], grid[k + 1], xtol=CONTOUR_XTOL, rtol=4 * np.finfo(float).eps)))
    if vals[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def contour(template: Scenario, v2_values: Sequence[float], bracket=CONTOUR_BRACKET, samples: int = 120) -> list[ContourPoint]:
    """Locate ``K = 0`` along ``V1`` for each ``V2`` of a two-mode template.

    ``V1`` is sampled geometrically over ``bracket`` and every sign change is
    refined by Brent bisection, so a grid value can contribute several
    boundary points. A value without any sign change yields one point with
    ``status="no_bracket"``.
    """
    if template.n_modes != 2:
        raise ValueError("contour needs a two-mode template")
    lo, hi = bracket
    grid = 1 + np.geomspace(1e-6, hi - 1, samples) if lo <= 1 else np.geomspace(lo, hi, samples)
    out = []
    for v2 in v2_values:
        row = scenario_at(template, "V2", v2)

        def k_of(v1, row=row):
            return key_rate(scenario_at(row, "V1", v1)).key_rate

        try:
            roots = _roots_on_grid(k_of, grid)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out.append(ContourPoint(float(v2), None, f"failed: {exc}"))
            continue
        if not roots:
            out.append(ContourPoint(float(v2), None, "no_bracket"))
        out.extend(ContourPoint(float(v2), r, "ok") for r in roots)
    return out


def diagonal_crossing(template: Scenario, bracket=CONTOUR_BRACKET) -> float | None:
    """Variance ``V`` where ``K(V1=V, V2=V)`` crosses zero, if bracketed."""
    n = template.n_modes

    def k_of(v):
        return key_rate(replace(template, source=SourceSpec((v,) * n))).key_rate

    return _bisect_zero(k_of, *bracket)
