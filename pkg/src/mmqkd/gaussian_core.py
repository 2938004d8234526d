"""Covariance-matrix algebra for zero-mean Gaussian states.

Matrices are real, symmetric, ``2M x 2M`` and use the interleaved quadrature
order ``(x1, p1, x2, p2, ...)`` in shot-noise units (vacuum variance 1).
Every function returns a fresh array and never mutates its inputs.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ._tolerances import TOL

_QUADRATURE_OFFSET = {"x": 0, "p": 1}


def validate_covariance(gamma, *, physical: bool = False) -> np.ndarray:
    """Return ``gamma`` as a float array after shape and symmetry checks.

    With ``physical=True`` the symplectic spectrum is also checked against
    the uncertainty bound ``nu >= 1``.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ValueError(f"covariance matrix must be square, got shape {gamma.shape}")
    if gamma.shape[0] == 0 or gamma.shape[0] % 2:
        raise ValueError(f"covariance matrix dimension must be even and nonzero, got {gamma.shape[0]}")
    scale = max(1.0, float(np.max(np.abs(gamma))))
    if np.max(np.abs(gamma - gamma.T)) > TOL.symmetry * scale:
        raise ValueError("covariance matrix is not symmetric")
    if physical and not is_physical(gamma):
        raise ValueError("covariance matrix violates the uncertainty principle")
    return gamma


def n_modes(gamma) -> int:
    return np.shape(gamma)[0] // 2


def _check_modes(modes: Iterable[int], total: int, name: str = "modes") -> list[int]:
    modes = [int(m) for m in modes]
    if len(set(modes)) != len(modes):
        raise ValueError(f"{name} contains duplicate indices: {modes}")
    for m in modes:
        if not 0 <= m < total:
            raise IndexError(f"mode index {m} out of range for {total} modes")
    return modes


def quadrature_indices(modes: Sequence[int], quadrature: str | None = None) -> list[int]:
    """Row indices of the given modes, both quadratures unless one is named."""
    if quadrature is None:
        return [2 * m + q for m in modes for q in (0, 1)]
    return [2 * m + _QUADRATURE_OFFSET[quadrature] for m in modes]


def vacuum(modes: int = 1) -> np.ndarray:
    return np.eye(2 * modes)


def thermal(variance: float) -> np.ndarray:
    if variance < 1:
        raise ValueError(f"unphysical variance {variance} < 1")
    return variance * np.eye(2)


def tmsv(variance: float) -> np.ndarray:
    """Two-mode squeezed vacuum with per-arm quadrature variance ``variance``.

    >>> tmsv(1.0)
    array([[1., 0., 0., 0.],
           [0., 1., 0., 0.],
           [0., 0., 1., 0.],
           [0., 0., 0., 1.]])
    """
    if variance < 1:
        raise ValueError(f"unphysical variance {variance} < 1")
    c = np.sqrt(variance**2 - 1.0)
    sz = np.diag([1.0, -1.0])
    return np.block([[variance * np.eye(2), c * sz], [c * sz, variance * np.eye(2)]])


def tensor(*gammas) -> np.ndarray:
    """Block-diagonal composition of independent subsystems."""
    if not gammas:
        raise ValueError("tensor needs at least one covariance matrix")
    blocks = [validate_covariance(g) for g in gammas]
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    start = 0
    for b in blocks:
        stop = start + b.shape[0]
        out[start:stop, start:stop] = b
        start = stop
    return out


def partial_trace(gamma, keep: Sequence[int]) -> np.ndarray:
    """Reduced state on ``keep`` (in the order given)."""
    gamma = validate_covariance(gamma)
    keep = _check_modes(keep, n_modes(gamma), "keep")
    if not keep:
        raise ValueError("partial_trace needs at least one mode to keep")
    idx = quadrature_indices(keep)
    return gamma[np.ix_(idx, idx)]


def homodyne_pseudoinverse(block, quadrature: str = "x") -> np.ndarray:
    """Moore-Penrose inverse of ``X block X`` where ``X`` projects onto one quadrature.

    ``block`` is the covariance of the measured modes. The projected matrix is
    nonzero only on the measured-quadrature rows, so its pseudoinverse is the
    ordinary inverse of that submatrix embedded back in place. A singular
    measured block cannot come from a physical state and is rejected.
    """
    block = np.asarray(block, dtype=float)
    m = block.shape[0] // 2
    idx = quadrature_indices(range(m), quadrature)
    sub = block[np.ix_(idx, idx)]
    if m == 1:
        if not sub[0, 0] > 0:
            raise ValueError(f"measured quadrature variance {sub[0, 0]} is not positive")
        inv = np.array([[1.0 / sub[0, 0]]])
    else:
        if np.linalg.eigvalsh(sub).min() <= 0:
            raise ValueError("measured quadrature block is not positive definite")
        inv = np.linalg.inv(sub)
    out = np.zeros_like(block)
    out[np.ix_(idx, idx)] = inv
    return out


def condition_on_homodyne(gamma, measured: Sequence[int], quadrature: str = "x") -> np.ndarray:
    """State of the unmeasured modes after homodyning ``measured`` on one quadrature.

    Uses ``gamma_R - sigma [X gamma_M X]^+ sigma^T``. The measured modes are
    removed from the output; the remaining modes keep their relative order.
    """
    if quadrature not in _QUADRATURE_OFFSET:
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    gamma = validate_covariance(gamma)
    total = n_modes(gamma)
    measured = _check_modes(measured, total, "measured")
    if not measured:
        return gamma.copy()
    rest = [m for m in range(total) if m not in set(measured)]
    if not rest:
        raise ValueError("no remaining modes after conditioning")
    ri = quadrature_indices(rest)
    mi = quadrature_indices(measured)
    sigma = gamma[np.ix_(ri, mi)]
    pinv = homodyne_pseudoinverse(gamma[np.ix_(mi, mi)], quadrature)
    out = gamma[np.ix_(ri, ri)] - sigma @ pinv @ sigma.T
    return 0.5 * (out + out.T)


def symplectic_form(modes: int) -> np.ndarray:
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(gamma) -> np.ndarray:
    """Symplectic spectrum, sorted descending.

    The eigenvalues of ``i Omega gamma`` come in pairs ``+-nu``. They are
    obtained from the Hermitian similar matrix ``g^1/2 (i Omega) g^1/2``,
    which is far better conditioned than the non-Hermitian product when
    variances are large.
    """
    gamma = validate_covariance(gamma)
    m = n_modes(gamma)
    w, u = np.linalg.eigh(gamma)
    if w.min() <= 0:
        raise ValueError("covariance matrix is not positive definite")
    root = (u * np.sqrt(w)) @ u.T
    herm = root @ (1j * symplectic_form(m)) @ root
    moduli = np.sort(np.abs(np.linalg.eigvalsh(herm)))[::-1]
    pairs = moduli.reshape(m, 2)
    if np.any(np.abs(pairs[:, 0] - pairs[:, 1]) > TOL.pairing * np.maximum(1.0, pairs[:, 0])):
        raise ValueError("symplectic eigenvalues failed to pair up")
    return pairs[:, 0].copy()


def is_physical(gamma) -> bool:
    try:
        nu = symplectic_eigenvalues(gamma)
    except (ValueError, np.linalg.LinAlgError):
        return False
    return bool(nu.min() >= 1 - TOL.physicality)


def bosonic_entropy(x):
    """``g(x) = (x+1) log2(x+1) - x log2 x`` with ``g(0) = 0``."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x < TOL.entropy_floor, 1.0, x)
    val = (safe + 1) * np.log2(safe + 1) - safe * np.log2(safe)
    out = np.where(x < TOL.entropy_floor, 0.0, val)
    return out if out.ndim else float(out)


def von_neumann_entropy(gamma) -> float:
    """Entropy in bits, summed over the symplectic spectrum."""
    nu = symplectic_eigenvalues(gamma)
    return float(np.sum(bosonic_entropy((nu - 1) / 2)))
