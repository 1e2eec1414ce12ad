"""Excitation-number-projected variational state and its photon moments.

The coherent product state decomposes into components of definite total
excitation number M.  Projecting onto M_dis = ceil(<M>) at the semiclassical
minimizer repairs the overestimated photon fluctuations of the plain coherent
state.  The component over Fock labels |nu, Na-n2-n3, n2, n3> has amplitude

    sqrt(Na!) rho^nu rho3^n2 rho2^n3 / sqrt(nu! n2! n3! (Na-n2-n3)!),

with nu = M - lambda2 n2 - lambda3 n3 >= 0, which maps onto the block basis
via (q, r) = (Na - n3, Na - n2 - n3).  All sums run in log space with exact
integer factorial arguments; terms with nu < 0 are outside the projection and
are skipped, and 0^0 = 1 when the field amplitude vanishes.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import EmptyProjectionError, InvalidParametersError
from .model import AtomConfig, BlockBasis, enumerate_block_basis


def m_dis(M_mean: float) -> int:
    """Discretized excitation number: the ceiling of the expected M.

    A 1e-9 guard keeps floating noise just above an integer from bumping the
    ceiling; exact integers map to themselves.
    """
    if M_mean < 0:
        raise InvalidParametersError(f"M_mean must be >= 0, got {M_mean}")
    return max(0, math.ceil(M_mean - 1e-9))


def _log_terms(r: float, rho2: float, rho3: float, Na: int, config: AtomConfig, M: int):
    """Log of every (n2, n3) summand of the projected squared norm.

    Returns (log_terms, nu) over all occupations with n2 + n3 <= Na and
    nu = M - lambda2 n2 - lambda3 n3 >= 0.
    """
    l2, l3 = config.lambda2, config.lambda3
    n2g, n3g = np.meshgrid(np.arange(Na + 1), np.arange(Na + 1), indexing="ij")
    keep = n2g + n3g <= Na
    n2 = n2g[keep]
    n3 = n3g[keep]
    nu = M - l2 * n2 - l3 * n3
    sel = nu >= 0
    n2, n3, nu = n2[sel], n3[sel], nu[sel]

    def power_log(base_sq: float, exponent: np.ndarray) -> np.ndarray:
        # x^k in log form with the 0^0 = 1 convention
        if base_sq > 0.0:
            return exponent * math.log(base_sq)
        return np.where(exponent == 0, 0.0, -np.inf)

    logs = (
        gammaln(Na + 1.0)
        - gammaln(nu + 1.0)
        - gammaln(n2 + 1.0)
        - gammaln(n3 + 1.0)
        - gammaln(Na - n2 - n3 + 1.0)
        + power_log(Na * r * r, nu)
        + power_log(rho3 * rho3, n2)
        + power_log(rho2 * rho2, n3)
    )
    return logs, nu


def log_block_norm(
    r: float, rho2: float, rho3: float, Na: int, config: AtomConfig, M: int
) -> float:
    """Log of the unnormalized squared norm of the excitation-M component.

    Returns -inf when the component vanishes identically.
    """
    if M < 0:
        raise InvalidParametersError("M must be >= 0")
    logs, _ = _log_terms(r, rho2, rho3, Na, config, M)
    if logs.size == 0:
        return -math.inf
    return float(logsumexp(logs))


def projected_norm(cp, Na: int, config: AtomConfig, M: int) -> float:
    """Log squared norm of the projection of the coherent state at cp onto M."""
    v = cp.coords
    _check_reachable(v, M)
    return log_block_norm(v.r, v.rho2, v.rho3, Na, config, M)


def _check_reachable(v, M: int) -> None:
    if M > 0 and v.r == 0.0:
        raise EmptyProjectionError(
            "projection onto M > 0 with zero field amplitude is empty"
        )


def projected_photon_moments(cp, Na: int, config: AtomConfig, M: int) -> tuple[float, float]:
    """Normalized first and second photon moments of the projected state."""
    v = cp.coords
    if M == 0:
        return 0.0, 0.0
    _check_reachable(v, M)
    logs, nu = _log_terms(v.r, v.rho2, v.rho3, Na, config, M)
    log_norm = logsumexp(logs)
    if log_norm == -math.inf:
        raise EmptyProjectionError(f"projection onto M = {M} has zero norm")
    pos = nu > 0  # nu = 0 terms carry zero weight in both moments
    if not np.any(pos):
        return 0.0, 0.0
    log_nu = np.log(nu[pos].astype(float))
    m1 = logsumexp(logs[pos] + log_nu)
    m2 = logsumexp(logs[pos] + 2.0 * log_nu)
    return float(np.exp(m1 - log_norm)), float(np.exp(m2 - log_norm))


def projected_state_vector(
    cp, Na: int, config: AtomConfig, M: int
) -> tuple[BlockBasis, np.ndarray]:
    """Normalized projected amplitudes over the matching block basis.

    Amplitudes align index-by-index with enumerate_block_basis(config, Na, M);
    the Fock labels map onto the matter labels as n2 = q - r, n3 = Na - q.
    """
    _check_reachable(cp.coords, M)
    basis = enumerate_block_basis(config, Na, M)
    v = cp.coords
    n2 = basis.qs - basis.rs
    n3 = Na - basis.qs
    nu = basis.ns

    def power_log(base_sq: float, exponent: np.ndarray) -> np.ndarray:
        if base_sq > 0.0:
            return exponent * math.log(base_sq)
        return np.where(exponent == 0, 0.0, -np.inf)

    logs = (
        gammaln(Na + 1.0)
        - gammaln(nu + 1.0)
        - gammaln(n2 + 1.0)
        - gammaln(n3 + 1.0)
        - gammaln(basis.rs + 1.0)
        + power_log(Na * v.r * v.r, nu)
        + power_log(v.rho3 * v.rho3, n2)
        + power_log(v.rho2 * v.rho2, n3)
    )
    peak = float(np.max(logs))
    if peak == -math.inf:
        raise EmptyProjectionError(f"projection onto M = {M} has zero norm")
    amps = np.exp(0.5 * (logs - peak))
    amps /= np.linalg.norm(amps)
    return basis, amps


def delta_n(n_proj: float, n_exact: float, Na: int) -> float:
    """Per-atom difference |n_proj - n_exact| / Na between the descriptions."""
    return abs(n_proj - n_exact) / Na
