"""Exact ground state by symmetric diagonalization of each excitation block.

The conserved excitation number M splits the Hamiltonian into blocks of
dimension at most Na(Na+1)/2 + Na + 1 (861 at Na = 40), so dense and banded
methods are adequate.  The global ground state is found by scanning M upward
and keeping the block with the lowest eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import CapSaturatedError, ContractViolationError
from .model import AtomConfig, BlockBasis, ModelParams, _block_band
from . import semiclassical

# Below this dimension a full dense solve beats the Lanczos iteration.
_DENSE_CUTOFF = 128
# Energy window treated as an exact degeneracy between blocks.
_TIE_TOL = 1e-10


@dataclass(frozen=True)
class GroundResult:
    """Exact ground eigenpair of the winning M-block with its observables."""

    M: int
    energy: float
    amplitudes: np.ndarray
    basis: BlockBasis
    n_mean: float
    n2_mean: float
    n_var: float
    populations: tuple[float, float, float]
    degenerate_Ms: tuple[int, ...] = ()


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Deterministic sign: the largest-magnitude component is made positive."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def eigensolve_symmetric(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum of a real symmetric matrix.

    Returns eigenvalues ascending and orthonormal eigenvectors as columns,
    each with the largest-magnitude component positive.  Raises
    ContractViolationError when the input is not symmetric to 1e-12
    (relative to its largest entry).
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractViolationError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > 1e-12 * scale:
        raise ContractViolationError(f"matrix asymmetry {asym:.3e} exceeds tolerance")
    w, v = eigh(A)
    for j in range(v.shape[1]):
        v[:, j] = _fix_sign(v[:, j])
    return w, v


def _band_to_sparse(band: np.ndarray) -> sp.csr_matrix:
    dim = band.shape[1]
    diags = [band[0]]
    offsets = [0]
    for d in range(1, band.shape[0]):
        vals = band[d, : dim - d]
        if np.any(vals):
            diags.append(vals)
            offsets.append(-d)
            diags.append(vals)
            offsets.append(d)
    return sp.diags(diags, offsets, shape=(dim, dim), format="csr")


def _band_lowest(band: np.ndarray, want_vector: bool):
    """Lowest eigenpair of a symmetric banded block.

    Small blocks go through a dense solve; large ones through a Lanczos
    iteration with a fixed start vector (deterministic), falling back to the
    dense path if the iteration fails to converge.
    """
    dim = band.shape[1]
    if dim == 1:
        w0 = float(band[0, 0])
        return (w0, np.ones(1)) if want_vector else (w0, None)
    if dim <= _DENSE_CUTOFF:
        H = _band_to_dense(band)
        if want_vector:
            w, v = eigh(H)
            return float(w[0]), _fix_sign(v[:, 0])
        w = eigh(H, eigvals_only=True, subset_by_index=(0, 0))
        return float(w[0]), None
    A = _band_to_sparse(band)
    v0 = np.full(dim, 1.0 / math.sqrt(dim))
    try:
        if want_vector:
            w, v = eigsh(A, k=1, which="SA", v0=v0, tol=0)
            return float(w[0]), _fix_sign(v[:, 0])
        w = eigsh(A, k=1, which="SA", v0=v0, tol=0, return_eigenvectors=False)
        return float(w[0]), None
    except ArpackNoConvergence:
        H = _band_to_dense(band)
        w, v = eigh(H)
        return (float(w[0]), _fix_sign(v[:, 0])) if want_vector else (float(w[0]), None)


def _band_to_dense(band: np.ndarray) -> np.ndarray:
    dim = band.shape[1]
    H = np.zeros((dim, dim))
    np.fill_diagonal(H, band[0])
    for d in range(1, band.shape[0]):
        vals = band[d, : dim - d]
        rows = np.arange(d, dim)
        H[rows, rows - d] += vals
        H[rows - d, rows] += vals
    return H


def block_ground(params: ModelParams, config: AtomConfig, M: int) -> tuple[float, np.ndarray]:
    """Lowest eigenpair (energy, amplitudes) of the excitation-M block."""
    band, _ = _block_band(params, config, M)
    energy, vec = _band_lowest(band, want_vector=True)
    return energy, vec


def default_m_cap(params: ModelParams, config: AtomConfig, M_mean: float | None = None) -> int:
    """Scan cap: max(2*lambda3*Na, ceil(Na * M^c) + 10), M^c from the minimizer."""
    if M_mean is None:
        cp = semiclassical.minimize_lattice(params)
        M_mean = semiclassical.coherent_expectations(cp, params, config).M_mean
    return max(2 * config.lambda3 * params.Na, math.ceil(M_mean) + 10)


def global_ground(
    params: ModelParams, config: AtomConfig, M_cap: int | None = None
) -> GroundResult:
    """Scan blocks M = 0..M_cap and return the lowest ground eigenpair.

    Ties within 1e-10 resolve to the smallest M and are reported in
    degenerate_Ms.  A winner sitting at M_cap raises CapSaturatedError.
    """
    if M_cap is None:
        M_cap = default_m_cap(params, config)
    if M_cap < 0:
        raise CapSaturatedError("M_cap must be nonnegative")
    best_e = math.inf
    best_M = -1
    degenerate: list[int] = []
    for M in range(M_cap + 1):
        band, _ = _block_band(params, config, M)
        e, _vec = _band_lowest(band, want_vector=False)
        if e < best_e - _TIE_TOL:
            best_e = e
            best_M = M
            degenerate = []
        elif e <= best_e + _TIE_TOL:
            degenerate.append(M)
    if best_M == M_cap:
        raise CapSaturatedError(
            f"block scan winner sits at the cap M = {M_cap}; rerun with a larger M_cap"
        )
    band, basis = _block_band(params, config, best_M)
    energy, vec = _band_lowest(band, want_vector=True)
    weights = vec * vec
    ns = basis.ns.astype(float)
    n_mean = float(weights @ ns)
    n2_mean = float(weights @ (ns * ns))
    pops = (
        float(weights @ basis.rs),
        float(weights @ (basis.qs - basis.rs)),
        float(weights @ (params.Na - basis.qs)),
    )
    return GroundResult(
        M=best_M,
        energy=energy,
        amplitudes=vec,
        basis=basis,
        n_mean=n_mean,
        n2_mean=n2_mean,
        n_var=n2_mean - n_mean * n_mean,
        populations=pops,
        degenerate_Ms=tuple(degenerate),
    )
