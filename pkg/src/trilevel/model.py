"""Physical parameters, atomic configurations, and the exact Hamiltonian blocks.

The system is N_a identical three-level atoms coupled to one quantized field
mode in the rotating-wave approximation (hbar = 1).  Each atomic configuration
(cascade Xi, Lambda, V) forbids one dipole transition and conserves a total
excitation number

    M = n + lambda2 * A22 + lambda3 * A33,

which splits the Hamiltonian into finite blocks labelled by M.  The symmetric
matter basis is labelled |n q r> with level populations
(A11, A22, A33) = (r, q - r, Na - q).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import InvalidDetuningError, InvalidParametersError

log = logging.getLogger(__name__)


class AtomKind(Enum):
    XI = "xi"
    LAMBDA = "lambda"
    V = "v"


# (lambda2, lambda3) and the forbidden dipole coupling per configuration.
_LAMBDAS = {AtomKind.XI: (1, 2), AtomKind.LAMBDA: (0, 1), AtomKind.V: (1, 1)}
_FORBIDDEN = {AtomKind.XI: "mu13", AtomKind.LAMBDA: "mu12", AtomKind.V: "mu23"}
# The two couplings that remain active, in canonical order.
_ACTIVE = {
    AtomKind.XI: ("mu12", "mu23"),
    AtomKind.LAMBDA: ("mu13", "mu23"),
    AtomKind.V: ("mu12", "mu13"),
}
# Detuning labels per configuration (pairs of Delta_ij keys).
_DETUNING_KEYS = {
    AtomKind.XI: ("d21", "d32"),
    AtomKind.LAMBDA: ("d31", "d32"),
    AtomKind.V: ("d21", "d31"),
}


@dataclass(frozen=True)
class AtomConfig:
    """One atomic configuration with its conserved-excitation weights."""

    kind: AtomKind
    lambda2: int
    lambda3: int
    forbidden_coupling: str

    def __post_init__(self):
        if (self.lambda2, self.lambda3) != _LAMBDAS[self.kind]:
            raise InvalidParametersError(
                f"{self.kind.value}: lambda pair must be {_LAMBDAS[self.kind]}"
            )
        if self.forbidden_coupling != _FORBIDDEN[self.kind]:
            raise InvalidParametersError(
                f"{self.kind.value}: forbidden coupling must be {_FORBIDDEN[self.kind]}"
            )

    @classmethod
    def from_kind(cls, kind: AtomKind | str) -> "AtomConfig":
        if isinstance(kind, str):
            kind = AtomKind(kind.lower())
        l2, l3 = _LAMBDAS[kind]
        return cls(kind, l2, l3, _FORBIDDEN[kind])

    @property
    def active_couplings(self) -> tuple[str, str]:
        return _ACTIVE[self.kind]

    @property
    def detuning_keys(self) -> tuple[str, str]:
        return _DETUNING_KEYS[self.kind]


XI = AtomConfig.from_kind(AtomKind.XI)
LAMBDA = AtomConfig.from_kind(AtomKind.LAMBDA)
V = AtomConfig.from_kind(AtomKind.V)


def lambdas_for(config: AtomConfig) -> tuple[int, int]:
    """Return the (lambda2, lambda3) weights of the conserved excitation number."""
    return config.lambda2, config.lambda3


@dataclass(frozen=True)
class Detunings:
    """Configuration-dependent detuning pair, in units of the field frequency.

    The pair means (Delta21, Delta32) for Xi, (Delta31, Delta32) for Lambda and
    (Delta21, Delta31) for V, with Delta_ij = omega_i - omega_j - Omega.
    """

    values: tuple[float, float]


def omegas_from_detuning(
    config: AtomConfig, d: Detunings, Omega: float, omega1: float = 0.0
) -> tuple[float, float]:
    """Reconstruct (omega2, omega3) from the configuration's detuning pair.

    Raises InvalidDetuningError when the reconstructed levels violate
    omega1 <= omega2 <= omega3.
    """
    a, b = d.values
    if config.kind is AtomKind.XI:  # (Delta21, Delta32)
        omega2 = a + omega1 + Omega
        omega3 = b + a + omega1 + 2.0 * Omega
    elif config.kind is AtomKind.LAMBDA:  # (Delta31, Delta32)
        omega2 = a - b + omega1
        omega3 = a + omega1 + Omega
    else:  # V: (Delta21, Delta31)
        omega2 = a + omega1 + Omega
        omega3 = b + omega1 + Omega
    if not (omega1 <= omega2 <= omega3):
        raise InvalidDetuningError(
            f"{config.kind.value} detunings {d.values} give levels "
            f"({omega1}, {omega2}, {omega3}) violating omega1 <= omega2 <= omega3"
        )
    for name, val in zip(config.detuning_keys, d.values):
        if abs(val) >= Omega:
            log.warning(
                "detuning |%s| = %g >= Omega: outside the rotating-wave regime", name, abs(val)
            )
    return omega2, omega3


@dataclass(frozen=True)
class ModelParams:
    """Full physical specification of one Hamiltonian.

    Couplings are stored as magnitudes: the ground-state phases are fixed so
    only |mu_ij| enters any observable.  Negative inputs are accepted and
    absolute-valued with a log note.
    """

    Omega: float
    omega1: float
    omega2: float
    omega3: float
    mu12: float = 0.0
    mu13: float = 0.0
    mu23: float = 0.0
    Na: int = 1

    def __post_init__(self):
        if self.Omega <= 0:
            raise InvalidParametersError(f"Omega must be positive, got {self.Omega}")
        if self.Na < 1 or int(self.Na) != self.Na:
            raise InvalidParametersError(f"Na must be a positive integer, got {self.Na}")
        if not (self.omega1 <= self.omega2 <= self.omega3):
            raise InvalidParametersError(
                f"levels ({self.omega1}, {self.omega2}, {self.omega3}) "
                "violate omega1 <= omega2 <= omega3"
            )
        for name in ("mu12", "mu13", "mu23"):
            v = getattr(self, name)
            if v < 0:
                log.info("coupling %s = %g normalized to |%s| = %g", name, v, name, -v)
                object.__setattr__(self, name, -v)

    @classmethod
    def from_detuning(
        cls,
        config: AtomConfig,
        d: Detunings,
        Omega: float = 1.0,
        omega1: float = 0.0,
        Na: int = 1,
        **mus: float,
    ) -> "ModelParams":
        omega2, omega3 = omegas_from_detuning(config, d, Omega, omega1)
        return cls(Omega, omega1, omega2, omega3, Na=Na, **mus)

    def mu(self, name: str) -> float:
        return getattr(self, name)

    def with_mu(self, **mus: float) -> "ModelParams":
        """Copy with some couplings replaced."""
        kw = dict(
            Omega=self.Omega, omega1=self.omega1, omega2=self.omega2, omega3=self.omega3,
            mu12=self.mu12, mu13=self.mu13, mu23=self.mu23, Na=self.Na,
        )
        kw.update(mus)
        return ModelParams(**kw)

    def validate_for(self, config: AtomConfig) -> None:
        """Raise unless this parameter set is admissible for the configuration."""
        forbidden = config.forbidden_coupling
        if self.mu(forbidden) != 0.0:
            raise InvalidParametersError(
                f"{config.kind.value} configuration requires {forbidden} = 0 "
                f"(transition forbidden), got {self.mu(forbidden)}"
            )


class BasisState(NamedTuple):
    """One |n q r> basis vector: n photons, matter labels 0 <= r <= q <= Na."""

    n: int
    q: int
    r: int


@dataclass(frozen=True)
class BlockBasis:
    """Ordered basis of one M-block.

    States are sorted lexicographically ascending in (q, r); the photon number
    n = M - lambda2*(q - r) - lambda3*(Na - q) is then determined.  The label
    arrays are kept alongside the state list for vectorized matrix assembly.
    """

    M: int
    Na: int
    config: AtomConfig
    states: tuple[BasisState, ...]
    ns: np.ndarray = field(repr=False, compare=False)
    qs: np.ndarray = field(repr=False, compare=False)
    rs: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)


def block_dimension_cap(Na: int) -> int:
    """Block dimension once every (q, r) label is allowed: Na(Na+1)/2 + Na + 1."""
    return Na * (Na + 1) // 2 + Na + 1


def enumerate_block_basis(config: AtomConfig, Na: int, M: int) -> BlockBasis:
    """Enumerate all |n q r> with n >= 0 in the excitation-M block."""
    if M < 0 or Na < 1:
        raise InvalidParametersError(f"need M >= 0 and Na >= 1, got M={M}, Na={Na}")
    l2, l3 = config.lambda2, config.lambda3
    q2, r2 = np.meshgrid(np.arange(Na + 1), np.arange(Na + 1), indexing="ij")
    keep = r2 <= q2
    qs = q2[keep]
    rs = r2[keep]
    ns = M - l2 * (qs - rs) - l3 * (Na - qs)
    sel = ns >= 0
    qs, rs, ns = qs[sel], rs[sel], ns[sel]
    # meshgrid with q major and r minor is already lexicographic in (q, r)
    states = tuple(BasisState(int(n), int(q), int(r)) for n, q, r in zip(ns, qs, rs))
    return BlockBasis(M=M, Na=Na, config=config, states=states, ns=ns, qs=qs, rs=rs)


def _raise_element(generator: tuple[int, int], q: int, r: int, Na: int) -> tuple[int, int, float]:
    """Target labels and value of a raising generator applied to ket (q, r)."""
    if generator == (1, 2):
        return q, r + 1, np.sqrt((q - r) * (r + 1.0))
    if generator == (1, 3):
        return q + 1, r + 1, np.sqrt((Na - q) * (r + 1.0))
    if generator == (2, 3):
        return q + 1, r, np.sqrt((Na - q) * (q - r + 1.0))
    raise ValueError(f"not a raising generator: {generator}")


def matter_matrix_element(
    generator: tuple[int, int], bra: BasisState, ket: BasisState, Na: int
) -> float:
    """Matrix element <bra| A_ij |ket> of a collective matter operator.

    Diagonal generators count level populations; raising elements follow the
    square-root ladder formulas; lowering elements are the transposes of the
    raising ones (all elements are real).
    """
    i, j = generator
    bq, br = bra.q, bra.r
    kq, kr = ket.q, ket.r
    for lbl in (bra, ket):
        if not (0 <= lbl.r <= lbl.q <= Na):
            raise InvalidParametersError(f"labels {lbl} invalid for Na={Na}")
    if i == j:
        if (bq, br) != (kq, kr):
            return 0.0
        return float({1: kr, 2: kq - kr, 3: Na - kq}[i])
    if i > j:  # lowering: transpose of the raising element
        i, j = j, i
        (bq, br), (kq, kr) = (kq, kr), (bq, br)
    tq, tr, val = _raise_element((i, j), kq, kr, Na)
    if (tq, tr) == (bq, br) and 0 <= tr <= tq <= Na:
        return float(val)
    return 0.0


def matter_operator_matrix(generator: tuple[int, int], Na: int) -> np.ndarray:
    """Dense matrix of A_ij over the full symmetric matter basis.

    Basis ordering is lexicographic ascending in (q, r), matching the block
    basis restricted to its matter labels.
    """
    labels = [(q, r) for q in range(Na + 1) for r in range(q + 1)]
    dim = len(labels)
    A = np.zeros((dim, dim))
    idx = {lbl: k for k, lbl in enumerate(labels)}
    i, j = generator
    for k, (q, r) in enumerate(labels):
        if i == j:
            A[k, k] = {1: r, 2: q - r, 3: Na - q}[i]
        elif i < j:
            tq, tr, val = _raise_element((i, j), q, r, Na)
            if 0 <= tr <= tq <= Na:
                A[idx[(tq, tr)], k] = val
        else:
            tq, tr, val = _raise_element((j, i), q, r, Na)
            if 0 <= tr <= tq <= Na:
                A[k, idx[(tq, tr)]] = val
    return A


# Couplings paired with the (dq, dr) moves of their raising matter operator.
_COUPLING_MOVES = {
    "mu12": ((1, 2), 0, 1),
    "mu13": ((1, 3), 1, 1),
    "mu23": ((2, 3), 1, 0),
}


def _block_band(params: ModelParams, config: AtomConfig, M: int):
    """Assemble the M-block in symmetric lower band storage.

    Returns (band, basis) where band[d, k] = H[k + d, k]; the bandwidth is at
    most Na + 2 thanks to the lexicographic (q, r) ordering.
    """
    params.validate_for(config)
    basis = enumerate_block_basis(config, params.Na, M)
    Na = params.Na
    ns, qs, rs = basis.ns, basis.qs, basis.rs
    dim = basis.dim
    idx = np.full((Na + 2, Na + 2), -1, dtype=np.int64)
    idx[qs, rs] = np.arange(dim)
    band = np.zeros((min(Na + 3, dim), dim))
    band[0] = (
        params.Omega * ns
        + params.omega1 * rs
        + params.omega2 * (qs - rs)
        + params.omega3 * (Na - qs)
    )
    field_factor = np.sqrt(ns + 1.0)  # a^dagger acting on the ket's photon state
    for name in config.active_couplings:
        mu = params.mu(name)
        if mu == 0.0:
            continue
        gen, dq, dr = _COUPLING_MOVES[name]
        ok = qs + dq <= Na if dq else rs + dr <= qs
        k = np.nonzero(ok)[0]
        if k.size == 0:
            continue
        tq, tr = qs[k] + dq, rs[k] + dr
        p = idx[tq, tr]
        if gen == (1, 2):
            matter = np.sqrt((qs[k] - rs[k]) * (rs[k] + 1.0))
        elif gen == (1, 3):
            matter = np.sqrt((Na - qs[k]) * (rs[k] + 1.0))
        else:
            matter = np.sqrt((Na - qs[k]) * (qs[k] - rs[k] + 1.0))
        band[p - k, k] += -(mu / np.sqrt(Na)) * field_factor[k] * matter
    return band, basis


def build_block_hamiltonian(params: ModelParams, config: AtomConfig, M: int) -> np.ndarray:
    """Dense symmetric Hamiltonian of the excitation-M block over its BlockBasis."""
    band, basis = _block_band(params, config, M)
    dim = basis.dim
    H = np.zeros((dim, dim))
    np.fill_diagonal(H, band[0])
    for d in range(1, band.shape[0]):
        vals = band[d, : dim - d]
        rows = np.arange(d, dim)
        H[rows, rows - d] += vals
        H[rows - d, rows] += vals
    return H
