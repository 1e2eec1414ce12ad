"""Coherent-state energy surface, its minimization, and ground-state statistics.

The variational state is a Heisenberg-Weyl coherent state for the field times
a symmetric three-level coherent state for the matter.  After the phases are
minimized out, the energy per particle depends on the scaled field amplitude
r = rho / sqrt(Na) and two nonnegative matter coordinates (rho2, rho3):

    E(r, rho2, rho3) = Omega r^2
        + (omega1 + omega2 rho3^2 + omega3 rho2^2) / D
        - 2 r (mu12 rho3 + mu13 rho2 + mu23 rho2 rho3) / D,

with D = 1 + rho2^2 + rho3^2.  The field amplitude minimizes analytically,
leaving a two-variable surface handled by an iterated lattice refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scalar_minimize

from . import projected
from .errors import (
    DegenerateLevelsError,
    InvalidParametersError,
    LatticeBoundaryError,
    NotOnSeparatrixError,
)
from .model import AtomConfig, AtomKind, ModelParams

# Energy window treated as a tie when comparing candidate minima.
_TIE_TOL = 1e-12
# Fraction of the search edge regarded as "pinned to the boundary".
_EDGE_FRACTION = 0.98

# Step and jump threshold for the Ehrenfest-order classifier.  These are our
# own numerical choices: lattice noise on the gradient is ~1e-4 while genuine
# first-order jumps are of order 0.1-1.
CLASSIFY_EPSILON = 1e-3
CLASSIFY_JUMP_THRESHOLD = 1e-2


@dataclass(frozen=True)
class VariationalCoords:
    """Nonnegative variational coordinates (phases already minimized out)."""

    r: float
    rho2: float
    rho3: float

    def __post_init__(self):
        if self.r < 0 or self.rho2 < 0 or self.rho3 < 0:
            raise InvalidParametersError(f"coordinates must be nonnegative: {self}")


@dataclass(frozen=True)
class CriticalPoint:
    """Minimizing coordinates with the per-particle ground energy."""

    coords: VariationalCoords
    energy_per_particle: float
    provenance: str  # "analytic" or "lattice"


@dataclass(frozen=True)
class CoherentExpectations:
    """Populations and excitation statistics of the variational ground state."""

    a11: float
    a22: float
    a33: float
    n_mean: float
    M_mean: float
    M_var: float
    Q_M: float
    Q_photon: float = 0.0


@dataclass(frozen=True)
class TransitionReport:
    """Ehrenfest order of the transition at one separatrix point."""

    location: dict[str, float]
    order: int
    derivative_jump: float
    epsilon: float = CLASSIFY_EPSILON
    threshold: float = CLASSIFY_JUMP_THRESHOLD


@dataclass(frozen=True)
class LatticeSearch:
    """Iterated-lattice search parameters.

    `cells` is the total number of lattice cells (a perfect square, at least
    9); each iteration keeps the minimal cell plus its closest neighbors.
    The critical point is located to within 3^(m-1) sqrt(S / cells^m) after
    m iterations on an initial square of area S.
    """

    rho_max: float = 10.0
    cells: int = 81
    iterations: int = 12
    max_expansions: int = 4
    polish: bool = True

    def __post_init__(self):
        if self.rho_max <= 0:
            raise InvalidParametersError("rho_max must be positive")
        k = math.isqrt(self.cells)
        if self.cells < 9 or k * k != self.cells:
            raise InvalidParametersError("cells must be a perfect square >= 9")
        if self.iterations < 1:
            raise InvalidParametersError("iterations must be >= 1")

    @property
    def per_axis(self) -> int:
        return math.isqrt(self.cells)

    def precision(self) -> float:
        """Guaranteed localization radius of the refined critical point."""
        S = self.rho_max * self.rho_max
        return 3.0 ** (self.iterations - 1) * math.sqrt(S / self.cells**self.iterations)


DEFAULT_SEARCH = LatticeSearch()


def _surface_terms(params: ModelParams, rho2, rho3):
    """Shared pieces of the energy surface: (D, level term, coupling term)."""
    rho2 = np.asarray(rho2, dtype=float)
    rho3 = np.asarray(rho3, dtype=float)
    D = 1.0 + rho2 * rho2 + rho3 * rho3
    levels = (params.omega1 + params.omega2 * rho3 * rho3 + params.omega3 * rho2 * rho2) / D
    coupling = (params.mu12 * rho3 + params.mu13 * rho2 + params.mu23 * rho2 * rho3) / D
    return D, levels, coupling


def energy_per_particle(params: ModelParams, v: VariationalCoords) -> float:
    """Variational energy per particle at arbitrary coordinates."""
    _, levels, coupling = _surface_terms(params, v.rho2, v.rho3)
    return float(params.Omega * v.r * v.r + levels - 2.0 * v.r * coupling)


def critical_field_amplitude(params: ModelParams, rho2, rho3):
    """Field amplitude r_c minimizing the energy at fixed matter coordinates."""
    _, _, coupling = _surface_terms(params, rho2, rho3)
    return coupling / params.Omega


def reduced_energy(params: ModelParams, rho2, rho3):
    """Energy per particle with the field amplitude already minimized out."""
    _, levels, coupling = _surface_terms(params, rho2, rho3)
    return levels - coupling * coupling / params.Omega


def _critical_point_at(params: ModelParams, rho2: float, rho3: float, provenance: str) -> CriticalPoint:
    rc = float(critical_field_amplitude(params, rho2, rho3))
    e = float(reduced_energy(params, rho2, rho3))
    return CriticalPoint(VariationalCoords(rc, rho2, rho3), e, provenance)


def _scan_seeds(params: ModelParams, rho_max: float, k: int = 128) -> list[tuple[float, float]]:
    """Strict local minima of a dense scan, used as extra polish seeds.

    The zoom of the lattice refinement follows a single argmin path, which can
    be lured away from shallow off-path basins (for instance along an exactly
    degenerate zero-energy line of the surface); a dense one-off scan is cheap
    and recovers every basin wider than rho_max/k.
    """
    c = (np.arange(k) + 0.5) * (rho_max / k)
    E = reduced_energy(params, c[:, None], c[None, :])
    padded = np.pad(E, 1, constant_values=np.inf)
    local = np.ones_like(E, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                local &= E < padded[1 + di : 1 + di + k, 1 + dj : 1 + dj + k]
    cells = np.argwhere(local)
    cells = cells[np.argsort(E[local], kind="stable")][:8]  # deepest few suffice
    return [(float(c[i]), float(c[j])) for i, j in cells]


def _polish(params: ModelParams, x0: float, y0: float) -> tuple[float, float, float, bool]:
    """Local refinement of the reduced surface from a lattice point.

    Runs a deterministic Nelder-Mead descent (reflected to keep coordinates
    nonnegative) and certifies the result by a finite-difference gradient
    check, which distinguishes a genuine stationary point from a runaway
    direction.  Returns (rho2, rho3, energy, converged).
    """
    fun = lambda z: float(reduced_energy(params, abs(z[0]), abs(z[1])))
    res = _scalar_minimize(
        fun,
        np.array([x0, y0]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 4000, "maxfev": 6000},
    )
    x, y = abs(float(res.x[0])), abs(float(res.x[1]))
    e = float(reduced_energy(params, x, y))
    h = 1e-6 * (1.0 + max(x, y))
    gx = (fun((x + h, y)) - fun((x - h, y))) / (2 * h)
    gy = (fun((x, y + h)) - fun((x, y - h))) / (2 * h)
    converged = math.hypot(gx, gy) <= 1e-6 * (1.0 + abs(e))
    return x, y, e, converged


def minimize_lattice(params: ModelParams, search: LatticeSearch | None = None) -> CriticalPoint:
    """Locate the minimum of the reduced energy by iterated lattice refinement.

    The square [0, rho_max]^2 is divided into a lattice of cells; the reduced
    energy is evaluated at the cell centers, and the minimal cell together
    with its closest neighbors seeds the next, finer lattice.  The refined
    cell then seeds a local polish of the two-variable surface (the raw
    refinement can stall in the long, nearly flat valleys of the surface).
    A minimizer pinned to the outer edge triggers automatic domain doubling
    (up to max_expansions); if it remains pinned, LatticeBoundaryError is
    raised.  Exact energy ties (1e-12) resolve to the lexicographically
    smallest (rho2, rho3), so the normal point wins on the separatrix itself.
    """
    if search is None:
        search = DEFAULT_SEARCH
    k = search.per_axis
    rho_max = search.rho_max
    offsets = np.arange(k) + 0.5
    normal_e = float(reduced_energy(params, 0.0, 0.0))
    for _ in range(search.max_expansions + 1):
        lo2 = lo3 = 0.0
        hi2 = hi3 = rho_max
        best2 = best3 = 0.0
        best_e = math.inf
        for _it in range(search.iterations):
            c2 = lo2 + offsets * (hi2 - lo2) / k
            c3 = lo3 + offsets * (hi3 - lo3) / k
            E = reduced_energy(params, c2[:, None], c3[None, :])
            flat = int(np.argmin(E))  # row-major: first hit is lexicographic min
            i, j = divmod(flat, k)
            best2, best3, best_e = float(c2[i]), float(c3[j]), float(E[i, j])
            cell2 = (hi2 - lo2) / k
            cell3 = (hi3 - lo3) / k
            lo2, hi2 = max(0.0, best2 - 1.5 * cell2), min(rho_max, best2 + 1.5 * cell2)
            lo3, hi3 = max(0.0, best3 - 1.5 * cell3), min(rho_max, best3 + 1.5 * cell3)
        if search.polish:
            for sx, sy in [(best2, best3)] + _scan_seeds(params, rho_max):
                px, py, pe, stationary = _polish(params, sx, sy)
                if not stationary:
                    continue
                if pe < best_e - _TIE_TOL or (
                    pe <= best_e + _TIE_TOL and (px, py) < (best2, best3)
                ):
                    best2, best3, best_e = px, py, pe
        if best_e >= normal_e - _TIE_TOL:
            # nothing beats the normal point; expansion cannot help
            return CriticalPoint(VariationalCoords(0.0, 0.0, 0.0), normal_e, "lattice")
        if max(best2, best3) < _EDGE_FRACTION * rho_max:
            return _critical_point_at(params, best2, best3, "lattice")
        rho_max *= 2.0
    raise LatticeBoundaryError(
        f"minimizer pinned to the search edge up to rho_max={rho_max / 2:g}; "
        "no finite critical point in reach"
    )


def analytic_critical(params: ModelParams, config: AtomConfig) -> CriticalPoint | None:
    """Closed-form critical point for Lambda/V at equal detuning, else None.

    Lambda requires omega2 = omega1 (equal detunings), V requires
    omega2 = omega3; in both cases the transition sits at
    mu_a^2 + mu_b^2 = Omega (omega3 - omega1).
    """
    params.validate_for(config)
    Om = params.Omega
    w31 = params.omega3 - params.omega1
    if config.kind is AtomKind.LAMBDA:
        if abs(params.omega2 - params.omega1) > 1e-12:
            return None
        s = params.mu13**2 + params.mu23**2
        if s <= Om * w31:
            return CriticalPoint(VariationalCoords(0.0, 0.0, 0.0), params.omega1, "analytic")
        if params.mu13 == 0.0:
            raise LatticeBoundaryError(
                "lambda with mu13 = 0 in the collective regime has no finite critical point"
            )
        rho2 = math.sqrt(s * (s - Om * w31) / (s + Om * w31)) / params.mu13
        rho3 = params.mu23 / params.mu13
    elif config.kind is AtomKind.V:
        if abs(params.omega3 - params.omega2) > 1e-12:
            return None
        t = params.mu12**2 + params.mu13**2
        if t <= Om * w31:
            return CriticalPoint(VariationalCoords(0.0, 0.0, 0.0), params.omega1, "analytic")
        factor = math.sqrt((t - Om * w31) / (t * (t + Om * w31)))
        rho2 = params.mu13 * factor
        rho3 = params.mu12 * factor
    else:
        return None
    return _critical_point_at(params, rho2, rho3, "analytic")


def separatrix_margin(params: ModelParams, config: AtomConfig) -> float:
    """Signed distance to the normal/collective separatrix.

    Negative means normal regime, positive collective, zero on the boundary.
    """
    params.validate_for(config)
    Om = params.Omega
    w21 = params.omega2 - params.omega1
    w31 = params.omega3 - params.omega1
    if config.kind is AtomKind.XI:
        shift = abs(params.mu23) - math.sqrt(Om * w31)
        return params.mu12**2 + (shift * shift if shift > 0 else 0.0) - Om * w21
    if config.kind is AtomKind.LAMBDA:
        shift = abs(params.mu23) - math.sqrt(Om * w21)
        return params.mu13**2 + (shift * shift if shift > 0 else 0.0) - Om * w31
    if w21 <= 0 or w31 <= 0:
        raise DegenerateLevelsError(
            f"V separatrix needs positive Bohr frequencies, got omega21={w21}, omega31={w31}"
        )
    return params.mu12**2 / (Om * w21) + params.mu13**2 / (Om * w31) - 1.0


def coherent_expectations(
    cp: CriticalPoint, params: ModelParams, config: AtomConfig
) -> CoherentExpectations:
    """Populations, excitation moments and Mandel statistics at a minimizer.

    Q_M is assembled from per-particle quantities, so it is exactly
    independent of Na; the photon distribution is Poissonian (Q = 0).
    """
    Na = params.Na
    l2, l3 = config.lambda2, config.lambda3
    v = cp.coords
    D = 1.0 + v.rho2**2 + v.rho3**2
    a11 = 1.0 / D
    a22 = v.rho3**2 / D
    a33 = v.rho2**2 / D
    n = v.r * v.r
    M = n + l2 * a22 + l3 * a33
    matter = l2 * a22 + l3 * a33
    excess = l3 * (l3 - 1) * a33 - matter * matter
    Q_M = excess / M if M > 0 else 0.0
    return CoherentExpectations(
        a11=Na * a11,
        a22=Na * a22,
        a33=Na * a33,
        n_mean=Na * n,
        M_mean=Na * M,
        M_var=Na * (M + excess),
        Q_M=Q_M,
        Q_photon=0.0,
    )


# Coupling -> its coordinate factor in the interaction term of the surface.
_GRADIENT_FACTORS = {
    "mu12": lambda v: v.rho3,
    "mu13": lambda v: v.rho2,
    "mu23": lambda v: v.rho2 * v.rho3,
}


def energy_gradient_mu(cp: CriticalPoint, config: AtomConfig) -> dict[str, float]:
    """Envelope-theorem derivatives of the minimized energy per coupling."""
    v = cp.coords
    D = 1.0 + v.rho2**2 + v.rho3**2
    return {
        name: -2.0 * v.r * _GRADIENT_FACTORS[name](v) / D
        for name in config.active_couplings
    }


def classify_transition(
    params: ModelParams,
    config: AtomConfig,
    crossing_direction: dict[str, float],
    search: LatticeSearch | None = None,
    epsilon: float = CLASSIFY_EPSILON,
    threshold: float = CLASSIFY_JUMP_THRESHOLD,
) -> TransitionReport:
    """Ehrenfest order of the transition at a separatrix point.

    The minimized-energy gradient is evaluated a distance epsilon on either
    side of the point along crossing_direction (components keyed by the active
    couplings); a jump above the threshold marks a first-order transition.
    """
    margin = separatrix_margin(params, config)
    if abs(margin) > 1e-6:
        raise NotOnSeparatrixError(f"separatrix margin {margin:.3e} exceeds 1e-6")
    active = config.active_couplings
    direction = {name: float(crossing_direction.get(name, 0.0)) for name in active}
    norm = math.hypot(*direction.values())
    if norm == 0:
        raise InvalidParametersError("crossing_direction must be a nonzero vector")
    direction = {k: c / norm for k, c in direction.items()}
    grads = []
    for sgn in (+1.0, -1.0):
        shifted = params.with_mu(
            **{k: params.mu(k) + sgn * epsilon * direction[k] for k in active}
        )
        cp = minimize_lattice(shifted, search)
        grads.append(energy_gradient_mu(cp, config))
    jump = math.hypot(*(grads[0][k] - grads[1][k] for k in active))
    return TransitionReport(
        location={k: params.mu(k) for k in active},
        order=1 if jump > threshold else 2,
        derivative_jump=jump,
        epsilon=epsilon,
        threshold=threshold,
    )


@dataclass(frozen=True)
class MDistribution:
    """Probabilities of the total excitation number, plus unreported tail mass."""

    probs: np.ndarray
    tail_mass: float


def m_distribution(
    cp: CriticalPoint, Na: int, config: AtomConfig, M_max: int
) -> MDistribution:
    """Distribution of the total excitation number in the coherent ground state.

    P(M) is the squared norm of the excitation-M component times the coherent
    normalization; the sums run in log space so Na = 40 factorials stay exact.
    """
    if M_max < 0:
        raise InvalidParametersError("M_max must be >= 0")
    v = cp.coords
    log_prefactor = -Na * v.r * v.r - Na * math.log1p(v.rho2**2 + v.rho3**2)
    probs = np.empty(M_max + 1)
    for M in range(M_max + 1):
        log_norm = projected.log_block_norm(v.r, v.rho2, v.rho3, Na, config, M)
        probs[M] = math.exp(log_norm + log_prefactor) if log_norm > -math.inf else 0.0
    tail = max(0.0, 1.0 - float(probs.sum()))
    return MDistribution(probs=probs, tail_mass=tail)
