"""Exception types raised by the trilevel library."""


class TrilevelError(Exception):
    """Base class for all library errors."""


class InvalidParametersError(TrilevelError):
    """Model parameters violate an invariant (ordering, forbidden coupling, ...)."""


class InvalidDetuningError(TrilevelError):
    """Detuning values reconstruct atomic levels that violate the ordering convention."""


class DegenerateLevelsError(TrilevelError):
    """A Bohr frequency needed in a denominator is zero."""


class LatticeBoundaryError(TrilevelError):
    """Lattice minimizer stayed pinned to the search boundary after all domain expansions."""


class CapSaturatedError(TrilevelError):
    """Block scan winner sits at the excitation cap; rerun with a larger cap."""


class NotOnSeparatrixError(TrilevelError):
    """Transition classification was requested at a point off the separatrix."""


class EmptyProjectionError(TrilevelError):
    """Projection onto a positive excitation number of a state with no field amplitude."""


class ContractViolationError(TrilevelError):
    """An input failed a numerical contract (e.g. a non-symmetric matrix)."""


class ConfigError(TrilevelError):
    """A run configuration file or CLI override is invalid."""
