"""
``twist_orbits.errors``
=======================
Exception hierarchy shared by every subpackage.

Certification errors signal that a hypothesis (convexity, opticality, a
sampled bound) failed on a witnessing sample. Numerical failures signal that
a solver misbehaved on a problem that should have been solvable.

"""

from typing import Any

import numpy as np


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class TwistOrbitsError(Exception):
    """Root of all errors raised by `twist_orbits`."""

    def __init__(self, message: str, **witness: Any) -> None:
        super().__init__(message)
        self.message = message
        self.witness = witness

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON serialisable description of the error and its witness."""
        return {'error': type(self).__name__, 'message': self.message, 'witness': _plain(self.witness)}


# ============= #
# Certification #
# ============= #


class CertificationError(TwistOrbitsError):
    """A sampled hypothesis failed."""


class ConvexityViolation(CertificationError):
    """`<d12 S v, v> <= -a |v|^2` failed with `a > 0`."""


class BoundViolation(CertificationError):
    """A sampled inequality (quadratic lower bound, Gronwall) failed."""


class PositivityFailure(CertificationError):
    """The twist block of a short-time flow is not positive definite."""


class OpticalityFailure(CertificationError):
    """The fiber Hessian of a Hamiltonian is not uniformly positive definite."""


class PeriodicityViolation(CertificationError):
    """A function claimed to be 1-periodic in `q` is not."""


# ========= #
# Numerical #
# ========= #


class NumericalFailure(TwistOrbitsError):
    """A solver failed on a problem that should be solvable."""


class NewtonDivergence(NumericalFailure):
    """Newton iteration exceeded its cap without reaching tolerance."""


class ShootingDivergence(NumericalFailure):
    """Boundary-value shooting did not converge."""


class IterationCapExceeded(NumericalFailure):
    """An iterative minimisation exceeded its cap."""


class NonFiniteState(NumericalFailure):
    """A state or value became infinite or NaN."""


class InternalInconsistency(NumericalFailure):
    """A quantity that certification guarantees to be regular was not."""


# ===== #
# Usage #
# ===== #


class NotCritical(TwistOrbitsError):
    """A configuration is not a critical point of the action."""


class NonPrimeClass(TwistOrbitsError):
    """Orbit counting was requested for a class `(m, d)` with no `m_k` coprime to `d`."""


class DimensionMismatch(TwistOrbitsError, ValueError):
    """Operands have inconsistent dimensions."""


class ConfigError(TwistOrbitsError):
    """A run configuration failed validation."""
