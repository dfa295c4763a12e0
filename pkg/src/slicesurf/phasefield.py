"""Transition profile, double-well potential, field initialisation, projection.

The diffuse-interface representation of a set E is u(x) = q(d(x, E)/eps)
where d is the signed distance (negative inside), eps the interface width
and q the decreasing logistic profile

    q(x) = (1 - tanh(x/2)) / 2 = 1 / (1 + exp(x)),

which solves q' = -sqrt(2 W(q)), q(0) = 1/2 for the double-well potential
W(u) = u^2 (1-u)^2 / 2.  Box constraints are enforced by the orthogonal
projection max(min(u, upper), lower).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInputError, InfeasibleConstraintsError
from .grid import BinaryVolume, ScalarField3D
from .distance import signed_distance

# logistic argument clamp; exp(50) keeps q monotone to float precision while
# q(50) < 2e-22 so clamping changes nothing observable
_PROFILE_CLAMP = 50.0


@dataclass(frozen=True)
class PhaseFieldParams:
    """Interface width eps and fattening exponent alpha; thickness h = eps**alpha."""

    epsilon: float
    alpha: float = 0.5

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")

    @property
    def h(self) -> float:
        return self.epsilon ** self.alpha


def transition_profile(x):
    """Decreasing logistic profile in (0, 1): 1 at -inf, 1/2 at 0, 0 at +inf."""
    xc = np.clip(x, -_PROFILE_CLAMP, _PROFILE_CLAMP)
    return 1.0 / (1.0 + np.exp(xc))


def double_well(u):
    """Double-well potential and its first two derivatives (W, W', W'')."""
    u = np.asarray(u, dtype=np.float64)
    w = 0.5 * u * u * (1.0 - u) ** 2
    w1 = u * (u - 1.0) * (2.0 * u - 1.0)
    w2 = 1.0 - 6.0 * u + 6.0 * u * u
    return w, w1, w2


def _well_derivatives(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # W' and W'' only; hot path for the solvers
    w1 = u * (u - 1.0) * (2.0 * u - 1.0)
    w2 = 1.0 - 6.0 * u + 6.0 * u * u
    return w1, w2


def init_phase_field(e0: BinaryVolume, params: PhaseFieldParams) -> ScalarField3D:
    """Diffuse indicator of the initial set: q(signed distance / eps)."""
    if not e0.bits.any() or e0.bits.all():
        raise DegenerateInputError("initial set must be neither empty nor full")
    d = signed_distance(e0)
    return ScalarField3D(e0.spec, transition_profile(d.data / params.epsilon))


def project_obstacle(u: ScalarField3D, obst) -> ScalarField3D:
    """Orthogonal projection onto the box lower <= u <= upper."""
    lower, upper = obst.lower, obst.upper
    if not (u.spec == lower.spec == upper.spec):
        raise InfeasibleConstraintsError("obstacle grids do not match the field")
    if np.any(lower.data > upper.data):
        raise InfeasibleConstraintsError("lower obstacle exceeds upper obstacle")
    return ScalarField3D(u.spec, np.maximum(np.minimum(u.data, upper.data), lower.data))
