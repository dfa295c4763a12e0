"""Discrete perimeter, bending and combined energies with their L2 gradients.

With W the double-well potential, eps the interface width and all spatial
derivatives spectral, the three functionals on a field u are

    perimeter  P(u) = int (eps/2)|grad u|^2 + (1/eps) W(u)
    bending    B(u) = (1/(2 eps)) int (eps Lap u - (1/eps) W'(u))^2
    combined   E(u) = P(u) + B(u)

integrated by the midpoint rule (sum times voxel volume).  Writing
phi = eps Lap u - (1/eps) W'(u), the L2 gradients are

    grad P = -phi = (1/eps) W'(u) - eps Lap u
    grad B = Lap phi - (1/eps^2) W''(u) phi
    grad E = grad P + grad B,

the stationarity condition of the combined energy being grad E = 0.
Using one discretisation for energies and gradients makes the duality
<grad E, v> = d/dt E(u + t v) hold to quadrature precision.  Boundary
terms of the continuous integrations by parts vanish identically under
periodicity and are not represented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import ScalarField3D
from .phasefield import double_well, _well_derivatives
from .spectral import SpectralPlan, get_plan


@dataclass(frozen=True)
class EnergyBreakdown:
    perimeter_term: float
    willmore_term: float
    total: float

    @classmethod
    def of(cls, perimeter_term: float, willmore_term: float) -> "EnergyBreakdown":
        return cls(float(perimeter_term), float(willmore_term),
                   float(perimeter_term) + float(willmore_term))


def _check_eps(eps: float) -> float:
    if not eps > 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    return float(eps)


def energy_terms_arr(u: np.ndarray, eps: float, plan: SpectralPlan) -> tuple[float, float]:
    """(perimeter term, bending term) for a raw array; shares one forward pass."""
    vol = plan.spec.voxel_volume
    spectrum = plan.forward(u)
    two_pi_i = 2j * np.pi
    grad_sq = (plan.inverse(two_pi_i * plan.kx * spectrum) ** 2
               + plan.inverse(two_pi_i * plan.ky * spectrum) ** 2
               + plan.inverse(two_pi_i * plan.kz * spectrum) ** 2)
    lap = plan.inverse(-4.0 * np.pi ** 2 * plan.k2 * spectrum)
    w, w1, _ = double_well(u)
    per = float(np.sum(0.5 * eps * grad_sq + w / eps) * vol)
    phi = eps * lap - w1 / eps
    wil = float(np.sum(phi * phi) * vol / (2.0 * eps))
    return per, wil


def energy_perimeter(u: ScalarField3D, eps: float) -> float:
    eps = _check_eps(eps)
    return energy_terms_arr(u.data, eps, get_plan(u.spec))[0]


def energy_willmore(u: ScalarField3D, eps: float) -> float:
    eps = _check_eps(eps)
    return energy_terms_arr(u.data, eps, get_plan(u.spec))[1]


def energy_elastica(u: ScalarField3D, eps: float) -> EnergyBreakdown:
    eps = _check_eps(eps)
    per, wil = energy_terms_arr(u.data, eps, get_plan(u.spec))
    return EnergyBreakdown.of(per, wil)


def _phi_arr(u: np.ndarray, eps: float, plan: SpectralPlan) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi = eps*Lap u - (1/eps) W'(u), plus (W', W'') for reuse."""
    w1, w2 = _well_derivatives(u)
    phi = eps * plan.laplacian_arr(u) - w1 / eps
    return phi, w1, w2


def grad_perimeter(u: ScalarField3D, eps: float) -> ScalarField3D:
    eps = _check_eps(eps)
    plan = get_plan(u.spec)
    phi, _, _ = _phi_arr(u.data, eps, plan)
    return ScalarField3D(u.spec, -phi)


def grad_willmore(u: ScalarField3D, eps: float) -> ScalarField3D:
    eps = _check_eps(eps)
    plan = get_plan(u.spec)
    phi, _, w2 = _phi_arr(u.data, eps, plan)
    return ScalarField3D(u.spec, plan.laplacian_arr(phi) - w2 * phi / eps ** 2)


def grad_elastica(u: ScalarField3D, eps: float) -> ScalarField3D:
    eps = _check_eps(eps)
    plan = get_plan(u.spec)
    phi, _, w2 = _phi_arr(u.data, eps, plan)
    # grouped so the result is bitwise grad_perimeter + grad_willmore
    return ScalarField3D(u.spec, -phi + (plan.laplacian_arr(phi) - w2 * phi / eps ** 2))
