"""Periodic spectral differential operators and implicit-solve preconditioners.

All operators are Fourier multipliers on the unit cube, with frequencies in
cycles per unit length, xi_axis in {0, 1, ..., floor(n/2), -floor((n-1)/2),
..., -1}, so the Laplacian symbol is -4 pi^2 |xi|^2.  On even-sized axes
the Nyquist frequency is zeroed in the derivative tables: the first
derivative of the Nyquist mode is not representable on the grid, and using
one consistent table everywhere makes div(grad f) equal the Laplacian to
machine precision and every implicit solve an exact inverse of its forward
operator.

Implicit solves used by the iteration schemes, as frequency symbols
(k2 = |xi|^2):

    elastica step   (I - eps*tau*Lap + tau*eps*Lap^2)^-1
                    = 1 / (1 + 4 tau eps pi^2 k2 + 16 tau eps pi^4 k2^2)
    screened        (I - a*Lap)^-1        = 1 / (1 + 4 a pi^2 k2)
    biharmonic      (I + b*Lap^2)^-1      = 1 / (1 + 16 b pi^4 k2^2)
    vector damping  (I + c - c*Lap)^-1    = 1 / (1 + c + 4 c pi^2 k2)

Symbol tables are cached per plan and parameter tuple; per-iteration cost
is dominated by the transforms.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as _fft

from .errors import ConfigError
from .grid import GridSpec, ScalarField3D, VectorField3D

_FFT_WORKERS = 1

_PI2 = np.pi ** 2
_PI4 = np.pi ** 4


def set_fft_workers(n: int) -> None:
    """Worker threads for the transforms; 1 is the deterministic reference mode."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


def _derivative_freqs(n: int) -> np.ndarray:
    xi = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        xi[n // 2] = 0.0
    return xi


def _derivative_rfreqs(n: int) -> np.ndarray:
    xi = np.fft.rfftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        xi[-1] = 0.0
    return xi


class SpectralPlan:
    """Frequency grids and cached symbol tables for one GridSpec.

    Immutable after construction; shareable across threads.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        nx, ny, nz = spec.shape
        self.kx = _derivative_freqs(nx)[:, None, None]
        self.ky = _derivative_freqs(ny)[None, :, None]
        self.kz = _derivative_rfreqs(nz)[None, None, :]
        self.k2 = self.kx ** 2 + self.ky ** 2 + self.kz ** 2
        self._symbols: dict[tuple, np.ndarray] = {}

    # -- transforms ---------------------------------------------------------

    def forward(self, a: np.ndarray) -> np.ndarray:
        return _fft.rfftn(a, workers=_FFT_WORKERS)

    def inverse(self, spectrum: np.ndarray) -> np.ndarray:
        return _fft.irfftn(spectrum, s=self.spec.shape, workers=_FFT_WORKERS)

    # -- differential operators on raw arrays -------------------------------

    def laplacian_arr(self, a: np.ndarray) -> np.ndarray:
        return self.inverse(-4.0 * _PI2 * self.k2 * self.forward(a))

    def gradient_arrs(self, a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        spectrum = self.forward(a)
        two_pi_i = 2j * np.pi
        return (self.inverse(two_pi_i * self.kx * spectrum),
                self.inverse(two_pi_i * self.ky * spectrum),
                self.inverse(two_pi_i * self.kz * spectrum))

    def divergence_arr(self, wx: np.ndarray, wy: np.ndarray, wz: np.ndarray) -> np.ndarray:
        two_pi_i = 2j * np.pi
        spectrum = (two_pi_i * self.kx * self.forward(wx)
                    + two_pi_i * self.ky * self.forward(wy)
                    + two_pi_i * self.kz * self.forward(wz))
        return self.inverse(spectrum)

    # -- implicit solves -----------------------------------------------------

    def _symbol(self, key: tuple) -> np.ndarray:
        table = self._symbols.get(key)
        if table is None:
            kind = key[0]
            if kind == "elastica":
                _, eps, tau = key
                table = 1.0 / (1.0 + 4.0 * tau * eps * _PI2 * self.k2
                               + 16.0 * tau * eps * _PI4 * self.k2 ** 2)
            elif kind == "screened":
                _, a = key
                table = 1.0 / (1.0 + 4.0 * a * _PI2 * self.k2)
            elif kind == "biharmonic":
                _, b = key
                table = 1.0 / (1.0 + 16.0 * b * _PI4 * self.k2 ** 2)
            elif kind == "damped":
                _, c = key
                table = 1.0 / (1.0 + c + 4.0 * c * _PI2 * self.k2)
            else:  # pragma: no cover
                raise KeyError(kind)
            self._symbols[key] = table
        return table

    def apply_symbol(self, a: np.ndarray, key: tuple) -> np.ndarray:
        return self.inverse(self._symbol(key) * self.forward(a))

    def solve_elastica_implicit(self, a: np.ndarray, eps: float, tau: float) -> np.ndarray:
        if eps <= 0 or tau <= 0:
            raise ConfigError("eps and tau must be > 0")
        return self.apply_symbol(a, ("elastica", float(eps), float(tau)))

    def solve_screened(self, a: np.ndarray, coeff: float) -> np.ndarray:
        if coeff <= 0:
            raise ConfigError("screening coefficient must be > 0")
        return self.apply_symbol(a, ("screened", float(coeff)))

    def solve_biharmonic(self, a: np.ndarray, coeff: float) -> np.ndarray:
        if coeff <= 0:
            raise ConfigError("biharmonic coefficient must be > 0")
        return self.apply_symbol(a, ("biharmonic", float(coeff)))

    def solve_damped_vector(self, w: np.ndarray, coeff: float) -> np.ndarray:
        if coeff <= 0:
            raise ConfigError("damping coefficient must be > 0")
        key = ("damped", float(coeff))
        return np.stack([self.apply_symbol(w[a], key) for a in range(3)])


_PLANS: dict[GridSpec, SpectralPlan] = {}


def get_plan(spec: GridSpec) -> SpectralPlan:
    plan = _PLANS.get(spec)
    if plan is None:
        plan = _PLANS[spec] = SpectralPlan(spec)
    return plan


# ---------------------------------------------------------------------------
# Field-level wrappers
# ---------------------------------------------------------------------------

def laplacian(f: ScalarField3D) -> ScalarField3D:
    return ScalarField3D(f.spec, get_plan(f.spec).laplacian_arr(f.data))


def gradient(f: ScalarField3D) -> VectorField3D:
    gx, gy, gz = get_plan(f.spec).gradient_arrs(f.data)
    return VectorField3D(f.spec, np.stack([gx, gy, gz]))


def divergence(w: VectorField3D) -> ScalarField3D:
    plan = get_plan(w.spec)
    return ScalarField3D(w.spec, plan.divergence_arr(*w.data))


def precondition_pgdm(f: ScalarField3D, eps: float, tau: float) -> ScalarField3D:
    """(I - eps*tau*Lap + tau*eps*Lap^2)^-1 f, the elastica implicit solve."""
    return ScalarField3D(f.spec, get_plan(f.spec).solve_elastica_implicit(f.data, eps, tau))


def precondition_admm_u(f: ScalarField3D, tau: float, rho: float) -> ScalarField3D:
    """(I - tau*rho*Lap)^-1 f."""
    if tau <= 0 or rho <= 0:
        raise ConfigError("tau and rho must be > 0")
    return ScalarField3D(f.spec, get_plan(f.spec).solve_screened(f.data, tau * rho))


def precondition_admm_w(w: VectorField3D, eps: float, tau: float) -> VectorField3D:
    """Componentwise (I + eps*tau - eps*tau*Lap)^-1 w."""
    if tau <= 0 or eps <= 0:
        raise ConfigError("eps and tau must be > 0")
    plan = get_plan(w.spec)
    return VectorField3D(w.spec, plan.solve_damped_vector(w.data, eps * tau))
