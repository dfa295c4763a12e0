"""Projected iteration loops for the three formulations, plus the ADMM sweep.

Projected gradient descent (one linearised pass per time step): project the
iterate onto the obstacle box, evaluate every nonlinear term at the
projected field, then apply the formulation's implicit spectral solve:

    perimeter  u+ = (I - eps*tau*Lap)^-1 (v - (tau/eps) W'(v))
    willmore   u+ = (I + tau*eps*Lap^2)^-1
                    (v + (tau/eps) Lap W'(v) + (tau/eps) W''(v) Lap v
                       - (tau/eps^3) W'(v) W''(v))
    elastica   u+ = (I - eps*tau*Lap + tau*eps*Lap^2)^-1
                    (v - (tau/eps) W'(v) + (tau/eps) Lap W'(v)
                       + (tau/eps) W''(v) Lap v - (tau/eps^3) W'(v) W''(v))

with v the projected iterate, i.e. the explicit elastica terms are the
perimeter ones plus the willmore ones, all signs those of the semi-implicit
discretisation of the descent flow u_t = -grad E(u).

The splitting method (elastica only) introduces w ~ grad u with multiplier
lam and penalty rho:

    u+ = (I - tau*rho*Lap)^-1 [v + tau(-rho div w + div lam - (1/eps) W'(v)
             + (1/eps)(div w) W''(v) - (1/eps^3) W'(v) W''(v))]
    w+ = (I + eps*tau - eps*tau*Lap)^-1 [w + tau(-(1/eps) grad W'(u+)
             - rho (w - grad u+ - lam/rho))]
    lam+ = lam + rho (grad u+ - w+)

The well/divergence coupling of the w subproblem enters as the source term
-(1/eps) grad W'(u+), the variational derivative of its cross term; an
explicit W'(u) Lap w coupling is unconditionally unstable at the time
steps of interest (amplification ~ |W'|/eps^2 per step) and is not used.

Stopping is by relative L2 change of u, by absolute change of the
formulation's energy, or by the iteration cap, whichever fires first.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import ObstaclePair, SliceStack, assemble_constraints
from .energies import EnergyBreakdown, energy_terms_arr
from .errors import ConfigError, DivergenceError
from .grid import BinaryVolume, ScalarField3D, VectorField3D
from .phasefield import PhaseFieldParams, init_phase_field, _well_derivatives
from .spectral import SpectralPlan, get_plan

logger = logging.getLogger(__name__)

FORMULATIONS = ("perimeter", "willmore", "elastica")
METHODS = ("pgdm", "admm")

_TINY = 1e-30


@dataclass
class SolverConfig:
    formulation: str
    eps: float
    tau: float
    method: str = "pgdm"
    rho: float = 0.0
    max_iters: int = 2000
    tol_rel: float = 1e-4
    tol_energy: float | None = None
    obstacle_mode: str = "indicator"
    record_trace: bool = False

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ConfigError(f"formulation must be one of {FORMULATIONS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if not (self.eps > 0 and self.tau > 0):
            raise ConfigError("eps and tau must be > 0")
        if self.method == "admm":
            if self.formulation != "elastica":
                raise ConfigError("the splitting method is defined for the "
                                  "elastica formulation only")
            if not self.rho > 0:
                raise ConfigError("rho must be > 0 for the splitting method")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be >= 0")
        if self.tol_rel < 0:
            raise ConfigError("tol_rel must be >= 0")
        if self.tol_energy is not None and self.tol_energy < 0:
            raise ConfigError("tol_energy must be >= 0")
        if self.obstacle_mode not in ("indicator", "exact"):
            raise ConfigError("obstacle_mode must be 'indicator' or 'exact'")


@dataclass
class TraceRecord:
    iteration: int
    energy: EnergyBreakdown
    rel_err: float
    wall_ms: float


@dataclass
class SolverRun:
    config: SolverConfig
    final_u: ScalarField3D
    iters_done: int
    trace: list[TraceRecord] = field(default_factory=list)
    termination_reason: str = "max_iters"


# ---------------------------------------------------------------------------
# Single steps (array level)
# ---------------------------------------------------------------------------

def _clamp(u: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.maximum(np.minimum(u, upper), lower)


def _pgdm_update(v: np.ndarray, cfg: SolverConfig, plan: SpectralPlan) -> np.ndarray:
    """One implicit step from the already-projected field v."""
    eps, tau = cfg.eps, cfg.tau
    w1, w2 = _well_derivatives(v)
    if cfg.formulation == "perimeter":
        rhs = v - (tau / eps) * w1
        return plan.solve_screened(rhs, eps * tau)
    lap_v = plan.laplacian_arr(v)
    lap_w1 = plan.laplacian_arr(w1)
    if cfg.formulation == "willmore":
        rhs = (v + (tau / eps) * lap_w1 + (tau / eps) * w2 * lap_v
               - (tau / eps ** 3) * w1 * w2)
        return plan.solve_biharmonic(rhs, tau * eps)
    rhs = (v - (tau / eps) * w1 + (tau / eps) * lap_w1
           + (tau / eps) * w2 * lap_v - (tau / eps ** 3) * w1 * w2)
    return plan.solve_elastica_implicit(rhs, eps, tau)


def _admm_update(v: np.ndarray, w: np.ndarray, lam: np.ndarray,
                 cfg: SolverConfig, plan: SpectralPlan
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One splitting step from the already-projected field v."""
    eps, tau, rho = cfg.eps, cfg.tau, cfg.rho
    w1, w2 = _well_derivatives(v)
    div_w = plan.divergence_arr(*w)
    div_lam = plan.divergence_arr(*lam)
    rhs_u = v + tau * (-rho * div_w + div_lam - w1 / eps
                       + div_w * w2 / eps - w1 * w2 / eps ** 3)
    u_next = plan.solve_screened(rhs_u, tau * rho)

    w1_next = _well_derivatives(u_next)[0]
    grad_u = np.stack(plan.gradient_arrs(u_next))
    grad_w1 = np.stack(plan.gradient_arrs(w1_next))
    rhs_w = w + tau * (-grad_w1 / eps - rho * (w - grad_u - lam / rho))
    w_next = plan.solve_damped_vector(rhs_w, eps * tau)

    lam_next = lam + rho * (grad_u - w_next)
    return u_next, w_next, lam_next


def pgdm_step(u: ScalarField3D, obst: ObstaclePair, cfg: SolverConfig,
              plan: SpectralPlan | None = None) -> ScalarField3D:
    """Project onto the obstacle box, then one implicit flow step."""
    plan = plan or get_plan(u.spec)
    v = _clamp(u.data, obst.lower.data, obst.upper.data)
    out = _pgdm_update(v, cfg, plan)
    if not np.isfinite(out).all():
        raise DivergenceError(0)
    return ScalarField3D(u.spec, out)


def admm_step(state: tuple[ScalarField3D, VectorField3D, VectorField3D],
              obst: ObstaclePair, cfg: SolverConfig,
              plan: SpectralPlan | None = None
              ) -> tuple[ScalarField3D, VectorField3D, VectorField3D]:
    """Project u, then one splitting step updating (u, w, lam)."""
    u, w, lam = state
    if cfg.method != "admm":
        raise ConfigError("admm_step requires method='admm'")
    plan = plan or get_plan(u.spec)
    v = _clamp(u.data, obst.lower.data, obst.upper.data)
    u_next, w_next, lam_next = _admm_update(v, w.data, lam.data, cfg, plan)
    if not (np.isfinite(u_next).all() and np.isfinite(w_next).all()
            and np.isfinite(lam_next).all()):
        raise DivergenceError(0)
    return (ScalarField3D(u.spec, u_next), VectorField3D(u.spec, w_next),
            VectorField3D(u.spec, lam_next))


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

def _stopping_energy(cfg: SolverConfig, terms: tuple[float, float]) -> float:
    if cfg.formulation == "perimeter":
        return terms[0]
    if cfg.formulation == "willmore":
        return terms[1]
    return terms[0] + terms[1]


def _as_stack(source: SliceStack | BinaryVolume) -> SliceStack:
    if isinstance(source, SliceStack):
        return source
    return SliceStack.from_volume(source, range(source.spec.nz), axis=2)


def run(source: SliceStack | BinaryVolume, cfg: SolverConfig, *,
        alpha: float = 0.5, erosion: int = 0, debug: bool = False) -> SolverRun:
    """Initialise from slice data, iterate until a stopping rule fires.

    The returned field is projected once more so the constraints hold at
    the output exactly.  With debug=True the box constraints are asserted
    after every projection.
    """
    stack = _as_stack(source)
    params = PhaseFieldParams(cfg.eps, alpha)
    e0, obst, _ = assemble_constraints(stack, params, mode=cfg.obstacle_mode,
                                       erosion=erosion)
    u0 = init_phase_field(e0, params)
    return run_from_state(u0, obst, cfg, debug=debug)


def run_from_state(u0: ScalarField3D, obst: ObstaclePair, cfg: SolverConfig, *,
                   debug: bool = False) -> SolverRun:
    """Iterate from an explicit initial field and obstacle pair."""
    plan = get_plan(u0.spec)
    lower, upper = obst.lower.data, obst.upper.data
    u = u0.data
    w = lam = None
    if cfg.method == "admm":
        w = np.stack(plan.gradient_arrs(u))
        lam = w.copy()

    need_energy = cfg.record_trace or cfg.tol_energy is not None
    trace: list[TraceRecord] = []
    prev_energy = None
    reason = "max_iters"
    iters_done = 0

    l2_prev = np.sqrt(np.sum(u * u) * plan.spec.voxel_volume)
    for k in range(cfg.max_iters):
        t0 = time.perf_counter()
        v = _clamp(u, lower, upper)
        if debug:
            assert np.all(v >= lower) and np.all(v <= upper)
        if cfg.method == "admm":
            u_next, w, lam = _admm_update(v, w, lam, cfg, plan)
            finite = (np.isfinite(u_next).all() and np.isfinite(w).all()
                      and np.isfinite(lam).all())
        else:
            u_next = _pgdm_update(v, cfg, plan)
            finite = np.isfinite(u_next).all()
        if not finite:
            raise DivergenceError(k + 1)

        diff = u_next - u
        rel_err = float(np.sqrt(np.sum(diff * diff) * plan.spec.voxel_volume)
                        / max(l2_prev, _TINY))
        u = u_next
        l2_prev = np.sqrt(np.sum(u * u) * plan.spec.voxel_volume)
        iters_done = k + 1
        wall_ms = (time.perf_counter() - t0) * 1e3

        if need_energy:
            terms = energy_terms_arr(u, cfg.eps, plan)
            if cfg.record_trace:
                trace.append(TraceRecord(iters_done, EnergyBreakdown.of(*terms),
                                         rel_err, wall_ms))
            if cfg.tol_energy is not None and prev_energy is not None:
                if abs(_stopping_energy(cfg, terms) - prev_energy) < cfg.tol_energy:
                    reason = "energy_tol"
                    break
            if cfg.tol_energy is not None:
                prev_energy = _stopping_energy(cfg, terms)
        if cfg.tol_rel > 0 and rel_err < cfg.tol_rel:
            reason = "rel_tol"
            break

    final = ScalarField3D(u0.spec, _clamp(u, lower, upper))
    return SolverRun(cfg, final, iters_done, trace, reason)


# ---------------------------------------------------------------------------
# Parameter rules and trace serialisation
# ---------------------------------------------------------------------------

def parse_eps_rule(rule: str):
    """'c/N' -> callable mapping the per-axis resolution N to eps."""
    m = re.fullmatch(r"\s*([0-9.eE+~-]+)\s*/\s*N\s*", rule)
    if not m:
        raise ConfigError(f"eps rule must look like 'c/N', got {rule!r}")
    c = float(m.group(1))
    return lambda n: c / n


def parse_tau_rule(rule: str):
    """'eps^p' or 'c*eps^p' -> callable mapping eps to tau."""
    m = re.fullmatch(r"\s*(?:([0-9.eE+~-]+)\s*\*\s*)?eps\s*\^\s*([0-9.eE+-]+)\s*",
                     rule)
    if not m:
        raise ConfigError(f"tau rule must look like 'eps^p' or 'c*eps^p', got {rule!r}")
    c = float(m.group(1)) if m.group(1) else 1.0
    p = float(m.group(2))
    return lambda eps: c * eps ** p


def write_trace_csv(path, result: SolverRun) -> None:
    lines = ["iter,perimeter,willmore,total,rel_err,wall_ms"]
    for rec in result.trace:
        e = rec.energy
        lines.append(f"{rec.iteration},{float(e.perimeter_term)!r},"
                     f"{float(e.willmore_term)!r},{float(e.total)!r},"
                     f"{float(rec.rel_err)!r},{float(rec.wall_ms)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Sensitivity sweep for the splitting method
# ---------------------------------------------------------------------------

@dataclass
class SweepCell:
    rho: float
    eps_n: float
    tau_rule: str
    passed: int
    sigma_gc_best: float
    note: str = ""


def _cell_sigma_checks(stack: SliceStack, rho: float, eps: float, tau: float,
                       criterion: float, alpha: float, mode: str,
                       max_iters: int, check_every: int) -> tuple[int, float, str]:
    from .mesh import extract_isosurface
    from .curvature import curvature_report

    cfg = SolverConfig("elastica", eps, tau, method="admm", rho=rho,
                       max_iters=max_iters, tol_rel=0.0, obstacle_mode=mode)
    params = PhaseFieldParams(eps, alpha)
    e0, obst, _ = assemble_constraints(stack, params, mode=mode)
    u0 = init_phase_field(e0, params)
    plan = get_plan(u0.spec)
    lower, upper = obst.lower.data, obst.upper.data
    u = u0.data
    w = np.stack(plan.gradient_arrs(u))
    lam = w.copy()

    best = np.inf
    passed = 0
    note = ""

    def check(u_arr) -> None:
        nonlocal best, passed
        mesh = extract_isosurface(ScalarField3D(plan.spec, u_arr), 0.5)
        if len(mesh.triangles) == 0:
            return
        report = curvature_report(mesh, bins=32)
        if report.sigma_gc < best:
            best = report.sigma_gc
        if report.sigma_gc < criterion:
            passed = 1

    for k in range(max_iters):
        v = _clamp(u, lower, upper)
        u, w, lam = _admm_update(v, w, lam, cfg, plan)
        if not (np.isfinite(u).all() and np.isfinite(w).all()
                and np.isfinite(lam).all()):
            note = f"diverged@{k + 1}"
            break
        if (k + 1) % check_every == 0 or k + 1 == max_iters:
            check(u)
            if passed:
                break
    return passed, (best if np.isfinite(best) else float("nan")), note


def sweep_admm(stack: SliceStack, rho_grid, epsn_grid, tau_rule: str,
               criterion_sigma_gc: float, *, alpha: float = 0.5,
               mode: str = "indicator", max_iters: int = 300,
               check_every: int = 25, n_jobs: int = 1) -> list[SweepCell]:
    """Binary pass/fail map over (penalty, eps*N) for the splitting method.

    A cell passes if any checked iterate's extracted mesh has a Gaussian
    curvature standard deviation below the criterion; diverged cells are
    marked failed and the sweep continues.
    """
    rho_grid = [float(r) for r in rho_grid]
    epsn_grid = [float(e) for e in epsn_grid]
    if not rho_grid or not epsn_grid:
        raise ConfigError("sweep grids must be non-empty")
    parse_tau_rule(tau_rule)  # fail fast on a malformed rule
    n = stack.grid.shape[stack.axis]
    jobs = [(rho, epsn) for epsn in epsn_grid for rho in rho_grid]
    worker = _SweepWorker(stack, n, tau_rule, criterion_sigma_gc, alpha, mode,
                          max_iters, check_every)
    if n_jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            cells = list(pool.map(worker, jobs))
    else:
        cells = [worker(j) for j in jobs]
    for c in cells:
        if c.note:
            logger.warning("sweep cell rho=%g epsN=%g: %s", c.rho, c.eps_n, c.note)
    return cells


class _SweepWorker:
    """Picklable cell runner for process pools."""

    def __init__(self, stack, n, tau_rule, criterion, alpha, mode,
                 max_iters, check_every):
        self.stack = stack
        self.n = n
        self.tau_rule = tau_rule
        self.criterion = criterion
        self.alpha = alpha
        self.mode = mode
        self.max_iters = max_iters
        self.check_every = check_every

    def __call__(self, args) -> SweepCell:
        rho, epsn = args
        eps = epsn / self.n
        tau = parse_tau_rule(self.tau_rule)(eps)
        try:
            passed, best, note = _cell_sigma_checks(
                self.stack, rho, eps, tau, self.criterion, self.alpha,
                self.mode, self.max_iters, self.check_every)
        except DivergenceError as exc:
            passed, best, note = 0, float("nan"), f"diverged@{exc.iteration}"
        return SweepCell(rho, epsn, self.tau_rule, passed, best, note)


def write_sweep_csv(path, cells: list[SweepCell]) -> None:
    lines = ["rho,epsN,tau_rule,pass,sigma_gc_best"]
    for c in cells:
        lines.append(f"{float(c.rho)!r},{float(c.eps_n)!r},{c.tau_rule},"
                     f"{c.passed},{float(c.sigma_gc_best)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
