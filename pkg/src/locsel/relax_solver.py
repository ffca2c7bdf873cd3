"""Relaxed convex selection programs solved by projected gradient.

The binary selection problems relax to convex programs over simple polytopes:
boxes, capped simplices {0 <= z <= 1, sum z = m}, power-budget halfspaces and
per-coordinate coupling constraints z_k^E + z_k^J <= 1.  Every elementary set
has a closed-form Euclidean projection, so the feasible-set projection is
either direct (single capped simplex) or a Dykstra alternating-projection
sweep; no general LP/QP machinery is needed.

Solvers run projected gradient with Armijo backtracking along the projection
arc.  The eavesdropper problem is a convex minimization, the jammer and power
problems are concave maximizations, and the joint problem maximizes the
jammed bound subject to an eavesdropping-accuracy cap handled by a
logarithmic barrier (each barrier stage remains a concave maximization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import eav_metrics, jam_metrics
from .eav_metrics import SelectionVector
from .rng import SplitMix64
from .scenario import Scenario

__all__ = [
    "SolverOptions",
    "SolverReport",
    "FeasibleSet",
    "InfeasibleError",
    "RhoInfeasibleError",
    "SolverConvergenceError",
    "project_capped_simplex",
    "solve_relaxed_eav",
    "solve_relaxed_jam",
    "solve_relaxed_power",
    "solve_relaxed_joint",
]


class InfeasibleError(ValueError):
    """The requested constraint set is empty (or carries no usable information)."""


class RhoInfeasibleError(InfeasibleError):
    """No relaxed point satisfies the eavesdropping-accuracy cap f(z^E) < rho."""


class SolverConvergenceError(RuntimeError):
    """A projection or solve failed to reach its required residual."""


@dataclass(frozen=True)
class SolverOptions:
    """All tolerances are fixed here and exposed; defaults match the contracts."""

    max_iter: int = 10000
    rel_tol: float = 1e-8
    patience: int = 5                 # consecutive small relative changes to stop
    armijo_init: float = 1.0
    armijo_shrink: float = 0.5
    armijo_c: float = 1e-4
    min_step: float = 1e-18
    restarts: int = 20
    restart_seed: int = 0
    projection_tol: float = 1e-12
    dykstra_tol: float = 1e-10
    dykstra_max_sweeps: int = 10000
    residual_tol: float = 1e-8
    barrier_t_init: float = 1.0
    barrier_t_factor: float = 0.1
    barrier_t_min: float = 1e-6
    barrier_stage_max_iter: int = 2000


@dataclass(frozen=True)
class SolverReport:
    """Solution and convergence diagnostics of one relaxed solve."""

    solution: SelectionVector
    objective: float
    iterations: int
    final_step: float
    rel_change: float
    residual: float
    solution_eav: SelectionVector | None = None  # joint mode only
    eav_value: float | None = None               # f(z^E) at the solution
    power: np.ndarray | None = None              # q* for the power variant


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def project_capped_simplex(v, m: float, upper=None, tol: float = 1e-12) -> np.ndarray:
    """Euclidean projection onto {z : sum z = m, 0 <= z <= upper}.

    The KKT form is z_i = clip(v_i + tau, 0, upper_i); the running total
    g(tau) = sum clip(v + tau) is piecewise linear and nondecreasing, so tau
    is located on its breakpoint grid in one vectorized scan and polished by
    bisection until |sum z - m| <= tol.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    up = np.ones(n) if upper is None else np.asarray(upper, dtype=float)
    cap = float(up.sum())
    if m < -tol or m > cap + tol:
        raise InfeasibleError(f"required total {m} outside attainable range [0, {cap}]")
    m = min(max(m, 0.0), cap)
    if n == 0 or m == 0.0:
        return np.zeros(n)

    breaks = np.sort(np.concatenate([-v, up - v]))
    totals = np.clip(v[None, :] + breaks[:, None], 0.0, up).sum(axis=1)
    j = int(np.searchsorted(totals, m, side="left"))
    if j == 0:
        lo, hi = float(breaks[0]) - 1.0, float(breaks[0])
    elif j >= breaks.shape[0]:
        lo, hi = float(breaks[-1]), float(breaks[-1]) + 1.0
    else:
        lo, hi = float(breaks[j - 1]), float(breaks[j])
        slope = totals[j] - totals[j - 1]
        if slope > 0:  # interpolate inside the crossing segment
            tau = lo + (m - totals[j - 1]) * (hi - lo) / slope
            z = np.clip(v + tau, 0.0, up)
            if abs(float(z.sum()) - m) <= tol:
                return z
            if float(z.sum()) < m:
                lo = tau
            else:
                hi = tau

    z = np.clip(v + hi, 0.0, up)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        z = np.clip(v + mid, 0.0, up)
        total = float(z.sum())
        if abs(total - m) <= tol:
            return z
        if total < m:
            lo = mid
        else:
            hi = mid
    raise SolverConvergenceError(
        f"capped-simplex bisection stalled: |sum - m| = {abs(float(z.sum()) - m):.3e}")


class _Box:
    def __init__(self, lower, upper):
        self.lower, self.upper = lower, upper

    def project(self, x):
        return np.clip(x, self.lower, self.upper)

    def residual(self, x):
        return max(float(np.max(self.lower - x, initial=0.0)),
                   float(np.max(x - self.upper, initial=0.0)))


class _BlockSimplex:
    def __init__(self, indices, total, upper, tol):
        self.indices, self.total, self.upper, self.tol = indices, total, upper, tol

    def project(self, x):
        out = x.copy()
        out[self.indices] = project_capped_simplex(
            x[self.indices], self.total, upper=self.upper, tol=self.tol)
        return out

    def residual(self, x):
        sub = x[self.indices]
        return max(abs(float(sub.sum()) - self.total),
                   float(np.max(-sub, initial=0.0)),
                   float(np.max(sub - self.upper, initial=0.0)))


class _Halfspace:
    def __init__(self, coeffs, bound):
        self.coeffs, self.bound = coeffs, bound
        self.sq_norm = float(coeffs @ coeffs)

    def project(self, x):
        excess = float(self.coeffs @ x) - self.bound
        if excess <= 0 or self.sq_norm == 0:
            return x
        return x - (excess / self.sq_norm) * self.coeffs

    def residual(self, x):
        return max(0.0, float(self.coeffs @ x) - self.bound)


class _CouplingPairs:
    """x[a_k] + x[b_k] <= 1 for aligned index arrays (disjoint pairs)."""

    def __init__(self, a_idx, b_idx):
        self.a_idx, self.b_idx = a_idx, b_idx

    def project(self, x):
        out = x.copy()
        excess = out[self.a_idx] + out[self.b_idx] - 1.0
        hit = excess > 0
        if np.any(hit):
            shift = 0.5 * excess[hit]
            out[self.a_idx[hit]] -= shift
            out[self.b_idx[hit]] -= shift
        return out

    def residual(self, x):
        return float(np.max(x[self.a_idx] + x[self.b_idx] - 1.0, initial=0.0))


@dataclass(frozen=True)
class FeasibleSet:
    """Intersection of box, equality-sum, budget and coupling constraints."""

    n: int
    lower: np.ndarray
    upper: np.ndarray
    sums: tuple = ()        # ((indices, total), ...)
    budgets: tuple = ()     # ((coeffs, bound), ...)
    couplings: tuple = ()   # ((a_indices, b_indices), ...)
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        for indices, total in self.sums:
            lo_cap = float(self.lower[indices].sum())
            hi_cap = float(self.upper[indices].sum())
            if total < lo_cap - 1e-9 or total > hi_cap + 1e-9:
                raise InfeasibleError(
                    f"required total {total} outside attainable range "
                    f"[{lo_cap}, {hi_cap}] for a block of {len(indices)}")
        for coeffs, bound in self.budgets:
            if self._min_budget_usage(coeffs) > bound + 1e-9:
                raise InfeasibleError(
                    f"budget {bound} below the minimum achievable load "
                    f"{self._min_budget_usage(coeffs)}")

    def _min_budget_usage(self, coeffs: np.ndarray) -> float:
        # cheapest way to satisfy the equality sums whose block lies in the
        # budget's support: fill the smallest coefficients first
        usage = 0.0
        for indices, total in self.sums:
            sub = np.sort(coeffs[indices])
            remaining = total
            for c in sub:
                if remaining <= 0:
                    break
                amount = min(1.0, remaining)
                usage += amount * c
                remaining -= amount
        return usage

    def _elementary_sets(self):
        sets = [_Box(self.lower, self.upper)]
        for indices, total in self.sums:
            sets.append(_BlockSimplex(indices, total, self.upper[indices],
                                      self.options.projection_tol))
        for coeffs, bound in self.budgets:
            sets.append(_Halfspace(coeffs, bound))
        for a_idx, b_idx in self.couplings:
            sets.append(_CouplingPairs(a_idx, b_idx))
        return sets

    def max_residual(self, x: np.ndarray) -> float:
        return max((s.residual(x) for s in self._elementary_sets()), default=0.0)

    def _project_blocks(self, v: np.ndarray) -> np.ndarray:
        """Projection onto box and equality-sum blocks only (their product set)."""
        x = np.clip(v, self.lower, self.upper)
        for indices, total in self.sums:
            x[indices] = project_capped_simplex(
                v[indices], total, upper=self.upper[indices],
                tol=self.options.projection_tol)
        return x

    def project(self, v: np.ndarray) -> np.ndarray:
        """Euclidean projection; direct when possible, else a Dykstra sweep."""
        opts = self.options
        v = np.asarray(v, dtype=float)
        blocks = self._project_blocks(v)
        if not self.budgets and not self.couplings:
            return blocks
        # exact shortcut: the block projection lives in a superset, so if it
        # already satisfies the remaining constraints it is the projection
        slack_ok = all(h.residual(blocks) <= 1e-12 for h in (
            [_Halfspace(c, b) for c, b in self.budgets]
            + [_CouplingPairs(a, b) for a, b in self.couplings]))
        if slack_ok:
            return blocks

        sets = self._elementary_sets()
        x = np.asarray(v, dtype=float).copy()
        corrections = [np.zeros_like(x) for _ in sets]
        for _ in range(opts.dykstra_max_sweeps):
            x_prev = x
            for i, s in enumerate(sets):
                y = s.project(x + corrections[i])
                corrections[i] = x + corrections[i] - y
                x = y
            if float(np.max(np.abs(x - x_prev))) < opts.dykstra_tol:
                break
        else:
            raise SolverConvergenceError(
                f"alternating projection did not converge; residual {self.max_residual(x):.3e}")
        resid = self.max_residual(x)
        if resid > opts.residual_tol:
            raise SolverConvergenceError(f"projection residual {resid:.3e} exceeds tolerance")
        return x


# ---------------------------------------------------------------------------
# projected gradient engine (minimization; maximizers negate)
# ---------------------------------------------------------------------------


def _pgd_minimize(fun, grad, project, x0, opts: SolverOptions, max_iter: int | None = None):
    x = np.asarray(x0, dtype=float)
    fx = fun(x)
    iters = 0
    step = opts.armijo_init
    rel = math.inf
    streak = 0
    limit = opts.max_iter if max_iter is None else max_iter
    while iters < limit:
        iters += 1
        g = grad(x)
        step = opts.armijo_init
        moved = False
        x_new, f_new = x, fx
        while step >= opts.min_step:
            cand = project(x - step * g)
            f_cand = fun(cand)
            decrease = float(g @ (cand - x))
            if f_cand <= fx + opts.armijo_c * decrease and math.isfinite(f_cand):
                x_new, f_new = cand, f_cand
                moved = True
                break
            step *= opts.armijo_shrink
        if not moved:
            # no step size yields Armijo decrease: the iterate is stationary and
            # further iterations would repeat the identical line search
            rel = 0.0
            break
        rel = abs(fx - f_new) / max(abs(fx), 1e-300)
        x, fx = x_new, f_new
        streak = streak + 1 if rel < opts.rel_tol else 0
        if streak >= opts.patience:
            break
    return x, fx, iters, step, rel


def _finite_start(fun, feasible: FeasibleSet, x0: np.ndarray, opts: SolverOptions,
                  message: str) -> np.ndarray:
    """x0 if the objective is finite there, else seeded perturbed restarts."""
    if math.isfinite(fun(x0)):
        return x0
    rng = SplitMix64(opts.restart_seed)
    for _ in range(opts.restarts):
        probe = np.array([rng.uniform() for _ in range(x0.shape[0])])
        probe = feasible.project(probe)
        if math.isfinite(fun(probe)):
            return probe
    raise InfeasibleError(message)


# ---------------------------------------------------------------------------
# problem-specific solvers
# ---------------------------------------------------------------------------


def solve_relaxed_eav(s: Scenario, n_eav: int, opts: SolverOptions | None = None) -> SolverReport:
    """Minimize the eavesdropper objective over {sum z = n_eav, 0 <= z <= 1}.

    The reported objective lower-bounds the binary problem (within solver
    tolerance).  Starts at the uniform feasible point; if the information is
    singular there and at ``opts.restarts`` perturbed feasible points, raises
    :class:`InfeasibleError`.
    """
    opts = opts or SolverOptions()
    n = s.n_candidates
    if not 1 <= n_eav <= n:
        raise InfeasibleError(f"n_eav={n_eav} must lie in [1, {n}]")
    feasible = FeasibleSet(
        n=n, lower=np.zeros(n), upper=np.ones(n),
        sums=((np.arange(n), float(n_eav)),), options=opts)

    def fun(z):
        return eav_metrics._objective_fim_route(s, z)

    x0 = _finite_start(
        fun, feasible, np.full(n, n_eav / n), opts,
        "eavesdropper information is singular at the uniform start and at "
        f"{opts.restarts} perturbed restarts")
    x, _, iters, step, rel = _pgd_minimize(
        fun, lambda z: eav_metrics.eav_objective_gradient(s, z), feasible.project, x0, opts)
    resid = feasible.max_residual(x)
    if resid > opts.residual_tol:
        raise SolverConvergenceError(f"solution residual {resid:.3e} exceeds tolerance")
    return SolverReport(
        solution=SelectionVector.relaxed(x),
        objective=eav_metrics.eav_objective(s, x),
        iterations=iters, final_step=step, rel_change=rel, residual=resid)


def _jam_feasible_set(s: Scenario, n_jam: int, opts: SolverOptions) -> FeasibleSet:
    n = s.n_candidates
    return FeasibleSet(
        n=n, lower=np.zeros(n), upper=np.ones(n),
        sums=((np.arange(n), float(n_jam)),),
        budgets=((s.jam_powers, s.power_budget),),
        options=opts)


def solve_relaxed_jam(s: Scenario, n_jam: int, opts: SolverOptions | None = None) -> SolverReport:
    """Maximize the jammed objective over the budgeted capped simplex."""
    opts = opts or SolverOptions()
    n = s.n_candidates
    if not 1 <= n_jam <= n:
        raise InfeasibleError(f"n_jam={n_jam} must lie in [1, {n}]")
    feasible = _jam_feasible_set(s, n_jam, opts)

    x0 = feasible.project(np.full(n, n_jam / n))
    if math.isinf(jam_metrics.jam_objective(s, x0)):
        # the unjammed network is already unlocalizable; every selection attains +inf
        return SolverReport(
            solution=SelectionVector.relaxed(x0), objective=math.inf,
            iterations=0, final_step=0.0, rel_change=0.0,
            residual=feasible.max_residual(x0))

    x, _, iters, step, rel = _pgd_minimize(
        lambda z: -jam_metrics.jam_objective(s, z),
        lambda z: -jam_metrics.jam_objective_gradient(s, z),
        feasible.project, x0, opts)
    resid = feasible.max_residual(x)
    if resid > opts.residual_tol:
        raise SolverConvergenceError(f"solution residual {resid:.3e} exceeds tolerance")
    return SolverReport(
        solution=SelectionVector.relaxed(x),
        objective=jam_metrics.jam_objective(s, x),
        iterations=iters, final_step=step, rel_change=rel, residual=resid)


def solve_relaxed_power(s: Scenario, peak, budget: float,
                        opts: SolverOptions | None = None) -> SolverReport:
    """Maximize the jammed objective over {0 <= q <= peak, sum q <= budget}."""
    opts = opts or SolverOptions()
    peak = np.asarray(peak, dtype=float)
    if peak.shape != (s.n_candidates,) or np.any(peak < 0):
        raise InfeasibleError("peak powers must be a nonnegative length-N vector")
    if budget < 0:
        raise InfeasibleError("power budget must be nonnegative")
    feasible = FeasibleSet(
        n=s.n_candidates, lower=np.zeros(s.n_candidates), upper=peak,
        budgets=((np.ones(s.n_candidates), float(budget)),), options=opts)

    q0 = np.zeros(s.n_candidates)
    if math.isinf(jam_metrics.jam_objective_power(s, q0)):
        return SolverReport(
            solution=SelectionVector.relaxed(np.zeros(s.n_candidates)), objective=math.inf,
            iterations=0, final_step=0.0, rel_change=0.0, residual=0.0, power=q0)

    q, _, iters, step, rel = _pgd_minimize(
        lambda q_: -jam_metrics.jam_objective_power(s, np.maximum(q_, 0.0)),
        lambda q_: -jam_metrics.jam_power_gradient(s, np.maximum(q_, 0.0)),
        feasible.project, q0, opts)
    q = np.maximum(q, 0.0)
    resid = feasible.max_residual(q)
    if resid > opts.residual_tol:
        raise SolverConvergenceError(f"solution residual {resid:.3e} exceeds tolerance")
    peak_safe = np.where(peak > 0, peak, 1.0)
    return SolverReport(
        solution=SelectionVector.relaxed(np.clip(q / peak_safe, 0.0, 1.0)),
        objective=jam_metrics.jam_objective_power(s, q),
        iterations=iters, final_step=step, rel_change=rel, residual=resid, power=q)


def solve_relaxed_joint(s: Scenario, n_eav: int, n_jam: int, rho: float,
                        opts: SolverOptions | None = None) -> SolverReport:
    """Maximize the jammed bound subject to f(z^E) <= rho over the joint polytope.

    The accuracy cap is handled by a logarithmic barrier, maximize
    f_jam(z^J) + t * log(rho - f_eav(z^E)), with t swept down geometrically;
    every stage remains a concave maximization.  When n_eav + n_jam equals the
    candidate count the eavesdropper vector is substituted as z^E = 1 - z^J
    and the problem collapses to a single block.
    """
    opts = opts or SolverOptions()
    n = s.n_candidates
    if not (1 <= n_eav <= n and 1 <= n_jam <= n):
        raise InfeasibleError("n_eav and n_jam must lie in [1, N]")
    if n_eav + n_jam > n:
        raise InfeasibleError(f"n_eav + n_jam = {n_eav + n_jam} exceeds {n} candidates")

    if n_eav + n_jam == n:
        return _solve_joint_substitution(s, n_eav, n_jam, rho, opts)
    return _solve_joint_general(s, n_eav, n_jam, rho, opts)


def _barrier_stages(opts: SolverOptions):
    t = opts.barrier_t_init
    while t >= opts.barrier_t_min:
        yield t
        t *= opts.barrier_t_factor


def _joint_report(s, z_jam, z_eav, iters, step, rel, resid, opts) -> SolverReport:
    if resid > opts.residual_tol:
        raise SolverConvergenceError(f"solution residual {resid:.3e} exceeds tolerance")
    clip = lambda v: np.clip(v, 0.0, 1.0)
    return SolverReport(
        solution=SelectionVector.relaxed(clip(z_jam)),
        objective=jam_metrics.jam_objective(s, z_jam),
        iterations=iters, final_step=step, rel_change=rel, residual=resid,
        solution_eav=SelectionVector.relaxed(clip(z_eav)),
        eav_value=eav_metrics.eav_objective(s, z_eav))


def _solve_joint_substitution(s, n_eav, n_jam, rho, opts) -> SolverReport:
    n = s.n_candidates
    feasible = _jam_feasible_set(s, n_jam, opts)
    x = feasible.project(np.full(n, n_jam / n))
    if math.isinf(jam_metrics.jam_objective(s, x)):
        # unjammed network already unlocalizable: every selection attains +inf
        return _joint_report(s, x, 1.0 - x, 0, 0.0, 0.0,
                             feasible.max_residual(x), opts)

    if math.isinf(rho):
        rep = solve_relaxed_jam(s, n_jam, opts)
        z = rep.solution.weights
        return _joint_report(s, z, 1.0 - z, rep.iterations, rep.final_step,
                             rep.rel_change, feasible.max_residual(z), opts)

    def eav_at(z):
        return eav_metrics._objective_fim_route(s, 1.0 - z)

    def eav_optimal_probe():
        try:
            rep = solve_relaxed_eav(s, n - n_jam, opts)
        except InfeasibleError:
            return None
        return feasible.project(1.0 - rep.solution.weights)

    x = _rho_feasible_start(eav_at, feasible, x, rho, opts, fallback=eav_optimal_probe)
    total_iters, step, rel = 0, 0.0, math.inf
    for t in _barrier_stages(opts):
        def fun(z, t=t):
            margin = rho - eav_at(z)
            if margin <= 0:
                return math.inf
            fj = jam_metrics.jam_objective(s, z)
            if math.isinf(fj):
                return -math.inf
            return -(fj + t * math.log(margin))

        def grad(z, t=t):
            margin = rho - eav_at(z)
            g_eav = eav_metrics.eav_objective_gradient(s, 1.0 - z)
            return -(jam_metrics.jam_objective_gradient(s, z) + (t / margin) * g_eav)

        x, _, iters, step, rel = _pgd_minimize(
            fun, grad, feasible.project, x, opts, max_iter=opts.barrier_stage_max_iter)
        total_iters += iters
    return _joint_report(s, x, 1.0 - x, total_iters, step, rel,
                         feasible.max_residual(x), opts)


def _rho_feasible_start(eav_fun, feasible, x0, rho, opts, fallback=None) -> np.ndarray:
    """First strictly rho-feasible point among: x0, an eavesdropper-optimal
    completion (when a fallback builder is supplied), and seeded random probes."""
    if eav_fun(x0) < rho:
        return x0
    if fallback is not None:
        probe = fallback()
        if probe is not None and eav_fun(probe) < rho:
            return probe
    rng = SplitMix64(opts.restart_seed)
    for _ in range(opts.restarts):
        probe = feasible.project(np.array([rng.uniform() for _ in range(x0.shape[0])]))
        if eav_fun(probe) < rho:
            return probe
    raise RhoInfeasibleError(
        f"no relaxed point with eavesdropper objective below rho={rho} was found "
        f"after {opts.restarts} restarts")


def _solve_joint_general(s, n_eav, n_jam, rho, opts) -> SolverReport:
    n = s.n_candidates
    e_idx, j_idx = np.arange(n), np.arange(n, 2 * n)
    budget_coeffs = np.concatenate([np.zeros(n), s.jam_powers])
    feasible = FeasibleSet(
        n=2 * n, lower=np.zeros(2 * n), upper=np.ones(2 * n),
        sums=((e_idx, float(n_eav)), (j_idx, float(n_jam))),
        budgets=((budget_coeffs, s.power_budget),),
        couplings=((e_idx, j_idx),),
        options=opts)

    x = feasible.project(np.concatenate([np.full(n, n_eav / n), np.full(n, n_jam / n)]))
    if math.isinf(jam_metrics.jam_objective(s, x[n:])):
        return _joint_report(s, x[n:], x[:n], 0, 0.0, 0.0,
                             feasible.max_residual(x), opts)

    def eav_part(x_):
        return eav_metrics._objective_fim_route(s, x_[:n])

    if math.isinf(rho):
        def fun(x_):
            return -jam_metrics.jam_objective(s, x_[n:])

        def grad(x_):
            return np.concatenate(
                [np.zeros(n), -jam_metrics.jam_objective_gradient(s, x_[n:])])

        x, _, iters, step, rel = _pgd_minimize(fun, grad, feasible.project, x, opts)
        return _joint_report(s, x[n:], x[:n], iters, step, rel,
                             feasible.max_residual(x), opts)

    def eav_optimal_probe():
        try:
            rep = solve_relaxed_eav(s, n_eav, opts)
        except InfeasibleError:
            return None
        z_e = rep.solution.weights
        z_j = project_capped_simplex(np.full(n, n_jam / n), float(n_jam),
                                     upper=1.0 - z_e, tol=opts.projection_tol)
        return feasible.project(np.concatenate([z_e, z_j]))

    x = _rho_feasible_start(eav_part, feasible, x, rho, opts, fallback=eav_optimal_probe)
    total_iters, step, rel = 0, 0.0, math.inf
    for t in _barrier_stages(opts):
        def fun(x_, t=t):
            margin = rho - eav_part(x_)
            if margin <= 0:
                return math.inf
            return -(jam_metrics.jam_objective(s, x_[n:]) + t * math.log(margin))

        def grad(x_, t=t):
            # minimizing -(f_jam + t log(rho - f_eav)): the eavesdropper block
            # gets +t grad_f_eav / margin (grad_f_eav <= 0, so descent raises z^E)
            margin = rho - eav_part(x_)
            g_e = (t / margin) * eav_metrics.eav_objective_gradient(s, x_[:n])
            g_j = -jam_metrics.jam_objective_gradient(s, x_[n:])
            return np.concatenate([g_e, g_j])

        x, _, iters, step, rel = _pgd_minimize(
            fun, grad, feasible.project, x, opts, max_iter=opts.barrier_stage_max_iter)
        total_iters += iters
    return _joint_report(s, x[n:], x[:n], total_iters, step, rel,
                         feasible.max_residual(x), opts)
