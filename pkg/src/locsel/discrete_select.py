"""Binary selection: rounding, swap local search, exhaustive search, robust shifts.

The relaxed solvers return fractional selections; this module turns them into
binary ones.  Largest-m rounding keeps the m heaviest weights (ties to the
lowest index).  The swap search starts from a binary vector and repeatedly
evaluates all m(N-m) single exchanges of a selected and an unselected
position, moving to the best one until the improvement falls below a relative
threshold mu, the sweep budget is exhausted, or the start was already within
mu of the relaxed bound.  An exhaustive enumerator provides the exact optimum
for small instances.

Robust (worst-case) variants reduce to the nominal problems on a shifted
scenario: the eavesdropper's adversary removes intensity (lam_hat - delta),
the jammer's adversary adds it (lam_hat + delta), both consequences of the
objectives being monotone in the link intensities.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import eav_metrics, jam_metrics
from .eav_metrics import SelectionVector, as_weights
from .relax_solver import (InfeasibleError, SolverOptions, SolverReport,
                           solve_relaxed_eav, solve_relaxed_jam, solve_relaxed_joint)
from .rng import SplitMix64
from .scenario import Scenario, ScenarioValidationError, UncertaintyModel

__all__ = [
    "SelectionOutcome",
    "PipelineParams",
    "CapExceededError",
    "round_largest_m",
    "swap_search",
    "exhaustive_select",
    "robust_eav_effective",
    "robust_jam_effective",
    "uncertainty_from_epsilon",
    "uncertainty_from_kappa",
    "select_pipeline",
]


class CapExceededError(ValueError):
    """Exhaustive enumeration refused: too many subsets."""


@dataclass(frozen=True)
class SelectionOutcome:
    """One algorithm's binary (or relaxed-bound) selection and its value."""

    selection: SelectionVector
    objective: float
    algorithm: str                       # relaxed-bound | largest-m | swap | exhaustive | swap-random
    swaps: int = 0
    feasible: bool = True
    selection_eav: SelectionVector | None = None  # joint mode
    wall_ms: float = 0.0

    def __post_init__(self):
        if (self.selection_eav is not None
                and self.selection.mode == "binary"
                and self.selection_eav.mode == "binary"):
            overlap = self.selection.weights * self.selection_eav.weights
            if np.any(overlap != 0.0):
                raise ValueError("joint selections must not share a position")


def round_largest_m(z_relaxed, m: int) -> SelectionVector:
    """Binary vector keeping the m largest weights; ties go to the lowest index."""
    w = as_weights(z_relaxed)
    if not 0 <= m <= w.shape[0]:
        raise ValueError(f"m={m} outside [0, {w.shape[0]}]")
    order = np.argsort(-w, kind="stable")
    return SelectionVector.from_indices(order[:m], w.shape[0])


# ---------------------------------------------------------------------------
# objective dispatch
# ---------------------------------------------------------------------------


def _objective_fn(s: Scenario, objective: str):
    if objective == "eav":
        return lambda w: eav_metrics.eav_objective(s, w)
    if objective in ("jam", "joint"):
        return lambda w: jam_metrics.jam_objective(s, w)
    raise ValueError(f"unknown objective {objective!r}")


def _small_gap(reference: float, candidate: float, mu: float) -> bool:
    """Algorithm stop predicate |reference - candidate| <= mu * |reference|.

    Both infinite counts as a zero gap (nothing can change); crossing between
    finite and infinite is always a large change.
    """
    ref_inf, cand_inf = math.isinf(reference), math.isinf(candidate)
    if ref_inf and cand_inf:
        return True
    if ref_inf or cand_inf:
        return False
    return abs(reference - candidate) <= mu * abs(reference)


def _strictly_better(a: float, b: float, sense: str) -> bool:
    return a < b if sense == "min" else a > b


# ---------------------------------------------------------------------------
# swap local search
# ---------------------------------------------------------------------------


def swap_search(
    s: Scenario,
    z0,
    relaxed_value: float,
    mu: float,
    max_swaps: int,
    sense: str = "min",
    objective: str = "eav",
    *,
    rho: float = math.inf,
    fixed_eav=None,
    algorithm_tag: str = "swap",
) -> SelectionOutcome:
    """Single-exchange local search over binary selections of fixed size.

    Starts from ``z0``.  If the start is within relative gap ``mu`` of the
    relaxed bound it is returned unchanged.  Otherwise each sweep evaluates
    all single swaps and moves to the best; the search stops when the gap
    between successive values falls within ``mu`` (the best candidate of the
    final sweep is kept when it does not degrade the incumbent) or after
    ``max_swaps`` sweeps.  In joint mode (``objective="joint"``) the jammer
    vector is searched, the eavesdropper vector is its complement (or
    ``fixed_eav``), and a swap is admissible only if the eavesdropper
    objective stays within ``rho``, or strictly improves while the search is
    still infeasible; the mu rule is suspended until feasibility is reached.
    """
    if mu < 0 or max_swaps < 0:
        raise ValueError("mu and max_swaps must be nonnegative")
    n = s.n_candidates
    w0 = as_weights(z0, n)
    if not np.all((w0 == 0.0) | (w0 == 1.0)):
        raise ValueError("swap search requires a binary start")
    joint = objective == "joint"
    fn = _objective_fn(s, objective)

    fixed = None
    if joint and fixed_eav is not None:
        fixed = as_weights(fixed_eav, n)

    def eav_value(w):
        return eav_metrics.eav_objective(s, fixed if fixed is not None else 1.0 - w)

    def outcome(w, value, swaps):
        kwargs = {}
        if joint:
            e = fixed if fixed is not None else 1.0 - w
            kwargs["selection_eav"] = SelectionVector(e, "binary")
            kwargs["feasible"] = eav_value(w) <= rho
        return SelectionOutcome(
            selection=SelectionVector(w, "binary"), objective=value,
            algorithm=algorithm_tag, swaps=swaps, **kwargs)

    f_cur = fn(w0)
    feasible_now = (eav_value(w0) <= rho) if joint else True
    if _small_gap(relaxed_value, f_cur, mu) and (not joint or feasible_now):
        return outcome(w0, f_cur, 0)

    current = w0.copy()
    fe_cur = eav_value(current) if joint else None
    moves = 0
    sweeps = 0
    while sweeps < max_swaps:
        sweeps += 1
        selected = np.flatnonzero(current == 1.0)
        unselected = np.flatnonzero(current == 0.0)
        if fixed is not None:
            unselected = unselected[fixed[unselected] == 0.0]
        if selected.size == 0 or unselected.size == 0:
            break

        best_w = best_f = best_fe = None
        best_reaches = False
        for out_i in selected:
            for in_j in unselected:
                cand = current.copy()
                cand[out_i], cand[in_j] = 0.0, 1.0
                if joint:
                    fe = eav_value(cand)
                    if feasible_now:
                        if fe > rho:
                            continue
                    elif not (fe <= rho or fe < fe_cur):
                        continue
                    reaches = fe <= rho
                    f_c = fn(cand)
                    # prefer candidates that reach feasibility, then the best value
                    if (best_f is None or reaches > best_reaches
                            or (reaches == best_reaches
                                and _strictly_better(f_c, best_f, sense))):
                        best_w, best_f, best_fe, best_reaches = cand, f_c, fe, reaches
                else:
                    f_c = fn(cand)
                    if best_f is None or _strictly_better(f_c, best_f, sense):
                        best_w, best_f = cand, f_c

        if best_f is None:
            break  # no admissible swap

        if joint and not feasible_now:
            current, f_cur, fe_cur = best_w, best_f, best_fe
            moves += 1
            feasible_now = best_reaches
            continue

        degrades = _strictly_better(f_cur, best_f, sense)
        if _small_gap(f_cur, best_f, mu) or sweeps == max_swaps:
            if not degrades:
                current, f_cur = best_w, best_f
                if joint:
                    fe_cur = best_fe
                moves += 1
            break
        if degrades:
            break  # strict local optimum: keep the incumbent
        current, f_cur = best_w, best_f
        if joint:
            fe_cur = best_fe
        moves += 1

    return outcome(current, f_cur, moves)


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


def exhaustive_select(
    s: Scenario,
    m: int,
    sense: str = "min",
    objective: str = "eav",
    budget: float | None = None,
    cap: int = 2_000_000,
) -> SelectionOutcome:
    """Exact optimum over all m-subsets (lexicographically first among ties).

    Jam-mode subsets exceeding the power budget are skipped.  Refuses with
    :class:`CapExceededError` when the subset count exceeds ``cap``.
    """
    n = s.n_candidates
    if not 0 <= m <= n:
        raise ValueError(f"m={m} outside [0, {n}]")
    count = math.comb(n, m)
    if count > cap:
        raise CapExceededError(
            f"exhaustive search over {count} subsets exceeds the cap of {cap}")
    fn = _objective_fn(s, objective)
    use_budget = objective == "jam"
    limit = s.power_budget if budget is None else budget

    best_idx = None
    best_val = None
    skipped_all = True
    for combo in itertools.combinations(range(n), m):
        if use_budget and float(s.jam_powers[list(combo)].sum()) > limit + 1e-9:
            continue
        skipped_all = False
        w = np.zeros(n)
        w[list(combo)] = 1.0
        val = fn(w)
        if best_val is None or _strictly_better(val, best_val, sense):
            best_idx, best_val = combo, val
    if skipped_all:
        raise InfeasibleError(
            f"no {m}-subset satisfies the power budget {limit}")
    feasible = not (sense == "min" and math.isinf(best_val))
    return SelectionOutcome(
        selection=SelectionVector.from_indices(best_idx, n),
        objective=best_val, algorithm="exhaustive", feasible=feasible)


# ---------------------------------------------------------------------------
# robust worst-case transforms
# ---------------------------------------------------------------------------


def robust_eav_effective(s: Scenario, u: UncertaintyModel) -> Scenario:
    """Scenario with worst-case eavesdropper intensities lam_hat - delta.

    The eavesdropper objective is non-increasing in every link intensity, so
    the adversary's best move inside the error box is to subtract the full
    bound; solving the nominal problem on the shifted scenario solves the
    min-max problem.  Links whose effective intensity reaches zero drop out of
    the LOS map (they carry no information).
    """
    if u.eav_delta.shape != s.eav_intensity.shape:
        raise ScenarioValidationError("eav_delta: shape does not match the scenario")
    if np.any(u.eav_delta > s.eav_intensity):
        raise ScenarioValidationError(
            "eav_delta: bounds may not exceed the nominal intensities")
    effective = s.eav_intensity - u.eav_delta
    return dataclasses.replace(
        s, eav_intensity=effective, eav_los=s.eav_los & (effective > 0))


def robust_jam_effective(s: Scenario, u: UncertaintyModel) -> Scenario:
    """Scenario with worst-case anchor intensities lam_hat + delta.

    The jammed objective is non-increasing in the anchor intensities, so the
    network's best defense inside the error box is full-strength links; the
    max-min problem reduces to the nominal problem on the inflated scenario.
    """
    if u.jam_delta.shape != s.jam_anchor_intensity.shape:
        raise ScenarioValidationError("jam_delta: shape does not match the scenario")
    if np.any((u.jam_delta > 0) & ~s.anchor_los):
        raise ScenarioValidationError(
            "jam_delta: uncertainty on a non-LOS anchor link")
    return dataclasses.replace(
        s, jam_anchor_intensity=s.jam_anchor_intensity + u.jam_delta)


def uncertainty_from_epsilon(s: Scenario, seed: int) -> UncertaintyModel:
    """Per-target relative boxes delta = eps_i * lam_hat with eps_i ~ U[0, 1]."""
    rng = SplitMix64(seed)
    eps = np.array([rng.uniform() for _ in range(s.n_targets)])
    return UncertaintyModel(
        eav_delta=eps[:, None, None] * s.eav_intensity,
        jam_delta=np.zeros_like(s.jam_anchor_intensity))


def uncertainty_from_kappa(s: Scenario, seed: int) -> UncertaintyModel:
    """Per-target relative boxes delta = kappa_i * lam_hat on the anchor side."""
    rng = SplitMix64(seed)
    kappa = np.array([rng.uniform() for _ in range(s.n_targets)])
    return UncertaintyModel(
        eav_delta=np.zeros_like(s.eav_intensity),
        jam_delta=kappa[:, None] * s.jam_anchor_intensity)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineParams:
    """Everything one selection run needs beyond the scenario and mode."""

    n_eav: int | None = None
    n_jam: int | None = None
    rho: float = math.inf
    mu: float = 0.01
    max_swaps: int = 5
    uncertainty: UncertaintyModel | None = None   # robust worst-case transform
    eval_scenario: Scenario | None = None         # report objectives on this scenario
    include_exhaustive: bool = False
    exhaustive_cap: int = 2_000_000
    random_init_seeds: tuple = ()
    random_max_swaps: int | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)


def _evaluate(outcome: SelectionOutcome, s_eval: Scenario, objective: str,
              rho: float) -> SelectionOutcome:
    """Re-evaluate an outcome's objective (and joint feasibility) on a scenario."""
    fn = _objective_fn(s_eval, objective)
    value = fn(outcome.selection.weights)
    kwargs = {"objective": value}
    if objective == "joint" and outcome.selection_eav is not None:
        kwargs["feasible"] = bool(
            eav_metrics.eav_objective(s_eval, outcome.selection_eav.weights) <= rho)
    elif objective == "eav":
        kwargs["feasible"] = bool(math.isfinite(value))
    elif objective == "jam":
        load = float(outcome.selection.weights @ s_eval.jam_powers)
        kwargs["feasible"] = bool(load <= s_eval.power_budget + 1e-9)
    return dataclasses.replace(outcome, **kwargs)


def _random_binary(n: int, m: int, seed: int) -> SelectionVector:
    rng = SplitMix64(seed)
    return SelectionVector.from_indices(rng.integers_without_replacement(n, m), n)


def select_pipeline(s: Scenario, mode: str, params: PipelineParams) -> list[SelectionOutcome]:
    """Run relaxed solve, largest-m rounding and swap search (plus baselines).

    Returns outcomes in order: relaxed-bound, largest-m, swap, exhaustive
    (optional, eav/jam only), then one swap-random per seed.  With an
    uncertainty model the search runs on the worst-case shifted scenario; all
    reported objectives are evaluated on ``params.eval_scenario`` when given
    (otherwise on the search scenario), so assumed-vs-true experiments and
    worst-case reporting share one mechanism.
    """
    if mode not in ("eav", "jam", "joint"):
        raise ValueError(f"unknown mode {mode!r}")
    n = s.n_candidates

    s_sel = s
    if params.uncertainty is not None:
        if mode == "eav":
            s_sel = robust_eav_effective(s, params.uncertainty)
        elif mode == "jam":
            s_sel = robust_jam_effective(s, params.uncertainty)
        else:
            s_sel = robust_jam_effective(
                robust_eav_effective(s, params.uncertainty), params.uncertainty)
    s_eval = params.eval_scenario if params.eval_scenario is not None else s_sel

    if mode == "eav":
        if params.n_eav is None:
            raise ValueError("eav mode requires n_eav")
        m, sense, objective = params.n_eav, "min", "eav"
    elif mode == "jam":
        if params.n_jam is None:
            raise ValueError("jam mode requires n_jam")
        m, sense, objective = params.n_jam, "max", "jam"
    else:
        if params.n_jam is None:
            raise ValueError("joint mode requires n_jam")
        n_jam = params.n_jam
        n_eav = params.n_eav if params.n_eav is not None else n - n_jam
        m, sense, objective = n_jam, "max", "joint"

    outcomes: list[SelectionOutcome] = []

    t0 = time.perf_counter()
    if mode == "eav":
        report = solve_relaxed_eav(s_sel, m, params.solver)
    elif mode == "jam":
        report = solve_relaxed_jam(s_sel, m, params.solver)
    else:
        report = solve_relaxed_joint(s_sel, n_eav, n_jam, params.rho, params.solver)
    relaxed_ms = 1000.0 * (time.perf_counter() - t0)

    relaxed = SelectionOutcome(
        selection=report.solution, objective=report.objective,
        algorithm="relaxed-bound", wall_ms=relaxed_ms,
        selection_eav=report.solution_eav)
    outcomes.append(dataclasses.replace(
        _evaluate(relaxed, s_eval, objective, params.rho), wall_ms=relaxed_ms))

    def finish(outcome, started):
        wall = 1000.0 * (time.perf_counter() - started)
        return dataclasses.replace(
            _evaluate(outcome, s_eval, objective, params.rho), wall_ms=wall)

    t0 = time.perf_counter()
    z_largest = round_largest_m(report.solution.weights, m)
    largest_kwargs = {}
    if mode == "joint":
        largest_kwargs["selection_eav"] = _joint_eav_completion(
            report, z_largest, n_eav, n)
    largest = SelectionOutcome(
        selection=z_largest,
        objective=_objective_fn(s_sel, objective)(z_largest.weights),
        algorithm="largest-m", **largest_kwargs)
    outcomes.append(finish(largest, t0))

    fixed_eav = None
    if mode == "joint" and n_eav + n_jam < n:
        fixed_eav = largest_kwargs["selection_eav"].weights

    t0 = time.perf_counter()
    swap = swap_search(
        s_sel, z_largest, report.objective, params.mu, params.max_swaps,
        sense=sense, objective=objective, rho=params.rho, fixed_eav=fixed_eav)
    outcomes.append(finish(swap, t0))

    if params.include_exhaustive and mode in ("eav", "jam"):
        t0 = time.perf_counter()
        exhaustive = exhaustive_select(
            s_sel, m, sense=sense, objective=objective, cap=params.exhaustive_cap)
        outcomes.append(finish(exhaustive, t0))

    random_budget = (params.max_swaps if params.random_max_swaps is None
                     else params.random_max_swaps)
    for seed in params.random_init_seeds:
        t0 = time.perf_counter()
        z_rand = _random_binary(n, m, seed)
        rand_fixed = fixed_eav
        rand = swap_search(
            s_sel, z_rand, report.objective, params.mu, random_budget,
            sense=sense, objective=objective, rho=params.rho,
            fixed_eav=rand_fixed, algorithm_tag="swap-random")
        outcomes.append(finish(rand, t0))

    return outcomes


def _joint_eav_completion(report: SolverReport, z_jam: SelectionVector,
                          n_eav: int, n: int) -> SelectionVector:
    """Binary eavesdropper vector paired with a rounded jammer vector."""
    if n_eav + int(z_jam.weights.sum()) == n:
        return SelectionVector(1.0 - z_jam.weights, "binary")
    # round the relaxed eavesdropper weights over the complement of the jammers
    w_e = report.solution_eav.weights if report.solution_eav is not None else np.zeros(n)
    order = np.argsort(-w_e, kind="stable")
    free = order[z_jam.weights[order] == 0.0]
    return SelectionVector.from_indices(free[:n_eav], n)
