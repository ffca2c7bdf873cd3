"""Immutable network scenarios for localization node-selection problems.

A :class:`Scenario` describes everything the selection metrics need: a prior
over possible target positions, anchor positions, the shared pool of candidate
positions for eavesdropper/jammer placement, per-link effective intensities,
jammer-to-anchor power gains, jammer powers, anchor noise levels and the total
jammer power budget.

Conventions, fixed throughout the package:

* ``eav_intensity[i, j, k]`` is the effective Fisher intensity of the link
  (target i -> candidate k) observed during the transmission intended for
  anchor j.  It is zero exactly on the non-line-of-sight entries of
  ``eav_los``.
* ``jam_anchor_intensity[i, j]`` is the anchor-side intensity for target i at
  anchor j, zero exactly off the anchor LOS map.
* ``jam_channel_gain[k, j]`` is the power gain from candidate position k to
  anchor j.
* Bearings are taken from the receiving node toward the target, i.e. the
  angle of the vector (target - node); the clock-offset coupling makes the
  eavesdropper metric sensitive to this orientation, so it is not a free
  choice.

All generators are pure functions of their parameters and a seed (see
:mod:`locsel.rng`); identical inputs give identical scenarios.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import SplitMix64

__all__ = [
    "Scenario",
    "UncertaintyModel",
    "ScenarioError",
    "ScenarioValidationError",
    "CANDIDATE_REGION",
    "generate_paper_scenario",
    "apply_shadowing",
    "gaussian_like_prior",
    "perturb_anchor_knowledge",
    "save_scenario",
    "load_scenario",
    "save_uncertainty",
    "load_uncertainty",
]

PRIOR_SUM_TOL = 1e-12

# Candidate positions live in a ring-shaped region around the network:
# two vertical side bands plus a top and a bottom band, in meters.
CANDIDATE_REGION = (
    (20.0, 50.0, -50.0, 50.0),
    (-50.0, -20.0, -50.0, 50.0),
    (-20.0, 20.0, -50.0, -30.0),
    (-20.0, 20.0, 30.0, 50.0),
)
_REGION_BOUNDS = (-50.0, 50.0, -50.0, 50.0)


class ScenarioError(ValueError):
    """Raised when a scenario cannot be constructed (e.g. coincident nodes)."""


class ScenarioValidationError(ScenarioError):
    """Raised when scenario data violates the schema or an invariant."""


def _as_float_array(value, shape_hint: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    arr.setflags(write=False)
    if not np.all(np.isfinite(arr)):
        raise ScenarioValidationError(f"{shape_hint}: entries must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable description of a source-localization network.

    Arrays are normalized to float64 and frozen; instances are safe to share
    across concurrent workers.
    """

    targets: np.ndarray            # (n_targets, 2) positions, meters
    prior: np.ndarray              # (n_targets,) probabilities
    anchors: np.ndarray            # (n_anchors, 2)
    candidates: np.ndarray         # (n_candidates, 2)
    eav_los: np.ndarray            # (n_targets, n_anchors, n_candidates) bool
    eav_intensity: np.ndarray      # same shape, zero exactly off eav_los
    jam_anchor_intensity: np.ndarray  # (n_targets, n_anchors)
    jam_channel_gain: np.ndarray   # (n_candidates, n_anchors)
    jam_powers: np.ndarray         # (n_candidates,)
    jam_noise: np.ndarray          # (n_anchors,) strictly positive
    power_budget: float
    anchor_connected: np.ndarray | None = None  # (n_targets, n_anchors) bool
    anchor_los: np.ndarray | None = None        # subset of anchor_connected

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "targets", _as_float_array(self.targets, "targets"))
        set_(self, "prior", _as_float_array(self.prior, "prior"))
        set_(self, "anchors", _as_float_array(self.anchors, "anchors"))
        set_(self, "candidates", _as_float_array(self.candidates, "candidates"))
        set_(self, "eav_intensity", _as_float_array(self.eav_intensity, "eav_intensity"))
        set_(self, "jam_anchor_intensity",
             _as_float_array(self.jam_anchor_intensity, "jam_anchor_intensity"))
        set_(self, "jam_channel_gain", _as_float_array(self.jam_channel_gain, "jam_channel_gain"))
        set_(self, "jam_powers", _as_float_array(self.jam_powers, "jam_powers"))
        set_(self, "jam_noise", _as_float_array(self.jam_noise, "jam_noise"))
        set_(self, "power_budget", float(self.power_budget))

        los = np.asarray(self.eav_los, dtype=bool)
        los.setflags(write=False)
        set_(self, "eav_los", los)

        if self.anchor_los is None:
            alos = self.jam_anchor_intensity > 0
        else:
            alos = np.asarray(self.anchor_los, dtype=bool)
        alos.setflags(write=False)
        set_(self, "anchor_los", alos)
        if self.anchor_connected is None:
            conn = np.ones_like(alos, dtype=bool) | alos
        else:
            conn = np.asarray(self.anchor_connected, dtype=bool)
        conn.setflags(write=False)
        set_(self, "anchor_connected", conn)

        self._validate()

    # -- basic sizes -------------------------------------------------------

    @property
    def n_targets(self) -> int:
        return self.targets.shape[0]

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    @property
    def n_candidates(self) -> int:
        return self.candidates.shape[0]

    # -- validation --------------------------------------------------------

    def _validate(self) -> None:
        t, a, n = self.n_targets, self.n_anchors, self.n_candidates
        shapes = {
            "targets": (self.targets, (t, 2)),
            "prior": (self.prior, (t,)),
            "anchors": (self.anchors, (a, 2)),
            "candidates": (self.candidates, (n, 2)),
            "eav_los": (self.eav_los, (t, a, n)),
            "eav_intensity": (self.eav_intensity, (t, a, n)),
            "jam_anchor_intensity": (self.jam_anchor_intensity, (t, a)),
            "jam_channel_gain": (self.jam_channel_gain, (n, a)),
            "jam_powers": (self.jam_powers, (n,)),
            "jam_noise": (self.jam_noise, (a,)),
            "anchor_connected": (self.anchor_connected, (t, a)),
            "anchor_los": (self.anchor_los, (t, a)),
        }
        for name, (arr, shape) in shapes.items():
            if arr.shape != shape:
                raise ScenarioValidationError(
                    f"{name}: expected shape {shape}, got {arr.shape}")

        if np.any(self.prior < 0):
            raise ScenarioValidationError("prior: entries must be nonnegative")
        total = float(self.prior.sum())
        if abs(total - 1.0) > PRIOR_SUM_TOL:
            raise ScenarioValidationError(
                f"prior: entries must sum to 1 within {PRIOR_SUM_TOL} (got {total!r})")

        for name in ("eav_intensity", "jam_anchor_intensity", "jam_channel_gain", "jam_powers"):
            if np.any(getattr(self, name) < 0):
                raise ScenarioValidationError(f"{name}: entries must be nonnegative")
        if np.any(self.jam_noise <= 0):
            raise ScenarioValidationError("jam_noise: entries must be strictly positive")
        if self.power_budget < 0:
            raise ScenarioValidationError("power_budget: must be nonnegative")

        if not np.array_equal(self.eav_intensity > 0, self.eav_los):
            raise ScenarioValidationError(
                "eav_intensity: must be positive exactly on eav_los entries and zero elsewhere")
        if not np.array_equal(self.jam_anchor_intensity > 0, self.anchor_los):
            raise ScenarioValidationError(
                "jam_anchor_intensity: must be positive exactly on anchor_los entries")
        if np.any(self.anchor_los & ~self.anchor_connected):
            raise ScenarioValidationError("anchor_los: must be a subset of anchor_connected")


@dataclass(frozen=True, eq=False)
class UncertaintyModel:
    """Per-link bound magnitudes defining the robust error box.

    ``eav_delta[i, j, k]`` bounds the eavesdropper intensity error on link
    (i, j, k); ``jam_delta[i, j]`` bounds the anchor-side intensity error.
    All entries are nonnegative; an eavesdropper delta may not exceed the
    nominal intensity it perturbs (checked when the worst case is applied).
    """

    eav_delta: np.ndarray  # (n_targets, n_anchors, n_candidates)
    jam_delta: np.ndarray  # (n_targets, n_anchors)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "eav_delta", _as_float_array(self.eav_delta, "eav_delta"))
        set_(self, "jam_delta", _as_float_array(self.jam_delta, "jam_delta"))
        if np.any(self.eav_delta < 0):
            raise ScenarioValidationError("eav_delta: entries must be nonnegative")
        if np.any(self.jam_delta < 0):
            raise ScenarioValidationError("jam_delta: entries must be nonnegative")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _in_candidate_region(x: float, y: float) -> bool:
    return any(x0 <= x <= x1 and y0 <= y <= y1 for x0, x1, y0, y1 in CANDIDATE_REGION)


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(len(a), len(b)) matrix of squared Euclidean distances."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def generate_paper_scenario(
    grid_half_extent: int,
    grid_step: float,
    anchor_count: int,
    anchor_radius: float,
    candidate_count: int,
    seed: int,
    *,
    sigma_sq: float = 0.1,
    jam_noise_sq: float = 0.1,
    jam_power: float = 10.0,
    power_budget: float | None = None,
) -> Scenario:
    """Build the reference network: grid targets, circular anchors, ring candidates.

    Targets sit on the square integer grid ``[m*grid_step, n*grid_step]`` for
    ``-grid_half_extent <= m, n <= grid_half_extent`` (m outer, n inner) with a
    uniform prior.  Anchors are spaced uniformly on a circle of radius
    ``anchor_radius``: anchor j sits at angle ``2*pi*j/anchor_count``.
    Candidate positions are drawn uniformly from :data:`CANDIDATE_REGION` by
    rejection sampling from its bounding box (x then y per attempt), so seeds
    are portable.

    Every link is line-of-sight and every anchor is connected.  Intensities
    follow inverse-square laws: ``eav_intensity = 1 / (d^2 * sigma_sq)`` with d
    the target-candidate distance, ``jam_anchor_intensity = 1 / d^2`` over
    target-anchor distances, and ``jam_channel_gain = 1 / d^2`` over
    candidate-anchor distances.  Jammer powers are all ``jam_power`` and the
    budget defaults to ``jam_power * candidate_count`` (never binding).

    Raises :class:`ScenarioError` if any target coincides with a candidate or
    an anchor (the inverse-square intensities would diverge).
    """
    if grid_half_extent < 0:
        raise ValueError("grid_half_extent must be >= 0")
    if anchor_count < 1 or candidate_count < 1:
        raise ValueError("anchor_count and candidate_count must be >= 1")
    if sigma_sq <= 0 or jam_noise_sq <= 0:
        raise ValueError("noise levels must be strictly positive")

    h = int(grid_half_extent)
    targets = np.array(
        [[m * grid_step, n * grid_step]
         for m in range(-h, h + 1) for n in range(-h, h + 1)],
        dtype=float,
    )
    n_targets = targets.shape[0]
    prior = np.full(n_targets, 1.0 / n_targets)

    angles = 2.0 * np.pi * np.arange(anchor_count) / anchor_count
    anchors = anchor_radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)

    rng = SplitMix64(seed)
    x0, x1, y0, y1 = _REGION_BOUNDS
    cands = []
    while len(cands) < candidate_count:
        x = rng.uniform_in(x0, x1)
        y = rng.uniform_in(y0, y1)
        if _in_candidate_region(x, y):
            cands.append((x, y))
    candidates = np.array(cands, dtype=float)

    d2_tc = _squared_distances(targets, candidates)   # (T, N)
    d2_ta = _squared_distances(targets, anchors)      # (T, A)
    d2_ca = _squared_distances(candidates, anchors)   # (N, A)
    for name, d2 in (("candidate", d2_tc), ("anchor", d2_ta)):
        if np.any(d2 == 0.0):
            i, k = np.argwhere(d2 == 0.0)[0]
            raise ScenarioError(f"target {i} coincides with {name} {k}: zero distance")
    if np.any(d2_ca == 0.0):
        k, j = np.argwhere(d2_ca == 0.0)[0]
        raise ScenarioError(f"candidate {k} coincides with anchor {j}: zero distance")

    n_anchors, n_cand = anchor_count, candidate_count
    eav = np.broadcast_to(
        (1.0 / (d2_tc * sigma_sq))[:, None, :], (n_targets, n_anchors, n_cand)
    ).copy()
    los = np.ones((n_targets, n_anchors, n_cand), dtype=bool)

    return Scenario(
        targets=targets,
        prior=prior,
        anchors=anchors,
        candidates=candidates,
        eav_los=los,
        eav_intensity=eav,
        jam_anchor_intensity=1.0 / d2_ta,
        jam_channel_gain=1.0 / d2_ca,
        jam_powers=np.full(n_cand, jam_power, dtype=float),
        jam_noise=np.full(n_anchors, jam_noise_sq, dtype=float),
        power_budget=jam_power * n_cand if power_budget is None else power_budget,
    )


def apply_shadowing(
    s: Scenario,
    seed: int,
    eav_mean: float = -2.0,
    eav_var: float = 1.0,
    gain_mean: float = -2.0,
    gain_var: float = 2.0,
) -> Scenario:
    """Multiply intensities and gains by independent log-normal draws.

    Each eavesdropper-link intensity and each anchor-side intensity is scaled
    by exp(eav_mean + sqrt(eav_var) * N(0,1)); each jammer-to-anchor gain by a
    draw with parameters (gain_mean, gain_var).  Zero (non-LOS) entries stay
    zero.  Draw order is fixed: eavesdropper LOS links in (i, j, k) order,
    then anchor LOS links in (i, j) order, then all gains in (k, j) order.
    """
    if eav_var < 0 or gain_var < 0:
        raise ValueError("variance parameters must be nonnegative")
    rng = SplitMix64(seed)

    eav = np.array(s.eav_intensity)
    for idx in np.argwhere(s.eav_los):
        eav[tuple(idx)] *= rng.lognormal(eav_mean, eav_var)

    jam = np.array(s.jam_anchor_intensity)
    for idx in np.argwhere(s.anchor_los):
        jam[tuple(idx)] *= rng.lognormal(eav_mean, eav_var)

    gain = np.array(s.jam_channel_gain)
    for k in range(s.n_candidates):
        for j in range(s.n_anchors):
            gain[k, j] *= rng.lognormal(gain_mean, gain_var)

    return dataclasses.replace(
        s, eav_intensity=eav, jam_anchor_intensity=jam, jam_channel_gain=gain)


def gaussian_like_prior(targets, center, nu: float) -> np.ndarray:
    """Discrete prior proportional to exp(-||x - center||^2 / (2 nu^2))."""
    if nu <= 0:
        raise ValueError("nu must be strictly positive")
    pts = np.asarray(targets, dtype=float)
    c = np.asarray(center, dtype=float)
    d2 = np.sum((pts - c) ** 2, axis=1)
    expo = -d2 / (2.0 * nu * nu)
    expo -= expo.max()
    w = np.exp(expo)
    return w / w.sum()


def perturb_anchor_knowledge(s: Scenario, r: float, seed: int) -> Scenario:
    """Scenario as assumed under imperfect anchor-position knowledge.

    Each assumed anchor position is drawn uniformly from the axis-aligned
    square of half-width ``r`` centered on the true position (x offset then y
    offset, in anchor order).  Anchor-side intensities and jammer gains are
    rescaled by the squared-distance ratio, which recomputes the inverse-square
    law exactly for scenarios built by :func:`generate_paper_scenario` and
    preserves any multiplicative shadowing otherwise.  The input scenario is
    untouched; ``r = 0`` returns it unchanged.
    """
    if r < 0:
        raise ValueError("perturbation radius must be nonnegative")
    if r == 0:
        return s
    rng = SplitMix64(seed)
    offsets = np.array(
        [[rng.uniform_in(-r, r), rng.uniform_in(-r, r)] for _ in range(s.n_anchors)])
    new_anchors = s.anchors + offsets

    d2_ta_old = _squared_distances(s.targets, s.anchors)
    d2_ta_new = _squared_distances(s.targets, new_anchors)
    d2_ca_old = _squared_distances(s.candidates, s.anchors)
    d2_ca_new = _squared_distances(s.candidates, new_anchors)
    if np.any(d2_ta_new == 0.0) or np.any(d2_ca_new == 0.0):
        raise ScenarioError("perturbed anchor coincides with a target or candidate")

    return dataclasses.replace(
        s,
        anchors=new_anchors,
        jam_anchor_intensity=s.jam_anchor_intensity * (d2_ta_old / d2_ta_new),
        jam_channel_gain=s.jam_channel_gain * (d2_ca_old / d2_ca_new),
    )


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

_SCENARIO_KEYS = (
    "targets", "prior", "anchors", "candidates", "eav_los", "eav_intensity",
    "jam_anchor_intensity", "jam_channel_gain", "jam_powers", "jam_noise",
    "power_budget",
)


def save_scenario(s: Scenario, path) -> None:
    """Write a scenario as a JSON document (full float precision)."""
    los_triplets = [[int(i), int(j), int(k)] for i, j, k in np.argwhere(s.eav_los)]
    intensity = [[int(i), int(j), int(k), float(s.eav_intensity[i, j, k])]
                 for i, j, k in np.argwhere(s.eav_los)]
    jam = [[int(i), int(j), float(s.jam_anchor_intensity[i, j])]
           for i, j in np.argwhere(s.anchor_los)]
    doc = {
        "targets": s.targets.tolist(),
        "prior": s.prior.tolist(),
        "anchors": s.anchors.tolist(),
        "candidates": s.candidates.tolist(),
        "eav_los": los_triplets,
        "eav_intensity": intensity,
        "jam_anchor_intensity": jam,
        "jam_channel_gain": s.jam_channel_gain.tolist(),
        "jam_powers": s.jam_powers.tolist(),
        "jam_noise": s.jam_noise.tolist(),
        "power_budget": s.power_budget,
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def _require(doc: dict, key: str):
    if key not in doc:
        raise ScenarioValidationError(f"{key}: missing required field")
    return doc[key]


def load_scenario(path) -> Scenario:
    """Load and fully validate a scenario file written by :func:`save_scenario`."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioValidationError(f"scenario file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioValidationError("scenario file: top level must be an object")
    for key in _SCENARIO_KEYS:
        _require(doc, key)

    def field_array(key, shape, dtype=float):
        try:
            arr = np.asarray(doc[key], dtype=dtype)
        except (TypeError, ValueError) as exc:
            raise ScenarioValidationError(f"{key}: not numeric ({exc})") from exc
        if shape is not None and arr.shape != shape:
            raise ScenarioValidationError(f"{key}: expected shape {shape}, got {arr.shape}")
        return arr

    targets = field_array("targets", None)
    if targets.ndim != 2 or targets.shape[1] != 2:
        raise ScenarioValidationError("targets: expected a list of 2-D positions")
    t = targets.shape[0]
    anchors = field_array("anchors", None)
    if anchors.ndim != 2 or anchors.shape[1] != 2:
        raise ScenarioValidationError("anchors: expected a list of 2-D positions")
    a = anchors.shape[0]
    candidates = field_array("candidates", None)
    if candidates.ndim != 2 or candidates.shape[1] != 2:
        raise ScenarioValidationError("candidates: expected a list of 2-D positions")
    n = candidates.shape[0]

    prior = field_array("prior", (t,))
    gain = field_array("jam_channel_gain", (n, a))
    powers = field_array("jam_powers", (n,))
    noise = field_array("jam_noise", (a,))

    def index_ok(i, hi, key, what):
        if not 0 <= i < hi:
            raise ScenarioValidationError(f"{key}: {what} index {i} out of range [0, {hi})")

    los = np.zeros((t, a, n), dtype=bool)
    for row in _require(doc, "eav_los"):
        if len(row) != 3:
            raise ScenarioValidationError("eav_los: entries must be [target, anchor, candidate]")
        i, j, k = (int(v) for v in row)
        index_ok(i, t, "eav_los", "target")
        index_ok(j, a, "eav_los", "anchor")
        index_ok(k, n, "eav_los", "candidate")
        los[i, j, k] = True

    intensity = np.zeros((t, a, n), dtype=float)
    for row in _require(doc, "eav_intensity"):
        if len(row) != 4:
            raise ScenarioValidationError(
                "eav_intensity: entries must be [target, anchor, candidate, value]")
        i, j, k = (int(v) for v in row[:3])
        index_ok(i, t, "eav_intensity", "target")
        index_ok(j, a, "eav_intensity", "anchor")
        index_ok(k, n, "eav_intensity", "candidate")
        intensity[i, j, k] = float(row[3])
    if not np.array_equal(intensity > 0, los):
        raise ScenarioValidationError(
            "eav_los: inconsistent with the support of eav_intensity")

    jam = np.zeros((t, a), dtype=float)
    for row in _require(doc, "jam_anchor_intensity"):
        if len(row) != 3:
            raise ScenarioValidationError(
                "jam_anchor_intensity: entries must be [target, anchor, value]")
        i, j = int(row[0]), int(row[1])
        index_ok(i, t, "jam_anchor_intensity", "target")
        index_ok(j, a, "jam_anchor_intensity", "anchor")
        jam[i, j] = float(row[2])

    budget = doc["power_budget"]
    if not isinstance(budget, (int, float)):
        raise ScenarioValidationError("power_budget: must be a number")

    return Scenario(
        targets=targets,
        prior=prior,
        anchors=anchors,
        candidates=candidates,
        eav_los=los,
        eav_intensity=intensity,
        jam_anchor_intensity=jam,
        jam_channel_gain=gain,
        jam_powers=powers,
        jam_noise=noise,
        power_budget=float(budget),
    )


def save_uncertainty(u: UncertaintyModel, path) -> None:
    """Write an uncertainty model as JSON (sparse, full precision)."""
    doc = {
        "eav_delta": [[int(i), int(j), int(k), float(v)]
                      for (i, j, k), v in np.ndenumerate(u.eav_delta) if v > 0],
        "jam_delta": [[int(i), int(j), float(v)]
                      for (i, j), v in np.ndenumerate(u.jam_delta) if v > 0],
        "shape": [int(d) for d in u.eav_delta.shape],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def load_uncertainty(path) -> UncertaintyModel:
    doc = json.loads(Path(path).read_text())
    t, a, n = (int(v) for v in _require(doc, "shape"))
    eav = np.zeros((t, a, n), dtype=float)
    for i, j, k, v in _require(doc, "eav_delta"):
        eav[int(i), int(j), int(k)] = float(v)
    jam = np.zeros((t, a), dtype=float)
    for i, j, v in _require(doc, "jam_delta"):
        jam[int(i), int(j)] = float(v)
    return UncertaintyModel(eav_delta=eav, jam_delta=jam)


def scenarios_equal(a: Scenario, b: Scenario) -> bool:
    """Field-for-field exact equality (arrays compared bitwise)."""
    for f in dataclasses.fields(Scenario):
        va, vb = getattr(a, f.name), getattr(b, f.name)
        if isinstance(va, np.ndarray):
            if not np.array_equal(va, vb):
                return False
        elif va != vb:
            return False
    return True
