"""Eavesdropper-side localization error bound and its derivatives.

For a selection of candidate positions, the mean-squared error of any
unbiased position estimate formed by the selected eavesdroppers is bounded
below by the trace of the inverse equivalent Fisher information matrix.  With
an unknown clock offset between target and eavesdroppers the information
matrix is 3x3 (two position coordinates plus the offset), and the bound has a
closed polynomial form: a ratio of a quadratic and a cubic form in the
selection weights,

    crlb_i(z) = num_i(z) / den_i(z),
    num_i(z) = 3 * sum_{k,l} a_k a_l p_{kl},
    den_i(z) = 4 * sum_{k,l,m} a_k a_l a_m p_{kl} p_{lm} p_{mk},

where ``a_k = z_k * lam_bar_k`` aggregates the per-anchor link intensities of
candidate k and ``p_{kl} = sin^2((phi_k - phi_l)/2)`` depends on the bearings
from the candidates to the target.  Both forms have nonnegative terms, so the
cubic form vanishes exactly when fewer than three informative bearings are
selected (the bound is then infinite).

Two independent evaluation routes are provided: the polynomial closed form
(production path) and a matrix route that assembles the 3x3 information
matrix and takes the Schur complement of the offset coordinate (test oracle,
also the route behind gradients).
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

__all__ = [
    "SPEED_OF_LIGHT",
    "SelectionVector",
    "EavFim3",
    "SingularMetricError",
    "pairwise_angle_factor",
    "lambda_from_signal",
    "snr_from_channel",
    "eav_crlb_closed_form",
    "eav_fim_oracle",
    "eav_objective",
    "eav_objective_gradient",
]

SPEED_OF_LIGHT = 299792458.0  # m/s

# Singularity rule shared by both routes: a Schur complement with
# det <= DET_RTOL * trace^2 is treated as singular and the bound as infinite.
DET_RTOL = 1e-14


class SingularMetricError(ValueError):
    """Raised when a gradient is requested at a selection with singular information."""


@dataclass(frozen=True)
class SelectionVector:
    """Length-N vector of selection weights, binary or relaxed in [0, 1]."""

    weights: np.ndarray
    mode: str = "binary"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.mode not in ("binary", "relaxed"):
            raise ValueError(f"unknown selection mode {self.mode!r}")
        if w.ndim != 1:
            raise ValueError("selection weights must be a 1-D vector")
        if self.mode == "binary":
            if not np.all((w == 0.0) | (w == 1.0)):
                raise ValueError("binary selection weights must be exactly 0 or 1")
        elif np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("relaxed selection weights must lie in [0, 1]")

    @classmethod
    def from_indices(cls, indices, n: int) -> "SelectionVector":
        w = np.zeros(n)
        w[list(indices)] = 1.0
        return cls(w, "binary")

    @classmethod
    def relaxed(cls, weights) -> "SelectionVector":
        return cls(np.asarray(weights, dtype=float), "relaxed")

    @property
    def selected_indices(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def __len__(self) -> int:
        return self.weights.shape[0]


def as_weights(z, n: int | None = None) -> np.ndarray:
    """Coerce a SelectionVector or array-like to a weight vector."""
    w = np.asarray(getattr(z, "weights", z), dtype=float)
    if w.ndim != 1:
        raise ValueError("selection weights must be a 1-D vector")
    if n is not None and w.shape[0] != n:
        raise ValueError(f"selection length {w.shape[0]} does not match {n} candidates")
    return w


@dataclass(frozen=True)
class EavFim3:
    """Weighted trigonometric sums assembling the 3x3 information matrix.

    The matrix couples the two position coordinates with the clock offset:

        [[sum_cos2,    sum_cos_sin, sum_cos],
         [sum_cos_sin, sum_sin2,    sum_sin],
         [sum_cos,     sum_sin,     sum_total]]
    """

    sum_cos2: float
    sum_cos_sin: float
    sum_cos: float
    sum_sin2: float
    sum_sin: float
    sum_total: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.sum_cos2, self.sum_cos_sin, self.sum_cos],
            [self.sum_cos_sin, self.sum_sin2, self.sum_sin],
            [self.sum_cos, self.sum_sin, self.sum_total],
        ])


# ---------------------------------------------------------------------------
# elementary factors
# ---------------------------------------------------------------------------


def pairwise_angle_factor(phi_a: float, phi_b: float) -> float:
    """sin^2((phi_a - phi_b) / 2), the information factor of a bearing pair."""
    return math.sin((phi_a - phi_b) / 2.0) ** 2


def lambda_from_signal(beta_sq: float, snr1: float, chi: float) -> float:
    """Effective link intensity from bandwidth, first-path SNR and path overlap.

    lambda = (8 pi beta_sq / c^2) * (1 - chi) * snr1, with c the propagation
    speed.  ``chi`` in [0, 1] measures how much of the first path overlaps
    later ones (1 = no usable timing information).
    """
    if not 0.0 <= chi <= 1.0:
        raise ValueError("path overlap coefficient must lie in [0, 1]")
    if beta_sq < 0 or snr1 < 0:
        raise ValueError("beta_sq and snr1 must be nonnegative")
    return (8.0 * math.pi * beta_sq / SPEED_OF_LIGHT**2) * (1.0 - chi) * snr1


def snr_from_channel(alpha_sq: float, energy: float, noise_psd: float) -> float:
    """First-path SNR: |alpha|^2 * E / (2 sigma^2)."""
    if noise_psd <= 0:
        raise ValueError("noise power spectral density must be strictly positive")
    if alpha_sq < 0 or energy < 0:
        raise ValueError("alpha_sq and energy must be nonnegative")
    return alpha_sq * energy / (2.0 * noise_psd)


# ---------------------------------------------------------------------------
# per-scenario geometry cache
# ---------------------------------------------------------------------------


class _EavGeometry:
    """Precomputed bearings and aggregated intensities for one scenario."""

    def __init__(self, s: Scenario):
        diff = s.targets[:, None, :] - s.candidates[None, :, :]  # (T, N, 2)
        phi = np.arctan2(diff[..., 1], diff[..., 0])
        cos, sin = np.cos(phi), np.sin(phi)
        self.cos = cos
        self.sin = sin
        # sin^2((phi_k - phi_l)/2) = (1 - cos(phi_k - phi_l)) / 2
        cos_diff = cos[:, :, None] * cos[:, None, :] + sin[:, :, None] * sin[:, None, :]
        self.pairwise = 0.5 * (1.0 - cos_diff)
        np.clip(self.pairwise, 0.0, 1.0, out=self.pairwise)
        # aggregate each candidate's intensity over the anchors it listens to
        self.lam_bar = s.eav_intensity.sum(axis=1)  # (T, N)
        q = np.stack([cos, sin, np.ones_like(cos)], axis=2)  # (T, N, 3)
        self.q_vec = q
        self.q_outer = self.lam_bar[:, :, None, None] * (q[:, :, :, None] * q[:, :, None, :])


_geometry_cache: "weakref.WeakKeyDictionary[Scenario, _EavGeometry]" = (
    weakref.WeakKeyDictionary())


def _geometry(s: Scenario) -> _EavGeometry:
    geo = _geometry_cache.get(s)
    if geo is None:
        geo = _EavGeometry(s)
        _geometry_cache[s] = geo
    return geo


# ---------------------------------------------------------------------------
# closed form (production path)
# ---------------------------------------------------------------------------


def _crlb_closed_batch(s: Scenario, z: np.ndarray, target_idx: np.ndarray) -> np.ndarray:
    """Closed-form bound for each requested target, +inf where singular."""
    geo = _geometry(s)
    support = np.flatnonzero(z > 0)
    lam = geo.lam_bar[target_idx][:, support]          # (B, m)
    a = lam * z[support]
    if support.size == z.size:
        pw = geo.pairwise[target_idx]
    else:
        pw = geo.pairwise[target_idx][:, support][:, :, support]  # (B, m, m)

    if support.size == 0:
        return np.full(len(target_idx), np.inf)

    num = 3.0 * np.einsum("bk,bkl,bl->b", a, pw, a)
    w = a[:, :, None] * pw
    den = 4.0 * np.einsum("bkl,blm,bmk->b", w, w, w)
    total = a.sum(axis=1)

    out = np.full(len(target_idx), np.inf)
    ok = (total > 0) & (num > 0)
    # den <= DET_RTOL * (2/3) * num^2 / total is the polynomial-side version of
    # the shared Schur-determinant singularity rule
    with np.errstate(invalid="ignore", divide="ignore"):
        thresh = DET_RTOL * (2.0 * num * num) / (3.0 * total)
    ok &= den > thresh
    out[ok] = num[ok] / den[ok]
    return out


def eav_crlb_closed_form(s: Scenario, i: int, z) -> float:
    """Position error bound (m^2) for target ``i`` via the polynomial closed form.

    Returns +inf when the selected information is singular, e.g. when fewer
    than three distinct bearings carry weight (the unknown clock offset
    absorbs one degree of freedom).  Singularity is a value, not an error.
    """
    w = as_weights(z, s.n_candidates)
    return float(_crlb_closed_batch(s, w, np.array([i]))[0])


def eav_objective(s: Scenario, z) -> float:
    """Prior-weighted average of the per-target closed-form bounds (m^2)."""
    w = as_weights(z, s.n_candidates)
    active = np.flatnonzero(s.prior > 0)
    vals = _crlb_closed_batch(s, w, active)
    if np.any(np.isinf(vals)):
        return math.inf
    return float(s.prior[active] @ vals)


# ---------------------------------------------------------------------------
# matrix route (oracle and gradients)
# ---------------------------------------------------------------------------


def eav_fim_oracle(s: Scenario, i: int, z) -> tuple[EavFim3, float]:
    """Assemble the 3x3 information matrix for target ``i`` and invert its
    position block.

    Independent of the closed form: sums the raw per-link intensities into the
    six trigonometric moments, forms the 2x2 Schur complement eliminating the
    clock offset, and returns the trace of its (numpy) inverse.  Returns +inf
    when the Schur complement determinant falls below ``DET_RTOL * trace^2``.
    """
    zw = as_weights(z, s.n_candidates)
    lam = s.eav_intensity[i]              # (A, N), zero off LOS
    link_w = lam * zw[None, :]
    per_candidate = link_w.sum(axis=0)    # sum over anchors, (N,)

    geo = _geometry(s)
    cos, sin = geo.cos[i], geo.sin[i]
    fim = EavFim3(
        sum_cos2=float(per_candidate @ (cos * cos)),
        sum_cos_sin=float(per_candidate @ (cos * sin)),
        sum_cos=float(per_candidate @ cos),
        sum_sin2=float(per_candidate @ (sin * sin)),
        sum_sin=float(per_candidate @ sin),
        sum_total=float(per_candidate.sum()),
    )
    if fim.sum_total <= 0:
        return fim, math.inf
    j3 = fim.matrix
    pos_block = j3[:2, :2]
    offset_col = j3[:2, 2:3]
    schur = pos_block - (offset_col @ offset_col.T) / fim.sum_total
    det = schur[0, 0] * schur[1, 1] - schur[0, 1] * schur[1, 0]
    trace = schur[0, 0] + schur[1, 1]
    if trace <= 0 or det <= DET_RTOL * trace * trace:
        return fim, math.inf
    return fim, float(np.trace(np.linalg.inv(schur)))


def _objective_fim_route(s: Scenario, z: np.ndarray) -> float:
    """Objective via batched 3x3 matrices; used inside solver line searches."""
    geo = _geometry(s)
    active = np.flatnonzero(s.prior > 0)
    j3 = np.einsum("k,tkab->tab", z, geo.q_outer[active])
    return _objective_from_j3(s.prior[active], j3)


def _objective_from_j3(prior: np.ndarray, j3: np.ndarray) -> float:
    total = j3[:, 2, 2]
    if np.any(total <= 0):
        return math.inf
    c, s_ = j3[:, 0, 2], j3[:, 1, 2]
    k = j3[:, 0, 0] - c * c / total
    e = j3[:, 1, 1] - s_ * s_ / total
    d = j3[:, 0, 1] - c * s_ / total
    det = k * e - d * d
    tr = k + e
    if np.any(tr <= 0) or np.any(det <= DET_RTOL * tr * tr):
        return math.inf
    return float(prior @ (tr / det))


def eav_objective_gradient(s: Scenario, z) -> np.ndarray:
    """Exact gradient of :func:`eav_objective` at a relaxed selection.

    Uses d tr(P J^-1 P^T) = -tr(P J^-1 (dJ/dz_k) J^-1 P^T) with the 3x3
    information matrix J linear in z; every entry is nonpositive because the
    bound cannot worsen when a selection weight grows.
    """
    zw = as_weights(z, s.n_candidates)
    geo = _geometry(s)
    active = np.flatnonzero(s.prior > 0)
    j3 = np.einsum("k,tkab->tab", zw, geo.q_outer[active])
    if not math.isfinite(_objective_from_j3(s.prior[active], j3)):
        raise SingularMetricError(
            "objective is singular at z; move the selection to the strict interior "
            "(all weights positive, at least three informative bearings) before "
            "requesting gradients")
    try:
        inv = np.linalg.inv(j3)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(
            "information matrix is numerically singular at z; interiorize first") from exc
    rows = np.einsum("tab,tkb->tka", inv, geo.q_vec[active])  # J^-1 q per candidate
    position_part = rows[..., 0] ** 2 + rows[..., 1] ** 2
    return -np.einsum("t,tk,tk->k", s.prior[active], geo.lam_bar[active], position_part)
