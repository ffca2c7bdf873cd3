"""Anchor-side localization error bound under jamming, and its derivatives.

Each LOS anchor j contributes a rank-one term to the 2x2 equivalent Fisher
information matrix of target i,

    M_i(z) = sum_j g_ij(z) * phi_ij phi_ij^T,
    g_ij(z) = lam_ij / (noise_j + sum_k z_k P_k gain_kj),

where phi_ij is the unit bearing vector from anchor j to target i and the
denominator accumulates the received jamming power of the selected candidate
positions.  The jammed localization bound is tr(M_i^{-1}); jammers want it
large.  A power-vector variant replaces ``z_k P_k`` by free per-candidate
powers q_k.

2x2 inverses are taken in closed form (adjugate over determinant); a matrix
whose determinant falls below ``DET_RTOL * trace^2`` counts as singular and
yields an infinite bound (fewer than two LOS anchors with distinct bearings).
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .eav_metrics import DET_RTOL, SingularMetricError, as_weights
from .scenario import Scenario

__all__ = [
    "JamEfim2",
    "jam_link_weight",
    "jam_efim",
    "jam_crlb",
    "jam_objective",
    "jam_objective_gradient",
    "jam_objective_power",
    "jam_power_gradient",
]


@dataclass(frozen=True)
class JamEfim2:
    """2x2 information matrix of one target plus its per-anchor link weights."""

    matrix: np.ndarray        # (2, 2)
    link_weights: np.ndarray  # (n_anchors,), zero off the anchor LOS map


class _JamGeometry:
    """Anchor bearing vectors and their outer products, cached per scenario."""

    def __init__(self, s: Scenario):
        diff = s.targets[:, None, :] - s.anchors[None, :, :]  # (T, A, 2)
        norms = np.linalg.norm(diff, axis=2)
        phi = np.arctan2(diff[..., 1], diff[..., 0])
        self.phi_vec = np.stack([np.cos(phi), np.sin(phi)], axis=2)  # (T, A, 2)
        self.phi_outer = self.phi_vec[:, :, :, None] * self.phi_vec[:, :, None, :]
        del norms


_geometry_cache: "weakref.WeakKeyDictionary[Scenario, _JamGeometry]" = (
    weakref.WeakKeyDictionary())


def _geometry(s: Scenario) -> _JamGeometry:
    geo = _geometry_cache.get(s)
    if geo is None:
        geo = _JamGeometry(s)
        _geometry_cache[s] = geo
    return geo


def _link_weights(s: Scenario, q: np.ndarray) -> np.ndarray:
    """g_ij for every (target, anchor) given per-candidate jamming powers q."""
    load = q @ s.jam_channel_gain          # (A,) received jamming power
    return s.jam_anchor_intensity / (s.jam_noise + load)[None, :]


def jam_link_weight(s: Scenario, i: int, j: int, z) -> float:
    """g_ij(z) = lam_ij / (noise_j + sum_k z_k P_k gain_kj) for a LOS anchor."""
    if not s.anchor_los[i, j]:
        raise ValueError(f"anchor {j} has no LOS connection to target {i}")
    q = as_weights(z, s.n_candidates) * s.jam_powers
    return float(_link_weights(s, q)[i, j])


def jam_efim(s: Scenario, i: int, z) -> JamEfim2:
    """Information matrix of target ``i`` under the selection ``z``."""
    q = as_weights(z, s.n_candidates) * s.jam_powers
    g = _link_weights(s, q)[i]
    geo = _geometry(s)
    m = np.einsum("j,jab->ab", g, geo.phi_outer[i])
    return JamEfim2(matrix=m, link_weights=g)


def _crlb_batch(s: Scenario, q: np.ndarray, target_idx: np.ndarray) -> np.ndarray:
    g = _link_weights(s, q)[target_idx]
    geo = _geometry(s)
    m = np.einsum("tj,tjab->tab", g, geo.phi_outer[target_idx])
    tr = m[:, 0, 0] + m[:, 1, 1]
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    out = np.full(len(target_idx), np.inf)
    ok = (tr > 0) & (det > DET_RTOL * tr * tr)
    out[ok] = tr[ok] / det[ok]
    return out


def jam_crlb(s: Scenario, i: int, z) -> float:
    """Jammed position error bound (m^2) for target ``i``; +inf when singular."""
    q = as_weights(z, s.n_candidates) * s.jam_powers
    return float(_crlb_batch(s, q, np.array([i]))[0])


def jam_objective_power(s: Scenario, q) -> float:
    """Prior-weighted jammed bound with explicit per-candidate powers q >= 0."""
    qa = np.asarray(q, dtype=float)
    if qa.shape != (s.n_candidates,):
        raise ValueError("power vector length must match the candidate count")
    if np.any(qa < 0):
        raise ValueError("powers must be nonnegative")
    active = np.flatnonzero(s.prior > 0)
    vals = _crlb_batch(s, qa, active)
    if np.any(np.isinf(vals)):
        return math.inf
    return float(s.prior[active] @ vals)


def jam_objective(s: Scenario, z) -> float:
    """Prior-weighted jammed bound for a selection (powers z_k * P_k)."""
    q = as_weights(z, s.n_candidates) * s.jam_powers
    return jam_objective_power(s, q)


def _power_gradient(s: Scenario, q: np.ndarray) -> np.ndarray:
    """d jam_objective_power / dq, nonnegative (more jamming, larger bound)."""
    active = np.flatnonzero(s.prior > 0)
    load = q @ s.jam_channel_gain
    den = s.jam_noise + load                              # (A,)
    g = s.jam_anchor_intensity[active] / den[None, :]     # (B, A)
    geo = _geometry(s)
    m = np.einsum("tj,tjab->tab", g, geo.phi_outer[active])
    tr = m[:, 0, 0] + m[:, 1, 1]
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    if np.any(tr <= 0) or np.any(det <= DET_RTOL * tr * tr):
        raise SingularMetricError(
            "jammed information matrix is singular for some target; "
            "the objective has no gradient here")
    inv = np.empty_like(m)
    inv[:, 0, 0] = m[:, 1, 1]
    inv[:, 1, 1] = m[:, 0, 0]
    inv[:, 0, 1] = -m[:, 0, 1]
    inv[:, 1, 0] = -m[:, 1, 0]
    inv /= det[:, None, None]
    rows = np.einsum("tab,tjb->tja", inv, geo.phi_vec[active])  # M^-1 phi_ij
    sq = rows[..., 0] ** 2 + rows[..., 1] ** 2
    # d g_ij / dq_l = -g_ij * gain_lj / den_j, so each anchor contributes
    # (sum_t w_t g_tj ||M^-1 phi||^2) / den_j through its gain column
    col = np.einsum("t,tj,tj->j", s.prior[active], g, sq) / den
    return s.jam_channel_gain @ col


def jam_power_gradient(s: Scenario, q) -> np.ndarray:
    """Exact gradient of :func:`jam_objective_power`."""
    qa = np.asarray(q, dtype=float)
    if qa.shape != (s.n_candidates,):
        raise ValueError("power vector length must match the candidate count")
    return _power_gradient(s, qa)


def jam_objective_gradient(s: Scenario, z) -> np.ndarray:
    """Exact gradient of :func:`jam_objective`; entries are nonnegative."""
    zw = as_weights(z, s.n_candidates)
    return _power_gradient(s, zw * s.jam_powers) * s.jam_powers
