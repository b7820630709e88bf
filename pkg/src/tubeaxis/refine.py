"""Centerline refinement by known-radius least squares.

Each centerline point C collects nearby surface points M_j (a slab
orthogonal to the local tangent) and descends the energy

    E(C) = sum_j (|C M_j| - R)^2

whose gradient is g = 2 sum_j (CM_j/|CM_j|) (R - |CM_j|). The update walks
along the resultant force f = sum_j (CM_j/|CM_j|)(|CM_j| - R), which equals
-g/2 exactly, with backtracking step halving so E never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPoint, TooFewPoints
from .track import Centerline, _polyline_directions

_MIN_DIST = 1e-12


@dataclass(frozen=True)
class RefineParams:
    radius: float
    acc_radius: float
    track_step: float
    step_scale: float = 0.5       # initial step = step_scale / (number of points)
    epsilon_o: float = 0.001      # stop when |E_prev - E| drops below this
    max_iter: int = 1000
    area_weighting: bool = False


@dataclass
class SectionAssociation:
    """Surface points attached to centerline point i."""

    index: int
    points: np.ndarray
    weights: np.ndarray | None = None


def section_points(centerline, faces, i, acc_radius, track_step,
                   use_areas=False) -> SectionAssociation:
    """Face centers within acc_radius of C_i whose axial offset along the
    local direction d_i falls in the slab (-track_step/2, +track_step/2]."""
    c = centerline.points[i]
    d = centerline.directions[i]
    rel = faces.centers - c
    dist = np.linalg.norm(rel, axis=1)
    proj = rel @ d
    sel = (dist <= acc_radius) & (proj > -0.5 * track_step) & (proj <= 0.5 * track_step)
    if int(sel.sum()) < 3:
        raise TooFewPoints(f"only {int(sel.sum())} surface points near centerline point {i}")
    weights = faces.areas[sel] if use_areas else None
    return SectionAssociation(index=i, points=faces.centers[sel], weights=weights)


def energy_and_gradient(c, points, radius, weights=None):
    """Evaluate E, its gradient g and the resultant force f at center c.

    Returns (E, g, f); f == -g/2 holds exactly. Weights (face areas)
    multiply each point's term.
    """
    c = np.asarray(c, dtype=float)
    rel = np.atleast_2d(points) - c  # CM_j
    dist = np.linalg.norm(rel, axis=1)
    if np.any(dist <= _MIN_DIST):
        bad = int(np.argmin(dist))
        raise CoincidentPoint(f"surface point {bad} coincides with the center")
    unit = rel / dist[:, None]
    w = np.ones(len(dist)) if weights is None else np.asarray(weights, dtype=float)
    e = float(np.sum(w * (dist - radius) ** 2))
    g = 2.0 * np.einsum("i,ij->j", w * (radius - dist), unit)
    f = np.einsum("i,ij->j", w * (dist - radius), unit)
    return e, g, f


def optimize_point(c0, points, radius, step_scale=0.5, epsilon_o=0.001,
                   max_iter=1000, weights=None):
    """Gradient walk of a single center along f with backtracking halving.

    Accepted iterations never increase E; stops when the accepted energy
    drop falls below epsilon_o or the iteration budget runs out. Returns
    (refined point, final energy, iterations used).
    """
    c = np.asarray(c0, dtype=float).copy()
    denom = len(np.atleast_2d(points)) if weights is None else float(np.sum(weights))
    step = step_scale / max(denom, _MIN_DIST)
    e, _, f = energy_and_gradient(c, points, radius, weights)
    for it in range(1, max_iter + 1):
        if np.linalg.norm(f) <= _MIN_DIST:
            return c, e, it
        cand = c + step * f
        try:
            e_new, _, f_new = energy_and_gradient(cand, points, radius, weights)
        except CoincidentPoint:
            step *= 0.5
            continue
        if e_new > e:
            step *= 0.5
            continue
        moved = abs(e - e_new)
        c, e, f = cand, e_new, f_new
        if moved < epsilon_o:
            return c, e, it
    return c, e, max_iter


def optimize_centerline(centerline, faces, params: RefineParams) -> Centerline:
    """Refine every centerline point independently.

    Points with fewer than 3 associated surface points are passed through
    untouched; the returned centerline's `refined` mask records which
    points actually moved through the optimizer.
    """
    pts = centerline.points.copy()
    refined = np.zeros(len(pts), dtype=bool)
    for i in range(len(pts)):
        try:
            assoc = section_points(centerline, faces, i, params.acc_radius,
                                   params.track_step, use_areas=params.area_weighting)
        except TooFewPoints:
            continue
        pts[i], _, _ = optimize_point(pts[i], assoc.points, params.radius,
                                      step_scale=params.step_scale,
                                      epsilon_o=params.epsilon_o,
                                      max_iter=params.max_iter,
                                      weights=assoc.weights)
        refined[i] = True
    dirs = _polyline_directions(pts, centerline.closed)
    return Centerline(points=pts, directions=dirs,
                      source_max_pt=centerline.source_max_pt,
                      closed=centerline.closed, refined=refined)
