"""Centerline tracking through the accumulation image.

Starting from the global accumulation maximum, the tracker repeatedly steps
along the local principal direction, samples a square cross-sectional patch
of the count image one step ahead, and jumps to the patch argmax. Runs in
both directions are stitched into one polyline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import OrthonormalFrame, digitize, frame_from_direction, normalize
from .errors import SeedInvalid

_MAX_TRACK_STEPS = 100000
_ZERO_DIR = 1e-12


@dataclass
class Patch:
    """Square slice of the count image orthogonal to the track direction."""

    frame: OrthonormalFrame  # w = tracking direction, center = patch center
    size: int
    gridstep: float
    values: np.ndarray

    def world_of_pixel(self, a, b):
        m = self.size // 2
        return (self.frame.center
                + (a - m) * self.gridstep * self.frame.u
                + (b - m) * self.gridstep * self.frame.v)

    def argmax_world(self):
        """World position of the maximal pixel; ties go to the smallest
        (row, col) in scan order."""
        flat = int(np.argmax(self.values))
        a, b = divmod(flat, self.size)
        return self.world_of_pixel(a, b)


@dataclass
class Centerline:
    points: np.ndarray
    directions: np.ndarray
    source_max_pt: tuple | None = None
    closed: bool = False
    refined: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.directions = np.atleast_2d(np.asarray(self.directions, dtype=float))

    def __len__(self):
        return len(self.points)

    def segment_lengths(self):
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)


def _sample_trilinear(values, domain, points):
    """Trilinear interpolation of a voxel grid at world points (0 outside)."""
    points = np.atleast_2d(points)
    coords = (points - domain.origin) / domain.gridstep - 0.5
    return ndimage.map_coordinates(values.astype(float), coords.T, order=1,
                                   mode="constant", cval=0.0)


def _voxel_dir(res, point):
    """Direction image value at the voxel containing a world point."""
    idx = np.floor((np.asarray(point) - res.domain.origin) / res.domain.gridstep).astype(int)
    if np.any(idx < 0) or np.any(idx >= np.asarray(res.domain.dims)):
        return np.zeros(3)
    return res.directions.values[tuple(idx)]


def patch_size(acc_radius, gridstep):
    return 2 * int(math.ceil(acc_radius / gridstep)) + 1


def _ridge_direction(res, point, acc_radius):
    """Principal axis of the count ridge in a patch-sized box around a point.

    Fallback for degenerate direction images. On fine structured meshes
    adjacent faces can be nearly parallel, so consecutive vote rays fail the
    cross-product norm gate and the direction image stays zero even on the
    axis. The count image still carries the ridge; its count^2-weighted
    principal component recovers the local direction (sign is arbitrary).
    Returns None when the box is empty or has no dominant axis.
    """
    dom = res.domain
    idx = digitize(point, dom)
    if idx is None:
        return None
    half = int(math.ceil(acc_radius / dom.gridstep))
    lo = np.maximum(np.asarray(idx) - half, 0)
    hi = np.minimum(np.asarray(idx) + half + 1, np.asarray(dom.dims))
    sub = res.acc.values[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]].astype(float)
    w = sub.ravel() ** 2
    total = w.sum()
    if total <= 0:
        return None
    axes = np.meshgrid(*(np.arange(lo[a], hi[a]) for a in range(3)), indexing="ij")
    pts = dom.origin + dom.gridstep * (np.stack([a.ravel() for a in axes], axis=1) + 0.5)
    mu = (w[:, None] * pts).sum(axis=0) / total
    cen = pts - mu
    cov = np.einsum("v,vi,vj->ij", w, cen, cen) / total
    vals, vecs = np.linalg.eigh(cov)
    # require a clearly dominant axis so blobs cannot fabricate a direction
    if vals[2] <= _ZERO_DIR or vals[2] < 2.0 * vals[1]:
        return None
    return vecs[:, 2]


def _local_direction(res, point, acc_radius):
    """Unit tracking direction at a point: the direction image where it is
    nonzero, otherwise the count-ridge principal axis. None if neither."""
    d = _voxel_dir(res, point)
    n = np.linalg.norm(d)
    if n > _ZERO_DIR:
        return d / n
    return _ridge_direction(res, point, acc_radius)


def extract_patch(acc, domain, center, direction, acc_radius) -> Patch:
    """Sample the square patch orthogonal to `direction` centered on
    `center`, with pixel pitch = gridstep and side covering 2*acc_radius."""
    frame = frame_from_direction(normalize(np.asarray(direction, dtype=float)),
                                 center=center)
    size = patch_size(acc_radius, domain.gridstep)
    m = size // 2
    offs = (np.arange(size) - m) * domain.gridstep
    pts = (frame.center
           + offs[:, None, None] * frame.u
           + offs[None, :, None] * frame.v)
    values = _sample_trilinear(acc.values, domain, pts.reshape(-1, 3)).reshape(size, size)
    return Patch(frame=frame, size=size, gridstep=domain.gridstep, values=values)


def is_inside_tube(res, current, previous, ref_value, inside_threshold=0.5,
                   max_angle=math.pi / 3, direction=None):
    """Continuation test: enough accumulation support at `current`, and the
    last step roughly follows the local principal direction (whose sign is
    ambiguous, so the angle is folded into [0, pi/2]).

    ref_value is the reference accumulation level of the run. Tracking uses
    a low running quantile of the accepted points rather than the seed value
    alone: bends and cap discs focus the vote rays and can elevate the seed
    severalfold above the level of straight sections, which would starve
    the test there. `direction` overrides the sampled direction image (the
    tracker passes its own estimate so both stages agree).
    """
    level = _sample_trilinear(res.acc.values, res.domain, current)[0]
    if level < inside_threshold * ref_value:
        return False
    d = _voxel_dir(res, current) if direction is None else np.asarray(direction, dtype=float)
    dn = np.linalg.norm(d)
    step = np.asarray(current, dtype=float) - np.asarray(previous, dtype=float)
    sn = np.linalg.norm(step)
    if dn <= _ZERO_DIR or sn <= _ZERO_DIR:
        return True
    cosang = abs(float(np.dot(step, d)) / (sn * dn))
    return math.acos(min(cosang, 1.0)) <= max_angle


def track_direction(res, start, in_front, track_step, acc_radius,
                    inside_threshold=0.5, max_angle=math.pi / 3):
    """One directional tracking run; returns (points, closed_flag).

    Stops when the continuation test fails, the next patch would leave the
    domain, the patch is empty, the local direction vanishes, or the run
    loops back to its start (closed tube).
    """
    start = np.asarray(start, dtype=float)
    d0 = _local_direction(res, start, acc_radius)
    if d0 is None:
        raise SeedInvalid("direction image vanishes at the tracking seed")
    last_vect = d0 * (1.0 if in_front else -1.0)
    levels = [_sample_trilinear(res.acc.values, res.domain, start)[0]]

    current = start
    previous = start - last_vect * track_step
    points = [current.copy()]
    closed = False

    for step_i in range(_MAX_TRACK_STEPS):
        dir_vect = _local_direction(res, current, acc_radius)
        if dir_vect is not None and float(np.dot(last_vect, dir_vect)) < 0:
            dir_vect = -dir_vect
        ref = float(np.percentile(levels, 25))
        if not is_inside_tube(res, current, previous, ref,
                              inside_threshold, max_angle, direction=dir_vect):
            # the point that fails the continuation test is outside the tube;
            # drop it instead of leaving one overshoot point per open end
            if len(points) > 1:
                points.pop()
                levels.pop()
            break
        if dir_vect is None:
            break
        patch_center = current + dir_vect * track_step
        if not res.domain.contains_point(patch_center):
            break
        patch = extract_patch(res.acc, res.domain, patch_center, dir_vect, acc_radius)
        if patch.values.max() <= 0:
            break
        nxt = patch.argmax_world()
        if np.linalg.norm(nxt - current) <= _ZERO_DIR:
            break
        previous = current
        last_vect = dir_vect
        current = nxt
        points.append(current.copy())
        levels.append(_sample_trilinear(res.acc.values, res.domain, current)[0])
        if step_i >= 2 and np.linalg.norm(current - start) < 0.75 * track_step:
            closed = True
            break
    return np.asarray(points), closed


def _polyline_directions(points, closed=False):
    """Per-point unit tangents by central differences (one-sided at open
    ends, wrapped when closed)."""
    points = np.atleast_2d(points)
    n = len(points)
    if n == 1:
        return np.array([[1.0, 0.0, 0.0]])
    dirs = np.empty_like(points)
    if closed and n > 2:
        nxt = np.roll(points, -1, axis=0)
        prv = np.roll(points, 1, axis=0)
        dirs = nxt - prv
    else:
        dirs[0] = points[1] - points[0]
        dirs[-1] = points[-1] - points[-2]
        if n > 2:
            dirs[1:-1] = points[2:] - points[:-2]
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0] = 1.0
    return dirs / norms[:, None]


def extract_centerline(res, track_step, acc_radius, inside_threshold=0.5,
                       max_angle=math.pi / 3) -> Centerline:
    """Full centerline through the accumulation maximum.

    Tracks forward and backward from the seed voxel and concatenates the
    runs with the seed appearing once. A run that returns to the seed marks
    the centerline closed, as does a head-tail gap below track_step.
    """
    if res.max_acc < 2:
        raise SeedInvalid(f"accumulation maximum {res.max_acc} is too weak to seed tracking")
    seed = res.domain.voxel_center(res.max_pt)

    fwd, closed = track_direction(res, seed, True, track_step, acc_radius,
                                  inside_threshold, max_angle)
    if closed:
        points = fwd
    else:
        bwd, closed_b = track_direction(res, seed, False, track_step, acc_radius,
                                        inside_threshold, max_angle)
        if closed_b:
            points, closed = bwd, True
        else:
            points = np.concatenate([bwd[::-1], fwd[1:]]) if len(bwd) > 1 else fwd

    if not closed and len(points) > 2:
        closed = np.linalg.norm(points[0] - points[-1]) < track_step
    dirs = _polyline_directions(points, closed)
    return Centerline(points=points, directions=dirs,
                      source_max_pt=res.max_pt, closed=closed)
