"""Directional vote accumulation along inward face normals.

Every face casts a ray from its center along its (inward) unit normal,
stepping by gridstep while still closer than accRadius to the start. Each
visited voxel counts one vote; from the second visit on, the cross product
of the previous and current visiting normals accumulates into a principal
direction per voxel. For an ideal tube of radius R and accRadius slightly
above R, votes pile up on the axis and the per-voxel direction aligns with
it.

The implementation is fully vectorized but reproduces the sequential
per-face, per-step semantics exactly: votes are order-free, and the
direction update (whose sign choice depends on the running value) is
replayed per visit rank, which is equivalent to per-voxel chronological
order because a voxel's direction only changes when that voxel is visited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GridDomain, ScalarGrid3, VectorGrid3
from .errors import DomainTooSmall, EmptyInput

_STEP_EPS = 1e-9


@dataclass(frozen=True)
class AccumulationParams:
    """Scan geometry: tube radius, slack, lattice resolution.

    acc_radius = radius + epsilon bounds the scan length; epsilon defaults
    to 0.1*radius. min_norm discards near-parallel normal pairs whose cross
    product is too short to carry direction information.
    """

    radius: float
    epsilon: float | None = None
    gridstep: float = 1.0
    min_norm: float = 0.1

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.gridstep <= 0:
            raise ValueError("gridstep must be positive")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", 0.1 * self.radius)
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not 0 < self.min_norm < 1:
            raise ValueError("min_norm must be in (0, 1)")

    @property
    def acc_radius(self):
        return self.radius + self.epsilon

    @property
    def n_steps(self):
        """Number of marching positions per scan (distance < acc_radius)."""
        return int(math.ceil(self.acc_radius / self.gridstep - _STEP_EPS))


@dataclass
class AccumulationResult:
    acc: ScalarGrid3
    directions: VectorGrid3
    max_acc: int
    max_pt: tuple
    domain: GridDomain = field(repr=False, default=None)


def accumulation_domain(points, params: AccumulationParams) -> GridDomain:
    """Bounding lattice of the scan: point bbox plus acc_radius and one
    voxel of margin on every side."""
    points = np.atleast_2d(points)
    if points.size == 0:
        raise EmptyInput("no points to build a domain around")
    pad = params.acc_radius + params.gridstep
    lo = points.min(axis=0) - pad
    hi = points.max(axis=0) + pad
    dims = np.maximum(np.ceil((hi - lo) / params.gridstep).astype(int), 1)
    return GridDomain(origin=lo, gridstep=params.gridstep, dims=tuple(dims))


def _march_events(faces, params, domain):
    """All (face, step) -> voxel visit events, in scan order.

    Returns (event voxel linear ids, event normals, n_voxels). Events are
    ordered face-major then step-minor, which is the sequential visit order.
    Out-of-domain positions are dropped; the domain box is convex so a ray
    that exits never re-enters, making the drop a clean truncation.
    """
    centers = faces.centers
    normals = faces.normals
    nsteps = params.n_steps
    steps = np.arange(nsteps, dtype=float) * params.gridstep

    # positions[f, s] = center_f + s*gridstep*normal_f
    pos = centers[:, None, :] + steps[None, :, None] * normals[:, None, :]
    idx = np.floor((pos - domain.origin) / domain.gridstep).astype(np.int64)
    dims = np.asarray(domain.dims)
    inb = np.all((idx >= 0) & (idx < dims), axis=2)
    if not inb[:, 0].all():
        bad = int(np.flatnonzero(~inb[:, 0])[0])
        raise DomainTooSmall(f"scan of face {bad} starts outside the domain")

    flat = idx[..., 0] * (dims[1] * dims[2]) + idx[..., 1] * dims[2] + idx[..., 2]
    keep = inb.ravel()
    ev_voxel = flat.ravel()[keep]
    ev_normal = np.repeat(normals, nsteps, axis=0)[keep]
    return ev_voxel, ev_normal, int(dims.prod())


def compute_accumulation(faces, params: AccumulationParams,
                         domain: GridDomain | None = None) -> AccumulationResult:
    """Run all scans and build the count and direction images.

    max_pt is the voxel whose count first reached the final maximum, in
    scan order (ties on the count value are impossible under the
    strictly-greater update rule this mirrors).
    """
    if len(faces) == 0:
        raise EmptyInput("no faces to accumulate")
    if domain is None:
        domain = accumulation_domain(faces.centers, params)

    ev_voxel, ev_normal, nvox = _march_events(faces, params, domain)
    counts = np.bincount(ev_voxel, minlength=nvox)
    max_acc = int(counts.max())

    # group events by voxel, preserving chronological order inside groups
    order = np.argsort(ev_voxel, kind="stable")
    sorted_voxel = ev_voxel[order]
    group_start = np.zeros(len(order), dtype=np.int64)
    new_group = np.flatnonzero(sorted_voxel[1:] != sorted_voxel[:-1]) + 1
    group_start[new_group] = new_group
    np.maximum.accumulate(group_start, out=group_start)
    rank = np.arange(len(order)) - group_start  # visit number within voxel

    # first voxel to reach the final maximum wins
    at_max_rank = np.flatnonzero(rank == max_acc - 1)
    winner_pos = at_max_rank[np.argmin(order[at_max_rank])]
    dims = np.asarray(domain.dims)
    v = int(sorted_voxel[winner_pos])
    max_pt = (v // (dims[1] * dims[2]), (v // dims[2]) % dims[1], v % dims[2])

    # direction image: replay the sign-dependent update rank by rank
    sorted_normal = ev_normal[order]
    cross = np.empty_like(sorted_normal)
    cross[0] = 0.0
    cross[1:] = np.cross(sorted_normal[:-1], sorted_normal[1:])
    eligible = (rank >= 1) & (np.linalg.norm(cross, axis=1) > params.min_norm)

    # bucket eligible events by rank up front; scanning all events once per
    # rank would cost O(max_acc * n_events) and break linear-time scaling
    elig_idx = np.flatnonzero(eligible)
    rorder = np.argsort(rank[elig_idx], kind="stable")
    by_rank = elig_idx[rorder]
    ranks_sorted = rank[elig_idx][rorder]
    bounds = np.concatenate([[0], np.flatnonzero(np.diff(ranks_sorted)) + 1,
                             [len(by_rank)]])

    dir_flat = np.zeros((nvox, 3))
    for b0, b1 in zip(bounds[:-1], bounds[1:]):
        sel = by_rank[b0:b1]
        # a voxel is visited at most once per rank, so these updates are
        # independent and fancy-index += is safe
        vox = sorted_voxel[sel]
        axis = cross[sel]
        sign = np.sign(np.einsum("ij,ij->i", axis, dir_flat[vox]))
        sign[sign == 0] = 1.0
        dir_flat[vox] += axis * sign[:, None]

    acc = ScalarGrid3(domain, counts.reshape(domain.dims).astype(np.uint32))
    directions = VectorGrid3(domain, dir_flat.reshape(domain.dims + (3,)))
    return AccumulationResult(acc=acc, directions=directions, max_acc=max_acc,
                              max_pt=tuple(int(i) for i in max_pt), domain=domain)
