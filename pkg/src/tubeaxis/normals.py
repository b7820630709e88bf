"""Per-face normals oriented toward the tube interior.

Meshes get exact cross-product normals. Digital surfaces (voxel boundaries)
start from axis-aligned facet normals which are then smoothed by local
covariance analysis; a cheap accumulation probe resolves which global
orientation actually points inward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateFace, EmptyInput

_FACET_DIRS = np.array([
    [1, 0, 0], [-1, 0, 0],
    [0, 1, 0], [0, -1, 0],
    [0, 0, 1], [0, 0, -1],
], dtype=np.int64)


@dataclass
class OrientedFaceSet:
    """Face centers with unit normals and areas, in input face order."""

    centers: np.ndarray
    normals: np.ndarray
    areas: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        self.areas = np.asarray(self.areas, dtype=float).ravel()
        n = len(self.centers)
        if len(self.normals) != n or len(self.areas) != n:
            raise ValueError("centers, normals and areas must have equal length")

    def __len__(self):
        return len(self.centers)

    def flipped(self):
        return OrientedFaceSet(self.centers, -self.normals, self.areas)


def face_normals(mesh) -> OrientedFaceSet:
    """Exact per-face normals, centroids and areas of a triangle mesh.

    If the mesh carries precomputed unit normals they take precedence over
    the cross-product orientation.
    """
    a, b, c = mesh.corners()
    cross = np.cross(b - a, c - a)
    norms = np.linalg.norm(cross, axis=1)
    if np.any(norms <= 1e-12):
        bad = int(np.argmin(norms))
        raise DegenerateFace(f"face {bad} has zero area")
    normals = cross / norms[:, None]
    if mesh.face_normals is not None and len(mesh.face_normals) == len(normals):
        normals = mesh.face_normals / np.linalg.norm(mesh.face_normals, axis=1)[:, None]
    centers = (a + b + c) / 3.0
    return OrientedFaceSet(centers, normals, 0.5 * norms)


def digital_surface_faces(voxels) -> OrientedFaceSet:
    """Boundary facets of a voxel set with provisional outward axis normals.

    A voxel at lattice point p occupies the unit cube [p, p+1]^3; every cube
    face adjacent to a non-set voxel becomes one facet of area 1 centered on
    that cube face. Pass the result through estimate_digital_normals to get
    smoothed inward normals.
    """
    pts = np.asarray(voxels.points, dtype=np.int64).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyInput("voxel set is empty")
    occupied = set(map(tuple, pts))
    centers, normals = [], []
    for p in pts:
        for d in _FACET_DIRS:
            if tuple(p + d) not in occupied:
                centers.append(p + 0.5 + 0.5 * d)
                normals.append(d)
    return OrientedFaceSet(np.asarray(centers, dtype=float),
                           np.asarray(normals, dtype=float),
                           np.ones(len(centers)))


def estimate_digital_normals(faces: OrientedFaceSet, radius: float) -> OrientedFaceSet:
    """Covariance-smoothed inward normals for digital surface facets.

    Each facet's normal becomes the smallest-eigenvalue eigenvector of the
    covariance of facet centers within `radius`, signed opposite to the
    provisional outward normal (so the result points inward). Facets with
    fewer than 3 neighbors keep their provisional normal untouched.
    """
    centers = faces.centers
    tree = cKDTree(centers)
    neighborhoods = tree.query_ball_point(centers, r=float(radius))
    normals = faces.normals.copy()
    for i, idx in enumerate(neighborhoods):
        if len(idx) < 3:
            continue
        local = centers[idx]
        cov = np.cov(local.T, bias=True)
        w, v = np.linalg.eigh(cov)
        n = v[:, 0]
        # sign-match to outward, then flip inward
        if np.dot(n, faces.normals[i]) < 0:
            n = -n
        normals[i] = -n
    return OrientedFaceSet(centers, normals, faces.areas)


def orient_inward(faces: OrientedFaceSet, mesh=None, mode="auto",
                  radius=None) -> OrientedFaceSet:
    """Resolve the global inward/outward ambiguity of a face set.

    mode="flip" negates all normals, mode="keep" returns the input as is,
    and mode="auto" probes both orientations with a coarse accumulation and
    keeps whichever concentrates more votes (inward scans pile up on the
    axis, outward scans disperse).
    """
    if mode == "keep":
        return faces
    if mode == "flip":
        return faces.flipped()
    if mode != "auto":
        raise ValueError(f"unknown orientation mode {mode!r}")

    from .accumulate import AccumulationParams, accumulation_domain, compute_accumulation

    lo = faces.centers.min(axis=0)
    hi = faces.centers.max(axis=0)
    extent = float((hi - lo).max())
    if radius is None:
        radius = 0.25 * max(extent, 1e-9)
    # coarse lattice: few-step scans are enough to tell the orientations apart
    gridstep = max(extent / 48.0, radius / 3.0)
    params = AccumulationParams(radius=radius, epsilon=0.0, gridstep=gridstep)
    best = None
    for cand in (faces, faces.flipped()):
        domain = accumulation_domain(cand.centers, params)
        res = compute_accumulation(cand, params, domain)
        if best is None or res.max_acc > best[0]:
            best = (res.max_acc, cand)
    return best[1]
