"""Vote accumulation against a plain sequential reference implementation."""

import math

import numpy as np
import pytest

import tubeaxis as tx
from tubeaxis.accumulate import accumulation_domain

from conftest import random_unit_vectors


def sequential_accumulate(faces, params, domain):
    """Literal per-face, per-step replay of the accumulation rules."""
    dims = domain.dims
    counts = {}
    last_normal = {}
    dirs = {}
    best, best_vox = 0, None
    for fi in range(len(faces)):
        c = faces.centers[fi]
        n = faces.normals[fi]
        for s in range(params.n_steps):
            p = c + s * params.gridstep * n
            i = tuple(int(v) for v in
                      np.floor((p - domain.origin) / domain.gridstep))
            if not all(0 <= i[a] < dims[a] for a in range(3)):
                continue
            counts[i] = counts.get(i, 0) + 1
            if counts[i] > best:  # strictly greater: first to reach wins
                best, best_vox = counts[i], i
            if i in last_normal:
                axis = np.cross(last_normal[i], n)
                if np.linalg.norm(axis) > params.min_norm:
                    d = dirs.get(i, np.zeros(3))
                    sign = np.sign(float(np.dot(axis, d)))
                    if sign == 0:
                        sign = 1.0
                    dirs[i] = d + sign * axis
            last_normal[i] = n
    return counts, dirs, best, best_vox


def _random_faces(rng, n, box=10.0):
    centers = rng.uniform(0, box, size=(n, 3))
    normals = random_unit_vectors(rng, n)
    return tx.OrientedFaceSet(centers, normals, np.ones(n))


@pytest.mark.parametrize("seed,n,radius,gridstep,min_norm", [
    (0, 40, 3.0, 0.8, 0.1),
    (1, 120, 2.0, 0.5, 0.1),
    (2, 60, 4.0, 1.3, 0.3),
])
def test_matches_sequential_reference(seed, n, radius, gridstep, min_norm):
    rng = np.random.default_rng(seed)
    faces = _random_faces(rng, n)
    params = tx.AccumulationParams(radius=radius, gridstep=gridstep,
                                   min_norm=min_norm)
    res = tx.compute_accumulation(faces, params)
    counts, dirs, best, best_vox = sequential_accumulate(faces, params,
                                                         res.domain)
    dense = np.zeros(res.domain.dims, dtype=int)
    for i, v in counts.items():
        dense[i] = v
    assert np.array_equal(res.acc.values, dense)
    assert res.max_acc == best
    assert res.max_pt == best_vox
    dense_dir = np.zeros(res.domain.dims + (3,))
    for i, v in dirs.items():
        dense_dir[i] = v
    assert np.allclose(res.directions.values, dense_dir, atol=1e-12)


def test_duplicate_rays_hit_the_sign_rule():
    # many coincident scans force repeat visits and direction updates
    rng = np.random.default_rng(9)
    base = _random_faces(rng, 12, box=2.0)
    centers = np.tile(base.centers, (4, 1)) + rng.normal(scale=0.05,
                                                         size=(48, 3))
    normals = np.tile(base.normals, (4, 1))
    faces = tx.OrientedFaceSet(centers, normals, np.ones(48))
    params = tx.AccumulationParams(radius=3.0, gridstep=0.7)
    res = tx.compute_accumulation(faces, params)
    counts, dirs, best, best_vox = sequential_accumulate(faces, params,
                                                         res.domain)
    assert res.max_acc == best and res.max_pt == best_vox
    for i, v in dirs.items():
        assert np.allclose(res.directions.values[i], v, atol=1e-12)


def test_step_count_covers_distance_below_acc_radius():
    p = tx.AccumulationParams(radius=5.0, gridstep=1.0)  # acc = 5.5
    assert p.n_steps == 6  # marched distances 0..5 < 5.5
    p = tx.AccumulationParams(radius=5.0, epsilon=0.0, gridstep=1.0)
    assert p.n_steps == 5  # 0..4 < 5.0, the 5.0 sample is excluded
    p = tx.AccumulationParams(radius=2.0, epsilon=0.0, gridstep=0.5)
    assert p.n_steps == 4


def test_single_ray_marks_a_line_of_voxels():
    faces = tx.OrientedFaceSet(np.array([[0.0, 0.0, 0.0]]),
                               np.array([[1.0, 0.0, 0.0]]), np.ones(1))
    params = tx.AccumulationParams(radius=2.0, epsilon=0.0, gridstep=1.0)
    res = tx.compute_accumulation(faces, params)
    assert res.max_acc == 1
    assert int(res.acc.values.sum()) == params.n_steps
    # the two visited voxels are adjacent along +x
    occupied = np.argwhere(res.acc.values > 0)
    assert len(occupied) == 2
    assert np.array_equal(np.diff(occupied, axis=0), [[1, 0, 0]])


def test_epsilon_defaults_to_tenth_of_radius():
    params = tx.AccumulationParams(radius=8.0, gridstep=1.0)
    assert params.epsilon == pytest.approx(0.8)
    assert params.acc_radius == pytest.approx(8.8)


def test_domain_pads_by_acc_radius_plus_one_voxel():
    pts = np.array([[0.0, 0, 0], [10.0, 0, 0]])
    params = tx.AccumulationParams(radius=2.0, epsilon=0.0, gridstep=1.0)
    dom = accumulation_domain(pts, params)
    assert np.allclose(dom.origin, [-3.0, -3.0, -3.0])
    assert dom.dims == (16, 6, 6)


def test_empty_faces_raise():
    faces = tx.OrientedFaceSet(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
    with pytest.raises(tx.EmptyInput):
        tx.compute_accumulation(faces, tx.AccumulationParams(radius=1.0))


def test_face_outside_domain_raises():
    faces = tx.OrientedFaceSet(np.array([[50.0, 0, 0]]),
                               np.array([[1.0, 0, 0]]), np.ones(1))
    params = tx.AccumulationParams(radius=1.0, gridstep=1.0)
    dom = tx.GridDomain(origin=np.zeros(3), gridstep=1.0, dims=(4, 4, 4))
    with pytest.raises(tx.DomainTooSmall):
        tx.compute_accumulation(faces, params, domain=dom)


def test_bad_params_rejected():
    with pytest.raises(ValueError):
        tx.AccumulationParams(radius=0.0)
    with pytest.raises(ValueError):
        tx.AccumulationParams(radius=1.0, gridstep=-1.0)
    with pytest.raises(ValueError):
        tx.AccumulationParams(radius=1.0, epsilon=-0.1)
    with pytest.raises(ValueError):
        tx.AccumulationParams(radius=1.0, min_norm=0.0)


def test_cylinder_votes_concentrate_on_axis(cylinder):
    res = cylinder.result
    center = res.domain.voxel_center(res.max_pt)
    assert cylinder.axis_distance([center])[0] <= math.sqrt(3) / 2
    # direction at the peak aligns with the axis
    d = res.directions.values[res.max_pt]
    cos = abs(d[0]) / np.linalg.norm(d)
    assert cos > 0.99
