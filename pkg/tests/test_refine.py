"""Known-radius center optimization: energy, gradient, force, convergence."""

import math

import numpy as np
import pytest

import tubeaxis as tx
from tubeaxis.track import Centerline

from conftest import random_unit_vectors


def _ring(center, radius, n, axis=(0.0, 0.0, 1.0), rng=None, rho_jitter=0.0):
    fr = tx.frame_from_direction(np.asarray(axis, dtype=float) /
                                 np.linalg.norm(axis), center=center)
    theta = 2 * math.pi * np.arange(n) / n
    rho = radius * np.ones(n)
    if rng is not None and rho_jitter:
        rho = rho + rng.normal(scale=rho_jitter, size=n)
    return (np.asarray(center, dtype=float)
            + rho[:, None] * (np.cos(theta)[:, None] * fr.u
                              + np.sin(theta)[:, None] * fr.v))


def _fd_gradient(c, pts, radius, weights=None, h=1e-6):
    g = np.zeros(3)
    for a in range(3):
        dp = np.zeros(3)
        dp[a] = h
        ep, _, _ = tx.energy_and_gradient(c + dp, pts, radius, weights)
        em, _, _ = tx.energy_and_gradient(c - dp, pts, radius, weights)
        g[a] = (ep - em) / (2 * h)
    return g


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(25):
        c = rng.normal(size=3) * 5
        pts = c + rng.normal(size=(rng.integers(4, 40), 3)) * rng.uniform(1, 6)
        radius = rng.uniform(0.5, 5.0)
        e, g, f = tx.energy_and_gradient(c, pts, radius)
        fd = _fd_gradient(c, pts, radius)
        scale = max(np.linalg.norm(fd), 1.0)
        assert np.linalg.norm(g - fd) / scale < 1e-5
        assert e >= 0.0


def test_force_is_exactly_half_negative_gradient():
    rng = np.random.default_rng(1)
    for _ in range(25):
        c = rng.normal(size=3)
        pts = c + rng.normal(size=(10, 3)) * 3
        w = rng.uniform(0.1, 2.0, size=10)
        _, g, f = tx.energy_and_gradient(c, pts, 1.5, weights=w)
        assert np.array_equal(f, -g / 2.0)


def test_energy_zero_on_exact_ring():
    ring = _ring(np.array([1.0, 2.0, 3.0]), 4.0, 36)
    e, g, f = tx.energy_and_gradient(np.array([1.0, 2.0, 3.0]), ring, 4.0)
    assert e < 1e-20
    assert np.linalg.norm(g) < 1e-10


def test_energy_counts_radial_misfit():
    ring = _ring(np.zeros(3), 5.0, 24)
    e, _, _ = tx.energy_and_gradient(np.zeros(3), ring, 4.0)
    assert e == pytest.approx(24 * 1.0, rel=1e-9)


def test_rigid_motion_equivariance():
    rng = np.random.default_rng(2)
    c = rng.normal(size=3)
    pts = c + rng.normal(size=(15, 3)) * 2
    e0, g0, _ = tx.energy_and_gradient(c, pts, 1.2)
    t = rng.normal(size=3) * 10
    e1, g1, _ = tx.energy_and_gradient(c + t, pts + t, 1.2)
    assert e1 == pytest.approx(e0, rel=1e-9)
    assert np.allclose(g1, g0, atol=1e-9)
    # rotation: energy invariant, gradient rotates
    q = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    e2, g2, _ = tx.energy_and_gradient(q @ c, pts @ q.T, 1.2)
    assert e2 == pytest.approx(e0, rel=1e-9)
    assert np.allclose(g2, q @ g0, atol=1e-9)


def test_coincident_point_rejected():
    pts = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0]])
    with pytest.raises(tx.CoincidentPoint):
        tx.energy_and_gradient(np.zeros(3), pts, 1.0)


def test_optimizer_recovers_ring_center():
    # a single ring pins the center in its plane; along the ring axis the
    # energy is quartic and nearly flat, so only in-plane error must vanish
    true_c = np.array([2.0, -1.0, 0.5])
    axis = np.array([0.2, 0.3, 1.0]) / np.linalg.norm([0.2, 0.3, 1.0])
    ring = _ring(true_c, 5.0, 48, axis=axis)
    start = true_c + np.array([0.8, -0.6, 0.4])
    c, e, iters = tx.optimize_point(start, ring, 5.0, epsilon_o=1e-9)
    err = c - true_c
    axial = float(err @ axis)
    inplane = np.linalg.norm(err - axial * axis)
    assert inplane < 5e-3
    assert abs(axial) <= abs(float((start - true_c) @ axis))
    e0, _, _ = tx.energy_and_gradient(start, ring, 5.0)
    assert e <= e0


def test_optimizer_never_increases_energy():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(30, 3)) * 4
    start = rng.normal(size=3)
    e_start, _, _ = tx.energy_and_gradient(start, pts, 2.0)
    c, e_end, _ = tx.optimize_point(start, pts, 2.0)
    assert e_end <= e_start


def test_weights_equal_duplication():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(8, 3)) * 3 + 10
    c = np.array([10.0, 10.0, 10.0])
    doubled = np.vstack([pts, pts])
    e_dup, g_dup, _ = tx.energy_and_gradient(c, doubled, 2.0)
    e_w, g_w, _ = tx.energy_and_gradient(c, pts, 2.0,
                                         weights=2.0 * np.ones(8))
    assert e_w == pytest.approx(e_dup, rel=1e-12)
    assert np.allclose(g_w, g_dup, atol=1e-12)


def test_section_slab_bounds():
    cl = Centerline(points=np.array([[0.0, 0, 0], [4.0, 0, 0], [8.0, 0, 0]]),
                    directions=np.tile([1.0, 0, 0], (3, 1)))
    centers = np.array([
        [4.0, 1.0, 0.0],    # proj 0, inside
        [6.0, 0.5, 0.0],    # proj +2.0 == +step/2, inside (closed above)
        [2.0, 0.5, 0.0],    # proj -2.0 == -step/2, outside (open below)
        [4.0, 9.0, 0.0],    # too far radially
        [5.0, -1.0, 0.0],   # proj +1, inside
    ])
    faces = tx.OrientedFaceSet(centers, np.tile([0.0, 1, 0], (5, 1)),
                               np.ones(5))
    assoc = tx.section_points(cl, faces, 1, acc_radius=5.0, track_step=4.0)
    got = {tuple(p) for p in assoc.points}
    assert tuple(centers[0]) in got
    assert tuple(centers[1]) in got
    assert tuple(centers[4]) in got
    assert tuple(centers[2]) not in got
    assert tuple(centers[3]) not in got


def test_section_needs_three_points():
    cl = Centerline(points=np.array([[0.0, 0, 0], [4.0, 0, 0]]),
                    directions=np.tile([1.0, 0, 0], (2, 1)))
    faces = tx.OrientedFaceSet(np.array([[0.0, 1.0, 0.0]]),
                               np.array([[0.0, 1, 0]]), np.ones(1))
    with pytest.raises(tx.TooFewPoints):
        tx.section_points(cl, faces, 0, acc_radius=5.0, track_step=4.0)


def test_optimize_centerline_marks_unrefined_points():
    pts = np.array([[0.0, 0, 0], [4.0, 0, 0], [100.0, 0, 0]])
    cl = Centerline(points=pts, directions=np.tile([1.0, 0, 0], (3, 1)))
    ring0 = _ring([0.0, 0, 0], 2.0, 12, axis=(1.0, 0, 0))
    ring1 = _ring([4.0, 0, 0], 2.0, 12, axis=(1.0, 0, 0))
    centers = np.vstack([ring0, ring1])
    faces = tx.OrientedFaceSet(centers, np.tile([1.0, 0, 0], (24, 1)),
                               np.ones(24))
    params = tx.RefineParams(radius=2.0, acc_radius=2.5, track_step=4.0)
    out = tx.optimize_centerline(cl, faces, params)
    assert out.refined.tolist() == [True, True, False]
    assert np.allclose(out.points[2], pts[2])


def test_refined_cylinder_beats_raw(cylinder):
    raw = tx.extract_centerline(cylinder.result, track_step=cylinder.radius,
                                acc_radius=cylinder.params.acc_radius)
    params = tx.RefineParams(radius=cylinder.radius,
                             acc_radius=cylinder.params.acc_radius,
                             track_step=cylinder.radius)
    refined = tx.optimize_centerline(raw, cylinder.faces, params)
    d_raw = cylinder.axis_distance(raw.points)
    d_ref = cylinder.axis_distance(refined.points)
    rms_raw = np.sqrt(np.mean(d_raw ** 2))
    rms_ref = np.sqrt(np.mean(d_ref ** 2))
    assert rms_ref < 0.2 * cylinder.gridstep
    assert rms_ref <= rms_raw
