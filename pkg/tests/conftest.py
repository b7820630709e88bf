"""Shared fixtures: one small reference cylinder reused across modules."""

import math

import numpy as np
import pytest

import tubeaxis as tx


class CylinderCase:
    """Straight tube along +x with everything downstream precomputed."""

    def __init__(self):
        self.radius = 5.0
        self.gridstep = 1.0
        self.length = 100.0
        self.mesh, self.truth = tx.gen_tube([tx.Straight(self.length)],
                                            radius=self.radius, mesh_step=1.0)
        self.faces = tx.orient_inward(tx.face_normals(self.mesh), mode="auto",
                                      radius=self.radius)
        self.params = tx.AccumulationParams(radius=self.radius,
                                            gridstep=self.gridstep)
        self.result = tx.compute_accumulation(self.faces, self.params)

    def axis_distance(self, points):
        """Distance of points to the exact axis segment."""
        return tx.distance_to_polyline(points, self.truth.points)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_report(request):
    """Record one [PASS]/[FAIL] line per criterion and fail on FAIL."""

    def record(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def cylinder():
    return CylinderCase()


@pytest.fixture(scope="session")
def bent_pipe():
    """S(30)-A(r=15, 90 deg)-S(30) tube with its accumulation, radius 3."""
    radius = 3.0
    segs = [tx.Straight(30.0), tx.Arc(15.0, math.pi / 2), tx.Straight(30.0)]
    mesh, truth = tx.gen_tube(segs, radius=radius, mesh_step=1.0)
    faces = tx.orient_inward(tx.face_normals(mesh), mode="auto", radius=radius)
    params = tx.AccumulationParams(radius=radius, gridstep=1.0)
    result = tx.compute_accumulation(faces, params)
    return {"radius": radius, "mesh": mesh, "truth": truth, "faces": faces,
            "params": params, "result": result}


def random_unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]
