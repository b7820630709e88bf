"""Input loading (meshes, voxel sets, height maps) and artifact writing.

Supported formats: ASCII OFF, the v/f/l subset of OBJ (polygon faces are
fan-triangulated), plain "x y z" voxel lists, PGM (P2/P5) height maps and
CSV tables with a header row and '.' decimals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInput, ParseError, TooSmall, UnsupportedFormat

logger = logging.getLogger(__name__)

_AREA_EPS = 1e-12


@dataclass
class TriMesh:
    """Indexed triangle surface.

    Parameters
    ----------
    vertices : (V, 3) float array
    faces : (F, 3) int array of vertex indices
    face_normals : optional (F, 3) unit normals carried from construction
    """

    vertices: np.ndarray
    faces: np.ndarray
    face_normals: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and self.faces.max() >= len(self.vertices):
            raise ValueError("face index exceeds vertex count")
        if self.face_normals is not None:
            self.face_normals = np.asarray(self.face_normals, dtype=float).reshape(-1, 3)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def corners(self):
        """The three (F, 3) corner arrays of every face."""
        v, f = self.vertices, self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def face_areas(self):
        a, b, c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def median_face_size(self):
        """Median over faces of the longest edge (the default gridstep rule)."""
        a, b, c = self.corners()
        longest = np.maximum.reduce([
            np.linalg.norm(b - a, axis=1),
            np.linalg.norm(c - b, axis=1),
            np.linalg.norm(a - c, axis=1),
        ])
        return float(np.median(longest))


@dataclass
class VoxelSet:
    """Set of integer lattice points with implicit gridstep 1.

    ``origin``/``gridstep`` are optional bookkeeping describing how the
    lattice maps back into some source world frame; processing always
    happens in lattice units.
    """

    points: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gridstep: float = 1.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.int64).reshape(-1, 3)
        self.origin = np.asarray(self.origin, dtype=float)

    def __len__(self):
        return len(self.points)

    def to_world(self, lattice_coords):
        """Lift lattice-unit coordinates back to the source world frame."""
        return self.origin + self.gridstep * np.asarray(lattice_coords, dtype=float)


@dataclass
class HeightMap:
    """Regular grid of surface heights; ``heights[i, j]`` sits at
    ``(origin_x + i*spacing, origin_y + j*spacing)``."""

    width: int
    height: int
    heights: np.ndarray  # (width, height), world units
    spacing: float = 1.0
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=float).reshape(self.width, self.height)
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")


def _drop_degenerate(vertices, faces):
    """Remove zero-area faces; returns (faces, dropped_count)."""
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        return faces, 0
    v = np.asarray(vertices, dtype=float)
    a, b, c = v[faces[:, 0]], v[faces[:, 1]], v[faces[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    keep = areas > _AREA_EPS
    dropped = int((~keep).sum())
    return faces[keep], dropped


def _fan_triangulate(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def _tokens(path):
    """Yield (line_number, token_list) for non-empty, non-comment lines."""
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if stripped:
                yield ln, stripped.split()


def load_off(path):
    tok = _tokens(path)
    try:
        ln, first = next(tok)
    except StopIteration:
        raise ParseError("empty file", path=path)
    counts = first
    if first[0].upper() == "OFF":
        counts = first[1:]
        if not counts:
            try:
                ln, counts = next(tok)
            except StopIteration:
                raise ParseError("missing count line", line=ln, path=path)
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise ParseError(f"bad count line {counts!r}", line=ln, path=path)

    vertices = np.empty((nv, 3))
    for i in range(nv):
        try:
            ln, parts = next(tok)
        except StopIteration:
            raise ParseError(f"expected {nv} vertices, file ended after {i}", path=path)
        try:
            vertices[i] = [float(parts[0]), float(parts[1]), float(parts[2])]
        except (ValueError, IndexError):
            raise ParseError(f"bad vertex line {parts!r}", line=ln, path=path)

    faces = []
    for _ in range(nf):
        try:
            ln, parts = next(tok)
        except StopIteration:
            raise ParseError(f"expected {nf} faces, file ended after {len(faces)}", path=path)
        try:
            k = int(parts[0])
            poly = [int(t) for t in parts[1 : 1 + k]]
            if len(poly) != k or k < 3:
                raise ValueError
        except ValueError:
            raise ParseError(f"bad face line {parts!r}", line=ln, path=path)
        if np.any(np.asarray(poly) >= nv):
            raise ParseError(f"face index out of range on line {ln}", line=ln, path=path)
        faces.extend(_fan_triangulate(poly))
    return vertices, np.asarray(faces, dtype=np.int64).reshape(-1, 3)


def load_obj(path):
    vertices, faces = [], []
    for ln, parts in _tokens(path):
        if parts[0] == "v":
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except (ValueError, IndexError):
                raise ParseError(f"bad vertex line {parts!r}", line=ln, path=path)
        elif parts[0] == "f":
            try:
                raw = [int(t.split("/", 1)[0]) for t in parts[1:]]
            except ValueError:
                raise ParseError(f"bad face line {parts!r}", line=ln, path=path)
            # negative indices count back from the vertices read so far
            poly = [i - 1 if i > 0 else len(vertices) + i for i in raw]
            if len(poly) < 3 or any(i < 0 for i in poly) or 0 in raw:
                raise ParseError(f"bad face line {parts!r}", line=ln, path=path)
            faces.extend(_fan_triangulate(poly))
        # everything else (vn, vt, l, o, ...) is ignored on load
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if faces.size and faces.max() >= len(vertices):
        raise ParseError("face index out of range", path=path)
    return vertices, faces


def load_mesh(path, fmt=None) -> TriMesh:
    """Load an OFF or OBJ mesh; zero-area faces are dropped with a warning."""
    path = Path(path)
    if fmt is None:
        fmt = path.suffix.lstrip(".").lower()
    fmt = fmt.lower()
    if fmt == "off":
        vertices, faces = load_off(path)
    elif fmt == "obj":
        vertices, faces = load_obj(path)
    else:
        raise UnsupportedFormat(f"unknown mesh format {fmt!r}")
    faces, dropped = _drop_degenerate(vertices, faces)
    if dropped:
        logger.warning("%s: dropped %d degenerate face(s)", path, dropped)
    logger.info("%s: %d vertices, %d faces", path, len(vertices), len(faces))
    return TriMesh(vertices, faces)


def load_volume(path) -> VoxelSet:
    """Load an ASCII "x y z" voxel list; duplicates are removed."""
    points = []
    for ln, parts in _tokens(path):
        if len(parts) != 3:
            raise ParseError(f"expected 3 integers, got {parts!r}", line=ln, path=path)
        try:
            points.append([int(parts[0]), int(parts[1]), int(parts[2])])
        except ValueError:
            raise ParseError(f"non-integer token in {parts!r}", line=ln, path=path)
    if not points:
        return VoxelSet(np.empty((0, 3), dtype=np.int64))
    pts = np.asarray(points, dtype=np.int64)
    unique = np.unique(pts, axis=0)
    if len(unique) != len(pts):
        logger.warning("%s: removed %d duplicate voxel(s)", path, len(pts) - len(unique))
    return VoxelSet(unique)


def load_pgm(path):
    """Read a P2/P5 PGM image; returns a (rows, cols) uint array."""
    with open(path, "rb") as fh:
        data = fh.read()

    # header tokens may be interleaved with comments
    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        if data[pos : pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        if data[pos : pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace() and data[end : end + 1] != b"#":
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if len(tokens) < 4:
        raise ParseError("truncated PGM header", path=path)
    magic = tokens[0].decode("ascii", "replace")
    try:
        cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ParseError("bad PGM header", path=path)

    if magic == "P2":
        try:
            values = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError:
            raise ParseError("non-integer pixel in P2 body", path=path)
    elif magic == "P5":
        pos += 1  # single whitespace after maxval
        dtype = ">u2" if maxval > 255 else np.uint8
        values = np.frombuffer(data[pos:], dtype=dtype, count=rows * cols).astype(np.int64)
    else:
        raise UnsupportedFormat(f"not a PGM file (magic {magic!r})")
    if values.size != rows * cols:
        raise ParseError(f"expected {rows * cols} pixels, got {values.size}", path=path)
    return values.reshape(rows, cols)


def load_heightmap(path, scale=1.0, spacing=1.0) -> HeightMap:
    """Load a PGM as a height map; gray values map to heights via ``scale``."""
    gray = load_pgm(path)
    rows, cols = gray.shape
    # pixel (col i, row j) -> heights[i, j]
    return HeightMap(cols, rows, gray.T * float(scale), spacing=spacing)


def heightmap_to_mesh(hm: HeightMap) -> TriMesh:
    """Triangulate a height map into a terrain mesh.

    Each grid cell is split along the (i, j)-(i+1, j+1) diagonal, giving
    exactly 2*(w-1)*(h-1) faces with upward-facing orientation.
    """
    w, h = hm.width, hm.height
    if w < 2 or h < 2:
        raise TooSmall("height map needs at least 2 samples per axis")
    i, j = np.meshgrid(np.arange(w), np.arange(h), indexing="ij")
    vertices = np.column_stack([
        hm.origin[0] + i.ravel() * hm.spacing,
        hm.origin[1] + j.ravel() * hm.spacing,
        hm.heights.ravel(),
    ])

    def vid(ii, jj):
        return ii * h + jj

    ci, cj = np.meshgrid(np.arange(w - 1), np.arange(h - 1), indexing="ij")
    ci, cj = ci.ravel(), cj.ravel()
    t1 = np.column_stack([vid(ci, cj), vid(ci + 1, cj), vid(ci + 1, cj + 1)])
    t2 = np.column_stack([vid(ci, cj), vid(ci + 1, cj + 1), vid(ci, cj + 1)])
    faces = np.concatenate([t1, t2])
    return TriMesh(vertices, faces)


# --- writers -----------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".9g")


def write_off(mesh: TriMesh, path):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for v in mesh.vertices:
            fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def write_centerline_obj(points, path, closed=False):
    """Write a polyline as OBJ v records plus a single l record."""
    points = np.atleast_2d(points)
    with open(path, "w") as fh:
        for p in points:
            fh.write(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        ids = list(range(1, len(points) + 1))
        if closed:
            ids.append(1)
        fh.write("l " + " ".join(str(i) for i in ids) + "\n")


def write_centerline_csv(points, directions, path):
    points = np.atleast_2d(points)
    directions = np.atleast_2d(directions)
    with open(path, "w") as fh:
        fh.write("index,x,y,z,dx,dy,dz\n")
        for i, (p, d) in enumerate(zip(points, directions)):
            fh.write(f"{i},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])},"
                     f"{_fmt(d[0])},{_fmt(d[1])},{_fmt(d[2])}\n")


def read_centerline_csv(path):
    """Read back a centerline CSV; returns (points, directions)."""
    points, directions = [], []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("index,"):
            raise ParseError("missing centerline header", line=1, path=path)
        for ln, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise ParseError(f"expected 7 columns, got {len(parts)}", line=ln, path=path)
            try:
                vals = [float(t) for t in parts[1:]]
            except ValueError:
                raise ParseError("non-numeric field", line=ln, path=path)
            points.append(vals[:3])
            directions.append(vals[3:])
    if not points:
        raise EmptyInput(f"{path}: no centerline points")
    return np.asarray(points), np.asarray(directions)


def write_decomposition_csv(decomposition, path):
    with open(path, "w") as fh:
        fh.write("startIdx,endIdx,kind,cx,cy,cz,radius,ax,ay,az,extent,residual\n")
        for seg in decomposition.segments:
            if seg.kind == "ARC":
                row = [seg.start, seg.end, seg.kind,
                       _fmt(seg.center[0]), _fmt(seg.center[1]), _fmt(seg.center[2]),
                       _fmt(seg.radius),
                       _fmt(seg.axis[0]), _fmt(seg.axis[1]), _fmt(seg.axis[2]),
                       _fmt(seg.extent), _fmt(seg.residual)]
            else:
                # straight rows reuse the center/axis columns for point+direction
                row = [seg.start, seg.end, seg.kind,
                       _fmt(seg.point[0]), _fmt(seg.point[1]), _fmt(seg.point[2]),
                       "",
                       _fmt(seg.direction[0]), _fmt(seg.direction[1]), _fmt(seg.direction[2]),
                       "", _fmt(seg.residual)]
            fh.write(",".join(str(c) for c in row) + "\n")


def write_face_scalar_csv(values, path):
    with open(path, "w") as fh:
        fh.write("face,value\n")
        for i, v in enumerate(np.asarray(values).ravel()):
            fh.write(f"{i},{_fmt(v)}\n")


def write_artifacts(out_dir, centerline, decomposition=None, meshes=None,
                    face_scalars=None):
    """Write pipeline outputs under ``out_dir``; returns a name->path manifest.

    ``meshes`` maps artifact names to TriMesh objects (written as OFF);
    ``face_scalars`` maps names to per-face value arrays written as sidecar
    CSVs.
    """
    if centerline is None or len(centerline.points) == 0:
        raise EmptyInput("centerline is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {}

    obj_path = out_dir / "centerline.obj"
    write_centerline_obj(centerline.points, obj_path, closed=centerline.closed)
    manifest["centerline_obj"] = str(obj_path)

    csv_path = out_dir / "centerline.csv"
    write_centerline_csv(centerline.points, centerline.directions, csv_path)
    manifest["centerline_csv"] = str(csv_path)

    if decomposition is not None:
        dec_path = out_dir / "decomposition.csv"
        write_decomposition_csv(decomposition, dec_path)
        manifest["decomposition_csv"] = str(dec_path)

    for name, mesh in (meshes or {}).items():
        mesh_path = out_dir / f"{name}.off"
        write_off(mesh, mesh_path)
        manifest[f"{name}_off"] = str(mesh_path)

    for name, values in (face_scalars or {}).items():
        scalar_path = out_dir / f"{name}.csv"
        write_face_scalar_csv(values, scalar_path)
        manifest[f"{name}_csv"] = str(scalar_path)
    return manifest
