"""Triangle mesh container, OBJ/OFF I/O, topology index, and risky-primitive classification.

Vertex order is preserved exactly as loaded: vertex indices are identities
that the ranking and decimation modules rely on. Faces are triangles only;
polygon faces are a parse error, never auto-split.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshFormatError

TWO_PI = 2.0 * np.pi

# Flat-region tolerance: below perceptual relevance, above double noise.
DEFAULT_FLAT_TOL = 1e-3


def _canonical_face(face) -> tuple:
    """Cyclic-minimal rotation of a face, used for duplicate detection."""
    a, b, c = int(face[0]), int(face[1]), int(face[2])
    rots = [(a, b, c), (b, c, a), (c, a, b)]
    return min(rots)


@dataclass(frozen=True)
class Mesh:
    """Immutable triangle mesh: vertex positions and face connectivity.

    vertices: (n, 3) float64 array of positions in model units.
    faces: (m, 3) int64 array of vertex indices, consistently wound.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        faces = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {verts.shape}")
        if faces.size == 0:
            faces = faces.reshape(0, 3)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError(f"faces must be (m, 3), got {faces.shape}")
        if faces.size:
            if faces.min() < 0 or faces.max() >= len(verts):
                raise ValueError("face index out of range")
            if ((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
                    | (faces[:, 0] == faces[:, 2])).any():
                raise ValueError("face with repeated vertex index")
            seen = set()
            for i, f in enumerate(faces):
                key = _canonical_face(f)
                if key in seen:
                    raise ValueError(f"duplicate face at position {i}: {tuple(f)}")
                seen.add(key)
        verts.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def bbox_diagonal(self) -> float:
        """Length of the axis-aligned bounding-box diagonal (0 for empty)."""
        if len(self.vertices) == 0:
            return 0.0
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(span))


# ---------------------------------------------------------------------------
# File I/O: minimal OBJ ("v"/"f" lines) and OFF.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    """Shortest decimal string that round-trips the float64 exactly."""
    return repr(float(x))


def _parse_floats(parts, n, lineno):
    if len(parts) < n:
        raise MeshFormatError(f"expected {n} coordinates, got {len(parts)}", lineno)
    try:
        return [float(p) for p in parts[:n]]
    except ValueError as exc:
        raise MeshFormatError(f"bad coordinate: {exc}", lineno) from None


def _check_face(idx, n_vertices, lineno):
    if len(idx) != 3:
        raise MeshFormatError(
            f"non-triangle face with {len(idx)} vertices (triangles only)", lineno)
    for i in idx:
        if i < 0 or i >= n_vertices:
            raise MeshFormatError(f"face index {i} out of range (0..{n_vertices - 1})", lineno)
    return tuple(idx)


def loads_obj(text: str) -> Mesh:
    """Parse Wavefront OBJ text: only "v" and "f" directives are honored."""
    vertices = []
    faces = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            vertices.append(_parse_floats(parts[1:], 3, lineno))
        elif tag == "f":
            idx = []
            for tok in parts[1:]:
                head = tok.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError:
                    raise MeshFormatError(f"bad face index {head!r}", lineno) from None
                if i <= 0:
                    # OBJ is 1-based; relative (negative) references unsupported.
                    raise MeshFormatError(f"face index {i} out of range (1-based)", lineno)
                idx.append(i - 1)
            faces.append(_check_face(idx, len(vertices), lineno))
        # all other directives ignored
    try:
        return Mesh(np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
                    np.asarray(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise MeshFormatError(str(exc)) from None


def loads_off(text: str) -> Mesh:
    """Parse OFF text: "OFF" header, "nV nF nE" counts, vertices, "3 i j k" faces."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line))
    if not rows:
        raise MeshFormatError("empty OFF file")
    lineno, header = rows[0]
    if header != "OFF":
        raise MeshFormatError(f"expected OFF header, got {header!r}", lineno)
    if len(rows) < 2:
        raise MeshFormatError("missing OFF counts line", lineno)
    lineno, counts = rows[1]
    parts = counts.split()
    if len(parts) != 3:
        raise MeshFormatError("counts line must be 'nV nF nE'", lineno)
    try:
        n_v, n_f = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshFormatError("counts must be integers", lineno) from None
    if len(rows) != 2 + n_v + n_f:
        raise MeshFormatError(
            f"expected {n_v} vertex and {n_f} face lines, got {len(rows) - 2}")
    vertices = []
    for lineno, line in rows[2:2 + n_v]:
        vertices.append(_parse_floats(line.split(), 3, lineno))
    faces = []
    for lineno, line in rows[2 + n_v:]:
        parts = line.split()
        try:
            arity = int(parts[0])
            idx = [int(p) for p in parts[1:]]
        except (ValueError, IndexError):
            raise MeshFormatError("bad face line", lineno) from None
        if arity != len(idx):
            raise MeshFormatError(f"face declares {arity} vertices, lists {len(idx)}", lineno)
        faces.append(_check_face(idx, n_v, lineno))
    try:
        return Mesh(np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
                    np.asarray(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise MeshFormatError(str(exc)) from None


def dumps_obj(mesh: Mesh) -> str:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(lines) + "\n"


def dumps_off(mesh: Mesh) -> str:
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    for v in mesh.vertices:
        lines.append(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for f in mesh.faces:
        lines.append(f"3 {f[0]} {f[1]} {f[2]}")
    return "\n".join(lines) + "\n"


def load_mesh(data: bytes | str, fmt: str) -> Mesh:
    """Parse mesh file content in the declared format ("obj" or "off")."""
    if isinstance(data, bytes):
        try:
            data = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MeshFormatError(f"not ASCII text: {exc}") from None
    fmt = fmt.lower()
    if fmt == "obj":
        return loads_obj(data)
    if fmt == "off":
        return loads_off(data)
    raise ValueError(f"unknown mesh format {fmt!r}")


def dump_mesh(mesh: Mesh, fmt: str) -> str:
    fmt = fmt.lower()
    if fmt == "obj":
        return dumps_obj(mesh)
    if fmt == "off":
        return dumps_off(mesh)
    raise ValueError(f"unknown mesh format {fmt!r}")


def format_of(path: str) -> str:
    name = str(path).lower()
    if name.endswith(".obj"):
        return "obj"
    if name.endswith(".off"):
        return "off"
    raise ValueError(f"cannot infer mesh format from {path!r} (.obj or .off)")


def read_mesh(path) -> Mesh:
    with open(path, "rb") as fh:
        return load_mesh(fh.read(), format_of(path))


def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dump_mesh(mesh, format_of(path)))


# ---------------------------------------------------------------------------
# Topology index
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TopologyIndex:
    """Per-vertex and per-edge adjacency derived from a Mesh.

    rings: per vertex, neighbor indices sorted ascending.
    vertex_faces: per vertex, incident face indices sorted ascending.
    edge_faces: (i, j) with i < j -> tuple of incident face indices.
    boundary: vertex touches an edge with exactly one incident face.
    manifold: incident faces form a single fan (closed or open) and no
        incident edge has more than two faces.
    """

    rings: tuple
    vertex_faces: tuple
    edge_faces: dict
    boundary: np.ndarray
    manifold: np.ndarray

    def ring(self, v: int):
        return self.rings[v]

    def face_count(self, v: int) -> int:
        return len(self.vertex_faces[v])

    def edge_face_count(self, i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        return len(self.edge_faces.get(key, ()))


def _walk_fan(v: int, faces: np.ndarray, face_ids, positions: np.ndarray):
    """Order the faces around ``v`` into a single oriented fan.

    Returns (neighbors, ordered_faces, is_boundary) with neighbors in cyclic
    order following face orientation; open chains for boundary vertices.
    Returns None when the star is not a single manifold fan. The starting
    neighbor is chosen by position (not index) so the result is invariant
    under vertex relabeling.
    """
    succ = {}  # neighbor a -> (neighbor b, face id) for face (v, a, b)
    for fid in face_ids:
        f = faces[fid]
        k = 0 if f[0] == v else (1 if f[1] == v else 2)
        a, b = int(f[(k + 1) % 3]), int(f[(k + 2) % 3])
        if a in succ:
            return None  # two faces leave v through the same directed edge
        succ[a] = (b, fid)
    starts = [a for a in succ if not any(a == b for b, _ in succ.values())]
    if len(starts) > 1:
        return None  # multiple open chains
    if starts:
        start = starts[0]
        is_boundary = True
    else:
        # closed fan: canonical, label-free start by lexicographic position
        start = min(succ, key=lambda a: (positions[a][0], positions[a][1], positions[a][2], a))
        is_boundary = False
    neighbors = [start]
    ordered = []
    cur = start
    for _ in range(len(succ)):
        if cur not in succ:
            return None  # chain shorter than the face count: disconnected fan
        nxt, fid = succ[cur]
        ordered.append(fid)
        cur = nxt
        if cur == start and not is_boundary:
            break
        neighbors.append(cur)
    if len(ordered) != len(succ):
        return None
    return neighbors, ordered, is_boundary


def build_topology(mesh: Mesh) -> TopologyIndex:
    """Index adjacency. Pure function of the mesh; defects are flagged, not fatal."""
    n = mesh.n_vertices
    faces = mesh.faces
    ring_sets = [set() for _ in range(n)]
    vface = [[] for _ in range(n)]
    edge_faces: dict = {}
    for fid, (a, b, c) in enumerate(faces):
        a, b, c = int(a), int(b), int(c)
        ring_sets[a].update((b, c))
        ring_sets[b].update((a, c))
        ring_sets[c].update((a, b))
        vface[a].append(fid)
        vface[b].append(fid)
        vface[c].append(fid)
        for i, j in ((a, b), (b, c), (c, a)):
            key = (i, j) if i < j else (j, i)
            edge_faces.setdefault(key, []).append(fid)

    boundary = np.zeros(n, dtype=bool)
    for (i, j), fids in edge_faces.items():
        if len(fids) == 1:
            boundary[i] = True
            boundary[j] = True

    manifold = np.ones(n, dtype=bool)
    positions = mesh.vertices
    for v in range(n):
        if not vface[v]:
            continue  # isolated: manifold vacuously, risky via its own flag
        if any(len(edge_faces[(min(v, u), max(v, u))]) > 2 for u in ring_sets[v]):
            manifold[v] = False
            continue
        if _walk_fan(v, faces, vface[v], positions) is None:
            manifold[v] = False

    rings = tuple(np.array(sorted(s), dtype=np.int64) for s in ring_sets)
    vertex_faces = tuple(np.array(f, dtype=np.int64) for f in vface)
    edge_faces = {k: tuple(v) for k, v in edge_faces.items()}
    return TopologyIndex(rings=rings, vertex_faces=vertex_faces, edge_faces=edge_faces,
                         boundary=boundary, manifold=manifold)


def oriented_ring(mesh: Mesh, topo: TopologyIndex, v: int):
    """Cyclically ordered star of ``v``: (neighbors, faces, is_boundary).

    Raises GeometryError when the star is not a single manifold fan.
    """
    from .errors import GeometryError

    face_ids = topo.vertex_faces[v]
    if len(face_ids) == 0:
        raise GeometryError(f"vertex {v} has no incident faces")
    out = _walk_fan(v, mesh.faces, face_ids, mesh.vertices)
    if out is None:
        raise GeometryError(f"vertex {v} star is not a manifold fan")
    return out


# ---------------------------------------------------------------------------
# Risky primitives and validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RiskClass:
    """Per-vertex risk flags: primitives likely to be destroyed by simplification."""

    isolated: np.ndarray
    boundary: np.ndarray
    complex_: np.ndarray
    flat: np.ndarray


def _face_normal(mesh: Mesh, fid: int):
    a, b, c = mesh.faces[fid]
    n = np.cross(mesh.vertices[b] - mesh.vertices[a], mesh.vertices[c] - mesh.vertices[a])
    norm = np.linalg.norm(n)
    if norm == 0.0:
        return None
    return n / norm


def classify_risky(mesh: Mesh, topo: TopologyIndex,
                   flat_tol: float = DEFAULT_FLAT_TOL) -> RiskClass:
    """Flag isolated, boundary, complex, and flat-region vertices.

    A vertex is flat when every pair of faces meeting at an incident interior
    edge deviates from coplanar by less than ``flat_tol`` radians.
    """
    from .curvature import signed_dihedral

    n = mesh.n_vertices
    isolated = np.array([topo.face_count(v) == 0 for v in range(n)])
    boundary = topo.boundary.copy()
    complex_ = ~topo.manifold & ~isolated
    flat = np.zeros(n, dtype=bool)
    for v in range(n):
        if isolated[v]:
            continue
        worst = 0.0
        for u in topo.rings[v]:
            key = (min(v, int(u)), max(v, int(u)))
            fids = topo.edge_faces.get(key, ())
            if len(fids) != 2:
                continue
            psi = signed_dihedral(mesh, key[0], key[1], fids[0], fids[1])
            if psi is not None:
                worst = max(worst, abs(psi))
        flat[v] = worst < flat_tol
    return RiskClass(isolated=isolated, boundary=boundary, complex_=complex_, flat=flat)


@dataclass
class DefectReport:
    """Topological defects found by the validator."""

    isolated_vertices: list = field(default_factory=list)
    complex_edges: list = field(default_factory=list)
    complex_vertices: list = field(default_factory=list)
    duplicate_faces: list = field(default_factory=list)

    def is_clean(self) -> bool:
        return not (self.isolated_vertices or self.complex_edges
                    or self.complex_vertices or self.duplicate_faces)


def validate(mesh: Mesh, topo: TopologyIndex) -> DefectReport:
    """Enumerate defects; an empty report means a clean manifold mesh."""
    report = DefectReport()
    for v in range(mesh.n_vertices):
        if topo.face_count(v) == 0:
            report.isolated_vertices.append(v)
        elif not topo.manifold[v]:
            report.complex_vertices.append(v)
    for key, fids in sorted(topo.edge_faces.items()):
        if len(fids) > 2:
            report.complex_edges.append(key)
    seen = {}
    for i, f in enumerate(mesh.faces):
        key = _canonical_face(f)
        if key in seen:
            report.duplicate_faces.append((seen[key], i))
        else:
            seen[key] = i
    return report
