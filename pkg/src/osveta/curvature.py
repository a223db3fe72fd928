"""Discrete curvature descriptors for mesh vertices.

Two independent curvature pipelines are provided:

* cotangent mean-curvature normal plus angle-deficit Gaussian curvature
  (Meyer-style mixed areas), yielding kappa_H, kappa_G, kappa1, kappa2;
* a least-squares extended-quadric height-field fit in a normal-aligned
  local frame, yielding kappa_G1 and kappa_H1 in closed form.

Dihedral extrema and the vertex angle sum complete the descriptor set used
by the stability ranking.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .mesh import Mesh, TopologyIndex, TWO_PI, oriented_ring

# Angles within this of a reference are treated as exactly that reference;
# covers accumulated arccos/atan2 rounding without eating real signal.
ANGLE_SNAP = 1e-12
# Dimensionless threshold below which a curvature (scaled by the proper
# power of the bounding-box diagonal) is treated as exactly zero.
CURV_SNAP = 1e-9
# Cotangent clamp range: angles outside are clamped to the boundary value.
COT_CLAMP = 1e-6

# Descriptor flag bits; any nonzero flag excludes the vertex from ranking.
FLAG_ISOLATED = 1
FLAG_BOUNDARY = 2
FLAG_NONMANIFOLD = 4
FLAG_DEGENERATE = 8
FLAG_FIT_FAILED = 16

CSV_COLUMNS = ("index", "theta", "A_mixed", "kH", "kG", "kG1", "k1", "k2",
               "psi_min", "psi_max", "nx", "ny", "nz", "flags")


def _angle(u: np.ndarray, w: np.ndarray) -> float:
    """Unsigned angle between two vectors, robust near 0 and pi."""
    return math.atan2(float(np.linalg.norm(np.cross(u, w))), float(np.dot(u, w)))


def _cot(angle: float) -> float:
    a = min(max(angle, COT_CLAMP), math.pi - COT_CLAMP)
    return math.cos(a) / math.sin(a)


def snap_angle(theta: float, reference: float = TWO_PI) -> float:
    """Collapse angle-sum rounding noise onto the exact reference value."""
    return reference if abs(theta - reference) < ANGLE_SNAP else theta


@dataclass
class OneRing:
    """Ordered star of a vertex with the per-face quantities used downstream.

    Faces are cyclic for interior vertices and an open chain on the boundary;
    face ``i`` spans ``neighbors[i] -> neighbors[i + 1]`` (wrapping when
    closed). Degenerate (zero-area) faces stay in the lists but are masked
    out of every angle-based computation.
    """

    center: int
    neighbors: list
    faces: list
    boundary: bool
    apex_angles: list      # angle at the center per face
    corner_angles: list    # (angle at neighbors[i], angle at neighbors[i+1]) per face
    areas: list
    face_normals: list     # unit normal per face, None when degenerate
    degenerate: list
    edge_sq: list          # (|center-neighbors[i]|^2, |center-neighbors[i+1]|^2) per face

    @property
    def angle_sum(self) -> float:
        return sum(a for a, bad in zip(self.apex_angles, self.degenerate) if not bad)

    def valid_faces(self) -> int:
        return sum(1 for bad in self.degenerate if not bad)


def one_ring(mesh: Mesh, topo: TopologyIndex, v: int) -> OneRing:
    """Assemble the ordered 1-ring of ``v``; raises GeometryError off-manifold."""
    neighbors, face_ids, is_boundary = oriented_ring(mesh, topo, v)
    pos = mesh.vertices
    center = pos[v]
    apex, corners, areas, normals, degenerate, edge_sq = [], [], [], [], [], []
    for k, fid in enumerate(face_ids):
        a = neighbors[k]
        b = neighbors[(k + 1) % len(neighbors)]
        ea = pos[a] - center
        eb = pos[b] - center
        cross = np.cross(ea, eb)
        area = 0.5 * float(np.linalg.norm(cross))
        areas.append(area)
        if area == 0.0:
            degenerate.append(True)
            apex.append(0.0)
            corners.append((0.0, 0.0))
            normals.append(None)
        else:
            degenerate.append(False)
            apex.append(_angle(ea, eb))
            corners.append((_angle(-ea, pos[b] - pos[a]), _angle(-eb, pos[a] - pos[b])))
            normals.append(cross / (2.0 * area))
        edge_sq.append((float(np.dot(ea, ea)), float(np.dot(eb, eb))))
    return OneRing(center=v, neighbors=neighbors, faces=list(face_ids),
                   boundary=is_boundary, apex_angles=apex, corner_angles=corners,
                   areas=areas, face_normals=normals, degenerate=degenerate,
                   edge_sq=edge_sq)


def mixed_area(ring: OneRing) -> float:
    """Meyer mixed area: Voronoi for non-obtuse triangles, area/2 or area/4 otherwise."""
    if ring.valid_faces() == 0:
        raise GeometryError(f"all faces at vertex {ring.center} degenerate")
    total = 0.0
    half_pi = 0.5 * math.pi
    for k in range(len(ring.faces)):
        if ring.degenerate[k]:
            continue
        t_c = ring.apex_angles[k]
        t_a, t_b = ring.corner_angles[k]
        if t_c <= half_pi and t_a <= half_pi and t_b <= half_pi:
            la2, lb2 = ring.edge_sq[k]
            total += 0.125 * (la2 * _cot(t_b) + lb2 * _cot(t_a))
        elif t_c > half_pi:
            total += 0.5 * ring.areas[k]
        else:
            total += 0.25 * ring.areas[k]
    return total


def mean_curvature_normal(mesh: Mesh, ring: OneRing, a_mixed: float) -> np.ndarray:
    """Cotangent-weighted mean-curvature normal K; boundary edges use one angle.

    Edge vectors are taken center-minus-neighbor so that K = 2 kappa_H n
    points along the outward normal on convex regions.
    """
    if a_mixed <= 0.0:
        raise GeometryError(f"non-positive mixed area at vertex {ring.center}")
    pos = mesh.vertices
    center = pos[ring.center]
    n_nb = len(ring.neighbors)
    n_faces = len(ring.faces)
    weights = [0.0] * n_nb
    for k in range(n_faces):
        if ring.degenerate[k]:
            continue
        t_a, t_b = ring.corner_angles[k]
        # edge to neighbors[k] is opposite the angle at neighbors[k+1], and
        # edge to neighbors[k+1] is opposite the angle at neighbors[k]
        weights[k] += _cot(t_b)
        weights[(k + 1) % n_nb] += _cot(t_a)
    acc = np.zeros(3)
    for j, w in zip(ring.neighbors, weights):
        if w != 0.0:
            acc += w * (center - pos[j])
    return acc / (2.0 * a_mixed)


def gaussian_curvature(ring: OneRing, a_mixed: float) -> float:
    """Angle-deficit Gaussian curvature (2*pi - sum of apex angles) / A_mixed."""
    if a_mixed <= 0.0:
        raise GeometryError(f"non-positive mixed area at vertex {ring.center}")
    theta = snap_angle(ring.angle_sum)
    return (TWO_PI - theta) / a_mixed


def principal_curvatures(kappa_h: float, kappa_g: float):
    """(kappa1, kappa2) from mean and Gaussian curvature; the discriminant
    kappa_H^2 - kappa_G is clamped at zero before the square root."""
    delta = kappa_h * kappa_h - kappa_g
    clamped = delta < 0.0
    root = math.sqrt(max(delta, 0.0))
    return kappa_h + root, kappa_h - root, clamped


def estimate_normal(ring: OneRing) -> np.ndarray:
    """Area-weighted average of incident face normals, normalized."""
    acc = np.zeros(3)
    for k in range(len(ring.faces)):
        if not ring.degenerate[k]:
            acc += ring.areas[k] * ring.face_normals[k]
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        raise GeometryError(f"zero resultant normal at vertex {ring.center}")
    return acc / norm


@dataclass(frozen=True)
class LocalFrame:
    """Right-handed orthonormal frame with r3 along the surface normal."""

    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray

    def to_local(self, vec: np.ndarray):
        return (float(np.dot(self.r1, vec)), float(np.dot(self.r2, vec)),
                float(np.dot(self.r3, vec)))


_X_AXIS = np.array([1.0, 0.0, 0.0])
_Y_AXIS = np.array([0.0, 1.0, 0.0])
# Below this tangent-projection norm the global x-axis is unusable.
_FRAME_SINGULAR = 1e-8


def local_frame(normal: np.ndarray) -> LocalFrame:
    """Frame with r1 = normalized tangent projection of the global x-axis.

    Falls back to projecting the global y-axis when the normal is (anti-)
    parallel to x, where the x-projection recipe is singular.
    """
    n = np.asarray(normal, dtype=np.float64)
    for axis in (_X_AXIS, _Y_AXIS):
        t = axis - n * float(np.dot(n, axis))
        norm = float(np.linalg.norm(t))
        if norm >= _FRAME_SINGULAR:
            r1 = t / norm
            r2 = np.cross(n, r1)
            return LocalFrame(r1=r1, r2=r2, r3=n)
    raise GeometryError("normal parallel to both fallback axes")  # pragma: no cover


@dataclass(frozen=True)
class QuadricFit:
    """Least-squares extended quadric z = a x^2 + b xy + c y^2 + d x + e y."""

    a: float
    b: float
    c: float
    d: float
    e: float
    residual: float
    n_neighbors: int


# Relative diagonal threshold for declaring the fit system rank-deficient.
_RANK_TOL = 1e-10


def fit_quadric(points_local, min_neighbors: int = 5) -> QuadricFit:
    """Fit the extended quadric to (x, y, z) samples in the local frame.

    The overdetermined system is solved through a QR factorization; normal
    equations are avoided because the design matrix is badly conditioned on
    near-flat patches.
    """
    pts = np.asarray(points_local, dtype=np.float64)
    if len(pts) < min_neighbors:
        raise GeometryError(
            f"quadric fit needs >= {min_neighbors} neighbors, got {len(pts)}")
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    design = np.column_stack([x * x, x * y, y * y, x, y])
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    if diag.min() <= _RANK_TOL * max(diag.max(), 1e-300):
        raise GeometryError("rank-deficient quadric system")
    coef = np.linalg.solve(r, q.T @ z)
    residual = float(np.linalg.norm(design @ coef - z))
    a, b, c, d, e = (float(v) for v in coef)
    return QuadricFit(a=a, b=b, c=c, d=d, e=e, residual=residual, n_neighbors=len(pts))


def quadric_curvatures(fit: QuadricFit):
    """Closed-form curvatures of the fitted quadric at the origin.

    Returns (kappa1, kappa2, kappa_G1, kappa_H1). kappa1/kappa2 follow the
    a' + c' +/- sqrt((a' - c')^2 + b'^2) convention of the source method.
    """
    s = fit.a + fit.c
    root = math.sqrt((fit.a - fit.c) ** 2 + fit.b ** 2)
    w = 1.0 + fit.d * fit.d + fit.e * fit.e
    kappa_g1 = (4.0 * fit.a * fit.c - fit.b * fit.b) / (w * w)
    kappa_h1 = (fit.a + fit.c + fit.a * fit.e * fit.e + fit.c * fit.d * fit.d
                - fit.b * fit.d * fit.e) / math.sqrt(w ** 3)
    return s + root, s - root, kappa_g1, kappa_h1


def signed_dihedral(mesh: Mesh, i: int, j: int, fid_a: int, fid_b: int):
    """Signed dihedral deviation at edge (i, j): positive = convex, 0 = coplanar.

    The sign follows the faces' outward orientation. Returns None when either
    face is degenerate. Deviations below the angle snap collapse to exact 0.
    """
    pos = mesh.vertices
    faces = mesh.faces

    def unit_normal(fid):
        a, b, c = faces[fid]
        n = np.cross(pos[b] - pos[a], pos[c] - pos[a])
        norm = float(np.linalg.norm(n))
        return None if norm == 0.0 else n / norm

    def has_directed(fid, u, w):
        f = faces[fid]
        for k in range(3):
            if f[k] == u and f[(k + 1) % 3] == w:
                return True
        return False

    # orient so fid_a is the face traversing i -> j
    if has_directed(fid_b, i, j):
        fid_a, fid_b = fid_b, fid_a
    n_a = unit_normal(fid_a)
    n_b = unit_normal(fid_b)
    if n_a is None or n_b is None:
        return None
    edge = pos[j] - pos[i]
    norm = float(np.linalg.norm(edge))
    if norm == 0.0:
        return None
    edge = edge / norm
    psi = math.atan2(float(np.dot(np.cross(n_a, n_b), edge)), float(np.dot(n_a, n_b)))
    return 0.0 if abs(psi) < ANGLE_SNAP else psi


def dihedral_extrema(mesh: Mesh, topo: TopologyIndex, v: int):
    """(psi_min, psi_max) over interior edges incident to ``v``."""
    values = []
    for u in topo.rings[v]:
        key = (min(v, int(u)), max(v, int(u)))
        fids = topo.edge_faces.get(key, ())
        if len(fids) != 2:
            continue
        psi = signed_dihedral(mesh, key[0], key[1], fids[0], fids[1])
        if psi is not None:
            values.append(psi)
    if not values:
        raise GeometryError(f"no interior edges at vertex {v}")
    return min(values), max(values)


@dataclass
class VertexDescriptors:
    """Struct-of-arrays descriptor table, one row per mesh vertex.

    Flagged rows (``flags != 0``) hold neutral values and are excluded from
    ranking. ``delta_clamps`` counts vertices whose principal-curvature
    discriminant went negative and was clamped.
    """

    theta: np.ndarray
    a_mixed: np.ndarray
    K: np.ndarray
    normal: np.ndarray
    kappa_h: np.ndarray
    kappa_g: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    kappa_g1: np.ndarray
    kappa_h1: np.ndarray
    psi_min: np.ndarray
    psi_max: np.ndarray
    delta: np.ndarray
    flags: np.ndarray
    delta_clamps: int = 0

    def __len__(self):
        return len(self.theta)

    def rankable(self) -> np.ndarray:
        """Indices of vertices eligible for ranking (no flags)."""
        return np.flatnonzero(self.flags == 0)


def _second_ring(topo: TopologyIndex, v: int, first: set):
    out = set()
    for u in first:
        out.update(int(w) for w in topo.rings[u])
    out.discard(v)
    out -= first
    return out


def _descriptor_row(mesh: Mesh, topo: TopologyIndex, diag: float, v: int):
    """Compute one vertex record; returns a dict of values plus flag bits."""
    row = dict(theta=TWO_PI, a_mixed=0.0, K=np.zeros(3), normal=np.zeros(3),
               kappa_h=0.0, kappa_g=0.0, kappa1=0.0, kappa2=0.0,
               kappa_g1=0.0, kappa_h1=0.0, psi_min=0.0, psi_max=0.0,
               delta=0.0, flags=0, clamped=False)
    if topo.face_count(v) == 0:
        row["flags"] = FLAG_ISOLATED
        return row
    if not topo.manifold[v]:
        row["flags"] = FLAG_NONMANIFOLD
        return row

    ring = one_ring(mesh, topo, v)
    if ring.valid_faces() == 0:
        row["flags"] = FLAG_DEGENERATE
        return row
    flags = 0
    if ring.boundary:
        flags |= FLAG_BOUNDARY

    a_mix = mixed_area(ring)
    kvec = mean_curvature_normal(mesh, ring, a_mix)
    kappa_h = 0.5 * float(np.linalg.norm(kvec))
    theta = snap_angle(ring.angle_sum)
    # the angle-deficit formula is meaningless on the boundary
    kappa_g = 0.0 if ring.boundary else (TWO_PI - theta) / a_mix
    kappa1, kappa2, clamped = principal_curvatures(kappa_h, kappa_g)
    normal = estimate_normal(ring)

    row.update(theta=theta, a_mixed=a_mix, K=kvec, normal=normal, kappa_h=kappa_h,
               kappa_g=kappa_g, kappa1=kappa1, kappa2=kappa2,
               delta=max(kappa_h * kappa_h - kappa_g, 0.0), clamped=clamped)

    try:
        row["psi_min"], row["psi_max"] = dihedral_extrema(mesh, topo, v)
    except GeometryError:
        row["psi_min"] = row["psi_max"] = 0.0  # no interior edge: boundary-flagged anyway

    # quadric pipeline: 1-ring neighbors, widened to the 2-ring when short
    frame = local_frame(normal)
    center = mesh.vertices[v]
    nbrs = list(dict.fromkeys(ring.neighbors))
    if len(nbrs) < 5:
        have = set(nbrs)
        extra = _second_ring(topo, v, set(int(u) for u in topo.rings[v]))
        pos = mesh.vertices
        nbrs += sorted((u for u in extra if u not in have),
                       key=lambda u: (pos[u][0], pos[u][1], pos[u][2], u))
    pts = [frame.to_local(mesh.vertices[u] - center) for u in nbrs]
    try:
        fit = fit_quadric(pts)
        k1q, k2q, kg1, kh1 = quadric_curvatures(fit)
        # snap against scale-adjusted zero so exact planes report exact zeros
        if abs(kg1) * diag * diag < CURV_SNAP:
            kg1 = 0.0
        if abs(kh1) * diag < CURV_SNAP:
            kh1 = 0.0
        row["kappa_g1"] = kg1
        row["kappa_h1"] = kh1
    except GeometryError:
        flags |= FLAG_FIT_FAILED

    row["flags"] = flags
    return row


def compute_descriptors(mesh: Mesh, topo: TopologyIndex, threads: int = 1) -> VertexDescriptors:
    """Build the full descriptor table.

    Per-vertex work is independent; results are written by index so the table
    is byte-identical for any thread count. Per-vertex failures become flags,
    never exceptions.
    """
    n = mesh.n_vertices
    diag = mesh.bbox_diagonal()
    out = VertexDescriptors(
        theta=np.full(n, TWO_PI), a_mixed=np.zeros(n), K=np.zeros((n, 3)),
        normal=np.zeros((n, 3)), kappa_h=np.zeros(n), kappa_g=np.zeros(n),
        kappa1=np.zeros(n), kappa2=np.zeros(n), kappa_g1=np.zeros(n),
        kappa_h1=np.zeros(n), psi_min=np.zeros(n), psi_max=np.zeros(n),
        delta=np.zeros(n), flags=np.zeros(n, dtype=np.int64))

    def fill(v):
        row = _descriptor_row(mesh, topo, diag, v)
        out.theta[v] = row["theta"]
        out.a_mixed[v] = row["a_mixed"]
        out.K[v] = row["K"]
        out.normal[v] = row["normal"]
        out.kappa_h[v] = row["kappa_h"]
        out.kappa_g[v] = row["kappa_g"]
        out.kappa1[v] = row["kappa1"]
        out.kappa2[v] = row["kappa2"]
        out.kappa_g1[v] = row["kappa_g1"]
        out.kappa_h1[v] = row["kappa_h1"]
        out.psi_min[v] = row["psi_min"]
        out.psi_max[v] = row["psi_max"]
        out.delta[v] = row["delta"]
        out.flags[v] = row["flags"]
        return row["clamped"]

    if threads <= 1:
        clamps = sum(fill(v) for v in range(n))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            clamps = sum(pool.map(fill, range(n)))
    out.delta_clamps = int(clamps)
    return out


def dumps_descriptors(desc: VertexDescriptors) -> str:
    """CSV export with a fixed column order and 17 significant digits."""
    lines = [",".join(CSV_COLUMNS)]
    for i in range(len(desc)):
        vals = (desc.theta[i], desc.a_mixed[i], desc.kappa_h[i], desc.kappa_g[i],
                desc.kappa_g1[i], desc.kappa1[i], desc.kappa2[i], desc.psi_min[i],
                desc.psi_max[i], desc.normal[i][0], desc.normal[i][1], desc.normal[i][2])
        lines.append(f"{i}," + ",".join(f"{v:.17g}" for v in vals) + f",{desc.flags[i]}")
    return "\n".join(lines) + "\n"
