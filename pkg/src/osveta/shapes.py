"""Deterministic mesh generators used as fixtures and bundled test shapes.

Everything here is reproducible: generators take explicit parameters (and a
seed where randomness is involved) and build vertices in a fixed order.
"""

import math

import numpy as np

from .mesh import Mesh

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

_ICO_VERTS = [
    (-1.0, _GOLDEN, 0.0), (1.0, _GOLDEN, 0.0), (-1.0, -_GOLDEN, 0.0), (1.0, -_GOLDEN, 0.0),
    (0.0, -1.0, _GOLDEN), (0.0, 1.0, _GOLDEN), (0.0, -1.0, -_GOLDEN), (0.0, 1.0, -_GOLDEN),
    (_GOLDEN, 0.0, -1.0), (_GOLDEN, 0.0, 1.0), (-_GOLDEN, 0.0, -1.0), (-_GOLDEN, 0.0, 1.0),
]

_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> Mesh:
    """Geodesic sphere: icosahedron with midpoint subdivision, outward winding."""
    verts = [np.array(v) / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = list(_ICO_FACES)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return Mesh(np.array(verts) * radius, np.array(faces))


def octahedron(radius: float = 1.0) -> Mesh:
    verts = radius * np.array([
        [1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0], [0, 0, 1.0], [0, 0, -1.0]])
    faces = np.array([
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]])
    return Mesh(verts, faces)


def cube12(size: float = 1.0) -> Mesh:
    """Axis-aligned cube as 12 triangles, centered at the origin."""
    h = size / 2.0
    verts = np.array([[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)])
    # index bits: x*4 + y*2 + z; quads CCW seen from outside, split along the
    # b-d diagonal so corners 0 and 7 touch no face diagonal (their three
    # incident edges are all true cube edges)
    quads = [
        (1, 5, 7, 3),  # +z
        (0, 2, 6, 4),  # -z
        (4, 6, 7, 5),  # +x
        (0, 1, 3, 2),  # -x
        (2, 3, 7, 6),  # +y
        (0, 4, 5, 1),  # -y
    ]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, d), (b, c, d)]
    return Mesh(verts, np.array(faces))


def planar_grid(nx: int = 4, ny: int = 4, spacing: float = 1.0) -> Mesh:
    """Flat z=0 grid of (nx x ny) quads, each split into two triangles."""
    verts = []
    for j in range(ny + 1):
        for i in range(nx + 1):
            verts.append((i * spacing, j * spacing, 0.0))
    faces = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b = a + 1
            c = a + nx + 2
            d = a + nx + 1
            faces += [(a, b, c), (a, c, d)]
    return Mesh(np.array(verts), np.array(faces))


def cylinder(radius: float = 1.0, n_theta: int = 24, n_rings: int = 9,
             height: float = 2.0) -> Mesh:
    """Open tube around the z axis (boundary rings at both ends), outward winding."""
    verts = []
    for k in range(n_rings):
        z = height * (k / (n_rings - 1) - 0.5)
        for t in range(n_theta):
            ang = 2.0 * math.pi * t / n_theta
            verts.append((radius * math.cos(ang), radius * math.sin(ang), z))
    faces = []
    for k in range(n_rings - 1):
        for t in range(n_theta):
            a = k * n_theta + t
            b = k * n_theta + (t + 1) % n_theta
            c = a + n_theta
            d = b + n_theta
            faces += [(a, b, d), (a, d, c)]
    return Mesh(np.array(verts), np.array(faces))


def hex_fan(edge: float = 1.0) -> Mesh:
    """Planar fan of six equilateral triangles around a center vertex (z = 0)."""
    verts = [(0.0, 0.0, 0.0)]
    for k in range(6):
        ang = math.pi * k / 3.0
        verts.append((edge * math.cos(ang), edge * math.sin(ang), 0.0))
    faces = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return Mesh(np.array(verts), np.array(faces))


def saddle_fan(height: float = 0.5, edge: float = 1.0) -> Mesh:
    """Six-triangle fan whose rim alternates up/down: a saddle at the center."""
    verts = [(0.0, 0.0, 0.0)]
    for k in range(6):
        ang = math.pi * k / 3.0
        z = height if k % 2 == 0 else -height
        verts.append((edge * math.cos(ang), edge * math.sin(ang), z))
    faces = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return Mesh(np.array(verts), np.array(faces))


# Sides of the lattice cube: (fixed axis, fixed value is high end?, u axis, v axis)
# chosen so that u x v points outward.
_CUBE_SIDES = (
    (2, True, 0, 1),   # +z: u = x, v = y
    (2, False, 1, 0),  # -z: u = y, v = x
    (0, True, 1, 2),   # +x: u = y, v = z
    (0, False, 2, 1),  # -x: u = z, v = y
    (1, True, 2, 0),   # +y: u = z, v = x
    (1, False, 0, 2),  # -y: u = x, v = z
)


def grid_cube(n: int = 8, size: float = 1.0) -> Mesh:
    """Closed cube with each side an n x n quad grid (welded edges/corners)."""
    mesh, _ = _lattice_cube(n, size)
    return mesh


def _lattice_cube(n: int, size: float):
    """Build the welded cube; also return per-side interior lattice info.

    The side info is a list of (vertex id, side index, u frac, v frac, outward)
    for every strictly-interior side vertex, used by bump displacement.
    """
    vid = {}
    verts = []

    def point(i, j, k):
        key = (i, j, k)
        if key not in vid:
            vid[key] = len(verts)
            verts.append(key)
        return vid[key]

    faces = []
    interior = []
    for side, (axis, high, u_ax, v_ax) in enumerate(_CUBE_SIDES):
        fixed = n if high else 0

        def lattice(a, b):
            coords = [0, 0, 0]
            coords[axis] = fixed
            coords[u_ax] = a
            coords[v_ax] = b
            return point(*coords)

        for a in range(n):
            for b in range(n):
                p00 = lattice(a, b)
                p10 = lattice(a + 1, b)
                p11 = lattice(a + 1, b + 1)
                p01 = lattice(a, b + 1)
                faces += [(p00, p10, p11), (p00, p11, p01)]
        outward = np.zeros(3)
        outward[axis] = 1.0 if high else -1.0
        for a in range(1, n):
            for b in range(1, n):
                interior.append((lattice(a, b), side, a / n, b / n, outward))

    positions = np.array([[size * (c / n - 0.5) for c in key] for key in verts])
    return Mesh(positions, np.array(faces)), interior


def bumpy_cube(n: int = 30, size: float = 1.0, seed: int = 0, bumps_per_side: int = 2,
               amplitude: float = 0.1, width: float = 0.13) -> Mesh:
    """Grid cube with smooth Gaussian bumps on its faces.

    Face interiors away from the bumps stay exactly planar; bump tops are
    convex caps ringed by saddle regions, and the twelve cube edges remain
    sharp. A useful desk-scale stand-in for a detailed scanned model.
    """
    base, interior = _lattice_cube(n, size)
    rng = np.random.default_rng(seed)
    bumps = []  # per side: list of (cu, cv, amp)
    for _ in range(6):
        side_bumps = []
        for _ in range(bumps_per_side):
            cu, cv = rng.uniform(0.25, 0.75, size=2)
            amp = amplitude * size * rng.uniform(0.7, 1.3)
            side_bumps.append((float(cu), float(cv), float(amp)))
        bumps.append(side_bumps)

    verts = base.vertices.copy()
    two_w2 = 2.0 * width * width
    for v, side, fu, fv, outward in interior:
        h = 0.0
        for cu, cv, amp in bumps[side]:
            r2 = (fu - cu) ** 2 + (fv - cv) ** 2
            g = amp * math.exp(-r2 / two_w2)
            if g > 1e-12 * size:
                h += g * (math.sin(math.pi * fu) * math.sin(math.pi * fv)) ** 2
        if h != 0.0:
            verts[v] = verts[v] + h * outward
    return Mesh(verts, base.faces)
