"""Vertex-removal erasure channel: QEM half-edge collapse plus Gaussian noise.

The decimator performs Garland-Heckbert quadric-error half-edge collapses:
each collapse merges one edge endpoint into the other, so surviving vertices
keep their original indices and positions. The per-vertex removal order is
recorded as a DecimationTrace, the channel record consumed by the survival
experiment and by training-target construction.
"""

import heapq
import logging
import math
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

log = logging.getLogger("osveta")


@dataclass
class DecimationTrace:
    """Removal schedule of one decimation run.

    removal_order: vertex indices in the order they were removed.
    removal_step: per-vertex 1-based removal step, 0 for survivors.
    requested: how many removals were asked for (>= len(removal_order) when
        legal collapses ran out early).
    compaction: original index -> simplified-mesh index, -1 for removed.
    """

    removal_order: list
    removal_step: np.ndarray
    requested: int
    n_vertices: int
    seed: int
    compaction: np.ndarray

    @property
    def shortfall(self) -> int:
        return self.requested - len(self.removal_order)

    def survivors(self) -> np.ndarray:
        return np.flatnonzero(self.removal_step == 0)

    def removed_within(self, selection, step_limit: int) -> int:
        """How many of the selected vertices were gone after ``step_limit`` removals."""
        steps = self.removal_step[np.asarray(selection, dtype=np.int64)]
        return int(((steps > 0) & (steps <= step_limit)).sum())


def survival_depth(trace: DecimationTrace) -> np.ndarray:
    """Per-vertex survival depth: r/R for the r-th of R removals, 1.0 for survivors."""
    depth = np.ones(trace.n_vertices)
    total = len(trace.removal_order)
    if total:
        for r, v in enumerate(trace.removal_order, start=1):
            depth[v] = r / total
    return depth


def _plane_quadrics(mesh: Mesh) -> np.ndarray:
    """Sum of supporting-plane quadrics per vertex (4x4 each)."""
    n = mesh.n_vertices
    quadrics = np.zeros((n, 4, 4))
    if mesh.n_faces == 0:
        return quadrics
    v0 = mesh.vertices[mesh.faces[:, 0]]
    v1 = mesh.vertices[mesh.faces[:, 1]]
    v2 = mesh.vertices[mesh.faces[:, 2]]
    normals = np.cross(v1 - v0, v2 - v0)
    norms = np.linalg.norm(normals, axis=1)
    ok = norms > 0.0
    normals[ok] /= norms[ok, None]
    normals[~ok] = 0.0  # degenerate faces contribute nothing
    d = -np.einsum("ij,ij->i", normals, v0)
    planes = np.column_stack([normals, d])
    k = planes[:, :, None] * planes[:, None, :]
    for col in range(3):
        np.add.at(quadrics, mesh.faces[:, col], k)
    return quadrics


class _CollapseState:
    """Mutable topology and QEM bookkeeping during decimation."""

    def __init__(self, mesh: Mesh):
        self.pos = mesh.vertices
        self.faces = [list(map(int, f)) for f in mesh.faces]
        self.face_alive = [True] * len(self.faces)
        n = mesh.n_vertices
        self.vface = [set() for _ in range(n)]
        self.adj = [set() for _ in range(n)]
        for fid, (a, b, c) in enumerate(self.faces):
            self.vface[a].add(fid)
            self.vface[b].add(fid)
            self.vface[c].add(fid)
            self.adj[a].update((b, c))
            self.adj[b].update((a, c))
            self.adj[c].update((a, b))
        self.quadrics = _plane_quadrics(mesh)
        self.alive = [True] * n
        self.stamp = [0] * n

    def shared_faces(self, i: int, j: int) -> set:
        return self.vface[i] & self.vface[j]

    def is_boundary(self, v: int) -> bool:
        return any(len(self.shared_faces(v, u)) == 1 for u in self.adj[v])

    def cost(self, src: int, dst: int) -> float:
        """QEM error of merging src into dst (dst keeps its position)."""
        x = np.append(self.pos[dst], 1.0)
        q = self.quadrics[src] + self.quadrics[dst]
        return float(x @ q @ x)

    def _face_normal(self, fid: int, replace: int | None = None,
                     with_: int | None = None):
        a, b, c = self.faces[fid]
        if replace is not None:
            a = with_ if a == replace else a
            b = with_ if b == replace else b
            c = with_ if c == replace else c
        n = np.cross(self.pos[b] - self.pos[a], self.pos[c] - self.pos[a])
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            return None
        return n / norm

    def legal(self, src: int, dst: int) -> bool:
        """Can src be collapsed into dst without breaking the surface?"""
        if not (self.alive[src] and self.alive[dst]):
            return False
        if dst not in self.adj[src]:
            return False
        shared = self.shared_faces(src, dst)
        if not 1 <= len(shared) <= 2:
            return False  # complex or detached edge: leave it alone
        # link condition: the only common neighbors are the shared-face apexes
        opposite = set()
        for fid in shared:
            for v in self.faces[fid]:
                if v != src and v != dst:
                    opposite.add(v)
        if (self.adj[src] & self.adj[dst]) != opposite:
            return False
        # keep the boundary where it is: boundary vertices may only slide
        # along a boundary edge
        if self.is_boundary(src) and len(shared) != 1:
            return False
        # reject collapses that flip or flatten any surviving face
        for fid in self.vface[src] - shared:
            before = self._face_normal(fid)
            after = self._face_normal(fid, replace=src, with_=dst)
            if before is None:
                continue
            if after is None or float(np.dot(before, after)) < 0.0:
                return False
        return True

    def collapse(self, src: int, dst: int) -> None:
        for fid in self.shared_faces(src, dst):
            self.face_alive[fid] = False
            for v in self.faces[fid]:
                self.vface[v].discard(fid)
        for fid in list(self.vface[src]):
            face = self.faces[fid]
            self.faces[fid] = [dst if v == src else v for v in face]
            self.vface[src].discard(fid)
            self.vface[dst].add(fid)
        for u in self.adj[src]:
            self.adj[u].discard(src)
            if u != dst:
                self.adj[u].add(dst)
                self.adj[dst].add(u)
        self.adj[dst].discard(dst)
        self.adj[src] = set()
        self.quadrics[dst] = self.quadrics[dst] + self.quadrics[src]
        self.alive[src] = False
        self.stamp[src] += 1
        self.stamp[dst] += 1
        for u in self.adj[dst]:
            self.stamp[u] += 1


def decimate(mesh: Mesh, target_fraction: float, seed: int = 0):
    """Remove ceil(|V| * target_fraction) vertices by cheapest legal collapse.

    Returns (simplified Mesh, DecimationTrace). Runs single-threaded; the
    collapse sequence is fully determined by the mesh (ties broken on vertex
    indices), so the seed only labels the trace.
    """
    if not 0.0 <= target_fraction < 1.0:
        raise ValueError(f"target_fraction must be in [0, 1), got {target_fraction}")
    if mesh.n_vertices == 0:
        raise ValueError("cannot decimate an empty mesh")

    n = mesh.n_vertices
    requested = math.ceil(n * target_fraction)
    state = _CollapseState(mesh)
    heap = []

    def push_around(v):
        for u in sorted(state.adj[v]):
            heapq.heappush(heap, (state.cost(v, u), v, u, state.stamp[v], state.stamp[u]))
            heapq.heappush(heap, (state.cost(u, v), u, v, state.stamp[u], state.stamp[v]))

    for v in range(n):
        for u in sorted(state.adj[v]):
            if u > v:
                heapq.heappush(heap, (state.cost(v, u), v, u, state.stamp[v], state.stamp[u]))
                heapq.heappush(heap, (state.cost(u, v), u, v, state.stamp[u], state.stamp[v]))

    removal_order = []
    removal_step = np.zeros(n, dtype=np.int64)
    while len(removal_order) < requested and heap:
        cost, src, dst, s_src, s_dst = heapq.heappop(heap)
        if state.stamp[src] != s_src or state.stamp[dst] != s_dst:
            continue
        if not state.legal(src, dst):
            continue
        state.collapse(src, dst)
        removal_order.append(src)
        removal_step[src] = len(removal_order)
        push_around(dst)

    if len(removal_order) < requested:
        log.warning("decimation shortfall: removed %d of %d requested",
                    len(removal_order), requested)

    survivors = [v for v in range(n) if state.alive[v]]
    compaction = np.full(n, -1, dtype=np.int64)
    for new, old in enumerate(survivors):
        compaction[old] = new
    new_faces = [[int(compaction[v]) for v in state.faces[fid]]
                 for fid in range(len(state.faces)) if state.face_alive[fid]]
    simplified = Mesh(mesh.vertices[survivors],
                      np.asarray(new_faces, dtype=np.int64).reshape(-1, 3))
    trace = DecimationTrace(removal_order=removal_order, removal_step=removal_step,
                            requested=requested, n_vertices=n, seed=int(seed),
                            compaction=compaction)
    return simplified, trace


def gaussian_perturb(mesh: Mesh, sigma: float, seed: int) -> Mesh:
    """Jitter every coordinate with N(0, (sigma * bbox diagonal)^2) noise.

    sigma = 0 returns the mesh unchanged (bit-identical); connectivity is
    never touched.
    """
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return mesh
    rng = np.random.default_rng([int(seed), 0xBE])
    scale = sigma * mesh.bbox_diagonal()
    noise = rng.normal(0.0, scale, size=mesh.vertices.shape)
    return Mesh(mesh.vertices + noise, mesh.faces)


def dumps_trace(trace: DecimationTrace) -> str:
    """CSV export: vertex_index, removal_step (-1 for survivors), survival_depth."""
    depth = survival_depth(trace)
    lines = ["vertex_index,removal_step,survival_depth"]
    for v in range(trace.n_vertices):
        step = int(trace.removal_step[v])
        lines.append(f"{v},{step if step > 0 else -1},{depth[v]:.17g}")
    return "\n".join(lines) + "\n"


def dumps_compaction(trace: DecimationTrace) -> str:
    """CSV export of the old-index -> new-index map (-1 for removed)."""
    lines = ["old_index,new_index"]
    for v in range(trace.n_vertices):
        lines.append(f"{v},{int(trace.compaction[v])}")
    return "\n".join(lines) + "\n"
