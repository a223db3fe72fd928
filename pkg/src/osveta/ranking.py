"""Weighted-criteria vertex stability ranking.

Each criterion is a sign test on one descriptor; a vertex's stability score
is the weight-normalized sum of satisfied criteria. Vertices ranked by
descending score form the stability vectors: scores s, indices q, and the
top-L carrier selection p.
"""

from dataclasses import dataclass

import numpy as np

from .curvature import VertexDescriptors
from .mesh import Mesh, TWO_PI


@dataclass(frozen=True)
class Criterion:
    """One stability test: compare a descriptor field against a reference."""

    cid: str
    field: str       # attribute of VertexDescriptors
    op: str          # ">=", ">", "<"
    ref: float
    weight: float

    def values(self, desc: VertexDescriptors) -> np.ndarray:
        return getattr(desc, self.field)

    def satisfied(self, desc: VertexDescriptors) -> np.ndarray:
        v = self.values(desc)
        if self.op == ">=":
            return v >= self.ref
        if self.op == ">":
            return v > self.ref
        if self.op == "<":
            return v < self.ref
        raise ValueError(f"unknown op {self.op!r}")

    def margin(self, desc: VertexDescriptors) -> np.ndarray:
        """Signed distance to the criterion threshold (positive = satisfied)."""
        v = self.values(desc)
        return self.ref - v if self.op == "<" else v - self.ref


# Default criteria and weights, in canonical order. kG is the angle-deficit
# Gaussian curvature, kG1 its quadric-fit counterpart.
DEFAULT_CRITERIA = (
    Criterion("psi_min>=0", "psi_min", ">=", 0.0, 1.0),
    Criterion("theta<2pi", "theta", "<", TWO_PI, 1.0),
    Criterion("kG1>0", "kappa_g1", ">", 0.0, 1.0),
    Criterion("psi_max>=0", "psi_max", ">=", 0.0, 0.9),
    Criterion("theta>2pi", "theta", ">", TWO_PI, 0.8),
    Criterion("kG<0", "kappa_g", "<", 0.0, 0.8),
    Criterion("kG1<0", "kappa_g1", "<", 0.0, 0.7),
    Criterion("kG>0", "kappa_g", ">", 0.0, 0.4),
)


def criterion_by_id(cid: str) -> Criterion:
    for crit in DEFAULT_CRITERIA:
        if crit.cid == cid:
            return crit
    known = ", ".join(c.cid for c in DEFAULT_CRITERIA)
    raise KeyError(f"unknown criterion {cid!r} (known: {known})")


@dataclass(frozen=True)
class StabilityRanking:
    """Stability scores s (descending), aligned vertex indices q, exclusions."""

    s: np.ndarray
    q: np.ndarray
    excluded: np.ndarray  # sorted vertex indices left out of the ranking

    def __len__(self):
        return len(self.q)


def evaluate_criteria(desc: VertexDescriptors, criteria=DEFAULT_CRITERIA) -> np.ndarray:
    """(n_vertices, n_criteria) satisfaction mask; flagged vertices all-False."""
    mask = np.column_stack([c.satisfied(desc) for c in criteria])
    mask[desc.flags != 0] = False
    return mask


def criterion_margins(desc: VertexDescriptors, criteria=DEFAULT_CRITERIA) -> np.ndarray:
    """(n_vertices, n_criteria) signed margins; the network's input features."""
    return np.column_stack([c.margin(desc) for c in criteria])


def stability_scores(mask: np.ndarray, criteria=DEFAULT_CRITERIA,
                     excluded: np.ndarray | None = None) -> np.ndarray:
    """Weight-normalized score in [0, 1] per vertex; excluded vertices get -1."""
    weights = np.array([c.weight for c in criteria])
    scores = (mask @ weights) / weights.sum()
    if excluded is not None and len(excluded):
        scores = scores.copy()
        scores[np.asarray(excluded, dtype=np.int64)] = -1.0
    return scores


def rank_vertices(scores: np.ndarray, excluded=()) -> StabilityRanking:
    """Sort descending by score, ties broken by ascending vertex index."""
    scores = np.asarray(scores, dtype=np.float64)
    excluded = np.asarray(sorted(int(v) for v in excluded), dtype=np.int64)
    keep = np.ones(len(scores), dtype=bool)
    keep[excluded] = False
    idx = np.flatnonzero(keep)
    order = np.lexsort((idx, -scores[idx]))
    q = idx[order]
    return StabilityRanking(s=scores[q], q=q, excluded=excluded)


def rank_osveta(desc: VertexDescriptors, criteria=DEFAULT_CRITERIA) -> StabilityRanking:
    """Full pipeline: criteria mask -> scores -> descending ranking."""
    mask = evaluate_criteria(desc, criteria)
    scores = stability_scores(mask, criteria)
    return rank_vertices(scores, excluded=np.flatnonzero(desc.flags != 0))


def select_top(ranking: StabilityRanking, count: int) -> np.ndarray:
    """First ``count`` entries of q: the carrier selection p."""
    if count < 0 or count > len(ranking.q):
        raise ValueError(f"selection of {count} from {len(ranking.q)} ranked vertices")
    return ranking.q[:count].copy()


def mask_bits(mask_row) -> int:
    """Pack one satisfaction row into an int, criterion 0 in the lowest bit."""
    bits = 0
    for k, hit in enumerate(mask_row):
        if hit:
            bits |= 1 << k
    return bits


def dumps_ranking(ranking: StabilityRanking, mask: np.ndarray | None = None) -> str:
    """CSV export: rank, vertex_index, score, mask_bits."""
    lines = ["rank,vertex_index,score,mask_bits"]
    for r, (v, s) in enumerate(zip(ranking.q, ranking.s)):
        bits = mask_bits(mask[v]) if mask is not None else 0
        lines.append(f"{r},{v},{s:.17g},{bits}")
    return "\n".join(lines) + "\n"


def dumps_selection_obj(mesh: Mesh, selection) -> str:
    """OBJ point cloud of the selected vertex positions (visualization export)."""
    lines = []
    for v in selection:
        x, y, z = mesh.vertices[int(v)]
        lines.append(f"v {x!r} {y!r} {z!r}")
    return "\n".join(lines) + "\n"
