"""Experiment driver: training-set construction and the decimation survival test.

The survival experiment selects L carrier vertices per method (random,
criteria ranking, neural ranking), runs one deep decimation, and counts how
many of each selection were removed once the channel reaches each level.
All methods are scored against the same removal trace.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import compute_descriptors
from .decimate import decimate, survival_depth
from .mesh import Mesh, build_topology
from .neuro import FnnModel, make_samples, rank_neuro
from .ranking import rank_osveta, select_top, rank_vertices

log = logging.getLogger("osveta")

DEFAULT_LEVELS = (0, 20, 40, 60, 80, 90)
METHODS = ("random", "osveta", "neuro")

# Published evaluation of the same protocol (17350-vertex model, 3ds Max
# 'Pro Optimizer' channel, L = 1000); kept for report annotation only.
REFERENCE_SURVIVAL = {
    "levels": (0, 20, 40, 60, 80, 90),
    "total": (17350, 12209, 6953, 3926, 2315, 1448),
    "random": (0, 332, 622, 781, 872, 920),
    "osveta": (0, 1, 30, 147, 332, 522),
    "neuro": (0, 0, 22, 121, 282, 421),
}

# Fraction of the deepest decimation used when building training targets.
TRAINING_DECIMATION = 0.9


@dataclass
class SurvivalReport:
    """Removed-carrier counts per decimation level and selection method."""

    mesh_id: str
    n_vertices: int
    L: int
    seed: int
    levels: tuple
    survivors: tuple                       # total vertices left per level
    removed: dict = field(default_factory=dict)  # method -> tuple per level

    def check(self) -> None:
        """Assert the structural invariants every report must satisfy."""
        for method, counts in self.removed.items():
            if len(counts) != len(self.levels):
                raise ValueError(f"{method}: {len(counts)} counts for {len(self.levels)} levels")
            for lvl, c in zip(self.levels, counts):
                if not 0 <= c <= self.L:
                    raise ValueError(f"{method}@{lvl}: removed count {c} outside [0, L]")
                if lvl == 0 and c != 0:
                    raise ValueError(f"{method}: nonzero removals at level 0")
            if list(counts) != sorted(counts):
                raise ValueError(f"{method}: removed counts not monotone")


def make_training_set(meshes, decim_seed: int):
    """One sample per rankable vertex across all meshes.

    Features are per-mesh normalized criterion margins; the target is the
    vertex's survival depth under a deep decimation of its own mesh.
    """
    if not meshes:
        raise ValueError("need at least one training mesh")
    samples = []
    for mesh in meshes:
        topo = build_topology(mesh)
        desc = compute_descriptors(mesh, topo)
        _, trace = decimate(mesh, TRAINING_DECIMATION, decim_seed)
        if trace.shortfall:
            log.warning("training decimation shortfall of %d on %d-vertex mesh",
                        trace.shortfall, mesh.n_vertices)
        samples.extend(make_samples(desc, survival_depth(trace)))
    return samples


def _random_selection(rankable: np.ndarray, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed), 0xA5])
    return np.sort(rng.choice(rankable, size=count, replace=False))


def run_survival_experiment(mesh: Mesh, model: FnnModel, L: int | None,
                            levels=DEFAULT_LEVELS, seed: int = 0,
                            mesh_id: str = "mesh", threads: int = 1) -> SurvivalReport:
    """Select carriers three ways, decimate once, report per-level erasures."""
    levels = tuple(sorted(set(int(l) for l in levels)))
    if any(l < 0 or l >= 100 for l in levels):
        raise ValueError(f"levels must be percentages in [0, 100), got {levels}")
    topo = build_topology(mesh)
    desc = compute_descriptors(mesh, topo, threads=threads)
    rankable = desc.rankable()
    if L is None:
        L = max(1, math.ceil(0.10 * len(rankable)))
    if L > len(rankable):
        raise ValueError(f"L={L} exceeds {len(rankable)} rankable vertices")

    selections = {
        "random": _random_selection(rankable, L, seed),
        "osveta": select_top(rank_osveta(desc), L),
        "neuro": select_top(rank_neuro(model, desc), L),
    }

    deepest = max(levels) if levels else 0
    n = mesh.n_vertices
    if deepest > 0:
        _, trace = decimate(mesh, deepest / 100.0, seed)
    else:
        trace = None

    survivors = []
    removed = {m: [] for m in METHODS}
    for lvl in levels:
        step_limit = math.ceil(n * lvl / 100.0)
        if trace is not None:
            step_limit = min(step_limit, len(trace.removal_order))
        survivors.append(n - step_limit)
        for method in METHODS:
            count = trace.removed_within(selections[method], step_limit) if trace else 0
            removed[method].append(count)

    report = SurvivalReport(mesh_id=mesh_id, n_vertices=n, L=L, seed=int(seed),
                            levels=levels, survivors=tuple(survivors),
                            removed={m: tuple(v) for m, v in removed.items()})
    report.check()
    return report


_METHOD_LABELS = {"random": "Random", "osveta": "OSVETA", "neuro": "Neuro-OSVETA"}


def emit_report(report: SurvivalReport, fmt: str = "markdown") -> str:
    """Render a report: wide markdown table or long-form CSV."""
    fmt = fmt.lower()
    if fmt == "csv":
        lines = ["level,method,removed,survivors"]
        for k, lvl in enumerate(report.levels):
            for method in METHODS:
                lines.append(f"{lvl},{method},{report.removed[method][k]},"
                             f"{report.survivors[k]}")
        return "\n".join(lines) + "\n"
    if fmt != "markdown":
        raise ValueError(f"unknown report format {fmt!r}")

    head = [f"# Carrier survival: {report.mesh_id}", "",
            f"Vertices: {report.n_vertices}, carriers per method: L = {report.L}, "
            f"seed = {report.seed}.", ""]
    cols = [""] + [f"{lvl}%" for lvl in report.levels]
    rows = [cols, ["---"] * len(cols),
            ["Total VR"] + [str(s) for s in report.survivors]]
    for method in METHODS:
        rows.append([_METHOD_LABELS[method]]
                    + [str(c) for c in report.removed[method]])
    table = ["| " + " | ".join(r) + " |" for r in rows]
    note = ["", "Counts are carriers removed by the channel at each level. "
            "Published reference on a 17350-vertex model (proprietary "
            "'Pro Optimizer' channel, L = 1000): "
            f"Random {'/'.join(map(str, REFERENCE_SURVIVAL['random']))}, "
            f"OSVETA {'/'.join(map(str, REFERENCE_SURVIVAL['osveta']))}, "
            f"Neuro-OSVETA {'/'.join(map(str, REFERENCE_SURVIVAL['neuro']))}."]
    return "\n".join(head + table + note) + "\n"


def parse_report_csv(text: str) -> dict:
    """Read back the long-form CSV into {(level, method): (removed, survivors)}."""
    out = {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    for ln in lines[1:]:
        lvl, method, removed, survivors = ln.split(",")
        out[(int(lvl), method)] = (int(removed), int(survivors))
    return out


def neuro_beats_baselines(report: SurvivalReport, from_level: int = 40) -> bool:
    """Ordering check used by the regression suite: neural <= criteria < random."""
    for k, lvl in enumerate(report.levels):
        if lvl < from_level:
            continue
        r = report.removed
        if not (r["neuro"][k] <= r["osveta"][k] < r["random"][k]):
            return False
    return True
