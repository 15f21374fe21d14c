"""One realization of the subtractive attachment process and its statistics.

Vertex t (1-based) attaches to parent t - Z_t; a nonpositive parent is a
root, and the root id of vertex t ("color") follows the recursion
color[t] = color[t - Z_t].  Arrays are the only O(n) storage: steps and
colors as int64, depths as int32.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dist import StepDistribution, make_dist
from .rng import RandomStream


@njit(cache=True)
def _fill_colors(steps, color, depth):
    n = steps.size
    for t in range(n):
        parent = t + 1 - steps[t]
        if parent <= 0:
            color[t] = parent
            depth[t] = 1
        else:
            color[t] = color[parent - 1]
            depth[t] = depth[parent - 1] + 1


@njit(cache=True)
def _block_chain(steps):
    """B_1 = 1; B_{t+1} = B_t + 1 if Z_{t+1} <= B_t else 1."""
    n = steps.size
    B = np.empty(n, dtype=np.int64)
    B[0] = 1
    for t in range(1, n):
        B[t] = B[t - 1] + 1 if steps[t] <= B[t - 1] else 1
    return B


@dataclass(frozen=True)
class Forest:
    n: int
    steps: np.ndarray   # Z_1..Z_n, int64
    color: np.ndarray   # root id of each vertex, int64, always <= 0
    depth: np.ndarray   # path distance to the root, int32
    spec: str | None = None
    seed: int | None = None

    @property
    def parents(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=np.int64) - self.steps


def from_steps(steps, spec: str | None = None, seed: int | None = None) -> Forest:
    """Build the forest for explicitly given step values."""
    steps = np.asarray(steps, dtype=np.int64)
    if steps.ndim != 1 or steps.size == 0:
        raise ValueError("steps must be a nonempty 1-d array")
    if np.any(steps < 1):
        raise ValueError("steps must be positive integers")
    n = steps.size
    color = np.empty(n, dtype=np.int64)
    depth = np.empty(n, dtype=np.int32)
    _fill_colors(steps, color, depth)
    return Forest(n, steps, color, depth, spec=spec, seed=seed)


def build(d: StepDistribution, n: int, seed: int) -> Forest:
    """Simulate to horizon n; deterministic given (d, n, seed)."""
    if n < 1:
        raise ValueError("horizon must be >= 1")
    stream = RandomStream(seed)
    steps = d.sample(stream, size=n)
    return from_steps(steps, spec=d.spec, seed=seed)


@dataclass
class ForestStats:
    n: int
    tree_sizes: dict            # root id -> S_n^{(i)} (root excluded)
    num_trees: int              # M_n
    root_hits: int              # O_n
    root_degrees: dict          # root id -> D_n^{(i)}
    positive_degrees: np.ndarray  # D_n^{(t)} for t = 1..n, int32
    height: int                 # H_n
    height_zero: int            # height of the 0-tree
    leaves_zero: int            # L_n
    profile_zero: np.ndarray    # N_k for k = 1..height_zero
    block_chain: np.ndarray     # B_1..B_n
    last_renewal: int           # N = max{t : B_t = 1}
    max_degree_positive: int = field(init=False)
    max_degree_root: int = field(init=False)

    def __post_init__(self):
        self.max_degree_positive = int(self.positive_degrees.max(initial=0))
        self.max_degree_root = max(self.root_degrees.values(), default=0)


def stats(f: Forest) -> ForestStats:
    """All per-realization statistics in one pass plus one child-count pass."""
    n = f.n
    parents = f.parents
    roots, counts = np.unique(f.color, return_counts=True)
    tree_sizes = dict(zip(roots.tolist(), counts.tolist()))

    root_parent = parents <= 0
    root_hits = int(root_parent.sum())
    rp, rc = np.unique(parents[root_parent], return_counts=True)
    root_degrees = dict(zip(rp.tolist(), rc.tolist()))

    pos_parents = parents[~root_parent]
    positive_degrees = np.bincount(pos_parents, minlength=n + 1)[1:] \
        .astype(np.int32)

    zero_mask = f.color == 0
    height_zero = int(f.depth[zero_mask].max(initial=0))
    profile_zero = np.bincount(f.depth[zero_mask],
                               minlength=height_zero + 1)[1:]
    leaves_zero = int(np.sum(zero_mask & (positive_degrees == 0)))

    B = _block_chain(f.steps)
    last_renewal = int(np.nonzero(B == 1)[0][-1]) + 1

    return ForestStats(
        n=n,
        tree_sizes=tree_sizes,
        num_trees=len(tree_sizes),
        root_hits=root_hits,
        root_degrees=root_degrees,
        positive_degrees=positive_degrees,
        height=int(f.depth.max()),
        height_zero=height_zero,
        leaves_zero=leaves_zero,
        profile_zero=profile_zero,
        block_chain=B,
        last_renewal=last_renewal,
    )


def profile(f: Forest, kmax: int) -> np.ndarray:
    """N_1..N_kmax: vertices of the 0-tree at each depth."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    zero_depths = f.depth[f.color == 0]
    zero_depths = zero_depths[zero_depths <= kmax]
    return np.bincount(zero_depths, minlength=kmax + 1)[1:]


def max_degree(f: Forest) -> dict:
    """Maximum out-degree over positive vertices and over roots."""
    s = stats(f)
    return {"over_positive": s.max_degree_positive,
            "over_roots": s.max_degree_root}


def stats_json(f: Forest, s: ForestStats | None = None) -> str:
    """Deterministic JSON summary (the CLI `simulate` payload)."""
    s = s if s is not None else stats(f)
    size_values, size_counts = np.unique(
        np.fromiter(s.tree_sizes.values(), dtype=np.int64), return_counts=True)
    payload = {
        "spec": f.spec,
        "seed": f.seed,
        "n": f.n,
        "M": s.num_trees,
        "O": s.root_hits,
        "H": s.height,
        "H_zero": s.height_zero,
        "L_zero": s.leaves_zero,
        "last_renewal": s.last_renewal,
        "max_degree_positive": s.max_degree_positive,
        "max_degree_root": s.max_degree_root,
        "size_of_zero_tree": s.tree_sizes.get(0, 0),
        "tree_size_histogram": {int(v): int(c)
                                for v, c in zip(size_values, size_counts)},
        "profile_zero": s.profile_zero.tolist(),
    }
    return json.dumps(payload, sort_keys=True)


# -- trace persistence ---------------------------------------------------

def save_trace(f: Forest, path: str, format: str = "npz") -> None:
    """Persist (spec, seed, n, steps) so a run can be re-analyzed.

    npz: numpy archive with fields spec, seed, n, steps.
    csv: header row `spec,seed,n` then one step value per line.
    """
    if format == "npz":
        np.savez_compressed(path, spec=f.spec or "", seed=f.seed if f.seed is not None else -1,
                            n=f.n, steps=f.steps)
    elif format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["spec", "seed", "n"])
            w.writerow([f.spec or "", f.seed if f.seed is not None else "", f.n])
            w.writerow(["step"])
            for z in f.steps:
                w.writerow([int(z)])
    else:
        raise ValueError(f"unknown trace format {format!r}")


def load_trace(path: str) -> Forest:
    if path.endswith(".npz"):
        data = np.load(path, allow_pickle=False)
        spec = str(data["spec"]) or None
        seed = int(data["seed"])
        return from_steps(data["steps"], spec=spec,
                          seed=seed if seed >= 0 else None)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    spec_row = rows[1]
    steps = [int(r[0]) for r in rows[3:]]
    return from_steps(steps, spec=spec_row[0] or None,
                      seed=int(spec_row[1]) if spec_row[1] != "" else None)
