"""Forest construction against a straight-line reference implementation."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surforest import forest
from surforest.dist import make_dist


def _reference(steps):
    """Dict of statistics computed the slow, obvious way."""
    n = len(steps)
    color, depth, parent = {}, {}, {}
    for t in range(1, n + 1):
        p = t - steps[t - 1]
        parent[t] = p
        if p <= 0:
            color[t], depth[t] = p, 1
        else:
            color[t], depth[t] = color[p], depth[p] + 1
    children = {}
    for t in range(1, n + 1):
        children.setdefault(parent[t], []).append(t)
    B = [1]
    for t in range(2, n + 1):
        B.append(B[-1] + 1 if steps[t - 1] <= B[-1] else 1)
    return {
        "color": [color[t] for t in range(1, n + 1)],
        "depth": [depth[t] for t in range(1, n + 1)],
        "M": len(set(color.values())),
        "O": sum(1 for t in range(1, n + 1) if parent[t] <= 0),
        "H": max(depth.values()),
        "S0": sum(1 for t in range(1, n + 1) if color[t] == 0),
        "L0": sum(1 for t in range(1, n + 1)
                  if color[t] == 0 and t not in children),
        "maxdeg": max((len(v) for k, v in children.items() if k >= 1),
                      default=0),
        "maxrootdeg": max((len(v) for k, v in children.items() if k <= 0),
                          default=0),
        "block": B,
        "N": max(t for t in range(1, n + 1) if B[t - 1] == 1),
    }


def test_worked_example():
    f = forest.from_steps([3, 2, 1, 6, 3])
    assert f.color.tolist() == [-2, 0, 0, -2, 0]
    assert f.depth.tolist() == [1, 1, 2, 1, 2]
    s = forest.stats(f)
    assert s.num_trees == 2
    assert s.root_hits == 3
    assert s.height == 2
    assert s.leaves_zero == 2
    assert s.tree_sizes == {-2: 2, 0: 3}
    assert s.block_chain.tolist() == [1, 1, 2, 1, 1]
    assert s.last_renewal == 5


def test_const_one_is_a_path():
    f = forest.from_steps([1] * 10)
    assert f.color.tolist() == [0] * 10
    assert f.depth.tolist() == list(range(1, 11))
    s = forest.stats(f)
    assert s.num_trees == 1 and s.height == 10 and s.leaves_zero == 1
    assert s.profile_zero.tolist() == [1] * 10


def test_const_two_alternates():
    f = forest.from_steps([2] * 8)
    # odd vertices chain under root -1, even under 0
    assert f.color.tolist() == [-1, 0, -1, 0, -1, 0, -1, 0]
    s = forest.stats(f)
    assert s.tree_sizes == {-1: 4, 0: 4}
    assert s.num_trees == 2


@pytest.mark.parametrize("bad", [[], [0, 1], [1, -3], [[1, 2]]])
def test_invalid_steps_rejected(bad):
    with pytest.raises(ValueError):
        forest.from_steps(bad)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=12),
                min_size=1, max_size=50))
def test_matches_reference(steps):
    f = forest.from_steps(steps)
    ref = _reference(steps)
    assert f.color.tolist() == ref["color"]
    assert f.depth.tolist() == ref["depth"]
    s = forest.stats(f)
    assert s.num_trees == ref["M"]
    assert s.root_hits == ref["O"]
    assert s.height == ref["H"]
    assert s.tree_sizes.get(0, 0) == ref["S0"]
    assert s.leaves_zero == ref["L0"]
    assert s.max_degree_positive == ref["maxdeg"]
    assert s.max_degree_root == ref["maxrootdeg"]
    assert s.block_chain.tolist() == ref["block"]
    assert s.last_renewal == ref["N"]
    assert sum(s.tree_sizes.values()) == f.n
    assert s.num_trees <= s.root_hits


def test_build_deterministic():
    d = make_dist("geom:0.5")
    f1 = forest.build(d, 500, 42)
    f2 = forest.build(d, 500, 42)
    f3 = forest.build(d, 500, 43)
    assert np.array_equal(f1.steps, f2.steps)
    assert not np.array_equal(f1.steps, f3.steps)
    assert forest.stats_json(f1) == forest.stats_json(f2)


def test_profile_helper():
    # roots hit at t=1 and t=3; vertices 2 and 4 sit at depth 2
    f = forest.from_steps([1, 1, 3, 1])
    assert forest.profile(f, 3).tolist() == [2, 2, 0]


@pytest.mark.parametrize("fmt,suffix", [("npz", ".npz"), ("csv", ".csv")])
def test_trace_roundtrip(tmp_path, fmt, suffix):
    d = make_dist("table:1/3,1/3,1/3")
    f = forest.build(d, 40, 7)
    path = str(tmp_path / ("trace" + suffix))
    forest.save_trace(f, path, format=fmt)
    g = forest.load_trace(path)
    assert np.array_equal(f.steps, g.steps)
    assert g.spec == f.spec and g.seed == 7 and g.n == 40
    assert forest.stats_json(f) == forest.stats_json(g)


def test_stats_json_stable(tmp_path):
    f = forest.from_steps([3, 2, 1, 6, 3], spec="demo", seed=0)
    a = forest.stats_json(f)
    b = forest.stats_json(f)
    assert a == b
    assert '"M": 2' in a
