"""Closed forms and recursions against hand-derived and brute-force values."""

import math

import numpy as np
import pytest

from surforest import exact
from surforest.dist import make_dist

THIRDS = make_dist("table:1/3,1/3,1/3")
GEOM = make_dist("geom:0.5")
ALL = [THIRDS, GEOM, make_dist("const:3"), make_dist("zipf:0.5"),
       make_dist("zipf:1.5"), make_dist("logheavy")]


def test_renewal_anchors():
    r = exact.renewal_sequence(THIRDS, 3)
    # by hand: r1 = 1/3, r2 = 1/9 + 1/3 = 4/9, r3 = 16/27
    assert np.allclose(r, [1, 1 / 3, 4 / 9, 16 / 27], rtol=0, atol=1e-15)


def test_renewal_flat_for_geometric():
    # memorylessness keeps P{C_n = 0} at exactly 1/2
    r = exact.renewal_sequence(GEOM, 10_000)
    assert np.max(np.abs(r[1:] - 0.5)) <= 1e-12


def test_renewal_limit_one_over_mean():
    r = exact.renewal_sequence(THIRDS, 5000)
    assert abs(r[-1] - 0.5) < 1e-6  # EZ = 2


def test_renewal_recursion_residual():
    # independently re-verify r_t = sum_s q_s r_{t-s} with a naive loop
    for d in (THIRDS, make_dist("zipf:1.5")):
        r = exact.renewal_sequence(d, 300)
        q = [d.pmf(s) for s in range(1, 301)]
        for t in range(1, 301):
            naive = sum(q[s - 1] * r[t - s] for s in range(1, t + 1))
            assert abs(r[t] - naive) < 1e-12


def test_size_series_consistency():
    for d in ALL:
        out = exact.expected_size_series(d, 1000)
        r = exact.renewal_sequence(d, 1000)
        # r_0 = 1, so Rhat_t = 1 + sum_{1<=s<=t} r_s is just the cumsum
        assert np.allclose(out["Rhat"], np.cumsum(r), rtol=0, atol=1e-10)
        assert np.allclose(out["R_exclusive"], out["Rhat"] - 1.0,
                           rtol=0, atol=0)
        # Rhat also satisfies its own renewal identity
        q = d.pmf_values(1000)
        for t in (1, 7, 100, 1000):
            rhs = 1.0 + float(np.dot(q[:t], out["Rhat"][t - 1::-1]))
            assert abs(out["Rhat"][t] - rhs) < 1e-10


def test_size_anchor_64_over_27():
    assert abs(exact.expected_size_series(THIRDS, 3)["Rhat"][3] - 64 / 27) < 1e-15


def test_size_subadditivity():
    # Rhat_{a+b} <= Rhat_a + Rhat_b
    for d in (THIRDS, GEOM, make_dist("zipf:0.5")):
        rhat = exact.expected_size_series(d, 600)["Rhat"]
        for a in range(0, 301, 37):
            for b in range(0, 301, 41):
                assert rhat[a + b] <= rhat[a] + rhat[b] + 1e-12


def test_rooted_size():
    # E S_2^{(-1)} for the uniform-thirds table, by hand 7/9
    assert abs(exact.expected_size_rooted(THIRDS, 2, -1) - 7 / 9) < 1e-15
    # any single root holds at most the whole expected 0-tree plus root
    rhat = exact.expected_size_series(GEOM, 50)["Rhat"][50]
    for i in (0, -1, -5):
        assert exact.expected_size_rooted(GEOM, 50, i) <= rhat
    with pytest.raises(ValueError):
        exact.expected_size_rooted(GEOM, 10, 1)


def test_rooted_size_sums_to_n():
    # summing E S_n^{(i)} over all roots must give n exactly
    d = THIRDS
    n = 12
    total = sum(exact.expected_size_rooted(d, n, i) for i in range(-2, 1))
    assert abs(total - n) < 1e-12


def test_profile_expectation():
    # k = 1 is P{Z <= n}
    assert abs(exact.profile_expectation(GEOM, 10, 1) - (1 - 0.5**10)) < 1e-15
    # const:1 gives exactly one vertex per level
    one = make_dist("const:1")
    for k in range(1, 6):
        assert exact.profile_expectation(one, 10, k) == 1.0
    # chain rule: P{Z1+Z2 <= 4} for uniform thirds = 6/9
    assert abs(exact.profile_expectation(THIRDS, 4, 2) - 6 / 9) < 1e-15
    with pytest.raises(ValueError):
        exact.profile_expectation(GEOM, 3, 4)


def test_expected_trees_uniform_thirds():
    est = exact.expected_trees(THIRDS, 2)
    assert abs(est.EO - 5 / 3) < 1e-12
    assert abs(est.EM - 13 / 9) < 1e-12
    assert est.EM_error == 0.0
    # Var O_2 = sum p_t (1 - p_t) = 0 + (2/3)(1/3)
    assert abs(est.VarO - 2 / 9) < 1e-12


def test_expected_trees_infinite_support():
    est = exact.expected_trees(GEOM, 100, epsilon=1e-10)
    # brute force over a generous root window
    q = [0.5**t for t in range(1, 400)]
    brute = 0.0
    for j in range(250):
        prod = 1.0
        for t in range(1, 101):
            prod *= 1.0 - q[j + t - 1]
        brute += 1.0 - prod
    assert abs(est.EM - brute) < 1e-9
    assert est.EM <= est.EO + 1e-12
    assert est.EM_error <= 1e-10


def test_expected_trees_truncation_error():
    with pytest.raises(exact.TruncationError):
        exact.expected_trees(make_dist("logheavy"), 10, epsilon=1e-9,
                             max_roots=10_000)


def test_expected_leaves():
    series = exact.expected_leaves_series(THIRDS, 2)
    assert abs(series[-1] - 2 / 3) < 1e-14
    le = exact.expected_leaves(THIRDS, 2)
    assert abs(le.value - 2 / 3) < 1e-14
    # brute check of the convolution at n = 6 for geometric steps
    r = exact.renewal_sequence(GEOM, 6)
    G = [1.0]
    for s in range(1, 6):
        G.append(G[-1] * (1 - 0.5**s))
    brute = sum(r[t] * G[6 - t] for t in range(1, 7))
    assert abs(exact.expected_leaves(GEOM, 6).value - brute) < 1e-14


def test_leaf_bracket_endpoints():
    z = make_dist("zipf:0.5")
    le = exact.expected_leaves(z, 100)
    assert abs(le.bracket_high - math.exp(-1)) < 1e-15
    assert abs(le.bracket_low - math.exp(-1 / (1 - z.pmf(1)))) < 1e-15
    assert le.bracket_low < le.bracket_high


def test_degree_formulas():
    # E D_n^{(i)} = p_{1-i} - p_{n+1-i} for roots, 1 - p_{n-i+1} otherwise
    d = GEOM
    n = 10
    assert abs(exact.expected_root_degree(d, n, 0) - (1 - 0.5**10)) < 1e-15
    assert abs(exact.expected_root_degree(d, n, -2)
               - (0.5**2 - 0.5**12)) < 1e-15
    assert abs(exact.expected_root_degree(d, n, 3) - (1 - 0.5**7)) < 1e-15
    assert exact.expected_root_degree(d, n, n) == 0.0
    # degrees over every vertex sum to n (each vertex has one parent)
    total = sum(exact.expected_root_degree(d, n, i) for i in range(-200, n))
    assert abs(total - n) < 1e-12


def test_survival_probability():
    assert exact.survival_probability(GEOM) == 0.5
    assert exact.survival_probability(make_dist("const:4")) == 0.25
    assert exact.survival_probability(make_dist("zipf:0.5")) == 0.0
    assert exact.survival_probability(make_dist("logheavy")) == 0.0


def test_block_survival():
    bs = exact.block_survival(GEOM, 5)
    # prod_{i=1..4} (1 - 2^-i)
    expect = (1 - 0.5) * (1 - 0.25) * (1 - 0.125) * (1 - 0.0625)
    assert abs(bs.exact - expect) < 1e-15
    assert abs(bs.exact - 0.307617) < 1e-6
    assert bs.lower_bound == pytest.approx(math.exp(-4.0))
    assert bs.exact >= bs.lower_bound
    assert exact.block_survival(make_dist("zipf:0.5"), 5).lower_bound is None


def test_height_bound():
    hb = exact.bound_height(GEOM, 100, k=50)
    assert hb.mean_bound == pytest.approx((2 + math.log(100)) / 0.5**99)
    assert not hb.degenerate
    assert 0.0 <= hb.tail_bound <= 1.0


def test_degree_bounds():
    db = exact.bound_degrees(GEOM, 10, 5.0)
    assert db.positive_tail == pytest.approx(10 * math.exp(4 - 5 * math.log(5)))
    # sum_t p_t^3 = sum 8^-(t-1) = 8/7
    db3 = exact.bound_degrees(GEOM, 10, 3.0)
    assert db3.root_tail == pytest.approx((math.e / 3) ** 3 * 8 / 7)
    assert exact.bound_degrees(make_dist("logheavy"), 10, 3.0).root_tail is None
    # zipf: divergent when alpha*x <= 1
    assert exact.bound_degrees(make_dist("zipf:0.5"), 10, 1.5).root_tail is None
    assert exact.bound_degrees(make_dist("zipf:0.5"), 10, 4.0).root_tail is not None


def test_chernoff_forms():
    out = exact.bound_chernoff_M(4.0, 2.0)
    assert out["upper"] == pytest.approx((4 / 6) ** 6 * math.exp(-2))
    assert out["lower"] == pytest.approx(math.exp(-0.5))
    with pytest.raises(ValueError):
        exact.bound_chernoff_M(0.0, 1.0)


def test_series_export(tmp_path):
    series = exact.compute_series(GEOM, 5)
    path = str(tmp_path / "series.csv")
    exact.export_series_csv(series, path)
    rows = open(path).read().strip().splitlines()
    assert rows[0] == "n,r,Rhat,m,EL"
    assert len(rows) == 6
    assert rows[1].startswith("1,0.5,1.5,1.0,")
    meta = open(path + ".meta.json").read()
    assert '"spec": "geom:0.5"' in meta
    assert exact.series_json(series) == exact.series_json(series)
