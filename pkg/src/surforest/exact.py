"""Deterministic recursions, closed forms, and probability bounds.

Everything here is a pure function of an immutable StepDistribution, safe
to call concurrently.  Convolutions are plain O(n * support) loops; the
natural logarithm is used throughout.

Size conventions: r_t = P{vertex t has color 0}; the root-inclusive
expected size of the 0-tree is Rhat_t = 1 + sum_{s<=t} r_s and obeys
Rhat_t = 1 + sum_s q_s Rhat_{t-s} with Rhat_0 = 1; the root-exclusive
series is R_t = Rhat_t - 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .dist import StepDistribution

_ROOT_SUM_CAP = 50_000_000
_SERIES_TOL = 1e-12


def renewal_sequence(d: StepDistribution, n: int) -> np.ndarray:
    """r_0..r_n by the convolution recursion r_t = sum_s q_s r_{t-s}."""
    if n < 0:
        raise ValueError("n must be >= 0")
    r = np.empty(n + 1)
    r[0] = 1.0
    if n == 0:
        return r
    support = d.support_size
    qlen = min(n, support) if support is not None else n
    q = d.pmf_values(qlen)
    qrev = q[::-1].copy()
    for t in range(1, n + 1):
        k = min(t, qlen)
        # sum_{s=1..k} q_s r_{t-s}, with the kernel reversed for a
        # contiguous dot product
        r[t] = np.dot(r[t - k:t], qrev[qlen - k:])
    return r


def expected_size_series(d: StepDistribution, n: int) -> dict:
    """Root-inclusive Rhat_0..Rhat_n and root-exclusive R_0..R_n."""
    r = renewal_sequence(d, n)
    rhat = 1.0 + np.cumsum(np.concatenate(([0.0], r[1:])))
    return {"Rhat": rhat, "R_exclusive": rhat - 1.0}


def expected_size_rooted(d: StepDistribution, n: int, i: int) -> float:
    """E S_n^{(i)} = sum_{j=1..n} q_{j-i} Rhat_{n-j} for a root i <= 0."""
    if i > 0:
        raise ValueError("i must be a nonpositive root id")
    if n < 1:
        raise ValueError("n must be >= 1")
    rhat = expected_size_series(d, n)["Rhat"]
    q = d.pmf_values(n - i)
    # q_{j-i} for j = 1..n is q[(1-i)-1 : (n-i)-1 + 1]
    qs = q[-i:n - i]
    return float(np.dot(qs, rhat[n - 1::-1]))


def profile_expectation(d: StepDistribution, n: int, k: int) -> float:
    """E N_k(n) = P{X_1 + ... + X_k <= n}, by k-fold pmf convolution."""
    if k < 1 or n < k:
        raise ValueError("need k >= 1 and n >= k")
    q = d.pmf_values(n)
    conv = q.copy()          # after i convolutions, conv[j] = P{sum = j+i+1}
    for _ in range(k - 1):
        conv = np.convolve(conv, q)[:n]
    # sum = j + k must stay <= n
    return float(conv[:n - k + 1].sum())


@dataclass(frozen=True)
class LeafExpectation:
    value: float            # E L_n
    ratio: float            # E L_n / R_n (root-exclusive)
    bracket_low: float      # exp(-1/(1 - q_max))
    bracket_high: float     # exp(-1)


def expected_leaves(d: StepDistribution, n: int) -> LeafExpectation:
    """E L_n = sum_t r_t * prod_{s<=n-t} (1 - q_s)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    r = renewal_sequence(d, n)
    q = d.pmf_values(n)
    with np.errstate(divide="ignore"):
        logs = np.log1p(-q)
    # G[j] = prod_{s<=j}(1 - q_s); -inf logs (q_s = 1) give G = 0
    G = np.exp(np.concatenate(([0.0], np.cumsum(logs))))
    value = float(np.dot(r[1:], G[n - 1::-1]))
    R_n = float(r[1:].sum())
    return LeafExpectation(
        value=value,
        ratio=value / R_n if R_n > 0 else math.nan,
        bracket_low=math.exp(-1.0 / (1.0 - d.q_max)) if d.q_max < 1 else 0.0,
        bracket_high=math.exp(-1.0),
    )


def expected_leaves_series(d: StepDistribution, n: int) -> np.ndarray:
    """E L_1..E L_n (direct convolution of r with the no-child products)."""
    r = renewal_sequence(d, n)
    q = d.pmf_values(n)
    with np.errstate(divide="ignore"):
        G = np.exp(np.concatenate(([0.0], np.cumsum(np.log1p(-q)))))
    return np.convolve(r[1:], G[:n])[:n]


class TruncationError(RuntimeError):
    """The certified error budget was not reached within the iteration cap."""


@dataclass(frozen=True)
class TreeCountEstimate:
    EO: float               # E O_n = m_n, exact
    EM: float               # E M_n, truncated root sum
    EM_error: float         # certified bound on the dropped mass
    VarO: float             # sum p_t (1 - p_t)


def expected_trees(d: StepDistribution, n: int, epsilon: float = 1e-9,
                   max_roots: int = _ROOT_SUM_CAP) -> TreeCountEstimate:
    """E O_n exactly, and E M_n = sum_{i<=0} [1 - prod_t (1 - q_{t-i})].

    The root sum is truncated once the per-term bound p_{1+j} - p_{n+1+j}
    falls below epsilon/2 and the analytic bound on all remaining terms,
    sum_{u=J+2}^{J+n+1} p_u, is below epsilon/2.  Raises TruncationError
    if the budget cannot be certified within max_roots terms.
    """
    if n < 1 or epsilon <= 0:
        raise ValueError("need n >= 1 and epsilon > 0")
    p = d.tail_values(n)
    EO = float(p.sum())
    VarO = float(np.dot(p, 1.0 - p))

    support = d.support_size
    if support is not None:
        # terms vanish for j >= support; exact finite sum
        q = d.pmf_values(support)
        EM = 0.0
        for j in range(support):
            qs = q[j:min(j + n, support)]
            EM += 1.0 - float(np.prod(1.0 - qs))
        return TreeCountEstimate(EO=EO, EM=EM, EM_error=0.0, VarO=VarO)

    EM = 0.0
    j0 = 0
    block = max(4 * n, 4096)
    while j0 < max_roots:
        j1 = min(j0 + block, max_roots)
        q = d.pmf_values(j1 + n)
        lcum = np.concatenate(([0.0], np.cumsum(np.log1p(-q))))
        js = np.arange(j0, j1)
        EM += float(np.sum(-np.expm1(lcum[js + n] - lcum[js])))
        ptail = d.tail_values(j1 + n + 1)
        term_bound = ptail[j1] - ptail[j1 + n]
        rest_bound = float(ptail[j1 + 1:j1 + n + 1].sum())
        if term_bound < epsilon / 2 and rest_bound < epsilon / 2:
            return TreeCountEstimate(EO=EO, EM=EM, EM_error=rest_bound,
                                     VarO=VarO)
        j0 = j1
        block *= 2
    raise TruncationError(
        f"E M_n root sum not certified to {epsilon:g} within {max_roots} terms")


def expected_root_degree(d: StepDistribution, n: int, i: int) -> float:
    """E D_n^{(i)}: p_{1-i} - p_{n+1-i} for roots, 1 - p_{n-i+1} above."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if i <= 0:
        return d.tail(1 - i) - d.tail(n + 1 - i)
    if i >= n:
        return 0.0
    return 1.0 - d.tail(n - i + 1)


def outdegree_asymptotic_variance(d: StepDistribution) -> float:
    """Var of the limiting out-degree of a positive vertex: 1 - sum q_t^2."""
    support = d.support_size
    if support is not None:
        return 1.0 - float((d.pmf_values(support) ** 2).sum())
    total, nmax = 0.0, 1 << 16
    while True:
        q = d.pmf_values(nmax)
        total = float((q ** 2).sum())
        # q is decreasing, so the dropped mass is below q_nmax * p_{nmax+1}
        if q[-1] * d.tail(nmax + 1) < 1e-15:
            return 1.0 - total
        nmax *= 4


def survival_probability(d: StepDistribution) -> float:
    """P{the 0-tree is infinite}: 1/EZ for finite mean, else 0."""
    info = d.mean_info()
    return 1.0 / info.value if info.finite else 0.0


@dataclass(frozen=True)
class BlockSurvival:
    exact: float                 # P{B_n = n} = prod_{i<n} (1 - p_{i+1})
    lower_bound: float | None    # exp(-EZ/q_1); None when EZ infinite or q_1=0


def block_survival(d: StepDistribution, n: int) -> BlockSurvival:
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = float(np.prod(1.0 - d.tail_values(n)[1:])) if n > 1 else 1.0
    info = d.mean_info()
    lower = None
    if info.finite and d.q1 > 0:
        lower = math.exp(-info.value / d.q1)
    return BlockSurvival(exact=exact, lower_bound=lower)


@dataclass(frozen=True)
class HeightBound:
    mean_bound: float            # (2 + ln n) / p_n; inf when p_n = 0
    tail_bound: float            # min(1, sum_t exp(-k p_t))
    degenerate: bool             # p_n = 0, mean bound vacuous


def bound_height(d: StepDistribution, n: int, k: int) -> HeightBound:
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    p = d.tail_values(n)
    pn = float(p[-1])
    mean_bound = (2.0 + math.log(n)) / pn if pn > 0 else math.inf
    tail_bound = min(1.0, float(np.exp(-k * p).sum()))
    return HeightBound(mean_bound=mean_bound, tail_bound=tail_bound,
                       degenerate=pn == 0.0)


def _tail_power_sum(d: StepDistribution, x: float) -> float | None:
    """sum_t p_t^x to absolute error <= 1e-12, or None if divergent."""
    support = d.support_size
    if support is not None:
        return float((d.tail_values(support) ** x).sum())
    f = d.family
    if f == "geom":
        theta = d.params[0]
        if theta == 1.0:
            return 1.0
        ratio = (1.0 - theta) ** x
        return 1.0 / (1.0 - ratio)
    if f == "zipf":
        alpha = d.params[0]
        if alpha * x <= 1.0:
            return None
        T = 100_000
        p = d.tail_values(T)
        total = float((p ** x).sum())
        # beyond T, p_t = c(t) * t^-alpha with c(t) decreasing to
        # 1/(alpha*zeta(1+alpha)); bound the tail by the Hurwitz sum at
        # the current prefactor
        c = p[-1] * T ** alpha
        rest = c ** x * float(special.zeta(alpha * x, T + 1))
        if rest > 1e-12:
            return total + rest
        return total
    return None   # logheavy: p_t ~ 1/log t, the series diverges for all x


@dataclass(frozen=True)
class DegreeBounds:
    positive_tail: float         # n * exp(x - 1 - x ln x)
    root_tail: float | None      # (e/x)^x * sum_t p_t^x, None if divergent


def bound_degrees(d: StepDistribution, n: int, x: float) -> DegreeBounds:
    if x <= 0:
        raise ValueError("x must be > 0")
    positive = n * math.exp(x - 1.0 - x * math.log(x))
    s = _tail_power_sum(d, x)
    root = None if s is None else (math.e / x) ** x * s
    return DegreeBounds(positive_tail=positive, root_tail=root)


def bound_chernoff_M(EM: float, x: float) -> dict:
    """The two displayed tail bounds for M_n, reproduced verbatim."""
    if EM <= 0 or x <= 0:
        raise ValueError("need EM > 0 and x > 0")
    upper = (EM / (EM + x)) ** (EM + x) * math.exp(-x)
    lower = math.exp(-x * x / (2.0 * EM))
    return {"upper": upper, "lower": lower}


# -- series container and export -----------------------------------------

@dataclass
class ExactSeries:
    spec: str
    n: int
    r: np.ndarray        # r_0..r_n
    Rhat: np.ndarray     # Rhat_0..Rhat_n
    m: np.ndarray        # m_1..m_n  (also E O_n)
    EL: np.ndarray       # E L_1..E L_n

    @property
    def EO(self) -> np.ndarray:
        return self.m


def compute_series(d: StepDistribution, n: int) -> ExactSeries:
    r = renewal_sequence(d, n)
    rhat = 1.0 + np.cumsum(np.concatenate(([0.0], r[1:])))
    return ExactSeries(spec=d.spec, n=n, r=r, Rhat=rhat,
                       m=d.truncated_mean_values(n),
                       EL=expected_leaves_series(d, n))


def export_series_csv(series: ExactSeries, path: str) -> None:
    """CSV with header n,r,Rhat,m,EL plus a JSON metadata sidecar."""
    with open(path, "w") as fh:
        fh.write("n,r,Rhat,m,EL\n")
        for t in range(1, series.n + 1):
            fh.write(f"{t},{float(series.r[t])!r},{float(series.Rhat[t])!r},"
                     f"{float(series.m[t - 1])!r},{float(series.EL[t - 1])!r}\n")
    meta = {"spec": series.spec, "n": series.n,
            "columns": ["n", "r", "Rhat", "m", "EL"]}
    with open(path + ".meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def series_json(series: ExactSeries) -> str:
    payload = {
        "spec": series.spec,
        "n": series.n,
        "r": series.r[1:].tolist(),
        "Rhat": series.Rhat[1:].tolist(),
        "m": series.m.tolist(),
        "EL": series.EL.tolist(),
    }
    return json.dumps(payload, sort_keys=True)
