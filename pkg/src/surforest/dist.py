"""Step distributions: the law of the positive-integer jump Z.

Five families are supported, written in the spec-string grammar

    const:<k>          point mass at k
    table:<p1>,<p2>,.. finite support {1..len}, probabilities verbatim
    geom:<theta>       P{Z=n} = theta*(1-theta)**(n-1)
    zipf:<alpha>       P{Z=n} = n**-(1+alpha) / zeta(1+alpha)
    logheavy           P{Z=n} proportional to 1/((n+1)*log(n+1)**2)

Table probabilities may be decimals or fractions ("1/3"); fractional tables
keep an exact rational pmf for the enumeration oracle.

Sampling is inverse-CDF.  Unbounded families use a cumulative table that
grows by doubling; mass beyond the table is resolved by bisecting the exact
analytic tail, never by truncating and renormalizing.  Sampled values are
saturated at STEP_CAP = 2**62 so they fit a signed 64-bit array; for every
supported family the probability that two saturated draws would have mapped
to the same root is zero to within 1e-18, so forest statistics are
unaffected.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special

from .rng import RandomStream

STEP_CAP = 1 << 62
_TABLE_SUM_TOL = 1e-9
_SAMPLE_TABLE_CAP = 1 << 24
_LOGHEAVY_TABLE = 1 << 20

FAMILIES = ("const", "table", "geom", "zipf", "logheavy")


class DistributionSpecError(ValueError):
    """Raised for malformed or out-of-range distribution specs."""


@dataclass(frozen=True)
class MeanInfo:
    finite: bool
    value: float | None
    second_moment_finite: bool


def _logheavy_raw(n):
    """Unnormalized pmf 1/((n+1) * log(n+1)**2)."""
    m = np.asarray(n, dtype=float) + 1.0
    return 1.0 / (m * np.log(m) ** 2)


def _logheavy_raw_tail(n: float) -> float:
    """Sum_{t>=n} of the unnormalized logheavy pmf, by Euler-Maclaurin.

    integral_n^inf dt/((t+1)log^2(t+1)) = 1/log(n+1); two correction terms
    put the absolute error below 1e-15 for n >= 1000.
    """
    m = n + 1.0
    lg = math.log(m)
    f = 1.0 / (m * lg * lg)
    fprime = -(1.0 + 2.0 / lg) / (m * m * lg * lg)
    return 1.0 / lg + f / 2.0 - fprime / 12.0


class StepDistribution:
    """Immutable law of Z with exact pmf/tail/moment access and a sampler.

    The only mutable state is the lazily grown sampling table, which is
    republished atomically under a lock and therefore safe for concurrent
    readers.
    """

    def __init__(self, family: str, params: tuple,
                 rational_pmf: list[Fraction] | None = None):
        if family not in FAMILIES:
            raise DistributionSpecError(f"unknown family {family!r}")
        self.family = family
        self.params = params
        self.rational_pmf = rational_pmf
        self._lock = threading.Lock()
        self._cum = None  # cumulative CDF table for zipf/logheavy sampling
        self._spec_string = None  # canonical user spec, set by make_dist

        if family == "const":
            (k,) = params
            if k < 1:
                raise DistributionSpecError("const:k requires k >= 1")
        elif family == "table":
            probs = np.asarray(params[0], dtype=float)
            if probs.size == 0 or np.any(probs < 0):
                raise DistributionSpecError("table probabilities must be >= 0")
            if abs(probs.sum() - 1.0) > _TABLE_SUM_TOL:
                raise DistributionSpecError(
                    f"table probabilities sum to {probs.sum():.12g}, not 1")
            self._probs = probs
            self._table_cum = np.cumsum(probs)
        elif family == "geom":
            (theta,) = params
            if not 0.0 < theta <= 1.0:
                raise DistributionSpecError("geom:theta requires theta in (0,1]")
        elif family == "zipf":
            (alpha,) = params
            if alpha <= 0:
                raise DistributionSpecError("zipf:alpha requires alpha > 0")
            self._zipf_s = 1.0 + alpha
            self._zipf_norm = float(special.zeta(self._zipf_s))
        elif family == "logheavy":
            if params:
                raise DistributionSpecError("logheavy takes no parameters")
            raw = _logheavy_raw(np.arange(1, _LOGHEAVY_TABLE + 1))
            self._lh_cum_raw = np.cumsum(raw)
            self._lh_norm = float(self._lh_cum_raw[-1]
                                  + _logheavy_raw_tail(_LOGHEAVY_TABLE + 1))

    # -- pmf / tail / truncated mean -------------------------------------

    def pmf(self, n: int) -> float:
        """q_n = P{Z = n}."""
        if n < 1:
            raise ValueError("pmf domain is n >= 1")
        f = self.family
        if f == "const":
            return 1.0 if n == self.params[0] else 0.0
        if f == "table":
            return float(self._probs[n - 1]) if n <= self._probs.size else 0.0
        if f == "geom":
            theta = self.params[0]
            return theta * (1.0 - theta) ** (n - 1)
        if f == "zipf":
            return n ** (-self._zipf_s) / self._zipf_norm
        return float(_logheavy_raw(n)) / self._lh_norm

    def pmf_values(self, nmax: int) -> np.ndarray:
        """Vector (q_1, ..., q_nmax)."""
        f = self.family
        if f == "const":
            q = np.zeros(nmax)
            if self.params[0] <= nmax:
                q[self.params[0] - 1] = 1.0
            return q
        if f == "table":
            q = np.zeros(nmax)
            m = min(nmax, self._probs.size)
            q[:m] = self._probs[:m]
            return q
        if f == "geom":
            theta = self.params[0]
            if theta == 1.0:
                q = np.zeros(nmax)
                q[0] = 1.0
                return q
            return theta * np.exp(np.arange(nmax) * math.log1p(-theta))
        if f == "zipf":
            return np.arange(1, nmax + 1, dtype=float) ** (-self._zipf_s) \
                / self._zipf_norm
        return _logheavy_raw(np.arange(1, nmax + 1)) / self._lh_norm

    def tail(self, n: int) -> float:
        """p_n = P{Z >= n}, in closed form per family."""
        if n < 1:
            raise ValueError("tail domain is n >= 1")
        f = self.family
        if f == "const":
            return 1.0 if n <= self.params[0] else 0.0
        if f == "table":
            if n > self._probs.size:
                return 0.0
            return float(1.0 - self._table_cum[n - 2]) if n > 1 else 1.0
        if f == "geom":
            theta = self.params[0]
            if theta == 1.0:
                return 1.0 if n == 1 else 0.0
            return math.exp((n - 1) * math.log1p(-theta))
        if f == "zipf":
            return float(special.zeta(self._zipf_s, n)) / self._zipf_norm
        if n <= _LOGHEAVY_TABLE:
            prev = self._lh_cum_raw[n - 2] if n > 1 else 0.0
            return float(self._lh_norm - prev) / self._lh_norm
        return _logheavy_raw_tail(n) / self._lh_norm

    def tail_values(self, nmax: int) -> np.ndarray:
        """Vector (p_1, ..., p_nmax)."""
        f = self.family
        if f == "geom":
            theta = self.params[0]
            if theta == 1.0:
                p = np.zeros(nmax)
                p[0] = 1.0
                return p
            return np.exp(np.arange(nmax) * math.log1p(-theta))
        if f == "zipf":
            return special.zeta(self._zipf_s,
                                np.arange(1, nmax + 1, dtype=float)) \
                / self._zipf_norm
        if f == "logheavy":
            p = np.empty(nmax)
            m = min(nmax, _LOGHEAVY_TABLE)
            p[0] = 1.0
            if m > 1:
                p[1:m] = (self._lh_norm - self._lh_cum_raw[:m - 1]) \
                    / self._lh_norm
            if nmax > _LOGHEAVY_TABLE:
                idx = np.arange(_LOGHEAVY_TABLE + 1, nmax + 1, dtype=float)
                mm = idx + 1.0
                lg = np.log(mm)
                fv = 1.0 / (mm * lg * lg)
                fp = -(1.0 + 2.0 / lg) / (mm * mm * lg * lg)
                p[_LOGHEAVY_TABLE:] = (1.0 / lg + fv / 2 - fp / 12) \
                    / self._lh_norm
            return p
        # finite support: cumulative complement
        q = self.pmf_values(nmax)
        p = np.empty(nmax)
        p[0] = 1.0
        if nmax > 1:
            p[1:] = 1.0 - np.cumsum(q[:-1])
            np.clip(p, 0.0, 1.0, out=p)
        return p

    def truncated_mean(self, n: int) -> float:
        """m_n = E[min(Z, n)] = sum_{t<=n} p_t."""
        f = self.family
        if f == "const":
            return float(min(n, self.params[0]))
        if f == "geom":
            theta = self.params[0]
            if theta == 1.0:
                return 1.0
            return (1.0 - (1.0 - theta) ** n) / theta
        return float(self.truncated_mean_values(n)[-1])

    def truncated_mean_values(self, nmax: int) -> np.ndarray:
        """Vector (m_1, ..., m_nmax)."""
        return np.cumsum(self.tail_values(nmax))

    # -- classification ---------------------------------------------------

    def mean_info(self) -> MeanInfo:
        f = self.family
        if f == "const":
            return MeanInfo(True, float(self.params[0]), True)
        if f == "table":
            ns = np.arange(1, self._probs.size + 1)
            return MeanInfo(True, float(np.dot(ns, self._probs)), True)
        if f == "geom":
            return MeanInfo(True, 1.0 / self.params[0], True)
        if f == "zipf":
            alpha = self.params[0]
            if alpha <= 1.0:
                return MeanInfo(False, None, False)
            value = float(special.zeta(alpha)) / self._zipf_norm
            return MeanInfo(True, value, alpha > 2.0)
        return MeanInfo(False, None, False)

    def half_factorial_moment(self) -> float | None:
        """S-hat = sum_{i>=1} i*p_{i+1} = E[Z(Z-1)]/2, None when infinite."""
        f = self.family
        if f == "const":
            k = self.params[0]
            return k * (k - 1) / 2.0
        if f == "table":
            ns = np.arange(1, self._probs.size + 1, dtype=float)
            return float(np.dot(ns * (ns - 1) / 2.0, self._probs))
        if f == "geom":
            theta = self.params[0]
            ez = 1.0 / theta
            ez2 = (2.0 - theta) / theta**2
            return (ez2 - ez) / 2.0
        if f == "zipf":
            alpha = self.params[0]
            if alpha <= 2.0:
                return None
            ez = float(special.zeta(alpha)) / self._zipf_norm
            ez2 = float(special.zeta(alpha - 1.0)) / self._zipf_norm
            return (ez2 - ez) / 2.0
        return None

    @property
    def support_size(self) -> int | None:
        """Largest support point for bounded families, else None."""
        if self.family == "const":
            return int(self.params[0])
        if self.family == "table":
            return int(self._probs.size)
        return None

    @property
    def q1(self) -> float:
        return self.pmf(1)

    @property
    def q_max(self) -> float:
        """sup_n q_n (the pmf of every unbounded family is decreasing)."""
        if self.family == "table":
            return float(self._probs.max())
        return self.pmf(1) if self.family != "const" else 1.0

    def period(self) -> int:
        """gcd of the support; >1 flags a periodic law (e.g. const:2)."""
        if self.family == "const":
            return int(self.params[0])
        if self.family == "table":
            pts = [i + 1 for i, p in enumerate(self._probs) if p > 0]
            return math.gcd(*pts) if pts else 1
        return 1

    # -- sampling ---------------------------------------------------------

    def quantile_thresholds(self, nmax: int) -> np.ndarray:
        """Thresholds c_t = P{Z <= t} for t = 0..nmax-1.

        A uniform u maps to a value >= t exactly when u >= c_{t-1}, matching
        the inverse-CDF sampler.  Used by fast paths that only need the
        indicator {Z_t >= t}.
        """
        out = np.empty(nmax)
        out[0] = 0.0
        out[1:] = 1.0 - self.tail_values(nmax)[1:]
        return out

    def sample(self, stream: RandomStream, size: int | None = None):
        """Draw from the stream; one uniform is consumed per value."""
        u = stream.next_uniform(size if size is not None else 1)
        z = self.inverse_cdf(u)
        return int(z[0]) if size is None else z

    def inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in [0,1) to int64 step values."""
        f = self.family
        if f == "const":
            return np.full(u.shape, self.params[0], dtype=np.int64)
        if f == "table":
            idx = np.searchsorted(self._table_cum, u, side="right")
            return (np.minimum(idx, self._probs.size - 1) + 1).astype(np.int64)
        if f == "geom":
            theta = self.params[0]
            if theta == 1.0:
                return np.ones(u.shape, dtype=np.int64)
            z = np.floor(np.log1p(-u) / math.log1p(-theta)) + 1.0
            z = np.clip(z, 1.0, float(STEP_CAP))
            return z.astype(np.int64)
        return self._inverse_cdf_tabled(u)

    def _inverse_cdf_tabled(self, u: np.ndarray) -> np.ndarray:
        cum = self._ensure_table(float(u.max(initial=0.0)))
        idx = np.searchsorted(cum, u, side="right")
        z = (idx + 1).astype(np.int64)
        over = idx >= cum.size
        if np.any(over):
            z[over] = [self._tail_quantile(x) for x in np.atleast_1d(u[over])]
        return z

    def _ensure_table(self, umax: float) -> np.ndarray:
        cum = self._cum
        if cum is not None and (umax < cum[-1] or cum.size >= _SAMPLE_TABLE_CAP):
            return cum
        with self._lock:
            cum = self._cum
            size = cum.size if cum is not None else 1024
            while True:
                if cum is not None and (umax < cum[-1]
                                        or size >= _SAMPLE_TABLE_CAP):
                    return cum
                size = min(max(size * 2, 1024), _SAMPLE_TABLE_CAP)
                cum = np.cumsum(self.pmf_values(size))
                self._cum = cum

    def _tail_quantile(self, u: float) -> int:
        """Smallest z with P{Z <= z} >= u, past the cached table."""
        lo = self._cum.size  # F(lo) < u by construction
        hi = lo
        while hi < STEP_CAP:
            hi = min(hi * 2, STEP_CAP)
            if 1.0 - self.tail(hi + 1) >= u:
                break
        else:
            return STEP_CAP
        if hi == STEP_CAP and 1.0 - self.tail(hi + 1) < u:
            return STEP_CAP
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if 1.0 - self.tail(mid + 1) >= u:
                hi = mid
            else:
                lo = mid
        return hi

    # -- misc -------------------------------------------------------------

    @property
    def spec(self) -> str:
        if self._spec_string is not None:
            return self._spec_string
        f = self.family
        if f == "const":
            return f"const:{self.params[0]}"
        if f == "table":
            return "table:" + ",".join(repr(float(p)) for p in self._probs)
        if f == "geom":
            return f"geom:{self.params[0]!r}"
        if f == "zipf":
            return f"zipf:{self.params[0]!r}"
        return "logheavy"

    def __repr__(self):
        return f"StepDistribution({self.spec!r})"


def _parse_prob(token: str) -> tuple[float, Fraction | None]:
    token = token.strip()
    try:
        if "/" in token:
            frac = Fraction(token)
            return float(frac), frac
        value = float(token)
        return value, Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise DistributionSpecError(f"bad probability {token!r}") from exc


def make_dist(spec: str) -> StepDistribution:
    """Parse a distribution-spec string (see module docstring grammar)."""
    spec = spec.strip()
    d = _make_dist_inner(spec)
    d._spec_string = spec
    return d


def _make_dist_inner(spec: str) -> StepDistribution:
    if spec == "logheavy":
        return StepDistribution("logheavy", ())
    if ":" not in spec:
        raise DistributionSpecError(f"malformed spec {spec!r}")
    family, _, arg = spec.partition(":")
    if family == "const":
        try:
            k = int(arg)
        except ValueError as exc:
            raise DistributionSpecError(f"const:k needs an integer, got {arg!r}") from exc
        return StepDistribution("const", (k,))
    if family == "table":
        pairs = [_parse_prob(tok) for tok in arg.split(",") if tok.strip() != ""]
        if not pairs:
            raise DistributionSpecError("table: needs at least one probability")
        floats = [p for p, _ in pairs]
        fracs = [f for _, f in pairs]
        rational = None
        if all(f is not None for f in fracs) and sum(fracs) == 1:
            rational = fracs
        return StepDistribution("table", (tuple(floats),), rational_pmf=rational)
    if family in ("geom", "zipf"):
        try:
            value = float(Fraction(arg)) if "/" in arg else float(arg)
        except (ValueError, ZeroDivisionError) as exc:
            raise DistributionSpecError(f"{family}: bad parameter {arg!r}") from exc
        return StepDistribution(family, (value,))
    raise DistributionSpecError(f"unknown family {family!r}")
