"""Brute-force ground truth by exhaustive enumeration of step sequences.

For a finite-support distribution and a tiny horizon, every sequence
(z_1..z_n) in support^n is enumerated with an odometer, the forest is built
through the regular construction path, and statistics are accumulated with
sequence weight prod_t q_{z_t}.  When the pmf is rational (fractional table
specs, const) all arithmetic is exact Fractions; otherwise compensated
floats.  This module is the independent reference the exact-formula and
Monte Carlo layers are checked against, so it shares no formulas with them.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from . import forest as forest_mod
from .dist import StepDistribution

DEFAULT_BUDGET = 10**7


class EnumerationBudgetError(ValueError):
    """support^n exceeds the sequence budget."""


@dataclass
class EnumerationResult:
    n: int
    support: int
    exact_arithmetic: bool
    r: list                      # r_1..r_n  (P{C_t = 0})
    tree_sizes: dict             # root id -> E S_n^{(i)}, window 1-support..0
    EM: object
    EO: object
    EL: object
    EH: object
    root_degrees: dict           # root id -> E D_n^{(i)}
    distributions: dict = field(default_factory=dict)  # stat -> {value: prob}

    @property
    def R_exclusive(self):
        """E size of the 0-tree, root excluded: sum of r_1..r_n."""
        return sum(self.r)

    @property
    def Rhat(self):
        return 1 + self.R_exclusive

    def to_json(self) -> str:
        def num(x):
            return [x.numerator, x.denominator] if isinstance(x, Fraction) \
                else float(x)
        payload = {
            "n": self.n,
            "support": self.support,
            "exact_arithmetic": self.exact_arithmetic,
            "r": [num(x) for x in self.r],
            "Rhat": num(self.Rhat),
            "tree_sizes": {str(k): num(v) for k, v in self.tree_sizes.items()},
            "EM": num(self.EM),
            "EO": num(self.EO),
            "EL": num(self.EL),
            "EH": num(self.EH),
            "root_degrees": {str(k): num(v)
                             for k, v in self.root_degrees.items()},
            "distributions": {
                stat: {str(v): num(p) for v, p in table.items()}
                for stat, table in self.distributions.items()},
        }
        return json.dumps(payload, sort_keys=True)


def _rational_pmf(d: StepDistribution) -> list[Fraction] | None:
    if d.family == "const":
        k = d.params[0]
        return [Fraction(0)] * (k - 1) + [Fraction(1)]
    return d.rational_pmf


def enumerate_exact(d: StepDistribution, n: int,
                    budget: int = DEFAULT_BUDGET) -> EnumerationResult:
    support = d.support_size
    if support is None:
        raise ValueError("enumeration requires a finite-support distribution")
    if n < 1:
        raise ValueError("n must be >= 1")
    if support**n > budget:
        raise EnumerationBudgetError(
            f"{support}**{n} sequences exceed the budget {budget}")

    pmf = _rational_pmf(d)
    exact = pmf is not None
    if not exact:
        pmf = [d.pmf(z) for z in range(1, support + 1)]
        s = sum(pmf)
        pmf = [p / s for p in pmf]  # tables may sum to 1 only within tolerance
    zero = Fraction(0) if exact else 0.0

    roots = range(1 - support, 1)
    acc_r = [zero] * n
    acc_sizes = {i: zero for i in roots}
    acc_deg = {i: zero for i in roots}
    acc_M = acc_O = acc_L = acc_H = zero
    total = zero
    dists = {stat: Counter() for stat in ("M", "O", "H", "L")}

    # odometer over support^n, lexicographic, skipping zero-probability digits
    live = [z for z in range(1, support + 1) if pmf[z - 1] > 0]
    digits = [0] * n
    while True:
        steps = [live[digit] for digit in digits]
        w = pmf[steps[0] - 1]
        for z in steps[1:]:
            w *= pmf[z - 1]
        total += w

        f = forest_mod.from_steps(steps)
        color = f.color
        parents = f.parents
        for t in range(n):
            if color[t] == 0:
                acc_r[t] += w
        seen = set()
        for t in range(n):
            c = int(color[t])
            acc_sizes[c] = acc_sizes.get(c, zero) + w
            seen.add(c)
        acc_M += w * len(seen)
        O = sum(1 for t in range(n) if parents[t] <= 0)
        acc_O += w * O
        for t in range(n):
            par = int(parents[t])
            if par <= 0:
                acc_deg[par] = acc_deg.get(par, zero) + w
        has_child = set(int(p) for p in parents if p >= 1)
        L = sum(1 for t in range(n)
                if color[t] == 0 and (t + 1) not in has_child)
        acc_L += w * L
        H = int(f.depth.max())
        acc_H += w * H
        for stat, val in (("M", len(seen)), ("O", O), ("H", H), ("L", L)):
            dists[stat][val] += w

        # advance the odometer
        pos = n - 1
        while pos >= 0 and digits[pos] == len(live) - 1:
            digits[pos] = 0
            pos -= 1
        if pos < 0:
            break
        digits[pos] += 1

    if exact:
        assert total == 1
    elif abs(total - 1.0) > 1e-12:
        raise RuntimeError(f"enumerated mass {total!r} != 1")

    return EnumerationResult(
        n=n, support=support, exact_arithmetic=exact,
        r=acc_r, tree_sizes=acc_sizes, EM=acc_M, EO=acc_O,
        EL=acc_L, EH=acc_H, root_degrees=acc_deg,
        distributions={stat: dict(table) for stat, table in dists.items()},
    )
