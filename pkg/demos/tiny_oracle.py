"""Cross-check the three computation layers on a tiny instance.

For small horizons and finite support, every step sequence can be
enumerated with exact rational weights.  The enumeration, the dynamic-
programming recursions, and a Monte Carlo run must all tell the same
story.
"""

import math

from surforest import exact, harness, oracle
from surforest.dist import make_dist

d = make_dist("table:1/3,1/3,1/3")
n = 5

res = oracle.enumerate_exact(d, n)
print(f"{d.spec}, n = {n}: {d.support_size ** n} sequences, "
      f"exact arithmetic = {res.exact_arithmetic}")
print(f"  E M  = {res.EM} = {float(res.EM):.6f}")
print(f"  E O  = {res.EO} = {float(res.EO):.6f}")
print(f"  E L  = {res.EL} = {float(res.EL):.6f}")
print(f"  Rhat = {res.Rhat} = {float(res.Rhat):.6f}")

est = exact.expected_trees(d, n)
rhat = exact.expected_size_series(d, n)["Rhat"][n]
print("\nrecursion layer:")
print(f"  E M = {est.EM:.6f}, E O = {est.EO:.6f}, Rhat = {rhat:.6f}")
assert abs(float(res.EM) - est.EM) < 1e-12
assert abs(float(res.Rhat) - rhat) < 1e-12

reps = 200_000
s = harness.collect_samples(d, n, reps, base_seed=1729)
for name, target in (("M", res.EM), ("O", res.EO), ("L0", res.EL)):
    x = s[name].astype(float)
    se = x.std(ddof=1) / math.sqrt(reps)
    print(f"  MC {name}: {x.mean():.6f} vs {float(target):.6f} "
          f"(z = {(x.mean() - float(target)) / se:+.2f})")
