"""Run the theorem-check suite on a light and a heavy step law.

Each check compares Monte Carlo estimates with exact recursions or proves
an inequality at finite size; asymptotic claims are tested through labeled
finite-size proxies.  Checks that do not apply to a distribution class
(e.g. the CLT for O_n needs an infinite mean) report not-applicable.
"""

from surforest import harness
from surforest.dist import make_dist

for spec, sizes in (("geom:0.5", [1000, 5000]),
                    ("zipf:0.5", [2000, 10000])):
    d = make_dist(spec)
    report = harness.verify_suite(d, sizes, seed=7, reps=300)
    print(report.to_table())
    print("overall:", "FAIL" if report.failed else "ok", "\n")
