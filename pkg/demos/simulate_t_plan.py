"""Evaluate a normalized-mean plan (unknown variance) by simulation and run it on data.

Run with ``python3 demos/simulate_t_plan.py``.
"""

import numpy as np

from mstage import ModelSpec, TestShape, build_plan, run_plan, simulate_plan

model = ModelSpec.normal_mean_over_std()
# zeta = 1 is untuned, so the nominal 0.05 risks are not guaranteed here; tune() would shrink it.
plan = build_plan(model, TestShape.one_sided(0.0, 0.5, 0.05, 0.05), zeta=1.0)
print(f"stage sizes: {plan.sizes}")

for theta in (-0.25, 0.0, 0.25, 0.5, 0.75):
    rep = simulate_plan(plan, theta, 50_000, seed=7)
    print(f"theta={theta:+.2f}  P(accept H1)={rep.accept_freq[1]:.4f} (se {rep.se[1]:.4f})  ASN={rep.asn_hat:.1f}")

rng = np.random.default_rng(3)
data = rng.normal(0.6, 1.0, size=int(plan.sizes[-1]))
out = run_plan(plan, data)
print(f"\none data set: accepted H{out.accepted} at stage {out.stage} after {out.samples_used} samples")
