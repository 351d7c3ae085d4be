"""Tune a two-hypothesis Bernoulli plan and tabulate its OC curve.

Run with ``python3 demos/tune_bernoulli.py``.
"""

import numpy as np

from mstage import ModelSpec, TestShape, oc_exact, tune

model = ModelSpec.bernoulli()
shape = TestShape.one_sided(0.4, 0.6, 0.05, 0.05)

res = tune(model, shape)
plan = res.plan
print(f"zeta* = {res.zeta_star:.6g}")
print(f"stage sizes: {plan.sizes}")
for ell, (f, g) in enumerate(zip(plan.lower, plan.upper), start=1):
    print(f"  stage {ell}: accept H0 if estimate <= {f[0]:.4f}, accept H1 if estimate > {g[0]:.4f}")

print("\n theta   P(accept H0)  P(accept H1)     ASN")
for theta in np.linspace(0.2, 0.8, 13):
    r = oc_exact(plan, float(theta))
    print(f"{theta:6.3f}  {r.accept_prob[0]:12.6f}  {r.accept_prob[1]:12.6f}  {r.asn:7.2f}")
