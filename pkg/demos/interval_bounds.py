"""Bound the risk of an interior hypothesis over an interval without a grid search.

Run with ``python3 demos/interval_bounds.py``.
"""

import numpy as np

from mstage import ModelSpec, TestShape, build_plan, interval_risk_bounds, oc_exact

shape = TestShape.m_hypotheses([0.3, 0.7], [0.2, 0.6], [0.4, 0.8], [0.1] * 3)
plan = build_plan(ModelSpec.bernoulli(), shape, zeta=1.0, stages=3)
print(f"three hypotheses, stage sizes {plan.sizes}")

a, b = plan.hyp.indiff_hi[0], plan.hyp.indiff_lo[1]
print(f"\nrisk of rejecting H1 for p in [{a}, {b}]")
for lo_end, hi_end in [(a, b), (a, 0.5), (0.5, b)]:
    lo, hi = interval_risk_bounds(plan, 1, lo_end, hi_end)
    grid = [oc_exact(plan, float(t)).reject_prob(1) for t in np.linspace(lo_end, hi_end, 41)]
    print(f"  [{lo_end:.2f}, {hi_end:.2f}]  bounds [{lo:.5f}, {hi:.5f}]  grid range [{min(grid):.5f}, {max(grid):.5f}]")
