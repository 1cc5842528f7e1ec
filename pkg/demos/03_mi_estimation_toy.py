"""Estimating mutual information from samples alone, checked against the
closed-form oracle on the sign channel y = x + sigma * noise.

Run:  python demos/03_mi_estimation_toy.py   (~1 minute)
"""

import math

import numpy as np

from gib.case_study import CaseStudyConfig, ToyPairSampler, mi_oracle, run_case_study

print("== the oracle knows the densities ==")
for sigma2 in (1e-6, 0.25, 1.0, 4.0, 1e6):
    est = mi_oracle(ToyPairSampler(sigma2), n=20000, rng=np.random.default_rng(1))
    print(f"sigma2={sigma2:<8g} oracle MI = {est.value:.4f} nats "
          f"(+- {est.standard_error:.4f})")
print(f"upper bound is ln 2 = {math.log(2):.4f} (X carries one fair bit)")

print("\n== the learned estimator only sees samples ==")
for sigma2 in (1.0, 0.25):
    config = CaseStudyConfig(epochs=2, inner_steps=300, samples_per_epoch=20000,
                             sigma2_fixed=sigma2, seed=5)
    last = run_case_study(config)[-1]
    print(f"sigma2={sigma2}: estimator {last.mi_estimate:.4f} vs oracle {last.oracle_mi:.4f}")

print("\nthe estimator approaches the oracle from below: it maximizes a lower")
print("bound, so a converged value close to the oracle means it has found")
print("nearly all the dependence there is to find.")
