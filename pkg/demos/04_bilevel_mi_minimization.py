"""The bi-level loop in its purest form: an inner loop trains the estimator,
an outer step turns the channel's noise dial to push the (estimated) mutual
information down, and the oracle confirms the true MI falls in lockstep.

Run:  python demos/04_bilevel_mi_minimization.py   (~1 minute)
"""

from gib.case_study import CaseStudyConfig, run_case_study
from gib.metrics import spearman

config = CaseStudyConfig(epochs=15, seed=7)
print(f"starting at sigma2={config.sigma2_init}, {config.inner_steps} inner steps/epoch\n")
trace = run_case_study(config)

print(f"{'epoch':>5} {'estimate':>9} {'oracle':>8} {'sigma2':>7}")
for row in trace:
    print(f"{row.epoch:>5} {row.mi_estimate:>9.4f} {row.oracle_mi:>8.4f} {row.sigma2:>7.3f}")

est = [r.mi_estimate for r in trace]
orc = [r.oracle_mi for r in trace]
print(f"\noracle MI fell from {orc[0]:.4f} to {orc[-1]:.4f} nats")
print(f"rank correlation between the two curves: {spearman(est, orc):.3f}")
print("minimizing the estimate really does minimize the true quantity,")
print("even though the optimizer never touches the densities.")
