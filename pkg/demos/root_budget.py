"""How many high-degree vertices must we keep to catch the first vertex?

Grows linear preferential-attachment trees, records where the root ranks by
degree, and turns the hit curve into a budget K for a few error levels.

    python3 demos/root_budget.py
"""

from netarch import AttachmentFunction, ExperimentConfig, budget_bounds, LinearTheorem
from netarch.experiments import budget_estimate, root_hit_curve

f = AttachmentFunction.linear(0.0)
cfg = ExperimentConfig("root_hit_curve", f, m=1, n=20_000, k_grid=(1, 2, 4, 8, 16, 32, 64),
                       replications=1000, master_seed=1)
curve = root_hit_curve(cfg)

print("K     P(root in top-K)   95% Wilson interval")
for row in curve.table:
    print(f"{row['K']:<5} {row['p_hat']:.3f}              [{row['wilson_lo']:.3f}, {row['wilson_hi']:.3f}]")

# The miss probability decays like a power of K; theory predicts exponent -1/2 for f(i)=i, m=1.
print(f"\nfitted slope of log miss vs log K: {curve.summary['miss_slope']:.2f}")

for eps in (0.5, 0.2, 0.1):
    k_hat = budget_estimate(cfg, eps, curve)
    theory = budget_bounds(eps, LinearTheorem(1, 0.0))
    print(f"eps={eps}: measured budget {k_hat}, theory scale eps^-{theory.lower_exponent:g} = "
          f"{eps ** -theory.lower_exponent:.0f} (up to constants)")
