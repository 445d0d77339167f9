"""A small approximation experiment: random reservoirs + trained linear readouts.

The target is a short-memory quadratic Volterra functional.  Random state-affine
candidates of growing dimension are sampled, their readouts ridge-trained on
harvested states, and the best held-out sup error per dimension is reported —
errors should trend downward as the state dimension grows.
"""

import numpy as np

from affinerc import FamilySpec, approximate, target_finite_volterra

target = target_finite_volterra(
    memory=3,
    k1=[0.5, -0.25, 0.1],
    k2=np.diag([0.4, 0.2, 0.1]),
    bound=1.0,
)

schedule = [
    FamilySpec(family="SAS_eps", N=N, deg_p=2, deg_q=2, eps=0.1, seed=0)
    for N in (2, 4, 8, 16)
]

result = approximate(
    target,
    schedule,
    n_train=192,
    n_test=64,
    window=128,
    restarts=4,
    lam_reg=1e-6,
    seed=3,
)

print("family   N   best test sup error")
for family, N, err in sorted(result.curve(), key=lambda r: r[1]):
    print(f"{family:8s} {N:3d}  {err:.5f}")

best = result.best_row
print(f"\nbest candidate: family={best.family} N={best.N} restart={best.restart}")
print(f"train error {result.best.train_error:.5f}, test error {result.best.test_error:.5f}")
print(f"\nresults table (CSV head):")
print("\n".join(result.to_csv().splitlines()[:5]))
