"""Deterministic guarantees transferred to stochastic input ensembles.

A clipped AR(1) ensemble stands in for an almost-surely bounded input process.
Because every path is uniformly bounded, the deterministic Lipschitz (fading
memory) bound applies pathwise, and the stochastic sup error of an approximant
coincides bitwise with the deterministic sup error over the same path set.
"""

import numpy as np

from affinerc import (
    MatrixPolynomial,
    SASSystem,
    TargetFilter,
    bounded_moment_check,
    fmp_lipschitz_constant,
    fmp_weighting,
    generate_ensemble,
    linf_norm,
    linf_weighted_norm,
    pathwise_apply,
    sas_functional,
    transfer_check,
    weighted_distance,
)

rng = np.random.default_rng(42)

ensemble = generate_ensemble(
    {"kind": "clipped_ar1", "phi": 0.8, "sigma": 0.4, "bound": 1.0},
    n_paths=64, window=128, seed=5,
)
print("== ensemble audit ==")
print(f"paths x window        : {ensemble.n_paths} x {ensemble.paths[0].length}")
print(f"declared bound        : {ensemble.bound}")
print(f"ess-sup |z|           : {linf_norm(ensemble):.6f}")
moments = bounded_moment_check(ensemble, k_max=4)
print(f"moment check k<=4     : ok={moments.ok}, worst E|z|^k / M^k = "
      f"{moments.worst_ratio:.4f}")

def random_sas(n, b):
    pc = [rng.standard_normal((n, n)) for _ in range(2)]
    pc = [m * (b / sum(np.linalg.norm(x, 2) for x in pc)) for m in pc]
    qc = [0.3 * rng.standard_normal((n, 1)) for _ in range(2)]
    return SASSystem.create(MatrixPolynomial.from_coeffs(pc),
                            MatrixPolynomial.from_coeffs(qc),
                            rng.standard_normal(n), eps=0.05)


system = random_sas(3, 0.6)
target = TargetFilter(name="reference", bound=1.0,
                      fn=lambda z: sas_functional(system, z, tol=1e-9))
approx = random_sas(3, 0.6)

print("\n== pathwise fading-memory bound ==")
rho = 0.5
C = fmp_lipschitz_constant(system, rho)
wseq = fmp_weighting(system, rho)
print(f"certified Lipschitz C : {C:.4f}")
ya = pathwise_apply(system, ensemble)
zb = generate_ensemble({"kind": "clipped_ar1", "phi": 0.8, "sigma": 0.4, "bound": 1.0},
                       n_paths=64, window=128, seed=6)
yb = pathwise_apply(system, zb)
lhs = np.max(np.abs(ya - yb))
rhs = C * max(weighted_distance(a, b, wseq)
              for a, b in zip(ensemble.paths, zb.paths))
print(f"max |H(z)-H(s)|       : {lhs:.6f}  <=  C * max dist = {rhs:.6f}")

print("\n== stochastic/deterministic transfer ==")
report = transfer_check(target, approx, ensemble)
print(f"stochastic sup error    : {report.stochastic_sup_err:.6f}")
print(f"deterministic sup error : {report.deterministic_sup_err:.6f}")
print(f"pipelines agree bitwise : {report.pipelines_agree}")
print(f"worst path index        : {report.worst_path}")
print(f"weighted ess-sup norm   : {linf_weighted_norm(ensemble, wseq):.6f}")
