"""Build a small state-affine reservoir, certify it, and run it two ways.

The same trajectory is computed by the step recursion (started from zero, with a
washout prefix) and by the truncated series expansion; the two must agree within
the printed certified allowances.
"""

import numpy as np

from affinerc import (
    BoundedSequence,
    MatrixPolynomial,
    SASSystem,
    check_conditions,
    default_washout,
    esp_margin,
    sas_run_recursion,
    sas_run_series,
    state_bound,
    trajectory_to_csv,
)

rng = np.random.default_rng(7)

# transition polynomial p(z) = A0 + z A1, scaled so the coefficient norms sum to 0.7
coeffs = [rng.standard_normal((3, 3)) for _ in range(2)]
scale = 0.7 / sum(np.linalg.norm(m, 2) for m in coeffs)
p = MatrixPolynomial.from_coeffs([m * scale for m in coeffs])
q = MatrixPolynomial.from_coeffs(
    [0.4 * rng.standard_normal((3, 1)), 0.3 * rng.standard_normal((3, 1))]
)
system = SASSystem.create(p, q, W=rng.standard_normal(3), eps=0.1)

print("== certificate ==")
cert = system.p_cert
print(f"coefficient norm sum B_p    : {cert.B_p:.6f}")
print(f"certified sup ||p(z)||      : [{cert.M_p_lower:.6f}, {cert.M_p_upper:.6f}]")
report = check_conditions(p, lam=0.45)
print(f"condition chain at lam=0.45 : i={report.cond_i} ii={report.cond_ii} "
      f"iii={report.cond_iii}")
print(f"state bound K2/(1-K1)       : {state_bound(system):.6f}")
print(f"echo-state margin           : {esp_margin(system):.6f}")

print("\n== simulation ==")
z = BoundedSequence(rng.uniform(-1.0, 1.0, size=(256, 1)), bound=1.0)
tol = 1e-9
washout = default_washout(system, tol)
rec = sas_run_recursion(system, z, washout=washout)
ser = sas_run_series(system, z, tol=tol)
post = slice(rec.washout_len, None)
gap = np.max(np.linalg.norm(rec.states[post] - ser.states[post], axis=1))
print(f"washout rows               : {rec.washout_len}")
print(f"series truncation bound    : {ser.truncation_tail_bound:.3e}")
print(f"recursion forgetting bound : {rec.truncation_tail_bound:.3e}")
print(f"max post-washout state gap : {gap:.3e}  "
      f"(allowed {tol + rec.truncation_tail_bound:.3e})")
assert gap <= tol + rec.truncation_tail_bound

largest = np.max(np.linalg.norm(ser.states, axis=1))
print(f"largest state norm seen    : {largest:.6f}  (bound {state_bound(system):.6f})")

print("\nfirst trajectory rows:")
print("\n".join(trajectory_to_csv(ser).splitlines()[:4]))
