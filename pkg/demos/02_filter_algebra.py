"""Sums and products of reservoir filters, realized as single reservoirs.

Two independent state-affine systems are combined; the composed system is itself a
certified state-affine system whose functional equals the pointwise sum/product of
the parents' functionals.  The same is shown for linear reservoirs, where the
direct sum shares a state and only the readout changes.
"""

import numpy as np

from affinerc import (
    BoundedSequence,
    LinearSystem,
    MatrixPolynomial,
    SASSystem,
    ScalarPolynomial,
    evaluate_filter,
    linear_combine,
    sas_add,
    sas_functional,
    sas_multiply,
)

rng = np.random.default_rng(11)


def random_sas(n, b):
    pc = [rng.standard_normal((n, n)) for _ in range(2)]
    pc = [m * (b / sum(np.linalg.norm(x, 2) for x in pc)) for m in pc]
    qc = [0.3 * rng.standard_normal((n, 1)) for _ in range(2)]
    return SASSystem.create(
        MatrixPolynomial.from_coeffs(pc),
        MatrixPolynomial.from_coeffs(qc),
        rng.standard_normal(n),
        eps=0.05,
    )


s1, s2 = random_sas(2, 0.45), random_sas(3, 0.45)
lam = -0.8
added = sas_add(s1, s2, lam)
prod = sas_multiply(s1, s2)

print("== state-affine algebra ==")
print(f"parents N1={s1.N}, N2={s2.N}")
print(f"sum     : N={added.result.N} (N1+N2), kind={added.kind}, "
      f"margin eps={added.result.eps:.4f}")
print(f"product : N={prod.result.N} (N1+N2+N1*N2), kind={prod.kind}, "
      f"margin eps={prod.result.eps:.4f}")

worst_sum = worst_prod = 0.0
for _ in range(5):
    z = BoundedSequence(rng.uniform(-1, 1, size=(96, 1)), bound=1.0)
    h1, h2 = sas_functional(s1, z), sas_functional(s2, z)
    worst_sum = max(worst_sum, abs(sas_functional(added.result, z) - (h1 + lam * h2)))
    worst_prod = max(worst_prod, abs(sas_functional(prod.result, z) - h1 * h2))
print(f"|H_sum - (H1 + lam H2)| over 5 probes : {worst_sum:.3e}")
print(f"|H_prod - H1*H2|        over 5 probes : {worst_prod:.3e}")

print("\n== linear algebra ==")
A1 = rng.standard_normal((2, 2))
A1 *= 0.5 / np.linalg.norm(A1, 2)
l1 = LinearSystem.create(A1, rng.standard_normal((2, 1)),
                         ScalarPolynomial.linear_form([1.0, -0.5]), eps=0.1)
A2 = rng.standard_normal((3, 3))
A2 *= 0.65 / np.linalg.norm(A2, 2)
l2 = LinearSystem.create(A2, rng.standard_normal((3, 1)),
                         ScalarPolynomial.linear_form([0.3, 0.0, 0.7]), eps=0.1)

lsum = linear_combine(l1, l2, mode="sum", lam=2.0)
lprod = linear_combine(l1, l2, mode="product")
print(f"sum/product state dim : {lsum.result.N} (shared reservoir, N1+N2)")
print(f"sigma_max(A1 (+) A2)  : {lsum.result.sigma:.12f} "
      f"(= max {max(l1.sigma, l2.sigma):.12f})")
z = BoundedSequence(rng.uniform(-1, 1, size=(96, 1)), bound=1.0)
g1, g2 = evaluate_filter(l1, z), evaluate_filter(l2, z)
print(f"sum identity gap      : {abs(evaluate_filter(lsum.result, z) - (g1 + 2.0 * g2)):.3e}")
print(f"product identity gap  : {abs(evaluate_filter(lprod.result, z) - g1 * g2):.3e}")
