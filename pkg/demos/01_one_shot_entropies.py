"""Tour of the one-shot entropies on hand-picked spectra.

Walks the zoo on a single state: the support and norm max entropies, the
hypothesis testing entropy with its LP witness, the Neyman-Pearson relative
entropy, and the cq conditional quantities, checking the identities that
relate them along the way.
"""

import numpy as np

from puredist import entropy
from puredist.states import CQState, DensityOperator

np.set_printoptions(precision=4, suppress=True)

rho = DensityOperator([("A", 4)], np.diag([0.5, 0.3, 0.15, 0.05]))
eps = 0.1

print("spectrum:", np.sort(rho.spectrum())[::-1], "eps =", eps)
print()

# Truncation entropies: drop the smallest eigenvalues with mass <= eps.
# Here only the 0.05 eigenvalue fits inside the budget, so the support
# shrinks from 4 to 3.
print("support max entropy   :", entropy.h_tilde_max(rho, eps), "= log2(3)")
print("norm max entropy      :", entropy.h_prime_max(rho, eps), "= log2(1/0.15)")
print("Renyi-1/2 (truncated) :", entropy.h_max_smooth(rho, eps))

# The hypothesis testing entropy is the log of a tiny LP optimum. The greedy
# witness fills the largest eigenvalues first and goes fractional at the
# boundary.
res = entropy.h_h(rho, eps)
print("\nhypothesis testing entropy:", res.value)
print("LP witness weights        :", res.witness["weights"])
print("re-evaluated from witness :", res.reevaluate())

# Sandwich between the support entropies (exact inequality, not numerics):
ht = entropy.h_tilde_max(rho, eps)
assert ht - 1 <= res.value <= ht

# Relative entropy against a skewed reference: the Neyman-Pearson test
# projects onto where rho dominates t*sigma.
sigma = np.diag([0.7, 0.1, 0.1, 0.1])
dh = entropy.d_h(rho.matrix, sigma, eps)
print("\nD_H against diag(0.7,0.1,0.1,0.1):", dh.value)
print("threshold t =", round(dh.witness["t"], 4),
      " boundary weight =", round(dh.witness["gamma"], 4))

# A classical-quantum ensemble: conditional entropies block-decompose.
cq = CQState([0, 1], [0.5, 0.5],
             [DensityOperator([("B", 2)], np.diag([1.0, 0.0])),
              DensityOperator([("B", 2)], np.diag([0.5, 0.5]))])
print("\ncq ensemble: pure conditional + maximally mixed conditional")
print("H_H(B|X)  :", entropy.h_h_cond_cq(cq, eps).value)
print("H_min(B|X):", entropy.h_min_cq(cq), "= -log2(0.75)")
print("smoothed  :", entropy.h_min_cq_smoothed(cq, eps))

# D_max mutual information with its duality certificate.
r = entropy.i_max_cq(cq, 0.0)
print("I_max(X:B):", r.value, " certified within", r.duality_gap, "bits")
print("optimizing sigma:\n", np.real(r.sigma.matrix))
