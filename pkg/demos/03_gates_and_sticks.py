"""
Stick-breaking priors and relaxed binary gates
==============================================

The gate prior comes from the IBP stick-breaking construction:
probabilities pi_m decay like (alpha/(alpha+1))^m, so early networks
are cheap to switch on and late ones are increasingly unlikely.
Training relaxes the on/off decision to a Binary Concrete variable;
lowering the temperature pushes samples onto {0, 1}.
"""

import numpy as np

from lbopt import gates

rng = np.random.default_rng(0)
alpha, M = 2.0, 8

# Monte-Carlo check of the expected decay
draws = np.array([gates.sample_sticks(alpha, M, rng)[1] for _ in range(20_000)])
expected = (alpha / (alpha + 1.0)) ** np.arange(1, M + 1)
print("m   E[pi_m]   MC mean")
for m in range(M):
    print(f"{m + 1}   {expected[m]:7.4f}   {draws[:, m].mean():7.4f}")

# the same gate ratio sampled at three temperatures
gamma = 1.5
print("\ntau    P(z in (0.05, 0.95))  mean")
for tau in (2.0, 0.5, 0.1):
    z = np.array([gates.sample_gate(gamma, tau, rng) for _ in range(20_000)])
    soft = np.mean((z > 0.05) & (z < 0.95))
    print(f"{tau:4.1f}   {soft:18.3f}  {z.mean():6.3f}")

# hardening keeps the gates whose posterior odds exceed 1
gammas = np.array([4.0, 0.3, 1.2, 0.9])
print("\ngammas  ", gammas)
print("hardened", gates.harden(gammas))
