"""Small divisors as short lattice vectors under a diagonal flow.

A near-resonance |<alpha, i>| = a with ||i|| = L corresponds to a short
vector in the unimodular lattice attached to alpha, once the lattice is
flowed for the right amount of time: g_t stretches the resonance
direction by e^t and shrinks the index direction by e^{-t}.  The
explicit resolution picks t = log(L/a)/2, where the two effects balance
and the vector built from i has length exactly eps = sqrt(2 a L).

The script flows the golden-ratio lattice over a grid of times and
reports the shortest vector delta(t): it dips near each balancing time
of a good rational approximation and never beats the eps bound of the
approximation that produced the dip.
"""

import numpy as np

from kamtori import arithmetic

ALPHA = [1.0, (1 + 5 ** 0.5) / 2]
basis = arithmetic.lattice_basis(ALPHA)

print("shortest flowed vector over a time grid")
print(f"{'t':>5} {'delta(t)':>10}  shortest integer vector")
for t in np.linspace(0.0, 8.0, 17):
    delta, short = arithmetic.flow_and_shortest(basis, float(t), 256)
    print(f"{t:5.1f} {delta:10.4f}  {tuple(int(c) for c in short)}")

print()
print("balancing times of the Fibonacci approximations")
print(f"{'i':>12} {'a=|<alpha,i>|':>14} {'eps':>8} {'t*':>6} "
      f"{'delta(t*)':>10}")
fib = [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8), (21, 13),
       (34, 21), (55, 34)]
for p, q in fib:
    i_vec = (p, -q)
    a = abs(i_vec[0] * ALPHA[0] + i_vec[1] * ALPHA[1])
    i_norm = float(np.hypot(*i_vec))
    eps, t_star = arithmetic.lemma_eps_t(a, i_norm)
    delta, _ = arithmetic.flow_and_shortest(basis, t_star, 256)
    print(f"{str(i_vec):>12} {a:14.6e} {eps:8.4f} {t_star:6.2f} "
          f"{delta:10.4f}")

print()
print("delta(t*) <= eps on every line: the explicit solution of the")
print("resolution equations is an upper bound for the true shortest")
print("vector, and for the golden ratio it is nearly sharp.")
