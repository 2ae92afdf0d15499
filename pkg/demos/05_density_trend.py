"""Does the arithmetic class fill up small balls around a good vector?

The class D_a keeps every frequency beta whose small-divisor sequence
dominates a threshold sequence: sigma(beta)_k >= a_k rho_k for all k,
where a = sigma(alpha) is calibrated at the center and rho_k is a decay
allowance.  Monte-Carlo sampling of shrinking balls around alpha then
estimates the density of the class at alpha.

Two allowance choices differ in one index and behave completely
differently:

  rho_k = 2^(-6k):     rho_0 = 1, so at the coarsest scale the sampled
                       points must satisfy sigma_0(beta) >= sigma_0(alpha)
                       with NO slack.  That constraint's boundary passes
                       through the center and bisects every ball -- the
                       fraction plateaus near 0.50 no matter how small
                       the radius gets.

  rho_k = 2^(-6(k+1)): every scale, including k=0, gets real slack, and
                       the fractions climb to 1 as the radius shrinks.

The first choice is the textbook-style parameterization and makes a good
cautionary tale: a density statement at a boundary point of the class
needs slack at every scale, not almost every scale.
"""

from kamtori import arithmetic

SEED = 20260819
SAMPLES = 20000
K_MAX = 8
RADII = (0.1, 0.01, 0.001)

alpha = (1.0, (1 + 5 ** 0.5) / 2)
a = arithmetic.sigma(alpha, K_MAX)
ident = arithmetic.SmoothMap("identity", 2, 2, lambda x: x,
                             is_identity=True)


def sweep(rho, label):
    print(f"--- {label} ---")
    print(f"{'radius':>8} {'fraction':>9} {'active strips':>14}")
    for r in RADII:
        rep = arithmetic.density_estimate(ident, alpha, a, rho, r,
                                          SAMPLES, K_MAX, seed=SEED)
        print(f"{r:8.3f} {rep.fraction_in_class:9.4f} "
              f"{rep.active_constraints:14d}")
    print()


sweep(arithmetic.DecaySequence([2.0 ** (-6 * k) for k in range(K_MAX + 1)]),
      "allowance 2^(-6k): no slack at scale 0")
sweep(arithmetic.DecaySequence([2.0 ** (-6 * (k + 1))
                                for k in range(K_MAX + 1)]),
      "allowance 2^(-6(k+1)): slack at every scale")
