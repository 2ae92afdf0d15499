"""Which resonance strips cut through a ball of frequency vectors?

The complement of the arithmetic class is covered by strips: for each
integer vector i with ||i|| <= 2^k, the set {beta : |<beta, i>| <
a_k rho_k} is a slab of width 2 a_k rho_k / ||i|| around the hyperplane
<beta, i> = 0.  A ball B(alpha, r) meets only finitely many slabs, and
their total width controls how much of the ball the class can lose.

The script decomposes a ball around the golden-ratio vector and prints
the few strips that actually intersect it, together with the width
budget they consume.
"""

from fractions import Fraction

from kamtori import arithmetic

K_MAX = 6
R = 0.05

alpha = [Fraction(1), Fraction(987, 610)]
a = arithmetic.sigma(alpha, K_MAX)
rho = arithmetic.DecaySequence([Fraction(2) ** (-6 * k)
                                for k in range(K_MAX + 1)])

records = arithmetic.strip_analysis(alpha, a, rho, Fraction(R), K_MAX)
hits = [rec for rec in records if rec.intersects_ball]
total_width = sum(float(rec.width) for rec in records)
hit_width = sum(float(rec.width) for rec in hits)

print(f"ball radius {R} around alpha = (1, 987/610)")
print(f"strips enumerated: {len(records)}")
print(f"strips meeting the ball: {len(hits)}")
print(f"total width of all strips: {total_width:.6e}")
print(f"width of the intersecting ones: {hit_width:.6e}")
print()
print(f"{'index':>12} {'k':>3} {'width':>13}")
for rec in hits:
    print(f"{str(tuple(rec.index)):>12} {rec.k:>3} {float(rec.width):13.6e}")

# The coarsest-scale strips have allowance rho_0 = 1 and no slack: their
# boundaries pass through the center itself (the same effect that caps
# the density experiment in demo 05).  The genuinely thin resonance web
# is the k >= 1 tail.
tail = [rec for rec in hits if rec.k >= 1]
tail_width = sum(float(rec.width) for rec in tail)
print()
print(f"k >= 1 strips meeting the ball: {len(tail)}, "
      f"total width {tail_width:.3e}")
print(f"as a fraction of the ball diameter: {tail_width / (2 * R):.3e}")
print()
print("The slab widths decay with the allowance rho_k much faster than")
print("the number of strips grows; past the coarsest scale, the web of")
print("resonances crossing the ball is measure-theoretically negligible.")
