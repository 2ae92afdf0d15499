"""How close does an integer combination of frequencies get to zero?

For a frequency vector alpha, sigma(alpha)_k is the smallest |<alpha, i>|
over nonzero integer vectors with ||i|| <= 2^k.  Frequencies that admit
very good rational approximations produce tiny values early; the Bruno
diagnostic sums -log sigma_k / 2^k to judge whether the decay is slow
enough for a convergent normal-form iteration.

The golden ratio is the "hardest to approximate" irrational, so its
sigma sequence decays as slowly as possible; a Liouville-flavored vector
built from a rapidly converging continued fraction decays much faster.
"""

from fractions import Fraction

from kamtori import arithmetic

K_MAX = 8

print("=== golden ratio (Fibonacci convergent 987/610) ===")
golden = [Fraction(1), Fraction(987, 610)]
seq = arithmetic.sigma(golden, K_MAX)
for k, val in enumerate(seq.values):
    print(f"  k={k}: sigma_k = {val}  (~{float(val):.3e})")
report = arithmetic.bruno_diagnostic(seq, K_MAX)
print(f"  Bruno partial sum through K={report.K}: "
      f"{report.partial_sum:.6f} -> {report.verdict}")

print()
print("=== same analysis in float mode, true golden ratio ===")
seq_f = arithmetic.sigma([1.0, (1 + 5 ** 0.5) / 2], K_MAX)
for k, val in enumerate(seq_f.values):
    print(f"  k={k}: sigma_k ~ {val:.6e}")
report_f = arithmetic.bruno_diagnostic(seq_f, K_MAX)
print(f"  Bruno partial sum: {report_f.partial_sum:.6f} "
      f"-> {report_f.verdict}")

print()
print("=== a vector with an excellent rational approximation ===")
# 1/2 + 1/2^8: the combination i = (1, -2) almost vanishes once
# ||i|| admits it, and sigma collapses by three orders of magnitude.
liouville = [Fraction(1), Fraction(1, 2) + Fraction(1, 2 ** 8)]
seq_l = arithmetic.sigma(liouville, K_MAX)
for k, val in enumerate(seq_l.values):
    print(f"  k={k}: sigma_k = {val}  (~{float(val):.3e})")
report_l = arithmetic.bruno_diagnostic(seq_l, K_MAX)
print(f"  Bruno partial sum: {report_l.partial_sum:.6f} "
      f"-> {report_l.verdict}")
