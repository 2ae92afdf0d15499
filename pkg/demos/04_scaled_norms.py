"""Quantifying derivative loss on a scale of majorant norms.

Operators on power-series jets rarely stay bounded for one fixed norm:
a derivative trades a factor sigma^{-1} against a slightly larger
radius.  The scale |x|_s = sum |c_e| s^{|e|} makes that loss precise,
and `fit_bounded_constant` measures the smallest N with

    |u(x)|_s <= N sigma^{-k} |x|_{s + sigma}

over a dyadic grid of radii and the monomial basis.  The fitted level-1
constants feed the remainder inequalities for the flows e^{+-u}, whose
five bounds the last section evaluates on a concrete small generator.
"""

from fractions import Fraction

from kamtori.jets import Jet
from kamtori.kamengine import reste_inequalities_check
from kamtori.poisson import HamiltonianDerivation, SymplecticLayout
from kamtori.scalednorms import fit_bounded_constant, moderate_growth

print("=== fitted loss constants on the unit scale ===")
cases = [
    ("identity, k=0", lambda x: x, 0),
    ("d/dz, k=1 (Cauchy estimate)", lambda x: x.derivative(0), 1),
    ("multiply by z, k=0", lambda x: x * Jet.variable(0, 1, x.trunc_degree),
     0),
]
for label, op, k in cases:
    fit = fit_bounded_constant(op, k, 1, 6, 4)
    s, sigma, exps = fit.max_point
    print(f"  {label:32s} N^ = {fit.N_hat}  "
          f"(extremal monomial exps {exps} at s={s}, sigma={sigma})")

print()
print("=== a Hamiltonian derivation loses one derivative ===")
lay = SymplecticLayout(1)
gen = lay.monomial(Fraction(1, 10), qexp=(3,), trunc_degree=8)
u = HamiltonianDerivation(gen, lay)
fit = fit_bounded_constant(u, 1, 1, 6, 4, num_vars=2,
                           blocks=lay.blocks, input_trunc=8)
print(f"  generator q^3/10: level-1 constant N^ = {fit.N_hat} "
      f"(~{float(fit.N_hat):.4f})")

print()
print("=== moderate growth of a stage-constant sequence ===")
# Whether stage constants N_n stay usable is decided by the weighted sum
# of their logs, sum log(max(1, N_n)) / 2^n.  Polynomially growing
# constants make the partial sums level off; doubly exponential ones
# like 3^(2^n) contribute log(3) at EVERY stage, so the sums climb
# without bound and the iteration's losses are not summable.
poly = moderate_growth([Fraction(n + 1) for n in range(8)])
double = moderate_growth([Fraction(3) ** (2 ** n) for n in range(8)])
for label, rep in (("N_n = n+1", poly), ("N_n = 3^(2^n)", double)):
    sums = ", ".join(f"{float(s):.3f}" for s in rep.partial_sums[:4])
    print(f"  {label:14s} partial sums {sums}, ... -> "
          f"{float(rep.partial_sums[-1]):.3f}")

print()
print("=== remainder inequalities for the flow of a small generator ===")
x = lay.monomial(Fraction(1), pexp=(2,), trunc_degree=8)
report = reste_inequalities_check(u, x, Fraction(1, 2), 1)
print(f"  guard (exponentiability): {report.guard}")
for item in report.items:
    print(f"  {item['name']:>14}: lhs = {float(item['lhs']):.6e}  "
          f"<= rhs = {float(item['rhs']):.6e}  ok={item['ok']}")
print(f"  all five inequalities hold: {report.all_ok}")
