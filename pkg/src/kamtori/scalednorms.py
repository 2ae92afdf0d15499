"""Fitted boundedness constants for operators on scaled jet norms.

A linear operator ``u`` on jets is *k-bounded* on the scale ``(0, tau]`` if

    |u(x)|_s  <=  C * sigma^(-k) * |x|_(s+sigma)

for all 0 < s < tau, 0 < sigma <= tau - s, where ``|.|_s`` is the
l1-majorant norm ``Jet.sup_norm_bound(s)``.  The smallest such ``C`` is
approximated from below by maximizing the ratio over a finite dyadic grid
of ``(s, sigma)`` pairs and a basis of monomial inputs; the report records
the grid so every claim can be replayed.  Exact rational arithmetic is used
whenever ``tau`` and the operator outputs are rational.

``product_norm_check`` verifies the composition law

    N(u_1 ... u_n)  <=  n^k * prod_i N_i,      k = sum_i k_i,

on the same grid, and ``moderate_growth`` reports whether a sequence of
fitted constants ``N_n`` has ``sum_n log(max(1, N_n)) / 2^n`` bounded,
with the same three-valued verdict convention as
``arithmetic.bruno_diagnostic``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .arithmetic import DoubleExpTail, GeometricTail, PowerTail
from .errors import NonPositiveTermError, ShapeMismatchError
from .jets import EXACT, Jet, _all_indices


def _num_to_json(x):
    return str(x) if isinstance(x, Fraction) else x


def _as_scale(x):
    """Coerce a radius to Fraction when exact, float otherwise."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return float(x)


# ---------------------------------------------------------------------------
# boundedness fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundednessFit:
    """Result of fitting the smallest k-bounded constant on a finite grid.

    N_hat is the grid maximum of |u(x)|_s * sigma^k / |x|_(s+sigma); the
    residuals give N_hat minus the best ratio at each grid point, so
    replaying the grid must reproduce N_hat with all residuals >= 0.
    """

    k: int
    tau: object
    N_hat: object
    grid: tuple
    residuals: tuple
    max_point: tuple          # (s, sigma, exponent tuple)
    basis_degree: int
    num_vars: int

    def to_json_dict(self):
        s, sigma, exponent = self.max_point
        return {
            "k": self.k,
            "tau": _num_to_json(self.tau),
            "N_hat": _num_to_json(self.N_hat),
            "grid_spec": {
                "tau": _num_to_json(self.tau),
                "grid_size": int(round(math.sqrt(len(self.grid)))),
                "basis_degree": self.basis_degree,
                "num_vars": self.num_vars,
            },
            "max_point": {
                "s": _num_to_json(s),
                "sigma": _num_to_json(sigma),
                "exponent": list(exponent),
            },
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def dyadic_grid(tau, grid_size):
    """(s, sigma) = (tau/2^i, tau/2^j), i, j = 1..grid_size.

    Every pair satisfies s + sigma <= tau, so the whole square is admissible
    for the boundedness inequality.
    """
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1 (empty grid)")
    tau = _as_scale(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    scales = [tau / 2 ** i for i in range(1, grid_size + 1)]
    return tuple((s, sigma) for s in scales for sigma in scales)


def fit_bounded_constant(u, k, tau, basis_degree, grid_size,
                         num_vars=1, blocks=None, input_trunc=None):
    """Fit the smallest constant C with |u(x)|_s <= C sigma^(-k) |x|_(s+sigma).

    ``u`` is any linear callable Jet -> Jet.  Inputs x range over the
    monomials of total degree <= basis_degree in ``num_vars`` variables
    (carrying ``input_trunc`` headroom, default basis_degree + 4, so
    degree-raising operators are measured exactly), and (s, sigma) over
    ``dyadic_grid(tau, grid_size)``.  Deterministic: same arguments, same
    fit, exactly.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if basis_degree < 0:
        raise ValueError("basis_degree must be >= 0")
    grid = dyadic_grid(tau, grid_size)
    tau = _as_scale(tau)
    trunc = basis_degree + 4 if input_trunc is None else input_trunc

    best = [None] * len(grid)       # best ratio per grid point
    arg = [None] * len(grid)        # exponent achieving it
    for e in _all_indices(num_vars, basis_degree):
        x = Jet(num_vars, trunc, {e: Fraction(1)}, blocks=blocks, mode=EXACT)
        y = u(x)
        for g, (s, sigma) in enumerate(grid):
            ratio = y.sup_norm_bound(s) * sigma ** k / x.sup_norm_bound(s + sigma)
            if best[g] is None or ratio > best[g]:
                best[g] = ratio
                arg[g] = e
    n_hat = max(best)
    g_max = best.index(n_hat)
    s, sigma = grid[g_max]
    return BoundednessFit(
        k=k, tau=tau, N_hat=n_hat, grid=grid,
        residuals=tuple(n_hat - b for b in best),
        max_point=(s, sigma, arg[g_max]),
        basis_degree=basis_degree, num_vars=num_vars)


# ---------------------------------------------------------------------------
# products of bounded operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductNormReport:
    """Grid check of N(u_1...u_n) <= n^k * prod N_i with k = sum k_i."""

    n: int
    k_total: int
    factor_fits: tuple
    composed_fit: BoundednessFit
    bound: object
    margin: object
    satisfied: bool

    def to_json_dict(self):
        return {
            "n": self.n,
            "k_total": self.k_total,
            "factor_N_hats": [_num_to_json(f.N_hat) for f in self.factor_fits],
            "composed_N_hat": _num_to_json(self.composed_fit.N_hat),
            "bound": _num_to_json(self.bound),
            "margin": _num_to_json(self.margin),
            "satisfied": self.satisfied,
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def product_norm_check(us, k_list, tau, basis_degree, grid_size,
                       num_vars=1, blocks=None, input_trunc=None):
    """Fit each factor and their composition, and compare with n^k prod N_i.

    The composition applies the last operator in ``us`` first (mathematical
    order u_1 o ... o u_n).  An empty list is the identity, whose fitted
    constant is exactly 1.
    """
    if len(us) != len(k_list):
        raise ShapeMismatchError("need one k per operator")
    fits = tuple(
        fit_bounded_constant(u, ki, tau, basis_degree, grid_size,
                             num_vars=num_vars, blocks=blocks,
                             input_trunc=input_trunc)
        for u, ki in zip(us, k_list))
    k_total = sum(k_list)
    n = len(us)

    def composed(x):
        for u in reversed(us):
            x = u(x)
        return x

    comp_fit = fit_bounded_constant(composed, k_total, tau, basis_degree,
                                    grid_size, num_vars=num_vars,
                                    blocks=blocks, input_trunc=input_trunc)
    bound = Fraction(n) ** k_total   # 0^0 = 1: the empty product is the identity
    for f in fits:
        bound = bound * f.N_hat
    margin = bound - comp_fit.N_hat
    return ProductNormReport(
        n=n, k_total=k_total, factor_fits=fits, composed_fit=comp_fit,
        bound=bound, margin=margin, satisfied=margin >= 0)


# ---------------------------------------------------------------------------
# moderate growth of fitted constants across stages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoubleExpGrowth:
    """N_n = c * 2^(rate * base^n).

    log(N_n)/2^n grows like rate*(base/2)^n: the growth is moderate exactly
    when base < 2.
    """
    c: object = 1
    rate: object = 1
    base: object = 2

    def __post_init__(self):
        if not (float(self.rate) > 0 and float(self.base) > 1):
            raise ValueError("DoubleExpGrowth needs rate > 0 and base > 1")

    def term(self, n):
        return float(self.c) * 2.0 ** (float(self.rate) * float(self.base) ** n)

    def to_json_dict(self):
        return {"kind": "double-exp-growth", "c": _num_to_json(self.c),
                "rate": _num_to_json(self.rate), "base": _num_to_json(self.base)}


def _growth_verdict(descriptor):
    if descriptor is None:
        return "inconclusive"
    if isinstance(descriptor, DoubleExpGrowth):
        return "moderate" if float(descriptor.base) < 2 else "not-moderate"
    if isinstance(descriptor, (GeometricTail, PowerTail, DoubleExpTail)):
        # log N_n is at most linear in n (or eventually <= 0), so the
        # weighted sum converges regardless of the parameters.
        return "moderate"
    raise TypeError(f"unknown growth descriptor {descriptor!r}")


@dataclass(frozen=True)
class ModerateGrowthReport:
    """Partial sums of log(max(1, N_n))/2^n and a three-valued verdict."""

    values: tuple
    partial_sums: tuple
    verdict: str
    descriptor: object = None

    @property
    def partial_sum(self):
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def to_json_dict(self):
        return {
            "values": [float(v) for v in self.values],
            "partial_sum": self.partial_sum,
            "verdict": self.verdict,
            "descriptor": None if self.descriptor is None
            else self.descriptor.to_json_dict(),
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def moderate_growth(values, descriptor=None):
    """Report on sum_n log(max(1, N_n))/2^n for a stage sequence N_n.

    The finitely many observed values never decide convergence by
    themselves: the verdict is "moderate" / "not-moderate" only when a
    closed-form ``descriptor`` is supplied (same convention as
    ``arithmetic.bruno_diagnostic``), and "inconclusive" otherwise.
    """
    vals = tuple(values)
    sums = []
    acc = 0.0
    for n, v in enumerate(vals):
        if v < 0:
            raise NonPositiveTermError("fitted constants must be >= 0")
        acc += math.log(max(1.0, float(v))) / 2.0 ** n
        sums.append(acc)
    return ModerateGrowthReport(values=vals, partial_sums=tuple(sums),
                                verdict=_growth_verdict(descriptor),
                                descriptor=descriptor)
