"""Poisson brackets, Hamiltonian derivations, and Lie-series exponentials.

Sign conventions, fixed once:

  {f, g} = sum_k  d_{q_k}f d_{p_k}g - d_{p_k}f d_{q_k}g      ({q_k, p_k} = 1)

  the derivation attached to a generator h is  u_h(f) = {f, h},
  the time derivative of f along the Hamiltonian flow of h.

With these, u_{H2} for H2 = sum alpha_k p_k q_k acts diagonally on monomials:
u_{H2}(q^i p^j) = <alpha, i-j> q^i p^j, which is what ad_eigenvalue returns.

lambda and mu variables are bracket-inert (Casimir directions); derivations
may carry extra a_i(lambda) d/d_mu_i terms on top of the bracket part.
"""

from __future__ import annotations

from fractions import Fraction

from .arithmetic import FrequencyVector
from .errors import (
    ConvergenceError,
    NonInvertibleLinearPartError,
    OrderTooLowError,
    ShapeMismatchError,
)
from .jets import ComplexRational, Jet

__all__ = [
    "SymplecticLayout",
    "HamiltonianDerivation",
    "bracket",
    "ad_eigenvalue",
    "lie_exp",
    "exp_product",
    "check_symplectic",
]


class SymplecticLayout:
    """Variable layout (q_1..q_n, p_1..p_n, lambda_1..lambda_d, mu_1..mu_d).

    The bracket couples q_k with p_k only; lambda and mu are spectators.
    """

    __slots__ = ("n", "lambda_dim", "mu_dim")

    def __init__(self, n, lambda_dim=0, mu_dim=0):
        if n < 1:
            raise ShapeMismatchError("layout needs at least one (q,p) pair")
        if lambda_dim < 0 or mu_dim < 0:
            raise ShapeMismatchError("block sizes must be nonnegative")
        self.n = int(n)
        self.lambda_dim = int(lambda_dim)
        self.mu_dim = int(mu_dim)

    @property
    def num_vars(self):
        return 2 * self.n + self.lambda_dim + self.mu_dim

    @property
    def blocks(self):
        out = [("q", self.n), ("p", self.n)]
        if self.lambda_dim:
            out.append(("lam", self.lambda_dim))
        if self.mu_dim:
            out.append(("mu", self.mu_dim))
        return tuple(out)

    def q_index(self, k):
        return k

    def p_index(self, k):
        return self.n + k

    def lam_index(self, i):
        return 2 * self.n + i

    def mu_index(self, i):
        return 2 * self.n + self.lambda_dim + i

    def __eq__(self, other):
        if isinstance(other, SymplecticLayout):
            return (self.n, self.lambda_dim, self.mu_dim) == \
                (other.n, other.lambda_dim, other.mu_dim)
        return NotImplemented

    def __repr__(self):
        return (f"SymplecticLayout(n={self.n}, lambda_dim={self.lambda_dim}, "
                f"mu_dim={self.mu_dim})")

    def check(self, jet):
        if jet.num_vars != self.num_vars:
            raise ShapeMismatchError(
                f"jet has {jet.num_vars} variables, layout expects {self.num_vars}"
            )
        if jet.blocks is not None and jet.blocks != self.blocks:
            raise ShapeMismatchError(
                f"jet blocks {jet.blocks} differ from layout blocks {self.blocks}"
            )
        return jet

    def split(self, idx):
        """Exponent tuple -> (q part, p part, lambda part, mu part)."""
        n, dl = self.n, self.lambda_dim
        return (idx[:n], idx[n:2 * n],
                idx[2 * n:2 * n + dl], idx[2 * n + dl:])

    # --- jet factories ----------------------------------------------------

    def zero(self, trunc_degree, mode="exact"):
        return Jet.zero(self.num_vars, trunc_degree, blocks=self.blocks, mode=mode)

    def constant(self, value, trunc_degree):
        return Jet.constant(value, self.num_vars, trunc_degree, blocks=self.blocks)

    def q(self, k, trunc_degree, mode="exact"):
        return Jet.variable(self.q_index(k), self.num_vars, trunc_degree,
                            blocks=self.blocks, mode=mode)

    def p(self, k, trunc_degree, mode="exact"):
        return Jet.variable(self.p_index(k), self.num_vars, trunc_degree,
                            blocks=self.blocks, mode=mode)

    def lam(self, i, trunc_degree, mode="exact"):
        return Jet.variable(self.lam_index(i), self.num_vars, trunc_degree,
                            blocks=self.blocks, mode=mode)

    def mu(self, i, trunc_degree, mode="exact"):
        return Jet.variable(self.mu_index(i), self.num_vars, trunc_degree,
                            blocks=self.blocks, mode=mode)

    def monomial(self, coeff, qexp=(), pexp=(), lamexp=(), muexp=(),
                 trunc_degree=8):
        qexp = tuple(qexp) or (0,) * self.n
        pexp = tuple(pexp) or (0,) * self.n
        lamexp = tuple(lamexp) or (0,) * self.lambda_dim
        muexp = tuple(muexp) or (0,) * self.mu_dim
        idx = qexp + pexp + lamexp + muexp
        if len(idx) != self.num_vars:
            raise ShapeMismatchError("exponent blocks do not fill the layout")
        return Jet(self.num_vars, trunc_degree, {idx: coeff}, blocks=self.blocks)

    def quadratic_model(self, alpha, trunc_degree):
        """H2 = sum_k alpha_k p_k q_k."""
        alpha = FrequencyVector(alpha)
        if alpha.dim != self.n:
            raise ShapeMismatchError("alpha dimension must equal the pair count")
        total = self.zero(trunc_degree)
        for k, ak in enumerate(alpha.components):
            total = total + (self.p(k, trunc_degree) * self.q(k, trunc_degree)).scale(ak)
        return total


def _bracket_trunc(f, g):
    """Certified truncation degree of {f,g} given the operands' data."""
    t = min(f.ord() + g.trunc_degree, g.ord() + f.trunc_degree) - 2
    return max(0, min(t, max(f.trunc_degree, g.trunc_degree)))


def bracket(f, g, layout, trunc=None):
    """Poisson bracket {f,g} = sum_k d_{q_k}f d_{p_k}g - d_{p_k}f d_{q_k}g.

    Computed directly on monomial pairs.  The result's truncation degree is
    the largest certified one unless an explicit trunc is requested.
    """
    layout.check(f)
    layout.check(g)
    if f.mode != g.mode and f and g:
        f._check_like(g)  # raises the standard mode error
    if trunc is None:
        trunc = _bracket_trunc(f, g)
    n = layout.n
    acc = {}
    for i, a in f.coeffs.items():
        di = sum(i)
        for j, b in g.coeffs.items():
            if di + sum(j) - 2 > trunc:
                continue
            ab = None
            for k in range(n):
                c = i[k] * j[n + k] - i[n + k] * j[k]
                if c == 0:
                    continue
                if ab is None:
                    ab = a * b
                idx = list(map(sum, zip(i, j)))
                idx[k] -= 1
                idx[n + k] -= 1
                idx = tuple(idx)
                cur = acc.get(idx)
                contrib = ab * c
                acc[idx] = contrib if cur is None else cur + contrib
    mode = f.mode if f else g.mode
    return Jet(f.num_vars, trunc, acc, blocks=f.blocks or g.blocks, mode=mode)


def ad_eigenvalue(alpha, i, j):
    """Eigenvalue of u_{H2}: {q^i p^j, H2} = <alpha, i-j> q^i p^j
    for H2 = sum alpha_k p_k q_k.  Resonant (i=j) gives 0.

    alpha may be a FrequencyVector or any sequence of ring scalars
    (e.g. complex frequencies of a Morse quadratic part).
    """
    comps = alpha.components if isinstance(alpha, FrequencyVector) \
        else tuple(alpha)
    i = tuple(i)
    j = tuple(j)
    if len(i) != len(comps) or len(j) != len(comps):
        raise ShapeMismatchError("exponent tuples must match alpha's dimension")
    total = None
    for ak, ik, jk in zip(comps, i, j):
        term = ak * (ik - jk)
        total = term if total is None else total + term
    return total


class HamiltonianDerivation:
    """u(f) = {f, h} + sum_i a_i(lambda) d/d_mu_i f.

    The mu-coefficients must depend on lambda only; that keeps exponentials
    of mixed derivations terminating (each d/d_mu application strictly drops
    the mu-degree, each bracket application strictly raises total degree).
    """

    __slots__ = ("generator", "layout", "mu_coeffs")

    def __init__(self, generator, layout, mu_coeffs=None):
        layout.check(generator)
        if mu_coeffs is not None:
            mu_coeffs = list(mu_coeffs)
            if len(mu_coeffs) != layout.mu_dim:
                raise ShapeMismatchError(
                    f"expected {layout.mu_dim} mu-coefficients, got {len(mu_coeffs)}"
                )
            for a in mu_coeffs:
                layout.check(a)
                for idx in a.coeffs:
                    qe, pe, le, me = layout.split(idx)
                    if any(qe) or any(pe) or any(me):
                        raise ValueError(
                            "mu-coefficients must be functions of lambda only"
                        )
            if all(not a for a in mu_coeffs):
                mu_coeffs = None
        self.generator = generator
        self.layout = layout
        self.mu_coeffs = mu_coeffs

    @property
    def is_zero(self):
        return not self.generator and self.mu_coeffs is None

    def generator_touches_mu(self):
        lay = self.layout
        for idx in self.generator.coeffs:
            if any(lay.split(idx)[3]):
                return True
        return False

    def __call__(self, f):
        self.layout.check(f)
        out = None
        if self.generator:
            # The generator is an exact polynomial (not a truncated unknown),
            # so lift its truncation grade high enough that the bracket's
            # certified range covers all of f's.  The action then preserves
            # f's truncation degree.
            h = self.generator.with_trunc(
                max(self.generator.trunc_degree,
                    f.trunc_degree + self.generator.max_degree()))
            out = bracket(f, h, self.layout)
            if out.trunc_degree > f.trunc_degree:
                out = out.truncate(f.trunc_degree)
        if self.mu_coeffs is not None:
            for i, a in enumerate(self.mu_coeffs):
                if not a:
                    continue
                df = f.derivative(self.layout.mu_index(i))
                if not df:
                    continue
                term = a.with_trunc(df.trunc_degree) * df
                out = term if out is None else out + term
        if out is None:
            return Jet.zero(f.num_vars, f.trunc_degree, blocks=f.blocks,
                            mode=f.mode)
        return out

    def __neg__(self):
        mu = None if self.mu_coeffs is None else [-a for a in self.mu_coeffs]
        return HamiltonianDerivation(-self.generator, self.layout, mu)

    def __repr__(self):
        extra = "" if self.mu_coeffs is None else \
            f" + {len(self.mu_coeffs)} d/dmu terms"
        return f"HamiltonianDerivation({self.generator!r}{extra})"


def lie_exp(u: HamiltonianDerivation, f: Jet) -> Jet:
    """e^u f = sum_j u^j(f)/j!, exact and finite on jets.

    Requires ord(generator) >= 3 (each bracket application then raises order,
    so the series terminates at the truncation degree).  A generator touching
    mu is rejected when d/dmu terms are present: that combination can cycle
    and the series genuinely fails to terminate.
    """
    h = u.generator
    if h and h.ord() <= 2:
        raise OrderTooLowError(
            f"generator has order {h.ord()} <= 2; the Lie series on jets "
            "does not terminate"
        )
    if u.mu_coeffs is not None and u.generator_touches_mu():
        raise ValueError(
            "generator depends on mu while the derivation carries d/dmu "
            "terms; exponential would not terminate (split the transform)"
        )
    u.layout.check(f)
    total = f
    term = f
    cap = (f.trunc_degree + 2) * (f.trunc_degree + 2) + 2
    for j in range(1, cap):
        term = u(term)
        if not term:
            return total
        if f.mode == "exact":
            term = term / j
        else:
            term = term / float(j)
        total = total + term
    raise ConvergenceError("Lie series failed to terminate within the cap")


def exp_product(us, f: Jet) -> Jet:
    """Apply e^{u_m} ... e^{u_0} to f: us[0] acts first.

    The inverse transform is exp_product(reversed negated list).
    """
    out = f
    for u in us:
        out = lie_exp(u, out)
    return out


def _linear_part_matrix(images, layout):
    n = layout.n
    rows = []
    for im in images:
        row = []
        for c in range(2 * n):
            idx = [0] * layout.num_vars
            idx[c] = 1
            row.append(im[tuple(idx)])
        rows.append(row)
    return rows


def _det(matrix):
    """Determinant by fraction-free-ish Gaussian elimination; works for
    Fraction, ComplexRational, float, and complex entries."""
    m = [row[:] for row in matrix]
    size = len(m)
    det = None
    sign = 1
    for col in range(size):
        piv = None
        for r in range(col, size):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            return 0
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            sign = -sign
        pivot = m[col][col]
        det = pivot if det is None else det * pivot
        for r in range(col + 1, size):
            if m[r][col] != 0:
                factor = m[r][col] / pivot
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return det * sign if det is not None else 1


def check_symplectic(images, layout, trunc=None):
    """Max residual coefficient of the canonical relations for a transform
    given by the images (Q_1..Q_n, P_1..P_n) of the symplectic coordinates:
    {Q_i, P_j} - delta_ij, {Q_i, Q_j}, {P_i, P_j}.

    Exact zero means symplectic up to the truncation degree.
    """
    images = list(images)
    n = layout.n
    if len(images) != 2 * n:
        raise ShapeMismatchError(f"need 2n = {2 * n} coordinate images")
    for im in images:
        layout.check(im)
        if im and im.ord() < 1:
            raise OrderTooLowError("coordinate images must vanish at the origin")
    lin = _linear_part_matrix(images, layout)
    if _det(lin) == 0:
        raise NonInvertibleLinearPartError(
            "transform's linear part is singular on the (q,p) block"
        )
    residual_coeffs = []
    for a in range(2 * n):
        for b in range(a, 2 * n):
            r = bracket(images[a], images[b], layout, trunc=trunc)
            if b == a + n:  # {Q_a, P_a} should be exactly 1
                one = 1 if r.mode == "exact" else 1.0
                r = r - one
            residual_coeffs.extend(r.coeffs.values())
    if all(isinstance(c, Fraction) for c in residual_coeffs):
        return max((abs(c) for c in residual_coeffs), default=Fraction(0))
    mags = []
    for c in residual_coeffs:
        if isinstance(c, ComplexRational):
            mags.append(float(c.abs2()) ** 0.5)
        else:
            mags.append(abs(float(c)) if not isinstance(c, complex) else abs(c))
    return max(mags, default=0.0)
