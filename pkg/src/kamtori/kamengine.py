"""Jet-level KAM iteration with Hadamard-product quasi-inverses.

The engine conjugates a model-plus-perturbation Hamiltonian jet to a
normal form by the four-term stage recurrence

    a_{n+1} = r_{n+1}(a_n + alpha_n)
    b_{n+1} = r_{n+1} e^{-u_n}(a_n + b_n) - a_{n+1}
    u_{n+1} = j_{n+1}(sum of alpha_i) applied to the class of b_{n+1}
    alpha_{n+1} + c_{n+1} = b_{n+1} - u_{n+1}(a_{n+1})

where the restrictions r_n are degree truncations (the window grows by
one degree per stage, realizing the ultraviolet cutoff of the
quasi-inverse), alpha_n collects the absorbable part (the set F), c_n
the unsolved overflow, and j_n is the quasi-inverse built by dividing
each solvable monomial by its eigenvalue under the quadratic model.

Conventions.  A derivation acts by u_h(f) = {f, h}, so the quasi-inverse
returns the generator with bracket(model, generator) = target modulo F
and degrees beyond the window; stage transforms apply e^{-u_n}, first
stage first.  In the parametric scenario the lambda/mu variables stand
for actions and carry weight 2 in all degree bookkeeping, and the
frequency corrections are read on the zero section mu = 0.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .arithmetic import FrequencyVector, bruno_diagnostic, sigma
from .birkhoff import (COMPLEX_MORSE, REAL_ELLIPTIC, EllipticHamiltonian,
                       action_ideal_certificate, to_complex_morse)
from .errors import (BudgetExceededError, CertificateError,
                     ClassMembershipError, ConvergenceError,
                     NotEllipticError, OrderTooLowError, ResonanceError,
                     ShapeMismatchError, SmallDivisorError)
from .jets import EXACT, ComplexRational, Jet
from .poisson import (HamiltonianDerivation, SymplecticLayout, ad_eigenvalue,
                      lie_exp)

_I = ComplexRational(0, 1)


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------

def _layout_of(jet):
    """Reconstruct the symplectic layout from a jet's block structure."""
    if jet.blocks is None:
        if jet.num_vars % 2:
            raise ShapeMismatchError("need an even number of (q,p) variables")
        return SymplecticLayout(jet.num_vars // 2)
    spec = dict(jet.blocks)
    return SymplecticLayout(spec.get("q", 0), lambda_dim=spec.get("lam", 0),
                            mu_dim=spec.get("mu", 0))


def _abs_mag(value):
    """|value| as Fraction when exact, float otherwise (divisor ledger)."""
    if isinstance(value, ComplexRational):
        if not value.im:
            return abs(value.re)
        if not value.re:
            return abs(value.im)
        return math.sqrt(float(value.abs2()))
    if isinstance(value, Fraction):
        return abs(value)
    return abs(value)


def _action_square_test(qe, pe, le, me):
    """Default F-membership: two action factors p_kq_k divide the monomial."""
    return sum(min(a, b) for a, b in zip(qe, pe)) >= 2


def _monomial_name(idx, layout):
    names = Jet(len(idx), 1, blocks=layout.blocks).var_names()
    parts = []
    for name, e in zip(names, idx):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts) or "1"


def _num_json(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, ComplexRational):
        return {"re": str(x.re), "im": str(x.im)}
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


# --- weighted degree: lambda and mu stand for actions, weight 2 -----------

def _wdeg(idx, layout):
    qe, pe, le, me = layout.split(idx)
    return sum(qe) + sum(pe) + 2 * (sum(le) + sum(me))


def _wtruncate(jet, layout, w):
    return jet.project(lambda idx: _wdeg(idx, layout) <= w)


def _word(jet, layout):
    """Weighted order; None for the zero jet."""
    if not jet:
        return None
    return min(_wdeg(idx, layout) for idx in jet.coeffs)


# ---------------------------------------------------------------------------
# quasi-inverse by eigenvalue division
# ---------------------------------------------------------------------------

def _check_divisor(lam, idx, layout, floor, exact):
    if exact:
        if not lam:
            raise ResonanceError(
                f"monomial {_monomial_name(idx, layout)} is resonant: "
                "eigenvalue (alpha, i-j) vanishes")
        mag = _abs_mag(lam)
        if floor and mag <= floor:
            raise SmallDivisorError(
                f"divisor {mag} for monomial {_monomial_name(idx, layout)} "
                f"is at or below the floor {floor}")
        return mag
    mag = _abs_mag(lam)
    if mag <= floor:
        raise SmallDivisorError(
            f"divisor {mag} for monomial {_monomial_name(idx, layout)} "
            f"is at or below the floor {floor}")
    return mag


def _solve_terms(terms, layout, freqs, floor, exact):
    """Generator terms -coeff/eigenvalue for the given monomials."""
    out = {}
    min_div = None
    for idx, c in terms:
        qe, pe, _, _ = layout.split(idx)
        if qe == pe:
            raise ResonanceError(
                f"monomial {_monomial_name(idx, layout)} is resonant and "
                "not absorbable; it cannot be solved")
        lam = ad_eigenvalue(freqs, qe, pe)
        mag = _check_divisor(lam, idx, layout, floor, exact)
        if min_div is None or mag < min_div:
            min_div = mag
        out[idx] = out.get(idx, 0) - c / lam
    return out, min_div


def hadamard_quasi_inverse(alpha, n, target, layout=None, *, alpha_acc=None,
                           eigen_freqs=None, divisor_floor=None, f_test=None):
    """Quasi-inverse of the adjoint of the quadratic model, on one target.

    Every monomial of ``target`` outside the absorbable set F (default:
    two action factors) is divided by its eigenvalue (alpha, i-j); the
    returned derivation u satisfies bracket(model, generator) = target
    modulo F, up to the degree window the caller imposed by truncating
    the target (the stage index ``n`` tags that window).  When the model
    has accumulated F-terms ``alpha_acc`` beyond its quadratic part, the
    displayed correction re-solves the solvable part of the bracket of
    alpha_acc against the first generator, so the identity still holds
    modulo F at the window.

    The generator sign is the one that makes bracket(model, generator)
    equal +target; callers conjugate with e^{-u}.
    """
    if n < 0:
        raise ValueError("stage index must be >= 0")
    lay = layout if layout is not None else _layout_of(target)
    freqs = _effective_freqs(alpha, eigen_freqs)
    test = f_test if f_test is not None else _action_square_test
    exact = target.mode == EXACT
    floor = _default_floor(divisor_floor, exact)
    terms, _, _ = _stage_solution(target, lay, freqs, floor, exact, test,
                                  alpha_acc, math.inf, None)
    gen = Jet(target.num_vars, target.trunc_degree, terms,
              blocks=lay.blocks, mode=target.mode)
    return HamiltonianDerivation(gen, lay)


def _effective_freqs(alpha, eigen_freqs):
    if eigen_freqs is not None:
        return tuple(eigen_freqs)
    if alpha is None:
        raise ValueError("need alpha or eigen_freqs for the divisors")
    if isinstance(alpha, FrequencyVector):
        return alpha.components
    return tuple(alpha)


def _default_floor(divisor_floor, exact):
    if divisor_floor is not None:
        return divisor_floor
    return 0 if exact else 1e-12


# ---------------------------------------------------------------------------
# parametric (lambda, mu) reduction data
# ---------------------------------------------------------------------------

def _poly_mul(p, q, keep=None):
    out = {}
    for a, u in p.items():
        for b, v in q.items():
            c = tuple(x + y for x, y in zip(a, b))
            if keep is not None and sum(c) > keep:
                continue
            w = out.get(c, 0) + u * v
            if w:
                out[c] = w
            elif c in out:
                del out[c]
    return out


def _poly_power_product(forms, exps, d, keep=None):
    """Product over k of forms[k]**exps[k]; forms are lambda-polynomials."""
    out = {(0,) * d: 1}
    for f, e in zip(forms, exps):
        for _ in range(e):
            out = _poly_mul(out, f, keep=keep)
    return out


class _Parametric:
    """Reduction data for the (lambda, mu) scenario.

    w_forms[k] is the lambda-linear polynomial identified with the action
    p_kq_k on the zero section; columns[k][i] the coefficient of the i-th
    deformation direction on the k-th action.
    """

    __slots__ = ("w_forms", "columns", "d", "n")

    def __init__(self, w_forms, columns, d, n):
        self.w_forms = w_forms
        self.columns = columns
        self.d = d
        self.n = n

    def solve_direction(self, vec, idx, layout):
        """Exact coordinates of vec in the deformation directions."""
        rows = [list(self.columns[k]) + [vec[k]] for k in range(self.n)]
        ncols = self.d
        pivots = []
        r = 0
        for col in range(ncols):
            piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
            if piv is None:
                continue
            rows[r], rows[piv] = rows[piv], rows[r]
            head = rows[r][col]
            rows[r] = [x / head for x in rows[r]]
            for i in range(len(rows)):
                if i != r and rows[i][col]:
                    f = rows[i][col]
                    rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
            pivots.append(col)
            r += 1
        for i in range(r, len(rows)):
            if rows[i][ncols]:
                raise ResonanceError(
                    f"resonant class of {_monomial_name(idx, layout)} lies "
                    "outside the deformation directions; the frequency "
                    "space does not absorb it")
        out = [0] * ncols
        for row_i, col in enumerate(pivots):
            out[col] = rows[row_i][ncols]
        return out


def _parametric_split(jet, layout, par):
    """Split a jet into solvable classes and the absorbable remainder.

    Returns (nonres, gamma, rep, f_part): ``nonres`` carries the monomials
    with q-exponent != p-exponent; ``gamma[k]`` accumulates, as a
    lambda-polynomial, the coefficient of the class of p_kq_k produced by
    reducing the resonant monomials modulo the square of the shifted-action
    ideal on the zero section; ``rep`` is the plain-monomial representative
    of those classes, and f_part = jet - nonres - rep is absorbable.
    """
    d = layout.lambda_dim
    nonres = {}
    rep = {}
    gamma = [dict() for _ in range(layout.n)]
    for idx, c in jet.coeffs.items():
        qe, pe, le, me = layout.split(idx)
        if qe != pe:
            nonres[idx] = c
            continue
        if sum(qe) == 0:
            continue                    # pure parameter term: absorbable
        if any(me):
            raise ClassMembershipError(
                f"resonant term {_monomial_name(idx, layout)} carries mu; "
                "the zero-section reduction does not flow it (outside the "
                "computable scenario)")
        m = qe
        for k, mk in enumerate(m):
            if not mk:
                continue
            exps = list(m)
            exps[k] -= 1
            poly = _poly_power_product(par.w_forms, exps, d)
            for a, v in poly.items():
                coeff = c * mk * v
                if not coeff:
                    continue
                new = [0] * len(idx)
                new[layout.q_index(k)] = 1
                new[layout.p_index(k)] = 1
                for i, ai in enumerate(a):
                    new[layout.lam_index(i)] = ai + le[i]
                new_idx = tuple(new)
                gkey = tuple(ai + lei for ai, lei in zip(a, le))
                bucket = gamma[k]
                w = bucket.get(gkey, 0) + coeff
                if w:
                    bucket[gkey] = w
                elif gkey in bucket:
                    del bucket[gkey]
                rep[new_idx] = rep.get(new_idx, 0) + coeff
                if not rep[new_idx]:
                    del rep[new_idx]
    nonres_jet = Jet(jet.num_vars, jet.trunc_degree, nonres,
                     blocks=layout.blocks, mode=jet.mode)
    rep_jet = Jet(jet.num_vars, jet.trunc_degree, rep,
                  blocks=layout.blocks, mode=jet.mode)
    f_part = jet - nonres_jet - rep_jet
    return nonres_jet, gamma, rep_jet, f_part


def _gamma_to_mu_coeffs(gamma, layout, par, jet_like):
    """Solve the class coefficients into per-direction lambda-jets."""
    keys = set()
    for bucket in gamma:
        keys.update(bucket)
    if not keys:
        return None
    coeffs = [dict() for _ in range(par.d)]
    zero = Fraction(0) if jet_like.mode == EXACT else 0.0
    for a in sorted(keys):
        if not any(a):
            # Would shift mu by a constant, i.e. move the model's
            # quadratic part itself; b never has degree-2 content.
            raise CertificateError(
                "resonant class at lambda-degree zero: the perturbation "
                "holds quadratic content")
        vec = [bucket.get(a, zero) for bucket in gamma]
        idx = [0] * layout.num_vars
        for i, ai in enumerate(a):
            idx[layout.lam_index(i)] = ai
        sol = par.solve_direction(vec, tuple(idx), layout)
        for i, s in enumerate(sol):
            if s:
                coeffs[i][tuple(idx)] = s
    jets = [Jet(jet_like.num_vars, jet_like.trunc_degree, c,
                blocks=layout.blocks, mode=jet_like.mode) for c in coeffs]
    return jets


# ---------------------------------------------------------------------------
# problem and state
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KamProblem:
    """One normalization run: model ``a``, perturbation ``b``, descriptors.

    ``f_test(qe, pe, le, me)`` recognizes the absorbable monomials F
    (default: two action factors); the supplement G is the coefficient
    complement, and ``g_test`` may additionally be supplied to validate
    the overflow c_n.  ``eigen_freqs`` are the scalars entering the
    divisors (alpha itself when omitted).  The restriction r_n truncates
    to weighted degree base_degree + n.  ``parametric`` carries the
    (lambda, mu) reduction data and is installed by extended_scenario.
    """

    layout: SymplecticLayout
    a: Jet
    b: Jet
    alpha: FrequencyVector = None
    eigen_freqs: tuple = None
    f_test: object = None
    g_test: object = None
    max_stage: int = None
    k_offset: int = 0
    base_degree: int = 3
    divisor_floor: object = None
    s_base: object = None
    parametric: object = None
    verify: bool = True

    def __post_init__(self):
        self.layout.check(self.a)
        self.layout.check(self.b)
        if self.b and self.b.ord() < 3:
            raise OrderTooLowError(
                f"perturbation has order {self.b.ord()} < 3")
        if self.base_degree < 2:
            raise ValueError("base_degree must be >= 2")
        if self.alpha is None and self.eigen_freqs is None:
            raise ValueError("need alpha or eigen_freqs for the divisors")
        if self.alpha is not None and not isinstance(self.alpha,
                                                     FrequencyVector):
            object.__setattr__(self, "alpha", FrequencyVector(self.alpha))


@dataclass(frozen=True, eq=False)
class KamState:
    """Immutable snapshot of one stage of the iteration."""

    stage: int
    a_n: Jet
    b_n: Jet
    alpha_n: Jet
    c_n: Jet
    u_n: object
    ord_b: object
    min_divisor: object
    norm_ledger: dict
    transform: tuple
    success: bool = False

    def to_json_dict(self):
        gen = self.u_n.generator if self.u_n is not None else None
        return {
            "stage": self.stage,
            "ord_b": self.ord_b,
            "min_divisor": _num_json(self.min_divisor),
            "solved_monomials": 0 if gen is None else len(gen.coeffs),
            "mu_corrections": 0 if self.u_n is None
            or self.u_n.mu_coeffs is None else
            sum(1 for a in self.u_n.mu_coeffs if a),
            "norms": {k: _num_json(v) for k, v in self.norm_ledger.items()},
            "success": self.success,
        }


def _norm_ledger(s_base, stage, jets):
    """Sup-norm ledger at the stage radius s_n = s (1 + 3^-n) / 2."""
    exact = all(j.mode == EXACT for j in jets.values() if j is not None)
    if isinstance(s_base, Fraction) and exact:
        s_n = s_base * (1 + Fraction(1, 3 ** stage)) / 2
        sigma_n = s_base / 3 ** (stage + 2)
    else:
        s_f = float(s_base)
        s_n = s_f * (1 + 3.0 ** (-stage)) / 2
        sigma_n = s_f / 3.0 ** (stage + 2)
    ledger = {"s": s_n, "sigma": sigma_n}
    for name, j in jets.items():
        ledger[name] = 0 if j is None else j.sup_norm_bound(s_n)
    return ledger


# ---------------------------------------------------------------------------
# the iteration
# ---------------------------------------------------------------------------

def _stage_solution(target, layout, freqs, floor, exact, f_test, alpha_acc,
                    window, par):
    """Build the stage derivation: generator terms and mu-shift jets."""
    min_div = None

    if par is None:
        solvable = []
        for idx, c in target.terms():
            qe, pe, le, me = layout.split(idx)
            if f_test(qe, pe, le, me):
                continue
            solvable.append((idx, c))
        terms, min_div = _solve_terms(solvable, layout, freqs, floor, exact)
        mu_jets = None
    else:
        nonres, gamma, _, _ = _parametric_split(target, layout, par)
        terms, min_div = _solve_terms(list(nonres.terms()), layout, freqs,
                                      floor, exact)
        mu_jets = _gamma_to_mu_coeffs(gamma, layout, par, target)

    if alpha_acc is not None and alpha_acc and terms:
        gen = Jet(target.num_vars, target.trunc_degree, terms,
                  blocks=layout.blocks, mode=target.mode)
        err = HamiltonianDerivation(gen, layout)(alpha_acc)
        corr_src = []
        for idx, c in err.terms():
            qe, pe, le, me = layout.split(idx)
            if qe == pe or _wdeg(idx, layout) > window:
                continue
            if par is None and f_test(qe, pe, le, me):
                continue
            corr_src.append((idx, c))
        corr, corr_div = _solve_terms(corr_src, layout, freqs, floor, exact)
        for idx, c in corr.items():
            w = terms.get(idx, 0) - c        # solve the negated error
            if w:
                terms[idx] = w
            elif idx in terms:
                del terms[idx]
        if corr_div is not None and (min_div is None or corr_div < min_div):
            min_div = corr_div
    return terms, mu_jets, min_div


def _split_absorbable(rhs, layout, f_test, par):
    """alpha_n (in F) and c_n (the complement) for the stage right side."""
    if par is None:
        alpha_n = rhs.project(
            lambda idx: f_test(*layout.split(idx)))
        return alpha_n, rhs - alpha_n
    nonres, _, rep, f_part = _parametric_split(rhs, layout, par)
    return f_part, nonres + rep


def _clean_float(jet, tol):
    """Drop float coefficients at or below tol (roundoff dust)."""
    if not jet or not tol:
        return jet
    coeffs = {i: c for i, c in jet.coeffs.items() if _abs_mag(c) > tol}
    if len(coeffs) == len(jet.coeffs):
        return jet
    return Jet(jet.num_vars, jet.trunc_degree, coeffs, blocks=jet.blocks,
               mode=jet.mode)


def _relift(jet, N):
    """Restore the truncation grade after a degree-non-decreasing operator.

    Every derivation the engine applies raises plain degree: generators
    have order >= 3 (the bracket adds their degree minus 2) and the
    mu-shift coefficients are constant-free lambda-polynomials (each
    d/dmu application trades a mu for at least one lambda).  Content
    beyond the truncation therefore stays beyond it, so coefficients up
    to N remain exact and the generic grade bookkeeping (derivative
    costs one degree) is over-conservative here.
    """
    return jet if jet.trunc_degree >= N else jet.with_trunc(N)


def _mu_pad(u, f, layout):
    """Grade padding needed to act on f by u without boundary loss.

    Each d/dmu in a Lie-series term removes one mu factor, so chains
    deeper than the maximal mu-degree of f vanish identically; that
    depth bounds how many grades the generic bookkeeping can charge.
    """
    if not u.mu_coeffs or not any(u.mu_coeffs):
        return 0
    return max((sum(layout.split(i)[3]) for i in f.coeffs), default=0)


def _flow(u, f, N, layout):
    """e^{-u} f at ambient truncation N, exact in every degree <= N.

    The derivations here never lower plain degree, but the generic grade
    bookkeeping charges one grade per d/dmu application, and the flow
    would silently drop content sitting at the truncation boundary
    before the grade could be restored.  Padding the grade by the
    mu-chain depth keeps all content of plain degree <= N through the
    series; the result is then cut back to N.
    """
    pad = _mu_pad(u, f, layout)
    out = lie_exp(-u, f.with_trunc(N + pad) if pad else f)
    if out.trunc_degree > N:
        out = out.truncate(N)
    return _relift(out, N)


def _apply(u, f, N, layout):
    """u(f) at ambient truncation N (same grade protection as _flow)."""
    pad = _mu_pad(u, f, layout)
    out = u(f.with_trunc(N + pad) if pad else f)
    if out.trunc_degree > N:
        out = out.truncate(N)
    return _relift(out, N)


def kam_iterate(problem: KamProblem):
    """Run the stage recurrence; returns (final state, full trace).

    Stages run until nothing is left to do -- a stage that solves nothing
    (u_n = 0), overflows nothing (c_n = 0), and whose absorption alpha_n
    accounts exactly for the whole conjugated jet is final -- or until
    max_stage, whichever comes first.  Each stage solves the
    non-absorbable part of b_n inside the window (weighted degree
    base_degree + n) via the quasi-inverse, absorbs the F-part into the
    model with the next restriction, and conjugates by e^{-u_n}.  On
    success the residual of the conjugated jet over the final model is
    verified to lie in F, and (exact mode, when problem.verify) the whole
    conjugation is replayed through coordinate images and composition as
    an independent check.  In float mode coefficients at roundoff scale
    (1e-12 relative to the largest coefficient) are treated as zero;
    exact mode never thresholds.
    """
    lay = problem.layout
    exact = problem.a.mode == EXACT and problem.b.mode == EXACT
    floor = _default_floor(problem.divisor_floor, exact)
    freqs = _effective_freqs(problem.alpha, problem.eigen_freqs)
    f_test = problem.f_test if problem.f_test is not None \
        else _action_square_test
    par = problem.parametric
    N = min(problem.a.trunc_degree, problem.b.trunc_degree)
    wmax = N if lay.lambda_dim == 0 and lay.mu_dim == 0 else 2 * N
    base = problem.base_degree
    # Default stage budget: the window walks to wmax in wmax - base steps
    # and the order of b climbs by at least one per solving stage, so wmax
    # stages always reach the truncation degree.
    max_stage = problem.max_stage if problem.max_stage is not None else wmax
    s_base = problem.s_base if problem.s_base is not None \
        else (Fraction(1, 2) if exact else 0.5)

    a0 = problem.a
    T = a0 + problem.b
    a_cur = a0
    gens = []
    trace = []
    final = None
    prev_solved_ord = None

    def tol():
        if exact:
            return 0
        scale = max((_abs_mag(c) for c in T.coeffs.values()), default=1.0)
        return 1e-12 * max(1.0, scale)

    n = 0
    while True:
        w = base + n
        if n == 0:
            b_n = problem.b
        else:
            b_n = _clean_float(_wtruncate(T, lay, w) - a_cur, tol())
        ord_b = _word(b_n, lay)

        if prev_solved_ord is not None and ord_b is not None \
                and ord_b <= prev_solved_ord:
            raise ConvergenceError(
                f"order of b did not increase after a solving stage "
                f"({prev_solved_ord} -> {ord_b}); the quasi-inverse is "
                "inconsistent with the F/G split")

        target = _wtruncate(b_n, lay, w)
        alpha_acc = a_cur - a0 if n > 0 else None
        terms, mu_jets, min_div = _stage_solution(
            target, lay, freqs, floor, exact, f_test, alpha_acc, w, par)

        gen = Jet(b_n.num_vars, N, terms, blocks=lay.blocks, mode=b_n.mode)
        u_n = HamiltonianDerivation(gen, lay, mu_jets) \
            if (gen or mu_jets) else None
        if u_n is not None and gen:
            gord = _word(gen, lay)
            if gord < n - problem.k_offset:
                raise ConvergenceError(
                    f"stage {n} generator has order {gord} < "
                    f"{n - problem.k_offset}; it left the allowed filtration")

        rhs = b_n - _apply(u_n, a_cur, N, lay) if u_n is not None else b_n
        rhs = _clean_float(rhs, tol())
        alpha_n, c_n = _split_absorbable(rhs, lay, f_test, par)
        if problem.g_test is not None:
            for idx in c_n.coeffs:
                if not problem.g_test(*lay.split(idx)):
                    raise ClassMembershipError(
                        f"overflow term {_monomial_name(idx, lay)} is not "
                        "in the supplement G")

        done = False
        if u_n is None:
            done = not _clean_float(T - a_cur - alpha_n, tol())
        ledger = _norm_ledger(s_base, n, {
            "a": a_cur, "b": b_n, "alpha": alpha_n, "c": c_n,
            "generator": gen if gen else None})
        state = KamState(
            stage=n, a_n=a_cur, b_n=b_n, alpha_n=alpha_n, c_n=c_n, u_n=u_n,
            ord_b=ord_b, min_divisor=min_div, norm_ledger=ledger,
            transform=tuple(gens) + ((u_n,) if u_n is not None else ()),
            success=done)
        trace.append(state)
        final = state
        if done or n == max_stage:
            break

        if u_n is not None:
            split_mu = mu_jets is not None and u_n.generator_touches_mu()
            if split_mu:
                u_gen = HamiltonianDerivation(gen, lay)
                u_mu = HamiltonianDerivation(
                    Jet.zero(b_n.num_vars, N, blocks=lay.blocks,
                             mode=b_n.mode), lay, mu_jets)
                T = _flow(u_mu, _flow(u_gen, T, N, lay), N, lay)
                gens.extend([u_gen, u_mu])
            else:
                T = _flow(u_n, T, N, lay)
                gens.append(u_n)
            T = _clean_float(T, tol())
            if gen and ord_b is not None:
                prev_solved_ord = ord_b
        a_cur = _wtruncate(a_cur + alpha_n, lay, base + n + 1)
        n += 1

    if final.success:
        _check_postconditions(problem, final, T, gens, lay, f_test, par,
                              exact)
    return final, trace


def _normal_form_of(final):
    """The model at success, with the final stage's absorption included."""
    return final.a_n + final.alpha_n


def _check_postconditions(problem, final, T, gens, lay, f_test, par, exact):
    resid = T - _normal_form_of(final)
    if par is None:
        bad = resid.project(lambda idx: not f_test(*lay.split(idx)))
    else:
        nonres, _, rep, _ = _parametric_split(resid, lay, par)
        bad = nonres + rep
    if bad:
        raise CertificateError(
            "conjugacy residual escapes the absorbable set F at "
            f"{sorted(bad.coeffs)[:3]}")
    if problem.verify and exact and gens:
        N = T.trunc_degree
        coords = [lay.q(k, N) for k in range(lay.n)] \
            + [lay.p(k, N) for k in range(lay.n)] \
            + [lay.lam(i, N) for i in range(lay.lambda_dim)] \
            + [lay.mu(i, N) for i in range(lay.mu_dim)]
        images = []
        for z in coords:
            for u in gens:
                z = _flow(u, z, N, lay)
            images.append(z)
        replay = (problem.a + problem.b).compose(images)
        if replay.truncate(T.trunc_degree) != T:
            raise CertificateError(
                "transform replay through coordinate images disagrees "
                "with the iterated conjugation")


# ---------------------------------------------------------------------------
# fiber normalization
# ---------------------------------------------------------------------------

def _morse_frequencies(H, n, layout):
    """Coefficients of p_kq_k in the quadratic part, validating the shape."""
    alpha = [None] * n
    for idx, c in H.degree_slice(2).terms():
        qe, pe, le, me = layout.split(idx)
        if any(le) or any(me) or not (sum(qe) == 1 and qe == pe):
            raise NotEllipticError(
                f"non-action quadratic term at exponent {idx}")
        alpha[qe.index(1)] = c
    for k, c in enumerate(alpha):
        if c is None or not c:
            raise NotEllipticError(f"missing action monomial p_{k}q_{k}")
    return alpha


@dataclass(frozen=True, eq=False)
class FiberResult:
    """Outcome of a fiber normalization run."""

    normalized: Jet
    certificate: object
    transform: tuple
    alpha: object
    eigen_freqs: tuple
    bruno: object
    final: KamState
    trace: tuple
    layout: SymplecticLayout

    def to_json_dict(self):
        return {
            "stages": len(self.trace),
            "ord_trace": [st.ord_b for st in self.trace],
            "certificate": self.certificate.to_json_dict(),
            "bruno": None if self.bruno is None else self.bruno.to_json_dict(),
            "success": self.final.success,
        }


def fiber_normalize(H, alpha=None, coordinate_mode=COMPLEX_MORSE, N=None, *,
                    base_degree=3, max_stage=None, divisor_floor=None,
                    s_base=None, verify=True):
    """Conjugate sum alphat_k p_kq_k + R to the model modulo the ideal square.

    ``H`` is a jet in complex-Morse shape (quadratic part a combination of
    the actions p_kq_k).  ``coordinate_mode`` records where it came from:
    "real-elliptic" means ``alpha`` holds the real frequencies and the
    eigenvalues are 2i alpha; "complex-morse" reads them off the quadratic
    part directly.  The perturbation R = H minus the quadratic part must
    vanish to order 3.  Drives the stage recurrence with the absorbable
    set F = two-action-factor monomials of order >= 3 and returns the
    normalized jet, the applied generators, the exponent-inspection
    certificate that the residual lies in the action-ideal square, and a
    Bruno-sum diagnostic of the frequencies (never a gate).

    Raises ConvergenceError when the stage budget exhausts first.
    """
    if H.num_vars % 2:
        raise ShapeMismatchError("need an even number of (q,p) variables")
    n = H.num_vars // 2
    lay = SymplecticLayout(n)
    if H.blocks is not None and H.blocks != lay.blocks:
        raise ShapeMismatchError("H must be a pure (q,p) jet")
    if N is not None:
        H = H.truncate(N)
    if H.truncate(1):
        raise OrderTooLowError("H must vanish to second order at 0")
    alphat = _morse_frequencies(H, n, lay)
    exact = H.mode == EXACT
    if coordinate_mode == REAL_ELLIPTIC:
        if alpha is None:
            raise ValueError("real-elliptic mode needs the real frequencies")
        alpha = FrequencyVector(alpha)
        two_i = _I * 2 if exact else 2j
        eigen = tuple(two_i * a for a in alpha.components)
    elif coordinate_mode == COMPLEX_MORSE:
        eigen = tuple(alphat)
        if alpha is None:
            try:
                alpha = FrequencyVector(alphat)
            except (TypeError, ValueError):
                alpha = None
    else:
        raise ValueError(f"unknown coordinate mode {coordinate_mode!r}")

    quad = H.degree_slice(2)
    R = H - quad
    problem = KamProblem(
        layout=lay, a=quad, b=R, alpha=alpha, eigen_freqs=eigen,
        base_degree=base_degree, max_stage=max_stage,
        divisor_floor=divisor_floor, s_base=s_base, verify=verify)
    final, trace = kam_iterate(problem)
    if not final.success:
        raise ConvergenceError(
            f"stage budget exhausted at stage {final.stage} with "
            f"ord(b) = {final.ord_b}")
    normalized = _normal_form_of(final)
    cert = action_ideal_certificate(normalized, lay)
    bruno = None
    if alpha is not None:
        try:
            bruno = bruno_diagnostic(sigma(alpha, 4), 4)
        except (BudgetExceededError, ValueError, OverflowError):
            bruno = None
    return FiberResult(
        normalized=normalized, certificate=cert,
        transform=tuple(final.transform), alpha=alpha, eigen_freqs=eigen,
        bruno=bruno, final=final, trace=tuple(trace), layout=lay)


# ---------------------------------------------------------------------------
# the parametric scenario: deformation directions and frequency corrections
# ---------------------------------------------------------------------------

def _extend_jet(jet, layout_ext):
    pad = (0,) * (layout_ext.lambda_dim + layout_ext.mu_dim)
    coeffs = {idx + pad: c for idx, c in jet.coeffs.items()}
    return Jet(layout_ext.num_vars, jet.trunc_degree, coeffs,
               blocks=layout_ext.blocks, mode=jet.mode)


def _lambda_jet(jet, layout):
    """Re-read a lambda-only jet in the lambda variables alone."""
    d = layout.lambda_dim
    coeffs = {}
    for idx, c in jet.coeffs.items():
        qe, pe, le, me = layout.split(idx)
        if any(qe) or any(pe) or any(me):
            raise ShapeMismatchError("jet is not a function of lambda only")
        coeffs[le] = c
    return Jet(d, jet.trunc_degree, coeffs, mode=jet.mode)


def _demote_scalar(c, exact):
    if exact and isinstance(c, ComplexRational):
        return c.re if not c.im else c
    if isinstance(c, complex):
        scale = max(abs(c), 1.0)
        return c.real if abs(c.imag) <= 1e-12 * scale else c
    return c


def _demote_jet(jet, exact):
    return Jet(jet.num_vars, jet.trunc_degree,
               {i: _demote_scalar(c, exact) for i, c in jet.coeffs.items()},
               blocks=jet.blocks, mode=jet.mode)


@dataclass(frozen=True, eq=False)
class ExtendedResult:
    """Normal form with deformation parameters and frequency corrections.

    ``corrections[i]`` is the lambda-jet a_i with the transformed mu_i
    coordinate equal to mu_i - a_i(lambda): on the zero section the model
    frequencies move by sum_i a_i(lambda) e_i, and the Taylor data of that
    correction reproduces the gradient of the Birkhoff polynomial.
    """

    corrections: tuple
    corrected_frequencies: tuple
    g0_model: Jet
    normalized: Jet
    residual: Jet
    transform: tuple
    final: object
    trace: tuple
    layout: SymplecticLayout
    basis: tuple
    reduced_to_fiber: bool = False
    fiber: object = None

    def to_json_dict(self):
        return {
            "directions": len(self.basis),
            "reduced_to_fiber": self.reduced_to_fiber,
            "stages": len(self.trace),
            "corrections": [
                {str(i): _num_json(c) for i, c in corr.coeffs.items()}
                for corr in self.corrections],
            "success": True,
        }


def extended_scenario(H, basis, N=None, *, base_degree=3, divisor_floor=None,
                      max_stage=None, s_base=None, verify=True):
    """Normalize with deformation parameters along frequency directions.

    ``H`` is an EllipticHamiltonian and ``basis`` a tuple of directions
    e_1..e_d in frequency space (length-n vectors).  The model becomes
    sum alphat_k p_kq_k + sum_i mu_i (f, e_i) on a layout extended by d
    lambda and d mu variables; the stage recurrence then solves the
    non-resonant classes by eigenvalue division and absorbs the resonant
    classes into shifts of the mu variables, read on the zero section
    where the action p_kq_k is identified with the lambda-linear form
    sum_i lambda_i e_i[k].  Returns the corrections a_i(lambda), the
    corrected frequency jets, and the normalized jet whose residual is
    absorbable.  With d = 0 the scenario reduces to fiber_normalize.
    """
    if not isinstance(H, EllipticHamiltonian):
        raise TypeError("extended_scenario needs an EllipticHamiltonian")
    basis = tuple(tuple(v) for v in basis)
    n = H.n
    for v in basis:
        if len(v) != n:
            raise ShapeMismatchError(
                f"direction {v} does not have {n} components")
    d = len(basis)
    exact = H.H.mode == EXACT
    hm = to_complex_morse(H.H, H.coordinate_mode)
    if N is not None:
        hm = hm.truncate(N)
    N = hm.trunc_degree

    if d == 0:
        fib = fiber_normalize(hm, H.alpha, H.coordinate_mode,
                              base_degree=base_degree,
                              divisor_floor=divisor_floor,
                              max_stage=max_stage, s_base=s_base,
                              verify=verify)
        base_freq = _base_frequencies(H, exact)
        corrected = tuple(
            Jet(0, N, {(): f}, mode=hm.mode) for f in base_freq)
        return ExtendedResult(
            corrections=(), corrected_frequencies=corrected,
            g0_model=fib.normalized.degree_slice(2), normalized=fib.normalized,
            residual=fib.normalized - fib.normalized.degree_slice(2),
            transform=fib.transform, final=fib.final, trace=fib.trace,
            layout=fib.layout, basis=basis, reduced_to_fiber=True, fiber=fib)

    lay = SymplecticLayout(n, lambda_dim=d, mu_dim=d)
    hm_ext = _extend_jet(hm, lay)
    plain = SymplecticLayout(n)
    alphat = _morse_frequencies(hm, n, plain)

    if H.coordinate_mode == REAL_ELLIPTIC:
        if exact:
            act, model_scale = -_I, _I
        else:
            act, model_scale = -1j, 1j
    else:
        one = Fraction(1) if exact else 1.0
        act = model_scale = one

    w_forms = []
    columns = []
    for k in range(n):
        form = {}
        for i, e in enumerate(basis):
            if e[k]:
                key = tuple(1 if j == i else 0 for j in range(d))
                form[key] = act * e[k]
        w_forms.append(form)
        columns.append(tuple(model_scale * e[k] for e in basis))
    par = _Parametric(tuple(w_forms), tuple(columns), d, n)

    mu_term = {}
    for i, e in enumerate(basis):
        for k, ek in enumerate(e):
            if not ek:
                continue
            idx = [0] * lay.num_vars
            idx[lay.q_index(k)] = 1
            idx[lay.p_index(k)] = 1
            idx[lay.mu_index(i)] = 1
            mu_term[tuple(idx)] = model_scale * ek
    model = hm_ext.degree_slice(2) + Jet(
        lay.num_vars, N, mu_term, blocks=lay.blocks, mode=hm.mode)
    b = hm_ext - hm_ext.degree_slice(2)

    problem = KamProblem(
        layout=lay, a=model, b=b, alpha=H.alpha, eigen_freqs=tuple(alphat),
        base_degree=base_degree, max_stage=max_stage,
        divisor_floor=divisor_floor, s_base=s_base, parametric=par,
        verify=verify)
    final, trace = kam_iterate(problem)
    if not final.success:
        raise ConvergenceError(
            f"stage budget exhausted at stage {final.stage} with "
            f"ord(b) = {final.ord_b}")
    normalized = _normal_form_of(final)

    corrections = []
    for i in range(d):
        total = Jet(d, N, {}, mode=hm.mode)
        for st in trace:
            if st.u_n is not None and st.u_n.mu_coeffs is not None:
                a_i = st.u_n.mu_coeffs[i]
                if a_i:
                    total = total + _lambda_jet(a_i, lay)
        corrections.append(_demote_jet(total, exact))

    base_freq = _base_frequencies(H, exact)
    corrected = []
    for k in range(n):
        jet_k = Jet(d, N, {(0,) * d: base_freq[k]}, mode=hm.mode)
        for i, e in enumerate(basis):
            if e[k]:
                jet_k = jet_k + corrections[i] * e[k]
        corrected.append(_demote_jet(jet_k, exact))

    return ExtendedResult(
        corrections=tuple(corrections), corrected_frequencies=tuple(corrected),
        g0_model=model, normalized=normalized, residual=normalized - model,
        transform=tuple(final.transform), final=final, trace=tuple(trace),
        layout=lay, basis=basis)


def _base_frequencies(H, exact):
    """Unperturbed frequencies in action units (real mode: d/dX_k at 0)."""
    if H.coordinate_mode == REAL_ELLIPTIC:
        return tuple(2 * a for a in H.alpha.components)
    return tuple(H.alpha.components)


# ---------------------------------------------------------------------------
# remainder inequalities for the exponential of a derivation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResteReport:
    """Diagnostic evaluation of the five remainder inequalities.

    Each item holds both sides of one inequality in the weighted-majorant
    norm, with the fitted level-1 bounded constant standing in for the
    operator norm; ``guard`` records the exponentiability condition
    3 N1 <= (tau - s)/2 (noted, never a gate).
    """

    s: object
    tau: object
    n_hat: object
    guard: dict
    items: tuple

    @property
    def all_ok(self):
        return all(item["ok"] for item in self.items)

    def to_json_dict(self):
        def conv(v):
            return {k: _num_json(x) if not isinstance(x, (bool, str)) else x
                    for k, x in v.items()}
        return {"s": _num_json(self.s), "tau": _num_json(self.tau),
                "n_hat": _num_json(self.n_hat), "guard": conv(self.guard),
                "items": [conv(i) for i in self.items]}


def reste_inequalities_check(u, x, s, tau, *, basis_degree=5, grid_size=3,
                             n_hat=None):
    """Evaluate the five remainder inequalities for e^{±u} on x at (s, tau).

    Left sides are exact jet computations; right sides use |x| and |u(x)|
    at radius tau together with the fitted level-1 constant N1 of u
    (supplied as ``n_hat`` or fitted on the spot).  The constants are
    36/(tau-s)^2 N1^2, 2/(tau-s) N1, 6/(tau-s) N1, 2, and 2.  Reports
    pass/fail and margins; diagnostic only.
    """
    from .scalednorms import fit_bounded_constant

    if isinstance(s, float) or isinstance(tau, float):
        s, tau = float(s), float(tau)
    else:
        s, tau = Fraction(s), Fraction(tau)
    if not (0 < s < tau):
        raise ValueError("need 0 < s < tau")
    if n_hat is None:
        n_hat = fit_bounded_constant(
            u, 1, tau, basis_degree, grid_size, num_vars=x.num_vars,
            blocks=x.blocks).N_hat

    ux = u(x)
    exp_minus = lie_exp(-u, x)
    reste2 = lie_exp(-u, x + ux) - x
    exp_plus = lie_exp(u, x)

    x_tau = x.sup_norm_bound(tau)
    ux_tau = ux.sup_norm_bound(tau)
    gap = tau - s

    checks = [
        ("remainder_two_terms_vs_x", reste2.sup_norm_bound(s),
         36 * x_tau / gap ** 2 * n_hat ** 2),
        ("remainder_two_terms_vs_ux", reste2.sup_norm_bound(s),
         2 * ux_tau / gap * n_hat),
        ("remainder_one_term_vs_x", (exp_minus - x).sup_norm_bound(s),
         6 * x_tau / gap * n_hat),
        ("remainder_one_term_vs_ux", (exp_minus - x).sup_norm_bound(s),
         2 * ux_tau),
        ("exp_bounded", exp_plus.sup_norm_bound(s), 2 * x_tau),
    ]
    items = []
    for name, lhs, rhs in checks:
        items.append({"name": name, "lhs": lhs, "rhs": rhs,
                      "ok": lhs <= rhs, "margin": rhs - lhs})
    guard_lhs = 3 * n_hat
    guard_rhs = gap / 2
    guard = {"lhs": guard_lhs, "rhs": guard_rhs, "ok": guard_lhs <= guard_rhs}
    return ResteReport(s=s, tau=tau, n_hat=n_hat, guard=guard,
                       items=tuple(items))
