"""Birkhoff normalization near an elliptic equilibrium.

Near a nondegenerate elliptic critical point a Hamiltonian jet can be
normalized degree by degree: every non-resonant monomial of degree d is
cancelled by the time-one flow of a generator obtained by dividing its
coefficient by the eigenvalue of the monomial under the bracket with the
quadratic part.  What survives is a polynomial A in the n action variables
(the Birkhoff polynomial), unique even though the generators are not.

Internally everything runs in complex-Morse coordinates, where the
quadratic part is sum_k alphat_k P_k Q_k and the bracket acts diagonally on
monomials.  Real-elliptic input sum_k alpha_k (p_k^2 + q_k^2) is converted
by the exact linear symplectic substitution

    q_k = Q_k + (i/2) P_k,      p_k = i Q_k + (1/2) P_k,

which sends p_k^2 + q_k^2 to 2i Q_k P_k (so alphat = 2i alpha), and the
resonant monomials (QP)^m are transported back to real action monomials via
(QP)^m = (-i)^{|m|} X^m with X_k = (p_k^2 + q_k^2)/2.  All of this is exact
in rational mode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .arithmetic import FrequencyVector
from .errors import (
    CertificateError,
    NotEllipticError,
    OrderTooLowError,
    ResonanceError,
    ShapeMismatchError,
    SmallDivisorError,
)
from .jets import EXACT, ComplexRational, Jet, graded_lex_key
from .poisson import (
    HamiltonianDerivation,
    SymplecticLayout,
    ad_eigenvalue,
    exp_product,
    lie_exp,
)

REAL_ELLIPTIC = "real-elliptic"
COMPLEX_MORSE = "complex-morse"

_I = ComplexRational(0, 1)


def morse_substitution(n, trunc, mode=EXACT):
    """Images of (q_1..q_n, p_1..p_n) under the complexifying substitution.

    Returns 2n linear jets over the Morse coordinates (Q, P):
    q_k = Q_k + (i/2) P_k and p_k = i Q_k + (1/2) P_k.  The substitution is
    symplectic: {q_k, p_k} = 1 in the (Q, P) bracket.
    """
    lay = SymplecticLayout(n)
    if mode == EXACT:
        c_i, c_half_i, c_half = _I, _I / 2, Fraction(1, 2)
        var = lambda kind, k: getattr(lay, kind)(k, trunc)
    else:
        c_i, c_half_i, c_half = 1j, 0.5j, 0.5
        var = lambda kind, k: getattr(lay, kind)(k, trunc).to_float()
    qs = [var("q", k) + var("p", k).scale(c_half_i) for k in range(n)]
    ps = [var("q", k).scale(c_i) + var("p", k).scale(c_half) for k in range(n)]
    return qs + ps


def inverse_morse_substitution(n, trunc, mode=EXACT):
    """Images of (Q, P) in terms of (q, p): Q_k = (q_k - i p_k)/2, P_k = p_k - i q_k."""
    lay = SymplecticLayout(n)
    if mode == EXACT:
        c_half, c_mhalf_i, c_mi = Fraction(1, 2), -(_I / 2), -_I
        var = lambda kind, k: getattr(lay, kind)(k, trunc)
    else:
        c_half, c_mhalf_i, c_mi = 0.5, -0.5j, -1j
        var = lambda kind, k: getattr(lay, kind)(k, trunc).to_float()
    qs = [var("q", k).scale(c_half) + var("p", k).scale(c_mhalf_i)
          for k in range(n)]
    ps = [var("q", k).scale(c_mi) + var("p", k) for k in range(n)]
    return qs + ps


def _close(a, b, exact):
    if exact:
        return a == b
    fa, fb = complex(a), complex(b)
    return abs(fa - fb) <= 1e-9 * max(1.0, abs(fa), abs(fb))


def _extract_frequencies(H, n, mode):
    """Frequencies of the quadratic part, validating the mode's exact shape."""
    lay = SymplecticLayout(n)
    exact = H.mode == EXACT
    quad = H.degree_slice(2)
    alpha = [None] * n
    for idx, c in quad.terms():
        qe, pe, _, _ = lay.split(idx)
        if mode == REAL_ELLIPTIC:
            if sum(qe) == 2 and max(qe) == 2:
                k, kind = qe.index(2), "q"
            elif sum(pe) == 2 and max(pe) == 2:
                k, kind = pe.index(2), "p"
            else:
                raise NotEllipticError(
                    f"cross term {H.var_names()} {idx} in quadratic part")
            if alpha[k] is None:
                alpha[k] = [None, None]
            alpha[k][0 if kind == "q" else 1] = c
        else:
            if not (sum(qe) == 1 and qe == pe):
                raise NotEllipticError(
                    f"non-action quadratic term at exponent {idx}")
            alpha[qe.index(1)] = c
    if mode == REAL_ELLIPTIC:
        out = []
        for k, pair in enumerate(alpha):
            if pair is None or pair[0] is None or pair[1] is None \
                    or not _close(pair[0], pair[1], exact) or not pair[0]:
                raise NotEllipticError(
                    f"quadratic part is not sum a_k (p_k^2 + q_k^2) at k={k}")
            out.append(pair[0])
        return out
    for k, c in enumerate(alpha):
        if c is None or not c:
            raise NotEllipticError(f"missing action monomial p_{k}q_{k}")
    return alpha


def to_complex_morse(H, mode=REAL_ELLIPTIC):
    """Rewrite a (q,p)-jet in complex-Morse coordinates.

    For real-elliptic input the quadratic part sum a_k (p_k^2+q_k^2) becomes
    sum 2i*a_k P_kQ_k and every other term is transported by the same linear
    substitution (`morse_substitution`, which is the recorded map).  Input
    already in complex-Morse form is returned unchanged.
    """
    if H.num_vars % 2:
        raise ShapeMismatchError("need an even number of (q,p) variables")
    n = H.num_vars // 2
    _extract_frequencies(H, n, mode)   # validates ellipticity
    if mode == COMPLEX_MORSE:
        return H
    sub = morse_substitution(n, H.trunc_degree, mode=H.mode)
    return H.compose(sub)


class EllipticHamiltonian:
    """A Hamiltonian jet with elliptic quadratic part and no lower terms.

    coordinate_mode "real-elliptic" means the quadratic part is exactly
    sum_k alpha_k (p_k^2 + q_k^2); "complex-morse" means sum_k alpha_k p_kq_k.
    In both cases alpha collects the nonzero frequencies and
    ord(H - quadratic) >= 3.
    """

    def __init__(self, H, coordinate_mode=REAL_ELLIPTIC):
        if coordinate_mode not in (REAL_ELLIPTIC, COMPLEX_MORSE):
            raise ValueError(f"unknown coordinate mode {coordinate_mode!r}")
        if H.num_vars % 2:
            raise ShapeMismatchError("need an even number of (q,p) variables")
        n = H.num_vars // 2
        lay = SymplecticLayout(n)
        if H.blocks is not None and H.blocks != lay.blocks:
            raise ShapeMismatchError("H must be a pure (q,p) jet")
        if H and H.ord() < 2:
            raise OrderTooLowError("H must vanish to second order at 0")
        alpha = _extract_frequencies(H, n, coordinate_mode)
        self.H = Jet(H.num_vars, H.trunc_degree, H.coeffs, blocks=lay.blocks,
                     mode=H.mode)
        self.alpha = FrequencyVector(alpha)
        self.coordinate_mode = coordinate_mode
        self.n = n
        self.layout = lay

    def __repr__(self):
        return (f"EllipticHamiltonian(n={self.n}, mode={self.coordinate_mode!r}, "
                f"alpha={self.alpha!r})")


def _abs_below(value, floor, exact):
    if exact and floor == 0:
        return not value
    if isinstance(value, ComplexRational):
        return value.abs2() <= Fraction(floor) ** 2
    return abs(complex(value)) <= floor


@dataclass(frozen=True)
class BirkhoffResult:
    """Normal form of an elliptic Hamiltonian to order 2l.

    A is the Birkhoff polynomial in the n action variables (real actions
    X_k = (p_k^2+q_k^2)/2 for real-elliptic input, X_k = p_kq_k for
    complex-Morse input).  generators hold the per-degree normalizing
    derivations in Morse coordinates, in application order; residual is
    what is left of the transformed Morse Hamiltonian beyond the resonant
    part, of order > 2l.
    """

    A: Jet
    generators: tuple
    residual: Jet
    achieved_order: int
    a_morse: Jet
    input_morse: Jet
    normal_morse: Jet
    coordinate_mode: str
    alpha: FrequencyVector
    layout: SymplecticLayout

    def coordinate_images(self, trunc=None):
        """Images of the Morse coordinates under the normalizing transform."""
        t = self.input_morse.trunc_degree if trunc is None else trunc
        lay = self.layout
        coords = [lay.q(k, t) for k in range(lay.n)] + \
                 [lay.p(k, t) for k in range(lay.n)]
        if self.input_morse.mode != EXACT:
            coords = [z.to_float() for z in coords]
        return [exp_product(self.generators, z) for z in coords]

    def action_jets(self):
        """The Morse action monomials Y_k = Q_k P_k."""
        lay, t = self.layout, self.input_morse.trunc_degree
        out = [lay.q(k, t) * lay.p(k, t) for k in range(lay.n)]
        if self.input_morse.mode != EXACT:
            out = [y.to_float() for y in out]
        return out

    def conjugacy_defect(self):
        """H_morse o (transform images) - a_morse(actions); ord > 2l on success."""
        transformed = self.input_morse.compose(self.coordinate_images())
        normal = self.a_morse.compose(self.action_jets())
        return transformed - normal

    def to_json_dict(self):
        return {
            "achieved_order": self.achieved_order,
            "coordinate_mode": self.coordinate_mode,
            "alpha": [str(a) if isinstance(a, Fraction) else a
                      for a in self.alpha.components],
            "A": self.A.to_json_dict(),
            "generator_count": len(self.generators),
            "generator_orders": [g.generator.ord() for g in self.generators],
            "residual_order": self.residual.ord(),
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def birkhoff_normalize(H, l, divisor_floor=None, strategy="per-degree"):
    """Normalize an EllipticHamiltonian to order 2l.

    For each degree d = 3..2l the non-resonant monomials (q-exponent !=
    p-exponent) of the current Hamiltonian are cancelled by the flow of a
    generator with coefficients c/(alphat, i-j); resonant monomials
    accumulate into the Birkhoff polynomial A.  strategy "per-degree" uses
    one generator per degree, "per-monomial" one flow per monomial — A must
    not depend on the choice.

    divisor_floor: a non-resonant divisor |(alphat, i-j)| at or below this
    triggers SmallDivisorError; the default is exact-zero testing in
    rational mode (only a true resonance aborts) and 1e-12 in float mode.
    """
    if not isinstance(H, EllipticHamiltonian):
        raise TypeError("birkhoff_normalize needs an EllipticHamiltonian")
    if strategy not in ("per-degree", "per-monomial"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if l < 1:
        raise ValueError("l must be >= 1")
    N = H.H.trunc_degree
    if 2 * l > N:
        raise OrderTooLowError(
            f"truncation degree {N} cannot certify order {2 * l}")
    lay = H.layout
    exact = H.H.mode == EXACT
    if divisor_floor is None:
        divisor_floor = 0 if exact else 1e-12

    if H.coordinate_mode == REAL_ELLIPTIC:
        hm = to_complex_morse(H.H, REAL_ELLIPTIC)
        two_i = _I * 2 if exact else 2j
        alphat = [two_i * a for a in H.alpha.components]
    else:
        hm = H.H
        alphat = list(H.alpha.components)
    input_morse = hm

    gens = []
    for d in range(3, 2 * l + 1):
        part = hm.degree_slice(d)
        chi_terms = {}
        for idx, c in part.terms():
            qe, pe, _, _ = lay.split(idx)
            if qe == pe:
                continue
            lam = ad_eigenvalue(alphat, qe, pe)
            if exact and not lam:
                raise ResonanceError(
                    f"(alpha, i-j) = 0 at non-resonant exponent {idx}")
            if divisor_floor and _abs_below(lam, divisor_floor, exact):
                raise SmallDivisorError(
                    f"divisor |(alpha, i-j)| = {abs(complex(lam))} at "
                    f"exponent {idx} is at or below the floor {divisor_floor}")
            chi_terms[idx] = c / lam
        if strategy == "per-degree":
            groups = [chi_terms] if chi_terms else []
        else:
            groups = [{idx: chi_terms[idx]}
                      for idx in sorted(chi_terms, key=graded_lex_key)]
        for terms in groups:
            u = HamiltonianDerivation(
                Jet(2 * lay.n, N, terms, blocks=lay.blocks, mode=hm.mode), lay)
            hm = lie_exp(u, hm)
            gens.append(u)
        if exact:
            for idx, _ in hm.drop_below(3).truncate(d).terms():
                qe, pe, _, _ = lay.split(idx)
                if qe != pe:
                    raise CertificateError(
                        f"normalization left non-resonant exponent {idx} "
                        f"at degree <= {d}")

    resonant = {}
    for idx, c in hm.terms():
        qe, pe, _, _ = lay.split(idx)
        if qe == pe and sum(idx) <= 2 * l:
            resonant[idx] = c
    a_morse = Jet(lay.n, l,
                  {lay.split(idx)[0]: c for idx, c in resonant.items()},
                  mode=hm.mode)
    normal_part = Jet(2 * lay.n, N, resonant, blocks=lay.blocks, mode=hm.mode)
    residual = hm - normal_part
    if residual and residual.ord() <= 2 * l:
        raise CertificateError(
            f"residual has order {residual.ord()} <= {2 * l}")

    if H.coordinate_mode == REAL_ELLIPTIC:
        transported = {}
        for m, c in a_morse.coeffs.items():
            if exact:
                transported[m] = c * (-_I) ** sum(m)
            else:
                v = complex(c) * (-1j) ** sum(m)
                transported[m] = v.real if abs(v.imag) <= 1e-12 * abs(v) else v
        a = Jet(lay.n, l, transported, mode=a_morse.mode)
        if exact and any(isinstance(c, ComplexRational)
                         for c in a.coeffs.values()):
            raise CertificateError(
                "transported Birkhoff polynomial is not real")
    else:
        a = a_morse

    return BirkhoffResult(
        A=a, generators=tuple(gens), residual=residual, achieved_order=2 * l,
        a_morse=a_morse, input_morse=input_morse, normal_morse=hm,
        coordinate_mode=H.coordinate_mode, alpha=H.alpha, layout=lay)


# ---------------------------------------------------------------------------
# frequency map and frequency space
# ---------------------------------------------------------------------------

def frequency_map(A):
    """Gradient of the Birkhoff polynomial: one jet per action variable."""
    return tuple(A.derivative(k) for k in range(A.num_vars))


def _rref(rows):
    """Reduced row echelon form over an exact field; returns nonzero rows."""
    rows = [list(r) for r in rows]
    if not rows:
        return []
    ncols = len(rows[0])
    pivot_row = 0
    for col in range(ncols):
        pivot = next((r for r in range(pivot_row, len(rows)) if rows[r][col]),
                     None)
        if pivot is None:
            continue
        rows[pivot_row], rows[pivot] = rows[pivot], rows[pivot_row]
        pv = rows[pivot_row][col]
        rows[pivot_row] = [x / pv for x in rows[pivot_row]]
        for r in range(len(rows)):
            if r != pivot_row and rows[r][col]:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[pivot_row])]
        pivot_row += 1
        if pivot_row == len(rows):
            break
    return [tuple(r) for r in rows if any(r)]


@dataclass(frozen=True)
class FrequencySpace:
    """Affine span of the image of the frequency map: base + span(basis)."""

    base: tuple
    basis: tuple
    dim: int
    order: int

    def to_json_dict(self):
        def num(x):
            return str(x) if isinstance(x, Fraction) else x
        return {
            "base": [num(b) for b in self.base],
            "basis": [[num(x) for x in row] for row in self.basis],
            "dim": self.dim,
            "order": self.order,
        }


def frequency_space(H, l, divisor_floor=None):
    """Smallest affine space containing the image of the order-l frequency map.

    Computed as grad A(0) plus the span of the coefficient vectors of the
    nonconstant part of grad A, with the basis in reduced echelon form.
    """
    res = birkhoff_normalize(H, l, divisor_floor=divisor_floor)
    grads = frequency_map(res.A)
    n = res.A.num_vars
    zero = (0,) * n
    base = tuple(g.coeffs.get(zero, Fraction(0) if g.mode == EXACT else 0.0)
                 for g in grads)
    monomials = sorted({m for g in grads for m in g.coeffs if sum(m) > 0},
                       key=graded_lex_key)
    rows = []
    for m in monomials:
        zero_c = Fraction(0) if res.A.mode == EXACT else 0.0
        rows.append([g.coeffs.get(m, zero_c) for g in grads])
    basis = tuple(_rref(rows))
    return FrequencySpace(base=base, basis=basis, dim=len(basis), order=l)


# ---------------------------------------------------------------------------
# prenormal form: H = quadratic + R with R in the square of the action ideal
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionIdealCertificate:
    """Exponent-inspection certificate that R lies in the action ideal squared.

    A monomial q^i p^j belongs to the square of the ideal generated by the
    actions p_kq_k exactly when sum_k min(i_k, j_k) >= 2.  The certificate
    checks every non-quadratic-model monomial; ok=False names the first
    offender in graded-lex order.
    """

    ok: bool
    offending: tuple = None
    message: str = ""

    def to_json_dict(self):
        return {"ok": self.ok,
                "offending": None if self.offending is None
                else list(self.offending),
                "message": self.message}


def action_ideal_certificate(H, layout=None):
    """Check that every monomial beyond sum a_k p_kq_k has two action factors."""
    lay = layout or SymplecticLayout(H.num_vars // 2)
    for idx in sorted(H.coeffs, key=graded_lex_key):
        qe, pe, le, me = lay.split(idx)
        if qe == pe and sum(qe) == 1 and not any(le) and not any(me):
            continue    # the quadratic model itself
        if sum(min(a, b) for a, b in zip(qe, pe)) < 2:
            name = _monomial_name(idx, lay)
            return ActionIdealCertificate(
                ok=False, offending=idx,
                message=f"monomial {name} is not in the action ideal squared")
    return ActionIdealCertificate(ok=True)


def _monomial_name(idx, lay):
    parts = []
    names = Jet(len(idx), 1, blocks=lay.blocks).var_names()
    for name, e in zip(names, idx):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts) or "1"


def prenormal_form(H, k, divisor_floor=None):
    """Normalize to order 2k, then push the non-action tail into the ideal square.

    Returns (H', certificate) where H' = sum alphat_k P_kQ_k + R in Morse
    coordinates with R certified inside the square of the action ideal up
    to the jet truncation: the Birkhoff stage makes R start with resonant
    (hence action-squared) terms up to order 2k, and the fiber stage of
    `kamengine` removes the remaining transverse tail degree by degree.
    k should be large enough that the frequency map already spans the
    frequency space.
    """
    from .kamengine import fiber_normalize

    res = birkhoff_normalize(H, k, divisor_floor=divisor_floor)
    fib = fiber_normalize(res.normal_morse, res.alpha, res.coordinate_mode,
                          divisor_floor=divisor_floor)
    cert = action_ideal_certificate(fib.normalized, res.layout)
    if not cert.ok:
        raise CertificateError(cert.message)
    return fib.normalized, cert
