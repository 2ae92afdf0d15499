"""Truncated multivariate power series (jets) with exact or float coefficients.

A Jet is a polynomial in m variables, truncated at total degree N, stored as
a sparse map from exponent tuples to coefficients.  Two numeric modes exist:
"exact" (int / Fraction / ComplexRational coefficients) and "float"
(float / complex).  A computation never mixes modes; converting is explicit
via to_float().

Variables may carry block labels (e.g. q/p/lam/mu) so that callers working
with symplectic coordinates can keep track of which slot is which; the ring
operations themselves never look inside the blocks beyond checking equality.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from types import MappingProxyType

from .errors import ModeMixError, OrderTooLowError, ShapeMismatchError

__all__ = ["ComplexRational", "Jet", "graded_lex_key"]


class ComplexRational:
    """Gaussian rational a + b·i with Fraction real and imaginary parts.

    Only exact inputs (int, Fraction, ComplexRational) are accepted;
    mixing with floats raises instead of silently losing exactness.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _as_fraction(re)
        self.im = _as_fraction(im)

    # --- ring structure -------------------------------------------------

    def __add__(self, other):
        other = _as_cr(other)
        if other is NotImplemented:
            return NotImplemented
        return ComplexRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_cr(other)
        if other is NotImplemented:
            return NotImplemented
        return ComplexRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _as_cr(other)
        if other is NotImplemented:
            return NotImplemented
        return ComplexRational(other.re - self.re, other.im - self.im)

    def __mul__(self, other):
        other = _as_cr(other)
        if other is NotImplemented:
            return NotImplemented
        return ComplexRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_cr(other)
        if other is NotImplemented:
            return NotImplemented
        d = other.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero ComplexRational")
        return ComplexRational(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def __rtruediv__(self, other):
        other = _as_cr(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = ComplexRational(1)
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # --- structure ------------------------------------------------------

    def conjugate(self):
        return ComplexRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        """Exact squared modulus."""
        return self.re * self.re + self.im * self.im

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def __eq__(self, other):
        if isinstance(other, ComplexRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, complex):
            return complex(self) == other
        if isinstance(other, float):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ComplexRational({self.re!r}, {self.im!r})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        imag = f"{self.im}j" if self.im < 0 else f"+{self.im}j"
        if self.re == 0:
            return f"{self.im}j"
        return f"{self.re}{imag}"

    @classmethod
    def parse(cls, text: str) -> "ComplexRational":
        s = text.strip().replace(" ", "")
        if not s:
            raise ValueError("empty ComplexRational literal")
        if not s.endswith("j"):
            return cls(Fraction(s))
        body = s[:-1]
        # find the sign separating real and imaginary parts (not the leading one)
        split = -1
        for k in range(1, len(body)):
            if body[k] in "+-" and body[k - 1] not in "/+-":
                split = k
        if split < 0:
            if body in ("", "+"):
                return cls(0, 1)
            if body == "-":
                return cls(0, -1)
            return cls(0, Fraction(body))
        re_part = Fraction(body[:split])
        im_text = body[split:]
        if im_text in ("+", "-"):
            im_text += "1"
        return cls(re_part, Fraction(im_text))


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise ModeMixError(
        f"exact arithmetic needs int or Fraction parts, got {type(x).__name__}"
    )


def _as_cr(x):
    if isinstance(x, ComplexRational):
        return x
    if isinstance(x, (int, Fraction)):
        return ComplexRational(x)
    return NotImplemented


# ---------------------------------------------------------------------------
# coefficient coercion / mode detection
# ---------------------------------------------------------------------------

EXACT = "exact"
FLOAT = "float"


def _coerce(value, mode):
    """Normalize a raw coefficient to the canonical type of the given mode."""
    if mode == EXACT:
        if isinstance(value, ComplexRational):
            return value.re if value.im == 0 else value
        if isinstance(value, Fraction):
            return value
        if isinstance(value, int):
            return Fraction(value)
        raise ModeMixError(
            f"coefficient {value!r} is not exact; build the jet in float mode "
            "or convert inputs to Fraction/ComplexRational"
        )
    if isinstance(value, complex):
        return value.real if value.imag == 0.0 else value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (Fraction, ComplexRational)):
        raise ModeMixError(
            f"coefficient {value!r} is exact; float-mode jets take float/complex"
        )
    raise ModeMixError(f"unsupported coefficient type {type(value).__name__}")


def _detect_mode(values):
    mode = None
    for v in values:
        if isinstance(v, (Fraction, ComplexRational)):
            got = EXACT
        elif isinstance(v, bool):
            raise ModeMixError("bool is not a coefficient")
        elif isinstance(v, int):
            continue
        elif isinstance(v, (float, complex)):
            got = FLOAT
        else:
            raise ModeMixError(f"unsupported coefficient type {type(v).__name__}")
        if mode is None:
            mode = got
        elif mode != got:
            raise ModeMixError("cannot mix exact and float coefficients in one jet")
    return mode if mode is not None else EXACT


def _scalar_mode(value):
    if isinstance(value, (Fraction, ComplexRational)):
        return EXACT
    if isinstance(value, int):
        return None  # fits either mode
    if isinstance(value, (float, complex)):
        return FLOAT
    raise ModeMixError(f"unsupported scalar type {type(value).__name__}")


def graded_lex_key(idx):
    """Sort key: total degree first, then lexicographic on exponents."""
    return (sum(idx), idx)


class Jet:
    """Sparse truncated power series in num_vars variables.

    coeffs maps exponent tuples to nonzero coefficients; every stored index
    has total degree <= trunc_degree.  Instances are immutable.
    """

    __slots__ = ("num_vars", "trunc_degree", "_coeffs", "mode", "blocks")

    def __init__(self, num_vars, trunc_degree, coeffs=None, blocks=None, mode=None):
        if num_vars < 0 or trunc_degree < 0:
            raise ShapeMismatchError("num_vars and trunc_degree must be >= 0")
        if blocks is not None:
            blocks = tuple((str(name), int(size)) for name, size in blocks)
            if sum(size for _, size in blocks) != num_vars:
                raise ShapeMismatchError(
                    f"block sizes {blocks} do not sum to num_vars={num_vars}"
                )
        raw = dict(coeffs) if coeffs else {}
        if mode is None:
            mode = _detect_mode(raw.values())
        elif mode not in (EXACT, FLOAT):
            raise ValueError(f"mode must be {EXACT!r} or {FLOAT!r}")
        clean = {}
        for idx, value in raw.items():
            idx = tuple(int(e) for e in idx)
            if len(idx) != num_vars:
                raise ShapeMismatchError(
                    f"exponent tuple {idx} has length {len(idx)}, expected {num_vars}"
                )
            if any(e < 0 for e in idx):
                raise ShapeMismatchError(f"negative exponent in {idx}")
            if sum(idx) > trunc_degree:
                continue
            value = _coerce(value, mode)
            if value == 0 or (isinstance(value, ComplexRational) and not value):
                continue
            clean[idx] = value
        object.__setattr__(self, "num_vars", int(num_vars))
        object.__setattr__(self, "trunc_degree", int(trunc_degree))
        object.__setattr__(self, "_coeffs", clean)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "blocks", blocks)

    def __setattr__(self, name, value):
        raise AttributeError("Jet instances are immutable")

    # --- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, num_vars, trunc_degree, blocks=None, mode=EXACT):
        return cls(num_vars, trunc_degree, {}, blocks=blocks, mode=mode)

    @classmethod
    def constant(cls, value, num_vars, trunc_degree, blocks=None, mode=None):
        idx = (0,) * num_vars
        return cls(num_vars, trunc_degree, {idx: value}, blocks=blocks, mode=mode)

    @classmethod
    def variable(cls, which, num_vars, trunc_degree, blocks=None, mode=EXACT):
        if not (0 <= which < num_vars):
            raise ShapeMismatchError(f"variable index {which} out of range")
        idx = tuple(1 if k == which else 0 for k in range(num_vars))
        one = 1 if mode == EXACT else 1.0
        return cls(num_vars, trunc_degree, {idx: one}, blocks=blocks, mode=mode)

    @classmethod
    def ones(cls, num_vars, trunc_degree, blocks=None, mode=EXACT):
        """All coefficients 1 up to the truncation degree (Hadamard unit)."""
        one = 1 if mode == EXACT else 1.0
        coeffs = {
            idx: one for idx in _all_indices(num_vars, trunc_degree)
        }
        return cls(num_vars, trunc_degree, coeffs, blocks=blocks, mode=mode)

    @classmethod
    def from_terms(cls, num_vars, trunc_degree, terms, blocks=None, mode=None):
        """terms: iterable of (exponent tuple, coefficient)."""
        acc = {}
        for idx, value in terms:
            idx = tuple(idx)
            acc[idx] = acc.get(idx, 0) + value
        return cls(num_vars, trunc_degree, acc, blocks=blocks, mode=mode)

    # --- inspection -------------------------------------------------------

    @property
    def coeffs(self):
        return MappingProxyType(self._coeffs)

    def __len__(self):
        return len(self._coeffs)

    def __bool__(self):
        return bool(self._coeffs)

    def __getitem__(self, idx):
        idx = tuple(idx)
        zero = Fraction(0) if self.mode == EXACT else 0.0
        return self._coeffs.get(idx, zero)

    def terms(self):
        """Yield (index, coefficient) in graded-lex order."""
        for idx in sorted(self._coeffs, key=graded_lex_key):
            yield idx, self._coeffs[idx]

    def ord(self):
        """Smallest total degree with a nonzero coefficient.

        The zero jet returns trunc_degree + 1, a sentinel meaning
        "order beyond the truncation".
        """
        if not self._coeffs:
            return self.trunc_degree + 1
        return min(sum(idx) for idx in self._coeffs)

    def max_degree(self):
        if not self._coeffs:
            return 0
        return max(sum(idx) for idx in self._coeffs)

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.num_vars == other.num_vars and self._coeffs == other._coeffs

    # --- shape helpers ----------------------------------------------------

    def _check_like(self, other):
        if self.num_vars != other.num_vars:
            raise ShapeMismatchError(
                f"jets in {self.num_vars} and {other.num_vars} variables"
            )
        if self.blocks is not None and other.blocks is not None:
            if self.blocks != other.blocks:
                raise ShapeMismatchError(
                    f"block structures differ: {self.blocks} vs {other.blocks}"
                )
        if self.mode != other.mode:
            if not self._coeffs or not other._coeffs:
                pass  # a zero jet adapts to the other operand's mode
            else:
                raise ModeMixError(
                    "exact and float jets cannot be combined; call to_float()"
                )

    def _join(self, other):
        self._check_like(other)
        mode = self.mode
        if not self._coeffs and other._coeffs:
            mode = other.mode
        blocks = self.blocks if self.blocks is not None else other.blocks
        return min(self.trunc_degree, other.trunc_degree), blocks, mode

    def _like(self, coeffs, trunc=None, mode=None, blocks=None):
        return Jet(
            self.num_vars,
            self.trunc_degree if trunc is None else trunc,
            coeffs,
            blocks=self.blocks if blocks is None else blocks,
            mode=self.mode if mode is None else mode,
        )

    # --- ring operations ----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Jet):
            sm = _scalar_mode(other)
            if sm is not None and sm != self.mode and self._coeffs:
                raise ModeMixError(f"cannot add {other!r} to a {self.mode} jet")
            other = Jet.constant(other, self.num_vars, self.trunc_degree,
                                 blocks=self.blocks, mode=sm or self.mode)
        trunc, blocks, mode = self._join(other)
        acc = dict(self._coeffs)
        for idx, value in other._coeffs.items():
            cur = acc.get(idx)
            acc[idx] = value if cur is None else cur + value
        return Jet(self.num_vars, trunc, acc, blocks=blocks, mode=mode)

    __radd__ = __add__

    def __sub__(self, other):
        return self.__add__(-other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return self._like({idx: -value for idx, value in self._coeffs.items()})

    def scale(self, scalar):
        sm = _scalar_mode(scalar)
        if sm is not None and sm != self.mode and self._coeffs:
            raise ModeMixError(f"cannot scale a {self.mode} jet by {scalar!r}")
        if scalar == 0:
            return self._like({})
        return self._like({idx: value * scalar for idx, value in self._coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        trunc, blocks, mode = self._join(other)
        acc = {}
        for i, a in self._coeffs.items():
            di = sum(i)
            for j, b in other._coeffs.items():
                if di + sum(j) > trunc:
                    continue
                k = tuple(x + y for x, y in zip(i, j))
                ab = a * b
                cur = acc.get(k)
                acc[k] = ab if cur is None else cur + ab
        return Jet(self.num_vars, trunc, acc, blocks=blocks, mode=mode)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, scalar):
        if isinstance(scalar, Jet):
            raise TypeError("jet division is not defined; divide by a scalar")
        if self.mode == EXACT:
            if isinstance(scalar, int):
                scalar = Fraction(scalar)
            return self.scale(1 / scalar if isinstance(scalar, ComplexRational)
                              else Fraction(1) / scalar)
        return self.scale(1.0 / scalar)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("jet powers take a nonnegative integer exponent")
        out = Jet.constant(1 if self.mode == EXACT else 1.0, self.num_vars,
                           self.trunc_degree, blocks=self.blocks, mode=self.mode)
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def hadamard(self, other):
        """Coefficient-wise product: (f ⋆ g)_i = f_i · g_i."""
        trunc, blocks, mode = self._join(other)
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        acc = {}
        for idx, value in small._coeffs.items():
            w = big._coeffs.get(idx)
            if w is not None and sum(idx) <= trunc:
                acc[idx] = value * w
        return Jet(self.num_vars, trunc, acc, blocks=blocks, mode=mode)

    # --- filtration / selection ----------------------------------------------

    def truncate(self, degree):
        coeffs = {i: v for i, v in self._coeffs.items() if sum(i) <= degree}
        return self._like(coeffs, trunc=degree)

    def with_trunc(self, degree):
        """Reinterpret at truncation degree `degree` without dropping terms.

        Raising the degree asserts the jet is an exact polynomial (no unknown
        tail); the caller owns that claim.  Lowering drops terms as truncate.
        """
        if degree < self.trunc_degree:
            return self.truncate(degree)
        return Jet(self.num_vars, degree, self._coeffs, blocks=self.blocks,
                   mode=self.mode)

    def degree_slice(self, degree):
        coeffs = {i: v for i, v in self._coeffs.items() if sum(i) == degree}
        return self._like(coeffs)

    def project(self, predicate):
        """Keep only monomials whose exponent tuple satisfies the predicate."""
        coeffs = {i: v for i, v in self._coeffs.items() if predicate(i)}
        return self._like(coeffs)

    def drop_below(self, degree):
        coeffs = {i: v for i, v in self._coeffs.items() if sum(i) >= degree}
        return self._like(coeffs)

    # --- calculus -------------------------------------------------------------

    def derivative(self, var):
        if not (0 <= var < self.num_vars):
            raise ShapeMismatchError(f"variable index {var} out of range")
        acc = {}
        for idx, value in self._coeffs.items():
            e = idx[var]
            if e == 0:
                continue
            new = list(idx)
            new[var] = e - 1
            acc[tuple(new)] = value * e
        # differentiating degree-N information only certifies degree N-1
        return self._like(acc, trunc=max(self.trunc_degree - 1, 0))

    def compose(self, args):
        """Substitute args[k] for variable k; every substituted jet needs ord >= 1."""
        args = list(args)
        if len(args) != self.num_vars:
            raise ShapeMismatchError(
                f"compose needs {self.num_vars} jets, got {len(args)}"
            )
        if not args:
            return self
        inner_vars = args[0].num_vars
        inner_blocks = args[0].blocks
        for g in args:
            if g.num_vars != inner_vars:
                raise ShapeMismatchError("substituted jets disagree on num_vars")
            if g.ord() < 1:
                raise OrderTooLowError(
                    "compose requires substituted jets with zero constant term"
                )
        # Unknown outer terms start at degree trunc+1 and substitute to order
        # >= (trunc+1)*m where m is the smallest inner order, so the result
        # stays certified beyond the outer truncation when m >= 2.
        m = min(g.ord() for g in args)
        trunc = min((self.trunc_degree + 1) * m - 1,
                    min(g.trunc_degree for g in args))
        mode = self.mode
        for g in args:
            if g._coeffs and self._coeffs and g.mode != mode:
                raise ModeMixError("compose cannot mix exact and float jets")
        one = Jet.constant(1 if mode == EXACT else 1.0, inner_vars, trunc,
                           blocks=inner_blocks, mode=mode)
        powers = [{0: one} for _ in range(self.num_vars)]

        def power(k, e):
            cache = powers[k]
            if e not in cache:
                best = max(x for x in cache if x <= e)
                cur = cache[best]
                for step in range(best + 1, e + 1):
                    cur = cur * args[k]
                    cache[step] = cur
            return cache[e]

        out = Jet.zero(inner_vars, trunc, blocks=inner_blocks, mode=mode)
        for idx, value in sorted(self._coeffs.items(),
                                 key=lambda kv: graded_lex_key(kv[0])):
            if sum(idx) * m > trunc:
                continue
            term = one
            for k, e in enumerate(idx):
                if e:
                    term = term * power(k, e)
            out = out + term.scale(value)
        return out

    def evaluate(self, point):
        """Numeric evaluation at a point (tuple of scalars)."""
        point = list(point)
        if len(point) != self.num_vars:
            raise ShapeMismatchError("point length does not match num_vars")
        exact_point = all(isinstance(x, (int, Fraction)) for x in point)
        total = None
        for idx, value in self._coeffs.items():
            if self.mode == EXACT and not exact_point:
                value = complex(value) if isinstance(value, ComplexRational) \
                    else float(value)
            term = value
            for x, e in zip(point, idx):
                if e:
                    term = term * x ** e
            total = term if total is None else total + term
        if total is None:
            return Fraction(0) if (self.mode == EXACT and exact_point) else 0.0
        return total

    def to_float(self):
        acc = {}
        for idx, value in self._coeffs.items():
            acc[idx] = complex(value) if isinstance(value, ComplexRational) \
                else float(value)
        return Jet(self.num_vars, self.trunc_degree, acc, blocks=self.blocks,
                   mode=FLOAT)

    # --- norms ------------------------------------------------------------

    def sup_norm_bound(self, s):
        """l1-majorant of the sup norm on the polydisc of radius s:
        sum of |a_i| s^{|i|}.  Exact (Fraction) when all coefficients are
        real rationals and s is rational; float otherwise.
        """
        s = _check_radius(s)
        exact = isinstance(s, Fraction) and self.mode == EXACT and all(
            not isinstance(v, ComplexRational) for v in self._coeffs.values()
        )
        if exact:
            return sum((abs(v) * s ** sum(i) for i, v in self._coeffs.items()),
                       Fraction(0))
        sf = float(s)
        total = 0.0
        for idx, value in self._coeffs.items():
            total += _abs_float(value) * sf ** sum(idx)
        return total

    def l2_norm(self, s):
        """Exact L2 norm over the polydisc of radius s, by monomial
        orthogonality: sqrt(sum |a_i|^2 w_i(s)) with
        w_i(s) = prod_j pi * s^(2(i_j+1)) / (i_j+1).
        """
        s = _check_radius(s)
        if self.mode == EXACT and isinstance(s, Fraction):
            q = Fraction(0)
            for idx, value in self._coeffs.items():
                a2 = value.abs2() if isinstance(value, ComplexRational) \
                    else value * value
                w = Fraction(1)
                for e in idx:
                    w *= s ** (2 * (e + 1)) / (e + 1)
                q += a2 * w
            return math.sqrt(float(q) * math.pi ** self.num_vars)
        sf = float(s)
        q = 0.0
        for idx, value in self._coeffs.items():
            a2 = abs(complex(value)) ** 2 if isinstance(value, (complex, ComplexRational)) \
                else float(value) ** 2
            w = 1.0
            for e in idx:
                w *= sf ** (2 * (e + 1)) / (e + 1)
            q += a2 * w
        return math.sqrt(q * math.pi ** self.num_vars)

    # --- serialization -------------------------------------------------------

    def var_names(self):
        if self.blocks is None:
            return [f"z{k}" for k in range(self.num_vars)]
        names = []
        for label, size in self.blocks:
            if size == 1:
                names.append(label)
            else:
                names.extend(f"{label}{k}" for k in range(size))
        return names

    def __str__(self):
        if not self._coeffs:
            return "0"
        names = self.var_names()
        parts = []
        for idx, value in self.terms():
            factors = []
            for name, e in zip(names, idx):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            body = "*".join(factors)
            cs = str(value)
            if ("+" in cs[1:]) or ("-" in cs[1:]) or (body and cs == "1"):
                cs = "" if (body and cs == "1") else f"({cs})"
            if body:
                parts.append(f"{cs}*{body}" if cs else body)
            else:
                parts.append(str(value))
        return " + ".join(parts)

    def __repr__(self):
        return (f"Jet({self.num_vars} vars, N={self.trunc_degree}, "
                f"{self.mode}, {len(self._coeffs)} terms: {self})")

    def to_text(self):
        """Graded-lex `exponents:coefficient` lines."""
        lines = []
        for idx, value in self.terms():
            exps = ",".join(str(e) for e in idx)
            lines.append(f"{exps}:{_coeff_to_str(value)}")
        return "\n".join(lines)

    def to_json_dict(self):
        return {
            "num_vars": self.num_vars,
            "trunc_degree": self.trunc_degree,
            "mode": self.mode,
            "blocks": [list(b) for b in self.blocks] if self.blocks else None,
            "terms": [
                [list(idx), _coeff_to_json(value)] for idx, value in self.terms()
            ],
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, data):
        mode = data["mode"]
        coeffs = {
            tuple(idx): _coeff_from_json(raw, mode) for idx, raw in data["terms"]
        }
        blocks = data.get("blocks")
        if blocks is not None:
            blocks = tuple((name, size) for name, size in blocks)
        return cls(data["num_vars"], data["trunc_degree"], coeffs,
                   blocks=blocks, mode=mode)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))

    @classmethod
    def from_text(cls, text, num_vars, trunc_degree, blocks=None, mode=EXACT):
        coeffs = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            exps, _, raw = line.partition(":")
            idx = tuple(int(e) for e in exps.split(","))
            coeffs[idx] = _coeff_from_str(raw.strip(), mode)
        return cls(num_vars, trunc_degree, coeffs, blocks=blocks, mode=mode)


def _abs_float(value):
    if isinstance(value, ComplexRational):
        return math.sqrt(float(value.abs2()))
    if isinstance(value, Fraction):
        return abs(float(value))
    return abs(value)


def _check_radius(s):
    if isinstance(s, (int, Fraction)):
        s = Fraction(s)
        if s <= 0:
            raise ValueError("radius s must be positive")
        return s
    s = float(s)
    if not s > 0:
        raise ValueError("radius s must be positive")
    return s


def _coeff_to_str(value):
    if isinstance(value, (Fraction, ComplexRational)):
        return str(value)
    if isinstance(value, complex):
        return repr(value)
    return repr(float(value))


def _coeff_from_str(raw, mode):
    if mode == EXACT:
        if "j" in raw:
            return ComplexRational.parse(raw)
        return Fraction(raw)
    return complex(raw) if "j" in raw else float(raw)


def _coeff_to_json(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, ComplexRational):
        return {"re": str(value.re), "im": str(value.im)}
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _coeff_from_json(raw, mode):
    if isinstance(raw, str):
        return Fraction(raw)
    if isinstance(raw, dict):
        if mode == EXACT:
            return ComplexRational(Fraction(raw["re"]), Fraction(raw["im"]))
        return complex(raw["re"], raw["im"])
    return float(raw)


def _all_indices(num_vars, max_degree):
    if num_vars == 0:
        yield ()
        return
    for head in range(max_degree + 1):
        for tail in _all_indices(num_vars - 1, max_degree - head):
            yield (head,) + tail
