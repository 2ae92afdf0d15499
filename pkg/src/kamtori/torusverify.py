"""Numerical survey of invariant-torus density near an elliptic point.

The symbolic machinery certifies normal forms; this module checks the
dynamical picture they predict.  It integrates the Hamiltonian flow with
a symplectic one-step scheme, estimates per-mode rotation frequencies by
windowed Fourier analysis of z_j = q_j + i p_j, classifies each orbit as
torus-like, chaotic/escaping, or undecided, and measures the torus-like
fraction over samples of a shrinking ball around the origin.  Everything
here is empirical: a high fraction is evidence, never a certificate.

Conventions (recorded in every report): the integrator is the
triple-jump composition of the implicit midpoint rule (order 4,
symplectic, exactly energy-conserving on quadratic Hamiltonians up to
roundoff, since each midpoint substep is); frequencies are signed
angular rates of z_j = q_j + i p_j per unit time, de-biased for the
scheme's known phase response, so H = a (q_j^2 + p_j^2) rotates z_j at
omega_j = -2 a.
"""

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .birkhoff import REAL_ELLIPTIC, EllipticHamiltonian
from .jets import ComplexRational, Jet

SCHEME = "triple-jump composition of implicit midpoint (order 4, symplectic)"
FREQ_CONVENTION = ("signed angular frequency of z_j = q_j + i p_j, "
                   "de-biased for the scheme phase response; "
                   "H = a (q_j^2 + p_j^2) rotates z_j at omega_j = -2 a")

_FIXED_POINT_TOL = 1e-14
_FIXED_POINT_CAP = 50
# triple-jump substep weights: (w1, w0, w1) with w1 = 1/(2 - 2^(1/3))
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1


# ------------------------------------------------------------ polynomial data

def _real_coeff(c):
    if isinstance(c, (int, float)):
        return float(c)
    if isinstance(c, Fraction):
        return float(c)
    if isinstance(c, ComplexRational):
        if c.im:
            raise ValueError("Hamiltonian must have real coefficients")
        return float(c.re)
    if isinstance(c, complex):
        if c.imag:
            raise ValueError("Hamiltonian must have real coefficients")
        return c.real
    raise ValueError(f"unsupported coefficient type {type(c).__name__}")


def _poly_data(H):
    """Exponent matrix and float coefficients of a real polynomial jet."""
    if H.num_vars % 2:
        raise ValueError("phase space needs an even number of variables")
    items = sorted(H.coeffs.items())
    exps = np.array([i for i, _ in items], dtype=np.int64).reshape(
        len(items), H.num_vars)
    coeffs = np.array([_real_coeff(c) for _, c in items], dtype=float)
    return exps, coeffs


def _eval_poly(exps, coeffs, X):
    """Evaluate at the rows of X: (S, d) -> (S,)."""
    if not len(coeffs):
        return np.zeros(len(X))
    return np.prod(X[:, None, :] ** exps[None, :, :], axis=2) @ coeffs


def _gradient_data(exps, coeffs, d):
    grads = []
    for v in range(d):
        mask = exps[:, v] > 0
        ge = exps[mask].copy()
        gc = coeffs[mask] * ge[:, v]
        ge[:, v] -= 1
        grads.append((ge, gc))
    return grads


class _VectorField:
    """dq/dt = dH/dp, dp/dt = -dH/dq, evaluated on batches of points."""

    def __init__(self, H):
        exps, coeffs = _poly_data(H)
        self.d = H.num_vars
        self.n = self.d // 2
        self.h_exps, self.h_coeffs = exps, coeffs
        self.grads = _gradient_data(exps, coeffs, self.d)

    def __call__(self, X):
        n = self.n
        out = np.empty_like(X)
        for j in range(n):
            out[:, j] = _eval_poly(*self.grads[n + j], X)
            out[:, n + j] = -_eval_poly(*self.grads[j], X)
        return out

    def energy(self, X):
        return _eval_poly(self.h_exps, self.h_coeffs, X)


# ----------------------------------------------------------------- integrator

def _midpoint_substep(field, x, s):
    """One implicit midpoint substep of size s on a batch.

    Returns (x_new, ok): ok is False where the fixed point failed to
    contract within the cap (the orbit has left the scheme's regime).
    """
    m = x.copy()
    ok = np.zeros(len(x), dtype=bool)
    half = 0.5 * s
    for _ in range(_FIXED_POINT_CAP):
        m_new = x + half * field(m)
        delta = np.abs(m_new - m).max(axis=1)
        scale = 1.0 + np.abs(m).max(axis=1)
        m = m_new
        ok = delta <= _FIXED_POINT_TOL * scale
        if ok.all():
            break
    return 2.0 * m - x, ok


def _integrate_batch(field, X0, dt, steps, escape_radius):
    """Triple-jump midpoint flow of a batch of initial conditions.

    Each step composes three implicit midpoint substeps of sizes
    (w1 dt, w0 dt, w1 dt).  Escaped orbits (radius above escape_radius,
    non-finite values, or a substep iteration that stops converging) are
    frozen at their last point so the rest of the batch keeps
    integrating.  Returns the trajectory array (S, steps+1, d) and
    per-orbit escape step (-1 if the orbit stayed in).
    """
    S, d = X0.shape
    traj = np.empty((S, steps + 1, d))
    x = np.array(X0, dtype=float)
    traj[:, 0] = x
    escape_step = np.full(S, -1, dtype=np.int64)
    alive = np.ones(S, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            if alive.any():
                xa = x[alive]
                x_new = xa
                good = np.ones(len(xa), dtype=bool)
                for w in (_W1, _W0, _W1):
                    x_new, ok = _midpoint_substep(field, x_new, w * dt)
                    good &= ok
                bad = ~good
                bad |= ~np.isfinite(x_new).all(axis=1)
                bad |= np.sqrt((x_new ** 2).sum(axis=1)) > escape_radius
                x_new[bad] = xa[bad]
                live_idx = np.flatnonzero(alive)
                x[live_idx] = x_new
                newly = live_idx[bad]
                escape_step[newly] = k
                alive[newly] = False
            traj[:, k + 1] = x
    return traj, escape_step


def _debias_freq(omega, dt):
    """Invert the scheme's phase response on a signed frequency.

    On the linear flow dz/dt = -i w z each midpoint substep of size s
    rotates by -2 atan(w s / 2), so the observed per-step phase of the
    composition is theta(w) = 2 (2 atan(w w1 dt/2) + atan(w w0 dt/2)).
    Newton-solve theta(w) = omega dt for w; the correction is odd in
    omega and O(dt^4) small inside the stable regime.
    """
    w = omega
    for _ in range(8):
        x1, x0 = w * _W1 * dt / 2.0, w * _W0 * dt / 2.0
        theta = 2.0 * (2.0 * np.arctan(x1) + np.arctan(x0))
        deriv = (2.0 * _W1 * dt / (1.0 + x1 * x1)
                 + _W0 * dt / (1.0 + x0 * x0))
        step = (theta - omega * dt) / deriv
        w -= step
        if abs(step) <= 1e-15 * (1.0 + abs(w)):
            break
    return float(w)


def _relative_drift(field, traj):
    S, T, d = traj.shape
    energy = field.energy(traj.reshape(S * T, d)).reshape(S, T)
    h0 = energy[:, 0]
    drift = np.abs(energy - h0[:, None]).max(axis=1)
    return drift / np.maximum(np.abs(h0), np.finfo(float).tiny)


@dataclass(frozen=True)
class OrbitRecord:
    """One integrated orbit plus its diagnostics.

    energy_drift is max_t |H(x_t) - H(x_0)| relative to |H(x_0)|.
    window_frequencies and stability appear after classify_orbit; the
    classification is a pure function of the record and the thresholds.
    """

    x0: tuple
    dt: float
    steps: int
    scheme: str
    trajectory: np.ndarray = dataclasses.field(repr=False)
    energy_drift: float = 0.0
    escaped: bool = False
    escape_step: int = None
    window_frequencies: tuple = None
    stability: float = None
    classification: str = "undecided"
    convention: str = FREQ_CONVENTION

    def to_json_dict(self):
        return {
            "x0": list(self.x0),
            "dt": self.dt,
            "steps": self.steps,
            "scheme": self.scheme,
            "energy_drift": self.energy_drift,
            "escaped": self.escaped,
            "escape_step": self.escape_step,
            "window_frequencies": [
                [None if f is None else f for f in w]
                for w in self.window_frequencies]
            if self.window_frequencies is not None else None,
            "stability": self.stability,
            "classification": self.classification,
            "convention": self.convention,
        }


def integrate(H, x0, dt, steps, *, escape_radius=None):
    """Flow x0 under the Hamiltonian vector field of H for `steps` steps.

    H is a real-coefficient polynomial jet on (q_1..q_n, p_1..p_n); the
    scheme is the order-4 triple-jump composition of the implicit
    midpoint rule.  A step-size sanity check rejects dt |X_H(x0)| > 1
    (the midpoint fixed point would not contract).  Escape past
    escape_radius (default 10 (1 + |x0|)) is reported on the record,
    not raised.
    """
    field = _VectorField(H)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (field.d,):
        raise ValueError(f"x0 must have {field.d} components")
    if dt <= 0 or steps < 1:
        raise ValueError("need dt > 0 and steps >= 1")
    speed = float(np.abs(field(x0[None, :])).max())
    if dt * speed > 1.0:
        raise ValueError(
            f"step size fails the sanity check: dt*|X_H(x0)| = "
            f"{dt * speed:.3g} > 1")
    if escape_radius is None:
        escape_radius = 10.0 * (1.0 + float(np.sqrt((x0 ** 2).sum())))
    traj, esc = _integrate_batch(field, x0[None, :], dt, steps,
                                 escape_radius)
    drift = _relative_drift(field, traj)
    return OrbitRecord(
        x0=tuple(float(v) for v in x0), dt=dt, steps=steps, scheme=SCHEME,
        trajectory=traj[0], energy_drift=float(drift[0]),
        escaped=bool(esc[0] >= 0),
        escape_step=int(esc[0]) if esc[0] >= 0 else None)


# ---------------------------------------------------------- frequency analysis

def _bh4_window(L):
    """4-term Blackman-Harris window (-92 dB sidelobes)."""
    x = 2 * np.pi * np.arange(L) / (L - 1)
    return (0.35875 - 0.48829 * np.cos(x) + 0.14128 * np.cos(2 * x)
            - 0.01168 * np.cos(3 * x))


def _dominant_freq(z, dt):
    """Signed dominant angular frequency of a complex signal, or None.

    Blackman-Harris-windowed FFT peak, parabolic interpolation on log
    magnitude, then local zoom refinements by direct Fourier sums.  The
    window-weighted mean is subtracted first so the zero-frequency line
    of the windowed transform vanishes exactly and cannot bias the peak.
    A signal whose variation around its mean is at roundoff scale is
    degenerate (None): a fixed point has no rotation number.
    """
    L = len(z)
    w = _bh4_window(L)
    mean = (w @ z) / w.sum()
    zc = z - mean
    amp = np.abs(zc).max()
    if amp <= 1e-12 * (1.0 + abs(mean)):
        return None
    zw = zc * w
    X = np.fft.fft(zw)
    mag = np.abs(X)
    k = int(mag.argmax())
    lm = np.log(np.maximum(mag, np.finfo(float).tiny))
    a, b, c = lm[(k - 1) % L], lm[k], lm[(k + 1) % L]
    denom = a - 2 * b + c
    delta = 0.5 * (a - c) / denom if denom else 0.0
    delta = min(0.5, max(-0.5, delta))
    kk = k + delta
    if kk > L / 2:
        kk -= L
    omega = 2 * np.pi * kk / (L * dt)
    # zoom: refit the windowed Fourier magnitude on ever finer 3-point
    # grids; on a pure tone this lands on the true frequency to ~1e-12
    t = np.arange(L) * dt
    h = 2 * np.pi / (L * dt) / 10.0
    for _ in range(3):
        grid = omega + np.array([-h, 0.0, h])
        m = np.abs(np.exp(-1j * np.outer(grid, t)) @ zw)
        lg = np.log(np.maximum(m, np.finfo(float).tiny))
        denom = lg[0] - 2 * lg[1] + lg[2]
        if denom:
            omega += min(1.0, max(-1.0, 0.5 * (lg[0] - lg[2]) / denom)) * h
        h /= 10.0
    return float(omega)


@dataclass(frozen=True)
class FrequencyAnalysis:
    """Per-window dominant frequency vectors and their spread."""

    windows: int
    frequencies: tuple
    stability: float
    degenerate: bool
    convention: str = FREQ_CONVENTION


def frequency_analysis(orbit, windows=4):
    """Windowed frequency-map analysis of an orbit record.

    Splits the trajectory into `windows` equal windows (each at least 64
    samples), estimates the dominant signed frequency of every mode in
    every window (de-biased for the integrator's phase response), and
    reports the maximal inter-window deviation relative to the largest
    mean frequency.  Modes with degenerate (zero-amplitude) signal get
    None; an orbit degenerate in every mode is undecidable.

    Resolution note: a mode needs several spectral bins between its
    frequency and 0, i.e. |omega| well above 2 pi / (window length x
    dt), or the peak sits in the skirt of the suppressed zero line and
    the estimate wanders; integrate longer when slow modes matter.
    """
    if windows < 2:
        raise ValueError("need at least 2 windows")
    traj = orbit.trajectory
    T, d = traj.shape
    n = d // 2
    L = T // windows
    if L < 64:
        raise ValueError(
            f"window length {L} below 64 samples; integrate longer or "
            "use fewer windows")
    freqs = []
    for w in range(windows):
        seg = traj[w * L:(w + 1) * L]
        row = []
        for j in range(n):
            z = seg[:, j] + 1j * seg[:, n + j]
            f = _dominant_freq(z, orbit.dt)
            # the phase correction belongs to the integrator; records
            # carrying exact samples declare another scheme and skip it
            if f is not None and orbit.scheme == SCHEME:
                f = _debias_freq(f, orbit.dt)
            row.append(f)
        freqs.append(tuple(row))
    defined = [j for j in range(n)
               if all(fw[j] is not None for fw in freqs)]
    if not defined:
        return FrequencyAnalysis(windows, tuple(freqs), None, True)
    means = {j: np.mean([fw[j] for fw in freqs]) for j in defined}
    scale = max(abs(m) for m in means.values())
    dev = max(abs(fw[j] - means[j]) for fw in freqs for j in defined)
    stability = dev / max(scale, np.finfo(float).tiny)
    return FrequencyAnalysis(windows, tuple(freqs), float(stability), False)


def classify_orbit(orbit, analysis=None, *, windows=4, tol_energy=1e-6,
                   tol_freq=1e-4):
    """Attach frequencies and a classification to an orbit record.

    torus-like iff the orbit stayed bounded, the relative energy drift
    is below tol_energy, and the frequency stability is below tol_freq;
    degenerate signals are undecided; everything else (escape, drifting
    energy, wandering frequencies) is chaotic/escaping.  Pure function
    of the record and thresholds.
    """
    if analysis is None:
        analysis = frequency_analysis(orbit, windows)
    if orbit.escaped:
        cls = "chaotic/escaping"
    elif analysis.degenerate:
        cls = "undecided"
    elif (orbit.energy_drift < tol_energy
          and analysis.stability < tol_freq):
        cls = "torus-like"
    else:
        cls = "chaotic/escaping"
    return dataclasses.replace(
        orbit, window_frequencies=analysis.frequencies,
        stability=analysis.stability, classification=cls)


# ----------------------------------------------------------------------- scan

@dataclass(frozen=True)
class ScanReport:
    """Torus-like fraction over a random sample of a ball B(0, r)."""

    radius: float
    samples: int
    seed: int
    fraction: float
    records: tuple
    dt: float
    steps: int
    windows: int
    tol_energy: float
    tol_freq: float
    escape_radius: float
    alpha: tuple
    scheme: str = SCHEME
    convention: str = FREQ_CONVENTION

    def __post_init__(self):
        assert 0.0 <= self.fraction <= 1.0

    def counts(self):
        out = {"torus-like": 0, "chaotic/escaping": 0, "undecided": 0}
        for rec in self.records:
            out[rec.classification] += 1
        return out

    def to_json_dict(self):
        return {
            "radius": self.radius,
            "samples": self.samples,
            "seed": self.seed,
            "fraction_torus_like": self.fraction,
            "counts": self.counts(),
            "dt": self.dt,
            "steps": self.steps,
            "windows": self.windows,
            "tol_energy": self.tol_energy,
            "tol_freq": self.tol_freq,
            "escape_radius": self.escape_radius,
            "alpha": list(self.alpha),
            "scheme": self.scheme,
            "convention": self.convention,
        }

    def csv_rows(self):
        """Header and one row per orbit (x0, drift, stability, class)."""
        n2 = len(self.records[0].x0) if self.records else 0
        header = [f"x0_{i}" for i in range(n2)] + [
            "energy_drift", "stability", "classification"]
        rows = []
        for rec in self.records:
            rows.append([f"{v!r}" for v in rec.x0] +
                        [repr(rec.energy_drift),
                         "" if rec.stability is None else repr(rec.stability),
                         rec.classification])
        return header, rows


def _sample_ball(rng, samples, d, r):
    v = rng.normal(size=(samples, d))
    v /= np.sqrt((v ** 2).sum(axis=1))[:, None]
    u = rng.random(samples) ** (1.0 / d)
    return r * u[:, None] * v


def torus_scan(H, r, samples, seed=0, *, dt=0.02, steps=8192, windows=4,
               tol_energy=1e-6, tol_freq=1e-4, escape_factor=10.0,
               jobs=None):
    """Sample B(0, r), integrate every orbit, report the torus-like fraction.

    H must be elliptic at the origin (positive diagonal quadratic part
    a_k (q_k^2 + p_k^2), no constant or linear terms).  Sampling is
    uniform in the ball with a counter-based generator, so a (seed, r,
    samples) triple reproduces the same report bit for bit.  Orbits are
    independent; `jobs` integrates the batch in that many parallel
    chunks (the aggregation is a plain associative count).
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if r <= 0:
        raise ValueError("need a positive radius")
    eh = EllipticHamiltonian(H, coordinate_mode=REAL_ELLIPTIC)
    field = _VectorField(H)
    rng = np.random.Generator(np.random.Philox(seed))
    X0 = _sample_ball(rng, samples, field.d, r)
    escape_radius = escape_factor * r

    def run_chunk(chunk):
        return _integrate_batch(field, chunk, dt, steps, escape_radius)

    if jobs and jobs > 1 and samples > 1:
        chunks = np.array_split(X0, min(jobs, samples))
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run_chunk, chunks))
        traj = np.concatenate([p[0] for p in parts])
        esc = np.concatenate([p[1] for p in parts])
    else:
        traj, esc = run_chunk(X0)

    drift = _relative_drift(field, traj)
    records = []
    hits = 0
    for i in range(samples):
        rec = OrbitRecord(
            x0=tuple(float(v) for v in X0[i]), dt=dt, steps=steps,
            scheme=SCHEME, trajectory=traj[i], energy_drift=float(drift[i]),
            escaped=bool(esc[i] >= 0),
            escape_step=int(esc[i]) if esc[i] >= 0 else None)
        rec = classify_orbit(rec, windows=windows, tol_energy=tol_energy,
                             tol_freq=tol_freq)
        hits += rec.classification == "torus-like"
        records.append(rec)
    return ScanReport(
        radius=float(r), samples=samples, seed=seed,
        fraction=hits / samples, records=tuple(records), dt=dt, steps=steps,
        windows=windows, tol_energy=tol_energy, tol_freq=tol_freq,
        escape_radius=float(escape_radius),
        alpha=tuple(float(a) for a in eh.alpha.as_floats()))
