"""Hunting invariant tori numerically: integrate, listen, classify.

An orbit on an invariant torus is quasi-periodic: each complex
coordinate z_j = q_j + i p_j plays a superposition of steady tones, and
the dominant tone per mode is stable no matter which stretch of the
trajectory you analyze.  Chaotic or escaping orbits either drift in
frequency between windows or leave the sampling ball altogether.

The scan below samples initial conditions in a ball, integrates each
with a symplectic order-4 composition scheme, estimates the dominant
frequency of every mode over several windows (windowed FFT, parabolic
peak refinement, integrator phase-response correction), and classifies
the orbit by energy drift and frequency stability.

For the integrable oscillator with frequencies (1, golden) every orbit
sits on a torus and the measured frequency ratio recovers the golden
ratio to about twelve digits.  Adding the coupling 0.05 q1^2 q2^2 keeps
most small-amplitude orbits torus-like while the frequencies detune
with amplitude.
"""

import numpy as np

from kamtori.poisson import SymplecticLayout
from kamtori.torusverify import torus_scan

PHI = (1 + 5 ** 0.5) / 2
SEED = 20260819
lay = SymplecticLayout(2)


def oscillator(extra=None):
    H = lay.zero(4, mode="float")
    for k, freq in enumerate((1.0, PHI)):
        qe, pe = [0, 0], [0, 0]
        qe[k] = 2
        H = H + lay.monomial(freq, qexp=tuple(qe), trunc_degree=4)
        pe[k] = 2
        H = H + lay.monomial(freq, pexp=tuple(pe), trunc_degree=4)
    if extra is not None:
        H = H + extra
    return H


print("=== integrable oscillator, 12 orbits in B(0, 0.5) ===")
report = torus_scan(oscillator(), 0.5, 12, seed=SEED, steps=4096)
print(f"classification counts: {report.counts()}")
rec = report.records[0]
freqs = np.array(rec.window_frequencies, dtype=float).mean(axis=0)
print(f"energy drift of orbit 0: {rec.energy_drift:.2e}")
print(f"mode frequencies of orbit 0: {freqs}")
print(f"(convention: {rec.convention})")
print(f"measured ratio {freqs[1] / freqs[0]:.12f} vs golden "
      f"{PHI:.12f} -> error {abs(freqs[1] / freqs[0] - PHI):.2e}")
print()

print("=== coupled oscillator: fractions over shrinking balls ===")
perturbed = oscillator(lay.monomial(0.05, qexp=(2, 2), trunc_degree=4))
print(f"{'radius':>7} {'torus-like':>11} {'counts'}")
for r in (0.5, 0.25, 0.1):
    rep = torus_scan(perturbed, r, 12, seed=SEED, steps=4096)
    print(f"{r:7.2f} {rep.fraction:11.3f} {rep.counts()}")
print()
print("At these amplitudes the quartic coupling only detunes the")
print("frequencies; pushing the radius or the coupling up an order of")
print("magnitude starts feeding orbits to the chaotic/escaping bin.")
