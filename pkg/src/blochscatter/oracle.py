"""Independent reference computations used to validate the solver pipeline.

Everything here deliberately avoids the spectral/DtN machinery it checks:
the windowed Bloch sum evaluates the physical Hankel pair cell by cell, the
flat-surface solution is the classical mirror reflection, and the monolithic
solver (see ``oracle_monolithic``) discretizes the physical perturbed domain
on a wide truncated strip.
"""

import numpy as np

from .incident import PointSource

__all__ = [
    "smooth_window", "windowed_point_source_bloch",
    "flat_surface_field", "flat_surface_periodized",
]


def smooth_window(u, flat_fraction=0.5):
    """C-infinity-type taper: 1 on |u| <= flat_fraction, 0 beyond |u| = 1.

    The roll-off exp(2 e^{-1/t} / (t - 1)), t = (|u|-u0)/(1-u0), vanishes with
    all derivatives at both ends; a Bloch sum truncated with this window
    converges super-algebraically away from the anomaly set, where a sharp
    cutoff would give only O(J^{-3/2}).
    """
    u = np.abs(np.asarray(u, dtype=float))
    out = np.zeros_like(u)
    out[u <= flat_fraction] = 1.0
    ramp = (u > flat_fraction) & (u < 1.0)
    t = (u[ramp] - flat_fraction) / (1.0 - flat_fraction)
    with np.errstate(divide="ignore", over="ignore"):
        out[ramp] = np.exp(2.0 * np.exp(-1.0 / t) / (t - 1.0))
    return out


def windowed_point_source_bloch(src: PointSource, alpha, x1, x2, period,
                                J_c=200, window=True):
    """Direct windowed Bloch sum of the half-space Hankel pair.

        w(alpha, x) ~ sqrt(L/2pi) * sum_{|j|<=J_c} chi(j/J_c)
                      u_inc(x + (L j, 0)) e^{-i alpha L j}.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    js = np.arange(-J_c, J_c + 1)
    chi = smooth_window(js / J_c) if window else np.ones_like(js, dtype=float)
    acc = np.zeros(np.broadcast(x1, x2).shape, dtype=complex)
    for j, c in zip(js, chi):
        if c == 0.0:
            continue
        acc += c * np.exp(-1j * alpha * period * j) * src(x1 + period * j, x2)
    return np.sqrt(period / (2 * np.pi)) * acc


def flat_surface_field(alpha_inc, k, h0, amplitude=1.0):
    """Exact total field over the sound-soft plane {x2 = h0}.

    u = amplitude * e^{i a x1} (e^{-i b x2} - e^{-2 i b h0} e^{+i b x2}),
    b = sqrt(k^2 - a^2); vanishes on x2 = h0 and is incident + outgoing.
    Returns a callable (x1, x2) -> complex.
    """
    b = complex(np.sqrt(complex(k ** 2 - alpha_inc ** 2)))
    refl = -np.exp(-2j * b * h0)

    def u(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return amplitude * np.exp(1j * alpha_inc * x1) * (
            np.exp(-1j * b * x2) + refl * np.exp(1j * b * x2))

    u.beta = b
    u.reflection = refl
    return u


def flat_surface_periodized(alpha_inc, k, h0, amplitude=1.0):
    """Periodized representation v = e^{-i a x1} u of the flat-plane field."""
    u = flat_surface_field(alpha_inc, k, h0, amplitude)

    def v(x1, x2):
        return np.exp(-1j * alpha_inc * np.asarray(x1)) * u(x1, x2)

    v.beta = u.beta
    v.reflection = u.reflection
    return v
