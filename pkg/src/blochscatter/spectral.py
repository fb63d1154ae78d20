"""Mode exponents, Wood-anomaly set, and Dirichlet-to-Neumann maps.

A field at quasimomentum alpha on the periodic cell carries Fourier modes
with horizontal wavenumbers xi_j = alpha - Lstar*j (Lstar = 2*pi/period);
mode j has vertical exponent

    beta_j(alpha) = sqrt(k^2 - |Lstar*j - alpha|^2),   Re beta >= 0, Im beta >= 0.

The outgoing DtN map multiplies mode j by i*beta_j(alpha). Wood anomalies are
the quasimomenta where some beta_n vanishes, i.e. |Lstar*n - alpha| = k.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BetaBranch", "SingularSet", "TraceCoeffs",
    "beta", "singular_set", "dtn_apply", "dtn_bilinear_matrix",
    "default_truncation", "top_trace_coefficients",
]


def beta(j, alpha, k, lambda_star):
    """Vertical mode exponent sqrt(k^2 - |Lstar*j - alpha|^2), upper branch.

    Real and imaginary parts are both nonnegative: real for propagating
    modes, imaginary for evanescent ones, zero exactly at a Wood anomaly.
    Accepts scalar or array j/alpha (broadcast).
    """
    xi = np.asarray(lambda_star) * np.asarray(j) - np.asarray(alpha)
    return np.sqrt((k ** 2 - xi ** 2).astype(complex))


@dataclass(frozen=True)
class BetaBranch:
    """Exponent family for fixed wavenumber and reciprocal period."""

    k: float
    lambda_star: float

    def __call__(self, j, alpha):
        return beta(j, alpha, self.k, self.lambda_star)

    def propagating(self, alpha, jmax):
        """Indices |j| <= jmax with |Lstar*j - alpha| < k."""
        js = np.arange(-jmax, jmax + 1)
        return js[np.abs(self.lambda_star * js - alpha) < self.k]


@dataclass(frozen=True)
class SingularSet:
    """Wood anomalies alpha = Lstar*n +- k inside a requested interval."""

    alphas: np.ndarray           # sorted anomaly locations
    indices: tuple               # tuple of tuples: resonating n per anomaly
    k: float
    lambda_star: float
    interval: tuple

    def __len__(self):
        return len(self.alphas)

    def multiplicity(self, i):
        return len(self.indices[i])

    def min_distance(self, alpha):
        """Distance from alpha to the full periodic anomaly set."""
        if len(self.alphas) == 0:
            base = _anomalies_near(self.k, self.lambda_star, alpha)
        else:
            base = self.alphas
        shifts = self.lambda_star * np.arange(-2, 3)
        d = np.abs(np.subtract.outer(np.atleast_1d(alpha),
                                     (base[:, None] + shifts).ravel()))
        return np.min(d, axis=-1) if np.ndim(alpha) else float(np.min(d))


def _anomalies_near(k, lambda_star, alpha, width=None):
    width = width if width is not None else 2 * lambda_star + 2 * k
    n_lo = int(np.floor((alpha - width - k) / lambda_star)) - 1
    n_hi = int(np.ceil((alpha + width + k) / lambda_star)) + 1
    ns = np.arange(n_lo, n_hi + 1)
    return np.unique(np.concatenate([lambda_star * ns - k, lambda_star * ns + k]))


def singular_set(k, lambda_star, interval) -> SingularSet:
    """All Wood anomalies Lstar*n +- k in (a, b], with resonating indices.

    Anomalies closer than 1e-12 are merged; each carries the set of integers
    n with |Lstar*n - alpha| = k (one or two).
    """
    a, b = float(interval[0]), float(interval[1])
    if not np.isfinite(a) or not np.isfinite(b):
        raise ValueError("interval must be finite")
    n_lo = int(np.floor((a - k) / lambda_star)) - 1
    n_hi = int(np.ceil((b + k) / lambda_star)) + 1
    cands = []
    for n in range(n_lo, n_hi + 1):
        for s in (-1.0, 1.0):
            al = lambda_star * n + s * k
            if a < al <= b or np.isclose(al, b, atol=1e-14):
                cands.append((al, n))
    cands.sort()
    alphas, indices = [], []
    for al, n in cands:
        if alphas and abs(al - alphas[-1]) <= 1e-12:
            if n not in indices[-1]:
                indices[-1].append(n)
        else:
            alphas.append(al)
            indices.append([n])
    return SingularSet(alphas=np.array(alphas),
                       indices=tuple(tuple(sorted(ix)) for ix in indices),
                       k=k, lambda_star=lambda_star, interval=(a, b))


@dataclass
class TraceCoeffs:
    """Fourier coefficients of a trace on the top boundary, modes j = -J..J.

    ``kind`` records the basis: quasi-periodic (mode j multiplies the wave
    with horizontal wavenumber alpha - Lstar*j) or periodized (same
    coefficients against exp(-i*Lstar*j*x1)); the coefficient array is the
    same in both, only the carried phase differs.
    """

    coeffs: np.ndarray
    alpha: float
    k: float
    lambda_star: float
    kind: str = "quasiperiodic"

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 1 or self.coeffs.size % 2 == 0:
            raise ValueError("coefficient array must be 1D with odd length 2J+1")
        if self.J < 1:
            raise ValueError("truncation J must be >= 1")

    @property
    def J(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def __getitem__(self, j):
        return self.coeffs[j + self.J]


def dtn_apply(coeffs: TraceCoeffs, alpha: float) -> TraceCoeffs:
    """Outgoing DtN symbol: multiply mode j by i*beta_j(alpha)."""
    b = beta(coeffs.modes, alpha, coeffs.k, coeffs.lambda_star)
    return TraceCoeffs(coeffs=1j * b * coeffs.coeffs, alpha=alpha,
                       k=coeffs.k, lambda_star=coeffs.lambda_star,
                       kind=coeffs.kind)


def default_truncation(k, lambda_star) -> int:
    """All propagating modes plus at least ten evanescent ones."""
    return int(np.ceil((k + 5.0 * lambda_star) / lambda_star)) + 10


def top_trace_coefficients(mesh, J) -> tuple:
    """Periodized Fourier coefficients of the top-boundary P1 traces.

    Returns (top_master_nodes, T) where T[a, j + J] = (1/L) * integral of
    trace_a(x1) * exp(i*Lstar*j*x1) dx1, computed in closed form per edge
    (exact for the piecewise-linear traces). The right top corner is folded
    onto its left periodic partner, so traces are those of the periodized
    degrees of freedom.
    """
    L = mesh.period
    lam_star = 2 * np.pi / L
    top = mesh.top_nodes            # columns 0..nx, x1 increasing
    xs = mesh.vertices[top, 0]
    n_master = len(top) - 1         # last column folds onto the first
    T = np.zeros((n_master, 2 * J + 1), dtype=complex)
    js = np.arange(-J, J + 1)
    q = lam_star * js
    for e in range(n_master):
        xl = xs[e]
        h = xs[e + 1] - xs[e]
        theta = q * h
        E0, E1 = _lin_exp_integrals(theta)
        ph = np.exp(1j * q * xl)
        a0 = e                       # master dof owning the left hat
        a1 = (e + 1) % n_master      # right hat; wraps at the seam
        T[a0] += ph * h * E0 / L
        T[a1] += ph * h * E1 / L
    return top[:n_master], T


def _lin_exp_integrals(theta):
    """E0 = int_0^1 (1-s) e^{i theta s} ds, E1 = int_0^1 s e^{i theta s} ds."""
    theta = np.asarray(theta, dtype=float)
    E0 = np.empty(theta.shape, dtype=complex)
    E1 = np.empty(theta.shape, dtype=complex)
    small = np.abs(theta) < 1e-4
    t = theta[small]
    # series to O(t^4): errors ~ t^4/144 < 1e-18
    E0[small] = 0.5 + 1j * t / 6.0 - t ** 2 / 24.0 - 1j * t ** 3 / 120.0
    E1[small] = 0.5 + 1j * t / 3.0 - t ** 2 / 8.0 - 1j * t ** 3 / 30.0
    t = theta[~small]
    it = 1j * t
    e = np.exp(it)
    E1[~small] = (e * (it - 1.0) + 1.0) / (it * it)
    E0[~small] = (e - 1.0) / it - E1[~small]
    return E0, E1


def dtn_bilinear_matrix(mesh, alpha, J, k) -> np.ndarray:
    """Dense DtN block on the top-boundary master dofs.

    M[a, b] = -sum_{|j|<=J} i*beta_j(alpha) * T[b, j] * conj(T[a, j]) * L,
    realizing -integral over the top boundary of (DtN trace_b) * conj(trace_a)
    with exact per-edge trace integrals. Raises if J misses a propagating
    mode.
    """
    if J < 1:
        raise ValueError("truncation J must be >= 1")
    L = mesh.period
    lam_star = 2 * np.pi / L
    j_prop = int(np.ceil((k + abs(alpha)) / lam_star)) + 1
    js_chk = np.arange(-j_prop, j_prop + 1)
    prop = js_chk[np.abs(lam_star * js_chk - alpha) < k]
    if len(prop) and np.max(np.abs(prop)) > J:
        raise ValueError(
            f"truncation J={J} misses propagating modes up to |j|="
            f"{int(np.max(np.abs(prop)))}")
    top, T = top_trace_coefficients(mesh, J)
    b = beta(np.arange(-J, J + 1), alpha, k, lam_star)
    return -L * (np.conj(T) * (1j * b)) @ T.T
