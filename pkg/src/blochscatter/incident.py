"""Incident field families and their Bloch-transformed boundary data.

Every family provides, per quadrature node alpha, the modal coefficients of
its trace and vertical derivative on the top boundary in the quasi-periodic
basis (mode j carries horizontal wavenumber xi_j = alpha - Lstar*j), from
which the load functional

    f = d(u_inc)/dx2 - T_alpha[u_inc]     on the top boundary

follows in closed form: a pure downward mode of amplitude c picks up the
factor -2*i*beta_j*c, an upward mode is annihilated.

Families:
  * plane/evanescent wave  exp(i a x1 - i sqrt(k^2-a^2) x2): a Dirac comb in
    alpha, snapped to the nearest grid node;
  * half-space point source (i/4)[H0(k|x-y|) - H0(k|x-y'|)], y above the top
    boundary, y' its mirror across {x2=0}; per-alpha Rayleigh series
        w(alpha,x) = (2 pi L)^{-1/2} sum_j beta_j^{-1}
                     e^{i xi_j (x1-y1)} e^{i beta_j y2} sin(beta_j x2);
  * downward Herglotz wave with density phi on the lower half-circle; its
    Bloch transform is a finite sum over propagating modes, bounded across
    Wood anomalies for the factored density phi(t) = h[cos t] cos t, h(0)=0.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import hankel1

from .bloch import AlphaGrid, BlochField
from .spectral import beta, default_truncation, top_trace_coefficients

__all__ = [
    "PlaneWaveFamily", "PointSource", "HerglotzDensity",
    "IncidentTraces", "BlochIncident",
    "plane_wave_bloch_rhs", "point_source_bloch", "herglotz_bloch",
    "incident_rhs",
]


# ---------------------------------------------------------------------------
# Field families
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PlaneWaveFamily:
    """Downward wave exp(i a x1 - i beta(a) x2); evanescent when |a| > k."""

    alpha: float
    k: float
    amplitude: complex = 1.0

    @property
    def beta(self) -> complex:
        return complex(np.sqrt(complex(self.k ** 2 - self.alpha ** 2)))

    def __call__(self, x1, x2):
        return self.amplitude * np.exp(1j * self.alpha * np.asarray(x1)
                                       - 1j * self.beta * np.asarray(x2))


@dataclass(frozen=True)
class PointSource:
    """Half-space Green's function source at y = (y1, y2), vanishing on {x2=0}."""

    y1: float
    y2: float
    k: float

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        r = np.hypot(x1 - self.y1, x2 - self.y2)
        rm = np.hypot(x1 - self.y1, x2 + self.y2)
        return 0.25j * (hankel1(0, self.k * r) - hankel1(0, self.k * rm))


@dataclass(frozen=True)
class HerglotzDensity:
    """Density on the lower half-circle of directions, theta in (-pi/2, pi/2).

    Either a raw density ``phi(theta)`` or the factored form
    phi(theta) = h[cos theta] * cos theta with h analytic on [0, 1], h(0)=0;
    the factored form keeps the Bloch transform bounded across Wood anomalies.
    """

    phi: Optional[Callable] = None
    h: Optional[Callable] = None

    def __post_init__(self):
        if (self.phi is None) == (self.h is None):
            raise ValueError("provide exactly one of phi(theta) or h(cos theta)")

    @property
    def factored(self) -> bool:
        return self.h is not None

    def density(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.factored:
            return self.h(np.cos(theta)) * np.cos(theta)
        return self.phi(theta)

    @classmethod
    def from_theta_samples(cls, theta, values) -> "HerglotzDensity":
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=float)

        def phi(t, _th=theta, _v=values):
            return np.interp(np.asarray(t, dtype=float), _th, _v, left=0.0, right=0.0)

        return cls(phi=phi)

    def field(self, x1, x2, k, n_quad=400):
        """Direct theta-quadrature evaluation of the Herglotz wave (oracle use)."""
        gl_t, gl_w = np.polynomial.legendre.leggauss(n_quad)
        th = gl_t * (np.pi / 2)
        w = gl_w * (np.pi / 2)
        dens = self.density(th)
        x1 = np.asarray(x1, dtype=float)[..., None]
        x2 = np.asarray(x2, dtype=float)[..., None]
        ph = np.exp(1j * k * (np.sin(th) * x1 - np.cos(th) * x2))
        return np.sum(ph * (w * dens), axis=-1)


# ---------------------------------------------------------------------------
# Per-alpha modal boundary data
# ---------------------------------------------------------------------------
@dataclass
class IncidentTraces:
    """Modal trace and vertical-derivative coefficients on the top boundary.

    Mode j (j = -J..J) multiplies exp(i*(alpha - Lstar*j)*x1); ``c`` holds the
    trace values at x2 = H, ``d`` the x2-derivative values there.
    """

    c: np.ndarray
    d: np.ndarray
    alpha: float
    k: float
    lambda_star: float

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=complex)
        self.d = np.asarray(self.d, dtype=complex)
        if self.c.shape != self.d.shape or self.c.ndim != 1 or self.c.size % 2 == 0:
            raise ValueError("c and d must be matching odd-length 1D arrays")

    @property
    def J(self) -> int:
        return (self.c.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def rhs_coeffs(self) -> np.ndarray:
        """Load density coefficients f_j = d_j - i*beta_j*c_j."""
        b = beta(self.modes, self.alpha, self.k, self.lambda_star)
        return self.d - 1j * b * self.c


@dataclass
class BlochIncident:
    """Bloch-transformed incident data over one alpha grid.

    ``traces[m]`` is the modal boundary data at node m (None where the
    incident contributes nothing). For plane-wave incidence the Dirac comb is
    carried by ``comb_node``/``comb_scale``: the solver multiplies that
    node's assembled load by the comb weight sqrt(2 pi / L)/omega_m0, which
    makes the synthesized background the exact quasi-periodic extension.
    """

    kind: str
    grid: AlphaGrid
    traces: list
    k: float
    lambda_star: float
    comb_node: Optional[int] = None
    comb_scale: Optional[float] = None
    alpha_inc: Optional[float] = None
    snap_distance: Optional[float] = None
    info: dict = field(default_factory=dict)

    def rhs_scale(self, m: int) -> float:
        return self.comb_scale if (self.comb_node is not None and m == self.comb_node) else 1.0


# ---------------------------------------------------------------------------
# Family -> Bloch data
# ---------------------------------------------------------------------------
def plane_wave_bloch_rhs(alpha_inc, grid: AlphaGrid, k, H, amplitude=1.0,
                         J=None, snap_tol=None) -> BlochIncident:
    """Dirac-comb boundary data of a plane/evanescent wave, snapped to the grid.

    The incident quasimomentum is replaced by the nearest grid representative
    (mod Lstar); the data carries the single-mode trace/derivative at that
    node, so the assembled load density is -2*i*beta*amplitude*exp(-i*beta*H)
    on the matching mode, plus the comb normalization. Raises if the snap
    distance exceeds ``snap_tol``.
    """
    lam_star = grid.lambda_star
    L = 2 * np.pi / lam_star
    m0, dist = grid.nearest(alpha_inc)
    if snap_tol is not None and abs(dist) > snap_tol:
        raise ValueError(
            f"no grid node within {snap_tol} of alpha_inc={alpha_inc} "
            f"(closest at distance {abs(dist):.3e})")
    a_snap = alpha_inc + dist            # == grid.nodes[m0] - lam_star*j0
    j0 = int(np.rint((grid.nodes[m0] - a_snap) / lam_star))
    J = J if J is not None else default_truncation(k, lam_star)
    J = max(J, abs(j0) + 1)
    c = np.zeros(2 * J + 1, complex)
    d = np.zeros(2 * J + 1, complex)
    b0 = complex(beta(j0, grid.nodes[m0], k, lam_star))
    c[j0 + J] = amplitude * np.exp(-1j * b0 * H)
    d[j0 + J] = -1j * b0 * c[j0 + J]
    traces = [None] * grid.M
    traces[m0] = IncidentTraces(c=c, d=d, alpha=grid.nodes[m0], k=k,
                                lambda_star=lam_star)
    return BlochIncident(kind="plane", grid=grid, traces=traces, k=k,
                         lambda_star=lam_star, comb_node=m0,
                         comb_scale=float(np.sqrt(2 * np.pi / L) / grid.weights[m0]),
                         alpha_inc=float(alpha_inc), snap_distance=float(dist),
                         info={"j0": j0, "amplitude": amplitude,
                               "alpha_snapped": float(a_snap),
                               "beta_inc": b0, "H": float(H)})


def point_source_traces(src: PointSource, alpha, H, lambda_star, J) -> IncidentTraces:
    """Modal top-boundary data of the Bloch-transformed half-space source."""
    if src.y2 <= H:
        raise ValueError(f"point source must lie above the top boundary "
                         f"(y2={src.y2} <= H={H})")
    L = 2 * np.pi / lambda_star
    js = np.arange(-J, J + 1)
    xi = alpha - lambda_star * js
    b = beta(js, alpha, src.k, lambda_star)
    pref = np.exp(-1j * xi * src.y1) / np.sqrt(2 * np.pi * L)
    ep = np.exp(1j * b * (src.y2 + H))      # decays for evanescent modes
    em = np.exp(1j * b * (src.y2 - H))
    c = pref * _safe_div(ep - em, 2j * b, limit=H * np.exp(1j * b * src.y2))
    d = pref * (ep + em) / 2.0
    return IncidentTraces(c=c, d=d, alpha=float(alpha), k=src.k,
                          lambda_star=lambda_star)


def point_source_field_values(src: PointSource, alpha, x1, x2, lambda_star, J):
    """Nodal values of the Bloch-transformed source (quasi-periodic repr)."""
    L = 2 * np.pi / lambda_star
    js = np.arange(-J, J + 1)
    xi = alpha - lambda_star * js
    b = beta(js, alpha, src.k, lambda_star)
    x1 = np.asarray(x1, dtype=float)[..., None]
    x2 = np.asarray(x2, dtype=float)[..., None]
    ep = np.exp(1j * b * (src.y2 + x2))
    em = np.exp(1j * b * (src.y2 - x2))
    rad = _safe_div(ep - em, 2j * b, limit=x2 * np.exp(1j * b * src.y2))
    ph = np.exp(1j * xi * (x1 - src.y1))
    return np.sum(ph * rad, axis=-1) / np.sqrt(2 * np.pi * L)


def _safe_div(num, den, limit):
    """num/den with the analytic limit substituted where den ~ 0."""
    den = np.asarray(den, dtype=complex)
    small = np.abs(den) < 1e-10
    if not np.any(small):
        return num / den
    out = np.asarray(num / np.where(small, 1.0, den), dtype=complex)
    lim = np.broadcast_to(np.asarray(limit, dtype=complex), out.shape)
    return np.where(np.broadcast_to(small, out.shape), lim, out)


def point_source_bloch(src: PointSource, grid: AlphaGrid, mesh, H=None,
                       J=None) -> BlochIncident:
    """Bloch-transformed point source: nodal field plus modal boundary data.

    The per-alpha field is the Rayleigh series derived from the Weyl integral
    of the image pair; truncation covers all propagating modes plus enough
    evanescent ones that the slowest factor exp(-|beta_J|(y2 - H)) is below
    1e-7. Validated against the windowed direct Hankel sum (see oracle).
    """
    lam_star = grid.lambda_star
    H = H if H is not None else mesh.H
    if src.y2 <= H:
        raise ValueError(f"point source must lie above the top boundary "
                         f"(y2={src.y2} <= H={H})")
    if J is None:
        J = max(default_truncation(src.k, lam_star),
                int(np.ceil((src.k + 16.0 / (src.y2 - H)) / lam_star)) + 2)
    traces = [point_source_traces(src, a, H, lam_star, J) for a in grid.nodes]
    inc = BlochIncident(kind="point", grid=grid, traces=traces, k=src.k,
                        lambda_star=lam_star, info={"y": (src.y1, src.y2),
                                                    "J": J, "H": float(H)})
    if mesh is not None:
        vals = np.stack([
            point_source_field_values(src, a, mesh.vertices[:, 0],
                                      mesh.vertices[:, 1], lam_star, J)
            for a in grid.nodes])
        inc.info["field"] = BlochField(grid=grid, values=vals,
                                       kind="quasiperiodic",
                                       x1=mesh.vertices[:, 0])
    return inc


def herglotz_traces(density: HerglotzDensity, alpha, H, k, lambda_star,
                    beta_floor=1e-6) -> IncidentTraces:
    """Modal data of the Bloch-transformed Herglotz wave at one alpha.

    Finite sum over propagating modes |xi_j| < k. The factored density gives
    amplitude (sqrt(Lstar)/k) h(beta_j/k) per mode (bounded across the
    anomaly set); the raw density divides by beta_j and refuses nodes with
    beta below ``beta_floor`` where the density does not vanish.
    """
    jmax = int(np.ceil((k + abs(alpha)) / lambda_star)) + 1
    J = max(default_truncation(k, lambda_star), jmax)
    js = np.arange(-J, J + 1)
    xi = alpha - lambda_star * js
    prop = np.abs(xi) < k
    b = beta(js, alpha, k, lambda_star)
    c = np.zeros(2 * J + 1, complex)
    if density.factored:
        amp = np.zeros(2 * J + 1, complex)
        amp[prop] = (np.sqrt(lambda_star) / k) * density.h(b[prop].real / k)
    else:
        phi_vals = np.zeros(2 * J + 1)
        th = np.arcsin(np.clip(xi[prop] / k, -1.0, 1.0))
        phi_vals[prop] = density.phi(th)
        live = prop & (phi_vals != 0.0)
        if np.any(live & (np.abs(b) < beta_floor)):
            raise ValueError(
                "raw Herglotz density at a near-anomalous node (beta < "
                f"{beta_floor}); use the factored form h[cos t] cos t")
        amp = np.zeros(2 * J + 1, complex)
        amp[live] = np.sqrt(lambda_star) * phi_vals[live] / b[live]
    c[:] = amp * np.exp(-1j * b * H)
    d = -1j * b * c                      # purely downward modes
    return IncidentTraces(c=c, d=d, alpha=float(alpha), k=k,
                          lambda_star=lambda_star)


def herglotz_field_values(density, alpha, x1, x2, k, lambda_star,
                          beta_floor=1e-6):
    tr = herglotz_traces(density, alpha, 0.0, k, lambda_star, beta_floor)
    js = tr.modes
    xi = alpha - lambda_star * js
    b = beta(js, alpha, k, lambda_star)
    x1 = np.asarray(x1, dtype=float)[..., None]
    x2 = np.asarray(x2, dtype=float)[..., None]
    return np.sum(tr.c * np.exp(1j * xi * x1 - 1j * b * x2), axis=-1)


def herglotz_bloch(density: HerglotzDensity, grid: AlphaGrid, mesh, k,
                   H=None) -> BlochIncident:
    """Bloch-transformed Herglotz wave over the grid (finite modal sums)."""
    lam_star = grid.lambda_star
    H = H if H is not None else mesh.H
    traces = [herglotz_traces(density, a, H, k, lam_star) for a in grid.nodes]
    inc = BlochIncident(kind="herglotz", grid=grid, traces=traces, k=k,
                        lambda_star=lam_star,
                        info={"factored": density.factored, "H": float(H)})
    if mesh is not None:
        vals = np.stack([
            herglotz_field_values(density, a, mesh.vertices[:, 0],
                                  mesh.vertices[:, 1], k, lam_star)
            for a in grid.nodes])
        inc.info["field"] = BlochField(grid=grid, values=vals,
                                       kind="quasiperiodic",
                                       x1=mesh.vertices[:, 0])
    return inc


# ---------------------------------------------------------------------------
# Load assembly on the top boundary
# ---------------------------------------------------------------------------
def incident_rhs(traces: IncidentTraces, mesh):
    """Assemble the load vector on the top-boundary master dofs.

    F[a] = L * sum_j f_j * conj(T[a, j]) with f = d - i*beta*c, using the
    exact per-edge trace integrals. Returns (top_master_nodes, F).
    """
    if traces is None:
        raise ValueError("incident data lacks boundary trace/derivative data")
    L = mesh.period
    top, T = top_trace_coefficients(mesh, traces.J)
    F = L * (np.conj(T) @ traces.rhs_coeffs())
    return top, F
