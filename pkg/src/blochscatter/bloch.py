"""Discrete Bloch transform and quadrature grids over the dual cell.

Forward transform of a field stored cell-by-cell on one shared mesh:

    w(alpha_m, x) = sqrt(L / 2 pi) * sum_j u_j(x) exp(-i alpha_m L j),

inverse by quadrature over Wstar = (-Lstar/2, Lstar/2]:

    u_j(x) = sqrt(L / 2 pi) * sum_m omega_m w(alpha_m, x) exp(+i L j alpha_m).

Grids are either midpoint-uniform (shifted off the anomaly set) or graded:
Wstar is cut at the Wood anomalies and each subinterval is integrated with
the substitution alpha = endpoint +- t^2, which absorbs the square-root
behaviour of the transformed field analytically.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .spectral import SingularSet

__all__ = [
    "AlphaGrid", "PhysicalField", "BlochField",
    "bloch_forward", "bloch_inverse", "make_alpha_grid",
]


@dataclass
class AlphaGrid:
    """Quadrature nodes and weights on Wstar, kept clear of the anomaly set."""

    nodes: np.ndarray
    weights: np.ndarray
    lambda_star: float
    mode: str                      # "uniform" | "graded"
    anomalies: Optional[SingularSet] = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1D arrays")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        wsum = float(np.sum(self.weights))
        if abs(wsum - self.lambda_star) > 1e-12 * max(1.0, self.lambda_star):
            raise ValueError(
                f"weights sum to {wsum!r}, expected Lstar={self.lambda_star!r}")
        if self.anomalies is not None and len(self.anomalies):
            if float(np.min(self.anomalies.min_distance(self.nodes))) <= 1e-8:
                raise ValueError("a quadrature node collides with the anomaly set")

    @property
    def M(self) -> int:
        return len(self.nodes)

    def nearest(self, alpha):
        """Index and signed distance of the node closest to alpha mod Lstar."""
        d = self.nodes[None, :] - (alpha + self.lambda_star * np.arange(-2, 3))[:, None]
        flat = np.argmin(np.abs(d))
        _, m = np.unravel_index(flat, d.shape)
        return int(m), float(d.ravel()[flat])

    def reversed(self) -> "AlphaGrid":
        return AlphaGrid(nodes=self.nodes[::-1].copy(),
                         weights=self.weights[::-1].copy(),
                         lambda_star=self.lambda_star, mode=self.mode,
                         anomalies=self.anomalies)


@dataclass
class PhysicalField:
    """Per-cell nodal values on one shared cell mesh.

    ``values[c]`` holds the field on cell ``cells[c]``, i.e. u(x + (L*j, 0))
    for x in the reference cell and j = cells[c].
    """

    cells: np.ndarray              # cell indices j
    values: np.ndarray             # (n_cells, n_nodes) complex
    period: float
    aliased: bool = False

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=int)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[0] != self.cells.size:
            raise ValueError("one value row per cell required")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite field values")

    @classmethod
    def zeros(cls, cells, n_nodes, period):
        cells = np.asarray(cells, dtype=int)
        return cls(cells=cells, values=np.zeros((cells.size, n_nodes), complex),
                   period=period)

    def norm(self) -> float:
        """Cell-summed discrete l2 norm."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))


@dataclass
class BlochField:
    """Nodal fields at the alpha-grid nodes, in one of two representations.

    ``kind == "quasiperiodic"`` stores w(alpha_m, .); ``kind == "periodized"``
    stores v(alpha_m, .) = exp(-i alpha_m x1) w(alpha_m, .). Conversion is an
    exact nodal phase multiplication against the mesh x1 coordinates.
    """

    grid: AlphaGrid
    values: np.ndarray             # (M, n_nodes) complex
    kind: str = "quasiperiodic"
    x1: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[0] != self.grid.M:
            raise ValueError("one value row per grid node required")
        if self.kind not in ("quasiperiodic", "periodized"):
            raise ValueError(f"unknown representation {self.kind!r}")

    def with_coords(self, mesh) -> "BlochField":
        self.x1 = mesh.vertices[:, 0]
        return self

    def _phases(self):
        if self.x1 is None:
            raise ValueError("representation conversion needs mesh x1 coordinates")
        return np.exp(1j * np.outer(self.grid.nodes, self.x1))

    def to_periodized(self) -> "BlochField":
        if self.kind == "periodized":
            return self
        return BlochField(grid=self.grid, values=self.values / self._phases(),
                          kind="periodized", x1=self.x1)

    def to_quasiperiodic(self) -> "BlochField":
        if self.kind == "quasiperiodic":
            return self
        return BlochField(grid=self.grid, values=self.values * self._phases(),
                          kind="quasiperiodic", x1=self.x1)

    def grid_norm(self) -> float:
        """Quadrature-weighted L2-in-alpha norm, nodal l2 in x."""
        return float(np.sqrt(np.sum(self.grid.weights[:, None]
                                    * np.abs(self.values) ** 2)))


def bloch_forward(u: PhysicalField, grid: AlphaGrid) -> BlochField:
    """Forward transform of a compactly supported cell-indexed field."""
    L = u.period
    phases = np.exp(-1j * np.outer(grid.nodes, L * u.cells))
    vals = np.sqrt(L / (2 * np.pi)) * phases @ u.values
    return BlochField(grid=grid, values=vals, kind="quasiperiodic")


def bloch_inverse(w: BlochField, cell_range, period=None) -> PhysicalField:
    """Inverse transform by quadrature onto the requested cell indices.

    For a uniform M-node grid the transform pair is a discrete Fourier pair
    and the inverse is exact for fields supported on <= M cells; requesting
    |j| > M/2 sets the ``aliased`` flag on the output.
    """
    if w.kind != "quasiperiodic":
        w = w.to_quasiperiodic()
    cells = np.asarray(cell_range, dtype=int)
    L = period if period is not None else 2 * np.pi / w.grid.lambda_star
    phases = np.exp(1j * np.outer(L * cells, w.grid.nodes))
    vals = np.sqrt(L / (2 * np.pi)) * (phases * w.grid.weights) @ w.values
    aliased = bool(np.max(np.abs(cells)) > w.grid.M / 2)
    if aliased:
        warnings.warn("cell range exceeds M/2: inverse transform is aliased",
                      stacklevel=2)
    return PhysicalField(cells=cells, values=vals, period=L, aliased=aliased)


def make_alpha_grid(M, anomalies: SingularSet, mode="uniform") -> AlphaGrid:
    """Quadrature rule with M nodes on Wstar.

    uniform: midpoint rule, rigidly shifted (wrapping on the torus) if any
    node falls within 1e-7*Lstar of an anomaly. graded: Wstar is cut at the
    anomalies (wrapping the circle); each subinterval gets nodes via the
    substitution alpha = a + t^2 from its left half and alpha = b - t^2 from
    its right half, with uniform midpoint nodes in t; weights 2*t*dt make the
    weight sum exact. Endpoints are never nodes.
    """
    if M < 2:
        raise ValueError("need at least 2 quadrature nodes")
    lam_star = anomalies.lambda_star
    lo, hi = -lam_star / 2, lam_star / 2

    if mode == "uniform":
        h = lam_star / M
        base = lo + (np.arange(M) + 0.5) * h
        nodes = base
        if len(anomalies):
            for trial in range(64):
                shift = trial * h / (8 * np.pi)     # irrational fraction of h
                cand = lo + np.mod(base - lo + shift, lam_star)
                if float(np.min(anomalies.min_distance(cand))) > 1e-7 * lam_star:
                    nodes = np.sort(cand)
                    break
            else:
                raise ValueError("could not shift the uniform grid off the anomaly set")
        return AlphaGrid(nodes=nodes, weights=np.full(M, h),
                         lambda_star=lam_star, mode="uniform", anomalies=anomalies)

    if mode != "graded":
        raise ValueError(f"unknown grid mode {mode!r}")

    # cut points on the circle Wstar
    cuts = np.sort(anomalies.alphas[(anomalies.alphas > lo) & (anomalies.alphas <= hi)])
    if len(cuts) == 0:
        return make_alpha_grid(M, anomalies, mode="uniform")
    intervals = []
    for i in range(len(cuts)):
        a = cuts[i]
        b = cuts[i + 1] if i + 1 < len(cuts) else cuts[0] + lam_star
        intervals.append((a, b))
    if M < 2 * len(intervals):
        raise ValueError(f"M={M} too small for {len(intervals)} subintervals")

    # proportional node allocation, at least 2 per subinterval
    lens = np.array([b - a for a, b in intervals])
    counts = np.maximum(2, np.floor(M * lens / lam_star).astype(int))
    while counts.sum() > M:
        counts[np.argmax(counts)] -= 1
    while counts.sum() < M:
        counts[np.argmin(counts)] += 1

    nodes, weights = [], []
    for (a, b), n in zip(intervals, counts):
        mid = 0.5 * (a + b)
        n_left = n // 2
        n_right = n - n_left
        for (anchor, sgn, cnt) in ((a, +1.0, n_left), (b, -1.0, n_right)):
            tmax = np.sqrt((b - a) / 2)
            dt = tmax / cnt
            t = (np.arange(cnt) + 0.5) * dt
            nodes.append(anchor + sgn * t ** 2)
            weights.append(2 * t * dt)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    # wrap into Wstar and sort
    nodes = lo + np.mod(nodes - lo, lam_star)
    order = np.argsort(nodes)
    return AlphaGrid(nodes=nodes[order], weights=weights[order],
                     lambda_star=lam_star, mode="graded", anomalies=anomalies)
