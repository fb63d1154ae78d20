"""Periodic surfaces, the periodic cell mesh, and the domain-flattening map.

A grating is the graph of a Lipschitz periodic profile zeta with period L;
a local perturbation zeta_p agrees with zeta outside one period W = (-L/2, L/2].
The solver works on the unperturbed cell mesh; the perturbation enters through
the diffeomorphism

    Phi_p(x1, x2) = (x1, x2 + (x2 - H)^3 / (zeta(x1) - H)^3 * (zeta_p(x1) - zeta(x1)))

which maps the strip above zeta onto the strip above zeta_p while fixing the
artificial boundary {x2 = H}, and through its Jacobian coefficients

    A_p = |det DPhi_p| (DPhi_p)^{-1} (DPhi_p)^{-T},   c_p = |det DPhi_p|.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Profile",
    "SurfaceSpec",
    "DomainSpec",
    "CellMesh",
    "GeometryError",
    "build_cell_mesh",
    "map_phi_p",
    "jacobian_coeffs",
    "validate_geometry",
]


class GeometryError(ValueError):
    """Invalid surface, domain, or mesh configuration."""


# ---------------------------------------------------------------------------
# Surface profiles
# ---------------------------------------------------------------------------
class Profile:
    """A height profile x1 -> z with an analytic (or sampled-exact) derivative.

    Two canonical representations:
      * callable pair (f, df); df may be None, in which case a fourth-order
        central difference with step 1e-5 stands in (adequate for smooth f),
      * piecewise-linear samples over one period (the interchange form);
        slopes are then exact and the profile is periodic by wrapping.
    """

    def __init__(self, fn, dfn, period=None, kind="callable"):
        self._fn = fn
        self._dfn = dfn
        self.period = period
        self.kind = kind

    @classmethod
    def from_callable(cls, f: Callable, df: Optional[Callable] = None,
                      period: Optional[float] = None) -> "Profile":
        if df is None:
            h = 1e-5

            def df(x, _f=f, _h=h):
                x = np.asarray(x, dtype=float)
                return (8.0 * (_f(x + _h) - _f(x - _h))
                        - (_f(x + 2 * _h) - _f(x - 2 * _h))) / (12.0 * _h)

        return cls(f, df, period=period, kind="callable")

    @classmethod
    def from_samples(cls, x, z, period: Optional[float] = None,
                     periodic: bool = True) -> "Profile":
        """Piecewise-linear profile through (x, z) samples.

        With ``periodic`` the samples cover one period and are wrapped; the
        closing segment joins the last sample to the first shifted by the
        period. Non-periodic sampled profiles are zero outside the sample
        range (used for compactly supported perturbations).
        """
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if x.ndim != 1 or x.shape != z.shape or x.size < 2:
            raise GeometryError("profile samples need matching 1D arrays, >= 2 points")
        if np.any(np.diff(x) <= 0):
            raise GeometryError("profile sample abscissae must be strictly increasing")
        if periodic:
            if period is None:
                raise GeometryError("periodic sampled profile needs a period")
            if x[-1] - x[0] >= period:
                raise GeometryError("periodic profile samples must cover < one period")
            xx = np.concatenate([x, [x[0] + period]])
            zz = np.concatenate([z, [z[0]]])
        else:
            xx, zz = x, z
        slopes = np.diff(zz) / np.diff(xx)

        def f(t, _xx=xx, _zz=zz, _s=slopes, _per=periodic, _x0=x[0], _L=period):
            t = np.asarray(t, dtype=float)
            if _per:
                t = _x0 + np.mod(t - _x0, _L)
            out = np.interp(t, _xx, _zz, left=0.0, right=0.0)
            if not _per:
                out = np.where((t < _xx[0]) | (t > _xx[-1]), 0.0, out)
            return out

        def df(t, _xx=xx, _s=slopes, _per=periodic, _x0=x[0], _L=period):
            t = np.asarray(t, dtype=float)
            if _per:
                t = _x0 + np.mod(t - _x0, _L)
            idx = np.clip(np.searchsorted(_xx, t, side="right") - 1, 0, len(_s) - 1)
            out = _s[idx]
            if not _per:
                out = np.where((t < _xx[0]) | (t >= _xx[-1]), 0.0, out)
            return out

        return cls(f, df, period=period, kind="samples")

    @classmethod
    def constant(cls, c: float) -> "Profile":
        return cls(lambda x: np.full_like(np.asarray(x, dtype=float), float(c)),
                   lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                   kind="constant")

    @classmethod
    def zero(cls) -> "Profile":
        return cls.constant(0.0)

    def __call__(self, x):
        return np.asarray(self._fn(np.asarray(x, dtype=float)), dtype=float)

    def derivative(self, x):
        return np.asarray(self._dfn(np.asarray(x, dtype=float)), dtype=float)

    def shifted_sum(self, other: "Profile") -> "Profile":
        """Pointwise sum profile (used for zeta + bump)."""
        return Profile(lambda x: self(x) + other(x),
                       lambda x: self.derivative(x) + other.derivative(x),
                       period=self.period, kind="sum")


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SurfaceSpec:
    """Periodic profile, compactly supported perturbation, and period.

    ``zeta_p`` must agree with ``zeta`` for |x1| >= period/2; both must stay
    strictly above {x2 = 0}. ``lipschitz_bound`` is the declared bound on the
    profile slopes (soft-checked on a sample grid).
    """

    zeta: Profile
    zeta_p: Profile
    period: float
    lipschitz_bound: float = 10.0

    def __post_init__(self):
        if self.period <= 0:
            raise GeometryError("period must be positive")
        if self.lipschitz_bound <= 0:
            raise GeometryError("lipschitz_bound must be positive")
        self.validate()

    @classmethod
    def unperturbed(cls, zeta: Profile, period: float,
                    lipschitz_bound: float = 10.0) -> "SurfaceSpec":
        return cls(zeta=zeta, zeta_p=zeta, period=period,
                   lipschitz_bound=lipschitz_bound)

    @classmethod
    def with_bump(cls, zeta: Profile, bump: Profile, period: float,
                  lipschitz_bound: float = 10.0) -> "SurfaceSpec":
        return cls(zeta=zeta, zeta_p=zeta.shifted_sum(bump), period=period,
                   lipschitz_bound=lipschitz_bound)

    def perturbation(self, x):
        return self.zeta_p(x) - self.zeta(x)

    @property
    def has_perturbation(self) -> bool:
        xs = _sample_grid(self.period)
        return bool(np.max(np.abs(self.perturbation(xs))) > 0.0)

    def validate(self) -> None:
        L = self.period
        xs = _sample_grid(L)
        z = self.zeta(xs)
        zp = self.zeta_p(xs)
        per_err = np.max(np.abs(self.zeta(xs + L) - z))
        if per_err > 1e-12:
            raise GeometryError(
                f"zeta is not {L}-periodic on the sample grid (max dev {per_err:.3e})")
        if np.min(z) <= 0.0 or np.min(zp) <= 0.0:
            raise GeometryError("profiles must be strictly above {x2 = 0}")
        outside = np.concatenate([np.linspace(L / 2, 1.5 * L, 97),
                                  np.linspace(-1.5 * L, -L / 2, 97)])
        supp_err = np.max(np.abs(self.zeta_p(outside) - self.zeta(outside)))
        if supp_err > 1e-12:
            raise GeometryError(
                f"perturbation support escapes W = (-L/2, L/2] (max dev {supp_err:.3e})")
        slopes = np.abs(np.diff(z) / np.diff(xs))
        if np.max(slopes) > 1.01 * self.lipschitz_bound:
            raise GeometryError(
                f"sampled slope {np.max(slopes):.3g} exceeds declared Lipschitz bound")


def _sample_grid(period: float, n: int = 257) -> np.ndarray:
    # irrational-step grid so kinks/zeros of typical profiles are not all hit exactly
    return np.linspace(-period / 2 + period * 1.3e-4, period / 2, n)


@dataclass(frozen=True)
class DomainSpec:
    """Wavenumber and truncation heights, with max(zeta, zeta_p) < H0 < H."""

    k: float
    H: float
    H0: float

    def __post_init__(self):
        if self.k <= 0:
            raise GeometryError("wavenumber k must be positive")
        if not (self.H0 < self.H):
            raise GeometryError(f"need H0 < H, got H0={self.H0}, H={self.H}")


def validate_geometry(spec: SurfaceSpec, dom: DomainSpec) -> None:
    """Cross-checks between surface and domain: heights and map injectivity."""
    xs = _sample_grid(spec.period)
    zmax = max(np.max(spec.zeta(xs)), np.max(spec.zeta_p(xs)))
    if not (zmax < dom.H0):
        raise GeometryError(
            f"max surface height {zmax:.6g} must lie below H0={dom.H0}")
    # injectivity of Phi_p: sup |zeta_p - zeta| < (H - zeta)/3
    p = np.abs(spec.perturbation(xs))
    gap = dom.H - spec.zeta(xs)
    margin = np.max(3.0 * p / gap)
    if margin >= 1.0:
        raise GeometryError(
            "perturbation too large for the flattening map (needs "
            "sup 3|zeta_p - zeta| / (H - zeta) < 1, got "
            f"{margin:.3f}); use a smaller perturbation or a larger H - zeta gap")


# ---------------------------------------------------------------------------
# Cell mesh
# ---------------------------------------------------------------------------
@dataclass
class CellMesh:
    """Conforming triangulation of one periodic cell with tagged boundaries.

    Vertices are laid out on a mapped structured grid: ``nx + 1`` columns
    uniform in x1 (the last column duplicates the first shifted by exactly one
    period), each column graded linearly in x2 from zeta(x1) to H. The
    structure is retained for exact point location; all consumers treat the
    mesh as a plain triangle list.
    """

    vertices: np.ndarray          # (N, 2)
    triangles: np.ndarray         # (T, 3) CCW
    boundary_edges: dict          # tag -> (n_e, 2) vertex index pairs
    periodic_pairs: np.ndarray    # (ny+1, 2) [left, right] vertex indices
    period: float
    H: float
    nx: int = field(repr=False, default=0)
    ny: int = field(repr=False, default=0)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def node_index(self, i: int, j: int) -> int:
        """Structured index: column i in 0..nx, row j in 0..ny (bottom..top)."""
        return i * (self.ny + 1) + j

    @property
    def bottom_nodes(self) -> np.ndarray:
        return np.array([self.node_index(i, 0) for i in range(self.nx + 1)])

    @property
    def top_nodes(self) -> np.ndarray:
        return np.array([self.node_index(i, self.ny) for i in range(self.nx + 1)])

    @property
    def left_nodes(self) -> np.ndarray:
        return self.periodic_pairs[:, 0]

    @property
    def right_nodes(self) -> np.ndarray:
        return self.periodic_pairs[:, 1]

    def node_tags(self) -> np.ndarray:
        """Per-vertex tag with priority bottom > top > left > right."""
        tags = np.full(self.n_vertices, "interior", dtype=object)
        tags[self.right_nodes] = "right"
        tags[self.left_nodes] = "left"
        tags[self.top_nodes] = "top"
        tags[self.bottom_nodes] = "bottom"
        return tags

    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        e = np.concatenate([v[t[:, 1]] - v[t[:, 0]],
                            v[t[:, 2]] - v[t[:, 1]],
                            v[t[:, 0]] - v[t[:, 2]]])
        return np.hypot(e[:, 0], e[:, 1])

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        a = v[t[:, 1]] - v[t[:, 0]]
        b = v[t[:, 2]] - v[t[:, 0]]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    def validate(self, zeta: Optional[Profile] = None) -> None:
        pairs = self.periodic_pairs
        dx = self.vertices[pairs[:, 1], 0] - self.vertices[pairs[:, 0], 0]
        dz = self.vertices[pairs[:, 1], 1] - self.vertices[pairs[:, 0], 1]
        if np.max(np.abs(dx - self.period)) > 1e-12 * max(1.0, self.period):
            raise GeometryError("periodic pairs are not offset by exactly one period")
        if np.max(np.abs(dz)) > 1e-12:
            raise GeometryError("periodic pairs differ in x2")
        areas = self.triangle_areas()
        if np.min(areas) <= 0.0:
            bad = int(np.argmin(areas))
            raise GeometryError(f"degenerate triangle {bad} (area {areas[bad]:.3e})")
        if zeta is not None:
            bot = self.bottom_nodes
            dev = np.max(np.abs(self.vertices[bot, 1] - zeta(self.vertices[bot, 0])))
            if dev > 1e-10:
                raise GeometryError(f"bottom vertices off the profile by {dev:.3e}")

    def locate(self, points: np.ndarray):
        """Locate points in the structured mesh.

        Returns (tri_indices, barycentric (n,3)). Points outside the cell in
        x1 must be reduced by the caller; x2 is clipped into [zeta, H].
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        nx, ny = self.nx, self.ny
        L = self.period
        x0 = -L / 2
        hx = L / nx
        ci = np.clip(np.floor((pts[:, 0] - x0) / hx).astype(int), 0, nx - 1)
        tri_idx = np.empty(len(pts), dtype=int)
        bary = np.empty((len(pts), 3))
        for m, (p, i) in enumerate(zip(pts, ci)):
            t0 = 2 * (i * ny)
            found = False
            # column-local scan: the two triangles per quad row
            zb0 = self.vertices[self.node_index(i, 0), 1]
            zb1 = self.vertices[self.node_index(i + 1, 0), 1]
            frac = (p[0] - (x0 + i * hx)) / hx
            zbot = zb0 * (1 - frac) + zb1 * frac
            s = (p[1] - zbot) / (self.H - zbot) if self.H > zbot else 0.0
            j0 = int(np.clip(np.floor(s * ny), 0, ny - 1))
            for j in _scan_order(j0, ny):
                for t in (t0 + 2 * j, t0 + 2 * j + 1):
                    lam = _barycentric(self.vertices, self.triangles[t], p)
                    if np.min(lam) >= -1e-9:
                        tri_idx[m] = t
                        bary[m] = np.clip(lam, 0.0, 1.0)
                        found = True
                        break
                if found:
                    break
            if not found:
                raise GeometryError(f"point {p} not located in cell mesh")
        return tri_idx, bary

    def interpolate(self, nodal: np.ndarray, points: np.ndarray) -> np.ndarray:
        tri, lam = self.locate(points)
        conn = self.triangles[tri]
        return np.einsum("nk,nk->n", np.asarray(nodal)[conn], lam)


def _scan_order(j0, ny):
    yield j0
    for d in range(1, ny):
        if j0 - d >= 0:
            yield j0 - d
        if j0 + d < ny:
            yield j0 + d


def _barycentric(verts, tri, p):
    a, b, c = verts[tri[0]], verts[tri[1]], verts[tri[2]]
    M = np.array([[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]])
    rhs = np.array([p[0] - a[0], p[1] - a[1]])
    uv = np.linalg.solve(M, rhs)
    return np.array([1.0 - uv[0] - uv[1], uv[0], uv[1]])


def build_cell_mesh(spec: SurfaceSpec, dom: DomainSpec, h_target: float) -> CellMesh:
    """Triangulate one periodic cell with max edge length <= h_target.

    Columns are uniform in x1; each column is graded linearly between
    zeta(x1) and H; quads are split along mirror-symmetric diagonals so an
    even profile yields a mirror-symmetric mesh. Lateral vertex distributions
    are identical by construction (the right column copies the left).
    """
    if h_target <= 0:
        raise GeometryError("h_target must be positive")
    validate_geometry(spec, dom)
    L, H = spec.period, dom.H

    nx = max(4, int(np.ceil(L / h_target)))
    nx += nx % 2  # even for the mirror-symmetric split
    for _ in range(40):
        x_cols = -L / 2 + L * np.arange(nx + 1) / nx
        zb = spec.zeta(x_cols)
        zb[-1] = zb[0]  # exact periodic copy
        if np.min(H - zb) <= 0:
            i = int(np.argmax(zb))
            raise GeometryError(
                f"degenerate surface: zeta({x_cols[i]:.4g}) = {zb[i]:.4g} >= H = {H}")
        seg = np.hypot(np.diff(x_cols), np.diff(zb))
        if np.max(seg) <= h_target:
            break
        nx *= 2
    else:
        i = int(np.argmax(seg))
        raise GeometryError(
            "cannot resolve the profile at h_target="
            f"{h_target}: segment [{x_cols[i]:.4g}, {x_cols[i + 1]:.4g}] too steep")

    ny = max(2, int(np.ceil(np.max(H - zb) / h_target)))
    for _ in range(40):
        mesh = _structured_mesh(x_cols, zb, H, L, nx, ny)
        lmax = np.max(mesh.edge_lengths())
        if lmax <= h_target:
            break
        grow = lmax / h_target
        nx2 = int(np.ceil(nx * min(grow, 2.0)))
        nx2 += nx2 % 2
        ny = int(np.ceil(ny * min(grow, 2.0)))
        if nx2 != nx:
            nx = nx2
            x_cols = -L / 2 + L * np.arange(nx + 1) / nx
            zb = spec.zeta(x_cols)
            zb[-1] = zb[0]
    else:
        raise GeometryError("mesh refinement failed to reach h_target")

    mesh.validate(spec.zeta)
    return mesh


def _structured_mesh(x_cols, zb, H, L, nx, ny) -> CellMesh:
    npc = ny + 1
    verts = np.empty(((nx + 1) * npc, 2))
    for i in range(nx + 1):
        s = np.arange(npc) / ny
        verts[i * npc:(i + 1) * npc, 0] = x_cols[i]
        verts[i * npc:(i + 1) * npc, 1] = zb[i] + (H - zb[i]) * s
    # exact lateral match
    verts[nx * npc:, 0] = verts[:npc, 0] + L
    verts[nx * npc:, 1] = verts[:npc, 1]

    tris = np.empty((2 * nx * ny, 3), dtype=int)
    t = 0
    for i in range(nx):
        mirror = (x_cols[i] + x_cols[i + 1]) / 2 < 0
        for j in range(ny):
            a = i * npc + j
            b = (i + 1) * npc + j
            c = (i + 1) * npc + j + 1
            d = i * npc + j + 1
            if mirror:
                tris[t] = (a, b, c)
                tris[t + 1] = (a, c, d)
            else:
                tris[t] = (a, b, d)
                tris[t + 1] = (b, c, d)
            t += 2

    bottom = np.array([[i * npc, (i + 1) * npc] for i in range(nx)])
    top = np.array([[i * npc + ny, (i + 1) * npc + ny] for i in range(nx)])
    left = np.array([[j, j + 1] for j in range(ny)])
    right = np.array([[nx * npc + j, nx * npc + j + 1] for j in range(ny)])
    pairs = np.array([[j, nx * npc + j] for j in range(npc)])

    return CellMesh(vertices=verts, triangles=tris,
                    boundary_edges={"bottom": bottom, "top": top,
                                    "left": left, "right": right},
                    periodic_pairs=pairs, period=L, H=H, nx=nx, ny=ny)


# ---------------------------------------------------------------------------
# Flattening map and Jacobian coefficients
# ---------------------------------------------------------------------------
def map_phi_p(spec: SurfaceSpec, dom: DomainSpec, x) -> np.ndarray:
    """Apply the flattening diffeomorphism to one point or an (n, 2) array.

    Maps the strip zeta <= x2 <= H onto the strip zeta_p <= x2 <= H; the
    bottom boundary lands on the perturbed profile and {x2 = H} stays fixed.
    Identity wherever the perturbation vanishes.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    x1, x2 = pts[:, 0], pts[:, 1]
    z = spec.zeta(x1)
    tol = 1e-10 * max(1.0, dom.H)
    if np.any(x2 < z - tol) or np.any(x2 > dom.H + tol):
        raise GeometryError("point outside the strip zeta <= x2 <= H")
    p = spec.perturbation(x1)
    q = (x2 - dom.H) ** 3 / (z - dom.H) ** 3
    out = np.column_stack([x1, x2 + q * p])
    return out[0] if np.asarray(x).ndim == 1 else out


def jacobian_coeffs(spec: SurfaceSpec, dom: DomainSpec, x):
    """Jacobian coefficients (A_p, c_p) of the flattening map.

    Returns (A, c) with A of shape (..., 2, 2) symmetric positive definite and
    c = det DPhi_p > 0. For zeta_p == zeta returns (I, 1) exactly.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    x1, x2 = pts[:, 0], pts[:, 1]
    z = spec.zeta(x1)
    H = dom.H
    p = spec.perturbation(x1)
    dz = spec.zeta(x1) - H                      # zeta - H < 0
    cub = (x2 - H) ** 3
    # d = dPhi2/dx2, g = dPhi2/dx1
    d = 1.0 + 3.0 * (x2 - H) ** 2 * p / dz ** 3
    dp = spec.zeta_p.derivative(x1) - spec.zeta.derivative(x1)
    dzeta = spec.zeta.derivative(x1)
    g = cub * (dp / dz ** 3 - 3.0 * p * dzeta / dz ** 4)
    if np.any(d <= 1e-12):
        raise GeometryError(
            "flattening map is not injective here (det DPhi_p <= 0); use a "
            "smaller perturbation or a larger H - zeta gap")
    A = np.empty(pts.shape[:1] + (2, 2))
    A[:, 0, 0] = d
    A[:, 0, 1] = -g
    A[:, 1, 0] = -g
    A[:, 1, 1] = (1.0 + g ** 2) / d
    c = d
    if np.asarray(x).ndim == 1:
        return A[0], float(c[0])
    return A, c
