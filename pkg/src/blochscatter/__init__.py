"""Scattering of 2D Helmholtz waves by locally perturbed periodic sound-soft
surfaces, computed through the Floquet-Bloch transform.

Core pipeline: geometry (cell mesh + flattening map) -> spectral (mode
exponents, DtN maps) -> bloch (transform + alpha quadrature) -> incident
(plane/point/Herglotz data) -> cellsolver (per-alpha FEM) -> coupled
(perturbation-coupled block solve + synthesis) -> anomaly (square-root
singularity fits and quadrature studies).
"""

from .geometry import (
    Profile, SurfaceSpec, DomainSpec, CellMesh, GeometryError,
    build_cell_mesh, map_phi_p, jacobian_coeffs, validate_geometry,
)
from .spectral import (
    BetaBranch, SingularSet, TraceCoeffs, beta, singular_set,
    dtn_apply, dtn_bilinear_matrix,
)
from .bloch import (
    AlphaGrid, PhysicalField, BlochField, bloch_forward, bloch_inverse,
    make_alpha_grid,
)

__version__ = "0.1.0"
