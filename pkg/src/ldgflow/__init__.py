"""High-order local DG solver for curve-shortening flows of closed planar curves."""

from .anisotropy import (
    AnisotropyModel,
    Regime,
    classify_regime,
    gamma_eval,
    surface_energy_matrix,
    wulff_envelope,
    wulff_shape,
)
from .basis import Basis, QuadratureRule, basis_eval, gauss_rule
from .curves import (
    CurveSpec,
    curve_from_table,
    initial_curve,
    load_curve_csv,
    reference_solution,
    shrinking_circle,
)
from .mesh import DGScalarField, DGVectorField, Mesh, l2_project, make_mesh
from .polygons import (
    Polygon,
    manifold_distance,
    monte_carlo_symmetric_difference,
    read_polygon_csv,
    shoelace_area,
    write_polygon_csv,
)

__version__ = "0.1.0"
