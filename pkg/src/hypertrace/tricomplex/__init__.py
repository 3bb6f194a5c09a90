"""Triangulation data model: combinatorics, shapes, geometry, file format."""

from .combinatorics import (
    CombTriangulation, Equations, EquationRow, TriangulationError,
    EDGE_SLOTS, EDGE_SLOT_INDEX, EDGE_PARAM,
)
from .shapes import ShapeAssignment, SolveError, solve_shapes, equation_residual
from .geometry import (
    GeomTriangulation, build_geometry_ideal, build_geometry_material,
    validate, dihedral_angle, edge_distance,
)
from . import fileformat
