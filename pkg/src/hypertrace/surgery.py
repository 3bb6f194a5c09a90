"""Dehn-surgery paths in the shape variety.

A path solves the gluing equations with filling coefficients (p(s), q(s))
by Newton continuation: the first sample starts from the complete
structure, each later sample from its predecessor.  Incomplete structures
are handed to the engine unchanged; rays near the incompleteness locus
exhaust the step cap, which render_path reports per frame.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .tricomplex import (
    CombTriangulation, ShapeAssignment, SolveError, solve_shapes,
    build_geometry_ideal,
)
from . import engine as eng
from . import hypgeom as hg


@dataclass
class SurgeryPath:
    s_values: list
    solutions: list          # ShapeAssignment per solved s
    complete: ShapeAssignment
    slope_family: object     # s -> (p, q)
    diagnostic: str | None = None   # set when the path stopped early

    def solved_prefix(self):
        return list(zip(self.s_values[: len(self.solutions)], self.solutions))


def default_slope_family(s):
    """The bending family (4s, -s): the cone deformation toward (4, -1)."""
    return (4.0 * s, -1.0 * s)


def trace_path(tri: CombTriangulation, s_values, slope_family=default_slope_family,
               cusp=0, tol=1e-12):
    """Continuation along the slope family from the complete structure.

    s_values must be ordered from the complete end (large s) toward the
    filling; returns the full path or the longest solved prefix with a
    diagnostic.  Consecutive solutions must stay Newton-connected: a
    per-tet shape jump above 0.5 is treated as a branch jump and stops
    the path.
    """
    s_values = list(s_values)
    if any(b >= a for a, b in zip(s_values, s_values[1:])):
        raise ValueError("s_values must strictly decrease toward the filling")
    complete = solve_shapes(tri, tol=tol)
    solutions = []
    prev = complete
    diagnostic = None
    for s in s_values:
        filling = [None] * tri.n_cusps
        filling[cusp] = slope_family(s)
        try:
            sol = solve_shapes(tri, filling=filling, initial=prev, tol=tol)
        except SolveError as e:
            diagnostic = f"Newton diverged at s = {s}: {e}"
            break
        jump = np.abs(sol.shapes - prev.shapes).max()
        if jump > 0.5:
            diagnostic = f"branch jump at s = {s} (max shape step {jump:.3f})"
            break
        solutions.append(sol)
        prev = sol
    return SurgeryPath(s_values=s_values, solutions=solutions,
                       complete=complete, slope_family=slope_family,
                       diagnostic=diagnostic)


def path_manifest(path: SurgeryPath):
    """UTF-8 JSON manifest: per-sample s, shapes, residual."""
    rows = []
    for s, sol in path.solved_prefix():
        rows.append({
            "s": s,
            "shapes": [[float(z.real), float(z.imag)] for z in sol.shapes],
            "residual": sol.residual,
        })
    doc = {"samples": rows}
    if path.diagnostic:
        doc["diagnostic"] = path.diagnostic
    return json.dumps(doc, indent=1)


def transport_view(old_geom, new_geom, view: eng.View):
    """Carry a camera across geometries by tet-local plane coordinates.

    The camera's position is encoded by its four plane pairings in its
    tetrahedron and re-solved against the new geometry's planes; frame
    vectors are transported the same way and re-orthonormalized.  This is
    a continuous choice along surgery paths (there is no canonical one).
    """
    tet = view.tet
    n_old = old_geom.planes[tet]
    n_new = new_geom.planes[tet]
    j_old = n_old * hg.J_DIAG
    j_new = n_new * hg.J_DIAG

    def carry(x):
        coords = j_old @ x
        return np.linalg.solve(j_new, coords)

    p = carry(view.anchor)
    p = hg.normalize_point(p if p[0] > 0 else -p)
    axes = [carry(e) for e in view.frame]
    p, axes = hg.frame_orthonormalize(p, axes)
    return dataclasses.replace(view, anchor=p, frame=np.stack(axes))


def frame_name(s):
    return f"frame_{s:07.3f}"


def render_path(tri: CombTriangulation, path: SurgeryPath, view: eng.View,
                cfg: eng.RenderConfig):
    """Render every solved sample with a continuously transported view.

    Yields (s, WeightField, step_cap_fraction, transported view) per
    frame, plus the complete structure first under s = inf.
    """
    geom0 = build_geometry_ideal(tri, path.complete.shapes)
    field0 = eng.render(geom0, view, cfg)
    yield (np.inf, field0, field0.tag_fraction(eng.TAG_BUDGET), view)
    prev_geom = geom0
    cur_view = view
    for s, sol in path.solved_prefix():
        geom = build_geometry_ideal(tri, sol.shapes)
        cur_view = transport_view(prev_geom, geom, cur_view)
        field = eng.render(geom, cur_view, cfg)
        yield (s, field, field.tag_fraction(eng.TAG_BUDGET), cur_view)
        prev_geom = geom
