"""Newton solver for the logarithmic gluing equations.

Shapes z_i (one per tetrahedron, Im z > 0) must satisfy, for each
equation row, sum_i (a log z_i + b log 1/(1-z_i) + c log (z_i-1)/z_i)
= i*pi*rhs.  The solver always uses the edge rows; without a filling it
adds the completeness rows, with a filling (p, q) on a cusp it adds
p * meridian_row + q * longitude_row with rhs p*rhs_m + q*rhs_l + 2
(the core curve of the filling solid torus rotates by 2*pi).

The logs are tracked continuously along the iteration: after a Newton
update z -> z + dz, the stored values of log z and log(1-z) change by
the principal log of the ratio.  This keeps the branch consistent along
Dehn-surgery continuation paths, where shapes can wander far from the
principal branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .combinatorics import CombTriangulation, TriangulationError


class SolveError(RuntimeError):
    """Newton iteration failed (non-convergence or degenerate shape)."""


@dataclass
class ShapeAssignment:
    shapes: np.ndarray       # complex, per tet
    residual: float
    iterations: int = 0
    residual_history: tuple = ()

    def __post_init__(self):
        self.shapes = np.asarray(self.shapes, dtype=complex)
        if not np.all(np.isfinite(self.shapes)):
            raise SolveError("non-finite shapes")
        if np.any(self.shapes.imag <= 0):
            raise SolveError("shape with non-positive imaginary part")


def _assemble_rows(tri: CombTriangulation, filling=None):
    """Active equation rows as (coeff tensor (m, n, 3), rhs vector (m,))."""
    eq = tri.equations
    if not eq.edge_rows:
        raise TriangulationError("triangulation has no equation rows")
    rows = [(r.coeffs, r.rhs) for r in eq.edge_rows]
    n_cusps = max(len(eq.cusp_rows_meridian), 1)
    if filling is None:
        filling = [None] * n_cusps
    filling = list(filling) + [None] * (n_cusps - len(filling))
    for c, fill in enumerate(filling):
        if fill is None:
            continue
        if not eq.cusp_rows_meridian:
            raise TriangulationError("filling requested but no cusp rows present")
        p, q = fill
        m = eq.cusp_rows_meridian[c]
        l = eq.cusp_rows_longitude[c]
        # scale the combined row so large filling coefficients (far ends of
        # surgery paths) keep the residual target reachable in f64
        norm = max(1.0, abs(p), abs(q))
        rows.append(((p * m.coeffs + q * l.coeffs) / norm,
                     (p * m.rhs + q * l.rhs + 2.0) / norm))
    # completeness rows come in per-cusp groups; include the groups of the
    # unfilled cusps
    n_groups = len(eq.cusp_rows_meridian) or 1
    per_group = len(eq.completeness_rows) // n_groups if eq.completeness_rows else 0
    for c, row in enumerate(eq.completeness_rows):
        cusp = c // per_group if per_group else 0
        if cusp < len(filling) and filling[cusp] is not None:
            continue
        rows.append((row.coeffs, row.rhs))
    coeffs = np.stack([np.asarray(c, dtype=float) for c, _ in rows])
    rhs = np.array([r for _, r in rows], dtype=float)
    return coeffs, rhs


def _log_params(u, v):
    """(log z, log 1/(1-z), log (z-1)/z) from tracked u=log z, v=log(1-z).

    For Im z > 0 we have Im(z - 1) > 0, so log(z-1) = log(1-z) + i*pi on
    the branch that varies continuously with the tracked logs.
    """
    return np.stack([u, -v, v + 1j * np.pi - u], axis=-1)


def _residual(coeffs, rhs, u, v):
    logs = _log_params(u, v)
    vals = np.einsum("rnk,nk->r", coeffs, logs)
    return vals - 1j * np.pi * rhs


def solve_shapes(tri: CombTriangulation, filling=None, initial=None,
                 tol=1e-12, max_iter=100):
    """Solve the gluing equations by damped Newton on the logarithmic form.

    filling: optional per-cusp list of (p, q) pairs (None entries stay
    complete).  initial: optional ShapeAssignment or complex array used
    as the starting point; defaults to z = i for every tetrahedron.
    Raises SolveError on non-convergence or if a shape degenerates to the
    real axis.
    """
    coeffs, rhs = _assemble_rows(tri, filling)
    n = tri.n_tets

    if initial is None:
        z = np.full(n, 1j, dtype=complex)
    elif isinstance(initial, ShapeAssignment):
        z = initial.shapes.astype(complex).copy()
    else:
        z = np.asarray(initial, dtype=complex).copy()
    if np.any(z.imag <= 0):
        raise SolveError("initial shapes must have positive imaginary part")

    u = np.log(z)
    v = np.log(1 - z)

    history = []
    res = _residual(coeffs, rhs, u, v)
    err = np.abs(res).max()
    history.append(err)

    for iteration in range(max_iter):
        if err < tol:
            return ShapeAssignment(
                shapes=z, residual=err, iterations=iteration,
                residual_history=tuple(history))
        # d/dz of the three log parameters
        dz = np.stack([1.0 / z, 1.0 / (1.0 - z), 1.0 / (z * (z - 1.0))], axis=-1)
        jac = np.einsum("rnk,nk->rn", coeffs, dz)
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)

        # damp so that no shape crosses the real axis or moves too wildly
        scale = 1.0
        for _ in range(60):
            z_new = z + scale * step
            if np.all(z_new.imag > 1e-9) and np.all(np.abs(z_new - z) < 0.8 * np.abs(z.imag) + 1.0):
                break
            scale *= 0.5
        else:
            raise SolveError(
                f"shape degenerating towards the real axis at iteration {iteration} "
                f"(min Im z = {z.imag.min():.3g})")
        z_new = z + scale * step
        u = u + np.log(z_new / z)
        v = v + np.log((1 - z_new) / (1 - z))
        z = z_new
        res = _residual(coeffs, rhs, u, v)
        err = np.abs(res).max()
        history.append(err)

    raise SolveError(
        f"Newton did not reach residual {tol} in {max_iter} iterations "
        f"(final residual {err:.3g})")


def equation_residual(tri, shapes, filling=None):
    """Max |row residual| of the active equations at the given shapes."""
    coeffs, rhs = _assemble_rows(tri, filling)
    z = np.asarray(shapes, dtype=complex)
    u = np.log(z)
    v = np.log(1 - z)
    return float(np.abs(_residual(coeffs, rhs, u, v)).max())
