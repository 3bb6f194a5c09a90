"""Geometric realization of triangulations in the hyperboloid model.

An ideal tetrahedron with shape z is realized with its vertices at the
boundary points (0, oo, 1, z) of upper half space, converted to lightlike
vectors through the package-wide identification in hypgeom.  Face-pairing
isometries are the unique orientation-preserving isometries matching the
paired ideal triangles according to the gluing permutation.

A material tetrahedron is recovered from its six edge lengths through the
Minkowski Gram matrix G_ij = -cosh(d_ij), G_ii = -1, factorized against
J = diag(-1,1,1,1); every tetrahedron is stored in a standard position
with face 3 in the reference plane x3 = 0, and pairings align the glued
faces through that plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import hypgeom as hg
from .combinatorics import CombTriangulation, EDGE_SLOTS, TriangulationError

# upper-half-space positions of the four vertices of a shape-z tetrahedron
def uhs_positions(z):
    return [0.0 + 0.0j, np.inf, 1.0 + 0.0j, complex(z)]


@dataclass
class GeomTriangulation:
    """Immutable geometric scene for the ray-tracing engine."""

    name: str
    kind: str                 # "ideal" or "material"
    planes: np.ndarray        # (n, 4, 4) face plane normals, inside is <x,n> < 0
    pairings: np.ndarray      # (n, 4, 4, 4) state transforms when exiting a face
    neighbors: np.ndarray     # (n, 4) neighbor tet indices
    perms: np.ndarray         # (n, 4, 4) gluing vertex permutations
    weights: np.ndarray       # (n, 4) cocycle weight picked up on exit
    vertices: np.ndarray      # (n, 4, 4) ideal: lightlike; material: points
    edge_ends: np.ndarray     # (n, 6, 2, 4) endpoint vectors per edge slot
    edge_gram_inv: np.ndarray # (n, 6, 2, 2) inverse Gram of the endpoint pairs
    edge_cycles: list = field(repr=False, default_factory=list)
    shapes: np.ndarray | None = None
    integer_weights: bool = False

    @property
    def n_tets(self):
        return len(self.planes)

    def astype(self, dtype):
        """Copy with all float arrays cast (f32 kernels for the noise study)."""
        return GeomTriangulation(
            name=self.name, kind=self.kind,
            planes=self.planes.astype(dtype),
            pairings=self.pairings.astype(dtype),
            neighbors=self.neighbors, perms=self.perms,
            weights=self.weights.astype(dtype),
            vertices=self.vertices.astype(dtype),
            edge_ends=self.edge_ends.astype(dtype),
            edge_gram_inv=self.edge_gram_inv.astype(dtype),
            edge_cycles=self.edge_cycles, shapes=self.shapes,
            integer_weights=self.integer_weights,
        )

    def locate(self, point, tol=1e-7):
        """Index of a tetrahedron containing the point, or None."""
        vals = np.einsum("nfk,k->nf", self.planes * hg.J_DIAG, point)
        inside = (vals <= tol).all(axis=1)
        hits = np.nonzero(inside)[0]
        return int(hits[0]) if len(hits) else None

    def contains(self, tet, point, tol=1e-7):
        vals = hg.minkowski_dot(self.planes[tet], point)
        return bool((vals <= tol).all())


def _edge_gram_inv(ends):
    """Inverse 2x2 Minkowski Gram matrices of edge endpoint pairs."""
    a = ends[..., 0, :]
    b = ends[..., 1, :]
    g = np.empty(ends.shape[:-2] + (2, 2))
    g[..., 0, 0] = hg.minkowski_dot(a, a)
    g[..., 0, 1] = g[..., 1, 0] = hg.minkowski_dot(a, b)
    g[..., 1, 1] = hg.minkowski_dot(b, b)
    return np.linalg.inv(g)


def build_geometry_ideal(tri: CombTriangulation, shapes=None):
    """Realize an ideal triangulation from solved shapes.

    shapes defaults to tri.shapes.  Raises TriangulationError if the
    construction violates a GeomTriangulation invariant (inconsistent
    input data).
    """
    if shapes is None:
        shapes = tri.shapes
    if shapes is None:
        raise TriangulationError("no shapes available; solve first")
    shapes = np.asarray(shapes, dtype=complex)
    if getattr(shapes, "shape", None) == ():
        shapes = shapes[None]
    if len(shapes) != tri.n_tets:
        raise TriangulationError("one shape per tetrahedron required")
    if np.any(shapes.imag <= 0):
        raise TriangulationError("shapes must have positive imaginary part")

    n = tri.n_tets
    verts = np.zeros((n, 4, 4))
    planes = np.zeros((n, 4, 4))
    for t in range(n):
        pos = uhs_positions(shapes[t])
        for v in range(4):
            verts[t][v] = hg.light_from_uhs(pos[v])
        for f in range(4):
            tripod = [v for v in range(4) if v != f]
            planes[t][f] = hg.plane_through_ideal(
                verts[t][tripod[0]], verts[t][tripod[1]], verts[t][tripod[2]],
                inside=verts[t][f])

    pairings = np.zeros((n, 4, 4, 4))
    neighbors = np.zeros((n, 4), dtype=int)
    perms = np.zeros((n, 4, 4), dtype=int)
    for t in range(n):
        pos_t = uhs_positions(shapes[t])
        for f in range(4):
            t2, perm = tri.gluing[t][f]
            neighbors[t][f] = t2
            perms[t][f] = perm
            pos_t2 = uhs_positions(shapes[t2])
            src = [pos_t[v] for v in range(4) if v != f]
            dst = [pos_t2[perm[v]] for v in range(4) if v != f]
            pairings[t][f] = hg.isometry_taking_ideal_triangle(src, dst)

    edge_ends = np.zeros((n, 6, 2, 4))
    for t in range(n):
        for k, (i, j) in enumerate(EDGE_SLOTS):
            edge_ends[t][k][0] = verts[t][i]
            edge_ends[t][k][1] = verts[t][j]

    geom = GeomTriangulation(
        name=tri.name, kind="ideal",
        planes=planes, pairings=pairings, neighbors=neighbors, perms=perms,
        weights=tri.weights.copy(), vertices=verts,
        edge_ends=edge_ends, edge_gram_inv=_edge_gram_inv(edge_ends),
        edge_cycles=tri.edge_cycles, shapes=shapes,
        integer_weights=bool(np.all(tri.weights == np.round(tri.weights))),
    )
    report = validate(geom)
    if not report["ok"]:
        bad = {k: v for k, v in report.items() if isinstance(v, dict) and not v["pass"]}
        raise TriangulationError(f"constructed geometry fails validation: {bad}")
    return geom


def dihedral_angle(geom: GeomTriangulation, tet, slot):
    """Interior dihedral angle at an edge slot (index into EDGE_SLOTS)."""
    i, j = EDGE_SLOTS[slot]
    faces = [f for f in range(4) if f not in (i, j)]
    n1, n2 = geom.planes[tet][faces[0]], geom.planes[tet][faces[1]]
    c = -hg.minkowski_dot(n1, n2)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def edge_distance(geom: GeomTriangulation, tet, point):
    """Distances from a point to the six edge geodesics of a tetrahedron."""
    ends = geom.edge_ends[tet]
    u = np.stack([
        hg.minkowski_dot(ends[:, 0, :], point),
        hg.minkowski_dot(ends[:, 1, :], point),
    ], axis=-1)
    c2 = -np.einsum("ek,ekl,el->e", u, geom.edge_gram_inv[tet], u)
    return np.arccosh(np.sqrt(np.maximum(c2, 1.0)))


# ---------------------------------------------------------------------------
# validation


def _check(report, name, worst, tol, detail=""):
    report[name] = {"worst": float(worst), "tol": tol, "pass": bool(worst <= tol),
                    "detail": detail}


def validate(geom: GeomTriangulation):
    """Check every GeomTriangulation invariant; returns a report dict.

    The report maps check names to {worst, tol, pass, detail}; top-level
    key "ok" is the conjunction.  Failures are reported, not raised.
    """
    report = {}
    n = geom.n_tets

    # unit normals
    worst = np.abs(hg.minkowski_dot(geom.planes, geom.planes) - 1.0).max()
    _check(report, "plane_normals_unit", worst, 1e-7)

    # vertices lightlike (ideal) / on the hyperboloid (material)
    vv = hg.minkowski_dot(geom.vertices, geom.vertices)
    target = 0.0 if geom.kind == "ideal" else -1.0
    scale = np.maximum(1.0, (geom.vertices ** 2).sum(axis=-1))
    _check(report, "vertices_on_model", np.abs((vv - target) / scale).max(), 1e-7)

    # pairings are isometries
    worst = 0.0
    for t in range(n):
        for f in range(4):
            g = geom.pairings[t][f]
            worst = max(worst, np.abs(g.T @ hg.J @ g - hg.J).max())
            if np.linalg.det(g) < 0 or g[0, 0] <= 0:
                worst = np.inf
    _check(report, "pairings_isometries", worst, 1e-7)

    # paired faces: normals map to (negated) normals, pairings are inverse
    worst_plane = 0.0
    worst_inverse = 0.0
    where_plane = ""
    for t in range(n):
        for f in range(4):
            t2 = geom.neighbors[t][f]
            f2 = geom.perms[t][f][f]
            g = geom.pairings[t][f]
            gb = geom.pairings[t2][f2]
            err = np.abs(g @ geom.planes[t][f] + geom.planes[t2][f2]).max()
            if err > worst_plane:
                worst_plane, where_plane = err, f"tet {t} face {f}"
            worst_inverse = max(worst_inverse, np.abs(gb @ g - np.eye(4)).max())
    _check(report, "pairing_maps_face_plane", worst_plane, 1e-7, where_plane)
    _check(report, "pairings_mutually_inverse", worst_inverse, 1e-7)

    # vertex correspondence across gluings (projective for light vectors)
    worst = 0.0
    for t in range(n):
        for f in range(4):
            t2 = geom.neighbors[t][f]
            perm = geom.perms[t][f]
            g = geom.pairings[t][f]
            for v in range(4):
                if v == f:
                    continue
                img = g @ geom.vertices[t][v]
                ref = geom.vertices[t2][perm[v]]
                if geom.kind == "ideal":
                    img = img / img[0]
                    ref = ref / ref[0]
                worst = max(worst, np.abs(img - ref).max())
    _check(report, "pairing_maps_vertices", worst, 1e-6)

    # edge cycles compose to the identity
    worst = 0.0
    where = ""
    for e, cyc in enumerate(geom.edge_cycles):
        m = np.eye(4)
        for c in cyc:
            m = geom.pairings[c.tet][c.exit_face] @ m
        err = np.abs(m - np.eye(4)).max()
        if err > worst:
            worst, where = err, f"edge class {e}"
    _check(report, "edge_cycles_identity", worst, 1e-6, where)

    # cocycle condition and antisymmetry of weights
    if geom.edge_cycles:
        if geom.integer_weights:
            w = np.round(geom.weights).astype(int)
            sums = [sum(int(w[c.tet][c.exit_face]) for c in cyc) for cyc in geom.edge_cycles]
            worst = max(abs(s) for s in sums)
        else:
            sums = [sum(geom.weights[c.tet][c.exit_face] for c in cyc) for cyc in geom.edge_cycles]
            worst = max(abs(s) for s in sums)
        bad = [e for e, s in enumerate(sums) if abs(s) > 0]
        _check(report, "cocycle_condition", worst, 1e-9 if not geom.integer_weights else 0,
               f"edge classes {bad}" if bad else "")
    worst = 0.0
    for t in range(n):
        for f in range(4):
            t2 = geom.neighbors[t][f]
            f2 = geom.perms[t][f][f]
            worst = max(worst, abs(geom.weights[t][f] + geom.weights[t2][f2]))
    _check(report, "weights_antisymmetric", worst, 1e-9)

    # material triangulations: dihedral angles around each edge sum to 2*pi
    if geom.kind == "material" and geom.edge_cycles:
        from .combinatorics import EDGE_SLOT_INDEX

        worst = 0.0
        where = ""
        for e, cyc in enumerate(geom.edge_cycles):
            total = 0.0
            for c in cyc:
                total += dihedral_angle(geom, c.tet, EDGE_SLOT_INDEX[c.slot])
            err = abs(total - 2 * np.pi)
            if err > worst:
                worst, where = err, f"edge class {e}"
        _check(report, "edge_angle_sums", worst, 1e-6, where)

    report["ok"] = all(v["pass"] for k, v in report.items() if isinstance(v, dict))
    return report


# ---------------------------------------------------------------------------
# material triangulations


def _material_vertices(lengths):
    """Vertex positions of one material tetrahedron from its edge lengths.

    Factorizes the Minkowski Gram matrix G_ij = -cosh(d_ij), G_ii = -1.
    Raises TriangulationError unless G has signature (1,3).
    """
    g = -np.eye(4)
    for k, (i, j) in enumerate(EDGE_SLOTS):
        g[i][j] = g[j][i] = -np.cosh(lengths[k])
    vals, vecs = np.linalg.eigh(g)
    if not (vals[0] < 0 < vals[1]):
        raise TriangulationError(
            f"edge lengths give Gram signature {(vals < 0).sum(), (vals > 0).sum()}, "
            "need (1,3)")
    v = (np.sqrt(np.abs(vals))[:, None] * vecs.T)
    # rows of v are J-coordinates; ensure the timelike row is coordinate 0
    verts = v.T  # vertex i = verts[i], coordinates (t, x1, x2, x3)
    if verts[0][0] < 0:
        verts = verts * np.array([-1.0, 1, 1, 1])
    if np.any(verts[:, 0] <= 0):
        raise TriangulationError("Gram factorization split across the two sheets")
    return verts


def _frame_from_triple(a, b, c, body):
    """J-orthonormal frame adapted to an ordered face triple.

    f0 = a, e1 towards b, e2 towards c, e3 towards the body vertex; the
    inverse of the frame matrix places the triple at canonical positions
    in the plane x3 = 0 with the body on the x3 > 0 side.
    """
    f0 = hg.normalize_point(a)
    e1 = b + hg.minkowski_dot(b, f0) * f0
    e1 = e1 / np.sqrt(hg.minkowski_dot(e1, e1))
    e2 = c + hg.minkowski_dot(c, f0) * f0
    e2 = e2 - hg.minkowski_dot(e2, e1) * e1
    e2 = e2 / np.sqrt(hg.minkowski_dot(e2, e2))
    m = np.stack([f0, e1, e2]) @ hg.J
    _, sing, vt = np.linalg.svd(m)
    e3 = vt[-1]
    e3 = e3 / np.sqrt(hg.minkowski_dot(e3, e3))
    if hg.minkowski_dot(body, e3) < 0:
        e3 = -e3
    frame = hg.frame_matrix(f0, [e1, e2, e3])
    return hg.J @ frame.T @ hg.J  # inverse: world -> canonical coordinates


_REFLECT3 = np.diag([1.0, 1.0, 1.0, -1.0])


def build_geometry_material(tri: CombTriangulation, lengths=None, strict=True):
    """Realize a material triangulation from per-tet edge lengths.

    Every tetrahedron is placed in standard position (face 3 in the plane
    x3 = 0, body on x3 > 0); pairings align glued faces through that
    plane.  With strict=True the constructed geometry must pass the full
    validator, including the 2*pi dihedral-angle sums around every edge
    class.
    """
    if lengths is None:
        lengths = tri.material_lengths
    if lengths is None:
        raise TriangulationError("no material edge lengths available")
    lengths = np.asarray(lengths, dtype=float)
    if lengths.shape != (tri.n_tets, 6):
        raise TriangulationError("need six edge lengths per tetrahedron")

    n = tri.n_tets
    verts = np.zeros((n, 4, 4))
    for t in range(n):
        raw = _material_vertices(lengths[t])
        # standard position: face 3 = vertices (0,1,2) into x3 = 0
        a = _frame_from_triple(raw[0], raw[1], raw[2], raw[3])
        verts[t] = (a @ raw.T).T

    # glued faces must be isometric triangles
    def slot_len(t, i, j):
        return lengths[t][EDGE_SLOTS.index((min(i, j), max(i, j)))]

    for t in range(n):
        for f in range(4):
            t2, perm = tri.gluing[t][f]
            face = [v for v in range(4) if v != f]
            for i in range(3):
                for j in range(i + 1, 3):
                    a, b = face[i], face[j]
                    d1 = slot_len(t, a, b)
                    d2 = slot_len(t2, perm[a], perm[b])
                    if abs(d1 - d2) > 1e-9 * max(1.0, d1):
                        raise TriangulationError(
                            f"glued faces not isometric: tet {t} face {f} edge "
                            f"({a},{b}) length {d1} vs {d2}")

    planes = np.zeros((n, 4, 4))
    for t in range(n):
        for f in range(4):
            tripod = [v for v in range(4) if v != f]
            planes[t][f] = hg.plane_through_ideal(
                verts[t][tripod[0]], verts[t][tripod[1]], verts[t][tripod[2]],
                inside=verts[t][f])

    pairings = np.zeros((n, 4, 4, 4))
    neighbors = np.zeros((n, 4), dtype=int)
    perms = np.zeros((n, 4, 4), dtype=int)
    for t in range(n):
        for f in range(4):
            t2, perm = tri.gluing[t][f]
            neighbors[t][f] = t2
            perms[t][f] = perm
            face = [v for v in range(4) if v != f]
            src = _frame_from_triple(
                verts[t][face[0]], verts[t][face[1]], verts[t][face[2]],
                verts[t][f])
            dst = _frame_from_triple(
                verts[t2][perm[face[0]]], verts[t2][perm[face[1]]],
                verts[t2][perm[face[2]]], verts[t2][perm[f]])
            dst_inv = hg.J @ dst.T @ hg.J
            pairings[t][f] = dst_inv @ _REFLECT3 @ src

    edge_ends = np.zeros((n, 6, 2, 4))
    for t in range(n):
        for k, (i, j) in enumerate(EDGE_SLOTS):
            edge_ends[t][k][0] = verts[t][i]
            edge_ends[t][k][1] = verts[t][j]

    geom = GeomTriangulation(
        name=tri.name, kind="material",
        planes=planes, pairings=pairings, neighbors=neighbors, perms=perms,
        weights=tri.weights.copy(), vertices=verts,
        edge_ends=edge_ends, edge_gram_inv=_edge_gram_inv(edge_ends),
        edge_cycles=tri.edge_cycles, shapes=None,
        integer_weights=bool(np.all(tri.weights == np.round(tri.weights))),
    )
    report = validate(geom)
    if strict and not report["ok"]:
        bad = {k: v for k, v in report.items() if isinstance(v, dict) and not v["pass"]}
        raise TriangulationError(f"material geometry fails validation: {bad}")
    return geom
