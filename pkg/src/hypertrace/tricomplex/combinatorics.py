"""Combinatorial triangulation data: gluings, edge cycles, cocycle weights.

A triangulation is a collection of model tetrahedra with vertices labeled
0..3; face f of a tetrahedron is the face opposite vertex f.  Gluings pair
(tet, face) slots via a vertex permutation sigma (sigma maps vertex labels
of the source tet to vertex labels of the target tet, and sigma(f) is the
face index on the target).  A face glued to itself is not allowed.

Edge slots are unordered vertex pairs; the six slots of a tetrahedron are
ordered (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).  Walking around an edge
of the quotient complex yields the edge cycle: the cyclic sequence of
(tet, oriented edge, exit face) corners, which drives the cocycle
validator, the gluing-equation exponents, the geometric edge-cycle check,
and the elevation-surface adjacency in the Cannon-Thurston code.

Face weights are stored per (tet, face) and must be antisymmetric across
each gluing; the weight picked up by a ray is the value at the slot it
exits through.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EDGE_SLOTS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
EDGE_SLOT_INDEX = {p: k for k, p in enumerate(EDGE_SLOTS)}

# shape-parameter letter of each edge slot for a tetrahedron with ideal
# vertices placed at (0, oo, 1, z): slots (0,1),(2,3) carry z (letter a),
# slots (0,3),(1,2) carry z' = 1/(1-z) (letter b), and slots (0,2),(1,3)
# carry z'' = (z-1)/z (letter c).
EDGE_PARAM = {
    (0, 1): 0,
    (2, 3): 0,
    (0, 3): 1,
    (1, 2): 1,
    (0, 2): 2,
    (1, 3): 2,
}


class TriangulationError(ValueError):
    """Malformed or inconsistent triangulation data."""


def perm_parity(p):
    p = list(p)
    seen = [False] * len(p)
    parity = 0
    for i in range(len(p)):
        if seen[i]:
            continue
        j, cycle = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            cycle += 1
        parity ^= (cycle - 1) & 1
    return parity


def perm_inverse(p):
    inv = [0] * 4
    for i, v in enumerate(p):
        inv[v] = i
    return tuple(inv)


@dataclass
class EquationRow:
    """One logarithmic gluing/cusp equation.

    Represents sum_i (a_i log z_i + b_i log(1/(1-z_i)) + c_i log((z_i-1)/z_i))
    = i*pi*rhs with integer exponents and integer rhs.
    """

    coeffs: np.ndarray  # (n_tets, 3) integers
    rhs: float

    def as_dict(self):
        return {"coeffs": self.coeffs.tolist(), "rhs": self.rhs}

    @classmethod
    def from_dict(cls, d, n_tets):
        coeffs = np.asarray(d["coeffs"])
        if coeffs.shape != (n_tets, 3):
            raise TriangulationError(f"equation row has shape {coeffs.shape}")
        return cls(coeffs=coeffs, rhs=d["rhs"])


@dataclass
class Equations:
    edge_rows: list = field(default_factory=list)
    completeness_rows: list = field(default_factory=list)
    cusp_rows_meridian: list = field(default_factory=list)
    cusp_rows_longitude: list = field(default_factory=list)


@dataclass
class EdgeCorner:
    """One step of an edge cycle: tet, oriented edge (i, j), exit face."""

    tet: int
    i: int
    j: int
    exit_face: int

    @property
    def slot(self):
        return (self.i, self.j) if self.i < self.j else (self.j, self.i)


class CombTriangulation:
    """Validated combinatorial triangulation with face weights.

    gluing[t][f] = (neighbor tet, vertex permutation as 4-tuple)
    weights[t][f] = cocycle weight picked up when exiting face f of tet t
    """

    def __init__(self, name, gluing, weights=None, equations=None,
                 shapes=None, material_lengths=None, cusps=None,
                 cocycles=None, edge_classes=None):
        self.name = name
        self.gluing = [[(int(t), tuple(int(x) for x in p)) for (t, p) in row]
                       for row in gluing]
        self.n_tets = len(self.gluing)
        if weights is None:
            weights = np.zeros((self.n_tets, 4))
        self.weights = np.asarray(weights, dtype=float)
        self.equations = equations or Equations()
        self.shapes = None if shapes is None else np.asarray(shapes, dtype=complex)
        self.material_lengths = (
            None if material_lengths is None
            else np.asarray(material_lengths, dtype=float)
        )
        self.cocycles = dict(cocycles or {})

        self._check_involution()
        self._check_oriented()
        self.edge_cycles = self._edge_cycles()
        if edge_classes is not None:
            self._check_declared_edge_classes(edge_classes)
        self.vertex_classes = self._vertex_classes()
        self.n_cusps = len(self.vertex_classes)
        if cusps is not None and cusps != self.n_cusps:
            raise TriangulationError(
                f"file declares {cusps} cusps, found {self.n_cusps} vertex classes")
        self._check_weights()

    # -- structure checks ---------------------------------------------------

    def _check_involution(self):
        for t in range(self.n_tets):
            if len(self.gluing[t]) != 4:
                raise TriangulationError(f"tet {t} does not have 4 gluings")
            for f in range(4):
                t2, perm = self.gluing[t][f]
                if sorted(perm) != [0, 1, 2, 3]:
                    raise TriangulationError(f"tet {t} face {f}: bad permutation {perm}")
                if not (0 <= t2 < self.n_tets):
                    raise TriangulationError(f"tet {t} face {f}: neighbor {t2} out of range")
                f2 = perm[f]
                if t2 == t and f2 == f:
                    raise TriangulationError(f"tet {t} face {f} is glued to itself")
                t3, perm_back = self.gluing[t2][f2]
                if t3 != t or perm_back != perm_inverse(perm):
                    raise TriangulationError(
                        f"gluing of tet {t} face {f} is not an involution "
                        f"(partner tet {t2} face {f2} disagrees)")

    def _check_oriented(self):
        for t in range(self.n_tets):
            for f in range(4):
                _, perm = self.gluing[t][f]
                if perm_parity(perm) != 1:
                    raise TriangulationError(
                        f"tet {t} face {f}: orientation-preserving gluing "
                        f"permutation {perm} (manifold not coherently oriented)")

    # -- derived combinatorics ----------------------------------------------

    def neighbor(self, tet, face):
        return self.gluing[tet][face]

    def face_classes(self):
        """Pairs ((t, f), (t', f')) with (t, f) lexicographically least."""
        out = []
        seen = set()
        for t in range(self.n_tets):
            for f in range(4):
                if (t, f) in seen:
                    continue
                t2, perm = self.gluing[t][f]
                f2 = perm[f]
                seen.add((t, f))
                seen.add((t2, f2))
                out.append(((t, f), (t2, f2)))
        return out

    def face_class_index(self):
        """Map (tet, face) -> (face class number, +1 if canonical rep side)."""
        idx = {}
        for k, (a, b) in enumerate(self.face_classes()):
            idx[a] = (k, 1)
            if b != a:
                idx[b] = (k, -1)
        return idx

    def _edge_cycles(self):
        cycles = []
        visited = set()
        for t0 in range(self.n_tets):
            for (i0, j0) in EDGE_SLOTS:
                if (t0, i0, j0) in visited or (t0, j0, i0) in visited:
                    continue
                others = [v for v in range(4) if v not in (i0, j0)]
                state = (t0, i0, j0, others[0])
                cycle = []
                while True:
                    t, i, j, l = state
                    cycle.append(EdgeCorner(t, i, j, l))
                    visited.add((t, i, j))
                    t2, perm = self.gluing[t][l]
                    i2, j2, l2 = perm[i], perm[j], perm[l]
                    entry = l2
                    exit2 = 6 - i2 - j2 - entry
                    state = (t2, i2, j2, exit2)
                    if state == (t0, i0, j0, others[0]):
                        break
                    if len(cycle) > 24 * self.n_tets:
                        raise TriangulationError("edge cycle fails to close")
                cycles.append(cycle)
        return cycles

    def _check_declared_edge_classes(self, declared):
        derived = [
            sorted({(c.tet, c.slot) for c in cyc}) for cyc in self.edge_cycles
        ]
        given = [
            sorted({(int(t), (min(p), max(p))) for (t, p, _sign) in cls})
            for cls in declared
        ]
        if sorted(derived) != sorted(given):
            raise TriangulationError("declared edge classes disagree with gluings")

    def _vertex_classes(self):
        parent = {(t, v): (t, v) for t in range(self.n_tets) for v in range(4)}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t in range(self.n_tets):
            for f in range(4):
                t2, perm = self.gluing[t][f]
                for v in range(4):
                    if v == f:
                        continue
                    a, b = find((t, v)), find((t2, perm[v]))
                    if a != b:
                        parent[a] = b
        classes = {}
        for key in parent:
            classes.setdefault(find(key), []).append(key)
        return sorted(classes.values())

    def vertex_class_index(self):
        idx = {}
        for k, cls in enumerate(self.vertex_classes):
            for key in cls:
                idx[key] = k
        return idx

    # -- cocycle checks -----------------------------------------------------

    def edge_weight_sums(self, weights=None):
        """Signed sum of exited-face weights around each edge cycle."""
        w = self.weights if weights is None else np.asarray(weights, dtype=float)
        sums = []
        for cyc in self.edge_cycles:
            total = 0.0
            for c in cyc:
                total += w[c.tet][c.exit_face]
            sums.append(total)
        return np.array(sums)

    def _check_weights(self, tol=1e-12):
        w = self.weights
        for t in range(self.n_tets):
            for f in range(4):
                t2, perm = self.gluing[t][f]
                f2 = perm[f]
                if abs(w[t][f] + w[t2][f2]) > tol:
                    raise TriangulationError(
                        f"weights not antisymmetric across tet {t} face {f} / "
                        f"tet {t2} face {f2}")
        sums = self.edge_weight_sums()
        for e, s in enumerate(sums):
            if abs(s) > tol:
                corner = self.edge_cycles[e][0]
                raise TriangulationError(
                    f"cocycle condition fails at edge class {e} "
                    f"(tet {corner.tet}, edge {corner.slot}): sum {s}")

    def with_weights(self, weights):
        """Copy of this triangulation carrying a different cocycle."""
        return CombTriangulation(
            name=self.name,
            gluing=self.gluing,
            weights=weights,
            equations=self.equations,
            shapes=self.shapes,
            material_lengths=self.material_lengths,
            cocycles=self.cocycles,
        )

    def select_cocycle(self, name):
        if name not in self.cocycles:
            raise TriangulationError(
                f"no cocycle named {name!r}; available: {sorted(self.cocycles)}")
        return self.with_weights(np.asarray(self.cocycles[name], dtype=float))

    # -- gluing-equation helpers ---------------------------------------------

    def edge_rows_from_cycles(self):
        """Exponent rows of the edge consistency equations (rhs = 2, i.e. 2*pi*i).

        Used by the data tooling to populate files and by tests to
        cross-check ingested rows; the solver itself consumes only the
        ingested equation rows.
        """
        rows = []
        for cyc in self.edge_cycles:
            coeffs = np.zeros((self.n_tets, 3), dtype=int)
            for c in cyc:
                coeffs[c.tet][EDGE_PARAM[c.slot]] += 1
            rows.append(EquationRow(coeffs=coeffs, rhs=2))
        return rows
