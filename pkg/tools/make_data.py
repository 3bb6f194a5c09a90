"""Generate the bundled triangulation data files.

Usage: python3 tools/make_data.py [outdir]

Everything is derived and verified in-process: edge rows from edge
cycles, peripheral rows from cusp developing (with per-corner numeric
verification), complete structures from the Newton solver, volumes from
the Lobachevsky oracle, and cocycle classes from integer linear algebra.

m004 is the standard two-tetrahedron triangulation of the figure-eight
knot complement (verified by volume and homology).  The other two files
are finite covers of it, found by permutation-representation search
(tools/out/fiber_fill_candidates.json):

* m122: the degree-6 cover whose lifted fiber has genus 3 with two
  boundary components; its peripheral basis is normalized so that the
  fiber boundary slope is (4, -1).  Filling (4s, -s) is the cone
  deformation ending, at s = 1, in a closed hyperbolic surface bundle
  in which the bundled fiber class survives.
* s789: the Z/3 cyclic cover of m122 dual to its fiber class; it is
  one-cusped with b1 = 3, so it carries both a cocycle class vanishing
  on the cusp (closed dual surface) and classes that do not vanish.
"""

import json
import os
import sys

import numpy as np
import mpmath as mp

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from hypertrace.tricomplex.combinatorics import CombTriangulation, Equations
from hypertrace.tricomplex import shapes as sh
from hypertrace.tricomplex import fileformat, geometry
import tri_tools as tt

M004_GLUING = [
    [(1, (0, 1, 3, 2)), (1, (1, 2, 3, 0)), (1, (2, 3, 1, 0)), (1, (2, 1, 0, 3))],
    [(0, (0, 1, 3, 2)), (0, (3, 2, 0, 1)), (0, (3, 0, 1, 2)), (0, (2, 1, 0, 3))],
]

M004_COMPLETE = np.array([np.exp(1j * np.pi / 3)] * 2)
M004_FIBER = [1, 0, 1, 0]  # face-class weights of the fiber cocycle

# degree-6 transitive representation of the m004 spine group whose cover is
# one-cusped with a genus-3 two-boundary-component fiber (tree class 0 -> id)
COVER6_REP = {
    0: (0, 1, 2, 3, 4, 5),
    1: (1, 5, 4, 0, 3, 2),
    2: (0, 2, 3, 4, 5, 1),
    3: (5, 3, 0, 2, 1, 4),
}


def lobachevsky_volume(shapes, dps=25):
    mp.mp.dps = dps

    def lob(theta):
        return mp.im(mp.polylog(2, mp.e ** (2j * theta))) / 2

    total = mp.mpf(0)
    for z in np.asarray(shapes, dtype=complex):
        for w in (z, 1 / (1 - z), (z - 1) / z):
            total += lob(mp.arg(mp.mpc(w)))
    return total


def attach_equations(tri, shapes, cusp_datas=None):
    if cusp_datas is None:
        cusp_datas = [tt.CuspData(tri, shapes, c) for c in range(tri.n_cusps)]
    completeness = []
    for cd in cusp_datas:
        completeness.extend([cd.row_m, cd.row_l])
    tri.equations = Equations(
        edge_rows=tri.edge_rows_from_cycles(),
        completeness_rows=completeness,
        cusp_rows_meridian=[cd.row_m for cd in cusp_datas],
        cusp_rows_longitude=[cd.row_l for cd in cusp_datas],
    )
    res = sh.equation_residual(tri, shapes)
    if res > 1e-9:
        raise RuntimeError(f"{tri.name}: equation rows do not vanish at the "
                           f"complete structure (residual {res})")
    return cusp_datas


def cyclic_cover(tri, class_weights, n, name):
    """Cyclic cover dual to a cocycle: sheets Z/n shifted by face weights."""
    w = tt.class_weights_to_tet_faces(tri, class_weights)
    if np.abs(w - np.round(w)).max() > 0:
        raise ValueError("cyclic cover needs an integral cocycle")
    gluing = []
    for t in range(tri.n_tets):
        for s in range(n):
            row = []
            for f in range(4):
                t2, perm = tri.gluing[t][f]
                s2 = (s + int(round(w[t][f]))) % n
                row.append((t2 * n + s2, perm))
            gluing.append(row)
    return CombTriangulation(name=name, gluing=gluing)


def h1_basis_mod_coboundaries(tri, count):
    basis, cob = tt.cocycle_space(tri)
    picked = []
    cur = [c.astype(float) for c in cob]
    rank = np.linalg.matrix_rank(np.array(cur)) if cur else 0
    for b in basis:
        trial = np.array(cur + [b.astype(float)])
        r = np.linalg.matrix_rank(trial)
        if r > rank:
            picked.append(b)
            cur.append(b.astype(float))
            rank = r
        if len(picked) == count:
            break
    return picked, cob


def reduce_mod_coboundaries(vec, cob):
    vec = vec.copy()
    improved = True
    while improved:
        improved = False
        for c in cob:
            for sign in (1, -1):
                trial = vec + sign * c
                if np.abs(trial).sum() < np.abs(vec).sum():
                    vec = trial
                    improved = True
    g = np.gcd.reduce(np.abs(vec[vec != 0])) if np.any(vec) else 1
    return vec // max(g, 1)


def extended_gcd(a, b):
    if b == 0:
        return a, 1, 0
    g, x, y = extended_gcd(b, a % b)
    return g, y, x - (a // b) * y


def normalize_filling_basis(cd, slope, target=(4, -1)):
    """Unimodular basis change making `slope` read as `target`."""
    p0, q0 = slope
    p, q = target
    g, x, y = extended_gcd(p, q)
    assert abs(g) == 1
    best = None
    for k1 in range(-6, 7):
        for k2 in range(-6, 7):
            a = x * p0 * g + k1 * q
            c = y * p0 * g - k1 * p
            b = x * q0 * g + k2 * q
            d = y * q0 * g - k2 * p
            if abs(a * d - b * c) == 1:
                score = abs(a) + abs(b) + abs(c) + abs(d)
                if best is None or score < best[0]:
                    best = (score, (a, b, c, d))
    a, b, c, d = best[1]
    cd.change_basis(((a, b), (c, d)))
    return (a, b, c, d)


def build_m004():
    tri = CombTriangulation(name="m004", gluing=M004_GLUING)
    cds = attach_equations(tri, M004_COMPLETE)
    sol = sh.solve_shapes(tri)
    assert sol.residual < 1e-12
    assert np.abs(sol.shapes - M004_COMPLETE).max() < 1e-12
    vol = lobachevsky_volume(sol.shapes, dps=30)
    assert abs(vol - mp.mpf("2.029883212819307250042405108549")) < 1e-13, vol
    b1, torsion = tt.homology(tri)
    assert (b1, torsion) == (1, []), "not the figure-eight complement"
    fiber = tt.class_weights_to_tet_faces(tri, M004_FIBER)
    tri = tri.with_weights(fiber)
    tri.cocycles = {"fiber": fiber.tolist()}
    tri.shapes = sol.shapes
    geometry.build_geometry_ideal(tri, sol.shapes)
    print(f"m004: volume {float(vol):.15f}, fiber pairing {cds[0].pair(fiber)}")
    return tri


def check_continuation(tri, direct, s_values=(10, 5, 4, 3, 2, 1.8, 1.6, 1.4, 1.2, 1.0)):
    prev = sh.solve_shapes(tri)
    last = prev.shapes
    for s in s_values:
        prev = sh.solve_shapes(tri, filling=[(4 * s, -s)], initial=prev)
        assert prev.residual < 1e-12, (s, prev.residual)
        assert prev.shapes.imag.min() > 1e-3
        assert np.abs(prev.shapes - last).max() < 0.5, "branch jump on path"
        last = prev.shapes
    assert np.abs(prev.shapes - direct.shapes).max() < 1e-9
    print("  continuation s=10..1 verified against the direct (4,-1) solve")


def build_m122():
    base = CombTriangulation(name="m004", gluing=M004_GLUING)
    cover = tt.build_cover(base, COVER6_REP, 6, "m122")
    assert cover.n_cusps == 1
    b1, torsion = tt.homology(cover)
    zc = tt.lift_shapes(base, 6, M004_COMPLETE)
    cds = attach_equations(cover, zc)
    fiber = tt.lift_class_weights(base, cover, 6, M004_FIBER)
    pm, pl = cds[0].pair(fiber)
    g = int(np.gcd(int(round(pm)), int(round(pl))))
    slope = (int(round(-pl / g)), int(round(pm / g)))
    genus = (2 + 6 - g) // 2
    print(f"m122: cusps 1, b1 {b1}, torsion {torsion}, fiber boundary "
          f"components {g}, fiber genus {genus}, fiber slope {slope}")
    assert genus >= 2

    u = normalize_filling_basis(cds[0], slope)
    cds = attach_equations(cover, zc, cds)
    pm, pl = cds[0].pair(fiber)
    assert 4 * pm - pl == 0, "fiber slope is not (4,-1) after the basis change"

    sol = sh.solve_shapes(cover)
    assert sol.residual < 1e-12 and np.abs(sol.shapes - zc).max() < 1e-9
    direct = sh.solve_shapes(cover, filling=[(4, -1)])
    assert direct.residual < 1e-12 and direct.shapes.imag.min() > 1e-3
    fvol = lobachevsky_volume(direct.shapes)
    print(f"  complete volume {float(lobachevsky_volume(sol.shapes)):.9f}, "
          f"(4,-1) volume {float(fvol):.9f}, basis change {u}")
    check_continuation(cover, direct)

    cover = cover.with_weights(fiber)
    cover.shapes = sol.shapes
    cover.cocycles = {"fiber": fiber.tolist()}
    geometry.build_geometry_ideal(cover, sol.shapes)
    return cover


def build_s789(m122_tri):
    basis, cob = h1_basis_mod_coboundaries(m122_tri, 1)
    gen = basis[0]
    cover = cyclic_cover(m122_tri, gen, 3, "s789")
    assert cover.n_cusps == 1
    b1, torsion = tt.homology(cover)
    print(f"s789: tets {cover.n_tets}, cusps 1, b1 {b1}, torsion {torsion}")
    assert b1 > 1

    zc = np.repeat(m122_tri.shapes, 3)
    # tets of the cyclic cover are ordered (t, sheet) with sheet minor
    cds = attach_equations(cover, zc)
    sol = sh.solve_shapes(cover)
    assert sol.residual < 1e-12 and np.abs(sol.shapes - zc).max() < 1e-9

    closed = tt.closed_class_representative(cover, cds)
    assert closed is not None
    _, cob_c = tt.cocycle_space(cover)
    closed = reduce_mod_coboundaries(closed, cob_c)
    w_closed = tt.class_weights_to_tet_faces(cover, closed)
    pm, pl = cds[0].pair(w_closed)
    assert abs(pm) < 1e-9 and abs(pl) < 1e-9

    # a class that does not vanish on the cusp
    cands, _ = h1_basis_mod_coboundaries(cover, 3)
    w_open = None
    for c in cands:
        w = tt.class_weights_to_tet_faces(cover, reduce_mod_coboundaries(c, cob_c))
        pm, pl = cds[0].pair(w)
        if abs(pm) + abs(pl) > 0.5:
            w_open = w
            break
    assert w_open is not None

    cover = cover.with_weights(w_closed)
    cover.shapes = sol.shapes
    cover.cocycles = {"vanishing": w_closed.tolist(), "nonvanishing": w_open.tolist()}
    print(f"  vanishing class L1 {np.abs(w_closed).sum():.0f}, "
          f"nonvanishing pairing {cds[0].pair(w_open)}")
    geometry.build_geometry_ideal(cover, sol.shapes)
    return cover


def main(outdir):
    os.makedirs(outdir, exist_ok=True)
    m004 = build_m004()
    fileformat.dump(m004, os.path.join(outdir, "m004.json"))
    m122 = build_m122()
    fileformat.dump(m122, os.path.join(outdir, "m122.json"))
    s789 = build_s789(m122)
    fileformat.dump(s789, os.path.join(outdir, "s789.json"))
    for name in ("m004", "m122", "s789"):
        reloaded = fileformat.load(os.path.join(outdir, name + ".json"))
        assert sh.solve_shapes(reloaded).residual < 1e-12
        print(f"wrote {name}.json ({reloaded.n_tets} tets)")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        "src", "hypertrace", "data")
    main(out)
