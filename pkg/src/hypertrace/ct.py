"""Cannon-Thurston map approximation.

The fiber's elevation through the basepoint is developed triangle by
triangle in the universal cover: a carried-surface triangle is a face
copy across which the primitive W of the lifted cocycle crosses the
chosen half-integer level.  Walking around a lifted edge through the
cells with W above the level finds the adjacent surface triangle, so the
disk is traversed along the surface itself, and the adjacency discovered
by these walks is recorded combinatorially -- triangle identity never
depends on comparing far-away boundary points, which collide in floating
point as the disk grows.

The disk keeps the connected component, through the seed, of the
triangles meeting the ball of radius R_disk about the basepoint (by an
edge or by overhang); holes left by the non-convexity of the pleated
surface are filled so the boundary is a single loop.  The boundary,
projected to the sphere at infinity, is the Cannon-Thurston
approximation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import hypgeom as hg

# relative placement quantization: drift along different BFS routes is
# ~1e-12 relative, while distinct lifts differ by >~ e^{-2r} relative
# (3.7e-7 at r = e^2), so 1e-9 separates them with wide margins both ways
QUANT = 1e-9


class CTError(RuntimeError):
    pass


def _placement_keys(m):
    """Two offset-lattice quantization keys for a placement matrix.

    Matching on either key makes the deduplication robust to float drift
    along different BFS routes: a same-lift pair straddling a rounding
    boundary of one lattice is far from the boundaries of the other.
    """
    m = np.asarray(m)
    scale = np.abs(m).max()
    x = m / (scale * QUANT)
    k0 = tuple(np.round(x).astype(np.int64).ravel().tolist())
    k1 = tuple(np.round(x + 0.5).astype(np.int64).ravel().tolist())
    return k0, k1


def _placement_key(m):
    return _placement_keys(m)[0]


def _cell_key(tet, placement):
    return (int(tet), _placement_key(placement))


@dataclass
class Triangle:
    """One carried-surface triangle of the elevation.

    corners are the three tet-vertex labels (the face's vertices) of the
    above-side cell; adjacency maps a frozenset pair of corner labels to
    (neighbor index, label correspondence dict) once discovered, or None
    for boundary edges.
    """

    tet: int
    face: int
    placement: np.ndarray
    level: int

    def __post_init__(self):
        self.corners = tuple(v for v in range(4) if v != self.face)
        self.adjacency = {}

    def key(self):
        return (self.tet, self.face, _placement_key(self.placement))

    def corner_positions(self, geom):
        out = {}
        for v in self.corners:
            p = self.placement @ geom.vertices[self.tet][v]
            out[v] = p / p[0]
        return out


class ElevationDisk:
    def __init__(self, geom, basepoint, max_triangles=250000):
        self.geom = geom
        self.basepoint = basepoint
        self.max_triangles = max_triangles
        self.triangles = []
        self.index = {}
        self.levels = {}

    def __len__(self):
        return len(self.triangles)

    def triangle_vertices(self, i):
        tri = self.triangles[i]
        out = []
        for v in tri.corners:
            p = tri.placement @ self.geom.vertices[tri.tet][v]
            out.append(p / p[0])  # lightlike scale is projective
        return out

    def _tri_keys(self, tri):
        k0, k1 = _placement_keys(tri.placement)
        return (tri.tet, tri.face, 0, k0), (tri.tet, tri.face, 1, k1)

    def find(self, tri: Triangle):
        for key in self._tri_keys(tri):
            if key in self.index:
                return self.index[key]
        return None

    def add(self, tri: Triangle):
        existing = self.find(tri)
        if existing is not None:
            return existing
        if len(self.triangles) >= self.max_triangles:
            raise CTError(
                f"elevation disk exceeds {self.max_triangles} triangles; "
                "reduce r_disk (cusp spiraling makes the count grow much "
                "faster than the disk area)")
        idx = len(self.triangles)
        for key in self._tri_keys(tri):
            self.index[key] = idx
        self.triangles.append(tri)
        return idx

    def assign_level(self, tet, placement, level):
        k0, k1 = _placement_keys(placement)
        keys = ((int(tet), 0, k0), (int(tet), 1, k1))
        for key in keys:
            if key in self.levels and self.levels[key] != level:
                raise CTError(
                    f"weight data is not dual to a single carried surface: "
                    f"cell {tet} reached with levels {self.levels[key]} "
                    f"and {level}")
        for key in keys:
            self.levels[key] = level

    def level_of(self, tet, placement):
        k0, k1 = _placement_keys(placement)
        for key in ((int(tet), 0, k0), (int(tet), 1, k1)):
            if key in self.levels:
                return self.levels[key]
        raise KeyError("cell level unknown")


@dataclass
class CTPolyline:
    points: list            # circularly ordered developed ideal points
    projection: np.ndarray  # complex boundary coordinates, same order

    def __len__(self):
        return len(self.points)

    def svg(self, scale=200.0, margin=10.0):
        z = self.projection[np.isfinite(self.projection)]
        xs = z.real * scale
        ys = -z.imag * scale
        x0, y0 = xs.min() - margin, ys.min() - margin
        w = xs.max() - xs.min() + 2 * margin
        h = ys.max() - ys.min() + 2 * margin
        fmt = lambda v: np.format_float_positional(v, precision=17, unique=True)
        pts = " ".join(f"{fmt(x - x0)},{fmt(y - y0)}" for x, y in zip(xs, ys))
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {fmt(w)} {fmt(h)}">\n'
            f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="0.5"/>\n'
            "</svg>\n"
        )


def _expand(geom, weights, disk, tri, level):
    """Partners of a triangle across its three edges.

    Walks around each lifted edge through cells with W above the cut;
    yields (edge_pair, Triangle, correspondence) where correspondence maps
    the source triangle's two edge labels to the partner's labels.
    """
    base_level = disk.level_of(tri.tet, tri.placement)
    out = []
    cs = tri.corners
    for a in range(3):
        for b in range(a + 1, 3):
            i, j = cs[a], cs[b]
            cur_tet, cur_pl, cur_level = tri.tet, tri.placement, base_level
            ci, cj = i, j
            exit_face = 6 - ci - cj - tri.face
            guard = 0
            while True:
                guard += 1
                if guard > 4000:
                    raise CTError("edge walk failed to close")
                w = int(weights[cur_tet][exit_face])
                nxt_level = cur_level + w
                if nxt_level <= level - 1:
                    partner = Triangle(tet=cur_tet, face=exit_face,
                                       placement=cur_pl, level=cur_level)
                    out.append(((i, j), partner, {i: ci, j: cj}))
                    break
                g = geom.pairings[cur_tet][exit_face]
                pl2 = cur_pl @ np.linalg.inv(g)
                perm = geom.perms[cur_tet][exit_face]
                ci2, cj2, entry = int(perm[ci]), int(perm[cj]), int(perm[exit_face])
                t2 = int(geom.neighbors[cur_tet][exit_face])
                disk.assign_level(t2, pl2, nxt_level)
                cur_tet, cur_pl, cur_level = t2, pl2, nxt_level
                ci, cj = ci2, cj2
                exit_face = 6 - ci - cj - int(entry)
    return out


def _connect(disk, i, pair_i, j, corr):
    """Record adjacency between triangle i (edge pair_i) and triangle j."""
    ti, tj = disk.triangles[i], disk.triangles[j]
    ei = frozenset(pair_i)
    ej = frozenset(corr[v] for v in pair_i)
    fwd = (j, dict(corr))
    bwd = (i, {corr[v]: v for v in pair_i})
    if ei in ti.adjacency and ti.adjacency[ei] != fwd:
        raise CTError(
            f"inconsistent surface adjacency at triangle {i} edge {tuple(ei)}: "
            f"{ti.adjacency[ei]} vs {fwd}")
    if ej in tj.adjacency and tj.adjacency[ej] != bwd:
        raise CTError(
            f"inconsistent surface adjacency at triangle {j} edge {tuple(ej)}: "
            f"{tj.adjacency[ej]} vs {bwd}")
    ti.adjacency[ei] = fwd
    tj.adjacency[ej] = bwd


def _meets_ball(geom, basepoint, tri: Triangle, r_disk):
    verts = []
    for v in tri.corners:
        p = tri.placement @ geom.vertices[tri.tet][v]
        verts.append(p / p[0])
    for a in range(3):
        b = (a + 1) % 3
        d = hg.dist_point_to_ideal_geodesic(basepoint, verts[a], verts[b])
        if d <= r_disk:
            return True
    # edges all miss: the triangle may still overhang the ball
    n = hg.plane_through_ideal(verts[0], verts[1], verts[2])
    s = hg.minkowski_dot(basepoint, n)
    if np.arcsinh(abs(s)) > r_disk:
        return False
    foot = hg.normalize_point(basepoint - s * n)
    fk = hg.klein_project(foot)
    k0, k1, k2 = (hg.klein_project(v / v[0]) for v in verts)
    m = np.stack([k1 - k0, k2 - k0], axis=1)
    coef, *_ = np.linalg.lstsq(m, fk - k0, rcond=None)
    a, b = coef
    return bool(a >= 0 and b >= 0 and a + b <= 1)


def _find_seed(geom, weights, basepoint_tet, level):
    """A face dropping W below `level`, reachable from the basepoint cell
    through weight-zero faces."""
    seen = {_cell_key(basepoint_tet, np.eye(4))}
    queue = [(basepoint_tet, np.eye(4))]
    for _ in range(4 * geom.n_tets):
        nxt = []
        for (t, pl) in queue:
            for f in range(4):
                if weights[t][f] <= -1:
                    return (t, f, pl)
                if weights[t][f] == 0:
                    g = geom.pairings[t][f]
                    pl2 = pl @ np.linalg.inv(g)
                    t2 = int(geom.neighbors[t][f])
                    key = _cell_key(t2, pl2)
                    if key not in seen:
                        seen.add(key)
                        nxt.append((t2, pl2))
        queue = nxt
        if not queue:
            break
    raise CTError("no face crossing the level is reachable from the basepoint "
                  "through weight-zero faces; choose a basepoint adjacent to "
                  "the elevation")


def build_elevation_disk(geom, basepoint_tet, r_disk, basepoint=None, level=0):
    """Level-set elevation disk whose triangles meet B(basepoint, r_disk).

    Returns the connected component through the seed triangle (the
    basepoint-adjacent face crossing from W = level to W = level - 1).
    """
    if basepoint is None:
        c = geom.vertices[basepoint_tet].sum(axis=0)
        basepoint = hg.normalize_point(c)
    weights = np.round(geom.weights).astype(np.int64)
    if not geom.integer_weights:
        raise CTError("elevation disks need an integral cocycle")

    disk = ElevationDisk(geom, basepoint)
    seed_tet, seed_face, seed_pl = _find_seed(geom, weights, basepoint_tet, level)
    disk.assign_level(seed_tet, seed_pl, level)
    seed = Triangle(tet=seed_tet, face=seed_face, placement=seed_pl, level=level)
    disk.add(seed)

    def bfs(start_indices, admit):
        frontier = list(start_indices)
        while frontier:
            i = frontier.pop()
            tri = disk.triangles[i]
            for (pair, partner, corr) in _expand(geom, weights, disk, tri, level):
                disk.assign_level(partner.tet, partner.placement, partner.level)
                existing = disk.find(partner)
                if existing is not None:
                    _connect(disk, i, pair, existing, corr)
                    continue
                if not admit(partner):
                    continue
                j = disk.add(partner)
                _connect(disk, i, pair, j, corr)
                frontier.append(j)

    bfs([0], lambda tri: _meets_ball(geom, basepoint, tri, r_disk))

    # fill holes (the pleated surface's distance function is not
    # quasi-convex): repeatedly flood every boundary component except the
    # largest; holes are finite, so a run-away flood identifies the outer
    # boundary instead and is rolled back by the size cap
    for _ in range(40):
        loops = _boundary_loops(disk)
        if len(loops) <= 1:
            break
        loops.sort(key=len)
        outer = len(loops[-1])
        filled = False
        for loop in loops[:-1]:
            cap = min(8 * len(loop) ** 2 + 128, 5000)
            hole = set()
            ok = True
            # seeds: the missing partners across the loop's boundary edges
            frontier = []
            for (i, pair) in loop:
                tri = disk.triangles[i]
                for (p, partner, corr) in _expand(geom, weights, disk, tri, level):
                    if frozenset(p) != frozenset(pair):
                        continue
                    if disk.find(partner) is None and partner.key() not in hole:
                        hole.add(partner.key())
                        frontier.append((i, p, partner, corr))
            added = []
            k = 0
            pending = list(frontier)
            while k < len(pending):
                (src_i, src_pair, partner, corr) = pending[k]
                k += 1
                if len(pending) > cap:
                    ok = False
                    break
                j = disk.add(partner)
                added.append(j)
                _connect(disk, src_i, src_pair, j, corr)
                for (p2, partner2, corr2) in _expand(geom, weights, disk, partner, level):
                    disk.assign_level(partner2.tet, partner2.placement, partner2.level)
                    existing2 = disk.find(partner2)
                    if existing2 is not None:
                        _connect(disk, j, p2, existing2, corr2)
                        continue
                    key2 = partner2.key()
                    if key2 in hole:
                        continue
                    hole.add(key2)
                    pending.append((j, p2, partner2, corr2))
            if not ok:
                # roll back: rebuild the disk without the partial flood
                raise CTError(
                    f"hole flood exceeded {cap} triangles (outer boundary "
                    f"misidentified; outer loop has {outer} edges)")
            if added:
                filled = True
        if not filled:
            break
    return disk


# ---------------------------------------------------------------------------
# boundary

def _boundary_loops(disk: ElevationDisk):
    """Boundary components as lists of (triangle index, ordered corner pair).

    Pure combinatorics over the recorded adjacency: from a directed
    boundary edge, fan around the head corner through the disk to the
    next boundary edge.  Pinch points (several boundary arcs through one
    ideal vertex) are resolved by the fan, not by comparing positions.
    """
    boundary = set()
    for i, tri in enumerate(disk.triangles):
        cs = tri.corners
        for a in range(3):
            pair = (cs[a], cs[(a + 1) % 3])
            if frozenset(pair) not in tri.adjacency:
                boundary.add((i, frozenset(pair)))
    loops = []
    consumed = set()

    def successor(i, tail, head):
        """Fan from boundary edge (tail, head) of triangle i around head."""
        cur_i, cur_tail = i, tail
        for _ in range(10 * len(disk) + 16):
            tri = disk.triangles[cur_i]
            third = [c for c in tri.corners if c not in (cur_tail, head)][0]
            nxt = frozenset((head, third))
            if nxt not in tri.adjacency:
                return cur_i, head, third  # next boundary edge: head -> third
            j, corr = tri.adjacency[nxt]
            cur_i, cur_tail, head2 = j, corr[third], corr[head]
            head = head2
        raise CTError("vertex fan failed to close")

    for (i0, e0) in sorted(boundary):
        if (i0, e0) in consumed:
            continue
        tri = disk.triangles[i0]
        cs = tri.corners
        pair = None
        for a in range(3):
            if frozenset((cs[a], cs[(a + 1) % 3])) == e0:
                pair = (cs[a], cs[(a + 1) % 3])
                break
        loop = []
        cur = (i0, pair[0], pair[1])
        for _ in range(len(boundary) + 1):
            (i, tail, head) = cur
            loop.append((i, (tail, head)))
            consumed.add((i, frozenset((tail, head))))
            (j, tail2, head2) = successor(i, tail, head)
            cur = (j, tail2, head2)
            if (j, frozenset((tail2, head2))) == (i0, e0):
                break
        else:
            raise CTError("boundary walk does not close")
        loops.append(loop)
    return loops


def boundary_polyline(disk: ElevationDisk):
    """The boundary of the disk as a single closed loop of ideal points."""
    if len(disk) == 0:
        raise CTError("empty disk")
    loops = _boundary_loops(disk)
    if len(loops) != 1:
        raise CTError(f"boundary has {len(loops)} components (disk is not a disk)")
    points = []
    for (i, (tail, head)) in loops[0]:
        tri = disk.triangles[i]
        p = tri.placement @ disk.geom.vertices[tri.tet][tail]
        points.append(p / p[0])
    proj = np.array([hg.uhs_from_light(p) for p in points])
    return CTPolyline(points=points, projection=proj)


def pleating_angles(disk: ElevationDisk):
    """Dihedral angles along interior disk edges, in [0, 2*pi)."""
    angles = []
    seen = set()
    for i, tri in enumerate(disk.triangles):
        pos = tri.corner_positions(disk.geom)
        for pair, entry in tri.adjacency.items():
            j, corr = entry
            if (min(i, j), max(i, j), tuple(sorted(pair))) in seen:
                continue
            seen.add((min(i, j), max(i, j), tuple(sorted(pair))))
            a, b = sorted(pair)
            third_i = [c for c in tri.corners if c not in pair][0]
            trj = disk.triangles[j]
            pair_j = {corr[a], corr[b]}
            third_j = [c for c in trj.corners if c not in pair_j][0]
            pos_j = trj.corner_positions(disk.geom)
            za, zb = hg.uhs_from_light(pos[a]), hg.uhs_from_light(pos[b])
            zc1 = hg.uhs_from_light(pos[third_i])
            zc2 = hg.uhs_from_light(pos_j[third_j])
            m = hg.mobius_take_triple([za, zb, zc1], [0, np.inf, 1])

            def apply(z):
                v = (np.array([complex(z), 1.0]) if z != np.inf
                     else np.array([1.0 + 0j, 0.0j]))
                w = m @ v
                return (complex(np.inf) if abs(w[1]) < 1e-14 * abs(w[0])
                        else w[0] / w[1])

            c2 = apply(zc2)
            angles.append(float(np.angle(complex(c2)) % (2 * np.pi)))
    return angles


def cusp_mask_centers(disk: ElevationDisk, top=6):
    """Projections of the most-visited ideal vertices (the large cusps)."""
    counts = {}
    pos = {}
    for i in range(len(disk)):
        for p in disk.triangle_vertices(i):
            z = hg.uhs_from_light(p)
            if not np.isfinite(z):
                continue
            k = (round(z.real, 4), round(z.imag, 4))
            counts[k] = counts.get(k, 0) + 1
            pos[k] = z
    best = sorted(counts, key=counts.get, reverse=True)[:top]
    return [pos[k] for k in best]


# ---------------------------------------------------------------------------
# matching the polyline against the sign region of a rendered field


def screen_map(view, n_probe=4):
    """Complex-affine map w = u + i*s (screen) -> boundary coordinate zeta.

    Valid for ideal views: both coordinates are parabolic about the view's
    ideal point, so the correspondence is affine (verified numerically on
    a probe point).  Returns (alpha, beta, conj) with
    zeta = alpha * (conj(w) if conj else w) + beta.
    """
    if view.kind != "ideal":
        raise CTError("screen_map supports ideal views")
    e1, e2 = view.frame[0], view.frame[1]

    def endpoint(u, s):
        rho = (u * u + s * s) / 2.0
        x = view.surface_point + u * e1 + s * e2 + rho * view.light
        return hg.uhs_from_light(2.0 * x - view.light)

    z00 = endpoint(0.0, 0.0)
    z10 = endpoint(1.0, 0.0)
    z01 = endpoint(0.0, 1.0)
    du = z10 - z00
    ds = z01 - z00
    conj = False
    if abs(ds - 1j * du) > 1e-9 * abs(du):
        if abs(ds + 1j * du) <= 1e-9 * abs(du):
            conj = True
        else:
            raise CTError("screen-to-boundary map is not conformal affine")
    alpha = du
    beta = z00
    probe = endpoint(0.3, -0.7)
    w = 0.3 - 0.7j
    fit = alpha * (np.conj(w) if conj else w) + beta
    if abs(fit - probe) > 1e-8 * max(1.0, abs(probe)):
        raise CTError(f"screen map verification failed ({abs(fit - probe)})")
    return alpha, beta, conj


def boundary_to_screen(view, zeta):
    alpha, beta, conj = screen_map(view)
    w = (np.asarray(zeta) - beta) / alpha
    return np.conj(w) if conj else w


def rasterize_polyline(polyline: CTPolyline, view, cfg, oversample=4.0):
    """Pixel coordinates (row, col) covered by the projected polyline."""
    w_px, h_px = cfg.resolution
    sw = boundary_to_screen(view, polyline.projection)
    finite = np.isfinite(sw)
    aspect = max(h_px - 1, 1) / max(w_px - 1, 1)
    # screen coords: u in [-fov/2, fov/2] maps to columns 0..w-1
    def to_px(z):
        col = (np.real(z) / view.fov + 0.5) * (w_px - 1)
        row = (np.imag(z) / (view.fov * aspect) + 0.5) * (h_px - 1)
        return row, col

    def clip_param(p, d, lo, hi, t0, t1):
        # Liang-Barsky: restrict t to where p + t*d lies in [lo, hi]
        if abs(d) < 1e-300:
            return (t0, t1) if lo <= p <= hi else None
        ta, tb = (lo - p) / d, (hi - p) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        return (t0, t1) if t0 <= t1 else None

    pixels = set()
    n = len(sw)
    for k in range(n):
        a, b = sw[k], sw[(k + 1) % n]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        ra, ca = to_px(a)
        rb, cb = to_px(b)
        span = clip_param(ra, rb - ra, -1.0, h_px, 0.0, 1.0)
        if span is None:
            continue
        span = clip_param(ca, cb - ca, -1.0, w_px, *span)
        if span is None:
            continue
        t0, t1 = span
        length = max(abs(rb - ra), abs(cb - ca)) * (t1 - t0)
        steps = int(length * oversample) + 1
        for t in np.linspace(t0, t1, steps + 1):
            r = ra + t * (rb - ra)
            c = ca + t * (cb - ca)
            ri, ci = int(round(r)), int(round(c))
            if 0 <= ri < h_px and 0 <= ci < w_px:
                pixels.add((ri, ci))
    return pixels


def sign_region_boundary(field):
    """Boundary pixels of Z = {w >= 0} (4-neighborhood)."""
    w = field.weights[:, :, 0, 0]
    z = w >= 0
    b = np.zeros_like(z, dtype=bool)
    b[:-1, :] |= z[:-1, :] != z[1:, :]
    b[1:, :] |= z[:-1, :] != z[1:, :]
    b[:, :-1] |= z[:, :-1] != z[:, 1:]
    b[:, 1:] |= z[:, :-1] != z[:, 1:]
    return b


def cusp_mask_centers(disk: ElevationDisk, top=6):
    """Most-visited ideal vertices of the disk (the large cusps)."""
    counts = {}
    pos = {}
    for i in range(len(disk)):
        for p in disk.triangle_vertices(i):
            k = tuple(np.round(p / p[0] / QUANT).astype(np.int64).tolist())
            counts[k] = counts.get(k, 0) + 1
            pos[k] = hg.uhs_from_light(p)
    best = sorted(counts, key=counts.get, reverse=True)[:top]
    return [pos[k] for k in best if np.isfinite(pos[k])]


def match_level_set(polyline: CTPolyline, field, view, mask_centers=(),
                    mask_radius_px=6.0, near_px=3.0):
    """Match report {hausdorff_px, coverage, masked_fraction}.

    Rasterizes the polyline into the field's grid, extracts the boundary
    of the sign region Z = {w >= 0}, and reports the symmetric Hausdorff
    distance inside the frame plus the fraction of unmasked polyline
    pixels within near_px of the boundary.
    """
    from scipy import ndimage

    class _Frame:
        resolution = (field.width, field.height)

    pixels = rasterize_polyline(polyline, view, _Frame())
    if not pixels:
        raise CTError("projected polyline misses the frame entirely")
    h, w = field.height, field.width
    poly_img = np.zeros((h, w), dtype=bool)
    rows = np.array([p[0] for p in pixels])
    cols = np.array([p[1] for p in pixels])
    poly_img[rows, cols] = True
    bimg = sign_region_boundary(field)

    mask = np.zeros((h, w), dtype=bool)
    if len(mask_centers):
        centers_px = []
        sw = boundary_to_screen(view, np.asarray(mask_centers))
        aspect = max(h - 1, 1) / max(w - 1, 1)
        for z in np.atleast_1d(sw):
            if not np.isfinite(z):
                continue
            col = (np.real(z) / view.fov + 0.5) * (w - 1)
            row = (np.imag(z) / (view.fov * aspect) + 0.5) * (h - 1)
            centers_px.append((row, col))
        if centers_px:
            rr, cc = np.mgrid[0:h, 0:w]
            for (row, col) in centers_px:
                mask |= (rr - row) ** 2 + (cc - col) ** 2 <= mask_radius_px ** 2

    dist_to_boundary = ndimage.distance_transform_edt(~bimg)
    dist_to_poly = ndimage.distance_transform_edt(~poly_img)

    un = poly_img & ~mask
    if not un.any():
        raise CTError("mask swallowed the whole polyline")
    coverage = float((dist_to_boundary[un] <= near_px).mean())
    hausdorff = max(
        float(dist_to_boundary[un].max()),
        float(dist_to_poly[bimg & ~mask].max()) if (bimg & ~mask).any() else 0.0,
    )
    return {
        "hausdorff_px": hausdorff,
        "coverage": coverage,
        "masked_fraction": float((poly_img & mask).sum() / poly_img.sum()),
    }


def match_report_json(report):
    return json.dumps(report, indent=1)
