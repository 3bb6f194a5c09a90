"""Views and per-pixel ray generation.

A view fixes the two-parameter family of initial rays:

* material: rays emanate radially from a point; the screen is a rectangle
  in the tangent space, and the field of view is the angle between the
  rays through the midpoints of the left and right screen edges.
* ideal: rays are the outward normals of a horosphere; the screen is a
  rectangle in the horosphere's intrinsic flat metric.
* hyperideal: rays are the normals (on one side) of a geodesic plane; the
  screen is a rectangle in Klein-model coordinates on that plane.

All view data (anchor point, frame, horosphere/plane) lives in the
coordinates of the view's anchor tetrahedron.  Ideal and hyperideal
sample points are located by walking the straight segment from the
anchor to the sample; the walk also accumulates the weight w_0 picked up
from the base point to the ray base, which is what keeps the picture
consistent when the screen crosses faces of the triangulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import hypgeom as hg
from .ray import RayBatch, develop_segment, DevelopError

VIEW_KINDS = ("material", "ideal", "hyperideal")


@dataclass
class View:
    kind: str
    tet: int                      # anchor tetrahedron
    anchor: np.ndarray            # point inside the anchor tet
    frame: np.ndarray             # (3, 4): fwd/right/up for material;
                                  # e1, e2 (+ unused) for ideal/hyperideal
    fov: float = 90.0             # degrees (material) or screen width in
                                  # intrinsic units (ideal: horosphere metric,
                                  # hyperideal: Klein coordinates)
    base_weight: float = 0.0
    light: np.ndarray | None = None   # horosphere vector, <anchor0,light> = -1
    surface_point: np.ndarray | None = None  # point on horosphere/plane
    plane: np.ndarray | None = None   # hyperideal plane normal
    side: int = 1                     # hyperideal: which normal direction

    def check(self, geom=None, tol=1e-9):
        if self.kind not in VIEW_KINDS:
            raise ValueError(f"unknown view kind {self.kind!r}")
        hg.check_point(self.anchor, tol)
        if self.kind == "material":
            for i, e in enumerate(self.frame):
                hg.check_direction(self.anchor, e, tol)
                for f in self.frame[i + 1:]:
                    if abs(hg.minkowski_dot(e, f)) > tol:
                        raise hg.GeometryError("frame not orthonormal")
        if geom is not None and not geom.contains(self.tet, self.anchor):
            raise hg.GeometryError("anchor point not inside anchor tet")
        return self


def material_view(geom, tet=0, point=None, fwd=None, fov=90.0, base_weight=0.0):
    """Material view anchored at a point (default: tet incenter-ish)."""
    if point is None:
        point = tet_center(geom, tet)
    if fwd is None:
        fwd = np.array([0.0, 1.0, 0.0, 0.0])
    p, axes = hg.frame_orthonormalize(
        np.asarray(point, dtype=float),
        [np.asarray(fwd, dtype=float), np.array([0.0, 0, 1, 0]), np.array([0.0, 0, 0, 1])])
    return View(kind="material", tet=tet, anchor=p, frame=np.stack(axes),
                fov=fov, base_weight=base_weight)


def ideal_view(geom, tet, vertex=None, light=None, width=2.0, base_weight=0.0,
               anchor=None):
    """Ideal view: outward normals of a horosphere about an ideal point.

    vertex picks one of the anchor tet's ideal vertices (default 0 for
    ideal geometries); the horosphere is scaled through the anchor point.
    """
    if anchor is None:
        anchor = tet_center(geom, tet)
    anchor = hg.normalize_point(np.asarray(anchor, dtype=float))
    if light is None:
        if vertex is None:
            vertex = 0
        light = geom.vertices[tet][vertex]
    light = np.asarray(light, dtype=float)
    light = light / (-hg.minkowski_dot(anchor, light))  # <anchor, light> = -1
    # tangent frame on the horosphere at the anchor
    seeds = [np.array([0.0, 1, 0, 0]), np.array([0.0, 0, 1, 0]), np.array([0.0, 0, 0, 1])]
    es = []
    for s in seeds:
        e = s + hg.minkowski_dot(s, anchor) * anchor
        # project out the light direction within the tangent space:
        # <e, light> = 0 keeps e tangent to the horosphere
        ll = light + hg.minkowski_dot(light, anchor) * anchor  # tangent part of light
        denom = hg.minkowski_dot(ll, ll)
        if denom > 1e-18:
            e = e - (hg.minkowski_dot(e, ll) / denom) * ll
        for prev in es:
            e = e - hg.minkowski_dot(e, prev) * prev
        nn = hg.minkowski_dot(e, e)
        if nn > 1e-12:
            es.append(e / np.sqrt(nn))
        if len(es) == 2:
            break
    frame = np.stack(es + [np.zeros(4)])
    return View(kind="ideal", tet=tet, anchor=anchor, frame=frame, fov=width,
                base_weight=base_weight, light=light, surface_point=anchor.copy())


def hyperideal_view(geom, tet, plane=None, width=1.0, side=1, base_weight=0.0,
                    anchor=None):
    """Hyperideal view: normals on one side of a geodesic plane."""
    if anchor is None:
        anchor = tet_center(geom, tet)
    anchor = hg.normalize_point(np.asarray(anchor, dtype=float))
    if plane is None:
        plane = np.array([0.0, 0, 0, 1])
    plane = np.asarray(plane, dtype=float)
    plane = plane / np.sqrt(hg.minkowski_dot(plane, plane))
    # drop the anchor perpendicularly onto the plane
    foot = anchor - hg.minkowski_dot(anchor, plane) * plane
    foot = hg.normalize_point(foot)
    seeds = [np.array([0.0, 1, 0, 0]), np.array([0.0, 0, 1, 0]), np.array([0.0, 0, 0, 1])]
    es = []
    for s in seeds:
        e = s + hg.minkowski_dot(s, foot) * foot
        e = e - hg.minkowski_dot(e, plane) * plane
        for prev in es:
            e = e - hg.minkowski_dot(e, prev) * prev
        nn = hg.minkowski_dot(e, e)
        if nn > 1e-12:
            es.append(e / np.sqrt(nn))
        if len(es) == 2:
            break
    frame = np.stack(es + [np.zeros(4)])
    return View(kind="hyperideal", tet=tet, anchor=anchor, frame=frame,
                fov=width, base_weight=base_weight, plane=plane, side=side,
                surface_point=foot)


def tet_center(geom, tet):
    """A point well inside a tetrahedron (normalized vertex barycenter)."""
    c = geom.vertices[tet].sum(axis=0)
    return hg.normalize_point(c)


def flow_ideal_view(view: View, d):
    """Flow an ideal view outward by distance d (Lemma-of-scaling partner).

    The returned view shows the same fractal with screen coordinates
    scaled by e^d when rendered at radius R instead of R + d.
    """
    if view.kind != "ideal":
        raise ValueError("flow_ideal_view needs an ideal view")
    light = view.light * np.exp(-d)
    p0 = view.surface_point * np.exp(d) - view.light * np.sinh(d)
    return replace(view, light=light, surface_point=p0)


# ---------------------------------------------------------------------------
# sample-point / ray generation


def sample_coords(cfg, pixels=None):
    """Screen coordinates of every (pixel, sub-sample), in [-1/2, 1/2]^2
    units of the full screen.

    Pixel centers span the full screen: column 0 sits at -1/2 and column
    w-1 at +1/2, so the field of view is exactly the angle between the
    leftmost and rightmost column rays.  Sub-samples form a centered
    k x k grid within the one-pixel footprint around each center.

    Returns (sx, sy) arrays of shape (npix, k*k).  `pixels` is an optional
    (n, 2) array of (row, col) pixel indices; default is the full frame in
    row-major order.
    """
    w, h = cfg.resolution
    k = cfg.samples
    if pixels is None:
        rows, cols = np.mgrid[0:h, 0:w]
        pixels = np.stack([rows.ravel(), cols.ravel()], axis=1)
    sub = (np.arange(k) + 0.5) / k - 0.5  # centered k x k grid, in pixels
    ox, oy = np.meshgrid(sub, sub, indexing="xy")
    offs = np.stack([ox.ravel(), oy.ravel()], axis=1)  # (k*k, 2)
    if cfg.jitter_seed is not None:
        rng = np.random.Generator(np.random.Philox(cfg.jitter_seed))
        jit = (rng.random(size=(len(pixels), k * k, 2)) - 0.5) / k
        offs = offs[None, :, :] + jit
    else:
        offs = np.broadcast_to(offs[None, :, :], (len(pixels), k * k, 2))
    dx = 1.0 / max(w - 1, 1)
    dy = 1.0 / max(h - 1, 1)
    cx = (pixels[:, 1:2] + offs[..., 0]) * dx - 0.5 * (w > 1)
    cy = (pixels[:, 0:1] + offs[..., 1]) * dy - 0.5 * (h > 1)
    return cx, cy


def make_view_rays(geom, view: View, cfg, pixels=None):
    """Initial RayBatch for every (pixel, sub-sample) of the view.

    Returns (batch, error_mask): error_mask flags rays whose base point
    could not be located (they carry tag ERROR downstream).  Rays are laid
    out pixel-major, sub-sample-minor, matching WeightField layout.
    """
    w, h = cfg.resolution
    cx, cy = sample_coords(cfg, pixels)
    n = cx.size
    flat_x = cx.ravel()
    flat_y = cy.ravel()
    dtype = geom.planes.dtype
    integer = geom.integer_weights and float(view.base_weight) == round(view.base_weight)
    batch = RayBatch.empty(n, dtype=dtype, integer_weights=integer)
    error = np.zeros(n, dtype=bool)

    aspect = max(h - 1, 1) / max(w - 1, 1)  # keeps pixel footprints square
    if view.kind == "material":
        half = np.tan(np.radians(view.fov) / 2.0)
        x = flat_x * 2 * half
        y = flat_y * 2 * half * aspect
        fwd, right, up = view.frame
        dirs = fwd[None, :] + x[:, None] * right[None, :] + y[:, None] * up[None, :]
        dirs = dirs / np.sqrt(hg.minkowski_dot(dirs, dirs))[:, None]
        batch.tet[:] = view.tet
        batch.point[:] = view.anchor
        batch.dir[:] = dirs
        batch.weight[:] = view.base_weight
        batch.base_weight = batch.weight.copy()
        return batch, error

    if view.kind == "ideal":
        e1, e2 = view.frame[0], view.frame[1]
        u = flat_x * view.fov
        s = flat_y * view.fov * aspect
        rho = (u * u + s * s) / 2.0
        base = (view.surface_point[None, :] + u[:, None] * e1[None, :]
                + s[:, None] * e2[None, :] + rho[:, None] * view.light[None, :])
        dirs = base - view.light[None, :]
    else:  # hyperideal
        e1, e2 = view.frame[0], view.frame[1]
        k0 = hg.klein_project(view.surface_point)
        k1 = hg.klein_project(view.surface_point + e1) - k0  # plane directions in
        k2 = hg.klein_project(view.surface_point + e2) - k0  # Klein coordinates
        a = flat_x * view.fov
        b = flat_y * view.fov * aspect
        kk = k0[None, :] + a[:, None] * k1[None, :] + b[:, None] * k2[None, :]
        r2 = (kk * kk).sum(axis=1)
        error |= r2 >= 1.0
        base = np.zeros((n, 4))
        ok = ~error
        base[ok] = hg.klein_lift(kk[ok])
        dirs = np.broadcast_to(view.side * view.plane, (n, 4)).copy()

    # locate every base point by walking from the anchor, in lockstep
    ok = ~error
    tet_f, q_f, d_f, w_f, lost = locate_batch(
        geom, view.tet, view.anchor, base[ok], dirs[ok])
    idx = np.nonzero(ok)[0]
    batch.tet[idx] = tet_f
    batch.point[idx] = q_f
    batch.dir[idx] = d_f
    if integer:
        batch.weight[idx] = np.int64(round(view.base_weight)) + np.round(w_f).astype(np.int64)
    else:
        batch.weight[idx] = view.base_weight + w_f
    error[idx[lost]] = True
    batch.base_weight = batch.weight.copy()
    return batch, error


def locate_batch(geom, tet0, start, targets, dirs, max_steps=100000):
    """Walk straight segments from `start` to each target, in lockstep.

    Returns (tet, point, dir, weight, lost): final tetrahedron, the target
    point and transported direction in its coordinates, the accumulated
    face weight, and a mask of rays that could not be located.
    """
    dtype = geom.planes.dtype
    n = len(targets)
    targets = targets.astype(dtype)
    start = start.astype(dtype)
    remaining = np.arccosh(np.maximum(1.0, -hg.minkowski_dot(targets, start)))
    v = targets + hg.minkowski_dot(targets, start)[:, None] * start[None, :]
    nn = hg.minkowski_dot(v, v)
    degenerate = nn < 1e-20
    v = np.where(degenerate[:, None], np.eye(4, dtype=dtype)[1][None, :], v)
    nn = np.where(degenerate, 1.0, nn)
    v = v / np.sqrt(nn)[:, None]
    remaining = np.where(degenerate, 0.0, remaining)

    q = np.broadcast_to(start, (n, 4)).copy()
    tet = np.full(n, tet0, dtype=np.int32)
    mats = np.broadcast_to(np.eye(4, dtype=dtype), (n, 4, 4)).copy()
    weight = np.zeros(n, dtype=np.float64)
    lost = np.zeros(n, dtype=bool)
    active = remaining > 0
    tanh_tmin = np.tanh(hg.T_MIN)

    from .ray import _renorm

    it = 0
    while active.any():
        it += 1
        if it > max_steps:
            lost[active] = True
            break
        idx = np.nonzero(active)[0]
        planes = geom.planes[tet[idx]]
        a = _vdots(planes, q[idx])
        b = _vdots(planes, v[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(b > 0, -a / b, np.inf)
        ratio = np.where((ratio <= tanh_tmin) | (ratio >= 1.0) | ~np.isfinite(ratio),
                         np.inf, ratio)
        face = np.argmin(ratio, axis=1)
        rmin = ratio[np.arange(len(idx)), face]
        t_exit = np.where(np.isfinite(rmin),
                          np.arctanh(np.where(np.isfinite(rmin), rmin, 0.5)), np.inf)
        rem = remaining[idx]
        done = t_exit >= rem
        if done.any():
            sel = idx[done]
            qd, vd = hg.geodesic_at(q[sel], v[sel], rem[done])
            q[sel] = qd
            v[sel] = vd
            active[sel] = False
        go = ~done & np.isfinite(t_exit)
        bad = ~done & ~np.isfinite(t_exit)
        if bad.any():
            lost[idx[bad]] = True
            active[idx[bad]] = False
        if go.any():
            sel = idx[go]
            qg, vg = hg.geodesic_at(q[sel], v[sel], t_exit[go])
            qg, vg = _renorm(qg, vg)
            remaining[sel] = rem[go] - t_exit[go]
            fgo = face[go]
            weight[sel] += geom.weights[tet[sel], fgo]
            g = geom.pairings[tet[sel], fgo]
            qg = np.einsum("nij,nj->ni", g, qg)
            vg = np.einsum("nij,nj->ni", g, vg)
            q[sel], v[sel] = _renorm(qg, vg)
            mats[sel] = np.einsum("nij,njk->nik", g, mats[sel])
            tet[sel] = geom.neighbors[tet[sel], fgo]

    # transport the ray directions and re-tangent at the located points
    d = np.einsum("nij,nj->ni", mats, dirs.astype(dtype))
    d = d + hg.minkowski_dot(d, q)[:, None] * q
    d = d / np.sqrt(hg.minkowski_dot(d, d))[:, None]
    return tet, q, d, weight, lost


def _vdots(planes, x):
    return np.einsum("nfk,nk->nf", planes * hg.J_DIAG.astype(x.dtype), x)
