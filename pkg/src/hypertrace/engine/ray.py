"""Ray development through a geometric triangulation.

A ray is developed inside the fixed collection of model tetrahedra: find
the face through which the geodesic exits the current tetrahedron, move
to the crossing, apply the face-pairing isometry and add the face weight,
and repeat until the arclength budget R, the step cap S, an edge tube, or
an elevation crossing stops it.  Working in the fundamental tetrahedra
keeps all coordinates O(1), which is what makes large R feasible at all.

The batch developer advances many rays in lockstep with vectorized
numpy; each ray's trajectory depends only on its own state, so results
are bitwise independent of how rays are grouped into batches (this is
what makes the tile renderer deterministic under any worker count).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import hypgeom as hg

TAG_NONE = 0        # still running (never appears in results)
TAG_RADIUS = 1      # reached arclength R
TAG_BUDGET = 2      # hit the step cap S
TAG_EDGE = 3        # entered an edge tube
TAG_ELEVATION = 4   # crossed a selected elevation
TAG_ERROR = 5       # no exit face found / base not locatable

TAG_NAMES = {
    TAG_RADIUS: "radius", TAG_BUDGET: "ray-budget", TAG_EDGE: "edge-hit",
    TAG_ELEVATION: "elevation-hit", TAG_ERROR: "error",
}


class DevelopError(RuntimeError):
    """Geometry inconsistency detected mid-flight; carries the ray state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass
class RayState:
    """Loop state of one ray: current tet, position, direction, weight."""

    tet: int
    point: np.ndarray
    dir: np.ndarray
    weight: float = 0.0
    arclen: float = 0.0
    steps: int = 0


@dataclass
class RayBatch:
    """Struct-of-arrays state for a batch of rays."""

    tet: np.ndarray      # (n,) int32
    point: np.ndarray    # (n, 4)
    dir: np.ndarray      # (n, 4)
    weight: np.ndarray   # (n,) float64 or int64
    arclen: np.ndarray   # (n,)
    steps: np.ndarray    # (n,) int32
    base_weight: np.ndarray | None = None  # per-ray w_0 for elevation rules

    @classmethod
    def empty(cls, n, dtype=np.float64, integer_weights=False):
        return cls(
            tet=np.zeros(n, dtype=np.int32),
            point=np.zeros((n, 4), dtype=dtype),
            dir=np.zeros((n, 4), dtype=dtype),
            weight=np.zeros(n, dtype=np.int64 if integer_weights else np.float64),
            arclen=np.zeros(n, dtype=dtype),
            steps=np.zeros(n, dtype=np.int32),
        )

    def __len__(self):
        return len(self.tet)


def _dots(planes, x):
    """Minkowski pairings of each of the 4 face planes with x, batched."""
    return np.einsum("nfk,nk->nf", planes * hg.J_DIAG.astype(x.dtype), x)


def _renorm(q, v):
    # f32 rays deep in the noise regime can degenerate; they keep running
    # and their garbage values are exactly what the precision study measures
    with np.errstate(all="ignore"):
        q = q / np.sqrt(-((q * q * hg.J_DIAG.astype(q.dtype)).sum(axis=-1)))[..., None]
        v = v + (v * q * hg.J_DIAG.astype(q.dtype)).sum(axis=-1)[..., None] * q
        v = v / np.sqrt((v * v * hg.J_DIAG.astype(v.dtype)).sum(axis=-1))[..., None]
    return q, v


def develop_batch(geom, batch: RayBatch, cfg):
    """Develop every ray in the batch to termination.

    Returns (tags, distance): per-ray termination tag and the arclength at
    termination (which is also left in batch.arclen).  The batch arrays
    are updated in place to the final states.
    """
    dtype = geom.planes.dtype
    n = len(batch)
    q = batch.point.astype(dtype, copy=True)
    v = batch.dir.astype(dtype, copy=True)
    tet = batch.tet.astype(np.int32, copy=True)
    weight = batch.weight.copy()
    arclen = batch.arclen.astype(dtype, copy=True)
    steps = batch.steps.copy()

    radius = np.asarray(cfg.R, dtype=dtype)
    step_cap = cfg.S
    edge_eps = cfg.edge_eps
    elevation = cfg.elevation
    if elevation is not None:
        w_max = elevation["w_max"]
        if batch.base_weight is None:
            raise ValueError("elevation stopping needs per-ray base weights")
        w0 = batch.base_weight

    int_weights = weight.dtype.kind == "i"
    wtable = np.round(geom.weights).astype(np.int64) if int_weights \
        else geom.weights.astype(np.float64)

    tags = np.zeros(n, dtype=np.uint8)
    active = np.ones(n, dtype=bool)
    tanh_tmin = np.tanh(np.asarray(hg.T_MIN, dtype=dtype))

    while active.any():
        idx = np.nonzero(active)[0]
        planes = geom.planes[tet[idx]]
        qa = q[idx]
        va = v[idx]
        a = _dots(planes, qa)
        b = _dots(planes, va)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(b > 0, -a / b, np.inf)
        bad = (ratio <= tanh_tmin) | (ratio >= 1.0) | ~np.isfinite(ratio)
        ratio = np.where(bad, np.inf, ratio)
        face = np.argmin(ratio, axis=1)
        rmin = ratio[np.arange(len(idx)), face]
        t_exit = np.where(np.isfinite(rmin), np.arctanh(np.where(np.isfinite(rmin), rmin, 0.5)), np.inf)

        # rays with no exit face: geometry inconsistency
        lost = ~np.isfinite(t_exit)
        if lost.any():
            tags[idx[lost]] = TAG_ERROR
            active[idx[lost]] = False

        # rays whose budget ends before the face: stop exactly at R
        remaining = radius - arclen[idx]
        ends = np.isfinite(t_exit) & (t_exit >= remaining)
        if ends.any():
            sel = idx[ends]
            qe, ve = hg.geodesic_at(q[sel], v[sel], np.maximum(remaining[ends], 0))
            qe, ve = _renorm(qe, ve)
            q[sel], v[sel] = qe, ve
            arclen[sel] = radius
            tags[sel] = TAG_RADIUS
            active[sel] = False

        go = np.isfinite(t_exit) & ~ends
        if not go.any():
            continue
        sel = idx[go]
        t_go = t_exit[go]
        fgo = face[go]
        qg, vg = hg.geodesic_at(q[sel], v[sel], t_go)
        qg, vg = _renorm(qg, vg)
        arclen[sel] = arclen[sel] + t_go

        # edge tubes: distance from the crossing point to the six edges of
        # the tetrahedron being exited
        if edge_eps is not None:
            ends_e = geom.edge_ends[tet[sel]]
            u0 = np.einsum("nek,nk->ne", ends_e[:, :, 0, :] * hg.J_DIAG.astype(dtype), qg)
            u1 = np.einsum("nek,nk->ne", ends_e[:, :, 1, :] * hg.J_DIAG.astype(dtype), qg)
            gi = geom.edge_gram_inv[tet[sel]]
            c2 = -(gi[:, :, 0, 0] * u0 * u0 + 2 * gi[:, :, 0, 1] * u0 * u1
                   + gi[:, :, 1, 1] * u1 * u1)
            dmin = np.arccosh(np.sqrt(np.maximum(c2.min(axis=1), 1.0)))
            hit = dmin < edge_eps
            if hit.any():
                hsel = sel[hit]
                q[hsel], v[hsel] = qg[hit], vg[hit]
                tags[hsel] = TAG_EDGE
                active[hsel] = False
                keep = ~hit
                sel, qg, vg, t_go, fgo = sel[keep], qg[keep], vg[keep], t_go[keep], fgo[keep]
                if not len(sel):
                    continue

        # step cap
        steps[sel] = steps[sel] + 1
        over = steps[sel] > step_cap
        if over.any():
            osel = sel[over]
            q[osel], v[osel] = qg[over], vg[over]
            tags[osel] = TAG_BUDGET
            active[osel] = False
            keep = ~over
            sel, qg, vg, fgo = sel[keep], qg[keep], vg[keep], fgo[keep]
            if not len(sel):
                continue

        # cross: add the face weight, apply the pairing, move to neighbor
        weight[sel] = weight[sel] + wtable[tet[sel], fgo]
        mats = geom.pairings[tet[sel], fgo]
        qg = np.einsum("nij,nj->ni", mats, qg)
        vg = np.einsum("nij,nj->ni", mats, vg)
        qg, vg = _renorm(qg, vg)
        q[sel], v[sel] = qg, vg
        tet[sel] = geom.neighbors[tet[sel], fgo]

        if elevation is not None:
            wc = weight[sel]
            wb = w0[sel]
            stop = ((wb < 0) & (wc > 0)) | ((wb > w_max) & (wc < w_max)) \
                | ((wb > 0) & (wb < w_max) & (wc != wb))
            if stop.any():
                tags[sel[stop]] = TAG_ELEVATION
                active[sel[stop]] = False

    batch.point = q
    batch.dir = v
    batch.tet = tet
    batch.weight = weight
    batch.arclen = arclen
    batch.steps = steps
    return tags, arclen.astype(np.float64)


def develop_ray(geom, start: RayState, cfg):
    """Develop a single ray; returns (final RayState, tag name).

    Raises DevelopError when the geometry is inconsistent mid-flight (no
    exit face found).
    """
    integer = geom.integer_weights and float(start.weight) == round(float(start.weight))
    batch = RayBatch.empty(1, dtype=geom.planes.dtype, integer_weights=integer)
    batch.tet[0] = start.tet
    batch.point[0] = start.point
    batch.dir[0] = start.dir
    batch.weight[0] = start.weight
    batch.arclen[0] = start.arclen
    batch.steps[0] = start.steps
    if cfg.elevation is not None:
        batch.base_weight = batch.weight.copy()
    tags, _ = develop_batch(geom, batch, cfg)
    state = RayState(
        tet=int(batch.tet[0]),
        point=batch.point[0].astype(np.float64),
        dir=batch.dir[0].astype(np.float64),
        weight=batch.weight[0] if batch.weight.dtype.kind == "i" else float(batch.weight[0]),
        arclen=float(batch.arclen[0]),
        steps=int(batch.steps[0]),
    )
    if tags[0] == TAG_ERROR:
        raise DevelopError("no exit face found (inconsistent geometry)", state)
    return state, TAG_NAMES[int(tags[0])]


def develop_segment(geom, tet, start, target, max_steps=10000):
    """Walk the straight segment from `start` to `target` (both in the
    coordinates of `tet`); returns (tet, transform, weight, local point).

    The transform is the composed pairing matrix taking coordinates at the
    start picture to coordinates of the final tetrahedron; it transports
    directions at `target` into the final tet.  Used to locate ideal and
    hyperideal view sample points.
    """
    d = float(np.arccosh(max(1.0, -hg.minkowski_dot(start, target))))
    m = np.eye(4, dtype=geom.planes.dtype)
    weight = 0.0
    cur_tet = int(tet)
    if d < 1e-12:
        return cur_tet, m, weight, start.copy()
    v = target + hg.minkowski_dot(target, start) * start
    v = v / np.sqrt(hg.minkowski_dot(v, v))
    q = start.copy()
    remaining = d
    for _ in range(max_steps):
        a = hg.minkowski_dot(geom.planes[cur_tet], q)
        b = hg.minkowski_dot(geom.planes[cur_tet], v)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(b > 0, -a / b, np.inf)
        ratio = np.where((ratio <= np.tanh(hg.T_MIN)) | (ratio >= 1.0), np.inf, ratio)
        face = int(np.argmin(ratio))
        t_exit = np.arctanh(ratio[face]) if np.isfinite(ratio[face]) else np.inf
        if t_exit >= remaining:
            q, v = hg.geodesic_at(q, v, remaining)
            q, v = _renorm(q, v)
            return cur_tet, m, weight, q
        q, v = hg.geodesic_at(q, v, t_exit)
        q, v = _renorm(q, v)
        remaining -= t_exit
        weight += geom.weights[cur_tet][face]
        g = geom.pairings[cur_tet][face]
        q = g @ q
        v = g @ v
        q, v = _renorm(q, v)
        m = g @ m
        cur_tet = int(geom.neighbors[cur_tet][face])
    raise DevelopError("segment walk exceeded step bound")
