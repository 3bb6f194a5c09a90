"""Whole-frame rendering: tiles, worker pool, weight fields, WFLD dumps.

The frame is cut into pixel tiles; each tile's rays are generated and
developed independently and written into disjoint regions of the output
arrays.  Because ray development is elementwise, the result is a pure
function of the inputs, bit-identical under any worker count.
"""

from __future__ import annotations

import io
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ray import develop_batch, TAG_ERROR
from .views import make_view_rays

WFLD_MAGIC = b"WFLD"
WFLD_VERSION = 1


@dataclass
class RenderConfig:
    R: float = 7.389056098930650          # visual radius (e^2 by default)
    S: int = 1000                         # max face crossings per ray
    samples: int = 1                      # k: k x k sub-samples per pixel
    resolution: tuple = (256, 256)        # (width, height)
    edge_eps: float | None = None
    elevation: dict | None = None         # {"w_max": float}
    colour: dict = field(default_factory=dict)
    precision: str = "f64"                # "f32" reproduces the noise study
    tile: int = 32
    workers: int | None = None
    jitter_seed: int | None = None

    def __post_init__(self):
        if self.R < 0:
            raise ValueError("R must be >= 0")
        if self.S < 1:
            raise ValueError("S must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.precision not in ("f32", "f64"):
            raise ValueError("precision must be f32 or f64")

    @property
    def dtype(self):
        return np.float32 if self.precision == "f32" else np.float64


@dataclass
class WeightField:
    """Per-sample fractal values before any colour mapping."""

    weights: np.ndarray    # (h, w, k, k)
    tags: np.ndarray       # (h, w, k, k) uint8 termination tags
    distance: np.ndarray   # (h, w, k, k) arclength at termination
    k: int
    meta: dict = field(default_factory=dict)

    @property
    def height(self):
        return self.weights.shape[0]

    @property
    def width(self):
        return self.weights.shape[1]

    def mean_per_pixel(self):
        return self.weights.mean(axis=(2, 3))

    def tag_fraction(self, tag):
        return float((self.tags == tag).mean())

    def dump(self, fh):
        """Little-endian WFLD binary: 32-byte header + f64 weights.

        Layout is row-major over pixels, sample-major within each pixel
        (C order of the (h, w, k, k) array).
        """
        precision = 32 if self.meta.get("precision") == "f32" else 64
        header = struct.pack(
            "<4sIIIII8x", WFLD_MAGIC, WFLD_VERSION,
            self.width, self.height, self.k, precision)
        assert len(header) == 32
        fh.write(header)
        fh.write(np.ascontiguousarray(self.weights, dtype="<f8").tobytes())

    def dumps(self):
        buf = io.BytesIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, fh):
        header = fh.read(32)
        magic, version, w, h, k, precision = struct.unpack("<4sIIIII8x", header)
        if magic != WFLD_MAGIC:
            raise ValueError("not a WFLD dump")
        if version != WFLD_VERSION:
            raise ValueError(f"unsupported WFLD version {version}")
        data = np.frombuffer(fh.read(h * w * k * k * 8), dtype="<f8")
        weights = data.reshape(h, w, k, k)
        return cls(weights=weights.copy(),
                   tags=np.zeros((h, w, k, k), dtype=np.uint8),
                   distance=np.zeros((h, w, k, k)), k=k,
                   meta={"precision": "f32" if precision == 32 else "f64"})


def _render_tile(geom, view, cfg, pixels):
    batch, error = make_view_rays(geom, view, cfg, pixels=pixels)
    tags, dist = develop_batch(geom, batch, cfg)
    tags = np.where(error, np.uint8(TAG_ERROR), tags)
    return batch.weight.astype(np.float64), tags, dist


def render(geom, view, cfg: RenderConfig):
    """Render the view into a WeightField (deterministic, parallel)."""
    if cfg.precision == "f32":
        geom = geom.astype(np.float32)
    w, h = cfg.resolution
    k = cfg.samples
    weights = np.zeros((h, w, k, k))
    tags = np.zeros((h, w, k, k), dtype=np.uint8)
    distance = np.zeros((h, w, k, k))

    tiles = []
    ts = cfg.tile
    for r0 in range(0, h, ts):
        for c0 in range(0, w, ts):
            rows, cols = np.mgrid[r0:min(r0 + ts, h), c0:min(c0 + ts, w)]
            tiles.append((r0, c0, np.stack([rows.ravel(), cols.ravel()], axis=1)))

    def work(tile):
        r0, c0, pixels = tile
        wts, tgs, dst = _render_tile(geom, view, cfg, pixels)
        shape = (min(ts, h - r0), min(ts, w - c0), k, k)
        return (r0, c0, wts.reshape(shape), tgs.reshape(shape), dst.reshape(shape))

    n_workers = cfg.workers or 1
    if n_workers == 1:
        results = map(work, tiles)
    else:
        pool = ThreadPoolExecutor(max_workers=n_workers)
        results = pool.map(work, tiles)
    for (r0, c0, wts, tgs, dst) in results:
        rh, rw = wts.shape[:2]
        weights[r0:r0 + rh, c0:c0 + rw] = wts
        tags[r0:r0 + rh, c0:c0 + rw] = tgs
        distance[r0:r0 + rh, c0:c0 + rw] = dst
    if n_workers != 1:
        pool.shutdown()

    meta = {
        "view": view.kind, "R": cfg.R, "S": cfg.S, "k": k,
        "resolution": [w, h], "precision": cfg.precision,
    }
    return WeightField(weights=weights, tags=tags, distance=distance, k=k, meta=meta)
