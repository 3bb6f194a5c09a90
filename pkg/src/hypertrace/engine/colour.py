"""Colour mapping of weight fields and image output (PNG / PPM).

Weights are remapped to [0, 1] by 0.5 + atan(w / scale) / pi and fed
through a gradient; sub-samples are averaged per pixel in linear colour
space before the 8-bit quantization.  The particular gradients are an
arbitrary documented choice -- every quantitative test in the suite
compares weights, never colours.
"""

from __future__ import annotations

import numpy as np

from .ray import TAG_EDGE, TAG_ELEVATION

# gradient control points in linear RGB
GRADIENTS = {
    "ember": np.array([
        [0.00, 0.02, 0.10],
        [0.15, 0.20, 0.45],
        [0.55, 0.30, 0.35],
        [0.95, 0.60, 0.20],
        [1.00, 0.95, 0.75],
    ]),
    "ice": np.array([
        [0.02, 0.03, 0.08],
        [0.10, 0.25, 0.45],
        [0.35, 0.60, 0.75],
        [0.80, 0.92, 0.97],
        [1.00, 1.00, 1.00],
    ]),
    "gray": np.array([
        [0.0, 0.0, 0.0],
        [1.0, 1.0, 1.0],
    ]),
}


def apply_gradient(t, name="ember"):
    """Evaluate a gradient at t in [0, 1]; returns linear RGB."""
    stops = GRADIENTS[name]
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    pos = t * (len(stops) - 1)
    lo = np.clip(np.floor(pos).astype(int), 0, len(stops) - 2)
    frac = (pos - lo)[..., None]
    return stops[lo] * (1 - frac) + stops[lo + 1] * frac


def colour_map(field, cfg=None):
    """Map a WeightField to an 8-bit RGB image array (h, w, 3).

    Colour options (cfg.colour or a plain dict):
      scale      atan remap scale (default 3.0)
      gradient   gradient id (default "ember")
      threshold  if set, two-tone mode: weight >= threshold is white
      by_distance  colour edge-hit / elevation-hit samples by the ray's
                   termination distance instead of its weight
      distance_scale  atan scale for the distance colouring (default R/2)
    """
    opts = {}
    if cfg is not None:
        opts = cfg.colour if hasattr(cfg, "colour") else dict(cfg)
    scale = opts.get("scale", 3.0)
    gradient = opts.get("gradient", "ember")
    threshold = opts.get("threshold")
    by_distance = opts.get("by_distance", False)

    w = field.weights
    if threshold is not None:
        rgb = np.where((w >= threshold)[..., None], 1.0, 0.0)
        rgb = np.broadcast_to(rgb, w.shape + (3,)).copy()
    else:
        t = 0.5 + np.arctan(w / scale) / np.pi
        rgb = apply_gradient(t, gradient)

    if by_distance:
        dscale = opts.get("distance_scale", max(field.meta.get("R", 8.0) / 2, 1e-9))
        stopped = (field.tags == TAG_EDGE) | (field.tags == TAG_ELEVATION)
        td = 2.0 * np.arctan(field.distance / dscale) / np.pi
        drgb = apply_gradient(1.0 - td, "ice")
        rgb = np.where(stopped[..., None], drgb, rgb)

    # average sub-samples in linear colour space
    mean = rgb.mean(axis=(2, 3))
    return (np.clip(mean, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def write_png(image, path_or_fh):
    from PIL import Image

    img = Image.fromarray(image, mode="RGB")
    img.save(path_or_fh, format="PNG")


def png_bytes(image):
    import io

    buf = io.BytesIO()
    write_png(image, buf)
    return buf.getvalue()


def write_ppm(image, path):
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())
