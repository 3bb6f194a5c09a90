"""Run configuration: resolution, provenance, view construction."""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np

from .. import engine as eng
from .. import hypgeom as hg
from . import data as bundled


class ConfigError(ValueError):
    pass


def parse_resolution(text):
    try:
        w, h = text.lower().split("x")
        return (int(w), int(h))
    except Exception:
        raise ConfigError(f"bad resolution {text!r}, expected WxH") from None


def parse_filling(text):
    if text in (None, "", "none"):
        return None
    try:
        p, q = text.split(",")
        return (float(p), float(q))
    except Exception:
        raise ConfigError(f"bad filling {text!r}, expected p,q") from None


def render_config(args):
    colour = {}
    if getattr(args, "threshold", None) is not None:
        colour["threshold"] = args.threshold
    if getattr(args, "gradient", None):
        colour["gradient"] = args.gradient
    if getattr(args, "colour_by_distance", False):
        colour["by_distance"] = True
    elevation = None
    if getattr(args, "elevation_wmax", None) is not None:
        elevation = {"w_max": args.elevation_wmax}
    return eng.RenderConfig(
        R=args.R,
        S=getattr(args, "S", 1000),
        samples=getattr(args, "k", 1),
        resolution=parse_resolution(getattr(args, "res", "256x256")),
        edge_eps=getattr(args, "edge_eps", None),
        elevation=elevation,
        colour=colour,
        precision=getattr(args, "precision", "f64"),
        workers=getattr(args, "workers", None),
        jitter_seed=getattr(args, "jitter_seed", None),
    )


def build_view(geom, kind, fov, tet=0, vertex=None, base_weight=0.0):
    if kind == "material":
        return eng.material_view(geom, tet=tet, fov=fov, base_weight=base_weight)
    if kind == "ideal":
        return eng.ideal_view(geom, tet=tet, vertex=vertex or 0, width=fov,
                              base_weight=base_weight)
    if kind == "hyperideal":
        return eng.hyperideal_view(geom, tet=tet, width=fov, base_weight=base_weight)
    raise ConfigError(f"unknown view kind {kind!r}")


def load_scene(args):
    """(tri, geom) for a manifold/cocycle/filling triple from CLI args."""
    name = getattr(args, "file", None) or args.manifold
    cocycle = getattr(args, "cocycle", None)
    filling = parse_filling(getattr(args, "filling", None))
    tri = bundled.load_manifold(name, cocycle)
    geom = bundled.load_geometry(name, cocycle,
                                 [filling] if filling else None)
    return tri, geom


def write_provenance(outdir, args, extra=None):
    os.makedirs(outdir, exist_ok=True)
    doc = {k: v for k, v in sorted(vars(args).items())
           if not k.startswith("_") and not callable(v)}
    if extra:
        doc.update(extra)
    path = os.path.join(outdir, "runconfig.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, default=str)
    return path
