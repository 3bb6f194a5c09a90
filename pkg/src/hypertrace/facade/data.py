"""Bundled triangulation data access.

Manifolds resolve against the packaged data directory, or against the
directory named by the HYPERTRACE_DATA environment variable when set, or
against an explicit file path.
"""

from __future__ import annotations

import functools
import os

import hypertrace

from ..tricomplex import fileformat, solve_shapes, build_geometry_ideal


def data_dir():
    override = os.environ.get("HYPERTRACE_DATA")
    if override:
        return override
    return os.path.join(os.path.dirname(os.path.abspath(hypertrace.__file__)), "data")


def list_manifolds():
    d = data_dir()
    names = []
    for f in sorted(os.listdir(d)):
        if f.endswith(".json"):
            names.append(f[:-5])
    return names


def manifold_path(name):
    if os.path.sep in name or name.endswith(".json"):
        return name
    path = os.path.join(data_dir(), name + ".json")
    if not os.path.exists(path):
        raise FileNotFoundError(
            f"unknown manifold {name!r}; bundled: {list_manifolds()}")
    return path


def load_manifold(name, cocycle=None):
    tri = fileformat.load(manifold_path(name))
    if cocycle is not None:
        tri = tri.select_cocycle(cocycle)
    return tri


@functools.lru_cache(maxsize=32)
def _geometry_cached(name, cocycle, filling_key):
    tri = load_manifold(name, cocycle)
    filling = None
    if filling_key:
        filling = [tuple(pq) if pq is not None else None for pq in filling_key]
    if tri.shapes is not None and not filling_key:
        shapes = tri.shapes
    else:
        shapes = solve_shapes(tri, filling=filling).shapes
    return build_geometry_ideal(tri, shapes)


def load_geometry(name, cocycle=None, filling=None):
    """Solved, validated geometry for a bundled manifold.

    filling: optional per-cusp (p, q) list; results are cached.
    """
    filling_key = None
    if filling is not None:
        filling_key = tuple(tuple(pq) if pq is not None else None for pq in filling)
    return _geometry_cached(name, cocycle, filling_key)
