import json

import numpy as np
import pytest

from hypertrace import engine as eng, surgery
from hypertrace import hypgeom as hg
from hypertrace.facade import data as bundled
from hypertrace.tricomplex import solve_shapes, build_geometry_ideal

S_VALUES = [10, 5, 4, 3, 2, 1.8, 1.6, 1.4, 1.2, 1.0]


@pytest.fixture(scope="module")
def m122_tri():
    return bundled.load_manifold("m122")


@pytest.fixture(scope="module")
def path(m122_tri):
    return surgery.trace_path(m122_tri, S_VALUES)


def test_path_solves_fully(path):
    assert path.diagnostic is None
    assert len(path.solutions) == len(S_VALUES)
    for sol in path.solutions:
        assert sol.residual < 1e-12
        assert sol.shapes.imag.min() > 0


def test_two_route_consistency(m122_tri, path):
    direct = solve_shapes(m122_tri, filling=[(4, -1)])
    assert np.abs(path.solutions[-1].shapes - direct.shapes).max() < 1e-9


def test_path_continuity(path):
    prev = path.complete.shapes
    for sol in path.solutions:
        assert np.abs(sol.shapes - prev).max() < 0.5
        prev = sol.shapes


def test_large_s_recovers_complete(m122_tri, path):
    # as s grows the filling equations degenerate to completeness
    sol = solve_shapes(m122_tri, filling=[(4e4, -1e4)],
                       initial=path.complete)
    assert np.abs(sol.shapes - path.complete.shapes).max() < 1e-3


def test_s_values_must_decrease(m122_tri):
    with pytest.raises(ValueError):
        surgery.trace_path(m122_tri, [2, 3])


def test_manifest(path):
    doc = json.loads(surgery.path_manifest(path))
    assert len(doc["samples"]) == len(S_VALUES)
    assert doc["samples"][0]["s"] == 10
    assert doc["samples"][-1]["residual"] < 1e-12


def test_transport_view_stays_anchored(m122_tri, path):
    geomC = build_geometry_ideal(m122_tri, path.complete.shapes)
    geom12 = build_geometry_ideal(m122_tri, path.solutions[-2].shapes)
    view = eng.material_view(geomC, tet=0, fov=60)
    moved = surgery.transport_view(geomC, geom12, view)
    assert moved.tet == view.tet
    assert geom12.contains(moved.tet, moved.anchor)
    hg.check_point(moved.anchor)


def test_step_cap_monotone_in_S(m122_tri, path):
    geom12 = build_geometry_ideal(m122_tri, path.solutions[-2].shapes)
    view = eng.material_view(geom12, tet=0, fov=90)
    f55 = eng.render(geom12, view, eng.RenderConfig(
        R=7.0, S=55, samples=1, resolution=(48, 48)))
    f1000 = eng.render(geom12, view, eng.RenderConfig(
        R=7.0, S=1000, samples=1, resolution=(48, 48)))
    assert f55.tag_fraction(eng.TAG_BUDGET) > f1000.tag_fraction(eng.TAG_BUDGET)


def test_render_path_yields_frames(m122_tri):
    short = surgery.trace_path(m122_tri, [10, 5])
    view = eng.material_view(
        build_geometry_ideal(m122_tri, short.complete.shapes), tet=0, fov=60)
    cfg = eng.RenderConfig(R=5.0, S=200, samples=1, resolution=(16, 16))
    frames = list(surgery.render_path(m122_tri, short, view, cfg))
    assert len(frames) == 3
    assert np.isinf(frames[0][0])
    assert frames[1][0] == 10
    for (_s, field, frac, _v) in frames:
        assert 0.0 <= frac <= 1.0


def test_frame_name_fixed_width():
    assert surgery.frame_name(10) == "frame_010.000"
    assert surgery.frame_name(1.2) == "frame_001.200"
