"""Command-line interface.

Subcommands: validate, solve, render, ct, stats {sample,curve,sigma,hist,
converge}, surgery, serve.  Every run writes its outputs plus a
provenance copy of the resolved configuration; exit status is 0 on
success, 1 on input errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .. import engine as eng
from .. import stats as hs
from .. import ct as ctmod
from .. import surgery as surgerymod
from ..tricomplex import (
    TriangulationError, SolveError, solve_shapes, validate,
    build_geometry_ideal, fileformat,
)
from . import data as bundled
from .config import (
    ConfigError, parse_filling, parse_resolution, render_config, build_view,
    load_scene, write_provenance,
)


class InputError(Exception):
    pass


def _add_scene_args(p, view=True):
    p.add_argument("--manifold", help="bundled manifold name")
    p.add_argument("--file", help="triangulation JSON path (overrides --manifold)")
    p.add_argument("--cocycle", help="named cocycle selector")
    p.add_argument("--filling", help="Dehn filling p,q on cusp 0")
    if view:
        p.add_argument("--view", default="material",
                       choices=["material", "ideal", "hyperideal"])
        p.add_argument("--fov", type=float, default=90.0,
                       help="field of view (deg) or screen width (intrinsic)")
        p.add_argument("--vertex", type=int, help="ideal view vertex")
        p.add_argument("--base-weight", type=float, default=0.0)


def _add_render_args(p):
    p.add_argument("--R", type=float, default=float(np.e ** 2))
    p.add_argument("--S", type=int, default=1000)
    p.add_argument("--k", type=int, default=1, help="k x k sub-samples per pixel")
    p.add_argument("--res", default="256x256")
    p.add_argument("--edge-eps", type=float, dest="edge_eps")
    p.add_argument("--elevation-wmax", type=float, dest="elevation_wmax")
    p.add_argument("--threshold", type=float)
    p.add_argument("--gradient", default=None)
    p.add_argument("--colour-by-distance", action="store_true")
    p.add_argument("--precision", default="f64", choices=["f32", "f64"])
    p.add_argument("--workers", type=int)
    p.add_argument("--jitter-seed", type=int, dest="jitter_seed")


def cmd_validate(args):
    name = args.file or args.manifold
    if not name:
        raise InputError("validate needs --manifold or --file")
    tri = fileformat.load(bundled.manifold_path(name))
    report = {"combinatorics": "ok", "n_tets": tri.n_tets, "cusps": tri.n_cusps}
    if tri.shapes is not None:
        geom = build_geometry_ideal(tri, tri.shapes)
        geo = validate(geom)
        report["geometry"] = {
            k: v for k, v in geo.items() if isinstance(v, dict)}
        report["ok"] = geo["ok"]
    print(json.dumps(report, indent=1, default=str))
    return 0


def cmd_solve(args):
    tri, _ = load_scene(args)
    filling = parse_filling(args.filling)
    sol = solve_shapes(tri, filling=[filling] if filling else None)
    out = {
        "shapes": [[z.real, z.imag] for z in sol.shapes],
        "residual": sol.residual,
        "iterations": sol.iterations,
    }
    print(json.dumps(out, indent=1))
    return 0


def cmd_render(args):
    tri, geom = load_scene(args)
    cfg = render_config(args)
    view = build_view(geom, args.view, args.fov, vertex=args.vertex,
                      base_weight=args.base_weight)
    field = eng.render(geom, view, cfg)
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    img = eng.colour_map(field, cfg)
    eng.write_png(img, os.path.join(outdir, "render.png"))
    if args.ppm:
        eng.write_ppm(img, os.path.join(outdir, "render.ppm"))
    with open(os.path.join(outdir, "render.wfld"), "wb") as fh:
        field.dump(fh)
    write_provenance(outdir, args)
    print(f"wrote {outdir}/render.png, render.wfld")
    return 0


def cmd_ct(args):
    tri, geom = load_scene(args)
    disk = ctmod.build_elevation_disk(geom, basepoint_tet=0, r_disk=args.r_disk)
    poly = ctmod.boundary_polyline(disk)
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "ct.svg"), "w", encoding="utf-8") as fh:
        fh.write(poly.svg())
    report = {"triangles": len(disk), "boundary_points": len(poly)}
    if args.match:
        view = eng.ideal_view(geom, tet=0, vertex=args.vertex or 0,
                              width=args.fov)
        cfg = render_config(args)
        field = eng.render(geom, view, cfg)
        mask = ctmod.cusp_mask_centers(disk, top=args.mask_top)
        report.update(ctmod.match_level_set(
            poly, field, view, mask_centers=mask,
            mask_radius_px=args.mask_radius))
    with open(os.path.join(outdir, "match.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
    write_provenance(outdir, args)
    print(json.dumps(report, indent=1))
    return 0


def _region(args, geom):
    view = build_view(geom, "material", args.fov)
    return hs.RegionSpec(view=view, side_deg=args.side, grid=args.grid)


def cmd_stats(args):
    tri, geom = load_scene(args)
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    cfg = render_config(args) if hasattr(args, "R") else eng.RenderConfig()
    out = {}
    if args.stats_op == "sample":
        st = hs.sample_region(geom, _region(args, geom), args.R, cfg)
        out = st.row()
        out["histogram"] = st.histogram
    elif args.stats_op == "hist":
        st = hs.sample_region(geom, _region(args, geom), args.R, cfg)
        gate = hs.normality_test(st)
        out = st.row()
        out.update(gate)
        lines = ["bucket_left,count"]
        bw = st.histogram["bucket_width"]
        left = st.histogram["left_edge"]
        for k, c in enumerate(st.histogram["counts"]):
            lines.append(f"{left + k * bw},{c}")
        with open(os.path.join(outdir, "histogram.csv"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    elif args.stats_op == "curve":
        rows = hs.mean_std_curve(geom, _region(args, geom),
                                 [float(x) for x in args.R_list.split(",")], cfg)
        with open(os.path.join(outdir, "curve.csv"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(hs.curve_csv(rows))
        out = {"rows": len(rows)}
    elif args.stats_op == "sigma":
        view = build_view(geom, args.view, args.fov, vertex=args.vertex)
        est = hs.estimate_sigma(geom, view, args.T, args.n, args.seed, cfg)
        out = dataclass_dict(est)
    elif args.stats_op == "converge":
        region = _region(args, geom)
        pairs = []
        vals = [float(x) for x in args.R_list.split(",")]
        for a, b in zip(vals, vals[1:]):
            pairs.append((a, b))
        out = {"pairs": hs.pixel_mean_convergence(geom, region, pairs, cfg)}
        view = build_view(geom, "material", args.fov)
        out["single_sample_decorrelation"] = hs.single_sample_decorrelation(
            geom, view, vals[0], vals[-1], args.n, args.seed)
    with open(os.path.join(outdir, "stats.json"), "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=1, default=str)
    write_provenance(outdir, args)
    print(json.dumps(out, indent=1, default=str))
    return 0


def dataclass_dict(obj):
    import dataclasses

    return dataclasses.asdict(obj)


def cmd_surgery(args):
    tri, geom = load_scene(args)
    s_values = [float(x) for x in args.s_values.split(",")]
    path = surgerymod.trace_path(tri, s_values)
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "path.json"), "w", encoding="utf-8") as fh:
        fh.write(surgerymod.path_manifest(path))
    result = {"solved": len(path.solutions), "requested": len(s_values),
              "diagnostic": path.diagnostic}
    if args.render:
        cfg = render_config(args)
        view = build_view(geom, "material", args.fov)
        fractions = {}
        for (s, field, frac, _v) in surgerymod.render_path(tri, path, view, cfg):
            tag = "complete" if np.isinf(s) else surgerymod.frame_name(s)
            img = eng.colour_map(field, cfg)
            eng.write_png(img, os.path.join(outdir, f"{tag}.png"))
            fractions[tag] = frac
        result["step_cap_fractions"] = fractions
    write_provenance(outdir, args)
    print(json.dumps(result, indent=1))
    if path.diagnostic:
        return 2
    return 0


def cmd_serve(args):
    from .service import run

    run(args.bind, frontend=args.frontend)
    return 0


def make_parser():
    p = argparse.ArgumentParser(
        prog="hypertrace",
        description="Cohomology-fractal ray tracer and experiment harness")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="validate a triangulation file")
    _add_scene_args(v, view=False)
    v.set_defaults(fn=cmd_validate)

    s = sub.add_parser("solve", help="solve the gluing equations")
    _add_scene_args(s, view=False)
    s.set_defaults(fn=cmd_solve)

    r = sub.add_parser("render", help="render a cohomology fractal")
    _add_scene_args(r)
    _add_render_args(r)
    r.add_argument("--out", default="out/render")
    r.add_argument("--ppm", action="store_true")
    r.set_defaults(fn=cmd_render)

    c = sub.add_parser("ct", help="Cannon-Thurston approximation")
    _add_scene_args(c)
    _add_render_args(c)
    c.add_argument("--r-disk", type=float, default=5.0, dest="r_disk")
    c.add_argument("--match", action="store_true")
    c.add_argument("--mask-top", type=int, default=8)
    c.add_argument("--mask-radius", type=float, default=10.0)
    c.add_argument("--out", default="out/ct")
    c.set_defaults(fn=cmd_ct)

    st = sub.add_parser("stats", help="statistical experiments")
    st_sub = st.add_subparsers(dest="stats_op", required=True)
    for op in ("sample", "curve", "sigma", "hist", "converge"):
        sp = st_sub.add_parser(op)
        _add_scene_args(sp)
        _add_render_args(sp)
        sp.add_argument("--side", type=float, default=0.1,
                        help="region side (degrees)")
        sp.add_argument("--grid", type=int, default=300)
        sp.add_argument("--R-list", default="4,6,8,10,12", dest="R_list")
        sp.add_argument("--T", type=float, default=8.0)
        sp.add_argument("--n", type=int, default=10000)
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--out", default="out/stats")
        sp.set_defaults(fn=cmd_stats)

    su = sub.add_parser("surgery", help="Dehn-surgery path")
    _add_scene_args(su)
    _add_render_args(su)
    su.add_argument("--s-values", default="10,5,4,3,2,1.8,1.6,1.4,1.2,1",
                    dest="s_values")
    su.add_argument("--render", action="store_true")
    su.add_argument("--out", default="out/surgery")
    su.set_defaults(fn=cmd_surgery)

    sv = sub.add_parser("serve", help="run the render service")
    sv.add_argument("--bind", default="127.0.0.1:8008")
    sv.add_argument("--frontend", default=None,
                    help="static viewer bundle directory")
    sv.set_defaults(fn=cmd_serve)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, ConfigError, TriangulationError, FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 1
    except (SolveError, hs.StatsError, ctmod.CTError, eng.DevelopError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
