"""Session-based HTTP render service for the interactive viewer.

Endpoints (UTF-8 JSON bodies, PNG frames with content-hash ETags):

    GET    /manifolds                      bundled manifold list
    POST   /session                        {manifold, cocycle?, view?, config?} -> {id}
    GET    /session/{id}/state             camera + config echo
    POST   /session/{id}/move              {action, dt}
    POST   /session/{id}/config            partial RenderConfig patch
    GET    /session/{id}/frame?w=&h=       rendered PNG
    DELETE /session/{id}

Each session serializes its own mutations behind a lock; distinct
sessions are independent.  Frames are pure functions of the session
state, so an unchanged session returns byte-identical PNGs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .. import engine as eng
from .. import surgery as surgerymod
from ..tricomplex import SolveError, solve_shapes, build_geometry_ideal
from . import data as bundled
from .config import build_view

DEFAULTS = dict(R=float(np.e ** 2), S=250, samples=1)


class SessionState:
    def __init__(self, manifold, cocycle=None, view_kind="material",
                 fov=90.0, config=None):
        self.id = uuid.uuid4().hex[:12]
        self.manifold = manifold
        self.cocycle = cocycle
        self.lock = threading.Lock()
        self.tri = bundled.load_manifold(manifold, cocycle)
        self.surgery_s = None
        self.solutions = {}  # s -> ShapeAssignment cache for continuation
        self.geom = bundled.load_geometry(manifold, cocycle)
        cfg = dict(DEFAULTS)
        cfg.update(config or {})
        self.cfg = eng.RenderConfig(**cfg)
        self.view = build_view(self.geom, view_kind, fov)

    def state(self):
        return {
            "id": self.id,
            "manifold": self.manifold,
            "cocycle": self.cocycle,
            "camera": {
                "tet": int(self.view.tet),
                "point": [float(x) for x in self.view.anchor],
                "frame": [[float(x) for x in row] for row in self.view.frame],
                "base_weight": float(self.view.base_weight),
                "kind": self.view.kind,
                "fov": self.view.fov,
            },
            "config": {
                "R": self.cfg.R, "S": self.cfg.S, "k": self.cfg.samples,
                "edge_eps": self.cfg.edge_eps, "elevation": self.cfg.elevation,
                "colour": self.cfg.colour, "precision": self.cfg.precision,
                "surgery_s": self.surgery_s,
            },
        }

    def move(self, action, dt):
        if self.view.kind != "material":
            raise HTTPException(422, "motion drives material views only")
        try:
            self.view = eng.step_camera(self.geom, self.view, action, dt)
        except eng.MotionError as e:
            raise HTTPException(409, str(e)) from None
        except ValueError as e:
            raise HTTPException(422, str(e)) from None

    def patch_config(self, patch):
        allowed = {"R", "S", "k", "edge_eps", "elevation", "colour",
                   "surgery_s", "precision", "zoom_out", "w", "h"}
        unknown = set(patch) - allowed
        if unknown:
            raise HTTPException(422, f"unknown config fields {sorted(unknown)}")
        updates = {}
        if "R" in patch:
            updates["R"] = float(patch["R"])
        if "S" in patch:
            updates["S"] = int(patch["S"])
        if "k" in patch:
            updates["samples"] = int(patch["k"])
        if "edge_eps" in patch:
            v = patch["edge_eps"]
            updates["edge_eps"] = None if v in (None, 0) else float(v)
        if "elevation" in patch:
            v = patch["elevation"]
            if v in (None, {}):
                updates["elevation"] = None
            elif isinstance(v, dict) and "w_max" in v:
                updates["elevation"] = {"w_max": float(v["w_max"])}
            else:
                raise HTTPException(422, "elevation patch needs {w_max}")
        if "colour" in patch:
            if not isinstance(patch["colour"], dict):
                raise HTTPException(422, "colour patch must be an object")
            updates["colour"] = patch["colour"]
        if "precision" in patch:
            if patch["precision"] not in ("f32", "f64"):
                raise HTTPException(422, "precision must be f32 or f64")
            updates["precision"] = patch["precision"]
        try:
            self.cfg = dataclasses.replace(self.cfg, **updates)
        except ValueError as e:
            raise HTTPException(422, str(e)) from None
        if "zoom_out" in patch:
            if self.view.kind != "ideal":
                raise HTTPException(422, "zoom_out applies to ideal views")
            d = float(patch["zoom_out"])
            self.view = eng.flow_ideal_view(self.view, d)
            self.view = dataclasses.replace(
                self.view, fov=self.view.fov * float(np.exp(d)))
        if "surgery_s" in patch:
            self._set_surgery(patch["surgery_s"])

    def _set_surgery(self, s):
        if s in (None, "", 0):
            new_geom = bundled.load_geometry(self.manifold, self.cocycle)
            old_geom = self.geom
            self.geom = new_geom
            self.surgery_s = None
            self.view = surgerymod.transport_view(old_geom, new_geom, self.view)
            return
        s = float(s)
        if s < 1.0:
            raise HTTPException(422, "surgery_s must be >= 1 (or null)")
        try:
            initial = None
            for s0 in sorted(self.solutions, key=lambda x: abs(x - s)):
                initial = self.solutions[s0]
                break
            sol = solve_shapes(self.tri, filling=[(4 * s, -s)], initial=initial)
            self.solutions[s] = sol
            new_geom = build_geometry_ideal(self.tri, sol.shapes)
        except SolveError as e:
            raise HTTPException(422, f"surgery solve failed: {e}") from None
        old_geom = self.geom
        self.geom = new_geom
        self.surgery_s = s
        self.view = surgerymod.transport_view(old_geom, new_geom, self.view)

    def frame_png(self, w=None, h=None):
        cfg = self.cfg
        if w or h:
            w = int(w or cfg.resolution[0])
            h = int(h or cfg.resolution[1])
            if not (1 <= w <= 2048 and 1 <= h <= 2048):
                raise HTTPException(422, "frame size out of range")
            cfg = dataclasses.replace(cfg, resolution=(w, h))
        field = eng.render(self.geom, self.view, cfg)
        img = eng.colour_map(field, cfg)
        png = eng.png_bytes(img)
        meta = {
            "step_cap_fraction": field.tag_fraction(eng.TAG_BUDGET),
            "edge_fraction": field.tag_fraction(eng.TAG_EDGE),
            "elevation_fraction": field.tag_fraction(eng.TAG_ELEVATION),
            "sample_count": int(field.weights.size),
            "sample_variance": float(field.weights.var()),
        }
        return png, meta


class CreateSession(BaseModel):
    manifold: str
    cocycle: str | None = None
    view: dict | None = None
    config: dict | None = None


class Move(BaseModel):
    action: str
    dt: float


def create_app(frontend=None):
    app = FastAPI(title="hypertrace render service")
    sessions = {}
    registry_lock = threading.Lock()

    def get_session(sid) -> SessionState:
        try:
            return sessions[sid]
        except KeyError:
            raise HTTPException(404, f"unknown session {sid}") from None

    @app.get("/manifolds")
    def manifolds():
        return {"manifolds": bundled.list_manifolds()}

    @app.post("/session")
    def create(req: CreateSession):
        view = req.view or {}
        try:
            state = SessionState(
                manifold=req.manifold,
                cocycle=req.cocycle,
                view_kind=view.get("kind", "material"),
                fov=float(view.get("fov", 90.0)),
                config=req.config,
            )
        except FileNotFoundError as e:
            raise HTTPException(404, str(e)) from None
        except (ValueError, TypeError) as e:
            raise HTTPException(422, str(e)) from None
        with registry_lock:
            sessions[state.id] = state
        return {"id": state.id}

    @app.get("/session/{sid}/state")
    def state(sid: str):
        s = get_session(sid)
        with s.lock:
            return s.state()

    @app.post("/session/{sid}/move")
    def move(sid: str, req: Move):
        s = get_session(sid)
        with s.lock:
            s.move(req.action, req.dt)
            return s.state()

    @app.post("/session/{sid}/config")
    def patch(sid: str, body: dict):
        s = get_session(sid)
        with s.lock:
            s.patch_config(body)
            return s.state()

    @app.get("/session/{sid}/frame")
    def frame(sid: str, w: int | None = None, h: int | None = None):
        s = get_session(sid)
        with s.lock:
            png, meta = s.frame_png(w, h)
        etag = hashlib.sha256(png).hexdigest()
        headers = {"ETag": etag}
        for k, v in meta.items():
            headers[f"X-Render-{k.replace('_', '-')}"] = repr(v)
        return Response(content=png, media_type="image/png", headers=headers)

    @app.delete("/session/{sid}")
    def delete(sid: str):
        with registry_lock:
            if sid not in sessions:
                raise HTTPException(404, f"unknown session {sid}")
            del sessions[sid]
        return {"deleted": sid}

    if frontend:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend, html=True), name="viewer")
    return app


def run(bind="127.0.0.1:8008", frontend=None):
    import uvicorn

    host, port = bind.rsplit(":", 1)
    uvicorn.run(create_app(frontend=frontend), host=host, port=int(port))
