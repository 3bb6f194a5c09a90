"""User camera motion: apply an isometry increment and re-anchor.

Motion acts in the camera's own frame (forward is frame[0]); when the
camera point leaves its tetrahedron through a face, the state is pushed
through the face pairing and the face weight is added to the base weight,
so the picture stays continuous across faces.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .. import hypgeom as hg
from .views import View

MAX_CHAIN = 64

ACTIONS = {
    "forward": ("translate", 0, +1),
    "back": ("translate", 0, -1),
    "strafe_right": ("translate", 1, +1),
    "strafe_left": ("translate", 1, -1),
    "strafe_up": ("translate", 2, +1),
    "strafe_down": ("translate", 2, -1),
    "yaw_right": ("rotate", (0, 1), -1),
    "yaw_left": ("rotate", (0, 1), +1),
    "pitch_up": ("rotate", (0, 2), +1),
    "pitch_down": ("rotate", (0, 2), -1),
    "roll_right": ("rotate", (1, 2), +1),
    "roll_left": ("rotate", (1, 2), -1),
}


class MotionError(RuntimeError):
    """Motion step too large to re-anchor through a bounded face chain."""


def action_isometry(action, dt):
    """Local isometry of a named action over a time step dt.

    In local frame coordinates axis 1 is forward, 2 is right, 3 is up.
    """
    if action not in ACTIONS:
        raise ValueError(f"unknown action {action!r}; choose from {sorted(ACTIONS)}")
    kind, arg, sign = ACTIONS[action]
    if kind == "translate":
        return hg.translation_along(1 + arg, sign * dt)
    a, b = arg
    return hg.rotation_in(1 + a, 1 + b, sign * dt)


def step_camera(geom, camera: View, action, dt=None):
    """Apply a motion increment to a material camera; returns the new View.

    `action` is either a 4x4 local isometry or an action name (with dt).
    Raises MotionError when the point exits through more than MAX_CHAIN
    faces (step too large).
    """
    if camera.kind != "material":
        raise ValueError("step_camera drives material views")
    local = action if isinstance(action, np.ndarray) else action_isometry(action, dt)
    frame_mat = hg.frame_matrix(camera.anchor, list(camera.frame))
    world = hg.local_isometry(frame_mat, local)

    p = world @ camera.anchor
    axes = [world @ e for e in camera.frame]
    tet = camera.tet
    base_weight = camera.base_weight

    for _ in range(MAX_CHAIN):
        vals = hg.minkowski_dot(geom.planes[tet], p)
        worst = int(np.argmax(vals))
        if vals[worst] <= 1e-9:
            p, axes = hg.frame_orthonormalize(p, axes)
            return replace(camera, tet=tet, anchor=p, frame=np.stack(axes),
                           base_weight=base_weight)
        g = geom.pairings[tet][worst]
        base_weight = base_weight + geom.weights[tet][worst]
        p = g @ p
        axes = [g @ e for e in axes]
        tet = int(geom.neighbors[tet][worst])
    raise MotionError(f"camera exited more than {MAX_CHAIN} faces in one step")
