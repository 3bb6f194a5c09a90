"""Ray-development engine: views, renderer, colour mapping, camera."""

from .ray import (
    RayState, RayBatch, develop_ray, develop_batch, develop_segment,
    DevelopError, TAG_RADIUS, TAG_BUDGET, TAG_EDGE, TAG_ELEVATION, TAG_ERROR,
    TAG_NAMES,
)
from .views import (
    View, material_view, ideal_view, hyperideal_view, flow_ideal_view,
    make_view_rays, tet_center,
)
from .render import RenderConfig, WeightField, render
from .colour import colour_map, write_png, write_ppm, png_bytes, apply_gradient
from .camera import step_camera, action_isometry, MotionError, ACTIONS
