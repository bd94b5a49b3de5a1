"""Category-level 6-DoF object pose from cuboid keypoints."""

import json

from . import _core
from ._core import (
    CameraIntrinsics,
    CatposeError,
    ConvGRUModel,
    Pose,
    RelativeDims,
    bbox2d,
    box_vertices,
    cuboid_vertices,
    extract_peaks,
    focal_loss,
    gaussian_sigma,
    iou3d,
    masked_l1,
    mean_relative_dim_error,
    profile_names,
    project,
    render_heatmap,
    rotation_about_y,
    rotation_error,
    solve_keypoint_lifting,
    solve_pnp_lm,
    viewpoint_errors,
)

__all__ = [
    "CameraIntrinsics",
    "CatposeError",
    "ConvGRUModel",
    "Pose",
    "RelativeDims",
    "bbox2d",
    "box_vertices",
    "cuboid_vertices",
    "decode",
    "encode_scene",
    "extract_peaks",
    "focal_loss",
    "gaussian_sigma",
    "iou3d",
    "masked_l1",
    "mean_relative_dim_error",
    "noise_preset",
    "profile_names",
    "project",
    "render_heatmap",
    "rotation_about_y",
    "rotation_error",
    "run_pipeline",
    "sample_scenes",
    "solve_keypoint_lifting",
    "solve_pnp_lm",
    "viewpoint_errors",
]


def _dumps(value):
    return value if isinstance(value, str) else json.dumps(value)


def sample_scenes(profile, count, seed=0):
    """Synthetic scenes as a list of dicts."""
    return json.loads(_core.sample_scenes_json(profile, count, seed))


def encode_scene(scene):
    """Output maps, masks and warnings for one scene dict."""
    return _core.encode_scene_json(_dumps(scene))


def decode(maps, config=None, camera=None):
    """Detections decoded from a dict of head name -> (C, H, W) array."""
    camera = camera if camera is not None else CameraIntrinsics()
    return json.loads(_core.decode_json(maps, _dumps(config or {}), camera))


def noise_preset(name):
    return json.loads(_core.noise_preset_json(name))


def run_pipeline(scenes, noise=None, decode=None, solver="lm_estimated_dims", records=True):
    """Runs encode, perturb, decode, solve and evaluate; returns the report dict.

    `noise` may be a preset name ("none", "paper-like", "heavy") or a dict.
    """
    if isinstance(noise, str) and not noise.lstrip().startswith("{"):
        noise = noise_preset(noise)
    return json.loads(
        _core.run_pipeline_json(
            _dumps(scenes), _dumps(noise or {}), _dumps(decode or {}), solver, records
        )
    )
