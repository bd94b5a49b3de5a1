import math

import numpy as np
import pytest

import catpose


def test_projection_round_trip_through_pnp():
    cam = catpose.CameraIntrinsics()
    dims = catpose.RelativeDims(0.6, 0.4)
    c, s = math.cos(0.2), math.sin(0.2)
    pose = catpose.Pose([c, 0.0, s, 0.0], [0.1, -0.05, 2.5])
    uv = catpose.project(catpose.cuboid_vertices(dims), pose, cam)
    assert uv.shape == (8, 2)
    res = catpose.solve_pnp_lm(list(range(8)), uv, dims, cam)
    assert res["converged"]
    assert catpose.rotation_error(res["pose"], pose) < 1e-6
    np.testing.assert_allclose(res["pose"].translation, pose.translation, atol=1e-6)


def test_lifting_recovers_dims():
    cam = catpose.CameraIntrinsics()
    dims = catpose.RelativeDims(0.8, 0.3)
    pose = catpose.Pose([0.95, 0.1, 0.3, 0.0], [0.0, 0.0, 3.0])
    uv = catpose.project(catpose.cuboid_vertices(dims), pose, cam)
    res = catpose.solve_keypoint_lifting(uv, cam)
    assert res["implied_dims"].rx == pytest.approx(0.8, abs=1e-6)
    assert res["implied_dims"].rz == pytest.approx(0.3, abs=1e-6)


def test_iou_identity_and_disjoint():
    p = catpose.Pose([1, 0, 0, 0], [0, 0, 3])
    q = catpose.Pose([1, 0, 0, 0], [5, 0, 3])
    assert catpose.iou3d(p, [1, 2, 1], p, [1, 2, 1]) == pytest.approx(1.0)
    assert catpose.iou3d(p, [1, 1, 1], q, [1, 1, 1]) == 0.0


def test_heatmap_peak_and_focal_loss():
    hm = catpose.render_heatmap([(5.5, 7.2, 1.5)], 16, 20)
    assert hm.shape == (16, 20)
    assert hm[7, 5] == pytest.approx(1.0)
    assert catpose.extract_peaks(hm, 5, 0.3) == [(5, 7, 1.0)]
    loss, grad = catpose.focal_loss(np.clip(hm, 0.01, 0.99), hm, 1.0)
    assert loss > 0.0
    assert grad.shape == hm.shape


def test_encode_decode_round_trip():
    scenes = catpose.sample_scenes("cereal_box", 2, seed=3)
    enc = catpose.encode_scene(scenes[0])
    assert enc["maps"]["kp_displacements"].shape[0] == 16
    dets = catpose.decode(enc["maps"], {"strategy": "combined"})
    assert len(dets) == len(scenes[0]["objects"])


def test_pipeline_report():
    scenes = catpose.sample_scenes("bottle", 4, seed=1)
    clean = catpose.run_pipeline(scenes, solver="lm_gt_dims")
    assert clean["summary"]["ap_iou"] == pytest.approx(1.0)
    noisy = catpose.run_pipeline(scenes, noise="paper-like", records=False)
    assert "records" not in noisy
    assert noisy["summary"]["num_gt"] == clean["summary"]["num_gt"]


def test_convgru_heads():
    model = catpose.ConvGRUModel.random(3, 4, 8, seed=2)
    out = model.run(np.random.default_rng(0).random((3, 6, 5)))
    assert out["center_heatmap"].shape == (1, 6, 5)
    assert out["kp_offsets"].shape == (16, 6, 5)
    assert np.all((out["kp_heatmaps"] > 0) & (out["kp_heatmaps"] < 1))


def test_errors_are_typed():
    with pytest.raises(catpose.CatposeError):
        catpose.RelativeDims(0.0, 1.0)
    with pytest.raises(catpose.CatposeError):
        catpose.sample_scenes("no_such_profile", 1)
