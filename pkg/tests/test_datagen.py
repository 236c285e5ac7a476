import hashlib

import numpy as np
import pytest

from latact.arm import JointState, fk_position, forward_kinematics, jacobian
from latact.datagen import (
    DemoDataset,
    TaskKind,
    TaskSpec,
    canonical_axes,
    export_jsonl,
    generate,
    load,
    save,
    tracking_controller,
)
from latact.errors import DimensionError, FormatError, GenerationError, NotFiniteError, VersionError

# small pair counts keep the suite quick; generation is trajectory-wise
# identical at any count
SMALL = 600


@pytest.fixture(scope="module")
def sine_ds():
    return generate(TaskSpec.defaults("sine", seed=7, target_pair_count=SMALL))


def test_replay_self_consistency_all_tasks():
    for kind in TaskKind:
        ds = generate(TaskSpec.defaults(kind, seed=3, target_pair_count=300))
        assert ds.replay_error() < 1e-9, kind


def test_generate_is_deterministic():
    spec = TaskSpec.defaults("circle", seed=11, target_pair_count=SMALL)
    a, b = generate(spec), generate(spec)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.actions, b.actions)
    np.testing.assert_array_equal(a.traj_offsets, b.traj_offsets)


def test_pair_count_and_boundaries(sine_ds):
    assert len(sine_ds) == SMALL
    lengths = np.diff(sine_ds.traj_offsets)
    assert lengths.sum() == SMALL
    assert all(l > 0 for l in lengths)


def test_sine_zero_amplitude_degenerates_to_x_axis():
    spec = TaskSpec.defaults("sine", seed=0, target_pair_count=200, sine_amplitude=0.0)
    ds = generate(spec)
    ys = [fk_position(spec.geometry, q, 0)[1] for q in ds.states]
    assert max(abs(y) for y in ys) < 1e-3


def test_sine_traces_the_curve(sine_ds):
    spec = sine_ds.spec
    k = 2 * np.pi / spec.sine_wavelength
    for q in sine_ds.states[::17]:
        ee = fk_position(spec.geometry, q, 0)
        assert abs(ee[1] - spec.sine_amplitude * np.sin(k * ee[0])) < 1e-6


def test_rotate_box_rigidity():
    spec = TaskSpec.defaults("rotate", seed=5, target_pair_count=400)
    ds = generate(spec)
    for q in ds.states:
        p0 = fk_position(spec.geometry, q[:5], 0)
        p1 = fk_position(spec.geometry, q[5:], 1)
        assert abs(np.linalg.norm(p0 - p1) - spec.rotate_box_length) < 1e-3


def test_circle_has_both_motion_modes():
    spec = TaskSpec.defaults("circle", seed=2, target_pair_count=SMALL)
    ds = generate(spec)
    tangential, radial = [], []
    for q, a in zip(ds.states, ds.actions):
        ee = fk_position(spec.geometry, q, 0)
        r_hat = ee / np.linalg.norm(ee)
        t_hat = np.array([-r_hat[1], r_hat[0]])
        v = jacobian(spec.geometry, JointState(q), 0) @ a
        tangential.append(v @ t_hat)
        radial.append(v @ r_hat)
    assert np.var(tangential) > 1e-3
    assert np.var(radial) > 1e-3


def test_reach_trajectories_end_in_goal_region():
    spec = TaskSpec.defaults("reach", seed=4, target_pair_count=SMALL)
    ds = generate(spec)
    gx0, gy0, gx1, gy1 = spec.reach_goal_region
    for i in range(ds.n_trajectories):
        s, a = ds.trajectory(i)
        final = s[-1] + a[-1] * spec.geometry.dt
        ee = fk_position(spec.geometry, final, 0)
        assert gx0 <= ee[0] <= gx1 and gy0 <= ee[1] <= gy1


def test_reach_start_state_is_shared():
    spec = TaskSpec.defaults("reach", seed=4, target_pair_count=SMALL)
    ds = generate(spec)
    starts = [ds.trajectory(i)[0][0] for i in range(ds.n_trajectories)]
    for s in starts[1:]:
        np.testing.assert_array_equal(s, starts[0])


def test_unreachable_task_raises_generation_error():
    spec = TaskSpec.defaults("sine", seed=0, target_pair_count=100, sine_x_span=(4.0, 7.0))
    with pytest.raises(GenerationError, match="workspace"):
        generate(spec)


# -- tracking controller -----------------------------------------------------


def test_controller_zero_at_fixed_point():
    geo = TaskSpec.defaults("sine").geometry
    state = JointState([0.4, -0.2, 0.3, 0.1, -0.5])
    ee = forward_kinematics(geo, state).position
    a = tracking_controller(geo, state, ee)
    np.testing.assert_allclose(a.velocities, np.zeros(5), atol=1e-12)


def test_controller_moves_toward_target():
    geo = TaskSpec.defaults("sine").geometry
    state = JointState(np.zeros(5))
    a = tracking_controller(geo, state, np.array([5.0, 0.2]))
    dee = jacobian(geo, state, 0) @ a.velocities * geo.dt
    assert dee[1] > 0


def test_controller_converges_to_nearby_target():
    geo = TaskSpec.defaults("sine").geometry
    state = JointState([0.5, -0.3, 0.2, 0.2, -0.1])
    start_ee = forward_kinematics(geo, state).position
    target = start_ee + np.array([0.07, -0.05])
    err = np.linalg.norm(target - start_ee)
    for _ in range(200):
        a = tracking_controller(geo, state, target)
        state = JointState(state.angles + a.velocities * geo.dt)
        new_err = np.linalg.norm(target - forward_kinematics(geo, state).position)
        assert new_err < err or new_err < 1e-3
        err = new_err
        if err < 1e-3:
            break
    assert err < 1e-3


def test_controller_two_arm_zero_padding():
    spec = TaskSpec.defaults("rotate")
    state = JointState(np.full(10, 0.3))
    a = tracking_controller(spec.geometry, state, np.array([3.0, 1.0]), arm_index=1)
    np.testing.assert_array_equal(a.velocities[:5], np.zeros(5))
    assert np.any(a.velocities[5:] != 0)


def test_controller_rejects_nonfinite_target():
    geo = TaskSpec.defaults("sine").geometry
    with pytest.raises(NotFiniteError):
        tracking_controller(geo, JointState(np.zeros(5)), np.array([np.nan, 0.0]))


# -- persistence --------------------------------------------------------------


def test_save_load_round_trip(sine_ds, tmp_path):
    path = tmp_path / "sine.ds"
    save(sine_ds, path)
    back = load(path)
    np.testing.assert_array_equal(back.states, sine_ds.states)
    np.testing.assert_array_equal(back.actions, sine_ds.actions)
    np.testing.assert_array_equal(back.traj_offsets, sine_ds.traj_offsets)
    assert back.spec == sine_ds.spec


def test_save_is_deterministic(sine_ds, tmp_path):
    p1, p2 = tmp_path / "a.ds", tmp_path / "b.ds"
    save(sine_ds, p1)
    save(sine_ds, p2)
    assert hashlib.sha256(p1.read_bytes()).digest() == hashlib.sha256(p2.read_bytes()).digest()


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.ds"
    path.write_bytes(b"NOTLATACT!" + b"\0" * 64)
    with pytest.raises(FormatError, match="magic"):
        load(path)


def test_load_rejects_bad_version(sine_ds, tmp_path):
    path = tmp_path / "v99.ds"
    save(sine_ds, path)
    raw = bytearray(path.read_bytes())
    raw[10:12] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        load(path)


def test_load_rejects_truncated_file(sine_ds, tmp_path):
    path = tmp_path / "trunc.ds"
    save(sine_ds, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(FormatError, match="truncated"):
        load(path)


def test_load_rejects_dimension_mismatch(sine_ds, tmp_path):
    path = tmp_path / "sine.ds"
    save(sine_ds, path)
    with pytest.raises(DimensionError):
        load(path, expect_n=10)


def test_jsonl_export(sine_ds, tmp_path):
    import json

    path = tmp_path / "sine.jsonl"
    export_jsonl(sine_ds, path)
    lines = path.read_text().strip().split("\n")
    assert len(lines) == len(sine_ds)
    first = json.loads(lines[0])
    assert set(first) == {"s", "a", "traj"}
    np.testing.assert_allclose(first["s"], sine_ds.states[0])
    assert first["traj"] == 0


def test_task_spec_json_round_trip():
    for kind in TaskKind:
        spec = TaskSpec.defaults(kind, seed=9)
        assert TaskSpec.from_json_dict(spec.to_json_dict()) == spec


def test_split_trajectories_no_leakage(sine_ds):
    train, test = sine_ds.split_trajectories(0.2, seed=0)
    assert len(train) + len(test) == len(sine_ds)
    train_rows = {tuple(s) for s in train.states}
    assert not any(tuple(s) in train_rows for s in test.states)


def test_canonical_axes_shapes():
    for kind, d in [("sine", 1), ("circle", 2), ("reach", 1)]:
        spec = TaskSpec.defaults(kind)
        state = JointState(np.full(spec.geometry.n, 0.2))
        axes = canonical_axes(spec, state)
        assert axes.shape == (d, 2)
        np.testing.assert_allclose(np.linalg.norm(axes, axis=1), np.ones(d), atol=1e-9)
