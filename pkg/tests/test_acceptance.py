"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line; run with `pytest tests/test_acceptance.py -s`
to see them. Tolerances are fixed here, not tuned at runtime.
"""

import functools
import time
from dataclasses import replace

import numpy as np
import pytest

from meshmotion.character import BodyPart, MotionSequence, identity_motion, transform_motion_rigid
from meshmotion.cli import main as cli_main
from meshmotion.interaction import (
    build_interaction_mask,
    compute_dmi_field,
    sensor_forward_kinematics,
)
from meshmotion.losses import RetargetConfig, dmi_loss, end_effector_loss, rec_loss
from meshmotion.metrics import contact_error, penetration_ratio
from meshmotion.objective import RetargetObjective
from meshmotion.optimize import retarget
from meshmotion.rotations import (
    axis_angle_to_quat,
    quat_to_matrix,
    quat_to_rot6d,
    random_quaternions,
)
from meshmotion.sensors import default_coordinate_grid, derive_sensors
from meshmotion.synthetic import clap_motion
from meshmotion.winding import points_inside

from conftest import make_chain_character, make_cylinder_character
from test_interaction import generic_motion


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {name}")
                raise
            print(f"[PASS] {name}")

        return wrapper

    return deco


@criterion("sensor derivation matches the analytic cylinder to 1e-3 with zero invalid sensors in < 1 s")
def test_scs_analytic_cylinder_oracle():
    start = time.monotonic()
    char = make_cylinder_character(radius=0.1, segments=64)
    sensors = derive_sensors(char, default_coordinate_grid(1))
    elapsed = time.monotonic() - start
    assert len(sensors) == 16
    assert sensors.valid.all(), "invalid rate must be 0"
    for i, c in enumerate(sensors.coordinates):
        analytic = np.array([-0.1 * np.sin(c.phi), c.l, 0.1 * np.cos(c.phi)])
        assert np.abs(sensors.positions[i] - analytic).max() < 1e-3
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


@criterion("uniform x2 character scale doubles sensor positions and preserves tangents to 1e-6")
def test_correspondence_scaling():
    base = make_cylinder_character()
    scaled = make_cylinder_character(scale=2.0)
    s0 = derive_sensors(base)
    s1 = derive_sensors(scaled)
    assert np.array_equal(s0.valid, s1.valid)
    valid = s0.valid
    assert np.abs(s1.positions[valid] - 2.0 * s0.positions[valid]).max() < 1e-6
    assert np.abs(s1.tangents[valid] - s0.tangents[valid]).max() < 1e-6


@criterion("sensor forward kinematics matches the dense LBS oracle to 1e-9 over 100 random poses")
def test_fk_lbs_oracle_equivalence():
    char = make_chain_character(num_bones=5)
    sensors = derive_sensors(char)
    rng = np.random.default_rng(77)
    valid = np.flatnonzero(sensors.valid)
    assert valid.size > 0

    from meshmotion.character import forward_kinematics

    worst = 0.0
    for _ in range(100):
        quats = random_quaternions(char.num_joints, rng).reshape(1, -1, 4)
        root_t = rng.standard_normal((1, 3))
        motion = MotionSequence(fps=30.0, root_translation=root_t, rotations=quats)
        traj = sensor_forward_kinematics(char, sensors, motion)
        g = forward_kinematics(char, quats[0], root_t[0])
        for i in valid:
            blended = np.zeros((4, 4))
            for n in range(char.num_joints):
                w = sensors.skin_weights[i, n]
                if w != 0.0:
                    blended += w * g[n]
            expected = blended[:3, :3] @ sensors.positions[i] + blended[:3, 3]
            worst = max(worst, float(np.abs(traj.positions[0, i] - expected).max()))
    assert worst < 1e-9, f"max error {worst:.3e}"


@criterion("objective gradient matches central finite differences on 100 random configurations in < 60 s")
def test_gradient_check():
    start = time.monotonic()
    char = make_chain_character(num_bones=5)
    sensors = derive_sensors(char)
    parts = list(sensors.body_parts)
    per_bone = 16
    parts[: 2 * per_bone] = [BodyPart.LEFT_ARM] * (2 * per_bone)
    sensors = replace(sensors, body_parts=tuple(parts))
    mask = build_interaction_mask(sensors)
    cfg = RetargetConfig(pair_count=4, end_effectors=(char.num_joints - 1,))
    rng = np.random.default_rng(99)
    eps = 1e-4
    t_frames = 2
    checked = 0
    for _ in range(100):
        motion = generic_motion(char, num_frames=t_frames, seed=int(rng.integers(1 << 30)), amplitude=0.6)
        traj = sensor_forward_kinematics(char, sensors, motion)
        field = compute_dmi_field(traj, mask, sensors.coordinates, pair_count=cfg.pair_count)
        engine = RetargetObjective(char, sensors, field, motion.root_translation, motion.rotations, cfg)
        q6 = quat_to_rot6d(motion.rotations) + 0.15 * rng.standard_normal((t_frames, char.num_joints, 6))
        _, grad = engine.evaluate(q6, with_gradient=True)
        for t in range(t_frames):
            for n in range(char.num_joints):
                for k in range(6):
                    qp, qm = q6.copy(), q6.copy()
                    qp[t, n, k] += eps
                    qm[t, n, k] -= eps
                    fd = (engine.evaluate(qp).total - engine.evaluate(qm).total) / (2 * eps)
                    g = grad[t, n, k]
                    if abs(fd) < 1e-4:
                        assert abs(g - fd) < 1e-6, f"coord ({t},{n},{k}): ad={g:.3e} fd={fd:.3e}"
                    else:
                        rel = abs(g - fd) / abs(fd)
                        assert rel < 1e-3, f"coord ({t},{n},{k}): ad={g:.6e} fd={fd:.6e} rel={rel:.2e}"
                    checked += 1
    elapsed = time.monotonic() - start
    assert checked >= 100 * t_frames * char.num_joints * 6
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


@criterion("identity retarget returns the source motion with total loss < 1e-10 at iteration 0")
def test_identity_retarget(biped, biped_sensors):
    motion = clap_motion(biped)
    result = retarget(motion, biped, biped, sensors_a=biped_sensors, sensors_b=biped_sensors)
    assert result.iterations == 0
    assert abs(result.loss_trace[0].total) < 1e-10
    assert np.abs(result.motion.rotations - motion.rotations).max() < 1e-6


@criterion("clap transfer to 1.5x arms cuts contact error >= 50% without adding > 1pp penetration in < 5 min")
def test_synthetic_clap_transfer(biped, biped_sensors, biped_long_arms, biped_long_sensors):
    start = time.monotonic()
    motion = clap_motion(biped)
    result = retarget(
        motion, biped, biped_long_arms,
        sensors_a=biped_sensors, sensors_b=biped_long_sensors,
    )
    elapsed = time.monotonic() - start

    ce_copy, _ = contact_error(motion, biped, biped_sensors, motion, biped_long_arms, biped_long_sensors)
    ce_opt, _ = contact_error(motion, biped, biped_sensors, result.motion, biped_long_arms, biped_long_sensors)
    pen_copy, _ = penetration_ratio(biped_long_arms, motion)
    pen_opt, _ = penetration_ratio(biped_long_arms, result.motion)

    print(
        f"\n  copy contact error {ce_copy:.4f} -> optimized {ce_opt:.4f}; "
        f"penetration {pen_copy:.4f} -> {pen_opt:.4f}; {elapsed:.0f}s"
    )
    assert ce_copy > 0.0, "copy baseline must break the contact"
    assert ce_opt <= 0.5 * ce_copy, f"reduction only {100 * (1 - ce_opt / ce_copy):.1f}%"
    assert pen_opt <= pen_copy + 0.01
    assert elapsed < 300.0, f"took {elapsed:.0f}s"


@criterion("winding-number inside test matches the ray-parity oracle on >= 99.9% of 1000 points; disjoint pose is exactly 0")
def test_penetration_kernel(biped):
    char = make_cylinder_character(radius=0.1, segments=48)
    rng = np.random.default_rng(13)
    points = rng.uniform([-0.25, -0.35, -0.25], [0.25, 1.35, 0.25], size=(1000, 3))
    inside_w = points_inside(points, char.vertices, char.faces)

    direction = np.array([0.3141, 0.9273, 0.2391])
    direction /= np.linalg.norm(direction)

    def parity(p):
        crossings = 0
        for tri in char.vertices[char.faces]:
            e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
            pv = np.cross(direction, e2)
            det = e1 @ pv
            if abs(det) < 1e-12:
                continue
            tv = p - tri[0]
            u = (tv @ pv) / det
            if u < 0 or u > 1:
                continue
            qv = np.cross(tv, e1)
            v = (direction @ qv) / det
            if v < 0 or u + v > 1:
                continue
            if (e2 @ qv) / det > 1e-9:
                crossings += 1
        return crossings % 2 == 1

    inside_p = np.array([parity(p) for p in points])
    agreement = float((inside_w == inside_p).mean())
    assert agreement >= 0.999, f"agreement {agreement:.4f}"

    mean, per_frame = penetration_ratio(biped, identity_motion(biped, 2))
    assert mean == 0.0 and per_frame.max() == 0.0


@criterion("a global rigid transform changes every interaction-field entry by < 1e-6")
def test_dmi_rigid_invariance(biped, biped_sensors):
    rng = np.random.default_rng(31)
    motion = generic_motion(biped, num_frames=4, seed=8)
    mask = build_interaction_mask(biped_sensors)
    traj = sensor_forward_kinematics(biped, biped_sensors, motion)
    field = compute_dmi_field(traj, mask, biped_sensors.coordinates, pair_count=8)

    rot = quat_to_matrix(random_quaternions(1, rng)[0])
    moved = transform_motion_rigid(biped, motion, rot, rng.standard_normal(3) * 2.0)
    traj_m = sensor_forward_kinematics(biped, biped_sensors, moved)
    field_m = compute_dmi_field(traj_m, mask, biped_sensors.coordinates, pair_count=8)

    assert np.array_equal(field.observer_index, field_m.observer_index)
    assert np.array_equal(field.target_index, field_m.target_index)
    assert np.abs(field.offsets - field_m.offsets).max() < 1e-6


@criterion("loss kernels match independent scalar-loop oracles to 1e-10")
def test_loss_kernel_oracles():
    rng = np.random.default_rng(55)

    # Interaction consistency kernel.
    from meshmotion.interaction import DmiField

    t_frames, e = 5, 200
    frames = np.sort(rng.integers(0, t_frames, e))
    da = rng.standard_normal((e, 3))
    db = rng.standard_normal((e, 3))
    valid = rng.random(e) > 0.25

    def field(offsets, v):
        return DmiField(
            num_frames=t_frames, coordinates=(),
            frame_index=frames, observer_index=np.zeros(e, dtype=np.int64),
            target_index=np.arange(1, e + 1, dtype=np.int64),
            offsets=offsets, entry_valid=v,
        )

    loss, _ = dmi_loss(field(da, np.ones(e, dtype=bool)), field(db, valid))
    sums = np.zeros(t_frames)
    counts = np.zeros(t_frames)
    for i in range(e):
        if valid[i]:
            counts[frames[i]] += 1
            na, nb = np.linalg.norm(da[i]), np.linalg.norm(db[i])
            if na >= 1e-8 and nb >= 1e-8:
                sums[frames[i]] += 1.0 - float(da[i] @ db[i]) / (na * nb)
    expected = float(np.mean(sums / np.maximum(counts, 1)))
    assert abs(loss - expected) < 1e-10

    # Reconstruction kernel.
    a = rng.standard_normal((4, 6, 6))
    b = rng.standard_normal((4, 6, 6))
    expected_rec = float(np.array([
        (b[t, n, k] - a[t, n, k]) ** 2 for t in range(4) for n in range(6) for k in range(6)
    ]).sum() / a.size)
    assert abs(rec_loss(b, a) - expected_rec) < 1e-10

    # End-effector kernel.
    char = make_chain_character(num_bones=5)
    qa = random_quaternions(3 * char.num_joints, rng).reshape(3, -1, 4)
    qb = random_quaternions(3 * char.num_joints, rng).reshape(3, -1, 4)
    ef = (3, char.num_joints - 1)
    loss_ef = end_effector_loss(char, qa, qb, end_effectors=ef)
    total = 0.0
    for t in range(3):
        for i in ef:
            ra = rb = np.eye(3)
            chain = []
            cur = i
            while cur >= 0:
                chain.append(cur)
                cur = int(char.parents[cur])
            for node in reversed(chain):
                ra = ra @ quat_to_matrix(qa[t, node])
                rb = rb @ quat_to_matrix(qb[t, node])
            total += float(np.linalg.norm(ra - rb))
    assert abs(loss_ef - total / (3 * len(ef))) < 1e-10


@criterion("two retarget runs with identical inputs and seed produce byte-identical output files")
def test_retarget_determinism(tmp_path):
    fixture = tmp_path / "fix"
    assert cli_main(["gen-synthetic", "--out-dir", str(fixture)]) == 0
    outputs = []
    for name in ("run1.json", "run2.json"):
        out = tmp_path / name
        code = cli_main([
            "retarget",
            "--source-char", str(fixture / "source.json"),
            "--target-char", str(fixture / "target.json"),
            "--motion", str(fixture / "pray.json"),
            "--out", str(out), "--pairs", "6", "--iters", "25", "--seed", "0",
        ])
        assert code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
