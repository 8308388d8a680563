"""Desk-scale synthetic biped and canonical contact motions.

The biped has 19 joints / 18 body bones: a torso box, a head sphere and
closed prism tubes for neck, clavicles, arm segments and leg segments.
Skinning is hard (one joint per vertex), which makes the bone-to-face
partition exact. Arm geometry keeps a clear margin to the torso in the
rest pose so the arm/body penetration ratio of the T-pose is exactly zero.

Motions are built by aiming bone chains at world-space targets (a small
analytic two-bone reach for the elbow) and easing between keyframe poses:

* ``clap``  - palms meet in front of the collarbones at the middle frame;
* ``pray``  - the same palms-together pose reached early and held;
* ``cross_arms`` - forearms folded across the chest at two depth layers.

Limb length/width multipliers let the same skeleton take different
proportions; motion is always authored on the character it is given.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .character import BodyPart, MotionSequence, SkinnedCharacter
from .errors import InvalidSpec
from .rotations import quat_between, quat_to_matrix, slerp


@dataclass(frozen=True)
class BipedSpec:
    """Shape multipliers of the synthetic biped (all must be positive)."""

    arm_length_scale: float = 1.0
    arm_width_scale: float = 1.0
    leg_length_scale: float = 1.0
    leg_width_scale: float = 1.0
    name: str = "biped"

    def __post_init__(self):
        for attr in ("arm_length_scale", "arm_width_scale", "leg_length_scale", "leg_width_scale"):
            if getattr(self, attr) <= 0:
                raise InvalidSpec(f"{attr} must be positive")


# -- mesh primitives ---------------------------------------------------------


def _tube(p0: np.ndarray, p1: np.ndarray, radius: float, segments: int = 12, rings: int = 6,
          extend: float = 0.0, phase: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Closed prism around the segment p0->p1, outward-oriented faces.

    ``extend`` pushes both end planes outward along the axis so rays cast
    exactly at an endpoint still cross the side wall.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    axis = axis / length
    start = p0 - extend * axis
    end = p1 + extend * axis

    ref = np.eye(3)[int(np.argmin(np.abs(axis)))]
    e1 = np.cross(ref, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)

    angles = phase + 2.0 * np.pi * np.arange(segments) / segments
    circle = np.cos(angles)[:, None] * e1 + np.sin(angles)[:, None] * e2
    levels = np.linspace(0.0, 1.0, rings)
    verts = [start + t * (end - start) + radius * circle for t in levels]
    verts = np.concatenate(verts + [start[None, :], end[None, :]], axis=0)
    c0 = rings * segments
    c1 = c0 + 1

    faces = []
    for k in range(rings - 1):
        a = k * segments
        b = (k + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces.append((a + i, a + j, b + i))
            faces.append((a + j, b + j, b + i))
    top = (rings - 1) * segments
    for i in range(segments):
        j = (i + 1) % segments
        faces.append((c0, j, i))  # bottom cap, normal along -axis
        faces.append((c1, top + i, top + j))  # top cap, normal along +axis
    return verts, np.array(faces, dtype=np.int64)


def _box(center: np.ndarray, size: np.ndarray, divisions: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box with subdivided, outward-oriented faces."""
    center = np.asarray(center, dtype=np.float64)
    half = 0.5 * np.asarray(size, dtype=np.float64)
    verts: list[np.ndarray] = []
    faces: list[tuple[int, int, int]] = []
    for axis in range(3):
        u_axis, v_axis = (axis + 1) % 3, (axis + 2) % 3
        nu, nv = divisions[u_axis], divisions[v_axis]
        for sign in (1.0, -1.0):
            base = len(verts)
            us = np.linspace(-half[u_axis], half[u_axis], nu + 1)
            vs = np.linspace(-half[v_axis], half[v_axis], nv + 1)
            for u in us:
                for v in vs:
                    p = center.copy()
                    p[axis] += sign * half[axis]
                    p[u_axis] += u
                    p[v_axis] += v
                    verts.append(p)
            for iu in range(nu):
                for iv in range(nv):
                    a = base + iu * (nv + 1) + iv
                    b = a + (nv + 1)
                    # (u x v) = axis, so this winding is outward on the
                    # positive face; flip on the negative face.
                    if sign > 0:
                        faces.append((a, b, b + 1))
                        faces.append((a, b + 1, a + 1))
                    else:
                        faces.append((a, b + 1, b))
                        faces.append((a, a + 1, b + 1))
    return np.array(verts), np.array(faces, dtype=np.int64)


def _sphere(center: np.ndarray, radius: float, bands: int = 8, slices: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """UV sphere, outward-oriented."""
    center = np.asarray(center, dtype=np.float64)
    verts = [center + np.array([0.0, -radius, 0.0])]
    for bi in range(1, bands):
        theta = np.pi * bi / bands  # from south pole
        y = -np.cos(theta)
        r = np.sin(theta)
        for si in range(slices):
            phi = 2.0 * np.pi * si / slices
            verts.append(center + radius * np.array([r * np.cos(phi), y, r * np.sin(phi)]))
    verts.append(center + np.array([0.0, radius, 0.0]))
    south, north = 0, len(verts) - 1

    def ring(bi: int, si: int) -> int:
        return 1 + (bi - 1) * slices + (si % slices)

    faces = []
    for si in range(slices):
        faces.append((south, ring(1, si), ring(1, si + 1)))
        faces.append((north, ring(bands - 1, si + 1), ring(bands - 1, si)))
    for bi in range(1, bands - 1):
        for si in range(slices):
            a, b = ring(bi, si), ring(bi, si + 1)
            c, d = ring(bi + 1, si), ring(bi + 1, si + 1)
            faces.append((a, d, c))
            faces.append((a, b, d))
    return np.array(verts), np.array(faces, dtype=np.int64)


# -- biped assembly -----------------------------------------------------------

_JOINT_TABLE = (
    # name, parent name, body part
    ("pelvis", None, BodyPart.TORSO),
    ("spine", "pelvis", BodyPart.TORSO),
    ("chest", "spine", BodyPart.TORSO),
    ("neck", "chest", BodyPart.HEAD),
    ("head", "neck", BodyPart.HEAD),
    ("l_shoulder", "chest", BodyPart.LEFT_ARM),
    ("l_elbow", "l_shoulder", BodyPart.LEFT_ARM),
    ("l_wrist", "l_elbow", BodyPart.LEFT_ARM),
    ("l_hand", "l_wrist", BodyPart.LEFT_ARM),
    ("r_shoulder", "chest", BodyPart.RIGHT_ARM),
    ("r_elbow", "r_shoulder", BodyPart.RIGHT_ARM),
    ("r_wrist", "r_elbow", BodyPart.RIGHT_ARM),
    ("r_hand", "r_wrist", BodyPart.RIGHT_ARM),
    ("l_hip", "pelvis", BodyPart.LEFT_LEG),
    ("l_knee", "l_hip", BodyPart.LEFT_LEG),
    ("l_ankle", "l_knee", BodyPart.LEFT_LEG),
    ("r_hip", "pelvis", BodyPart.RIGHT_LEG),
    ("r_knee", "r_hip", BodyPart.RIGHT_LEG),
    ("r_ankle", "r_knee", BodyPart.RIGHT_LEG),
)

_SHOULDER_X = 0.18
_UPPER_ARM_LEN = 0.28
_FOREARM_LEN = 0.26
_HAND_LEN = 0.12
_HIP_X = 0.09
_THIGH_LEN = 0.40
_SHIN_LEN = 0.40


def build_biped(spec: BipedSpec = BipedSpec()) -> SkinnedCharacter:
    al, aw = spec.arm_length_scale, spec.arm_width_scale
    ll, lw = spec.leg_length_scale, spec.leg_width_scale

    pos = {
        "pelvis": (0.0, 0.95, 0.0),
        "spine": (0.0, 1.10, 0.0),
        "chest": (0.0, 1.30, 0.0),
        "neck": (0.0, 1.48, 0.0),
        "head": (0.0, 1.64, 0.0),
        "l_hip": (_HIP_X, 0.88, 0.0),
        "r_hip": (-_HIP_X, 0.88, 0.0),
    }
    for sgn, side in ((1.0, "l"), (-1.0, "r")):
        sx = sgn * _SHOULDER_X
        pos[f"{side}_shoulder"] = (sx, 1.42, 0.0)
        pos[f"{side}_elbow"] = (sx + sgn * _UPPER_ARM_LEN * al, 1.42, 0.0)
        pos[f"{side}_wrist"] = (sx + sgn * (_UPPER_ARM_LEN + _FOREARM_LEN) * al, 1.42, 0.0)
        pos[f"{side}_hand"] = (sx + sgn * (_UPPER_ARM_LEN + _FOREARM_LEN + _HAND_LEN) * al, 1.42, 0.0)
        knee_y = 0.88 - _THIGH_LEN * ll
        pos[f"{side}_knee"] = (sgn * _HIP_X, knee_y, 0.0)
        pos[f"{side}_ankle"] = (sgn * _HIP_X, knee_y - _SHIN_LEN * ll, 0.0)

    names = [row[0] for row in _JOINT_TABLE]
    index = {n: i for i, n in enumerate(names)}
    joints = np.array([pos[n] for n in names])
    parents = np.array([-1 if row[1] is None else index[row[1]] for row in _JOINT_TABLE])
    parts = tuple(row[2] for row in _JOINT_TABLE)

    def j(name: str) -> np.ndarray:
        return joints[index[name]]

    parts_list: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []

    def add(verts: np.ndarray, faces: np.ndarray, joint: str | np.ndarray):
        if isinstance(joint, str):
            owner = np.full(len(verts), index[joint], dtype=np.int64)
        else:
            owner = joint
        parts_list.append((verts, faces, owner))

    # Each surface piece is skinned to the joint at its segment's proximal
    # end (the joint whose rotation carries it); leaf joints own nothing.
    # Torso box: half-width kept inside the shoulder line so posed arms
    # clear it; vertices below the spine joint belong to the pelvis.
    bv, bf = _box(np.array([0.0, 1.07, 0.0]), np.array([0.26, 0.54, 0.20]), (4, 8, 3))
    owner = np.where(bv[:, 1] <= 1.10, index["pelvis"], index["spine"]).astype(np.int64)
    add(bv, bf, owner)

    add(*_sphere(j("head") + np.array([0.0, 0.02, 0.0]), 0.13), "neck")
    add(*_tube(j("chest"), j("neck"), 0.045, extend=0.006), "chest")

    # No clavicle geometry: anything around the shoulder pivot would be
    # swept by the rotating upper-arm tube and register fake penetration.
    for side in ("l", "r"):
        sh, el, wr, ha = (j(f"{side}_{n}") for n in ("shoulder", "elbow", "wrist", "hand"))
        hip, knee, ankle = (j(f"{side}_{n}") for n in ("hip", "knee", "ankle"))
        add(*_tube(sh, el, 0.055 * aw, extend=0.006), f"{side}_shoulder")
        add(*_tube(el, wr, 0.05 * aw, extend=0.006), f"{side}_elbow")
        add(*_tube(wr, ha, 0.035 * aw, extend=0.006), f"{side}_wrist")
        add(*_tube(hip, knee, 0.065 * lw, extend=0.01), f"{side}_hip")
        add(*_tube(knee, ankle, 0.05 * lw, extend=0.01), f"{side}_knee")

    all_verts = []
    all_faces = []
    owners = []
    offset = 0
    for verts, faces, owner in parts_list:
        all_verts.append(verts)
        all_faces.append(faces + offset)
        owners.append(owner)
        offset += len(verts)
    vertices = np.concatenate(all_verts)
    faces = np.concatenate(all_faces)
    owner = np.concatenate(owners)
    weights = np.zeros((len(vertices), len(names)))
    weights[np.arange(len(vertices)), owner] = 1.0

    return SkinnedCharacter(
        name=spec.name,
        vertices=vertices,
        faces=faces,
        joints=joints,
        parents=parents,
        joint_names=tuple(names),
        skin_weights=weights,
        forward=np.array([0.0, 0.0, 1.0]),
        body_parts=parts,
    )


# -- pose construction --------------------------------------------------------


def _joint_index(character: SkinnedCharacter, name: str) -> int:
    return character.joint_names.index(name)


def _world_state(character: SkinnedCharacter, quats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """World rotations and joint positions for one pose (zero root offset)."""
    n = character.num_joints
    rot = quat_to_matrix(quats)
    world_r = np.empty((n, 3, 3))
    world_p = np.empty((n, 3))
    for jj in character.topological_order():
        p = int(character.parents[jj])
        if p < 0:
            world_r[jj] = rot[jj]
            world_p[jj] = character.joints[jj]
        else:
            world_r[jj] = world_r[p] @ rot[jj]
            world_p[jj] = world_p[p] + world_r[p] @ (character.joints[jj] - character.joints[p])
    return world_r, world_p


def _aim_bone(character: SkinnedCharacter, quats: np.ndarray, child: int, target: np.ndarray) -> None:
    """Set the local rotation of child's parent so the bone points at target."""
    parent = int(character.parents[child])
    grand = int(character.parents[parent])
    world_r, world_p = _world_state(character, quats)
    base = world_r[grand] if grand >= 0 else np.eye(3)
    rest_dir = character.joints[child] - character.joints[parent]
    rest_dir = rest_dir / np.linalg.norm(rest_dir)
    want = np.asarray(target, dtype=np.float64) - world_p[parent]
    want = want / np.linalg.norm(want)
    quats[parent] = quat_between(rest_dir, base.T @ want)


def _two_bone_reach(shoulder: np.ndarray, wrist_target: np.ndarray, len_upper: float,
                    len_fore: float, hint: np.ndarray) -> np.ndarray:
    """Elbow position reaching a wrist target, bent toward ``hint``."""
    delta = wrist_target - shoulder
    d = np.linalg.norm(delta)
    d = min(max(d, abs(len_upper - len_fore) + 1e-4), len_upper + len_fore - 1e-4)
    d_hat = delta / np.linalg.norm(delta)
    cos_a = (len_upper**2 + d**2 - len_fore**2) / (2.0 * len_upper * d)
    cos_a = min(max(cos_a, -1.0), 1.0)
    sin_a = np.sqrt(max(1.0 - cos_a**2, 0.0))
    perp = hint - np.dot(hint, d_hat) * d_hat
    norm = np.linalg.norm(perp)
    if norm < 1e-9:
        perp = np.array([0.0, -1.0, 0.0]) - d_hat * np.dot(np.array([0.0, -1.0, 0.0]), d_hat)
        norm = np.linalg.norm(perp)
    perp = perp / norm
    return shoulder + len_upper * (cos_a * d_hat + sin_a * perp)


def _identity_pose(character: SkinnedCharacter) -> np.ndarray:
    q = np.zeros((character.num_joints, 4))
    q[:, 0] = 1.0
    return q


def _arm_reach_pose(
    character: SkinnedCharacter,
    quats: np.ndarray,
    side: str,
    wrist_target: np.ndarray,
    hand_dir: np.ndarray,
    hint: np.ndarray,
) -> None:
    """Pose one arm so the wrist lands at a target and the hand points along
    hand_dir. Mutates ``quats`` in place."""
    shoulder = _joint_index(character, f"{side}_shoulder")
    elbow = _joint_index(character, f"{side}_elbow")
    wrist = _joint_index(character, f"{side}_wrist")
    hand = _joint_index(character, f"{side}_hand")
    len_upper = float(np.linalg.norm(character.joints[elbow] - character.joints[shoulder]))
    len_fore = float(np.linalg.norm(character.joints[wrist] - character.joints[elbow]))
    len_hand = float(np.linalg.norm(character.joints[hand] - character.joints[wrist]))

    _, world_p = _world_state(character, quats)
    elbow_target = _two_bone_reach(world_p[shoulder], np.asarray(wrist_target), len_upper, len_fore, hint)
    _aim_bone(character, quats, elbow, elbow_target)
    _aim_bone(character, quats, wrist, np.asarray(wrist_target))
    _, world_p = _world_state(character, quats)
    hand_dir = np.asarray(hand_dir, dtype=np.float64)
    hand_dir = hand_dir / np.linalg.norm(hand_dir)
    _aim_bone(character, quats, hand, world_p[wrist] + len_hand * hand_dir)


def _palms_together_pose(character: SkinnedCharacter) -> np.ndarray:
    """Palms meeting in front of the collarbones, clear of the torso box."""
    neck_y = character.joints[_joint_index(character, "neck")][1]
    quats = _identity_pose(character)
    for side, sgn in (("l", 1.0), ("r", -1.0)):
        _arm_reach_pose(
            character,
            quats,
            side,
            wrist_target=np.array([sgn * 0.038, neck_y - 0.08, 0.14]),
            hand_dir=np.array([-sgn * 0.05, 1.0, 0.05]),
            hint=np.array([sgn * 0.7, -0.6, 0.1]),
        )
    return quats


def _cross_arms_pose(character: SkinnedCharacter) -> np.ndarray:
    """Forearms folded across the chest at two depth layers."""
    chest_y = character.joints[_joint_index(character, "chest")][1]
    quats = _identity_pose(character)
    _arm_reach_pose(
        character,
        quats,
        "l",
        wrist_target=np.array([-0.08, chest_y + 0.07, 0.19]),
        hand_dir=np.array([-0.95, 0.1, 0.05]),
        hint=np.array([0.5, -0.4, 0.75]),
    )
    _arm_reach_pose(
        character,
        quats,
        "r",
        wrist_target=np.array([0.08, chest_y + 0.06, 0.27]),
        hand_dir=np.array([0.95, 0.1, 0.05]),
        hint=np.array([-0.5, -0.4, 0.75]),
    )
    return quats


def _smoothstep(u: float) -> float:
    return u * u * (3.0 - 2.0 * u)


def _keyframe_motion(
    character: SkinnedCharacter,
    keys: list[tuple[int, np.ndarray]],
    num_frames: int,
    fps: float,
) -> MotionSequence:
    n = character.num_joints
    rotations = np.zeros((num_frames, n, 4))
    for t in range(num_frames):
        seg = 0
        while seg + 1 < len(keys) and keys[seg + 1][0] < t:
            seg += 1
        if seg + 1 >= len(keys):
            rotations[t] = keys[-1][1]
            continue
        f0, q0 = keys[seg]
        f1, q1 = keys[seg + 1]
        u = _smoothstep((t - f0) / max(f1 - f0, 1)) if t >= f0 else 0.0
        for jj in range(n):
            rotations[t, jj] = slerp(q0[jj], q1[jj], u)
    return MotionSequence(fps=fps, root_translation=np.zeros((num_frames, 3)), rotations=rotations)


def clap_motion(character: SkinnedCharacter, num_frames: int = 30, fps: float = 30.0) -> MotionSequence:
    """Hands meet in front of the chest at frame num_frames // 2."""
    rest = _identity_pose(character)
    contact = _palms_together_pose(character)
    release = np.array([slerp(contact[jj], rest[jj], 0.6) for jj in range(character.num_joints)])
    keys = [(0, rest), (num_frames // 2, contact), (num_frames - 1, release)]
    return _keyframe_motion(character, keys, num_frames, fps)


def pray_motion(character: SkinnedCharacter, num_frames: int = 30, fps: float = 30.0) -> MotionSequence:
    """Palms together reached early and held to the end."""
    rest = _identity_pose(character)
    contact = _palms_together_pose(character)
    hold_from = max(num_frames // 4, 1)
    keys = [(0, rest), (hold_from, contact), (num_frames - 1, contact)]
    return _keyframe_motion(character, keys, num_frames, fps)


def cross_arm_motion(character: SkinnedCharacter, num_frames: int = 30, fps: float = 30.0) -> MotionSequence:
    """Arms folding across the chest, held over the last third."""
    rest = _identity_pose(character)
    crossed = _cross_arms_pose(character)
    keys = [(0, rest), (2 * num_frames // 3, crossed), (num_frames - 1, crossed)]
    return _keyframe_motion(character, keys, num_frames, fps)


@dataclass(frozen=True)
class SyntheticFixture:
    source: SkinnedCharacter
    target: SkinnedCharacter
    motions: dict[str, MotionSequence] = field(default_factory=dict)


def generate_synthetic(
    spec: BipedSpec = BipedSpec(),
    target_spec: BipedSpec | None = None,
    num_frames: int = 30,
    fps: float = 30.0,
) -> SyntheticFixture:
    """Source/target character pair plus the canonical contact motions.

    The default target is the source with arms 1.5x longer, the canonical
    shape gap for contact-transfer experiments. Motions are authored on the
    source character.
    """
    source = build_biped(spec)
    if target_spec is None:
        target_spec = replace(spec, arm_length_scale=spec.arm_length_scale * 1.5, name=spec.name + "_long_arms")
    target = build_biped(target_spec)
    motions = {
        "clap": clap_motion(source, num_frames, fps),
        "pray": pray_motion(source, num_frames, fps),
        "cross_arms": cross_arm_motion(source, num_frames, fps),
    }
    return SyntheticFixture(source=source, target=target, motions=motions)
