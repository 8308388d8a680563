"""Evaluation suite: joint accuracy, contact preservation, interpenetration.

* Joint MSE — mean squared joint position error normalized by character
  height, reported for world positions (global) and with the per-frame
  root position removed (local).
* Contact error — hand-side sensors (forearm + hand bones) paired with
  body-side sensors (torso + head); pairs closer than the source arm
  diameter in the source motion are contacts, and error accrues when the
  radius-normalized distance of such a pair on the retargeted character
  exceeds its source value.
* Penetration — fraction of arm vertices (argmax-weighted to arm bones,
  hands included) inside the posed body sub-mesh per frame, classified by
  generalized winding number, which tolerates the open boundary left by
  partitioning the mesh.
* Jitter trace — world height of one joint over time and its largest
  frame-to-frame jump.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .character import (
    ARM_PARTS,
    BodyPart,
    MotionSequence,
    SkinnedCharacter,
    character_height,
    forward_kinematics,
    posed_joints,
    skin_vertices,
)
from .errors import DimensionMismatch, EmptyArmSet, NoForearmSensors
from .interaction import sensor_forward_kinematics
from .sensors import SensorSet
from .winding import winding_numbers

_FOREARM_NAME_HINTS = ("wrist", "forearm", "lowerarm", "lower_arm")
_HAND_NAME_HINTS = ("hand",)


@dataclass(frozen=True)
class MetricReport:
    """Suite results; MSE fields are None without a ground-truth motion."""

    mse_global: float | None
    mse_local: float | None
    contact_error: float
    penetration_ratio: float
    contact_error_per_frame: np.ndarray
    penetration_per_frame: np.ndarray

    def as_dict(self) -> dict[str, float]:
        out = {
            "contact_error": self.contact_error,
            "penetration_ratio": self.penetration_ratio,
        }
        if self.mse_global is not None:
            out["mse_global"] = self.mse_global
        if self.mse_local is not None:
            out["mse_local"] = self.mse_local
        return out


# -- joint accuracy -----------------------------------------------------------


def joint_mse(
    ground_truth: MotionSequence,
    candidate: MotionSequence,
    character: SkinnedCharacter,
) -> tuple[float, float]:
    """(global, local) height-normalized mean squared joint position error."""
    if ground_truth.rotations.shape != candidate.rotations.shape:
        raise DimensionMismatch("ground truth and candidate motions differ in shape")
    h = character_height(character)
    p_gt = posed_joints(character, ground_truth)
    p_c = posed_joints(character, candidate)
    global_mse = float(np.sum((p_gt - p_c) ** 2, axis=-1).mean()) / h
    root = character.root
    local_gt = p_gt - p_gt[:, root : root + 1, :]
    local_c = p_c - p_c[:, root : root + 1, :]
    local_mse = float(np.sum((local_gt - local_c) ** 2, axis=-1).mean()) / h
    return global_mse, local_mse


# -- arm radius / contact -----------------------------------------------------


def forearm_bones(character: SkinnedCharacter) -> list[int]:
    names = character.joint_names
    children = character.bone_child_joints
    return [b for b in range(character.num_bones) if any(h in names[children[b]].lower() for h in _FOREARM_NAME_HINTS)]


def hand_side_bones(character: SkinnedCharacter) -> list[int]:
    """Forearm plus hand bones, the 'hand side' of contact pairs."""
    names = character.joint_names
    children = character.bone_child_joints
    hints = _FOREARM_NAME_HINTS + _HAND_NAME_HINTS
    return [b for b in range(character.num_bones) if any(h in names[children[b]].lower() for h in hints)]


def arm_radius(character: SkinnedCharacter, sensors: SensorSet, bones: list[int] | None = None) -> float:
    """Mean distance of valid forearm sensors from their bone axis."""
    if bones is None:
        bones = forearm_bones(character)
    dists = []
    for i, coord in enumerate(sensors.coordinates):
        if not sensors.valid[i] or coord.b not in bones:
            continue
        parent, child = character.bone_joints(coord.b)
        x0 = character.joints[parent]
        axis = character.joints[child] - x0
        axis = axis / np.linalg.norm(axis)
        rel = sensors.positions[i] - x0
        dists.append(np.linalg.norm(rel - np.dot(rel, axis) * axis))
    if not dists:
        raise NoForearmSensors("no valid sensors on forearm bones")
    return float(np.mean(dists))


def _sensor_indices_on_bones(sensors: SensorSet, bones: list[int]) -> np.ndarray:
    bones_set = set(bones)
    return np.array(
        [i for i, c in enumerate(sensors.coordinates) if sensors.valid[i] and c.b in bones_set],
        dtype=np.int64,
    )


def _body_side_indices(sensors: SensorSet) -> np.ndarray:
    return np.array(
        [
            i
            for i in range(len(sensors))
            if sensors.valid[i] and sensors.body_parts[i] in (BodyPart.TORSO, BodyPart.HEAD)
        ],
        dtype=np.int64,
    )


def contact_error_terms(normalized_a: np.ndarray, normalized_b: np.ndarray) -> np.ndarray:
    """Per-pair error: squared excess of the retargeted normalized distance
    over the source's, zero when the contact got closer or held."""
    normalized_a = np.asarray(normalized_a, dtype=np.float64)
    normalized_b = np.asarray(normalized_b, dtype=np.float64)
    return np.where(normalized_b > normalized_a, (normalized_b - normalized_a) ** 2, 0.0)


def contact_error(
    source_motion: MotionSequence,
    character_a: SkinnedCharacter,
    sensors_a: SensorSet,
    candidate_motion: MotionSequence,
    character_b: SkinnedCharacter,
    sensors_b: SensorSet,
) -> tuple[float, np.ndarray]:
    """Mean squared increase of radius-normalized contact distances.

    Returns (mean over contact events, per-frame means); both are zero
    when the source motion has no contacts.
    """
    radius_a = arm_radius(character_a, sensors_a)
    radius_b = arm_radius(character_b, sensors_b)
    d_src = 2.0 * radius_a

    hand_idx = _sensor_indices_on_bones(sensors_a, hand_side_bones(character_a))
    body_idx = _body_side_indices(sensors_a)
    # Restrict to pairs measurable on both characters.
    hand_idx = hand_idx[sensors_b.valid[hand_idx]]
    body_idx = body_idx[sensors_b.valid[body_idx]]
    if hand_idx.size == 0 or body_idx.size == 0:
        t = source_motion.num_frames
        return 0.0, np.zeros(t)

    traj_a = sensor_forward_kinematics(character_a, sensors_a, source_motion)
    traj_b = sensor_forward_kinematics(character_b, sensors_b, candidate_motion)

    per_frame = np.zeros(source_motion.num_frames)
    total = 0.0
    count = 0
    for t in range(source_motion.num_frames):
        pa = traj_a.positions[t]
        pb = traj_b.positions[t]
        dist_a = np.linalg.norm(pa[hand_idx][:, None, :] - pa[body_idx][None, :, :], axis=-1)
        contact = dist_a < d_src
        if not contact.any():
            continue
        dist_b = np.linalg.norm(pb[hand_idx][:, None, :] - pb[body_idx][None, :, :], axis=-1)
        err = contact_error_terms(dist_a[contact] / radius_a, dist_b[contact] / radius_b)
        per_frame[t] = float(err.mean())
        total += float(err.sum())
        count += err.size
    return (total / count if count else 0.0), per_frame


# -- interpenetration ---------------------------------------------------------


def arm_body_partition(character: SkinnedCharacter) -> tuple[np.ndarray, np.ndarray]:
    """(arm vertex indices, body face indices) split by argmax skin weight."""
    owner = np.argmax(character.skin_weights, axis=1)
    arm_joints = np.array([j for j in range(character.num_joints) if character.body_parts[j] in ARM_PARTS])
    vertex_is_arm = np.isin(owner, arm_joints)
    arm_vertices = np.flatnonzero(vertex_is_arm)
    if arm_vertices.size == 0:
        raise EmptyArmSet("no vertex has its dominant weight on an arm bone")
    face_owner_is_arm = vertex_is_arm[character.faces]
    body_faces = np.flatnonzero(~face_owner_is_arm.any(axis=1))
    return arm_vertices, body_faces


def penetration_ratio(
    character: SkinnedCharacter,
    motion: MotionSequence,
) -> tuple[float, np.ndarray]:
    """(sequence mean, per-frame) fraction of arm vertices inside the body."""
    arm_vertices, body_faces = arm_body_partition(character)
    faces = character.faces[body_faces]
    per_frame = np.zeros(motion.num_frames)
    for t in range(motion.num_frames):
        g = forward_kinematics(character, motion.rotations[t], motion.root_translation[t])
        posed = skin_vertices(character, g)
        w = winding_numbers(posed[arm_vertices], posed, faces)
        per_frame[t] = float(np.count_nonzero(w > 0.5)) / arm_vertices.size
    return float(per_frame.mean()), per_frame


# -- jitter -------------------------------------------------------------------


def jitter_trace(motion: MotionSequence, character: SkinnedCharacter, joint: int) -> tuple[np.ndarray, float]:
    """(per-frame world height of the joint, max frame-to-frame delta)."""
    heights = posed_joints(character, motion)[:, joint, 1]
    if heights.shape[0] < 2:
        return heights, 0.0
    return heights, float(np.abs(np.diff(heights)).max())


# -- combined report ----------------------------------------------------------


def comparison_table(reports: dict[str, MetricReport]) -> str:
    """Text table comparing named candidates, one metric per column."""
    columns = ["candidate", "mse_global", "mse_local", "contact_error", "penetration_%"]
    rows = [columns]
    for name, report in reports.items():
        rows.append(
            [
                name,
                "-" if report.mse_global is None else f"{report.mse_global:.4f}",
                "-" if report.mse_local is None else f"{report.mse_local:.4f}",
                f"{report.contact_error:.4f}",
                f"{100.0 * report.penetration_ratio:.2f}",
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(columns))]
    lines = []
    for r, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(columns))))
    return "\n".join(lines)


def evaluate(
    source_motion: MotionSequence,
    character_a: SkinnedCharacter,
    sensors_a: SensorSet,
    candidate_motion: MotionSequence,
    character_b: SkinnedCharacter,
    sensors_b: SensorSet,
    ground_truth: MotionSequence | None = None,
) -> MetricReport:
    ce, ce_frames = contact_error(source_motion, character_a, sensors_a, candidate_motion, character_b, sensors_b)
    pen, pen_frames = penetration_ratio(character_b, candidate_motion)
    mse_g = mse_l = None
    if ground_truth is not None:
        mse_g, mse_l = joint_mse(ground_truth, candidate_motion, character_b)
    return MetricReport(
        mse_global=mse_g,
        mse_local=mse_l,
        contact_error=ce,
        penetration_ratio=pen,
        contact_error_per_frame=ce_frames,
        penetration_per_frame=pen_frames,
    )
