"""Sensor trajectories and the sparse pairwise interaction field.

Given a motion, every sensor is carried along by a weighted blend of its
bones' skinning transforms; the blended tangent basis is projected back to
the closest rotation. Interactions are then encoded per frame as the
relative position of a target sensor expressed in an observer sensor's
tangent frame. Observers live on limbs and may only pair with targets of
selected body parts (arm vs. other arm / head / torso, leg vs. other leg /
torso). From each allowed part, the nearest and furthest targets are kept:
near pairs pin down contacts and interpenetration, far pairs encode coarse
spatial arrangement.

Entry order is deterministic: frames ascending, observers ascending, the
allowed parts in their fixed rule order, nearest block before furthest
block. This keeps field construction reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .character import BodyPart, MotionSequence, SkinnedCharacter, forward_kinematics
from .errors import DimensionMismatch
from .sensors import SemanticCoordinate, SensorSet

OBSERVER_GROUPS: dict[BodyPart, tuple[BodyPart, ...]] = {
    BodyPart.LEFT_ARM: (BodyPart.RIGHT_ARM, BodyPart.HEAD, BodyPart.TORSO),
    BodyPart.RIGHT_ARM: (BodyPart.LEFT_ARM, BodyPart.HEAD, BodyPart.TORSO),
    BodyPart.LEFT_LEG: (BodyPart.RIGHT_LEG, BodyPart.TORSO),
    BodyPart.RIGHT_LEG: (BodyPart.LEFT_LEG, BodyPart.TORSO),
}


def polar_rotation(m: np.ndarray) -> np.ndarray:
    """Closest rotation (det +1) to each 3x3 matrix in a batch."""
    u, _, vt = np.linalg.svd(m)
    det = np.linalg.det(u @ vt)
    u = u.copy()
    u[..., :, 2] *= np.sign(det)[..., None]
    return u @ vt


@dataclass(frozen=True)
class SensorTrajectory:
    """Sensor positions and tangent frames over a motion."""

    positions: np.ndarray  # (T, S, 3)
    tangents: np.ndarray  # (T, S, 3, 3)
    valid: np.ndarray  # (S,) bool, constant over time

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def num_sensors(self) -> int:
        return self.positions.shape[1]


def sensor_forward_kinematics(
    character: SkinnedCharacter,
    sensors: SensorSet,
    motion: MotionSequence,
) -> SensorTrajectory:
    """Carry rest-pose sensors through a motion by blended skinning.

    Positions use the weighted affine blend of the per-joint transforms;
    tangent frames use the blend's linear part re-orthonormalized to the
    closest rotation. Invalid sensors stay zero.
    """
    if sensors.skin_weights.shape[1] != character.num_joints:
        raise DimensionMismatch("sensor skin weights do not match character joint count")
    if motion.num_joints != character.num_joints:
        raise DimensionMismatch("motion joint count does not match character")

    t_frames = motion.num_frames
    s = len(sensors)
    valid = sensors.valid.copy()
    positions = np.zeros((t_frames, s, 3))
    tangents = np.zeros((t_frames, s, 3, 3))
    vidx = np.flatnonzero(valid)
    w = sensors.skin_weights[vidx]
    p_rest = sensors.positions[vidx]
    t_rest = sensors.tangents[vidx]
    for t in range(t_frames):
        g = forward_kinematics(character, motion.rotations[t], motion.root_translation[t])
        blend = np.einsum("sn,nij->sij", w, g)
        lin = blend[:, :3, :3]
        positions[t, vidx] = np.einsum("sij,sj->si", lin, p_rest) + blend[:, :3, 3]
        tangents[t, vidx] = polar_rotation(lin @ t_rest)
    return SensorTrajectory(positions=positions, tangents=tangents, valid=valid)


@dataclass(frozen=True)
class InteractionMask:
    """Admissible (observer, target) sensor pairs under the body-part rules.

    ``group_targets`` maps an observer body part to its allowed target
    parts with the valid sensor indices of each; it is shared by all
    observers of that part. ``pair_matrix`` is the dense (S, S) boolean
    view of the same information.
    """

    observers: np.ndarray  # (K,) sensor indices
    observer_parts: tuple[BodyPart, ...]
    group_targets: dict[BodyPart, tuple[tuple[BodyPart, np.ndarray], ...]]
    pair_matrix: np.ndarray  # (S, S) bool

    @property
    def num_observers(self) -> int:
        return self.observers.shape[0]

    def observer_groups(self, k: int) -> tuple[tuple[BodyPart, np.ndarray], ...]:
        """Allowed (part, target indices) groups for observer sensor k."""
        pos = int(np.searchsorted(self.observers, k))
        if pos >= len(self.observers) or self.observers[pos] != k:
            raise KeyError(f"sensor {k} is not an observer")
        return self.group_targets[self.observer_parts[pos]]


def build_interaction_mask(
    sensors_src: SensorSet,
    sensors_tgt: SensorSet | None = None,
) -> InteractionMask:
    """Mask of admissible pairs; with a target set, pairs touching a sensor
    invalid on the target character are dropped as well."""
    valid = sensors_src.valid.copy()
    if sensors_tgt is not None:
        if len(sensors_tgt) != len(sensors_src):
            raise DimensionMismatch("sensor sets are not index-aligned")
        valid &= sensors_tgt.valid

    parts = np.array([p.value for p in sensors_src.body_parts])
    s = len(sensors_src)
    observers = np.array(
        [i for i in range(s) if valid[i] and sensors_src.body_parts[i] in OBSERVER_GROUPS],
        dtype=np.int64,
    )
    observer_parts = tuple(sensors_src.body_parts[int(i)] for i in observers)

    group_targets: dict[BodyPart, tuple[tuple[BodyPart, np.ndarray], ...]] = {}
    for part, allowed in OBSERVER_GROUPS.items():
        groups = []
        for target_part in allowed:
            idx = np.flatnonzero((parts == target_part.value) & valid)
            groups.append((target_part, idx))
        group_targets[part] = tuple(groups)

    pair_matrix = np.zeros((s, s), dtype=bool)
    for i, k in enumerate(observers):
        for _, idx in group_targets[observer_parts[i]]:
            pair_matrix[k, idx] = True
    return InteractionMask(
        observers=observers,
        observer_parts=observer_parts,
        group_targets=group_targets,
        pair_matrix=pair_matrix,
    )


_DISTANCE_QUANTUM = 1e-7  # meters; collapses structural ties before sorting


def _select_from_group(distances: np.ndarray, indices: np.ndarray, pair_count: int) -> np.ndarray:
    """Nearest half + furthest half (all, if the group is small enough).

    Distances are quantized to 0.1 um before sorting: sensors on one rigid
    body can tie exactly, and without quantization a global rigid motion's
    rounding noise would flip which of the tied targets gets picked. Ties
    resolve to the lower sensor index; output order is nearest block
    (ascending distance) then furthest block (descending distance).
    """
    quantized = np.round(distances / _DISTANCE_QUANTUM)
    if indices.size <= pair_count:
        return indices[np.lexsort((indices, quantized))]
    half = pair_count // 2
    near = np.lexsort((indices, quantized))[:half]
    far = np.lexsort((indices, -quantized))[:half]
    return np.concatenate([indices[near], indices[far]])


def select_pairs(
    trajectory: SensorTrajectory,
    mask: InteractionMask,
    frame: int,
    pair_count: int,
) -> dict[int, np.ndarray]:
    """Target sensors chosen for every observer at one frame."""
    if pair_count < 2 or pair_count % 2 != 0:
        raise ValueError("pair_count must be an even number >= 2")
    pos = trajectory.positions[frame]
    out: dict[int, np.ndarray] = {}
    for i, k in enumerate(mask.observers):
        chosen = []
        for _, idx in mask.group_targets[mask.observer_parts[i]]:
            if idx.size == 0:
                continue
            d = np.linalg.norm(pos[idx] - pos[k], axis=1)
            chosen.append(_select_from_group(d, idx, pair_count))
        out[int(k)] = np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)
    return out


@dataclass(frozen=True)
class DmiField:
    """Sparse per-frame interaction entries.

    Flat, entry-aligned arrays: entry e is the offset of sensor
    ``target_index[e]`` expressed in the tangent frame of observer
    ``observer_index[e]`` at frame ``frame_index[e]``. ``entry_valid`` is
    the per-entry indicator used when a field is re-evaluated on a target
    character (entries touching sensors invalid there are flagged off).
    ``coordinates`` is the shared semantic-coordinate table the indices
    point into, so no world positions are required to interpret the field.
    """

    num_frames: int
    coordinates: tuple[SemanticCoordinate, ...]
    frame_index: np.ndarray  # (E,)
    observer_index: np.ndarray  # (E,)
    target_index: np.ndarray  # (E,)
    offsets: np.ndarray  # (E, 3)
    entry_valid: np.ndarray  # (E,) bool

    @property
    def num_entries(self) -> int:
        return self.frame_index.shape[0]

    def entries_at(self, frame: int, observer: int) -> np.ndarray:
        """Entry positions for one (frame, observer) pair."""
        return np.flatnonzero((self.frame_index == frame) & (self.observer_index == observer))


def compute_dmi_field(
    trajectory: SensorTrajectory,
    mask: InteractionMask,
    coordinates: tuple[SemanticCoordinate, ...],
    pair_count: int = 20,
    per_frame_selection: bool = True,
) -> DmiField:
    """Build the sparse interaction field of a motion.

    ``per_frame_selection`` recomputes near/far target choices at every
    frame (so receding/approaching contacts are tracked); when off, the
    frame-0 selection is reused for the whole sequence.
    """
    frames = []
    observers = []
    targets = []
    selection_0 = select_pairs(trajectory, mask, 0, pair_count)
    for t in range(trajectory.num_frames):
        selection = select_pairs(trajectory, mask, t, pair_count) if per_frame_selection and t > 0 else selection_0
        for k in (int(i) for i in mask.observers):
            chosen = selection[k]
            frames.append(np.full(chosen.shape[0], t, dtype=np.int64))
            observers.append(np.full(chosen.shape[0], k, dtype=np.int64))
            targets.append(chosen)
    frame_index = np.concatenate(frames) if frames else np.empty(0, dtype=np.int64)
    observer_index = np.concatenate(observers) if observers else np.empty(0, dtype=np.int64)
    target_index = np.concatenate(targets) if targets else np.empty(0, dtype=np.int64)

    offsets = _entry_offsets(trajectory, frame_index, observer_index, target_index)
    return DmiField(
        num_frames=trajectory.num_frames,
        coordinates=coordinates,
        frame_index=frame_index,
        observer_index=observer_index,
        target_index=target_index,
        offsets=offsets,
        entry_valid=np.ones(frame_index.shape[0], dtype=bool),
    )


def _entry_offsets(
    trajectory: SensorTrajectory,
    frame_index: np.ndarray,
    observer_index: np.ndarray,
    target_index: np.ndarray,
) -> np.ndarray:
    p_i = trajectory.positions[frame_index, observer_index]
    p_j = trajectory.positions[frame_index, target_index]
    t_i = trajectory.tangents[frame_index, observer_index]
    # Tangent frames are orthonormal, so the inverse is the transpose.
    return np.einsum("eji,ej->ei", t_i, p_j - p_i)


def evaluate_target_dmi(
    trajectory_b: SensorTrajectory,
    source_field: DmiField,
    mask_tgt: InteractionMask,
) -> DmiField:
    """Re-evaluate a source field's entries on another character.

    The output is aligned entry-for-entry with the source field; entries
    whose pair is not admissible on the target (either sensor invalid
    there) keep a zero offset and are flagged invalid.
    """
    c = source_field.entry_valid & mask_tgt.pair_matrix[source_field.observer_index, source_field.target_index]
    offsets = _entry_offsets(
        trajectory_b, source_field.frame_index, source_field.observer_index, source_field.target_index
    )
    offsets[~c] = 0.0
    return DmiField(
        num_frames=source_field.num_frames,
        coordinates=source_field.coordinates,
        frame_index=source_field.frame_index,
        observer_index=source_field.observer_index,
        target_index=source_field.target_index,
        offsets=offsets,
        entry_valid=c,
    )
