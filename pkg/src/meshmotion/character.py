"""Skinned character and motion containers plus skeletal forward kinematics.

Conventions fixed across the package:

* Units are meters, the global up axis is +Y, and characters rest in a
  T-pose facing their ``forward`` vector (+Z for the built-in fixtures).
* A bone is the edge (parent joint, child joint); the root joint owns no
  bone. Bones are indexed by ascending child-joint index, so a character
  with N joints has N-1 bones.
* Rotations are stored as unit quaternions ``(w, x, y, z)``; the 6D
  encoding is only used as an optimization parameterization.

``forward_kinematics`` returns, per joint, the rigid transform that maps
rest-pose world coordinates to posed world coordinates (the linear blend
skinning matrix). Applying transform ``n`` to the rest position of joint
``n`` yields the posed joint.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyMesh, InvariantViolation
from .rotations import quat_to_matrix

UP_AXIS = 1  # +Y


class BodyPart(str, enum.Enum):
    TORSO = "Torso"
    HEAD = "Head"
    LEFT_ARM = "LeftArm"
    RIGHT_ARM = "RightArm"
    LEFT_LEG = "LeftLeg"
    RIGHT_LEG = "RightLeg"

    @classmethod
    def parse(cls, label: str) -> "BodyPart":
        for part in cls:
            if part.value == label:
                return part
        raise InvariantViolation(f"unknown body part label {label!r}")


ARM_PARTS = (BodyPart.LEFT_ARM, BodyPart.RIGHT_ARM)
LIMB_PARTS = (BodyPart.LEFT_ARM, BodyPart.RIGHT_ARM, BodyPart.LEFT_LEG, BodyPart.RIGHT_LEG)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SkinnedCharacter:
    """Rest-pose mesh + skeleton + skin weights of one character.

    ``skin_weights`` is dense of shape (V, N); rows are convex combinations.
    ``body_parts`` labels the body region around each joint; sensors read
    the label of their bone's distal joint, the vertex partition reads the
    label of the owning joint. Instances are immutable and safe to share
    across threads.
    """

    name: str
    vertices: np.ndarray  # (V, 3) float64, meters
    faces: np.ndarray  # (F, 3) int64
    joints: np.ndarray  # (N, 3) float64 rest-pose joint positions
    parents: np.ndarray  # (N,) int64, -1 marks the root
    joint_names: tuple[str, ...]
    skin_weights: np.ndarray  # (V, N) float64
    forward: np.ndarray  # (3,) unit vector
    body_parts: tuple[BodyPart, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", _freeze(np.ascontiguousarray(self.vertices, dtype=np.float64)))
        object.__setattr__(self, "faces", _freeze(np.ascontiguousarray(self.faces, dtype=np.int64)))
        object.__setattr__(self, "joints", _freeze(np.ascontiguousarray(self.joints, dtype=np.float64)))
        object.__setattr__(self, "parents", _freeze(np.ascontiguousarray(self.parents, dtype=np.int64)))
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "skin_weights", _freeze(np.ascontiguousarray(self.skin_weights, dtype=np.float64)))
        object.__setattr__(self, "forward", _freeze(np.ascontiguousarray(self.forward, dtype=np.float64)))
        object.__setattr__(self, "body_parts", tuple(self.body_parts))
        self.validate()

    # -- invariants ------------------------------------------------------

    def validate(self) -> None:
        v, f, j = self.vertices, self.faces, self.joints
        n = j.shape[0]
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvariantViolation("vertices must have shape (V, 3)")
        if j.ndim != 2 or j.shape[1] != 3:
            raise InvariantViolation("joints must have shape (N, 3)")
        if not (np.isfinite(v).all() and np.isfinite(j).all() and np.isfinite(self.skin_weights).all()):
            raise InvariantViolation("character contains non-finite values")
        if self.parents.shape != (n,):
            raise InvariantViolation("parents length must match joint count")
        if len(self.joint_names) != n or len(self.body_parts) != n:
            raise InvariantViolation("joint_names/body_parts length must match joint count")
        if self.skin_weights.shape != (v.shape[0], n):
            raise InvariantViolation("skin_weights must have shape (V, N)")

        if f.size and (f.min() < 0 or f.max() >= v.shape[0]):
            raise InvariantViolation("face references an out-of-range vertex index")
        if f.size:
            degenerate = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if degenerate.any():
                raise InvariantViolation(f"face {int(np.argmax(degenerate))} repeats a vertex index")

        if (self.skin_weights < -1e-12).any():
            bad = int(np.argwhere(self.skin_weights < -1e-12)[0][0])
            raise InvariantViolation(f"skin weights for vertex {bad} are negative")
        sums = self.skin_weights.sum(axis=1)
        off = np.abs(sums - 1.0) > 1e-6
        if off.any():
            bad = int(np.argmax(off))
            raise InvariantViolation(f"skin weights for vertex {bad} sum to {sums[bad]:.6g}, expected 1")

        roots = np.flatnonzero(self.parents < 0)
        if roots.size != 1:
            raise InvariantViolation(f"hierarchy must have exactly one root, found {roots.size}")
        if (self.parents >= n).any():
            raise InvariantViolation("parent index out of range")
        # Cycle check: every joint must reach the root.
        for start in range(n):
            seen = 0
            cur = start
            while self.parents[cur] >= 0:
                cur = int(self.parents[cur])
                seen += 1
                if seen > n:
                    raise InvariantViolation("hierarchy cycle detected")

        if abs(np.linalg.norm(self.forward) - 1.0) > 1e-9:
            raise InvariantViolation("forward direction must have unit norm")

    # -- derived structure -----------------------------------------------

    @property
    def num_joints(self) -> int:
        return self.joints.shape[0]

    @property
    def root(self) -> int:
        return int(np.flatnonzero(self.parents < 0)[0])

    @property
    def bone_child_joints(self) -> np.ndarray:
        """Child joint per bone; bones ordered by ascending child index."""
        return np.flatnonzero(self.parents >= 0)

    @property
    def num_bones(self) -> int:
        return self.num_joints - 1

    def bone_joints(self, b: int) -> tuple[int, int]:
        """(parent joint, child joint) of bone b."""
        child = int(self.bone_child_joints[b])
        return int(self.parents[child]), child

    def bone_body_part(self, b: int) -> BodyPart:
        return self.body_parts[int(self.bone_child_joints[b])]

    def topological_order(self) -> list[int]:
        order: list[int] = []
        children: dict[int, list[int]] = {i: [] for i in range(self.num_joints)}
        for j, p in enumerate(self.parents):
            if p >= 0:
                children[int(p)].append(j)
        stack = [self.root]
        while stack:
            j = stack.pop()
            order.append(j)
            stack.extend(reversed(children[j]))
        return order

    def sparse_skin_weights(self) -> list[list[tuple[int, float]]]:
        """Per-vertex (joint, weight) pairs, zero entries dropped."""
        out = []
        for row in self.skin_weights:
            nz = np.flatnonzero(row)
            out.append([(int(j), float(row[j])) for j in nz])
        return out


@dataclass(frozen=True)
class MotionSequence:
    """Per-frame root translation offsets and local joint rotations.

    ``root_translation`` is a displacement added to the rest root position,
    so the all-zero translation with identity rotations reproduces the rest
    pose. Rotations are unit quaternions of shape (T, N, 4).
    """

    fps: float
    root_translation: np.ndarray  # (T, 3)
    rotations: np.ndarray  # (T, N, 4)

    def __post_init__(self):
        object.__setattr__(self, "root_translation", _freeze(np.ascontiguousarray(self.root_translation, dtype=np.float64)))
        object.__setattr__(self, "rotations", _freeze(np.ascontiguousarray(self.rotations, dtype=np.float64)))
        self.validate()

    def validate(self) -> None:
        x, q = self.root_translation, self.rotations
        if x.ndim != 2 or x.shape[1] != 3:
            raise InvariantViolation("root_translation must have shape (T, 3)")
        if q.ndim != 3 or q.shape[2] != 4:
            raise InvariantViolation("rotations must have shape (T, N, 4)")
        if q.shape[0] != x.shape[0]:
            raise InvariantViolation("rotation and translation frame counts differ")
        if q.shape[0] < 1:
            raise InvariantViolation("motion must contain at least one frame")
        if not (np.isfinite(q).all() and np.isfinite(x).all()):
            raise InvariantViolation("motion contains non-finite values")
        norms = np.linalg.norm(q, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            t, n = np.unravel_index(int(np.argmax(np.abs(norms - 1.0))), norms.shape)
            raise InvariantViolation(f"quaternion at frame {t}, joint {n} has norm {norms[t, n]:.6g}")
        if self.fps <= 0:
            raise InvariantViolation("fps must be positive")

    @property
    def num_frames(self) -> int:
        return self.rotations.shape[0]

    @property
    def num_joints(self) -> int:
        return self.rotations.shape[1]


def identity_motion(character: SkinnedCharacter, num_frames: int = 1, fps: float = 30.0) -> MotionSequence:
    q = np.zeros((num_frames, character.num_joints, 4))
    q[..., 0] = 1.0
    return MotionSequence(fps=fps, root_translation=np.zeros((num_frames, 3)), rotations=q)


def forward_kinematics(
    character: SkinnedCharacter,
    rotations: np.ndarray,
    root_translation: np.ndarray,
) -> np.ndarray:
    """Per-joint rest-to-posed rigid transforms for one frame.

    ``rotations`` may be quaternions (N, 4) or matrices (N, 3, 3). Returns
    (N, 4, 4) transforms G with G[n] @ hom(rest joint n) = posed joint n;
    these are the matrices linear blend skinning consumes directly.
    """
    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.ndim == 2 and rotations.shape == (character.num_joints, 4):
        rot_mats = quat_to_matrix(rotations)
    elif rotations.shape == (character.num_joints, 3, 3):
        rot_mats = rotations
    else:
        raise DimensionMismatch(f"rotations shape {rotations.shape} does not match joint count {character.num_joints}")
    root_translation = np.asarray(root_translation, dtype=np.float64).reshape(3)

    n = character.num_joints
    joints = character.joints
    parents = character.parents
    world_rot = np.empty((n, 3, 3))
    world_pos = np.empty((n, 3))
    for j in character.topological_order():
        p = int(parents[j])
        if p < 0:
            world_rot[j] = rot_mats[j]
            world_pos[j] = joints[j] + root_translation
        else:
            world_rot[j] = world_rot[p] @ rot_mats[j]
            world_pos[j] = world_pos[p] + world_rot[p] @ (joints[j] - joints[p])

    out = np.tile(np.eye(4), (n, 1, 1))
    out[:, :3, :3] = world_rot
    # Compose with T(-rest joint) so the transform maps rest-pose world
    # coordinates to posed world coordinates.
    out[:, :3, 3] = world_pos - np.einsum("nij,nj->ni", world_rot, joints)
    return out


def global_joint_rotations(
    character: SkinnedCharacter,
    rotations: np.ndarray,
) -> np.ndarray:
    """Accumulated world rotation per joint for one frame (N, 3, 3)."""
    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.ndim == 2:
        rot_mats = quat_to_matrix(rotations)
    else:
        rot_mats = rotations
    n = character.num_joints
    world = np.empty((n, 3, 3))
    for j in character.topological_order():
        p = int(character.parents[j])
        world[j] = rot_mats[j] if p < 0 else world[p] @ rot_mats[j]
    return world


def posed_joints(character: SkinnedCharacter, motion: MotionSequence) -> np.ndarray:
    """World joint positions over the whole motion, shape (T, N, 3)."""
    if motion.num_joints != character.num_joints:
        raise DimensionMismatch("motion joint count does not match character")
    out = np.empty((motion.num_frames, character.num_joints, 3))
    hom = np.concatenate([character.joints, np.ones((character.num_joints, 1))], axis=1)
    for t in range(motion.num_frames):
        g = forward_kinematics(character, motion.rotations[t], motion.root_translation[t])
        out[t] = np.einsum("nij,nj->ni", g, hom)[:, :3]
    return out


def skin_vertices(character: SkinnedCharacter, transforms: np.ndarray) -> np.ndarray:
    """Linear blend skinning of the rest mesh by (N, 4, 4) transforms."""
    blended = np.einsum("vn,nij->vij", character.skin_weights, transforms)
    hom = np.concatenate([character.vertices, np.ones((character.vertices.shape[0], 1))], axis=1)
    return np.einsum("vij,vj->vi", blended, hom)[:, :3]


def character_height(character: SkinnedCharacter) -> float:
    """Rest-pose vertical extent (max - min along the up axis)."""
    if character.vertices.size == 0:
        raise EmptyMesh("character has no vertices")
    y = character.vertices[:, UP_AXIS]
    return float(y.max() - y.min())


def transform_motion_rigid(
    character: SkinnedCharacter,
    motion: MotionSequence,
    rotation: np.ndarray,
    translation: np.ndarray,
) -> MotionSequence:
    """Apply one global rigid transform to a whole motion.

    The rotation (3x3) composes onto the root rotations and the root
    translation track is remapped so every posed point p becomes
    R p + t at every frame.
    """
    from .rotations import matrix_to_quat, quat_multiply

    rotation = np.asarray(rotation, dtype=np.float64)
    translation = np.asarray(translation, dtype=np.float64)
    root = character.root
    q_r = matrix_to_quat(rotation)
    rotations = motion.rotations.copy()
    rotations[:, root] = quat_multiply(q_r, rotations[:, root])
    rest_root = character.joints[root]
    world_root = rest_root + motion.root_translation
    new_translation = world_root @ rotation.T + translation - rest_root
    return MotionSequence(fps=motion.fps, root_translation=new_translation, rotations=rotations)
