"""Surface sensors derived from semantic coordinates by bone-axis ray casting.

A semantic coordinate (b, l, phi) names "the same" surface point on any
character sharing the skeleton: bone index, fractional position along the
bone, and angle around it. The sensor for a coordinate is found by casting
a ray from the point at parameter ``l`` on the bone axis, in the direction
``cos(phi) * forward + sin(phi) * (forward x bone)``, against the submesh
associated with that bone. A hit yields the sensor position, an orthonormal
tangent frame, and skin weights interpolated barycentrically from the hit
face's vertices; a miss yields an invalid sensor whose feature is all
zeros and which is excluded from every downstream computation.

Because the coordinates are shared, sensor arrays of two characters are
index-aligned, which is the dense correspondence the interaction field is
built on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .character import BodyPart, SkinnedCharacter
from .errors import DegenerateFrame, EmptySubmesh

RAY_EPS = 1e-6
_BARY_EPS = 1e-12


@dataclass(frozen=True)
class SemanticCoordinate:
    """Bone index b, axis parameter l in [0,1), angle phi in [0,2pi)."""

    b: int
    l: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.l < 1.0:
            raise ValueError(f"l must lie in [0,1), got {self.l}")
        if not 0.0 <= self.phi < 2.0 * np.pi:
            raise ValueError(f"phi must lie in [0,2pi), got {self.phi}")
        if self.b < 0:
            raise ValueError("bone index must be non-negative")


def default_coordinate_grid(num_bones: int = 18) -> list[SemanticCoordinate]:
    """Cartesian grid of bones x {0,.25,.5,.75} x {0,.5pi,pi,1.5pi}."""
    ls = (0.0, 0.25, 0.5, 0.75)
    phis = (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)
    return [
        SemanticCoordinate(b, l, phi)
        for b in range(num_bones)
        for l in ls
        for phi in phis
    ]


def coordinate_grid(num_bones: int, num_l: int, num_phi: int) -> list[SemanticCoordinate]:
    """Even grid: l = i/num_l over [0,1), phi = 2pi*j/num_phi."""
    return [
        SemanticCoordinate(b, i / num_l, 2.0 * np.pi * j / num_phi)
        for b in range(num_bones)
        for i in range(num_l)
        for j in range(num_phi)
    ]


@dataclass(frozen=True)
class SensorFeature:
    """One sensor on one character: position, tangent frame, skin weights."""

    position: np.ndarray  # (3,)
    tangent: np.ndarray  # (3, 3), columns (u, v, outward normal)
    valid: bool
    skin_weights: np.ndarray  # (N,) dense convex weights (zeros if invalid)
    coordinate: SemanticCoordinate


@dataclass(frozen=True)
class SensorSet:
    """Index-aligned sensors of one character over a shared coordinate grid."""

    coordinates: tuple[SemanticCoordinate, ...]
    positions: np.ndarray  # (S, 3)
    tangents: np.ndarray  # (S, 3, 3)
    valid: np.ndarray  # (S,) bool
    skin_weights: np.ndarray  # (S, N)
    body_parts: tuple[BodyPart, ...]  # per sensor, from the bone's child joint

    def __len__(self) -> int:
        return len(self.coordinates)

    def feature(self, i: int) -> SensorFeature:
        return SensorFeature(
            position=self.positions[i],
            tangent=self.tangents[i],
            valid=bool(self.valid[i]),
            skin_weights=self.skin_weights[i],
            coordinate=self.coordinates[i],
        )

    def coordinate_array(self) -> np.ndarray:
        """(S, 3) array of (b, l, phi) rows."""
        return np.array([(c.b, c.l, c.phi) for c in self.coordinates], dtype=np.float64)


# -- bone/mesh association ------------------------------------------------


def face_joint_assignment(character: SkinnedCharacter) -> np.ndarray:
    """Joint owning each face: argmax of the face's summed vertex weights."""
    w = character.skin_weights
    face_w = w[character.faces[:, 0]] + w[character.faces[:, 1]] + w[character.faces[:, 2]]
    return np.argmax(face_w, axis=1)


def bone_mesh(
    character: SkinnedCharacter,
    b: int,
    weight_threshold: float | None = None,
) -> np.ndarray:
    """Face indices associated with bone b.

    A bone's surface is skinned to the joint at its proximal end (rotating
    that joint is what carries the segment), so the default rule keeps the
    faces whose argmax summed vertex weight sits on the bone's parent
    joint — a total, deterministic partition. With ``weight_threshold``
    set, a face qualifies instead when all three vertices carry at least
    that weight for the parent joint. Bones sharing a parent joint share
    a submesh.
    """
    anchor, _ = character.bone_joints(b)
    if weight_threshold is None:
        mask = face_joint_assignment(character) == anchor
    else:
        w = character.skin_weights[:, anchor]
        fw = w[character.faces]
        mask = (fw >= weight_threshold).all(axis=1)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptySubmesh(f"no face is associated with bone {b}")
    return idx


# -- ray casting -----------------------------------------------------------


def ray_mesh_intersection(
    vertices: np.ndarray,
    faces: np.ndarray,
    origin: np.ndarray,
    direction: np.ndarray,
) -> tuple[np.ndarray, int, np.ndarray] | None:
    """Nearest ray hit against a triangle soup (Moller-Trumbore).

    Returns (point, face index, barycentric weights) or None. Only hits
    with t > RAY_EPS count; equal-t ties resolve to the lowest face index.
    Barycentric bounds are inclusive so rays through shared edges or
    vertices register on every touching face before the tie-break.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)

    v0 = vertices[faces[:, 0]]
    e1 = vertices[faces[:, 1]] - v0
    e2 = vertices[faces[:, 2]] - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", pvec, e1)
    ok = np.abs(det) > 1e-14
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = np.dot(qvec, direction) * inv_det
    t = np.einsum("ij,ij->i", qvec, e2) * inv_det

    hit = ok & (u >= -_BARY_EPS) & (v >= -_BARY_EPS) & (u + v <= 1.0 + _BARY_EPS) & (t > RAY_EPS)
    if not hit.any():
        return None
    candidates = np.flatnonzero(hit)
    # Nearest t, ties by lowest face index (candidates are already ascending).
    best = candidates[np.argmin(t[candidates])]
    bu = min(max(u[best], 0.0), 1.0)
    bv = min(max(v[best], 0.0), 1.0 - bu)
    bary = np.array([1.0 - bu - bv, bu, bv])
    point = origin + t[best] * direction
    return point, int(best), bary


# -- tangent frames ---------------------------------------------------------


def tangent_frame(
    face_vertices: np.ndarray,
    ray_origin: np.ndarray,
    d_bone: np.ndarray,
    d_forward: np.ndarray,
) -> np.ndarray:
    """Orthonormal frame at a hit face, columns (u, v, outward normal).

    The normal is the face normal flipped to point away from the ray
    origin (which sits on the bone axis, inside the shape); u is the bone
    direction projected into the face plane, falling back to the forward
    direction when the bone is perpendicular to the face.
    """
    a, b, c = face_vertices
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n)
    if norm < 1e-14:
        raise DegenerateFrame("hit face is degenerate")
    n = n / norm
    if np.dot(n, a - ray_origin) < 0:
        n = -n
    u = d_bone - np.dot(d_bone, n) * n
    if np.linalg.norm(u) < 1e-9:
        u = d_forward - np.dot(d_forward, n) * n
        if np.linalg.norm(u) < 1e-9:
            raise DegenerateFrame("bone and forward directions are both normal to the face")
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    return np.stack([u, v, n], axis=1)


# -- sensor derivation -------------------------------------------------------


def _ray_for_coordinate(
    character: SkinnedCharacter, coord: SemanticCoordinate
) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    parent, child = character.bone_joints(coord.b)
    x_parent = character.joints[parent]
    x_child = character.joints[child]
    origin = (1.0 - coord.l) * x_parent + coord.l * x_child
    bone_vec = x_child - x_parent
    bone_len = np.linalg.norm(bone_vec)
    if bone_len < 1e-12:
        return None
    d_bone = bone_vec / bone_len
    d_forward = character.forward
    d_other = np.cross(d_forward, d_bone)
    other_len = np.linalg.norm(d_other)
    if other_len < 1e-9:
        return None
    d_other = d_other / other_len
    direction = np.cos(coord.phi) * d_forward + np.sin(coord.phi) * d_other
    dir_len = np.linalg.norm(direction)
    if dir_len < 1e-9:
        return None
    return origin, direction / dir_len, d_bone


def derive_sensor(
    character: SkinnedCharacter,
    coord: SemanticCoordinate,
    weight_threshold: float | None = None,
    _face_assignment: np.ndarray | None = None,
) -> SensorFeature:
    """Sensor feature for one semantic coordinate (invalid on any miss)."""
    invalid = SensorFeature(
        position=np.zeros(3),
        tangent=np.zeros((3, 3)),
        valid=False,
        skin_weights=np.zeros(character.num_joints),
        coordinate=coord,
    )
    if coord.b >= character.num_bones:
        return invalid
    ray = _ray_for_coordinate(character, coord)
    if ray is None:
        return invalid
    origin, direction, d_bone = ray

    anchor, _ = character.bone_joints(coord.b)
    if weight_threshold is None:
        assignment = _face_assignment if _face_assignment is not None else face_joint_assignment(character)
        face_idx = np.flatnonzero(assignment == anchor)
    else:
        w = character.skin_weights[:, anchor]
        face_idx = np.flatnonzero((w[character.faces] >= weight_threshold).all(axis=1))
    if face_idx.size == 0:
        return invalid

    hit = ray_mesh_intersection(character.vertices, character.faces[face_idx], origin, direction)
    if hit is None:
        return invalid
    point, local_face, bary = hit
    face = character.faces[face_idx[local_face]]
    frame = tangent_frame(character.vertices[face], origin, d_bone, character.forward)
    weights = bary @ character.skin_weights[face]
    return SensorFeature(
        position=point,
        tangent=frame,
        valid=True,
        skin_weights=weights,
        coordinate=coord,
    )


def derive_sensors(
    character: SkinnedCharacter,
    coordinates: list[SemanticCoordinate] | tuple[SemanticCoordinate, ...] | None = None,
    weight_threshold: float | None = None,
) -> SensorSet:
    """Sensor set for a coordinate grid (defaults to the character's bones).

    Output order always equals coordinate order, so two characters given
    the same grid produce index-aligned sensor arrays.
    """
    if coordinates is None:
        coordinates = default_coordinate_grid(character.num_bones)
    coordinates = tuple(coordinates)
    assignment = face_joint_assignment(character) if weight_threshold is None else None

    s = len(coordinates)
    positions = np.zeros((s, 3))
    tangents = np.zeros((s, 3, 3))
    valid = np.zeros(s, dtype=bool)
    skin_weights = np.zeros((s, character.num_joints))
    parts: list[BodyPart] = []
    for i, coord in enumerate(coordinates):
        feat = derive_sensor(character, coord, weight_threshold, _face_assignment=assignment)
        positions[i] = feat.position
        tangents[i] = feat.tangent
        valid[i] = feat.valid
        skin_weights[i] = feat.skin_weights
        if coord.b < character.num_bones:
            parts.append(character.bone_body_part(coord.b))
        else:
            parts.append(BodyPart.TORSO)
    return SensorSet(
        coordinates=coordinates,
        positions=positions,
        tangents=tangents,
        valid=valid,
        skin_weights=skin_weights,
        body_parts=tuple(parts),
    )
