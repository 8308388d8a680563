"""JSON file formats for characters, motions, sensors and interaction fields.

All formats are self-describing UTF-8 JSON with a ``schema`` tag and
declared units. Numeric payloads round-trip bit-exactly (floats are
serialized via repr, which is lossless for IEEE doubles). Loading always
validates the data invariants and reports parse problems with line/column
anchors and invariant violations by name.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .character import BodyPart, MotionSequence, SkinnedCharacter
from .errors import InvariantViolation, ParseError
from .interaction import DmiField
from .sensors import SemanticCoordinate, SensorSet
from .synthetic import BipedSpec

CHARACTER_SCHEMA = "meshmotion/character/1"
MOTION_SCHEMA = "meshmotion/motion/1"
SENSORS_SCHEMA = "meshmotion/sensors/1"
DMI_SCHEMA = "meshmotion/dmi/1"


def _read_json(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg} (line {e.lineno}, column {e.colno})") from e
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e


def _write_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def _require(payload: dict, key: str, path: str | Path):
    if key not in payload:
        raise ParseError(f"{path}: missing required field {key!r}")
    return payload[key]


# -- characters ---------------------------------------------------------------


def save_character(character: SkinnedCharacter, path: str | Path) -> None:
    payload = {
        "schema": CHARACTER_SCHEMA,
        "units": "meters",
        "name": character.name,
        "vertices": character.vertices.tolist(),
        "faces": character.faces.tolist(),
        "joints": character.joints.tolist(),
        "parents": character.parents.tolist(),
        "joint_names": list(character.joint_names),
        "skin_weights": character.sparse_skin_weights(),
        "forward": character.forward.tolist(),
        "body_parts": [p.value for p in character.body_parts],
    }
    _write_json(path, payload)


def load_character(path: str | Path) -> SkinnedCharacter:
    payload = _read_json(path)
    if payload.get("schema") != CHARACTER_SCHEMA:
        raise ParseError(f"{path}: expected schema {CHARACTER_SCHEMA!r}, got {payload.get('schema')!r}")
    joints = np.array(_require(payload, "joints", path), dtype=np.float64)
    vertices = np.array(_require(payload, "vertices", path), dtype=np.float64)
    sparse = _require(payload, "skin_weights", path)
    if len(sparse) != len(vertices):
        raise InvariantViolation(f"{path}: skin_weights has {len(sparse)} rows for {len(vertices)} vertices")
    weights = np.zeros((len(vertices), len(joints)))
    for v, pairs in enumerate(sparse):
        for joint, w in pairs:
            if not 0 <= int(joint) < len(joints):
                raise InvariantViolation(f"{path}: skin weight for vertex {v} references joint {joint}")
            weights[v, int(joint)] += float(w)
    try:
        return SkinnedCharacter(
            name=payload.get("name", Path(path).stem),
            vertices=vertices,
            faces=np.array(_require(payload, "faces", path), dtype=np.int64).reshape(-1, 3),
            joints=joints,
            parents=np.array(_require(payload, "parents", path), dtype=np.int64),
            joint_names=tuple(_require(payload, "joint_names", path)),
            skin_weights=weights,
            forward=np.array(_require(payload, "forward", path), dtype=np.float64),
            body_parts=tuple(BodyPart.parse(p) for p in _require(payload, "body_parts", path)),
        )
    except InvariantViolation as e:
        raise InvariantViolation(f"{path}: {e}") from e


# -- motions ------------------------------------------------------------------


def save_motion(motion: MotionSequence, path: str | Path, joint_names: tuple[str, ...] | None = None) -> None:
    payload = {
        "schema": MOTION_SCHEMA,
        "fps": motion.fps,
        "joint_names": list(joint_names) if joint_names else None,
        "root_translation": motion.root_translation.tolist(),
        "rotations": motion.rotations.tolist(),
    }
    _write_json(path, payload)


def load_motion(path: str | Path) -> tuple[MotionSequence, tuple[str, ...] | None]:
    payload = _read_json(path)
    if payload.get("schema") != MOTION_SCHEMA:
        raise ParseError(f"{path}: expected schema {MOTION_SCHEMA!r}, got {payload.get('schema')!r}")
    rotations = np.array(_require(payload, "rotations", path), dtype=np.float64)
    if rotations.ndim != 3 or rotations.shape[-1] != 4:
        raise InvariantViolation(f"{path}: rotations must have shape (T, N, 4)")
    norms = np.linalg.norm(rotations, axis=-1)
    worst = float(np.abs(norms - 1.0).max()) if norms.size else 0.0
    if worst > 1e-4:
        warnings.warn(f"{path}: quaternion norms off by up to {worst:.3g}; renormalizing", stacklevel=2)
    if worst > 1e-6:
        # Near-zero rows cannot be renormalized; leave them for validation.
        bad = (np.abs(norms - 1.0) > 1e-14) & (norms > 1e-8)
        rotations = rotations.copy()
        rotations[bad] /= norms[bad][..., None]
    try:
        motion = MotionSequence(
            fps=float(_require(payload, "fps", path)),
            root_translation=np.array(_require(payload, "root_translation", path), dtype=np.float64),
            rotations=rotations,
        )
    except InvariantViolation as e:
        raise InvariantViolation(f"{path}: {e}") from e
    names = payload.get("joint_names")
    return motion, tuple(names) if names else None


def bind_motion(motion: MotionSequence, names: tuple[str, ...] | None, character: SkinnedCharacter) -> MotionSequence:
    """Check a loaded motion against a character before use."""
    if motion.num_joints != character.num_joints:
        raise InvariantViolation(
            f"motion has {motion.num_joints} joints, character {character.name!r} has {character.num_joints}"
        )
    if names is not None and tuple(names) != character.joint_names:
        raise InvariantViolation(f"motion joint names do not match character {character.name!r}")
    return motion


# -- sensors ------------------------------------------------------------------


def save_sensors(sensors: SensorSet, path: str | Path, character_name: str = "") -> None:
    records = []
    for i in range(len(sensors)):
        nz = np.flatnonzero(sensors.skin_weights[i])
        records.append(
            {
                "valid": bool(sensors.valid[i]),
                "position": sensors.positions[i].tolist(),
                "tangent": sensors.tangents[i].reshape(9).tolist(),
                "skin_weights": [[int(j), float(sensors.skin_weights[i, j])] for j in nz],
            }
        )
    payload = {
        "schema": SENSORS_SCHEMA,
        "character": character_name,
        "coordinates": [[c.b, c.l, c.phi] for c in sensors.coordinates],
        "sensors": records,
    }
    _write_json(path, payload)


def load_sensors(path: str | Path, character: SkinnedCharacter) -> SensorSet:
    payload = _read_json(path)
    if payload.get("schema") != SENSORS_SCHEMA:
        raise ParseError(f"{path}: expected schema {SENSORS_SCHEMA!r}, got {payload.get('schema')!r}")
    coords = tuple(SemanticCoordinate(int(b), float(l), float(phi)) for b, l, phi in _require(payload, "coordinates", path))
    records = _require(payload, "sensors", path)
    if len(records) != len(coords):
        raise InvariantViolation(f"{path}: {len(records)} sensor records for {len(coords)} coordinates")
    s = len(coords)
    positions = np.zeros((s, 3))
    tangents = np.zeros((s, 3, 3))
    valid = np.zeros(s, dtype=bool)
    weights = np.zeros((s, character.num_joints))
    parts = []
    for i, rec in enumerate(records):
        valid[i] = bool(rec["valid"])
        positions[i] = np.array(rec["position"], dtype=np.float64)
        tangents[i] = np.array(rec["tangent"], dtype=np.float64).reshape(3, 3)
        for joint, w in rec["skin_weights"]:
            weights[i, int(joint)] = float(w)
        parts.append(
            character.bone_body_part(coords[i].b) if coords[i].b < character.num_bones else BodyPart.TORSO
        )
    return SensorSet(
        coordinates=coords,
        positions=positions,
        tangents=tangents,
        valid=valid,
        skin_weights=weights,
        body_parts=tuple(parts),
    )


# -- interaction fields --------------------------------------------------------


def save_dmi_field(field: DmiField, path: str | Path) -> None:
    entries = np.concatenate(
        [
            field.frame_index[:, None].astype(np.float64),
            field.observer_index[:, None].astype(np.float64),
            field.target_index[:, None].astype(np.float64),
            field.entry_valid[:, None].astype(np.float64),
            field.offsets,
        ],
        axis=1,
    )
    payload = {
        "schema": DMI_SCHEMA,
        "num_frames": field.num_frames,
        "coordinates": [[c.b, c.l, c.phi] for c in field.coordinates],
        "entries": [[int(t), int(k), int(j), int(c), dx, dy, dz] for t, k, j, c, dx, dy, dz in entries.tolist()],
    }
    _write_json(path, payload)


def load_dmi_field(path: str | Path) -> DmiField:
    payload = _read_json(path)
    if payload.get("schema") != DMI_SCHEMA:
        raise ParseError(f"{path}: expected schema {DMI_SCHEMA!r}, got {payload.get('schema')!r}")
    coords = tuple(SemanticCoordinate(int(b), float(l), float(phi)) for b, l, phi in _require(payload, "coordinates", path))
    rows = _require(payload, "entries", path)
    e = len(rows)
    frame = np.zeros(e, dtype=np.int64)
    observer = np.zeros(e, dtype=np.int64)
    target = np.zeros(e, dtype=np.int64)
    valid = np.zeros(e, dtype=bool)
    offsets = np.zeros((e, 3))
    for i, (t, k, j, c, dx, dy, dz) in enumerate(rows):
        frame[i], observer[i], target[i], valid[i] = int(t), int(k), int(j), bool(c)
        offsets[i] = (dx, dy, dz)
    return DmiField(
        num_frames=int(_require(payload, "num_frames", path)),
        coordinates=coords,
        frame_index=frame,
        observer_index=observer,
        target_index=target,
        offsets=offsets,
        entry_valid=valid,
    )


# -- synthetic specs ------------------------------------------------------------


def load_biped_spec(path: str | Path) -> tuple[BipedSpec, BipedSpec | None]:
    """(source spec, optional target spec) from a JSON multiplier file."""
    payload = _read_json(path)
    target_payload = payload.pop("target", None)

    def build(data: dict, default_name: str) -> BipedSpec:
        known = {"arm_length_scale", "arm_width_scale", "leg_length_scale", "leg_width_scale", "name"}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"{path}: unknown spec fields {sorted(unknown)}")
        return BipedSpec(**{"name": default_name, **data})

    source = build(payload, "biped")
    target = build(target_payload, "biped_target") if target_payload is not None else None
    return source, target
