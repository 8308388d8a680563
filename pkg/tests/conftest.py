import numpy as np
import pytest

from meshmotion.character import BodyPart, SkinnedCharacter
from meshmotion.sensors import derive_sensors
from meshmotion.synthetic import BipedSpec, build_biped, clap_motion


def make_cylinder_character(
    radius: float = 0.1,
    segments: int = 64,
    rings: int = 9,
    scale: float = 1.0,
    phase: float = np.pi / 64,
) -> SkinnedCharacter:
    """Closed cylinder around a single vertical bone (0,0,0) -> (0,1,0).

    The wall extends beyond both joints so every axis row has surface to
    hit; the tessellation is phase-shifted so grid rays cross face
    interiors, not vertices. All weights sit on the root joint, which
    anchors the single bone.
    """
    ys = np.linspace(-0.125, 1.125, rings)
    angles = phase + 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.sin(angles), np.zeros(segments), radius * np.cos(angles)], axis=1)
    verts = [ring + np.array([0.0, y, 0.0]) for y in ys]
    verts = np.concatenate(verts + [np.array([[0.0, ys[0], 0.0], [0.0, ys[-1], 0.0]])], axis=0)
    c0 = rings * segments
    c1 = c0 + 1
    faces = []
    for k in range(rings - 1):
        a, b = k * segments, (k + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces.append((a + i, a + j, b + i))
            faces.append((a + j, b + j, b + i))
    top = (rings - 1) * segments
    for i in range(segments):
        j = (i + 1) % segments
        faces.append((c0, j, i))
        faces.append((c1, top + i, top + j))
    weights = np.zeros((len(verts), 2))
    weights[:, 0] = 1.0
    return SkinnedCharacter(
        name="cylinder",
        vertices=verts * scale,
        faces=np.array(faces, dtype=np.int64),
        joints=np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]) * scale,
        parents=np.array([-1, 0]),
        joint_names=("base", "tip"),
        skin_weights=weights,
        forward=np.array([0.0, 0.0, 1.0]),
        body_parts=(BodyPart.TORSO, BodyPart.TORSO),
    )


def make_capsule_character(radius: float = 0.1, segments: int = 16) -> SkinnedCharacter:
    """Two stacked bones inside one cylinder, hard weight split at y = 1."""
    rings = 9
    ys = np.linspace(0.0, 2.0, rings)
    angles = np.pi / segments + 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.sin(angles), np.zeros(segments), radius * np.cos(angles)], axis=1)
    verts = np.concatenate([ring + np.array([0.0, y, 0.0]) for y in ys], axis=0)
    faces = []
    for k in range(rings - 1):
        a, b = k * segments, (k + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces.append((a + i, a + j, b + i))
            faces.append((a + j, b + j, b + i))
    weights = np.zeros((len(verts), 3))
    lower = verts[:, 1] < 1.0
    weights[lower, 0] = 1.0
    weights[~lower, 1] = 1.0
    return SkinnedCharacter(
        name="capsule",
        vertices=verts,
        faces=np.array(faces, dtype=np.int64),
        joints=np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 2.0, 0.0]]),
        parents=np.array([-1, 0, 1]),
        joint_names=("lower", "middle", "upper"),
        skin_weights=weights,
        forward=np.array([0.0, 0.0, 1.0]),
        body_parts=(BodyPart.TORSO, BodyPart.TORSO, BodyPart.HEAD),
    )


def make_chain_character(num_bones: int = 5, radius: float = 0.08, segments: int = 10) -> SkinnedCharacter:
    """Vertical bone chain inside one tube with soft weights blending the
    two nearest bone anchors, for exercising real multi-joint blends."""
    rings = 4 * num_bones + 1
    ys = np.linspace(-0.05, num_bones + 0.05, rings)
    angles = np.pi / segments + 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.sin(angles), np.zeros(segments), radius * np.cos(angles)], axis=1)
    verts = np.concatenate([ring + np.array([0.0, y, 0.0]) for y in ys], axis=0)
    faces = []
    for k in range(rings - 1):
        a, b = k * segments, (k + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces.append((a + i, a + j, b + i))
            faces.append((a + j, b + j, b + i))
    n = num_bones + 1
    weights = np.zeros((len(verts), n))
    for v, y in enumerate(verts[:, 1]):
        # Anchor joints are 0..num_bones-1; blend between floor and ceil.
        f = np.clip(y, 0.0, num_bones - 1.0 + 1e-9)
        lo = int(np.floor(f))
        hi = min(lo + 1, num_bones - 1)
        frac = f - lo
        weights[v, lo] += 1.0 - frac
        weights[v, hi] += frac
    parts = [BodyPart.TORSO] * n
    return SkinnedCharacter(
        name="chain",
        vertices=verts,
        faces=np.array(faces, dtype=np.int64),
        joints=np.stack([np.zeros(n), np.arange(n, dtype=np.float64), np.zeros(n)], axis=1),
        parents=np.array([-1] + list(range(n - 1))),
        joint_names=tuple(f"j{i}" for i in range(n)),
        skin_weights=weights,
        forward=np.array([0.0, 0.0, 1.0]),
        body_parts=tuple(parts),
    )


@pytest.fixture(scope="session")
def cylinder_character():
    return make_cylinder_character()


@pytest.fixture(scope="session")
def capsule_character():
    return make_capsule_character()


@pytest.fixture(scope="session")
def chain_character():
    return make_chain_character()


@pytest.fixture(scope="session")
def biped():
    return build_biped()


@pytest.fixture(scope="session")
def biped_long_arms():
    return build_biped(BipedSpec(arm_length_scale=1.5, name="biped_long_arms"))


@pytest.fixture(scope="session")
def biped_sensors(biped):
    return derive_sensors(biped)


@pytest.fixture(scope="session")
def biped_long_sensors(biped_long_arms):
    return derive_sensors(biped_long_arms)


@pytest.fixture(scope="session")
def clap(biped):
    return clap_motion(biped)
