"""The sparse interaction field of a clapping motion
====================================================

Per frame, every limb sensor observes a handful of target sensors on the
body parts it may interact with (other arm, head, torso for arms; other
leg and torso for legs). From each part the nearest and furthest targets
are kept: near pairs carry contact information, far pairs coarse spatial
arrangement. Each entry stores the target's offset in the observer's
tangent frame, so the field never references world coordinates.
"""

import numpy as np

from meshmotion import (
    BodyPart,
    build_biped,
    build_interaction_mask,
    clap_motion,
    compute_dmi_field,
    derive_sensors,
    sensor_forward_kinematics,
)

character = build_biped()
motion = clap_motion(character)
sensors = derive_sensors(character)

trajectory = sensor_forward_kinematics(character, sensors, motion)
mask = build_interaction_mask(sensors)
field = compute_dmi_field(trajectory, mask, sensors.coordinates, pair_count=20)

print(f"motion: {motion.num_frames} frames at {motion.fps:g} fps")
print(f"observers: {mask.num_observers} limb sensors")
print(f"field entries: {field.num_entries} "
      f"({field.num_entries // motion.num_frames} per frame)")
print()

# Contact shows up as near pairs with tiny offsets. Track the smallest
# palm-to-palm offset: left hand/forearm observers against right hand and
# forearm targets.
hand_bones = {
    b for b in range(character.num_bones)
    if any(s in character.joint_names[character.bone_child_joints[b]] for s in ("wrist", "hand"))
}
def on_hand(part):
    return np.array([
        i for i, c in enumerate(sensors.coordinates)
        if c.b in hand_bones and sensors.body_parts[i] == part
    ])

palm_pairs = np.isin(field.observer_index, on_hand(BodyPart.LEFT_ARM)) & np.isin(
    field.target_index, on_hand(BodyPart.RIGHT_ARM)
)
norms = np.linalg.norm(field.offsets, axis=1)
for frame in (0, motion.num_frames // 2, motion.num_frames - 1):
    sel = palm_pairs & (field.frame_index == frame)
    print(f"frame {frame:2d}: nearest palm-to-palm offset {norms[sel].min() * 100:5.1f} cm, "
          f"furthest {norms[sel].max() * 100:5.1f} cm")
print()
print("the clap closes the near pairs to sub-centimeter range while the far")
print("pairs stay at body scale; matching both preserves the pose's meaning.")

# Offsets live in observer tangent space: flipping the whole motion by a
# rigid transform leaves them unchanged (see tests for the exact bound).
mid = palm_pairs & (field.frame_index == motion.num_frames // 2)
entry = int(np.flatnonzero(mid)[np.argmin(norms[mid])])
print()
print("closest pair at the contact frame:")
print(f"  observer sensor {field.observer_index[entry]}, target {field.target_index[entry]}")
print(f"  tangent-space offset {np.round(field.offsets[entry], 4)} "
      f"(|d| = {norms[entry] * 100:.2f} cm)")
