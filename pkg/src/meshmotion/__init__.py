"""Motion retargeting for skinned characters via dense surface-sensor
interaction fields: sensor extraction by bone-axis ray casting, a sparse
per-frame field of tangent-space sensor offsets, direct optimization of
target joint rotations against that field, and an evaluation suite for
contact preservation and interpenetration."""

from .character import (
    BodyPart,
    MotionSequence,
    SkinnedCharacter,
    character_height,
    forward_kinematics,
    global_joint_rotations,
    identity_motion,
    posed_joints,
    skin_vertices,
)
from .errors import MeshMotionError
from .interaction import (
    DmiField,
    InteractionMask,
    SensorTrajectory,
    build_interaction_mask,
    compute_dmi_field,
    evaluate_target_dmi,
    select_pairs,
    sensor_forward_kinematics,
)
from .losses import (
    LossBreakdown,
    RetargetConfig,
    default_end_effectors,
    dmi_loss,
    end_effector_loss,
    rec_loss,
)
from .metrics import (
    MetricReport,
    arm_radius,
    contact_error,
    evaluate,
    jitter_trace,
    joint_mse,
    penetration_ratio,
)
from .objective import RetargetObjective, total_objective
from .optimize import OptimizerSettings, RetargetResult, retarget
from .sensors import (
    SemanticCoordinate,
    SensorFeature,
    SensorSet,
    bone_mesh,
    coordinate_grid,
    default_coordinate_grid,
    derive_sensor,
    derive_sensors,
    ray_mesh_intersection,
    tangent_frame,
)
from .synthetic import BipedSpec, SyntheticFixture, build_biped, clap_motion, cross_arm_motion, generate_synthetic, pray_motion
from .winding import points_inside, winding_numbers

__version__ = "0.1.0"
