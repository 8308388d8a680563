"""Per-sequence retargeting by gradient descent on the target rotations.

The candidate starts from the source rotations (the copy baseline, which
is already the optimum when source and target coincide) and Adam walks
the 6D parameters downhill on the total objective. The root translation
is not optimized: it is the source translation scaled by the ratio of
character heights. The best-loss iterate is returned, not the last, so
late oscillation cannot degrade the result.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from .character import MotionSequence, SkinnedCharacter, character_height
from .errors import SkeletonMismatch
from .interaction import build_interaction_mask, compute_dmi_field, sensor_forward_kinematics
from .losses import LossBreakdown, RetargetConfig
from .objective import RetargetObjective, _DTYPE
from .rotations import matrix_to_quat, quat_to_rot6d, rot6d_to_matrix
from .sensors import SemanticCoordinate, SensorSet, derive_sensors

logger = logging.getLogger(__name__)

_TOTAL_FLOOR = 1e-12


@dataclass(frozen=True)
class OptimizerSettings:
    """First-order optimizer (adaptive moments) settings.

    Convergence: relative change of the total loss over the trailing
    ``convergence_window`` iterations below ``convergence_tolerance``.
    """

    max_iterations: int = 300
    step_size: float = 1e-2
    convergence_tolerance: float = 1e-6
    convergence_window: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class RetargetResult:
    motion: MotionSequence
    loss_trace: tuple[LossBreakdown, ...]
    iterations: int
    converged: bool


def retarget(
    motion_a: MotionSequence,
    character_a: SkinnedCharacter,
    character_b: SkinnedCharacter,
    coordinates: list[SemanticCoordinate] | None = None,
    config: RetargetConfig | None = None,
    settings: OptimizerSettings | None = None,
    sensors_a: SensorSet | None = None,
    sensors_b: SensorSet | None = None,
) -> RetargetResult:
    """Transfer a motion from character A to character B.

    Both characters must share skeleton topology (and therefore the
    semantic coordinate grid). Pre-derived sensor sets may be passed to
    skip re-deriving them.
    """
    config = config or RetargetConfig()
    settings = settings or OptimizerSettings()
    if character_a.num_joints != character_b.num_joints or not np.array_equal(
        character_a.parents, character_b.parents
    ):
        raise SkeletonMismatch("characters do not share a skeleton topology")
    if motion_a.num_joints != character_a.num_joints:
        raise SkeletonMismatch("motion does not match the source skeleton")

    torch.manual_seed(settings.seed)

    if sensors_a is None:
        sensors_a = derive_sensors(character_a, coordinates)
    if sensors_b is None:
        sensors_b = derive_sensors(character_b, coordinates if coordinates is not None else list(sensors_a.coordinates))

    trajectory_a = sensor_forward_kinematics(character_a, sensors_a, motion_a)
    mask_src = build_interaction_mask(sensors_a)
    source_field = compute_dmi_field(
        trajectory_a,
        mask_src,
        sensors_a.coordinates,
        pair_count=config.pair_count,
        per_frame_selection=config.per_frame_selection,
    )

    scale = character_height(character_b) / character_height(character_a)
    root_translation_b = motion_a.root_translation * scale

    engine = RetargetObjective(
        character_b, sensors_b, source_field, root_translation_b, motion_a.rotations, config
    )

    q6_init = quat_to_rot6d(motion_a.rotations)
    q6 = torch.tensor(q6_init, dtype=_DTYPE, requires_grad=True)
    optimizer = torch.optim.Adam([q6], lr=settings.step_size)

    trace: list[LossBreakdown] = []
    best_total = np.inf
    best_q6 = q6_init.copy()
    converged = False
    steps = 0
    for it in range(settings.max_iterations + 1):
        losses = engine.loss_tensors(q6)
        breakdown = engine.breakdown(losses)
        trace.append(breakdown)
        logger.info(
            "iter=%d total=%.6e dmi=%.6e rec=%.6e ef=%.6e",
            it, breakdown.total, breakdown.dmi, breakdown.rec, breakdown.ef,
        )
        if not np.isfinite(breakdown.total):
            converged = False
            break
        if breakdown.total < best_total:
            best_total = breakdown.total
            best_q6 = q6.detach().numpy().copy()
        if breakdown.total < _TOTAL_FLOOR:
            converged = True
            break
        if it >= settings.convergence_window:
            past = trace[it - settings.convergence_window].total
            if abs(breakdown.total - past) <= settings.convergence_tolerance * max(abs(past), _TOTAL_FLOOR):
                converged = True
                break
        if it == settings.max_iterations:
            break
        optimizer.zero_grad()
        losses["total"].backward()
        optimizer.step()
        steps += 1

    quats = matrix_to_quat(rot6d_to_matrix(best_q6))
    motion_b = MotionSequence(fps=motion_a.fps, root_translation=root_translation_b, rotations=quats)
    return RetargetResult(
        motion=motion_b,
        loss_trace=tuple(trace),
        iterations=steps,
        converged=converged,
    )
