"""Retargeting losses: interaction-field consistency, reconstruction,
end-effector orientation, and their weighted total.

The interaction term compares entry-aligned fields by direction only
(one minus cosine), averaged per frame over the valid pairs; pairs whose
offset is near zero on either side are guarded to contribute nothing so
coincident sensors cannot blow up gradients. Reconstruction is the mean
squared difference of the 6D rotation parameters, and the end-effector
term is the mean Frobenius distance between accumulated global rotations
at a small set of chain tips.

The functions here are plain numpy reference kernels used for evaluation
and as oracles; the differentiable path lives in ``objective``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .character import SkinnedCharacter, global_joint_rotations
from .errors import DimensionMismatch, EmptyEndEffectorSet
from .interaction import DmiField
from .rotations import quat_to_matrix

ZERO_OFFSET_GUARD = 1e-8

_HAND_HINTS = ("hand",)
_FOOT_HINTS = ("foot", "toe")
_FOOT_FALLBACK = ("ankle",)
_HEAD_HINTS = ("head",)


@dataclass(frozen=True)
class RetargetConfig:
    """Loss weights, pair budget and end-effector set.

    ``end_effectors`` of None resolves to hands/feet/head by joint-name
    lookup. ``magnitude_weight`` optionally adds a squared offset-length
    mismatch on top of the directional interaction term (off by default).
    ``per_frame_selection`` switches the near/far pair choice between
    per-frame and fixed-at-frame-0.
    """

    lambda_rec: float = 1.0
    lambda_dmi: float = 5.0
    lambda_ef: float = 1.0
    pair_count: int = 20
    end_effectors: tuple[int, ...] | None = None
    magnitude_weight: float = 0.0
    per_frame_selection: bool = True


@dataclass(frozen=True)
class LossBreakdown:
    dmi: float
    rec: float
    ef: float
    total: float
    valid_pair_count: int

    @property
    def no_valid_pairs(self) -> bool:
        return self.valid_pair_count == 0


def default_end_effectors(character: SkinnedCharacter) -> tuple[int, ...]:
    """Hands, feet (or ankles) and head, located by joint-name substrings."""
    names = [n.lower() for n in character.joint_names]
    chosen: set[int] = set()
    for i, n in enumerate(names):
        if any(h in n for h in _HAND_HINTS + _HEAD_HINTS + _FOOT_HINTS):
            chosen.add(i)
    if not any(any(h in names[i] for h in _FOOT_HINTS) for i in chosen):
        for i, n in enumerate(names):
            if any(h in n for h in _FOOT_FALLBACK):
                chosen.add(i)
    if not chosen:
        raise EmptyEndEffectorSet("no joint name matches hand/foot/head patterns")
    return tuple(sorted(chosen))


def dmi_loss(source: DmiField, target: DmiField) -> tuple[float, int]:
    """(mean directional mismatch, number of valid pairs).

    Per frame, sum of (1 - cos) over valid entry pairs divided by that
    frame's valid-pair count, averaged over all frames. Emits a warning
    and returns 0 when no pair is valid anywhere.
    """
    if source.num_entries != target.num_entries:
        raise DimensionMismatch("fields are not entry-aligned")
    c = source.entry_valid & target.entry_valid
    valid_count = int(c.sum())
    if valid_count == 0:
        warnings.warn("interaction loss has no valid sensor pairs", stacklevel=2)
        return 0.0, 0
    t_frames = source.num_frames
    na = np.linalg.norm(source.offsets, axis=1)
    nb = np.linalg.norm(target.offsets, axis=1)
    usable = c & (na >= ZERO_OFFSET_GUARD) & (nb >= ZERO_OFFSET_GUARD)
    cos = np.zeros(source.num_entries)
    dots = np.einsum("ei,ei->e", source.offsets, target.offsets)
    cos[usable] = dots[usable] / (na[usable] * nb[usable])
    term = np.where(usable, 1.0 - cos, 0.0)
    per_frame_sum = np.bincount(source.frame_index, weights=term, minlength=t_frames)
    per_frame_count = np.bincount(source.frame_index[c], minlength=t_frames)
    per_frame = per_frame_sum / np.maximum(per_frame_count, 1)
    return float(per_frame.mean()), valid_count


def rec_loss(rotations_b_6d: np.ndarray, rotations_a_6d: np.ndarray) -> float:
    """Mean squared difference of 6D rotation parameters."""
    rotations_b_6d = np.asarray(rotations_b_6d, dtype=np.float64)
    rotations_a_6d = np.asarray(rotations_a_6d, dtype=np.float64)
    if rotations_b_6d.shape != rotations_a_6d.shape:
        raise DimensionMismatch("rotation parameter shapes differ")
    return float(np.mean((rotations_b_6d - rotations_a_6d) ** 2))


def end_effector_loss(
    character: SkinnedCharacter,
    rotations_a: np.ndarray,
    rotations_b: np.ndarray,
    end_effectors: tuple[int, ...] | None = None,
) -> float:
    """Mean Frobenius distance between global end-effector rotations.

    Rotations are (T, N, 4) quaternions; global rotations accumulate along
    the kinematic chain.
    """
    if end_effectors is None:
        end_effectors = default_end_effectors(character)
    if len(end_effectors) == 0:
        raise EmptyEndEffectorSet("end-effector set is empty")
    rotations_a = np.asarray(rotations_a, dtype=np.float64)
    rotations_b = np.asarray(rotations_b, dtype=np.float64)
    if rotations_a.shape != rotations_b.shape:
        raise DimensionMismatch("motion shapes differ")
    t_frames = rotations_a.shape[0]
    total = 0.0
    for t in range(t_frames):
        ga = global_joint_rotations(character, quat_to_matrix(rotations_a[t]))
        gb = global_joint_rotations(character, quat_to_matrix(rotations_b[t]))
        for i in end_effectors:
            total += np.linalg.norm(ga[i] - gb[i])
    return total / (t_frames * len(end_effectors))


def combine(config: RetargetConfig, dmi: float, rec: float, ef: float, valid_pair_count: int) -> LossBreakdown:
    total = config.lambda_rec * rec + config.lambda_dmi * dmi + config.lambda_ef * ef
    return LossBreakdown(dmi=dmi, rec=rec, ef=ef, total=total, valid_pair_count=valid_pair_count)
