"""Differentiable retargeting objective over 6D joint-rotation parameters.

Reimplements the forward pipeline (6D decode, forward kinematics, blended
sensor transforms, tangent-frame offsets) in torch so the total loss is
differentiable end to end with respect to the candidate rotations. The
source field's entry structure is frozen: the target side re-evaluates
offsets for exactly the source (frame, observer, target) triples that are
admissible on the target character.

Blended tangent bases are orthonormalized with a Newton-Schulz polar
iteration rather than an SVD: it converges to the same closest rotation
but keeps gradients stable when singular values coincide, which for
near-rigid blends is the common case, not the exception.

Everything runs in float64; evaluation is deterministic for fixed inputs.
"""

from __future__ import annotations

import warnings

import numpy as np
import torch

from .character import SkinnedCharacter
from .errors import DimensionMismatch
from .interaction import DmiField
from .losses import LossBreakdown, RetargetConfig, ZERO_OFFSET_GUARD, default_end_effectors
from .rotations import quat_to_rot6d
from .sensors import SensorSet

_POLAR_ITERATIONS = 16
_NORM_EPS = 1e-24
_DTYPE = torch.float64


def rot6d_to_matrix_torch(r: torch.Tensor) -> torch.Tensor:
    """Gram-Schmidt decode, batched; norms clamped so autograd stays finite."""
    a1 = r[..., 0:3]
    a2 = r[..., 3:6]
    b1 = a1 / a1.norm(dim=-1, keepdim=True).clamp_min(1e-12)
    a2p = a2 - (b1 * a2).sum(dim=-1, keepdim=True) * b1
    b2 = a2p / a2p.norm(dim=-1, keepdim=True).clamp_min(1e-12)
    b3 = torch.cross(b1, b2, dim=-1)
    return torch.stack([b1, b2, b3], dim=-1)


def orthonormalize(m: torch.Tensor) -> torch.Tensor:
    """Closest rotation by scaled Newton-Schulz polar iteration."""
    norm = m.reshape(*m.shape[:-2], 9).norm(dim=-1).clamp_min(1e-12)
    x = m / norm[..., None, None]
    eye = torch.eye(3, dtype=m.dtype, device=m.device)
    for _ in range(_POLAR_ITERATIONS):
        x = 0.5 * x @ (3.0 * eye - x.transpose(-1, -2) @ x)
    return x


class RetargetObjective:
    """Loss evaluator bound to one (target character, source field) problem.

    Precomputes every constant (skeleton topology, sensor rest features,
    admissible entry triples, source-side offsets and global end-effector
    rotations) so each evaluation only runs the differentiable part.
    """

    def __init__(
        self,
        character_b: SkinnedCharacter,
        sensors_b: SensorSet,
        source_field: DmiField,
        root_translation_b: np.ndarray,
        rotations_a: np.ndarray,
        config: RetargetConfig | None = None,
    ):
        self.config = config or RetargetConfig()
        self.character = character_b
        n = character_b.num_joints
        rotations_a = np.asarray(rotations_a, dtype=np.float64)
        if rotations_a.ndim != 3 or rotations_a.shape[1] != n:
            raise DimensionMismatch("source rotations do not match the target skeleton")
        self.num_frames = rotations_a.shape[0]
        root_translation_b = np.asarray(root_translation_b, dtype=np.float64)
        if root_translation_b.shape != (self.num_frames, 3):
            raise DimensionMismatch("root translation must be (T, 3)")

        self._parents = [int(p) for p in character_b.parents]
        self._topo = character_b.topological_order()
        self._joints = torch.tensor(character_b.joints, dtype=_DTYPE)
        self._root = character_b.root
        self._root_pos = torch.tensor(root_translation_b + character_b.joints[self._root], dtype=_DTYPE)

        self.q6_a = torch.tensor(quat_to_rot6d(rotations_a), dtype=_DTYPE)

        ef = self.config.end_effectors
        self._ef = list(ef) if ef is not None else list(default_end_effectors(character_b))
        if not self._ef:
            raise DimensionMismatch("end-effector set is empty")

        # Entries measurable on the target character.
        valid_b = sensors_b.valid
        keep = source_field.entry_valid & valid_b[source_field.observer_index] & valid_b[source_field.target_index]
        self.valid_pair_count = int(keep.sum())
        if self.valid_pair_count == 0:
            warnings.warn("retarget objective has no valid sensor pairs", stacklevel=2)
        kept = np.flatnonzero(keep)
        t_idx = source_field.frame_index[kept]
        k_idx = source_field.observer_index[kept]
        j_idx = source_field.target_index[kept]
        d_src = source_field.offsets[kept]

        needed = np.unique(np.concatenate([k_idx, j_idx]))
        compact = np.full(len(sensors_b), -1, dtype=np.int64)
        compact[needed] = np.arange(needed.size)
        self._entry_t = torch.tensor(t_idx, dtype=torch.long)
        self._entry_k = torch.tensor(compact[k_idx], dtype=torch.long)
        self._entry_j = torch.tensor(compact[j_idx], dtype=torch.long)
        self._d_src = torch.tensor(d_src, dtype=_DTYPE)
        self._na = torch.sqrt((self._d_src**2).sum(dim=-1) + _NORM_EPS)
        self._src_ok = torch.tensor(np.linalg.norm(d_src, axis=-1) >= ZERO_OFFSET_GUARD)
        counts = np.bincount(t_idx, minlength=self.num_frames)
        self._frame_counts = torch.tensor(np.maximum(counts, 1), dtype=_DTYPE)

        self._weights = torch.tensor(sensors_b.skin_weights[needed], dtype=_DTYPE)
        self._p_rest = torch.tensor(sensors_b.positions[needed], dtype=_DTYPE)
        self._t_rest = torch.tensor(sensors_b.tangents[needed], dtype=_DTYPE)

        # Source-side global end-effector rotations, same code path as the
        # candidate's so an identical pose reproduces them bit for bit.
        with torch.no_grad():
            world_r_a, _ = self._forward_kinematics(self.q6_a)
            self._r_a_ef = world_r_a[:, self._ef].clone()

    # -- differentiable pipeline -----------------------------------------

    def _forward_kinematics(self, q6: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        rot = rot6d_to_matrix_torch(q6)
        world_r: list[torch.Tensor | None] = [None] * len(self._parents)
        world_p: list[torch.Tensor | None] = [None] * len(self._parents)
        for j in self._topo:
            p = self._parents[j]
            if p < 0:
                world_r[j] = rot[:, j]
                world_p[j] = self._root_pos
            else:
                offset = self._joints[j] - self._joints[p]
                world_r[j] = world_r[p] @ rot[:, j]
                world_p[j] = world_p[p] + (world_r[p] @ offset)
        return torch.stack(world_r, dim=1), torch.stack(world_p, dim=1)

    def loss_tensors(self, q6: torch.Tensor) -> dict[str, torch.Tensor]:
        cfg = self.config
        world_r, world_p = self._forward_kinematics(q6)
        g_lin = world_r
        g_tr = world_p - torch.einsum("tnij,nj->tni", world_r, self._joints)

        rec = ((q6 - self.q6_a) ** 2).mean()

        diff = self._r_a_ef - world_r[:, self._ef]
        ss = (diff**2).sum(dim=(-2, -1))
        ef = (torch.sqrt(ss + _NORM_EPS) - np.sqrt(_NORM_EPS)).sum() / (self.num_frames * len(self._ef))

        if self.valid_pair_count:
            blend_lin = torch.einsum("sn,tnij->tsij", self._weights, g_lin)
            blend_tr = torch.einsum("sn,tni->tsi", self._weights, g_tr)
            pos = torch.einsum("tsij,sj->tsi", blend_lin, self._p_rest) + blend_tr
            tang = orthonormalize(torch.einsum("tsij,sjk->tsik", blend_lin, self._t_rest))
            p_i = pos[self._entry_t, self._entry_k]
            p_j = pos[self._entry_t, self._entry_j]
            t_i = tang[self._entry_t, self._entry_k]
            d_b = torch.einsum("eji,ej->ei", t_i, p_j - p_i)
            nb = torch.sqrt((d_b**2).sum(dim=-1) + _NORM_EPS)
            guard = (self._src_ok & (nb.detach() >= ZERO_OFFSET_GUARD)).to(_DTYPE)
            cos = (self._d_src * d_b).sum(dim=-1) / (self._na * nb)
            term = (1.0 - cos) * guard
            if cfg.magnitude_weight:
                term = term + cfg.magnitude_weight * (nb - self._na) ** 2 * guard
            frame_sum = torch.zeros(self.num_frames, dtype=_DTYPE).index_add(0, self._entry_t, term)
            dmi = (frame_sum / self._frame_counts).mean()
        else:
            dmi = torch.zeros((), dtype=_DTYPE)

        total = cfg.lambda_rec * rec + cfg.lambda_dmi * dmi + cfg.lambda_ef * ef
        return {"dmi": dmi, "rec": rec, "ef": ef, "total": total}

    # -- numpy-facing evaluation ------------------------------------------

    def breakdown(self, losses: dict[str, torch.Tensor]) -> LossBreakdown:
        return LossBreakdown(
            dmi=losses["dmi"].item(),
            rec=losses["rec"].item(),
            ef=losses["ef"].item(),
            total=losses["total"].item(),
            valid_pair_count=self.valid_pair_count,
        )

    def evaluate(self, rotations_b_6d: np.ndarray, with_gradient: bool = False):
        """Loss breakdown (and optionally the gradient) at a 6D candidate."""
        q6 = torch.tensor(np.asarray(rotations_b_6d, dtype=np.float64), dtype=_DTYPE, requires_grad=with_gradient)
        if with_gradient:
            losses = self.loss_tensors(q6)
            (grad,) = torch.autograd.grad(losses["total"], q6)
            return self.breakdown(losses), grad.numpy()
        with torch.no_grad():
            losses = self.loss_tensors(q6)
        return self.breakdown(losses)


def total_objective(
    config: RetargetConfig,
    character_b: SkinnedCharacter,
    sensors_b: SensorSet,
    rotations_b_6d: np.ndarray,
    root_translation_b: np.ndarray,
    source_field: DmiField,
    rotations_a: np.ndarray,
    with_gradient: bool = False,
):
    """One-shot evaluation of the full objective at a candidate pose.

    ``rotations_b_6d`` is the (T, N, 6) candidate, ``rotations_a`` the
    (T, N, 4) source quaternions. Returns a LossBreakdown, or with
    ``with_gradient`` a (LossBreakdown, (T, N, 6) gradient) pair.
    """
    engine = RetargetObjective(character_b, sensors_b, source_field, root_translation_b, rotations_a, config)
    return engine.evaluate(rotations_b_6d, with_gradient=with_gradient)
