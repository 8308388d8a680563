"""Exception types shared across the package."""


class MeshMotionError(Exception):
    """Base class for all errors raised by meshmotion."""


class DegenerateInput(MeshMotionError):
    """Numerically degenerate input (parallel or near-zero vectors)."""


class EmptyMesh(MeshMotionError):
    """Operation requires a non-empty vertex set."""


class EmptySubmesh(MeshMotionError):
    """No face of the mesh is associated with the requested bone."""


class DegenerateFrame(MeshMotionError):
    """No stable tangent frame exists at the surface point."""


class DimensionMismatch(MeshMotionError):
    """Array shapes are inconsistent with each other or the character."""


class SkeletonMismatch(MeshMotionError):
    """Source and target characters do not share a skeleton topology."""


class EmptyEndEffectorSet(MeshMotionError):
    """The end-effector joint set resolved to nothing."""


class EmptyArmSet(MeshMotionError):
    """The character has no vertices assigned to arm bones."""


class NoForearmSensors(MeshMotionError):
    """No valid sensors found on forearm bones."""


class InvalidSpec(MeshMotionError):
    """Synthetic character spec has non-positive multipliers."""


class ParseError(MeshMotionError):
    """A file could not be parsed; message carries line/column context."""


class InvariantViolation(MeshMotionError):
    """A data invariant failed; message names the invariant."""
