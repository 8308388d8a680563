"""Generalized winding number for inside/outside queries on triangle soups.

The winding number of an outward-oriented closed mesh is ~1 inside and ~0
outside, degrades gracefully on meshes with holes (values between 0 and 1
near openings), and needs no connectivity — only consistently oriented
faces. Points are classified inside when the number exceeds 0.5.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 262144  # query-face pairs per block, keeps temporaries small


def winding_numbers(points: np.ndarray, vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Winding number of the mesh around each query point.

    Uses the solid-angle formula of van Oosterom & Strackee summed over
    faces; exact up to floating point for any query off the surface.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    tri = np.asarray(vertices, dtype=np.float64)[np.asarray(faces, dtype=np.int64)]  # (F, 3, 3)
    n_points = points.shape[0]
    n_faces = tri.shape[0]
    out = np.zeros(n_points)
    rows = max(1, _CHUNK // max(n_faces, 1))
    for start in range(0, n_points, rows):
        q = points[start : start + rows]
        a = tri[None, :, 0, :] - q[:, None, :]
        b = tri[None, :, 1, :] - q[:, None, :]
        c = tri[None, :, 2, :] - q[:, None, :]
        la = np.linalg.norm(a, axis=-1)
        lb = np.linalg.norm(b, axis=-1)
        lc = np.linalg.norm(c, axis=-1)
        numer = np.einsum("qfi,qfi->qf", a, np.cross(b, c))
        denom = (
            la * lb * lc
            + np.einsum("qfi,qfi->qf", a, b) * lc
            + np.einsum("qfi,qfi->qf", b, c) * la
            + np.einsum("qfi,qfi->qf", c, a) * lb
        )
        out[start : start + rows] = np.arctan2(numer, denom).sum(axis=1) / (2.0 * np.pi)
    return out


def points_inside(points: np.ndarray, vertices: np.ndarray, faces: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Boolean inside mask by thresholding the winding number."""
    return winding_numbers(points, vertices, faces) > threshold
