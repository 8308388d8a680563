import numpy as np
import pytest

from meshmotion.errors import EmptySubmesh
from meshmotion.sensors import (
    SemanticCoordinate,
    bone_mesh,
    coordinate_grid,
    default_coordinate_grid,
    derive_sensor,
    derive_sensors,
    face_joint_assignment,
    ray_mesh_intersection,
    tangent_frame,
)

from conftest import make_cylinder_character


class TestCoordinateGrid:
    def test_default_grid_288(self):
        assert len(default_coordinate_grid(18)) == 288

    def test_single_bone_grid(self):
        assert len(default_coordinate_grid(1)) == 16

    def test_grid_contains_corners_once(self):
        grid = default_coordinate_grid(18)
        first = [c for c in grid if c.b == 0 and c.l == 0.0 and c.phi == 0.0]
        last = [c for c in grid if c.b == 17 and c.l == 0.75 and c.phi == 1.5 * np.pi]
        assert len(first) == 1 and len(last) == 1

    def test_custom_grid_spacing(self):
        grid = coordinate_grid(2, 2, 4)
        assert len(grid) == 16
        assert {c.l for c in grid} == {0.0, 0.5}

    def test_coordinate_bounds_enforced(self):
        with pytest.raises(ValueError):
            SemanticCoordinate(0, 1.0, 0.0)
        with pytest.raises(ValueError):
            SemanticCoordinate(0, 0.0, 2.0 * np.pi)


class TestBoneMesh:
    def test_single_bone_cylinder_whole_mesh(self, cylinder_character):
        idx = bone_mesh(cylinder_character, 0)
        assert len(idx) == len(cylinder_character.faces)

    def test_capsule_halves(self, capsule_character):
        lower = bone_mesh(capsule_character, 0)
        upper = bone_mesh(capsule_character, 1)
        assert len(lower) + len(upper) == len(capsule_character.faces)
        assert set(lower).isdisjoint(upper)
        mid_y = capsule_character.vertices[capsule_character.faces[lower]].mean(axis=1)[:, 1]
        assert mid_y.max() < 1.2
        mid_y_up = capsule_character.vertices[capsule_character.faces[upper]].mean(axis=1)[:, 1]
        assert mid_y_up.min() > 0.8

    def test_biped_forearm_count_matches_face_scan(self, biped):
        idx_name = biped.joint_names.index("l_elbow")
        b = list(biped.bone_child_joints).index(biped.joint_names.index("l_wrist"))
        submesh = bone_mesh(biped, b)
        expected = []
        for f, face in enumerate(biped.faces):
            summed = biped.skin_weights[face].sum(axis=0)
            if int(np.argmax(summed)) == idx_name:
                expected.append(f)
        assert sorted(submesh) == expected

    def test_empty_submesh_raises(self, biped):
        # The head joint is a leaf owning no vertices, so the bone anchored
        # at it cannot exist; fabricate a threshold query that is empty.
        with pytest.raises(EmptySubmesh):
            bone_mesh(biped, 0, weight_threshold=2.0)

    def test_threshold_mode(self, capsule_character):
        lower = bone_mesh(capsule_character, 0, weight_threshold=0.4)
        assert len(lower) > 0
        faces = capsule_character.faces[lower]
        assert (capsule_character.skin_weights[faces][:, :, 0] >= 0.4).all()


class TestRayMeshIntersection:
    def test_analytic_cylinder_hit(self, cylinder_character):
        hit = ray_mesh_intersection(
            cylinder_character.vertices, cylinder_character.faces,
            np.array([0.0, 0.5, 0.0]), np.array([0.0, 0.0, 1.0]),
        )
        assert hit is not None
        point, face, bary = hit
        assert abs(np.linalg.norm(point[[0, 2]]) - 0.1) < 1e-3
        assert bary.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(bary >= 0)

    def test_miss_returns_none(self, cylinder_character):
        hit = ray_mesh_intersection(
            cylinder_character.vertices, cylinder_character.faces,
            np.array([0.0, 5.0, 0.0]), np.array([0.0, 1.0, 0.0]),
        )
        assert hit is None

    def test_shared_edge_single_hit_lowest_face(self):
        verts = np.array([[0.0, -1.0, 2.0], [0.0, 1.0, 2.0], [1.0, 0.0, 2.0], [-1.0, 0.0, 2.0]])
        faces = np.array([[0, 2, 1], [0, 1, 3]])
        hit = ray_mesh_intersection(verts, faces, np.zeros(3), np.array([0.0, 0.0, 1.0]))
        assert hit is not None
        point, face, bary = hit
        assert face == 0
        np.testing.assert_allclose(point, [0.0, 0.0, 2.0], atol=1e-12)

    def test_behind_origin_not_hit(self):
        verts = np.array([[0.0, -1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, 1.0, -1.0]])
        faces = np.array([[0, 1, 2]])
        assert ray_mesh_intersection(verts, faces, np.zeros(3), np.array([0.0, 0.0, 1.0])) is None

    def test_nearest_of_two_walls(self):
        verts = np.array(
            [[-1, -1, 1], [1, -1, 1], [0, 1, 1], [-1, -1, 3], [1, -1, 3], [0, 1, 3]], dtype=np.float64
        )
        faces = np.array([[3, 4, 5], [0, 1, 2]])
        hit = ray_mesh_intersection(verts, faces, np.zeros(3), np.array([0.0, 0.0, 1.0]))
        point, face, bary = hit
        assert face == 1
        assert point[2] == pytest.approx(1.0)


class TestTangentFrame:
    def test_hand_constructed_frame(self):
        face = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        frame = tangent_frame(face, np.zeros(3), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(frame[:, 0], [0.0, 1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(frame[:, 1], [-1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(frame[:, 2], [0.0, 0.0, 1.0], atol=1e-12)

    def test_orthonormal_det_plus_one(self, biped, biped_sensors):
        valid = np.flatnonzero(biped_sensors.valid)
        frames = biped_sensors.tangents[valid]
        eye = np.einsum("sij,skj->sik", frames, frames)
        np.testing.assert_allclose(eye, np.tile(np.eye(3), (len(valid), 1, 1)), atol=1e-9)
        np.testing.assert_allclose(np.linalg.det(frames), 1.0, atol=1e-9)

    def test_fallback_when_bone_normal_to_face(self):
        face = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        frame = tangent_frame(face, np.zeros(3), np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(frame.T @ frame, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(frame[:, 0], [1.0, 0.0, 0.0], atol=1e-12)


class TestDeriveSensor:
    def test_cylinder_analytic_positions(self, cylinder_character):
        s = derive_sensor(cylinder_character, SemanticCoordinate(0, 0.5, 0.0))
        assert s.valid
        np.testing.assert_allclose(s.position, [0.0, 0.5, 0.1], atol=2e-4)
        s_pi = derive_sensor(cylinder_character, SemanticCoordinate(0, 0.5, np.pi))
        np.testing.assert_allclose(s_pi.position, [0.0, 0.5, -0.1], atol=2e-4)

    def test_phi_quarter_turn(self, cylinder_character):
        s = derive_sensor(cylinder_character, SemanticCoordinate(0, 0.25, 0.5 * np.pi))
        np.testing.assert_allclose(s.position, [-0.1, 0.25, 0.0], atol=2e-4)

    def test_invalid_when_no_submesh(self, capsule_character):
        # Bone 1 anchored at 'middle'; query a coordinate whose threshold
        # filter empties the submesh.
        s = derive_sensor(capsule_character, SemanticCoordinate(1, 0.5, 0.0), weight_threshold=2.0)
        assert not s.valid
        np.testing.assert_array_equal(s.position, np.zeros(3))
        np.testing.assert_array_equal(s.tangent, np.zeros((3, 3)))
        np.testing.assert_array_equal(s.skin_weights, np.zeros(capsule_character.num_joints))

    def test_weights_are_convex(self, biped_sensors):
        valid = biped_sensors.valid
        w = biped_sensors.skin_weights[valid]
        assert (w >= -1e-12).all()
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-6)

    def test_positions_on_surface(self, cylinder_character):
        sensors = derive_sensors(cylinder_character)
        valid = sensors.valid
        radii = np.linalg.norm(sensors.positions[valid][:, [0, 2]], axis=1)
        assert np.abs(radii - 0.1).max() < 2e-4


class TestSemanticConsistency:
    def test_uniform_scale_scales_positions(self):
        base = make_cylinder_character()
        scaled = make_cylinder_character(scale=2.0)
        s0 = derive_sensors(base)
        s1 = derive_sensors(scaled)
        assert np.array_equal(s0.valid, s1.valid)
        np.testing.assert_allclose(s1.positions[s1.valid], 2.0 * s0.positions[s0.valid], atol=1e-6)
        np.testing.assert_allclose(s1.tangents[s1.valid], s0.tangents[s0.valid], atol=1e-6)

    def test_index_alignment_across_characters(self, biped, biped_long_arms):
        grid = default_coordinate_grid(18)
        sa = derive_sensors(biped, grid)
        sb = derive_sensors(biped_long_arms, grid)
        assert len(sa) == len(sb) == 288
        for ca, cb in zip(sa.coordinates, sb.coordinates):
            assert ca == cb

    def test_validity_stable_under_subdivision(self):
        base = make_cylinder_character(segments=32)
        fine = make_cylinder_character(segments=64)
        s0 = derive_sensors(base)
        s1 = derive_sensors(fine)
        # Finer tessellation may only move hits within chord tolerance.
        assert (s1.valid | ~s0.valid).all()
        both = s0.valid & s1.valid
        assert np.abs(s0.positions[both] - s1.positions[both]).max() < 5e-4

    def test_output_order_matches_coordinate_order(self, cylinder_character):
        grid = [SemanticCoordinate(0, 0.75, 0.0), SemanticCoordinate(0, 0.0, np.pi)]
        sensors = derive_sensors(cylinder_character, grid)
        assert sensors.coordinates == tuple(grid)
        assert sensors.positions[0][1] == pytest.approx(0.75, abs=1e-3)
