"""Geometry constructors and control-point coupling."""

import numpy as np
import pytest

from isb.errors import AmbiguousCouplingError, ValidationError
from isb.geometry import (
    DirichletFace,
    DofMap,
    PatchSet,
    couple_patches,
    face_index_grid,
    make_arc_beam,
    make_box_beam,
    make_right_angle_frame,
    make_sc_lattice_cell,
)
from isb.splines import nurbs_trivariate, patch_volume


class TestBoxBeam:
    def test_paper_knot_layout(self):
        patch = make_box_beam(6.0, 1.0, 1.0, (2, 1, 1), (3, 1, 1))
        np.testing.assert_allclose(patch.kv_xi.knots, [0, 0, 0, 1, 2, 3, 3, 3])

    def test_volume(self):
        patch = make_box_beam(6.0, 1.5, 0.5, (2, 1, 1), (3, 1, 1))
        assert patch_volume(patch) == pytest.approx(6.0 * 1.5 * 0.5, abs=1e-12)

    @pytest.mark.parametrize("p,nel", [(1, 2), (2, 3), (3, 5)])
    def test_control_count(self, p, nel):
        patch = make_box_beam(6.0, 1.0, 1.0, (p, 1, 1), (nel, 1, 1))
        assert patch.shape == (nel + p, 2, 2)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            make_box_beam(-1.0, 1.0, 1.0)


class TestArcBeam:
    def test_axis_on_circle(self):
        patch = make_arc_beam(100.0, 45.0, 1.0, 1.0, degree=2, elements=8)
        hi = patch.kv_xi.domain[1]
        for t in np.linspace(0.0, hi, 200):
            pt = nurbs_trivariate(patch, t, 0.5, 0.5).point
            assert abs(np.hypot(pt[1], pt[2]) - 100.0) < 1e-10

    def test_small_sweep_arc_length(self):
        sweep = 0.1
        patch = make_arc_beam(100.0, sweep, 1.0, 1.0, degree=2, elements=1)
        hi = patch.kv_xi.domain[1]
        ts = np.linspace(0.0, hi, 400)
        pts = np.array([nurbs_trivariate(patch, t, 0.5, 0.5).point for t in ts])
        length = np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()
        assert length == pytest.approx(100.0 * np.radians(sweep), rel=1e-8)

    def test_conic_weights_required_for_exact_radius(self):
        patch = make_arc_beam(10.0, 90.0, 0.5, 0.5, degree=2, elements=1)
        flat = patch.__class__(
            patch.kv_xi, patch.kv_eta, patch.kv_zeta, patch.control_points, None
        )
        hi = patch.kv_xi.domain[1]
        r_arc = np.hypot(*nurbs_trivariate(patch, hi / 2, 0.5, 0.5).point[1:])
        r_flat = np.hypot(*nurbs_trivariate(flat, hi / 2, 0.5, 0.5).point[1:])
        assert r_arc == pytest.approx(10.0, abs=1e-12)
        # same control net with unit weights is the parabola bulging past the
        # circle toward its middle control point
        assert r_flat == pytest.approx(10.0 * 0.75 * np.sqrt(2.0), rel=1e-12)

    def test_volume(self):
        patch = make_arc_beam(100.0, 45.0, 1.0, 2.0, degree=3, elements=4)
        assert patch_volume(patch) == pytest.approx(100.0 * np.pi / 4 * 2.0, rel=1e-10)

    def test_degree_one_rejected(self):
        with pytest.raises(ValidationError):
            make_arc_beam(100.0, 45.0, 1.0, 1.0, degree=1)


class TestRightAngleFrame:
    def test_single_patch_kink_multiplicity(self):
        ps = make_right_angle_frame(255.0, 30.0, 0.6, degree=3, elements_per_leg=(5, 5))
        kv = ps.patches[0].kv_xi
        assert np.sum(kv.knots == 5.0) == 3

    def test_two_patch_shared_face_coincides(self):
        ps = make_right_angle_frame(255.0, 30.0, 0.6, degree=2, mode="two-patch")
        assert len(ps.patches) == 2
        face1 = ps.patches[0].control_points[-1]
        face2 = ps.patches[1].control_points[0]
        np.testing.assert_allclose(face1, face2, atol=1e-12)

    def test_modes_have_identical_point_sets(self):
        single = make_right_angle_frame(255.0, 30.0, 0.6, degree=2).patches[0]
        two = make_right_angle_frame(255.0, 30.0, 0.6, degree=2, mode="two-patch")
        hi1 = two.patches[0].kv_xi.domain[1]
        for s, eta, zeta in [(2.3, 0.2, 0.8), (4.9, 0.5, 0.5), (hi1, 1.0, 0.0)]:
            a = nurbs_trivariate(single, s, eta, zeta).point
            b = nurbs_trivariate(two.patches[0], s, eta, zeta).point
            np.testing.assert_allclose(a, b, atol=1e-10)

    def test_volume_is_l_plate(self):
        L, W, t = 255.0, 30.0, 0.6
        ps = make_right_angle_frame(L, W, t, degree=2)
        # two legs of length L +- W/2 overlap management: mitered plate area
        area = (L + W / 2) * W + (L - W / 2) * W
        assert patch_volume(ps.patches[0]) == pytest.approx(area * t, rel=1e-10)


class TestScLattice:
    def test_bounding_cube(self):
        ps = make_sc_lattice_cell(20.0, 1.0, 1.0)
        lo, hi = ps.bounding_box()
        np.testing.assert_allclose(hi - lo, 41.0)

    def test_interfaces_conformal(self):
        ps = make_sc_lattice_cell(5.0, 1.0, 1.0, axis_elements=4)
        cube = ps.patches[0]
        plus_x_beam = ps.patches[1]
        cube_face = cube.control_points[-1]
        beam_face = plus_x_beam.control_points[0]
        np.testing.assert_allclose(np.sort(cube_face.reshape(-1, 3), axis=0),
                                   np.sort(beam_face.reshape(-1, 3), axis=0), atol=1e-12)

    def test_material_volume(self):
        L, W = 20.0, 1.0
        ps = make_sc_lattice_cell(L, W, W, axis_elements=2)
        vol = sum(patch_volume(p) for p in ps.patches)
        assert vol == pytest.approx(6 * L * W * W + W**3, rel=1e-10)

    def test_rectangular_section_rejected(self):
        with pytest.raises(ValidationError):
            make_sc_lattice_cell(20.0, 1.0, 2.0)


class TestCouplePatches:
    def test_single_box_clamped_count(self):
        patch = make_box_beam(6.0, 1.0, 1.0, (2, 1, 1), (3, 1, 1))
        ps = PatchSet((patch,))
        dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
        assert len(dm.fixed) == 3 * 2 * 2
        assert dm.n_nodes == 5 * 2 * 2
        assert dm.n_free == dm.n_dofs - 12

    def test_lattice_merging_reduces_nodes(self):
        ps = make_sc_lattice_cell(5.0, 1.0, 1.0, axis_elements=2)
        dm = couple_patches(ps)
        raw = sum(int(np.prod(p.shape)) for p in ps.patches)
        assert dm.n_nodes < raw

    def test_coupled_face_indices_shared(self):
        ps = make_right_angle_frame(255.0, 30.0, 0.6, degree=2, mode="two-patch")
        dm = couple_patches(ps)
        ids1 = dm.node_ids[0][-1]
        ids2 = dm.node_ids[1][0]
        np.testing.assert_array_equal(ids1, ids2)

    def test_near_coincident_is_ambiguous(self):
        patch1 = make_box_beam(2.0, 1.0, 1.0, (1, 1, 1), (1, 1, 1))
        shifted = patch1.control_points.copy()
        shifted[..., 0] += 2.0 + 4.0 * PatchSet((patch1,), 1e-6).merge_tolerance()
        patch2 = patch1.__class__(patch1.kv_xi, patch1.kv_eta, patch1.kv_zeta, shifted)
        with pytest.raises(AmbiguousCouplingError):
            couple_patches(PatchSet((patch1, patch2), coupling_tolerance=1e-6))

    def test_contiguous_indices_and_disjoint_markers(self):
        ps = make_sc_lattice_cell(5.0, 1.0, 1.0, axis_elements=2)
        dm = couple_patches(ps, [DirichletFace(1, "xi_max", (0, 1, 2), 1.0)])
        seen = np.unique(np.concatenate([ids.ravel() for ids in dm.node_ids]))
        np.testing.assert_array_equal(seen, np.arange(dm.n_nodes))
        assert all(0 <= d < dm.n_dofs for d in dm.fixed)

    def test_conflicting_dirichlet_rejected(self):
        patch = make_box_beam(2.0, 1.0, 1.0)
        ps = PatchSet((patch,))
        with pytest.raises(ValidationError):
            couple_patches(
                ps,
                [
                    DirichletFace(0, "xi_min", (0,), 0.0),
                    DirichletFace(0, "xi_min", (0,), 1.0),
                ],
            )

    def test_face_grid_shape(self):
        grid = face_index_grid((4, 2, 3), "eta_max")
        assert grid.shape == (12, 3)
        assert np.all(grid[:, 1] == 1)
