"""Unit-cell constraints and effective stress."""

import numpy as np
import pytest

from isb.element import Formulation
from isb.errors import ValidationError
from isb.geometry import make_sc_lattice_cell
from isb.homogenize import (
    MacroDeformation,
    boundary_faces,
    build_rve_constraints,
    cell_volume,
    effective_stress,
    simple_shear,
)
from isb.materials import MaterialModel
from isb.solver import Model, SolverConfig, newton_solve

MAT = MaterialModel.from_engineering("svk", 80.0, 0.22)


def small_cell():
    return make_sc_lattice_cell(3.0, 1.0, 1.0, axis_degree=2, axis_elements=2)


def solve_cell(macro, dirichlet_axis=1, steps=2):
    ps = small_cell()
    dm, constraints = build_rve_constraints(ps, macro, dirichlet_axis)
    model = Model(ps, dm, [MAT], Formulation.ANS_EAS_MIP, constraints=constraints)
    out = {}

    def cb(rec, asm):
        out["asm"] = asm
        out["u"] = rec.displacement
        out["history"] = rec

    hist = newton_solve(model, SolverConfig(load_steps=steps, max_iterations=25), cb)
    return model, hist, out


class TestMacroDeformation:
    def test_rejects_non_invertible(self):
        with pytest.raises(ValidationError):
            MacroDeformation(np.zeros((3, 3)))

    def test_path_interpolation(self):
        macro = simple_shear(0.1)
        np.testing.assert_allclose(macro.gradient_at(0.0), np.eye(3))
        f = macro.gradient_at(0.5)
        assert f[0, 1] == pytest.approx(0.05)


class TestBoundaryDetection:
    def test_six_faces_found(self):
        faces = boundary_faces(small_cell())
        for axis in range(3):
            assert len(faces[axis][0]) == 1
            assert len(faces[axis][1]) == 1

    def test_cell_volume_includes_void(self):
        assert cell_volume(small_cell()) == pytest.approx(7.0**3)


class TestRveConstraints:
    def test_identity_gradient_gives_zero_solution(self):
        macro = MacroDeformation(np.eye(3), 1)
        model, hist, out = solve_cell(macro, steps=1)
        assert hist.final.iterations == 1
        np.testing.assert_allclose(hist.final.displacement, 0.0, atol=1e-12)
        eff = effective_stress(out["asm"], out["u"])
        np.testing.assert_allclose(eff.p_star, 0.0, atol=1e-14)

    def test_periodic_gap_satisfied_after_solve(self):
        macro = simple_shear(0.1)
        model, hist, out = solve_cell(macro)
        u = hist.final.displacement
        d = macro.f_target - np.eye(3)
        coords = model.dof_map.node_coords
        for con in model.constraints:
            xs = coords[con.slave // 3]
            xm = coords[con.master // 3]
            gap = u[con.slave] - u[con.master]
            expect = (d @ (xs - xm))[con.slave % 3]
            assert gap == pytest.approx(expect, abs=1e-10)

    def test_dirichlet_faces_carry_affine_data(self):
        macro = simple_shear(0.08)
        model, hist, _ = solve_cell(macro)
        u = hist.final.displacement
        d = macro.f_target - np.eye(3)
        for dof, rate in model.dof_map.fixed.items():
            node = dof // 3
            comp = dof % 3
            expect = (d @ model.dof_map.node_coords[node])[comp]
            assert rate == pytest.approx(expect, abs=1e-12)
            assert u[dof] == pytest.approx(expect, abs=1e-12)

    def test_bad_axis_rejected(self):
        with pytest.raises(ValidationError):
            build_rve_constraints(small_cell(), simple_shear(0.1), 5)


class TestEffectiveStress:
    def test_objectivity_under_superposed_rotation(self):
        amount = 0.02
        theta = 0.01
        rot = np.array(
            [
                [np.cos(theta), -np.sin(theta), 0.0],
                [np.sin(theta), np.cos(theta), 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        base = simple_shear(amount, 1)
        rotated = MacroDeformation(rot @ base.f_target, 1)
        _, _, out1 = solve_cell(base, steps=1)
        p1 = effective_stress(out1["asm"], out1["u"]).p_star
        _, _, out2 = solve_cell(rotated, steps=1)
        p2 = effective_stress(out2["asm"], out2["u"]).p_star
        np.testing.assert_allclose(p2, rot @ p1, rtol=0.0, atol=2e-4 * np.abs(p1).max() + theta**2 * np.abs(p1).max())

    def test_stiffness_scales_linearly(self):
        macro = simple_shear(0.05)
        ps = small_cell()
        results = []
        for scale in (1.0, 2.0):
            dm, constraints = build_rve_constraints(ps, macro, 1)
            mat = MaterialModel.from_engineering("svk", 80.0 * scale, 0.22)
            model = Model(ps, dm, [mat], Formulation.ANS_EAS_MIP, constraints=constraints)
            out = {}

            def cb(rec, asm, out=out):
                out["asm"], out["u"] = asm, rec.displacement

            newton_solve(model, SolverConfig(load_steps=2, max_iterations=25), cb)
            results.append(effective_stress(out["asm"], out["u"]).p_star)
        np.testing.assert_allclose(
            2.0 * results[0],
            results[1],
            rtol=1e-6,
            atol=1e-12 * np.abs(results[1]).max(),
        )
