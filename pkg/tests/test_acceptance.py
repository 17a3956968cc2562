"""Acceptance suite: every criterion at its stated tolerance.

Each criterion prints one PASS/FAIL line with the measured values (run with
``pytest -s`` to see them even on success).  Reference displacement values
are published benchmark results; analytic targets come from the elastica
closed form evaluated independently below.
"""

import sys
import time

import numpy as np
import pytest

sys.path.insert(0, str(__import__("pathlib").Path(__file__).parent))
import _acceptance_report
from beam_oracle import sc_lattice_effective_stress

from isb.cases import build_case
from isb.cli import relative_error
from isb.config import validate_config, emit_config
from isb.element import Formulation, PatchKernel, element_blocks, element_residual_tangent
from isb.geometry import DirichletFace, PatchSet, couple_patches, make_box_beam
from isb.homogenize import effective_stress
from isb.materials import MaterialModel, material_response
from isb.presets import preset
from isb.solver import (
    Assembler,
    FollowerPressure,
    Model,
    ProbeSpec,
    SolverConfig,
    newton_solve,
)
from isb.splines import basis_functions, open_uniform_knots

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib


def report(criterion, ok, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} -- {detail}"
    print(line)
    sys.stdout.flush()
    _acceptance_report.LINES.append(line)
    return ok


def raw_preset(name, **overrides):
    raw = tomllib.loads(emit_config(preset(name)))
    for section, vals in overrides.items():
        raw.setdefault(section, {}).update(vals)
    return validate_config(raw)


def run(cfg, callback=None):
    built = build_case(cfg)
    history = newton_solve(built.model, built.solver, callback)
    return built, history


# ---------------------------------------------------------------------------
# shared expensive runs
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def arc_svk_600():
    t0 = time.perf_counter()
    built, hist = run(raw_preset("bathe-arc"))
    elapsed = time.perf_counter() - t0
    return built, hist, elapsed


@pytest.fixture(scope="module")
def arc_single_step():
    out = {}
    for name, form in (("mip", "ans-eas-mip"), ("nomip", "ans-eas")):
        cfg = raw_preset(
            "bathe-arc",
            formulation={"name": form},
            solver={"load_steps": 1, "max_iterations": 40, "step_cutback": False},
        )
        out[name] = run(cfg)
    return out


@pytest.fixture(scope="module")
def frame_curves():
    curves = {}
    for mode in ("single-patch", "two-patch"):
        cfg = raw_preset(
            "right-angle-frame",
            mesh={"degree": 4, "mode": mode},
            solver={"load_steps": 200},
            output={"vtk": False},
        )
        built, hist = run(cfg)
        force = cfg.loads["force"]
        p = np.array([s.load_factor * force for s in hist.steps])
        w = np.array([s.probes["tip"].displacement[2] for s in hist.steps])
        curves[mode] = (p, w)
    return curves


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


class TestCriterion1BatheArcSvk:
    def test_tip_displacements_and_runtime(self, arc_svk_600):
        built, hist, elapsed = arc_svk_600
        tip = hist.final.probes["tip"].displacement
        ref = {"u": 53.14, "v": -23.26, "w": 13.67}
        errs = {
            "u": relative_error(tip[0], ref["u"]),
            "v": relative_error(tip[1], ref["v"]),
            "w": relative_error(tip[2], ref["w"]),
        }
        ok = all(e <= 0.005 for e in errs.values()) and elapsed < 10.0
        report(
            "1 bathe-arc SVK",
            ok,
            f"tip=({tip[0]:.4f}, {tip[1]:.4f}, {tip[2]:.4f}) vs (53.14, -23.26, 13.67), "
            f"errors u {errs['u']:.3%} v {errs['v']:.3%} w {errs['w']:.3%}, {elapsed:.1f}s",
        )
        assert errs["u"] <= 0.005
        assert errs["v"] <= 0.005
        assert errs["w"] <= 0.005
        assert elapsed < 10.0


class TestCriterion2MipRobustness:
    def test_single_step_iteration_counts(self, arc_single_step):
        (_, hist_mip) = arc_single_step["mip"]
        (_, hist_nomip) = arc_single_step["nomip"]
        it_mip = hist_mip.final.iterations
        it_nomip = hist_nomip.final.iterations
        tip_mip = hist_mip.final.probes["tip"].displacement
        tip_nomip = hist_nomip.final.probes["tip"].displacement
        agree = np.abs(tip_mip - tip_nomip).max() / np.abs(tip_nomip).max()
        ok = it_mip <= 10 and it_nomip >= 15 and agree <= 1e-8
        report(
            "2 mixed-point robustness",
            ok,
            f"iterations with mixed stresses {it_mip} (<=10), without {it_nomip} (>=15), "
            f"tip agreement {agree:.2e} (<=1e-8)",
        )
        assert it_mip <= 10
        assert it_nomip >= 15
        assert agree <= 1e-8


class TestCriterion3BatheArcNeoHookean:
    def test_tip_and_thickness_locking(self):
        cfg = raw_preset(
            "bathe-arc",
            material={"model": "neo-hookean", "youngs_modulus": 1.0e7, "poissons_ratio": 0.3},
        )
        _, hist = run(cfg)
        tip = hist.final.probes["tip"].displacement
        ref = {"u": 53.1366, "v": -23.6708, "w": 13.8976}
        errs = {
            "u": relative_error(tip[0], ref["u"]),
            "v": relative_error(tip[1], ref["v"]),
            "w": relative_error(tip[2], ref["w"]),
        }
        cfg_ans = raw_preset(
            "bathe-arc",
            material={"model": "neo-hookean", "youngs_modulus": 1.0e7, "poissons_ratio": 0.3},
            formulation={"name": "ans"},
        )
        _, hist_ans = run(cfg_ans)
        w_ans = hist_ans.final.probes["tip"].displacement[2]
        err_ans = relative_error(w_ans, 12.7167)
        ok = all(e <= 0.005 for e in errs.values()) and err_ans <= 0.02
        report(
            "3 bathe-arc neo-hookean",
            ok,
            f"tip=({tip[0]:.4f}, {tip[1]:.4f}, {tip[2]:.4f}) errors u {errs['u']:.3%} "
            f"v {errs['v']:.3%} w {errs['w']:.3%} (<=0.5%); "
            f"ANS-only w {w_ans:.4f} vs 12.7167 err {err_ans:.3%} (<=2%)",
        )
        assert err_ans <= 0.02
        assert errs["u"] <= 0.005
        assert errs["v"] <= 0.005
        assert errs["w"] <= 0.005

    def test_ans_only_shows_thickness_locking(self):
        # the EAS-free variant must stay clearly below the full element
        cfg = raw_preset(
            "bathe-arc",
            material={"model": "neo-hookean", "youngs_modulus": 1.0e7, "poissons_ratio": 0.3},
            formulation={"name": "ans"},
        )
        _, hist = run(cfg)
        assert hist.final.probes["tip"].displacement[2] < 13.0


class TestCriterion4BendingCantilever:
    def test_elastica_half_turn(self):
        cfg = raw_preset("bending-cantilever", output={"vtk": False})
        _, hist = run(cfg)
        rec = hist.final
        length = cfg.geometry["length"]
        phi_ratio = rec.probes["tip"].rotation / (2 * np.pi)
        w_ratio = rec.probes["tip"].displacement[2] / length
        axial_ratio = -rec.probes["tip"].displacement[0] / length
        # elastica closed form at eta = 1/2: phi = pi, transverse (1-cos)/pi,
        # axial 1 - sin(pi)/pi = 1
        phi = np.pi
        w_exact = (1.0 - np.cos(phi)) / phi
        e_phi = relative_error(phi_ratio, 0.5)
        e_w = relative_error(w_ratio, w_exact)
        e_ax = relative_error(axial_ratio, 1.0)
        ok = e_phi <= 0.01 and e_w <= 0.015 and e_ax <= 0.015
        report(
            "4 bending cantilever",
            ok,
            f"phi/2pi {phi_ratio:.5f} (err {e_phi:.3%} <=1%), w/L {w_ratio:.5f} vs 2/pi "
            f"(err {e_w:.3%} <=1.5%), axial {axial_ratio:.5f} (err {e_ax:.3%} <=1.5%)",
        )
        assert e_phi <= 0.01
        assert e_w <= 0.015
        assert e_ax <= 0.015


class TestCriterion5SlendernessSweep:
    def test_rotation_ratio_across_slenderness(self):
        ratios = {}
        for lh in (20.0, 100.0, 1000.0, 10000.0):
            cfg = raw_preset(
                "bending-cantilever",
                geometry={"length": lh},
                solver={"max_iterations": 40},
                output={"vtk": False},
            )
            _, hist = run(cfg)
            ratios[lh] = hist.final.probes["tip"].rotation / (2 * np.pi)
        cfg_std = raw_preset(
            "bending-cantilever",
            geometry={"length": 10000.0},
            formulation={"name": "standard"},
            solver={"max_iterations": 40},
            output={"vtk": False},
        )
        _, hist_std = run(cfg_std)
        std_ratio = hist_std.final.probes["tip"].rotation / (2 * np.pi)
        errs = {lh: abs(r - 0.5) / 0.5 for lh, r in ratios.items()}
        ok = all(e <= 0.02 for e in errs.values()) and std_ratio < 0.25
        report(
            "5 slenderness sweep",
            ok,
            "phi ratio "
            + ", ".join(f"L/H={int(lh)}: {r:.4f}" for lh, r in ratios.items())
            + f" (each within 2% of 0.5); standard at 1e4: {std_ratio:.4f} (<50% of 0.5)",
        )
        assert std_ratio < 0.25
        for lh, e in errs.items():
            assert e <= 0.02, f"L/H={lh}: rotation ratio {ratios[lh]} off by {e:.3%}"


class TestCriterion6RightAngleFrame:
    def test_plateau_onset_and_patch_equivalence(self, frame_curves):
        p1, w1 = frame_curves["single-patch"]
        p2, w2 = frame_curves["two-patch"]
        onset = p1[np.argmax(w1 > 10.0)]
        err = relative_error(onset, 1.075)
        scale = np.abs(w1).max()
        mismatch = np.abs(w1 - w2) / np.maximum(np.abs(w1), 0.02 * scale)
        agree = mismatch.max()
        ok = err <= 0.05 and agree <= 0.005
        report(
            "6 right-angle frame",
            ok,
            f"plateau onset {onset:.4f} vs 1.075 (err {err:.3%} <=5%), max w {w1.max():.1f}, "
            f"single/two-patch pointwise mismatch {agree:.2e} (<=0.5%)",
        )
        assert err <= 0.05
        assert agree <= 0.005


class TestCriterion7LatticeHomogenization:
    def test_shear_response_and_beam_oracle(self):
        stresses = {}

        def cb(rec, asm):
            stresses["final"] = effective_stress(asm, rec.displacement).p_star

        cfg = raw_preset("sc-lattice", output={"vtk": False})
        run(cfg, cb)
        p_thin = stresses["final"]
        p22_dominant = abs(p_thin[1, 1]) == np.abs(p_thin).max()
        under_cap = np.abs(p_thin).max() < 3e-4

        # small-strain check against the independent frame oracle
        cfg_lin = raw_preset(
            "sc-lattice",
            loads={"shear": 1e-4},
            solver={"load_steps": 1},
            output={"vtk": False},
        )
        run(cfg_lin, cb)
        p_lin = stresses["final"]
        p_beam = sc_lattice_effective_stress(20.0, 1.0, 80.0, 0.22, 1e-4)
        e12 = relative_error(p_lin[0, 1], p_beam[0, 1])
        e21 = relative_error(p_lin[1, 0], p_beam[1, 0])

        # thick struts: the solid model develops a normal component the
        # linear frame cannot represent
        cfg_thick = raw_preset(
            "sc-lattice",
            geometry={"strut_length": 5.0},
            mesh={"elements": 4, "cross_elements": 2},
            output={"vtk": False},
        )
        run(cfg_thick, cb)
        p_thick = stresses["final"]
        p11_beam = sc_lattice_effective_stress(5.0, 1.0, 80.0, 0.22, 0.1)[0, 0]
        thick_ok = p_thick[0, 0] > p11_beam

        ok = p22_dominant and under_cap and e12 <= 0.10 and e21 <= 0.10 and thick_ok
        report(
            "7 lattice homogenization",
            ok,
            f"P22 {p_thin[1,1]:.3e} dominant={p22_dominant}, max |P| {np.abs(p_thin).max():.3e} "
            f"(<3e-4); oracle errors P12 {e12:.3%} P21 {e21:.3%} (<=10%); "
            f"L=5: P11 {p_thick[0,0]:.3e} > frame {p11_beam:.3e}: {thick_ok}",
        )
        assert p22_dominant
        assert under_cap
        assert e12 <= 0.10
        assert e21 <= 0.10
        assert thick_ok


class TestCriterion8PropertySuites:
    def test_partition_of_unity(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        kv = open_uniform_knots(6, 3)
        lo, hi = kv.domain
        for xi in rng.uniform(lo, hi, size=1000):
            _, vals = basis_functions(kv, xi)
            worst = max(worst, abs(vals.sum() - 1.0))
        ok = worst <= 1e-12
        report("8a partition of unity", ok, f"max |sum - 1| = {worst:.2e} (<=1e-12)")
        assert worst <= 1e-12

    def test_material_tangents_match_fd(self):
        rng = np.random.default_rng(1)
        worst = 0.0
        for kind in ("svk", "neo-hookean"):
            mat = MaterialModel.from_engineering(kind, 10.0, 0.3)
            for _ in range(100):
                e = rng.normal(scale=0.02, size=6)
                e[3:] *= 2.0
                s, c, _ = material_response(mat, e)
                v = rng.normal(size=6)
                h = 1e-6
                sp = material_response(mat, e + h * v)[0]
                sm = material_response(mat, e - h * v)[0]
                fd = (sp - sm) / (2 * h)
                worst = max(worst, np.abs(c @ v - fd).max() / max(np.abs(fd).max(), 1e-12))
        ok = worst <= 1e-5
        report("8b material tangent FD", ok, f"max rel deviation {worst:.2e} (<=1e-5)")
        assert worst <= 1e-5

    def test_element_tangent_matches_fd(self):
        rng = np.random.default_rng(2)
        patch = make_box_beam(2.0, 1.0, 1.0, (2, 1, 1), (1, 1, 1))
        kern = PatchKernel(patch, Formulation.ANS_EAS)
        ed = kern.elements[0]
        mat = MaterialModel.from_engineering("svk", 12.0, 0.3)
        worst = 0.0
        for _ in range(100):
            u = rng.normal(scale=0.03, size=ed.ndof)
            alpha = rng.normal(scale=0.01, size=ed.n_alpha)
            v = rng.normal(size=ed.ndof)
            blocks = element_blocks(ed, u, alpha, mat)
            h = 1e-6
            rp = element_blocks(ed, u + h * v, alpha, mat).Ru
            rm = element_blocks(ed, u - h * v, alpha, mat).Ru
            fd = (rp - rm) / (2 * h)
            worst = max(worst, np.abs(blocks.Kuu @ v - fd).max() / np.abs(fd).max())
        ok = worst <= 1e-5
        report("8c element tangent FD", ok, f"max rel deviation {worst:.2e} (<=1e-5)")
        assert worst <= 1e-5

    def test_follower_load_stiffness_matches_fd(self):
        rng = np.random.default_rng(3)
        patch = make_box_beam(2.0, 1.0, 1.0, (2, 1, 1), (1, 1, 1))
        ps = PatchSet((patch,))
        dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
        mat = MaterialModel.from_engineering("svk", 12.0, 0.0)
        model = Model(
            ps,
            dm,
            [mat],
            Formulation.STANDARD,
            loads=[FollowerPressure(0, "xi_max", lambda x: 1.0 + 0.7 * x[2])],
        )
        asm = Assembler(model)
        worst = 0.0
        for _ in range(100):
            u = rng.normal(scale=0.05, size=asm.n_dofs)
            v = rng.normal(size=asm.n_dofs)
            _, kl = asm.external_system(u, 1.0)
            h = 1e-6
            fp, _ = asm.external_system(u + h * v, 1.0)
            fm, _ = asm.external_system(u - h * v, 1.0)
            fd = -(fp - fm) / (2 * h)
            got = kl @ v
            worst = max(worst, np.abs(got - fd).max() / max(np.abs(fd).max(), 1e-12))
        ok = worst <= 1e-5
        report("8d follower stiffness FD", ok, f"max rel deviation {worst:.2e} (<=1e-5)")
        assert worst <= 1e-5

    def test_rank_of_reference_stiffness(self):
        counts = {}
        for form in Formulation:
            patch = make_box_beam(2.0, 1.0, 1.0, (2, 1, 1), (1, 1, 1))
            kern = PatchKernel(patch, form)
            ed = kern.elements[0]
            state = kern.fresh_state(ed)
            mat = MaterialModel.from_engineering("svk", 12.0, 0.3)
            k, _, _, _ = element_residual_tangent(
                ed, np.zeros(ed.ndof), np.zeros(ed.ndof), state, mat, form.uses_mip, True
            )
            lam = np.linalg.eigvalsh(k)
            counts[form.value] = int(np.sum(np.abs(lam) < 1e-10 * np.abs(lam).max()))
        ok = all(c == 6 for c in counts.values())
        report("8e stiffness rank", ok, f"zero eigenvalues per formulation: {counts}")
        assert all(c == 6 for c in counts.values())

    def test_newton_convergence_exponent(self):
        exps = {}
        for form in ("ans-eas", "ans-eas-mip"):
            patch = make_box_beam(6.0, 1.0, 1.0, (2, 1, 1), (3, 1, 1))
            ps = PatchSet((patch,))
            dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
            mat = MaterialModel.from_engineering("svk", 12.0, 0.3)
            from isb.solver import PointLoadOnFace

            model = Model(
                ps,
                dm,
                [mat],
                Formulation.parse(form),
                loads=[PointLoadOnFace(0, "xi_max", (0.0, 0.0, 0.02))],
            )
            hist = newton_solve(
                model,
                SolverConfig(load_steps=1, max_iterations=30, residual_tolerance=1e-11),
            )
            res = np.array(hist.final.residuals)
            res = res[res > 1e-12 * res[0]]
            rates = np.diff(np.log(res[1:]))
            exps[form] = rates[-1] / rates[-2]
        ok = all(e >= 1.8 for e in exps.values())
        report(
            "8f newton exponent",
            ok,
            ", ".join(f"{k}: {v:.2f}" for k, v in exps.items()) + " (each >=1.8)",
        )
        assert all(e >= 1.8 for e in exps.values())

    def test_constant_strain_patch_residual(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        for form in Formulation:
            patch = make_box_beam(2.0, 1.0, 1.0, (2, 2, 2), (1, 1, 1))
            ps = PatchSet((patch,))
            a = rng.normal(scale=0.01, size=(3, 3))
            dirichlet = [
                DirichletFace(0, f, (0, 1, 2), lambda x, m=a: m @ x)
                for f in ("xi_min", "xi_max", "eta_min", "eta_max", "zeta_min", "zeta_max")
            ]
            dm = couple_patches(ps, dirichlet)
            mat = MaterialModel.from_engineering("svk", 12.0, 0.3)
            model = Model(ps, dm, [mat], form)
            hist = newton_solve(model, SolverConfig(load_steps=1, max_iterations=10))
            worst = max(worst, abs(hist.final.residuals[-1]))
            kern = PatchKernel(patch, form)
            ed = kern.elements[0]
            pts = patch.control_points.reshape(-1, 3)
            blocks = element_blocks(ed, (pts @ a.T).ravel(), np.zeros(ed.n_alpha), mat)
            spread = np.abs(blocks.S - blocks.S[0]).max()
            worst = max(worst, spread)
            if ed.n_alpha:
                worst = max(worst, np.abs(blocks.Ra).max())
        ok = worst <= 1e-10
        report("8g constant-strain patch test", ok, f"max residual {worst:.2e} (<=1e-10)")
        assert worst <= 1e-10
