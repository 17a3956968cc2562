"""Translate a validated case config into a solvable model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import CaseConfig
from .element import Formulation
from .errors import ValidationError
from .geometry import (
    DirichletFace,
    PatchSet,
    couple_patches,
    make_arc_beam,
    make_box_beam,
    make_right_angle_frame,
    make_sc_lattice_cell,
)
from .homogenize import MacroDeformation, build_rve_constraints, simple_shear
from .materials import MaterialModel
from .solver import (
    FollowerPressure,
    Model,
    PointLoadOnFace,
    ProbeSpec,
    SolverConfig,
)


@dataclass
class BuiltCase:
    model: Model
    solver: SolverConfig
    load_param: Callable[[float], float]
    macro: MacroDeformation | None = None


def _tip_probe(patch, patch_index=0, rotation_axis=None) -> ProbeSpec:
    x_hi = patch.kv_xi.domain[1]
    e_mid = 0.5 * sum(patch.kv_eta.domain)
    z_mid = 0.5 * sum(patch.kv_zeta.domain)
    return ProbeSpec(patch_index, (x_hi, e_mid, z_mid), rotation_axis)


def _material(cfg: CaseConfig) -> MaterialModel:
    m = cfg.material
    return MaterialModel.from_engineering(
        m["model"], m["youngs_modulus"], m["poissons_ratio"]
    )


def _solver(cfg: CaseConfig) -> SolverConfig:
    return SolverConfig(**cfg.solver)


def build_case(cfg: CaseConfig) -> BuiltCase:
    builder = _BUILDERS.get(cfg.kind)
    if builder is None:
        raise ValidationError(f"unknown case kind {cfg.kind!r}")
    return builder(cfg)


def _build_shear_cantilever(cfg: CaseConfig) -> BuiltCase:
    t = cfg.geometry["thickness"]
    a = cfg.geometry["aspect"]
    length = 3.0 * a * t
    mesh = cfg.mesh
    patch = make_box_beam(
        length,
        t,
        t,
        (mesh["degree"], mesh["cross_degree"], mesh["cross_degree"]),
        (mesh["elements"], mesh["cross_elements"], mesh["cross_elements"]),
    )
    ps = PatchSet((patch,))
    dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
    material = _material(cfg)
    inertia = t**4 / 12.0
    k_max = cfg.loads["load_parameter"]
    e_mod = cfg.material["youngs_modulus"]
    force = k_max * e_mod * inertia / length**2
    model = Model(
        ps,
        dm,
        [material],
        Formulation.parse(cfg.formulation),
        loads=[PointLoadOnFace(0, "xi_max", (0.0, 0.0, force))],
        probes={"tip": _tip_probe(patch)},
    )
    return BuiltCase(model, _solver(cfg), lambda f: f * k_max)


def _build_bending_cantilever(cfg: CaseConfig) -> BuiltCase:
    g = cfg.geometry
    length, width, height = g["length"], g["width"], g["height"]
    mesh = cfg.mesh
    patch = make_box_beam(
        length,
        width,
        height,
        (mesh["degree"], mesh["cross_degree"], mesh["cross_degree"]),
        (mesh["elements"], mesh["cross_elements"], mesh["cross_elements"]),
    )
    ps = PatchSet((patch,))
    dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
    material = _material(cfg)
    inertia = width * height**3 / 12.0
    e_mod = cfg.material["youngs_modulus"]
    eta_max = cfg.loads["moment_parameter"]
    moment = eta_max * 2.0 * np.pi * e_mod * inertia / length
    # linearly varying end pressure: a pure bending moment that follows the
    # rotating cross-section; sign chosen so the tip deflects toward +z
    stress_rate = -moment / inertia
    model = Model(
        ps,
        dm,
        [material],
        Formulation.parse(cfg.formulation),
        loads=[FollowerPressure(0, "xi_max", lambda x: stress_rate * x[2])],
        probes={"tip": _tip_probe(patch, rotation_axis=(0.0, -1.0, 0.0))},
    )
    return BuiltCase(model, _solver(cfg), lambda f: f * eta_max)


def _build_bathe_arc(cfg: CaseConfig) -> BuiltCase:
    g = cfg.geometry
    mesh = cfg.mesh
    patch = make_arc_beam(
        g["radius"],
        g["sweep_deg"],
        g["width"],
        g["height"],
        degree=mesh["degree"],
        elements=mesh["elements"],
        cross_degrees=(mesh["cross_degree"], mesh["cross_degree"]),
        cross_elements=(mesh["cross_elements"], mesh["cross_elements"]),
    )
    ps = PatchSet((patch,))
    dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
    material = _material(cfg)
    force = cfg.loads["force"]
    inertia = g["width"] * g["height"] ** 3 / 12.0
    k_max = force * g["radius"] ** 2 / (cfg.material["youngs_modulus"] * inertia)
    model = Model(
        ps,
        dm,
        [material],
        Formulation.parse(cfg.formulation),
        loads=[PointLoadOnFace(0, "xi_max", (force, 0.0, 0.0))],
        probes={"tip": _tip_probe(patch)},
    )
    return BuiltCase(model, _solver(cfg), lambda f: f * k_max)


def _build_right_angle_frame(cfg: CaseConfig) -> BuiltCase:
    g = cfg.geometry
    mesh = cfg.mesh
    n1 = mesh["elements"]
    n2 = mesh["elements_leg2"] or n1
    ps = make_right_angle_frame(
        g["leg_length"],
        g["width"],
        g["thickness"],
        degree=mesh["degree"],
        elements_per_leg=(n1, n2),
        mode=mesh["mode"],
    )
    dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
    material = _material(cfg)
    force = cfg.loads["force"]
    perturbation = cfg.loads["perturbation"]
    last = len(ps.patches) - 1
    # in-plane tip load directed away from the clamped leg; the opposite sign
    # buckles far earlier and does not match the published critical load
    loads = [PointLoadOnFace(last, "xi_max", (force, 0.0, 0.0))]
    if perturbation:
        loads.append(
            PointLoadOnFace(
                last, "xi_max", (0.0, 0.0, perturbation), scale_with_factor=False
            )
        )
    model = Model(
        ps,
        dm,
        [material],
        Formulation.parse(cfg.formulation),
        loads=loads,
        probes={"tip": _tip_probe(ps.patches[last], last)},
    )
    return BuiltCase(model, _solver(cfg), lambda f: f * force)


def _build_sc_lattice(cfg: CaseConfig) -> BuiltCase:
    g = cfg.geometry
    mesh = cfg.mesh
    ps = make_sc_lattice_cell(
        g["strut_length"],
        g["width"],
        g["height"],
        axis_degree=mesh["degree"],
        axis_elements=mesh["elements"],
        cross_degree=mesh["cross_degree"],
        cross_elements=mesh["cross_elements"],
    )
    shear_max = cfg.loads["shear"]
    solver = _solver(cfg)
    macro = simple_shear(shear_max, solver.load_steps)
    dm, constraints = build_rve_constraints(ps, macro, cfg.loads["dirichlet_axis"])
    material = _material(cfg)
    cube = ps.patches[0]
    mid = tuple(0.5 * sum(kv.domain) for kv in cube.knot_vectors)
    model = Model(
        ps,
        dm,
        [material],
        Formulation.parse(cfg.formulation),
        constraints=constraints,
        probes={"center": ProbeSpec(0, mid)},
    )
    return BuiltCase(model, solver, lambda f: f * shear_max, macro=macro)


def _build_custom(cfg: CaseConfig) -> BuiltCase:
    g = cfg.geometry
    mesh = cfg.mesh
    patch = make_box_beam(
        g["length"],
        g["width"],
        g["height"],
        (mesh["degree"], mesh["cross_degree"], mesh["cross_degree"]),
        (mesh["elements"], mesh["cross_elements"], mesh["cross_elements"]),
    )
    ps = PatchSet((patch,))
    dm = couple_patches(ps, [DirichletFace(0, "xi_min")])
    force = cfg.loads["force"]
    if len(force) != 3:
        raise ValidationError("custom case force must have three components")
    model = Model(
        ps,
        dm,
        [_material(cfg)],
        Formulation.parse(cfg.formulation),
        loads=[PointLoadOnFace(0, "xi_max", tuple(force))],
        probes={"tip": _tip_probe(patch)},
    )
    return BuiltCase(model, _solver(cfg), lambda f: f)


_BUILDERS = {
    "shear-cantilever": _build_shear_cantilever,
    "bending-cantilever": _build_bending_cantilever,
    "bathe-arc": _build_bathe_arc,
    "right-angle-frame": _build_right_angle_frame,
    "sc-lattice": _build_sc_lattice,
    "custom": _build_custom,
}
