"""RVE driver: macroscopic deformation on a lattice cell, effective stress.

The macroscopic gradient is imposed through affine Dirichlet data on one
opposite face pair (this removes the rigid modes) and periodic constraints
``u+ - u- = (F* - I)(X+ - X-)`` on the remaining pairs.  The effective first
Piola-Kirchhoff stress is the volume average of F S over the material,
normalized by the full bounding-cell volume including the void.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .element import gp_stress_states
from .errors import GeometryError, ValidationError
from .geometry import DirichletFace, DofMap, PatchSet, couple_patches, face_index_grid
from .solver import AffineConstraint, Assembler

_MIN_FACE = {0: "xi_min", 1: "eta_min", 2: "zeta_min"}
_MAX_FACE = {0: "xi_max", 1: "eta_max", 2: "zeta_max"}


@dataclass(frozen=True)
class MacroDeformation:
    """Target deformation gradient reached at unit load factor."""

    f_target: np.ndarray
    path_steps: int = 20

    def __post_init__(self):
        f = np.asarray(self.f_target, dtype=float)
        if f.shape != (3, 3):
            raise ValidationError("macroscopic gradient must be 3x3")
        object.__setattr__(self, "f_target", f)
        if np.linalg.det(f) <= 0.0:
            raise ValidationError("macroscopic gradient must have positive determinant")
        if self.path_steps < 1:
            raise ValidationError("path needs at least one step")

    def gradient_at(self, factor: float) -> np.ndarray:
        return np.eye(3) + factor * (self.f_target - np.eye(3))


def simple_shear(amount: float, steps: int = 20) -> MacroDeformation:
    f = np.eye(3)
    f[0, 1] = amount
    return MacroDeformation(f, steps)


@dataclass
class EffectiveStress:
    p_star: np.ndarray
    cell_volume: float


def boundary_faces(ps: PatchSet) -> dict[int, tuple[list, list]]:
    """Patch faces lying on the bounding box, per global axis as (min, max).

    Every parametric face of every patch is tested: it qualifies for a global
    axis when all its control points sit on that box plane within the merge
    tolerance (beams contribute their outer end faces regardless of which
    parametric direction runs along the axis).
    """
    lo, hi = ps.bounding_box()
    tol = ps.merge_tolerance()
    out = {axis: ([], []) for axis in range(3)}
    face_names = list(_MIN_FACE.values()) + list(_MAX_FACE.values())
    for pi, patch in enumerate(ps.patches):
        for face in face_names:
            grid = face_index_grid(patch.shape, face)
            pts = patch.control_points[grid[:, 0], grid[:, 1], grid[:, 2]]
            for axis in range(3):
                if np.all(np.abs(pts[:, axis] - lo[axis]) < tol):
                    out[axis][0].append((pi, face))
                elif np.all(np.abs(pts[:, axis] - hi[axis]) < tol):
                    out[axis][1].append((pi, face))
    return out


def build_rve_constraints(
    ps: PatchSet,
    macro: MacroDeformation,
    dirichlet_axis: int = 1,
):
    """Dirichlet specs, DOF map and periodic constraints for a unit cell.

    Returns ``(dof_map, constraints)``.  Faces on the ``dirichlet_axis`` pair
    get the affine displacement ``(F* - I) X``; every other boundary pair is
    tied by the periodic offset.  Offsets are rates per unit load factor.
    """
    if dirichlet_axis not in (0, 1, 2):
        raise ValidationError("dirichlet_axis must be 0, 1 or 2")
    d_mat = macro.f_target - np.eye(3)
    faces = boundary_faces(ps)
    tol = ps.merge_tolerance()

    dirichlet = [
        DirichletFace(pi, face, (0, 1, 2), lambda x, d=d_mat: d @ x)
        for pi, face in faces[dirichlet_axis][0] + faces[dirichlet_axis][1]
    ]
    if not dirichlet:
        raise GeometryError("no boundary faces found on the Dirichlet axis")
    dm = couple_patches(ps, dirichlet)

    constraints = []
    for axis in range(3):
        if axis == dirichlet_axis:
            continue
        minus, plus = faces[axis]
        minus_pts = _collect_face_points(ps, dm, minus)
        plus_pts = _collect_face_points(ps, dm, plus)
        if len(minus_pts) != len(plus_pts):
            raise GeometryError(
                f"unpaired periodic boundary on axis {axis}: "
                f"{len(minus_pts)} vs {len(plus_pts)} control points"
            )
        transverse = [a for a in range(3) if a != axis]
        minus_sorted = sorted(minus_pts, key=lambda nx: tuple(nx[1][transverse]))
        plus_sorted = sorted(plus_pts, key=lambda nx: tuple(nx[1][transverse]))
        for (n_m, x_m), (n_p, x_p) in zip(minus_sorted, plus_sorted):
            if np.linalg.norm(x_p[transverse] - x_m[transverse]) > 10 * tol:
                raise GeometryError("periodic faces are not conformal")
            offset = d_mat @ (x_p - x_m)
            for comp in range(3):
                constraints.append(
                    AffineConstraint(3 * n_p + comp, 3 * n_m + comp, float(offset[comp]))
                )
    return dm, constraints


def _collect_face_points(ps: PatchSet, dm: DofMap, face_list):
    pts = []
    seen = set()
    for pi, face in face_list:
        grid = face_index_grid(ps.patches[pi].shape, face)
        for i, j, k in grid:
            node = int(dm.node_ids[pi][i, j, k])
            if node in seen:
                continue
            seen.add(node)
            pts.append((node, ps.patches[pi].control_points[i, j, k]))
    return pts


def cell_volume(ps: PatchSet) -> float:
    lo, hi = ps.bounding_box()
    return float(np.prod(hi - lo))


def effective_stress(asm: Assembler, u: np.ndarray) -> EffectiveStress:
    """Volume-averaged first Piola-Kirchhoff stress of the converged state.

    P = F S per quadrature point with F from the compatible displacements and
    S the constitutive stress the residual integrates (projected and enhanced
    strains included); the average is taken over the bounding-cell volume.
    """
    volume = cell_volume(asm.model.patch_set)
    p_star = np.zeros((3, 3))
    for (pi, ed, dofs), state in zip(asm.elements, asm.states):
        material = asm.model.materials[pi]
        for w, f_def, s_cart in gp_stress_states(ed, u[dofs], state.alpha, material):
            p_star += w * (f_def @ s_cart)
    return EffectiveStress(p_star / volume, volume)
