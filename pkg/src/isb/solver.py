"""Global assembly, boundary conditions, loads and Newton continuation.

Constraints are handled by master-slave elimination: the full displacement
vector is ``u = T @ u_free + factor * rate`` where ``T`` is the constraint
basis and ``rate`` carries prescribed displacements and periodic offsets per
unit load factor.  The reduced tangent is ``T^T K T``; it stays symmetric for
conservative loading and is solved by a direct sparse factorization either
way (follower loads make it genuinely unsymmetric).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .element import (
    ElementState,
    Formulation,
    PatchKernel,
    element_residual_tangent,
)
from .errors import (
    CondensationError,
    InvertedElementError,
    StepFailure,
    ValidationError,
)
from .geometry import FACES, DofMap, PatchSet, face_index_grid
from .materials import MaterialModel
from .splines import gauss_rule, map_rule_to_interval, nurbs_trivariate

TractionValue = Union[np.ndarray, Sequence[float], Callable[[np.ndarray], np.ndarray]]
PressureValue = Union[float, Callable[[np.ndarray], float]]


@dataclass(frozen=True)
class PointLoadOnFace:
    """Total force split equally over the control points of a patch face."""

    patch: int
    face: str
    force: tuple[float, float, float]
    scale_with_factor: bool = True


@dataclass(frozen=True)
class SurfaceTraction:
    """Conservative traction on the reference face; vector or callable of X."""

    patch: int
    face: str
    traction: TractionValue
    scale_with_factor: bool = True


@dataclass(frozen=True)
class FollowerPressure:
    """Deformation-following pressure p along the current face normal.

    The traction is ``p * (x_,b cross x_,c)`` with the in-face parametric
    directions (b, c) taken cyclically after the face direction, so on
    ``*_max`` faces a positive p pulls along the outward normal.  ``pressure``
    may be a callable of the reference surface point, which realizes linearly
    varying end-face distributions (e.g. a pure bending moment).
    """

    patch: int
    face: str
    pressure: PressureValue
    scale_with_factor: bool = True


Load = Union[PointLoadOnFace, SurfaceTraction, FollowerPressure]


@dataclass(frozen=True)
class AffineConstraint:
    """u[slave] = u[master] + factor * offset."""

    slave: int
    master: int
    offset: float = 0.0


@dataclass(frozen=True)
class ProbeSpec:
    """Named evaluation point in patch parametric coordinates.

    With ``rotation_axis`` set, the probe also reports the signed rotation of
    the cross-section diagonal (corner-to-corner segment of the section at
    the probe's axial coordinate) projected onto the plane normal to the
    axis.
    """

    patch: int
    point: tuple[float, float, float]
    rotation_axis: tuple[float, float, float] | None = None


@dataclass
class SolverConfig:
    load_steps: int = 10
    max_iterations: int = 30
    residual_tolerance: float = 1e-8
    energy_tolerance: float = 1e-12
    step_cutback: bool = True

    def __post_init__(self):
        if self.load_steps < 1 or self.max_iterations < 1:
            raise ValidationError("load_steps and max_iterations must be >= 1")
        if self.residual_tolerance <= 0.0 or self.energy_tolerance <= 0.0:
            raise ValidationError("tolerances must be positive")


@dataclass
class Model:
    """Assembled boundary-value problem."""

    patch_set: PatchSet
    dof_map: DofMap
    materials: list[MaterialModel]
    formulation: Formulation
    loads: list[Load] = field(default_factory=list)
    constraints: list[AffineConstraint] = field(default_factory=list)
    probes: dict[str, ProbeSpec] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.materials) == 1 and len(self.patch_set.patches) > 1:
            self.materials = self.materials * len(self.patch_set.patches)
        if len(self.materials) != len(self.patch_set.patches):
            raise ValidationError("need one material per patch")
        npatch = len(self.patch_set.patches)
        for load in self.loads:
            if not 0 <= load.patch < npatch:
                raise ValidationError(f"load references unknown patch {load.patch}")
            if load.face not in FACES:
                raise ValidationError(f"load references unknown face {load.face!r}")


@dataclass
class ProbeResult:
    displacement: np.ndarray
    rotation: float = 0.0


@dataclass
class StepRecord:
    step: int
    load_factor: float
    displacement: np.ndarray
    iterations: int
    residuals: list[float]
    strain_energy: float
    probes: dict[str, ProbeResult] = field(default_factory=dict)


@dataclass
class SolutionHistory:
    steps: list[StepRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def final(self) -> StepRecord:
        if not self.steps:
            raise ValidationError("no converged steps recorded")
        return self.steps[-1]


def worker_count(n_items: int) -> int:
    env = os.environ.get("ISB_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    if cap < 1:
        raise ValidationError("ISB_THREADS must be a positive integer")
    return max(1, min(cap, n_items))


# ---------------------------------------------------------------------------
# face quadrature shared by tractions and follower pressures
# ---------------------------------------------------------------------------

_IN_FACE = {0: (1, 2), 1: (2, 0), 2: (0, 1)}


def _face_quadrature(patch, face):
    """Surface Gauss data of every element adjacent to a patch face.

    Yields ``(spans, coords, w2d)`` lists: the adjacent volume-element spans,
    the full parametric coordinates of each surface Gauss point, and the
    parametric surface weights (no area factor included).
    """
    axis, end = FACES[face]
    b, c = _IN_FACE[axis]
    kvs = patch.knot_vectors
    fixed_span = kvs[axis].spans()[0 if end == 0 else -1]
    fixed_value = fixed_span[1] if end == 0 else fixed_span[2]
    rule_b = gauss_rule(kvs[b].degree + 1)
    rule_c = gauss_rule(kvs[c].degree + 1)
    out = []
    for sb, ab, bb in kvs[b].spans():
        for sc, ac, bc in kvs[c].spans():
            ptb, wtb = map_rule_to_interval(rule_b, ab, bb)
            ptc, wtc = map_rule_to_interval(rule_c, ac, bc)
            spans = [0, 0, 0]
            spans[axis] = fixed_span[0]
            spans[b] = sb
            spans[c] = sc
            coords = []
            weights = []
            for xb, wb in zip(ptb, wtb):
                for xc, wc in zip(ptc, wtc):
                    pt = [0.0, 0.0, 0.0]
                    pt[axis] = fixed_value
                    pt[b] = xb
                    pt[c] = xc
                    coords.append(tuple(pt))
                    weights.append(wb * wc)
            out.append((tuple(spans), coords, np.asarray(weights)))
    return out, (b, c)


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


# ---------------------------------------------------------------------------
# assembler
# ---------------------------------------------------------------------------


class Assembler:
    """Element loop, load integration and scatter into the global system."""

    def __init__(self, model: Model):
        self.model = model
        self.dof_map = model.dof_map
        self.n_dofs = model.dof_map.n_dofs
        self.kernels = [
            PatchKernel(patch, model.formulation) for patch in model.patch_set.patches
        ]
        self.elements = []
        for pi, kernel in enumerate(self.kernels):
            for ed in kernel.elements:
                dofs = self.dof_map.element_dofs(pi, ed.local_indices)
                self.elements.append((pi, ed, dofs))
        self.states = self.fresh_states()
        if self.elements:
            self._rows = np.concatenate([np.repeat(d, d.size) for _, _, d in self.elements])
            self._cols = np.concatenate([np.tile(d, d.size) for _, _, d in self.elements])
        else:
            self._rows = np.zeros(0, dtype=int)
            self._cols = np.zeros(0, dtype=int)

    def fresh_states(self) -> list[ElementState]:
        return [self.kernels[pi].fresh_state(ed) for pi, ed, _ in self.elements]

    def copy_states(self) -> list[ElementState]:
        return [s.copy() for s in self.states]

    def internal_system(self, u: np.ndarray, du: np.ndarray, first_iter_of_step: bool):
        """Internal force vector, tangent and stored strain energy."""
        use_mip = self.model.formulation.uses_mip

        def run(item):
            idx, (pi, ed, dofs) = item
            return element_residual_tangent(
                ed,
                u[dofs],
                du[dofs],
                self.states[idx],
                self.model.materials[pi],
                use_mip,
                first_iter_of_step,
            )

        items = list(enumerate(self.elements))
        workers = worker_count(len(items))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run, items))
        else:
            results = [run(it) for it in items]

        r = np.zeros(self.n_dofs)
        r_abs = np.zeros(self.n_dofs)
        data = []
        energy = 0.0
        internal_decrement = 0.0
        for (pi, ed, dofs), (k_e, r_e, w_e, dec_e) in zip(self.elements, results):
            r[dofs] += r_e
            r_abs[dofs] += np.abs(r_e)
            data.append(k_e.ravel())
            energy += w_e
            internal_decrement += dec_e
        vals = np.concatenate(data) if data else np.zeros(0)
        k = sp.coo_matrix(
            (vals, (self._rows, self._cols)), shape=(self.n_dofs, self.n_dofs)
        ).tocsr()
        return r, k, energy, r_abs, internal_decrement

    def external_system(self, u: np.ndarray, factor: float):
        """External force vector and (unsymmetric) load stiffness."""
        f = np.zeros(self.n_dofs)
        kl_rows, kl_cols, kl_vals = [], [], []
        for load in self.model.loads:
            scale = factor if load.scale_with_factor else 1.0
            if scale == 0.0:
                continue
            if isinstance(load, PointLoadOnFace):
                self._add_point_load(f, load, scale)
            elif isinstance(load, SurfaceTraction):
                self._add_traction(f, load, scale)
            elif isinstance(load, FollowerPressure):
                self._add_follower(f, kl_rows, kl_cols, kl_vals, load, scale, u)
            else:
                raise ValidationError(f"unknown load type {type(load).__name__}")
        if kl_vals:
            kl = sp.coo_matrix(
                (np.concatenate(kl_vals), (np.concatenate(kl_rows), np.concatenate(kl_cols))),
                shape=(self.n_dofs, self.n_dofs),
            ).tocsr()
        else:
            kl = None
        return f, kl

    def _add_point_load(self, f, load, scale):
        patch = self.model.patch_set.patches[load.patch]
        grid = face_index_grid(patch.shape, load.face)
        share = scale * np.asarray(load.force, dtype=float) / grid.shape[0]
        ids = self.dof_map.node_ids[load.patch]
        for i, j, k in grid:
            node = ids[i, j, k]
            f[3 * node : 3 * node + 3] += share

    def _add_traction(self, f, load, scale):
        patch = self.model.patch_set.patches[load.patch]
        faces, (b, c) = _face_quadrature(patch, load.face)
        for spans, coords, w2d in faces:
            local = patch.local_indices(spans)
            dofs = self.dof_map.element_dofs(load.patch, local)
            fe = np.zeros(dofs.size)
            for pt, w in zip(coords, w2d):
                ev = nurbs_trivariate(patch, *pt)
                area = np.linalg.norm(np.cross(ev.jacobian[:, b], ev.jacobian[:, c]))
                t = load.traction(ev.point) if callable(load.traction) else load.traction
                fe += w * area * np.outer(ev.values, np.asarray(t, dtype=float)).ravel()
            f[dofs] += scale * fe

    def _add_follower(self, f, kl_rows, kl_cols, kl_vals, load, scale, u):
        patch = self.model.patch_set.patches[load.patch]
        faces, (b, c) = _face_quadrature(patch, load.face)
        for spans, coords, w2d in faces:
            local = patch.local_indices(spans)
            dofs = self.dof_map.element_dofs(load.patch, local)
            u_mat = u[dofs].reshape(-1, 3)
            nloc = local.shape[0]
            fe = np.zeros(3 * nloc)
            ke = np.zeros((3 * nloc, 3 * nloc))
            for pt, w in zip(coords, w2d):
                ev = nurbs_trivariate(patch, *pt)
                p = load.pressure(ev.point) if callable(load.pressure) else load.pressure
                p = scale * p
                xb = ev.jacobian[:, b] + u_mat.T @ ev.gradients[:, b]
                xc = ev.jacobian[:, c] + u_mat.T @ ev.gradients[:, c]
                fe += w * p * np.outer(ev.values, np.cross(xb, xc)).ravel()
                sk_b = _skew(xb)
                sk_c = _skew(xc)
                block = np.einsum(
                    "i,jab->iajb",
                    ev.values,
                    np.einsum("j,ab->jab", ev.gradients[:, b], sk_c)
                    - np.einsum("j,ab->jab", ev.gradients[:, c], sk_b),
                )
                ke += w * p * block.reshape(3 * nloc, 3 * nloc)
            f[dofs] += fe
            kl_rows.append(np.repeat(dofs, dofs.size))
            kl_cols.append(np.tile(dofs, dofs.size))
            kl_vals.append(ke.ravel())

    def residual_tangent(self, u, du, factor, first_iter_of_step):
        """Returns (residual, tangent, strain energy, force-scale vector).

        The force-scale vector accumulates absolute element and load
        contributions; it measures the magnitude against which the assembled
        residual can meaningfully be resolved in floating point.  The last
        entry is the summed energy decrement of the condensed internal
        (enhancement) equations.
        """
        r_int, k_int, energy, r_abs, dec = self.internal_system(u, du, first_iter_of_step)
        f_ext, kl = self.external_system(u, factor)
        r = r_int - f_ext
        k = k_int + kl if kl is not None else k_int
        return r, k, energy, r_abs + np.abs(f_ext), dec


# ---------------------------------------------------------------------------
# constraint reduction
# ---------------------------------------------------------------------------


def build_reduction(model: Model):
    """Constraint basis T and prescribed-displacement rate vector."""
    n = model.dof_map.n_dofs
    fixed = model.dof_map.fixed
    slaves = {}
    for con in model.constraints:
        if con.slave in slaves:
            raise ValidationError(f"DOF {con.slave} is slave of two constraints")
        if con.slave in fixed:
            raise ValidationError(f"DOF {con.slave} is both fixed and a constraint slave")
        slaves[con.slave] = con
    for con in model.constraints:
        if con.master in slaves:
            raise ValidationError(
                f"constraint chain: master DOF {con.master} is itself a slave"
            )

    col = {}
    free = []
    for d in range(n):
        if d in fixed or d in slaves:
            continue
        col[d] = len(free)
        free.append(d)

    rate = np.zeros(n)
    rows, cols, vals = [], [], []
    for d, c in col.items():
        rows.append(d)
        cols.append(c)
        vals.append(1.0)
    for d, r in fixed.items():
        rate[d] = r
    for s, con in slaves.items():
        if con.master in fixed:
            rate[s] = fixed[con.master] + con.offset
        else:
            rows.append(s)
            cols.append(col[con.master])
            vals.append(1.0)
            rate[s] = con.offset
    t = sp.coo_matrix((vals, (rows, cols)), shape=(n, len(free))).tocsr()
    return t, rate, free


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------


def _point_eval(model: Model, patch_index: int, params, u: np.ndarray):
    patch = model.patch_set.patches[patch_index]
    ev = nurbs_trivariate(patch, *params)
    local = patch.local_indices(ev.spans)
    dofs = model.dof_map.element_dofs(patch_index, local)
    disp = ev.values @ u[dofs].reshape(-1, 3)
    return ev.point, disp


def evaluate_probe(model: Model, spec: ProbeSpec, u: np.ndarray) -> ProbeResult:
    """Displacement (and optionally section rotation) at a parametric point."""
    _, disp = _point_eval(model, spec.patch, spec.point, u)
    rotation = 0.0
    if spec.rotation_axis is not None:
        patch = model.patch_set.patches[spec.patch]
        e_lo, e_hi = patch.kv_eta.domain
        z_lo, z_hi = patch.kv_zeta.domain
        xi = spec.point[0]
        p0, d0 = _point_eval(model, spec.patch, (xi, e_lo, z_lo), u)
        p1, d1 = _point_eval(model, spec.patch, (xi, e_hi, z_hi), u)
        axis = np.asarray(spec.rotation_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        ref = (p1 - p0) - axis * (axis @ (p1 - p0))
        cur = (p1 + d1 - p0 - d0) - axis * (axis @ (p1 + d1 - p0 - d0))
        rotation = float(np.arctan2(axis @ np.cross(ref, cur), ref @ cur))
    return ProbeResult(displacement=np.asarray(disp), rotation=rotation)


def _unwrap(angle: float, previous: float) -> float:
    return angle + 2.0 * np.pi * round((previous - angle) / (2.0 * np.pi))


# ---------------------------------------------------------------------------
# Newton continuation
# ---------------------------------------------------------------------------


def newton_solve(
    model: Model,
    config: SolverConfig,
    callback: Callable[[StepRecord, Assembler], None] | None = None,
) -> SolutionHistory:
    """Load-stepped Newton iteration with residual and energy criteria.

    Convergence requires both the residual norm to fall below the relative
    tolerance (measured against the first residual of the step) and the
    energy increment |du . R| to fall below the absolute tolerance.  A
    diverged step is retried once from half the increment when cutback is
    enabled; a second failure aborts with the history preserved.
    """
    asm = Assembler(model)
    t_mat, rate, _ = build_reduction(model)
    tt = t_mat.T.tocsr()

    history = SolutionHistory()
    u = np.zeros(asm.n_dofs)
    prev_factor = 0.0
    prev_rot = {name: 0.0 for name in model.probes}
    step_no = 0

    eps = np.finfo(float).eps

    def attempt(u0, factor0, factor1):
        """Returns (u, iterations, residual_trace, energy) or raises."""
        du = (factor1 - factor0) * rate
        u_cur = u0 + du
        r, k, energy, r_abs, dec = asm.residual_tangent(
            u_cur, du, factor1, first_iter_of_step=True
        )
        r0 = np.linalg.norm(tt @ r)
        trace = [r0]
        best = np.inf
        no_progress = 0
        for it in range(1, config.max_iterations + 1):
            k_red = (tt @ k @ t_mat).tocsc()
            try:
                lu = splu(k_red)
            except RuntimeError as exc:
                raise StepFailure(f"singular reduced tangent: {exc}", history)
            duf = lu.solve(-(tt @ r))
            du = t_mat @ duf
            u_cur = u_cur + du
            r, k, energy, r_abs, dec = asm.residual_tangent(
                u_cur, du, factor1, first_iter_of_step=False
            )
            r_red = tt @ r
            rn = float(np.linalg.norm(r_red))
            en = abs(float(duf @ r_red)) + dec
            trace.append(rn)
            # residual relative to the first residual of the step, floored by
            # the same fraction of the internal-force magnitude (the residual
            # cannot be resolved below roundoff of that scale)
            force_scale = float(np.linalg.norm(tt @ r_abs))
            res_ok = rn <= config.residual_tolerance * max(r0, force_scale)
            en_ok = en <= max(config.energy_tolerance, 100.0 * eps * abs(energy))
            # floating-point floor: the energy criterion holds, the residual
            # stopped improving and never rose above the step's imbalance
            if rn < 0.3 * best:
                best = rn
                no_progress = 0
            else:
                no_progress += 1
            stagnated = no_progress >= 3 and rn <= r0
            if en_ok and (res_ok or stagnated):
                return u_cur, it, trace, energy
        raise StepFailure(
            f"no convergence in {config.max_iterations} iterations "
            f"(residual {trace[-1]:.3e} of {r0:.3e})",
            history,
        )

    def run_step(factor0, factor1):
        nonlocal u, prev_factor, step_no
        snapshot = asm.copy_states()
        u_before = u.copy()
        try:
            u_new, iters, trace, energy = attempt(u, factor0, factor1)
        except (StepFailure, InvertedElementError, CondensationError):
            asm.states = snapshot
            u = u_before
            raise
        u = u_new
        prev_factor = factor1
        step_no += 1
        record = StepRecord(
            step=step_no,
            load_factor=factor1,
            displacement=u.copy(),
            iterations=iters,
            residuals=trace,
            strain_energy=energy,
        )
        for name, spec in model.probes.items():
            res = evaluate_probe(model, spec, u)
            res.rotation = _unwrap(res.rotation, prev_rot[name])
            prev_rot[name] = res.rotation
            record.probes[name] = res
        history.steps.append(record)
        if callback is not None:
            callback(record, asm)

    targets = np.linspace(0.0, 1.0, config.load_steps + 1)[1:]
    for target in targets:
        start = prev_factor
        try:
            run_step(start, target)
        except (StepFailure, InvertedElementError, CondensationError) as first_exc:
            if not config.step_cutback:
                raise StepFailure(str(first_exc), history) from first_exc
            mid = 0.5 * (start + target)
            try:
                run_step(start, mid)
                run_step(mid, target)
            except (StepFailure, InvertedElementError, CondensationError) as exc:
                raise StepFailure(
                    f"step to factor {target} failed after one cutback: {exc}", history
                ) from exc
    history.converged = True
    return history
