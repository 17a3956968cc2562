"""Parametric constructors for the benchmark geometries and DOF coupling.

All constructors build the target-degree patch directly; straight geometry
places control points at Greville abscissae (linear reproduction makes the
point map exact), circular arcs start from the rational quadratic conic and
are refined internally by Bezier degree elevation and knot insertion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import AmbiguousCouplingError, GeometryError, ValidationError
from .splines import (
    KnotVector,
    NurbsPatch,
    greville_abscissae,
    open_uniform_knots,
)

# face name -> (parametric direction, grid index along it)
FACES = {
    "xi_min": (0, 0),
    "xi_max": (0, -1),
    "eta_min": (1, 0),
    "eta_max": (1, -1),
    "zeta_min": (2, 0),
    "zeta_max": (2, -1),
}

DirichletValue = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class DirichletFace:
    """Prescribed displacement on a whole parametric face.

    ``value`` is the displacement rate per unit load factor: either a scalar
    applied to every listed component or a callable of the reference control
    point returning a 3-vector.
    """

    patch: int
    face: str
    components: tuple[int, ...] = (0, 1, 2)
    value: DirichletValue = 0.0

    def __post_init__(self):
        if self.face not in FACES:
            raise ValidationError(f"unknown face {self.face!r}")
        if any(c not in (0, 1, 2) for c in self.components):
            raise ValidationError("components must be in {0, 1, 2}")


@dataclass(frozen=True)
class PatchSet:
    patches: tuple[NurbsPatch, ...]
    coupling_tolerance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        if not self.patches:
            raise ValidationError("patch set needs at least one patch")

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.concatenate([p.control_points.reshape(-1, 3) for p in self.patches])
        return pts.min(axis=0), pts.max(axis=0)

    def merge_tolerance(self) -> float:
        if self.coupling_tolerance is not None:
            return self.coupling_tolerance
        lo, hi = self.bounding_box()
        diag = float(np.linalg.norm(hi - lo))
        if diag <= 0.0:
            raise GeometryError("degenerate patch set bounding box")
        return 1e-9 * diag


def face_index_grid(shape: tuple[int, int, int], face: str) -> np.ndarray:
    """(count, 3) grid indices of the control-point layer of a face."""
    axis, pos = FACES[face]
    ranges = [np.arange(s) for s in shape]
    ranges[axis] = np.array([pos % shape[axis]])
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1)
    return grid.reshape(-1, 3)


@dataclass
class DofMap:
    """Global numbering of merged control points with Dirichlet markers.

    DOF ``3 * node + component``; ``fixed`` maps a DOF to its prescribed
    displacement rate (multiplied by the load factor during a solve).
    """

    node_ids: list[np.ndarray]
    n_nodes: int
    node_coords: np.ndarray
    fixed: dict[int, float] = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return 3 * self.n_nodes

    @property
    def n_free(self) -> int:
        return self.n_dofs - len(self.fixed)

    def element_dofs(self, patch_index: int, local_indices: np.ndarray) -> np.ndarray:
        ids = self.node_ids[patch_index][
            local_indices[:, 0], local_indices[:, 1], local_indices[:, 2]
        ]
        return (3 * ids[:, None] + np.arange(3)[None, :]).reshape(-1)

    def face_node_ids(self, patch_index: int, face: str) -> np.ndarray:
        grid = face_index_grid(self.node_ids[patch_index].shape, face)
        ids = self.node_ids[patch_index][grid[:, 0], grid[:, 1], grid[:, 2]]
        return np.unique(ids)


def couple_patches(ps: PatchSet, dirichlet: Sequence[DirichletFace] = ()) -> DofMap:
    """Merge coincident control points across patches and mark fixed DOFs.

    Only conformal interfaces are supported: control points either coincide
    within the merge tolerance or stay separate.  Pairs landing between the
    tolerance and ten times it are refused as ambiguous.
    """
    tol = ps.merge_tolerance()
    coords = []
    owners = []
    for pi, patch in enumerate(ps.patches):
        pts = patch.control_points.reshape(-1, 3)
        coords.append(pts)
        owners.append((pi, patch.shape))
    allpts = np.concatenate(coords)
    total = allpts.shape[0]

    parent = np.arange(total)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    cell_size = 10.0 * tol
    cells: dict[tuple[int, int, int], list[int]] = {}
    keys = np.floor(allpts / cell_size).astype(np.int64)
    for idx in range(total):
        cells.setdefault(tuple(keys[idx]), []).append(idx)

    suspicious: list[tuple[int, int, float]] = []
    offsets = [(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1)]
    for idx in range(total):
        key = keys[idx]
        for off in offsets:
            bucket = cells.get((key[0] + off[0], key[1] + off[1], key[2] + off[2]))
            if not bucket:
                continue
            for jdx in bucket:
                if jdx <= idx:
                    continue
                d = float(np.linalg.norm(allpts[idx] - allpts[jdx]))
                if d < tol:
                    union(idx, jdx)
                elif d <= 10.0 * tol:
                    suspicious.append((idx, jdx, d))

    for i, j, d in suspicious:
        if find(i) != find(j):
            raise AmbiguousCouplingError(
                f"control points at distance {d:.3e} are between the merge "
                f"tolerance {tol:.3e} and 10x it; refusing to guess"
            )

    root_to_node: dict[int, int] = {}
    flat_nodes = np.empty(total, dtype=np.int64)
    rep_coords = []
    for idx in range(total):
        r = find(idx)
        node = root_to_node.get(r)
        if node is None:
            node = len(root_to_node)
            root_to_node[r] = node
            rep_coords.append(allpts[r])
        flat_nodes[idx] = node

    node_ids = []
    start = 0
    for pi, shape in owners:
        count = shape[0] * shape[1] * shape[2]
        node_ids.append(flat_nodes[start : start + count].reshape(shape))
        start += count

    dm = DofMap(node_ids, len(root_to_node), np.array(rep_coords))

    for spec in dirichlet:
        shape = ps.patches[spec.patch].shape
        grid = face_index_grid(shape, spec.face)
        for i, j, k in grid:
            node = int(dm.node_ids[spec.patch][i, j, k])
            x_ref = ps.patches[spec.patch].control_points[i, j, k]
            if callable(spec.value):
                vec = np.asarray(spec.value(x_ref), dtype=float)
            else:
                vec = None
            for comp in spec.components:
                rate = float(vec[comp]) if vec is not None else float(spec.value)
                dof = 3 * node + comp
                old = dm.fixed.get(dof)
                if old is not None and abs(old - rate) > 1e-12 * (1.0 + abs(rate)):
                    raise ValidationError(
                        f"conflicting Dirichlet values on DOF {dof}: {old} vs {rate}"
                    )
                dm.fixed[dof] = rate
    return dm


# ---------------------------------------------------------------------------
# axis-aligned boxes
# ---------------------------------------------------------------------------


def _mapped_greville(kv: KnotVector, lo: float, hi: float) -> np.ndarray:
    a, b = kv.domain
    return lo + (greville_abscissae(kv) - a) * (hi - lo) / (b - a)


def _box_patch(xi_axis, bounds, degrees, elements) -> NurbsPatch:
    """Axis-aligned box with the beam direction mapped to a global axis.

    Parametric directions map cyclically to global axes (xi_axis, +1, +2) so
    the reference Jacobian stays right-handed.
    """
    axes = (xi_axis, (xi_axis + 1) % 3, (xi_axis + 2) % 3)
    kvs = [open_uniform_knots(elements[d], degrees[d]) for d in range(3)]
    coords = [
        _mapped_greville(kvs[d], bounds[axes[d]][0], bounds[axes[d]][1]) for d in range(3)
    ]
    n, m, l = (kv.num_functions for kv in kvs)
    cp = np.zeros((n, m, l, 3))
    cp[..., axes[0]] = coords[0][:, None, None]
    cp[..., axes[1]] = coords[1][None, :, None]
    cp[..., axes[2]] = coords[2][None, None, :]
    return NurbsPatch(kvs[0], kvs[1], kvs[2], cp)


def make_box_beam(
    length: float,
    width: float,
    height: float,
    degrees: tuple[int, int, int] = (2, 1, 1),
    elements: tuple[int, int, int] = (3, 1, 1),
) -> NurbsPatch:
    """Straight beam along +x from 0 to ``length``, cross-section centered."""
    if min(length, width, height) <= 0.0:
        raise ValidationError("box dimensions must be positive")
    if min(degrees) < 1 or min(elements) < 1:
        raise ValidationError("degrees and element counts must be >= 1")
    bounds = (
        (0.0, length),
        (-0.5 * width, 0.5 * width),
        (-0.5 * height, 0.5 * height),
    )
    return _box_patch(0, bounds, degrees, elements)


# ---------------------------------------------------------------------------
# circular arc
# ---------------------------------------------------------------------------


def _bezier_elevate(h: np.ndarray) -> np.ndarray:
    """One degree elevation of a Bezier segment in homogeneous coordinates."""
    q = h.shape[0] - 1
    out = np.empty((q + 2, h.shape[1]))
    out[0] = h[0]
    out[-1] = h[-1]
    for i in range(1, q + 1):
        a = i / (q + 1)
        out[i] = a * h[i - 1] + (1.0 - a) * h[i]
    return out


def _insert_knot(knots: list[float], degree: int, h: np.ndarray, u: float):
    """Boehm single knot insertion on homogeneous control points."""
    k = 0
    for idx in range(len(knots) - 1):
        if knots[idx] <= u < knots[idx + 1]:
            k = idx
    new = np.empty((h.shape[0] + 1, h.shape[1]))
    new[: k - degree + 1] = h[: k - degree + 1]
    for i in range(k - degree + 1, k + 1):
        a = (u - knots[i]) / (knots[i + degree] - knots[i])
        new[i] = a * h[i] + (1.0 - a) * h[i - 1]
    new[k + 1 :] = h[k:]
    return knots[: k + 1] + [u] + knots[k + 1 :], new


def _arc_curve(radius, sweep_rad, degree, elements):
    """Exact circular arc of given degree/elements in its local (a, b) plane.

    Starts at angle 0 on the +a axis; returns (control (n, 2), weights (n,),
    knot vector on [0, elements]).
    """
    w_mid = math.cos(0.5 * sweep_rad)
    p0 = np.array([radius, 0.0])
    p1 = np.array([radius, radius * math.tan(0.5 * sweep_rad)])
    p2 = radius * np.array([math.cos(sweep_rad), math.sin(sweep_rad)])
    h = np.array(
        [
            [p0[0], p0[1], 1.0],
            [w_mid * p1[0], w_mid * p1[1], w_mid],
            [p2[0], p2[1], 1.0],
        ]
    )
    for _ in range(degree - 2):
        h = _bezier_elevate(h)
    knots = [0.0] * (degree + 1) + [1.0] * (degree + 1)
    for j in range(1, elements):
        knots, h = _insert_knot(knots, degree, h, j / elements)
    kv = KnotVector(np.asarray(knots) * elements, degree)
    weights = h[:, 2].copy()
    ctrl = h[:, :2] / weights[:, None]
    return ctrl, weights, kv


def make_arc_beam(
    radius: float,
    sweep_deg: float,
    width: float,
    height: float,
    degree: int = 2,
    elements: int = 8,
    cross_degrees: tuple[int, int] = (1, 1),
    cross_elements: tuple[int, int] = (1, 1),
) -> NurbsPatch:
    """Curved beam whose axis lies exactly on a circle of given radius.

    The arc spans ``sweep_deg`` degrees in the global (y, z) plane, starting
    on the +z axis and sweeping toward +y, and is swept with a rectangular
    cross-section: eta runs radially over ``width``, zeta over ``height``
    along the x axis.  An out-of-plane tip load along +x then reports its
    displacement in the first component of a probe.
    """
    if degree < 2:
        raise ValidationError("an exact circular arc needs degree >= 2")
    if not 0.0 < sweep_deg <= 90.0:
        raise ValidationError("sweep angle must lie in (0, 90] degrees")
    if min(radius, width, height) <= 0.0 or elements < 1:
        raise ValidationError("arc parameters must be positive")
    if width >= 2.0 * radius:
        raise ValidationError("cross-section width exceeds the arc diameter")

    axis2d, wts, kv_xi = _arc_curve(radius, math.radians(sweep_deg), degree, elements)
    kv_eta = open_uniform_knots(cross_elements[0], cross_degrees[0])
    kv_zeta = open_uniform_knots(cross_elements[1], cross_degrees[1])
    radial = _mapped_greville(kv_eta, -0.5 * width, 0.5 * width)
    through = _mapped_greville(kv_zeta, -0.5 * height, 0.5 * height)

    n = kv_xi.num_functions
    m, l = kv_eta.num_functions, kv_zeta.num_functions
    cp = np.zeros((n, m, l, 3))
    w = np.zeros((n, m, l))
    for j, off in enumerate(radial):
        scale = (radius + off) / radius
        # local-plane (a, b) components map to (z, y): tangent at the start
        # is +y, the radial direction +z, so the frame stays right-handed
        cp[:, j, :, 2] = (axis2d[:, 0] * scale)[:, None]
        cp[:, j, :, 1] = (axis2d[:, 1] * scale)[:, None]
    cp[:, :, :, 0] = through[None, None, :]
    w[:, :, :] = wts[:, None, None]
    return NurbsPatch(kv_xi, kv_eta, kv_zeta, cp, w)


# ---------------------------------------------------------------------------
# right-angle frame
# ---------------------------------------------------------------------------


def make_right_angle_frame(
    leg_length: float,
    width: float,
    thickness: float,
    degree: int = 2,
    elements_per_leg: tuple[int, int] = (5, 5),
    mode: str = "single-patch",
) -> PatchSet:
    """L-shaped frame in the (x, y) plane with a square 90-degree corner.

    Leg one runs from the origin along +x, leg two from the corner along -y;
    the cross-section is ``width`` in-plane and ``thickness`` out of plane.
    ``single-patch`` places a knot of multiplicity ``degree`` at the kink;
    ``two-patch`` splits the same discretization at that knot, so both modes
    describe the identical surface and control net.
    """
    if mode not in ("single-patch", "two-patch"):
        raise ValidationError(f"unknown frame mode {mode!r}")
    if min(leg_length, width, thickness) <= 0.0:
        raise ValidationError("frame dimensions must be positive")
    n1, n2 = elements_per_leg
    if n1 < 1 or n2 < 1:
        raise ValidationError("each leg needs at least one element")
    p = degree
    if p < 1:
        raise ValidationError("degree must be >= 1")

    length = leg_length
    knots = (
        [0.0] * (p + 1)
        + [float(i) for i in range(1, n1)]
        + [float(n1)] * p
        + [float(i) for i in range(n1 + 1, n1 + n2)]
        + [float(n1 + n2)] * (p + 1)
    )
    kv_xi = KnotVector(np.asarray(knots), p)
    kv_eta = open_uniform_knots(1, 1)
    kv_zeta = open_uniform_knots(1, 1)

    def polyline(s: float, offset: float) -> tuple[float, float]:
        # mitered in-plane offset curve of the two-leg axis
        if s <= n1:
            t = s / n1
            return t * (length + offset), offset
        t = (s - n1) / n2
        return length + offset, offset + t * (-length - offset)

    g_axis = greville_abscissae(kv_xi)
    offs = _mapped_greville(kv_eta, -0.5 * width, 0.5 * width)
    zs = _mapped_greville(kv_zeta, -0.5 * thickness, 0.5 * thickness)

    n = kv_xi.num_functions
    cp = np.zeros((n, offs.size, zs.size, 3))
    for i, s in enumerate(g_axis):
        for j, off in enumerate(offs):
            x, y = polyline(s, off)
            cp[i, j, :, 0] = x
            cp[i, j, :, 1] = y
    cp[:, :, :, 2] = zs[None, None, :]

    single = NurbsPatch(kv_xi, kv_eta, kv_zeta, cp)
    if mode == "single-patch":
        return PatchSet((single,))

    kv1 = KnotVector(
        np.asarray([0.0] * (p + 1) + [float(i) for i in range(1, n1)] + [float(n1)] * (p + 1)),
        p,
    )
    kv2 = KnotVector(
        np.asarray(
            [float(n1)] * (p + 1)
            + [float(i) for i in range(n1 + 1, n1 + n2)]
            + [float(n1 + n2)] * (p + 1)
        ),
        p,
    )
    split = n1 + p - 1  # kink-interpolating control layer, shared by both halves
    patch1 = NurbsPatch(kv1, kv_eta, kv_zeta, cp[: split + 1])
    patch2 = NurbsPatch(kv2, kv_eta, kv_zeta, cp[split:])
    return PatchSet((patch1, patch2))


# ---------------------------------------------------------------------------
# simple-cubic lattice cell
# ---------------------------------------------------------------------------


def make_sc_lattice_cell(
    strut_length: float,
    width: float,
    height: float,
    axis_degree: int = 2,
    axis_elements: int = 8,
    cross_degree: int = 1,
    cross_elements: int = 1,
) -> PatchSet:
    """Simple-cubic unit cell: six struts joined by a cube at the center.

    The center cube has edge ``width``; struts of length ``strut_length``
    run along the coordinate axes so the outer faces lie on the bounding cube
    of edge ``2 * strut_length + width``.  Strut and cube discretizations are
    conformal on every interface by construction.
    """
    if width != height:
        raise ValidationError("lattice struts require a square section (width == height)")
    if strut_length <= 0.0 or width <= 0.0:
        raise ValidationError("lattice dimensions must be positive")
    hw = 0.5 * width
    cube = _box_patch(
        0,
        ((-hw, hw), (-hw, hw), (-hw, hw)),
        (cross_degree,) * 3,
        (cross_elements,) * 3,
    )
    patches = [cube]
    span = (-hw, hw)
    for axis in range(3):
        for lo, hi in ((hw, hw + strut_length), (-hw - strut_length, -hw)):
            bounds = [span, span, span]
            bounds[axis] = (lo, hi)
            patches.append(
                _box_patch(
                    axis,
                    tuple(bounds),
                    (axis_degree, cross_degree, cross_degree),
                    (axis_elements, cross_elements, cross_elements),
                )
            )
    return PatchSet(tuple(patches))
