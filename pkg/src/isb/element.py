"""Solid-beam element kernel.

Strain components live in the convective (parametric) frame: row ordering is
(xi-xi, eta-eta, zeta-zeta, xi-eta, eta-zeta, xi-zeta) with engineering
shears.  The beam direction is the first parametric direction; rows 0, 3, 5
are the locking-prone membrane/transversal-shear components treated by the
tying-point projection, rows 1, 2, 4 the cross-section components enhanced by
the incompatible strain modes.

The element residual always uses constitutive stresses; under the mixed
integration-point scheme the per-point independent stresses replace them only
inside the geometric stiffness, so converged results are unchanged while the
Newton iteration becomes considerably more robust.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import CondensationError, GeometryError, ValidationError
from .materials import (
    MaterialModel,
    material_response,
    strain_transform,
    sym3_to_voigt_strain,
    voigt_stress_to_sym3,
)
from .splines import (
    KnotVector,
    NurbsPatch,
    basis_functions,
    gauss_rule,
    lagrange_nodes,
    lagrange_values,
    local_reduced_space,
    map_rule_to_interval,
    nurbs_trivariate,
)

#: strain rows replaced by the tying-point projection
ANS_ROWS = (0, 3, 5)
#: strain rows carrying the incompatible enhancement modes
EAS_ROWS = (1, 2, 4)

N_EAS_MODES = 5


class Formulation(Enum):
    STANDARD = "standard"
    ANS = "ans"
    ANS_EAS = "ans-eas"
    ANS_EAS_MIP = "ans-eas-mip"

    @property
    def uses_ans(self) -> bool:
        return self is not Formulation.STANDARD

    @property
    def uses_eas(self) -> bool:
        return self in (Formulation.ANS_EAS, Formulation.ANS_EAS_MIP)

    @property
    def uses_mip(self) -> bool:
        return self is Formulation.ANS_EAS_MIP

    @classmethod
    def parse(cls, name: str) -> "Formulation":
        for f in cls:
            if f.value == name:
                return f
        valid = ", ".join(f.value for f in cls)
        raise ValidationError(f"unknown formulation {name!r}; expected one of: {valid}")


def reparameterize(x: float, a: float, b: float) -> float:
    """Affine map of a span coordinate onto [-1, 1]."""
    return 1.0 - 2.0 * (b - x) / (b - a)


def enhancement_matrix(eta_t: float, zeta_t: float) -> np.ndarray:
    """6x5 in-section enhancement operator at local coordinates in [-1, 1].

    Columns enhance, in order: linear eta-eta, linear zeta-zeta and the three
    eta-zeta shear modes (eta, zeta, eta*zeta).  Every entry carries a local
    coordinate factor, so the modes have zero mean over the section.
    """
    be = np.zeros((6, N_EAS_MODES))
    be[1, 0] = eta_t
    be[2, 1] = zeta_t
    be[4, 2] = eta_t
    be[4, 3] = zeta_t
    be[4, 4] = eta_t * zeta_t
    return be


def lagrange_block_matrix(degree: int, xi_t: float) -> np.ndarray:
    """Row of 5x5 identity blocks weighted by the axial interpolation.

    A single constant block for degree one; otherwise ``degree`` blocks
    weighted by the Lagrange polynomials of degree ``degree - 1`` on
    equispaced nodes of [-1, 1].
    """
    if degree < 1:
        raise ValidationError("degree must be >= 1")
    if degree == 1:
        return np.eye(N_EAS_MODES)
    vals = lagrange_values(lagrange_nodes(degree), xi_t)
    eye = np.eye(N_EAS_MODES)
    return np.hstack([v * eye for v in vals])


def eas_operators(degree: int, coords, bounds) -> tuple[np.ndarray, np.ndarray]:
    """Enhancement operator and axial block row at a parametric point.

    ``coords`` are patch parametric coordinates, ``bounds`` the (3, 2) element
    parametric box; both are mapped to element-local [-1, 1] coordinates
    before building the matrices.
    """
    local = [reparameterize(coords[d], bounds[d][0], bounds[d][1]) for d in range(3)]
    return enhancement_matrix(local[1], local[2]), lagrange_block_matrix(degree, local[0])


def ans_projection(kv_xi: KnotVector, element_index: int):
    """Tying points and projection-vector builder for one knot span.

    Tying points are the reduced (``p``-point) Gauss points of the span; the
    builder evaluates the local degree ``p - 1`` functions and collocates them
    at the tying points, so ``P(tying_point_j)`` is the j-th unit vector and
    the entries of ``P`` sum to one everywhere.
    """
    p = kv_xi.degree
    if p < 2:
        raise ValidationError("tying projection needs degree >= 2")
    spans = kv_xi.spans()
    _, a, b = spans[element_index]
    pts, _ = map_rule_to_interval(gauss_rule(p), a, b)
    local_kv = local_reduced_space(kv_xi, element_index)

    m = np.empty((p, p))
    for j, xt in enumerate(pts):
        _, vals = basis_functions(local_kv, xt)
        m[j, :] = vals
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > 1e12:
        raise GeometryError("degenerate knot span: singular tying interpolation")
    m_inv = np.linalg.inv(m)

    def projector(xi: float) -> np.ndarray:
        _, vals = basis_functions(local_kv, xi)
        return vals @ m_inv

    return pts, projector


# ---------------------------------------------------------------------------
# kinematic operators
# ---------------------------------------------------------------------------


def strain_displacement_matrix(dn: np.ndarray, g: np.ndarray) -> np.ndarray:
    """6 x 3*nloc operator at the current configuration.

    ``dn`` holds parametric gradients of the basis (nloc, 3); ``g`` the
    current parametric tangents x_,a as columns.  Row c of the result pairs
    the tangents and gradients so that d(strain) = B du holds for the
    covariant convective components.
    """
    nloc = dn.shape[0]
    b = np.empty((6, nloc, 3))
    b[0] = np.outer(dn[:, 0], g[:, 0])
    b[1] = np.outer(dn[:, 1], g[:, 1])
    b[2] = np.outer(dn[:, 2], g[:, 2])
    b[3] = np.outer(dn[:, 1], g[:, 0]) + np.outer(dn[:, 0], g[:, 1])
    b[4] = np.outer(dn[:, 2], g[:, 1]) + np.outer(dn[:, 1], g[:, 2])
    b[5] = np.outer(dn[:, 2], g[:, 0]) + np.outer(dn[:, 0], g[:, 2])
    return b.reshape(6, 3 * nloc)


def covariant_strain(j_ref: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Green-Lagrange strain in covariant convective components (Voigt).

    ``j_ref`` holds the reference tangents as columns, ``d`` the displacement
    parametric gradients.  Expanding G.d + d.d/2 avoids the catastrophic
    cancellation of the g.g - G.G form when the metric dwarfs the strain
    (extreme slenderness).
    """
    m = j_ref.T @ d
    return sym3_to_voigt_strain(0.5 * (m + m.T + d.T @ d))


def geometric_dyads(dn: np.ndarray) -> np.ndarray:
    """(6, nloc, nloc) gradient dyads of the second-variation operator.

    Contracting component c with a stress value and summing yields the nodal
    geometric stiffness; the dyads depend on the reference gradients only.
    """
    d1, d2, d3 = dn[:, 0], dn[:, 1], dn[:, 2]
    out = np.empty((6, dn.shape[0], dn.shape[0]))
    out[0] = np.outer(d1, d1)
    out[1] = np.outer(d2, d2)
    out[2] = np.outer(d3, d3)
    out[3] = np.outer(d1, d2)
    out[3] += out[3].T
    out[4] = np.outer(d2, d3)
    out[4] += out[4].T
    out[5] = np.outer(d1, d3)
    out[5] += out[5].T
    return out


def third_order_operator(dn: np.ndarray) -> np.ndarray:
    """Full (nloc, 6, nloc) second-variation operator, test/inspection use."""
    dy = geometric_dyads(dn)
    return np.transpose(dy, (1, 0, 2))


def kinematic_operators(patch: NurbsPatch, coords, u_element: np.ndarray):
    """Point evaluation of the kinematic quantities at a parametric location.

    Returns ``(B, Bgeo, strain, g)``: the strain-displacement operator, the
    (nloc, 6, nloc) second-variation operator, the covariant strain and the
    current parametric tangents (columns).  ``u_element`` is ordered like the
    local functions of the containing element.
    """
    ev = nurbs_trivariate(patch, *coords)
    nloc = ev.values.size
    u_mat = np.asarray(u_element, dtype=float).reshape(nloc, 3)
    d = u_mat.T @ ev.gradients
    g = ev.jacobian + d
    return (
        strain_displacement_matrix(ev.gradients, g),
        third_order_operator(ev.gradients),
        covariant_strain(ev.jacobian, d),
        g,
    )


# ---------------------------------------------------------------------------
# precomputed element data
# ---------------------------------------------------------------------------


@dataclass
class ElementData:
    """Reference-configuration data of one element, frozen after setup."""

    spans: tuple[int, int, int]
    bounds: np.ndarray
    local_indices: np.ndarray
    nloc: int
    ndof: int
    ngp: int
    n_cross: int
    use_ans: bool
    n_alpha: int
    weights: np.ndarray          # (ngp,) gauss weight x reference volume scale
    dN: np.ndarray               # (ngp, nloc, 3)
    J0: np.ndarray               # (ngp, 3, 3) reference tangents as columns
    J0inv: np.ndarray            # (ngp, 3, 3)
    TE: np.ndarray               # (ngp, 6, 6) convective -> Cartesian strain map
    dyads: np.ndarray            # (ngp, 6, nloc, nloc)
    BeL: np.ndarray | None       # (ngp, 6, n_alpha)
    ax_of: np.ndarray            # (ngp,) axial gauss index
    cross_of: np.ndarray         # (ngp,) cross-section gauss index
    P: np.ndarray | None         # (n_ax, n_tying) projection weights
    t_dN: np.ndarray | None      # (n_tying, n_cross, nloc, 3)
    t_J0: np.ndarray | None      # (n_tying, n_cross, 3, 3)
    t_dyads: np.ndarray | None   # (n_tying, n_cross, 3, nloc, nloc)


@dataclass
class ElementState:
    """Per-element internal unknowns and condensation storage.

    ``mixed_stress`` holds the per-point independent stresses driving the
    geometric stiffness of the current iteration; ``stored_const`` and the
    ``stored_*`` products keep the previous iteration's constitutive state
    from which the next independent stresses are extrapolated.
    """

    alpha: np.ndarray
    cond_residual: np.ndarray | None = None
    cond_coupling: np.ndarray | None = None
    mixed_stress: np.ndarray | None = None
    stored_const: np.ndarray | None = None
    stored_cb: np.ndarray | None = None
    stored_cbl: np.ndarray | None = None

    def copy(self) -> "ElementState":
        def c(a):
            return None if a is None else a.copy()

        return ElementState(
            self.alpha.copy(),
            c(self.cond_residual),
            c(self.cond_coupling),
            c(self.mixed_stress),
            c(self.stored_const),
            c(self.stored_cb),
            c(self.stored_cbl),
        )


@dataclass
class BlockResult:
    Ru: np.ndarray
    Ra: np.ndarray
    Kuu: np.ndarray
    Kua: np.ndarray
    Kaa: np.ndarray
    S: np.ndarray        # (ngp, 6) constitutive stresses, convective frame
    Chat: np.ndarray     # (ngp, 6, 6) constitutive tangents, convective frame
    B: np.ndarray        # (ngp, 6, ndof)
    energy: float


class PatchKernel:
    """All elements of one patch, precomputed for a given formulation.

    Quadrature defaults to degree + 1 points per direction (full Gauss);
    ``quad_points`` overrides the per-direction counts.
    """

    def __init__(
        self,
        patch: NurbsPatch,
        formulation: Formulation,
        quad_points: tuple[int, int, int] | None = None,
    ):
        self.patch = patch
        self.formulation = formulation
        p, q, r = patch.degrees
        self.use_ans = formulation.uses_ans and p >= 2
        self.use_eas = formulation.uses_eas
        self.use_mip = formulation.uses_mip
        self.n_alpha = N_EAS_MODES * (p if p >= 2 else 1) if self.use_eas else 0

        if quad_points is None:
            quad_points = (p + 1, q + 1, r + 1)
        rule_ax = gauss_rule(quad_points[0])
        rule_eta = gauss_rule(quad_points[1])
        rule_zeta = gauss_rule(quad_points[2])
        self.elements: list[ElementData] = []
        for ex, (sx, ax, bx) in enumerate(patch.kv_xi.spans()):
            for sy, ay, by in patch.kv_eta.spans():
                for sz, az, bz in patch.kv_zeta.spans():
                    self.elements.append(
                        self._build_element(
                            (sx, sy, sz),
                            np.array([[ax, bx], [ay, by], [az, bz]]),
                            ex,
                            (rule_ax, rule_eta, rule_zeta),
                        )
                    )

    def _build_element(self, spans, bounds, ex, rules) -> ElementData:
        patch = self.patch
        p = patch.kv_xi.degree
        local = patch.local_indices(spans)
        nloc = local.shape[0]
        ndof = 3 * nloc

        pts_w = [map_rule_to_interval(rules[d], bounds[d, 0], bounds[d, 1]) for d in range(3)]
        n_ax = pts_w[0][0].size
        n_cross = pts_w[1][0].size * pts_w[2][0].size
        ngp = n_ax * n_cross

        weights = np.empty(ngp)
        dN = np.empty((ngp, nloc, 3))
        J0 = np.empty((ngp, 3, 3))
        J0inv = np.empty((ngp, 3, 3))
        TE = np.empty((ngp, 6, 6))
        dyads = np.empty((ngp, 6, nloc, nloc))
        BeL = np.empty((ngp, 6, self.n_alpha)) if self.n_alpha else None
        ax_of = np.empty(ngp, dtype=int)
        cross_of = np.empty(ngp, dtype=int)

        g = 0
        for gx, (x, wx) in enumerate(zip(*pts_w[0])):
            for gy, (y, wy) in enumerate(zip(*pts_w[1])):
                for gz, (z, wz) in enumerate(zip(*pts_w[2])):
                    ev = nurbs_trivariate(patch, x, y, z)
                    det = np.linalg.det(ev.jacobian)
                    if det <= 0.0:
                        raise GeometryError(
                            f"non-positive reference Jacobian ({det}) at gauss point"
                        )
                    weights[g] = wx * wy * wz * det
                    dN[g] = ev.gradients
                    J0[g] = ev.jacobian
                    J0inv[g] = np.linalg.inv(ev.jacobian)
                    TE[g] = strain_transform(J0inv[g])
                    dyads[g] = geometric_dyads(ev.gradients)
                    if self.n_alpha:
                        be, lmat = eas_operators(p, (x, y, z), bounds)
                        BeL[g] = be @ lmat
                    ax_of[g] = gx
                    cross_of[g] = gy * pts_w[2][0].size + gz
                    g += 1

        P = t_dN = t_J0 = t_dyads = None
        if self.use_ans:
            tying, projector = ans_projection(patch.kv_xi, ex)
            nt = tying.size
            P = np.array([projector(x) for x in pts_w[0][0]])
            t_dN = np.empty((nt, n_cross, nloc, 3))
            t_J0 = np.empty((nt, n_cross, 3, 3))
            t_dyads = np.empty((nt, n_cross, 3, nloc, nloc))
            for j, xt in enumerate(tying):
                c = 0
                for y in pts_w[1][0]:
                    for z in pts_w[2][0]:
                        ev = nurbs_trivariate(patch, xt, y, z)
                        t_dN[j, c] = ev.gradients
                        t_J0[j, c] = ev.jacobian
                        dy = geometric_dyads(ev.gradients)
                        t_dyads[j, c] = dy[list(ANS_ROWS)]
                        c += 1

        return ElementData(
            spans=spans,
            bounds=bounds,
            local_indices=local,
            nloc=nloc,
            ndof=ndof,
            ngp=ngp,
            n_cross=n_cross,
            use_ans=self.use_ans,
            n_alpha=self.n_alpha,
            weights=weights,
            dN=dN,
            J0=J0,
            J0inv=J0inv,
            TE=TE,
            dyads=dyads,
            BeL=BeL,
            ax_of=ax_of,
            cross_of=cross_of,
            P=P,
            t_dN=t_dN,
            t_J0=t_J0,
            t_dyads=t_dyads,
        )

    def fresh_state(self, ed: ElementData) -> ElementState:
        return ElementState(np.zeros(ed.n_alpha))


def _tying_pass(ed: ElementData, u_mat: np.ndarray):
    """Strains and operator rows 0/3/5 at every tying point and section point."""
    nt = ed.t_dN.shape[0]
    rows = np.empty((nt, ed.n_cross, 3, ed.ndof))
    strains = np.empty((nt, ed.n_cross, 3))
    for j in range(nt):
        for c in range(ed.n_cross):
            dn = ed.t_dN[j, c]
            jr = ed.t_J0[j, c]
            d = u_mat.T @ dn
            g = jr + d
            g1, g2, g3 = g[:, 0], g[:, 1], g[:, 2]
            strains[j, c, 0] = jr[:, 0] @ d[:, 0] + 0.5 * (d[:, 0] @ d[:, 0])
            strains[j, c, 1] = jr[:, 0] @ d[:, 1] + jr[:, 1] @ d[:, 0] + d[:, 0] @ d[:, 1]
            strains[j, c, 2] = jr[:, 0] @ d[:, 2] + jr[:, 2] @ d[:, 0] + d[:, 0] @ d[:, 2]
            rows[j, c, 0] = np.outer(dn[:, 0], g1).ravel()
            rows[j, c, 1] = (np.outer(dn[:, 1], g1) + np.outer(dn[:, 0], g2)).ravel()
            rows[j, c, 2] = (np.outer(dn[:, 2], g1) + np.outer(dn[:, 0], g3)).ravel()
    return strains, rows


def element_blocks(
    ed: ElementData,
    u_e: np.ndarray,
    alpha: np.ndarray,
    material: MaterialModel,
    geo_stress: np.ndarray | None = None,
) -> BlockResult:
    """Residual and stiffness blocks at a frozen state (u, alpha).

    ``geo_stress`` optionally substitutes per-point stresses into the
    geometric stiffness; residuals always use the constitutive stresses.
    """
    u_mat = u_e.reshape(ed.nloc, 3)
    na = ed.n_alpha
    ru = np.zeros(ed.ndof)
    ra = np.zeros(na)
    kmat = np.zeros((ed.ndof, ed.ndof))
    kua = np.zeros((ed.ndof, na))
    kaa = np.zeros((na, na))
    kgeo = np.zeros((ed.nloc, ed.nloc))
    s_all = np.empty((ed.ngp, 6))
    c_all = np.empty((ed.ngp, 6, 6))
    b_all = np.empty((ed.ngp, 6, ed.ndof))
    energy = 0.0

    if ed.use_ans:
        t_strain, t_rows = _tying_pass(ed, u_mat)

    for g in range(ed.ngp):
        dn = ed.dN[g]
        d = u_mat.T @ dn
        gmat = ed.J0[g] + d
        strain = covariant_strain(ed.J0[g], d)
        b = strain_displacement_matrix(dn, gmat)
        if ed.use_ans:
            pv = ed.P[ed.ax_of[g]]
            c = ed.cross_of[g]
            for k, row in enumerate(ANS_ROWS):
                strain[row] = pv @ t_strain[:, c, k]
                b[row] = pv @ t_rows[:, c, k]

        total = strain if not na else strain + ed.BeL[g] @ alpha
        te = ed.TE[g]
        s_cart, c_cart, w_dens = material_response(material, te @ total)
        s = te.T @ s_cart
        chat = te.T @ c_cart @ te

        w = ed.weights[g]
        ru += w * (b.T @ s)
        cb = chat @ b
        kmat += w * (b.T @ cb)
        if na:
            bel = ed.BeL[g]
            ra += w * (bel.T @ s)
            kua += w * (b.T @ (chat @ bel))
            kaa += w * (bel.T @ (chat @ bel))
        energy += w * w_dens

        sg = s if geo_stress is None else geo_stress[g]
        if ed.use_ans:
            dy = ed.dyads[g]
            h = sg[1] * dy[1] + sg[2] * dy[2] + sg[4] * dy[4]
            tdy = ed.t_dyads[:, ed.cross_of[g]]
            mix = sg[0] * tdy[:, 0] + sg[3] * tdy[:, 1] + sg[5] * tdy[:, 2]
            h = h + np.tensordot(ed.P[ed.ax_of[g]], mix, axes=1)
        else:
            h = np.einsum("c,cab->ab", sg, ed.dyads[g])
        kgeo += w * h

        s_all[g] = s
        c_all[g] = chat
        b_all[g] = b

    kuu = kmat + np.kron(kgeo, np.eye(3))
    return BlockResult(ru, ra, kuu, kua, kaa, s_all, c_all, b_all, energy)


def element_residual_tangent(
    ed: ElementData,
    u_e: np.ndarray,
    du_e: np.ndarray,
    state: ElementState,
    material: MaterialModel,
    use_mip: bool,
    first_iter_of_step: bool,
):
    """One Newton-iteration element evaluation with state updates.

    Order of operations: update the condensed internal parameters from the
    stored arrays and the last displacement increment, advance the per-point
    independent stresses (or seed them on the first iteration of a load
    step), evaluate the blocks, condense, refresh the stored arrays.

    The independent-stress update is the Newton update of the mixed system:
    extrapolate the previous constitutive state by the tangent times the
    increments.  (For a law linear in the strain this is exact; for others it
    is first-order consistent.)  Including the previous constitutive stress
    keeps the update self-correcting, so at convergence the independent and
    constitutive stresses coincide and converged results are formulation
    independent.
    """
    na = ed.n_alpha
    dalpha = np.zeros(na)
    if na and state.cond_residual is not None:
        dalpha = -(state.cond_residual + state.cond_coupling @ du_e)
        state.alpha = state.alpha + dalpha

    geo = None
    if use_mip and not first_iter_of_step and state.stored_const is not None:
        geo = state.stored_const + np.einsum("gij,j->gi", state.stored_cb, du_e)
        if na:
            geo += np.einsum("gij,j->gi", state.stored_cbl, dalpha)

    blocks = element_blocks(ed, u_e, state.alpha, material, geo_stress=geo)

    if use_mip:
        state.mixed_stress = blocks.S.copy() if geo is None else geo
        state.stored_const = blocks.S.copy()
        state.stored_cb = np.einsum("gab,gbc->gac", blocks.Chat, blocks.B)
        if na:
            state.stored_cbl = np.einsum("gab,gbc->gac", blocks.Chat, ed.BeL)

    internal_decrement = 0.0
    if na:
        try:
            cho = cho_factor(blocks.Kaa)
        except np.linalg.LinAlgError as exc:
            raise CondensationError(f"internal-parameter block not SPD: {exc}") from exc
        cond_residual = cho_solve(cho, blocks.Ra)
        cond_coupling = cho_solve(cho, blocks.Kua.T)
        r_e = blocks.Ru - blocks.Kua @ cond_residual
        k_e = blocks.Kuu - blocks.Kua @ cond_coupling
        state.cond_residual = cond_residual
        state.cond_coupling = cond_coupling
        # energy decrement of the condensed internal equations; convergence
        # of the displacement residual alone must not mask an unequilibrated
        # enhancement state
        internal_decrement = abs(float(blocks.Ra @ cond_residual))
    else:
        r_e, k_e = blocks.Ru, blocks.Kuu

    return k_e, r_e, blocks.energy, internal_decrement


def gp_stress_states(ed: ElementData, u_e: np.ndarray, alpha: np.ndarray, material: MaterialModel):
    """Per-point (weight, deformation gradient, Cartesian stress tensor).

    The deformation gradient comes from the compatible displacement field
    alone; the stress is the constitutive one at the projected plus enhanced
    strain, i.e. exactly what the residual integrates.
    """
    u_mat = u_e.reshape(ed.nloc, 3)
    if ed.use_ans:
        t_strain, _ = _tying_pass(ed, u_mat)
    out = []
    for g in range(ed.ngp):
        d = u_mat.T @ ed.dN[g]
        gmat = ed.J0[g] + d
        strain = covariant_strain(ed.J0[g], d)
        if ed.use_ans:
            pv = ed.P[ed.ax_of[g]]
            c = ed.cross_of[g]
            for k, row in enumerate(ANS_ROWS):
                strain[row] = pv @ t_strain[:, c, k]
        if ed.n_alpha:
            strain = strain + ed.BeL[g] @ alpha
        s_cart, _, _ = material_response(material, ed.TE[g] @ strain)
        f_cart = gmat @ ed.J0inv[g]
        out.append((ed.weights[g], f_cart, voigt_stress_to_sym3(s_cart)))
    return out
