"""Hyperelastic constitutive models in Voigt form, plus frame transforms.

Voigt ordering is fixed package-wide as (xx, yy, zz, xy, yz, xz); strain
vectors carry engineering shears (2*E_ab), stress vectors do not.  With that
convention the contraction ``strain_voigt @ stress_voigt`` equals the tensor
double contraction and tangent matrices need no shear scaling.

Strain components produced by the element kernel are covariant components in
the convective (parametric) frame.  The isotropic laws below are stated in a
Cartesian frame; :func:`strain_transform` maps between the two frames per
quadrature point using the reference contravariant basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InvertedElementError, ValidationError

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2))

_IDENTITY_VOIGT = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


def sym3_to_voigt_strain(t: np.ndarray) -> np.ndarray:
    """Symmetric 3x3 tensor to strain-type Voigt (shears doubled)."""
    return np.array(
        [t[0, 0], t[1, 1], t[2, 2], t[0, 1] + t[1, 0], t[1, 2] + t[2, 1], t[0, 2] + t[2, 0]]
    )


def voigt_strain_to_sym3(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [v[0], 0.5 * v[3], 0.5 * v[5]],
            [0.5 * v[3], v[1], 0.5 * v[4]],
            [0.5 * v[5], 0.5 * v[4], v[2]],
        ]
    )


def sym3_to_voigt_stress(t: np.ndarray) -> np.ndarray:
    return np.array([t[0, 0], t[1, 1], t[2, 2], t[0, 1], t[1, 2], t[0, 2]])


def voigt_stress_to_sym3(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[v[0], v[3], v[5]], [v[3], v[1], v[4]], [v[5], v[4], v[2]]]
    )


def lame_from_engineering(youngs_modulus: float, poissons_ratio: float) -> tuple[float, float]:
    """Lame pair (lambda, mu) from Young's modulus and Poisson's ratio."""
    e, nu = youngs_modulus, poissons_ratio
    if e <= 0.0:
        raise ValidationError(f"Young's modulus must be positive, got {e}")
    if not -1.0 < nu < 0.5:
        raise ValidationError(f"Poisson's ratio must lie in (-1, 0.5), got {nu}")
    lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = e / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class MaterialModel:
    """Isotropic hyperelastic model: 'svk' or 'neo-hookean'."""

    kind: str
    lam: float
    mu: float

    def __post_init__(self):
        if self.kind not in ("svk", "neo-hookean"):
            raise ValidationError(f"unknown material kind {self.kind!r}")
        if self.mu <= 0.0:
            raise ValidationError("shear modulus must be positive")
        if self.lam <= -2.0 / 3.0 * self.mu:
            raise ValidationError("lambda below stability bound -2mu/3")

    @classmethod
    def from_engineering(cls, kind: str, youngs_modulus: float, poissons_ratio: float):
        lam, mu = lame_from_engineering(youngs_modulus, poissons_ratio)
        return cls(kind, lam, mu)


def svk_tangent(m: MaterialModel) -> np.ndarray:
    """State-independent Voigt tangent lambda*(1x1) + 2mu*I_sym."""
    ones = np.outer(_IDENTITY_VOIGT, _IDENTITY_VOIGT)
    return m.lam * ones + m.mu * np.diag([2.0, 2.0, 2.0, 1.0, 1.0, 1.0])


def svk_response(strain_voigt: np.ndarray, m: MaterialModel):
    """Stress, tangent and energy density of the quadratic-in-E model.

    S = lambda tr(E) I + 2 mu E,  W = lambda/2 tr(E)^2 + mu E:E.
    """
    tangent = svk_tangent(m)
    stress = tangent @ strain_voigt
    energy = 0.5 * float(strain_voigt @ stress)
    return stress, tangent, energy


def neo_hookean_response(c_voigt: np.ndarray, m: MaterialModel):
    """Compressible Neo-Hookean response from the right Cauchy-Green tensor.

    ``c_voigt`` uses the strain Voigt convention (off-diagonals doubled), so
    C = I_voigt + 2 E for a Green-Lagrange strain E.

    S = lambda ln(J) C^-1 + mu (I - C^-1) with J = sqrt(det C); the returned
    tangent is 2 dS/dC = dS/dE in the same Voigt convention.  The energy is
    W = lambda/2 ln(J)^2 + mu/2 (tr C - 3) - mu ln(J), the potential whose
    E-derivative reproduces S.
    """
    c3 = voigt_strain_to_sym3(c_voigt)
    det = np.linalg.det(c3)
    if not det > 0.0:
        raise InvertedElementError(f"det(C) = {det} <= 0")
    ci = np.linalg.inv(c3)
    lnj = 0.5 * np.log(det)
    lam, mu = m.lam, m.mu

    s3 = lam * lnj * ci + mu * (np.eye(3) - ci)
    stress = sym3_to_voigt_stress(s3)

    tangent = np.empty((6, 6))
    coeff = mu - lam * lnj
    for a, (i, j) in enumerate(VOIGT_PAIRS):
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            tangent[a, b] = lam * ci[i, j] * ci[k, l] + coeff * (
                ci[i, k] * ci[j, l] + ci[i, l] * ci[j, k]
            )

    energy = 0.5 * lam * lnj**2 + 0.5 * mu * (np.trace(c3) - 3.0) - mu * lnj
    return stress, tangent, energy


def material_response(m: MaterialModel, strain_voigt: np.ndarray):
    """Dispatch on the model kind; input is a Cartesian Green-Lagrange strain."""
    if m.kind == "svk":
        return svk_response(strain_voigt, m)
    return neo_hookean_response(_IDENTITY_VOIGT + 2.0 * strain_voigt, m)


def strain_transform(contravariant_basis: np.ndarray) -> np.ndarray:
    """6x6 matrix mapping covariant convective strain Voigt to Cartesian Voigt.

    ``contravariant_basis`` holds the dual base vectors G^i as rows A, i.e.
    the inverse of the reference Jacobian whose columns are dX/d(xi,eta,zeta).
    The Cartesian tensor of a covariant component array E_ij is A^T E A; this
    routine folds that congruence into Voigt form column by column.
    """
    a = np.asarray(contravariant_basis, dtype=float)
    if abs(np.linalg.det(a)) < 1e-300:
        raise GeometryError("singular contravariant basis")
    t = np.empty((6, 6))
    for b in range(6):
        e = np.zeros(6)
        e[b] = 1.0
        t[:, b] = sym3_to_voigt_strain(a.T @ voigt_strain_to_sym3(e) @ a)
    return t


def convective_transform(tangent: np.ndarray, contravariant_basis: np.ndarray) -> np.ndarray:
    """Pull a Cartesian Voigt tangent into contravariant convective components.

    Energy-consistent with :func:`strain_transform`: with T the strain map,
    the convective tangent is T^T C T, so that strain-energy products are
    frame invariant.
    """
    t = strain_transform(contravariant_basis)
    return t.T @ tangent @ t
