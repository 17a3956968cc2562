"""Univariate B-spline bases, trivariate NURBS patches and Gauss quadrature.

Basis evaluation follows the Cox-de Boor recursion in its standard
triangular-table form (see Piegl & Tiller, The NURBS Book, algorithms
A2.1-A2.3).  Evaluation is sparse: only the ``degree + 1`` functions that are
non-zero on the containing knot span are returned, together with the span
index; translating to global function indices is the caller's job.

The half-open span convention is closed at the right end of the knot domain so
that patch boundaries are evaluable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GeometryError, UnsupportedError, ValidationError


@dataclass(frozen=True)
class KnotVector:
    """Open (clamped) knot vector with its polynomial degree.

    Parameters
    ----------
    knots : array_like
        Non-decreasing sequence; first and last value each repeated exactly
        ``degree + 1`` times.
    degree : int
        Polynomial degree ``p >= 0``.
    """

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if p < 0:
            raise ValidationError(f"degree must be non-negative, got {p}")
        if knots.ndim != 1 or knots.size < 2 * (p + 1):
            raise ValidationError("knot vector too short for its degree")
        if np.any(np.diff(knots) < 0.0):
            raise ValidationError("knot vector must be non-decreasing")
        first, last = knots[0], knots[-1]
        if not (np.all(knots[: p + 1] == first) and knots[p + 1] > first):
            raise ValidationError("first knot must repeat exactly degree+1 times")
        if not (np.all(knots[-(p + 1) :] == last) and knots[-(p + 2)] < last):
            raise ValidationError("last knot must repeat exactly degree+1 times")
        if self.num_functions < p + 1:
            raise ValidationError("knot vector defines too few basis functions")

    @property
    def num_functions(self) -> int:
        """Number of basis functions n = len(knots) - degree - 1."""
        return self.knots.size - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[self.degree]), float(self.knots[self.num_functions])

    def breakpoints(self) -> np.ndarray:
        """Distinct knot values covering the domain."""
        lo = self.degree
        hi = self.num_functions + 1
        return np.unique(self.knots[lo:hi])

    def spans(self) -> list[tuple[int, float, float]]:
        """Non-empty knot spans as ``(span_index, left, right)`` triples.

        ``span_index`` is the index s with ``knots[s] <= xi < knots[s+1]``;
        the active basis functions on that span are ``s - degree .. s``.
        """
        out = []
        for s in range(self.degree, self.num_functions):
            a, b = self.knots[s], self.knots[s + 1]
            if b > a:
                out.append((s, float(a), float(b)))
        return out

    @property
    def num_elements(self) -> int:
        return len(self.spans())


def open_uniform_knots(num_elements: int, degree: int) -> KnotVector:
    """Open uniform knot vector over [0, num_elements] with unit spans."""
    if num_elements < 1:
        raise ValidationError("need at least one element")
    interior = np.arange(1, num_elements, dtype=float)
    knots = np.concatenate(
        [np.zeros(degree + 1), interior, np.full(degree + 1, float(num_elements))]
    )
    return KnotVector(knots, degree)


def find_span(kv: KnotVector, xi: float) -> int:
    """Knot span index containing ``xi``; right-closed at the domain end."""
    lo, hi = kv.domain
    if not (lo <= xi <= hi):
        raise DomainError(f"parameter {xi} outside knot domain [{lo}, {hi}]")
    if xi >= hi:
        # last non-empty span
        s = kv.num_functions - 1
        while kv.knots[s + 1] <= kv.knots[s]:
            s -= 1
        return s
    s = int(np.searchsorted(kv.knots, xi, side="right")) - 1
    return min(max(s, kv.degree), kv.num_functions - 1)


def basis_functions(kv: KnotVector, xi: float) -> tuple[int, np.ndarray]:
    """Non-zero B-spline basis values at ``xi``.

    Returns
    -------
    span : int
        Containing span index.
    values : ndarray, shape (degree + 1,)
        Values of functions ``span - degree .. span``; non-negative, summing
        to one.
    """
    span = find_span(kv, xi)
    p = kv.degree
    knots = kv.knots
    values = np.empty(p + 1)
    left = np.empty(p)
    right = np.empty(p)
    values[0] = 1.0
    for j in range(1, p + 1):
        left[j - 1] = xi - knots[span + 1 - j]
        right[j - 1] = knots[span + j] - xi
        saved = 0.0
        for r in range(j):
            tmp = values[r] / (right[r] + left[j - r - 1])
            values[r] = saved + right[r] * tmp
            saved = left[j - r - 1] * tmp
        values[j] = saved
    return span, values


def basis_derivatives(kv: KnotVector, xi: float, order: int) -> tuple[int, np.ndarray]:
    """Basis values and derivatives up to ``order`` (A2.3).

    Returns
    -------
    span : int
    ders : ndarray, shape (order + 1, degree + 1)
        Row 0 matches :func:`basis_functions`; row k holds k-th derivatives.
        Derivatives above the degree are identically zero.
    """
    if order < 0:
        raise ValidationError("derivative order must be non-negative")
    span = find_span(kv, xi)
    p = kv.degree
    knots = kv.knots
    n = min(order, p)

    ndu = np.empty((p + 1, p + 1))
    left = np.empty(p)
    right = np.empty(p)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j - 1] = xi - knots[span + 1 - j]
        right[j - 1] = knots[span + j] - xi
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r] + left[j - r - 1]
            tmp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r] * tmp
            saved = left[j - r - 1] * tmp
        ndu[j, j] = saved

    ders = np.zeros((order + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.empty((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, n + 1):
        ders[k, :] *= fac
        fac *= p - k
    return span, ders


def greville_abscissae(kv: KnotVector) -> np.ndarray:
    """Knot averages; control values at these points reproduce linears."""
    p = kv.degree
    if p == 0:
        return 0.5 * (kv.knots[:-1] + kv.knots[1:])
    n = kv.num_functions
    return np.array([kv.knots[i + 1 : i + p + 1].mean() for i in range(n)])


def local_reduced_space(kv: KnotVector, element_index: int) -> KnotVector:
    """Degree ``p - 1`` open knot vector over a single knot span.

    The reduced space supplies the interpolation functions used to project
    beam-direction strain rows from the tying points back to the quadrature
    points.
    """
    if kv.degree < 1:
        raise UnsupportedError("reduced local space needs degree >= 1")
    spans = kv.spans()
    if not 0 <= element_index < len(spans):
        raise DomainError(f"element index {element_index} out of range")
    _, a, b = spans[element_index]
    p = kv.degree
    return KnotVector(np.array([a] * p + [b] * p), p - 1)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

MAX_GAUSS_POINTS = 10


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre points/weights on (-1, 1); weights sum to 2."""

    points: np.ndarray
    weights: np.ndarray


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_rule(k: int) -> QuadratureRule:
    """k-point Gauss-Legendre rule, exact for polynomials of degree 2k - 1.

    Nodes are found by Newton iteration on the Legendre polynomial from the
    Chebyshev initial guess; no tabulated coefficients.
    """
    if not 1 <= k <= MAX_GAUSS_POINTS:
        raise UnsupportedError(f"gauss rule size {k} outside 1..{MAX_GAUSS_POINTS}")
    if k == 1:
        return QuadratureRule(np.zeros(1), np.full(1, 2.0))
    x = np.cos(np.pi * (np.arange(1, k + 1) - 0.25) / (k + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(k, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre_and_derivative(k, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule(x[order], w[order])


def map_rule_to_interval(rule: QuadratureRule, a: float, b: float):
    """Affine image of the reference rule on [a, b]; returns (points, weights)."""
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * rule.points, half * rule.weights


# ---------------------------------------------------------------------------
# Lagrange interpolation on [-1, 1]
# ---------------------------------------------------------------------------


def lagrange_nodes(count: int) -> np.ndarray:
    """Equispaced interpolation nodes on [-1, 1]; a single node sits at 0."""
    if count < 1:
        raise ValidationError("need at least one node")
    if count == 1:
        return np.zeros(1)
    return np.linspace(-1.0, 1.0, count)


def lagrange_values(nodes: np.ndarray, x: float) -> np.ndarray:
    """All Lagrange polynomials through ``nodes`` evaluated at ``x``."""
    nodes = np.asarray(nodes, dtype=float)
    m = nodes.size
    if m == 1:
        return np.ones(1)
    vals = np.empty(m)
    for i in range(m):
        num = x - np.delete(nodes, i)
        den = nodes[i] - np.delete(nodes, i)
        vals[i] = np.prod(num / den)
    return vals


# ---------------------------------------------------------------------------
# trivariate NURBS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NurbsPatch:
    """Trivariate NURBS solid.

    ``control_points`` has shape (n, m, l, 3) and ``weights`` shape (n, m, l),
    where (n, m, l) are the function counts of the three knot vectors.  All
    weights must be strictly positive.
    """

    kv_xi: KnotVector
    kv_eta: KnotVector
    kv_zeta: KnotVector
    control_points: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float)
        shape = (
            self.kv_xi.num_functions,
            self.kv_eta.num_functions,
            self.kv_zeta.num_functions,
        )
        if cp.shape != shape + (3,):
            raise ValidationError(
                f"control grid shape {cp.shape} does not match knot vectors {shape}"
            )
        w = self.weights
        w = np.ones(shape) if w is None else np.asarray(w, dtype=float)
        if w.shape != shape:
            raise ValidationError("weight grid shape does not match knot vectors")
        if np.any(w <= 0.0):
            raise ValidationError("all weights must be strictly positive")
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)

    @property
    def degrees(self) -> tuple[int, int, int]:
        return (self.kv_xi.degree, self.kv_eta.degree, self.kv_zeta.degree)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.weights.shape

    @property
    def knot_vectors(self) -> tuple[KnotVector, KnotVector, KnotVector]:
        return (self.kv_xi, self.kv_eta, self.kv_zeta)

    def local_indices(self, spans: tuple[int, int, int]) -> np.ndarray:
        """(nloc, 3) grid indices of the functions active on the given spans.

        Ordering is C-order over the local (i, j, k) block; every evaluation
        routine in this module uses the same ordering.
        """
        p, q, r = self.degrees
        si, sj, sk = spans
        ii = np.arange(si - p, si + 1)
        jj = np.arange(sj - q, sj + 1)
        kk = np.arange(sk - r, sk + 1)
        grid = np.stack(np.meshgrid(ii, jj, kk, indexing="ij"), axis=-1)
        return grid.reshape(-1, 3)


@dataclass(frozen=True)
class TrivariateValue:
    """Result of a point evaluation of a NURBS volume.

    ``values``/``gradients`` cover only the active local functions, ordered as
    in :meth:`NurbsPatch.local_indices`.  ``jacobian`` columns are the
    parametric tangents dX/dxi, dX/deta, dX/dzeta.
    """

    spans: tuple[int, int, int]
    values: np.ndarray
    gradients: np.ndarray
    point: np.ndarray
    jacobian: np.ndarray


def nurbs_trivariate(patch: NurbsPatch, xi: float, eta: float, zeta: float) -> TrivariateValue:
    """Rational basis values, parametric gradients, point and Jacobian."""
    si, bx = basis_derivatives(patch.kv_xi, xi, 1)
    sj, by = basis_derivatives(patch.kv_eta, eta, 1)
    sk, bz = basis_derivatives(patch.kv_zeta, zeta, 1)
    p, q, r = patch.degrees

    wloc = patch.weights[si - p : si + 1, sj - q : sj + 1, sk - r : sk + 1]
    cloc = patch.control_points[si - p : si + 1, sj - q : sj + 1, sk - r : sk + 1]

    t = np.einsum("i,j,k->ijk", bx[0], by[0], bz[0]) * wloc
    tg = np.stack(
        [
            np.einsum("i,j,k->ijk", bx[1], by[0], bz[0]) * wloc,
            np.einsum("i,j,k->ijk", bx[0], by[1], bz[0]) * wloc,
            np.einsum("i,j,k->ijk", bx[0], by[0], bz[1]) * wloc,
        ],
        axis=-1,
    )
    wsum = t.sum()
    wgrad = tg.reshape(-1, 3).sum(axis=0)

    nloc = (p + 1) * (q + 1) * (r + 1)
    values = (t / wsum).reshape(nloc)
    gradients = (tg / wsum - t[..., None] * (wgrad / wsum**2)).reshape(nloc, 3)

    pts = cloc.reshape(nloc, 3)
    point = values @ pts
    jacobian = (gradients.T @ pts).T  # columns dX/d(xi, eta, zeta)
    return TrivariateValue((si, sj, sk), values, gradients, point, jacobian)


def patch_elements(patch: NurbsPatch) -> list[tuple[tuple[int, int, int], np.ndarray]]:
    """All non-empty parametric elements of a patch.

    Returns ``(spans, bounds)`` pairs where bounds is a (3, 2) array of the
    parametric interval in each direction.
    """
    out = []
    for sx, ax, bx_ in patch.kv_xi.spans():
        for sy, ay, by_ in patch.kv_eta.spans():
            for sz, az, bz_ in patch.kv_zeta.spans():
                bounds = np.array([[ax, bx_], [ay, by_], [az, bz_]])
                out.append(((sx, sy, sz), bounds))
    return out


def patch_volume(patch: NurbsPatch) -> float:
    """Reference volume by full Gauss quadrature over every element."""
    p, q, r = patch.degrees
    rules = [gauss_rule(d + 1) for d in (p, q, r)]
    vol = 0.0
    for spans, bounds in patch_elements(patch):
        pts = []
        wts = []
        for d in range(3):
            pt, wt = map_rule_to_interval(rules[d], bounds[d, 0], bounds[d, 1])
            pts.append(pt)
            wts.append(wt)
        for a, wa in zip(pts[0], wts[0]):
            for b, wb in zip(pts[1], wts[1]):
                for c, wc in zip(pts[2], wts[2]):
                    det = np.linalg.det(nurbs_trivariate(patch, a, b, c).jacobian)
                    if det <= 0.0:
                        raise GeometryError("non-positive reference Jacobian")
                    vol += wa * wb * wc * det
    return vol
