"""Stability operators of surfaces: L, the weighted pseudo stability operator J^b,
and the temporal action J^t alpha.

Operators are discretised in the harmonic (Galerkin) basis.  ``nodal`` maps
coefficients of f to the nodal values of the operator applied to f, and
``matrix = analysis @ nodal`` is the square coefficient-space matrix whose
eigenvalues are reported.  Working on coefficients avoids the spurious
null space of a square nodal matrix on the oversampled grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CefoliatorError
from .sphere import analyze
from .surface import DERIVS, SurfaceGeometry

__all__ = [
    "OperatorMatrix",
    "SpectralSummary",
    "InvertibilityReport",
    "conventional_stability",
    "weighted_pseudo_stability",
    "radial_jacobian",
    "temporal_action",
    "curvature_radius",
    "laplace_eigensystem",
    "translational_basis",
    "translational_projector",
    "spectrum",
    "verify_invertibility_estimates",
    "spectrum_csv_rows",
]


@dataclass
class OperatorMatrix:
    nodal: np.ndarray
    matrix: np.ndarray
    geometry: SurfaceGeometry
    b: float
    kind: str

    @property
    def grid(self):
        return self.geometry.grid

    @property
    def sigma(self):
        return curvature_radius(self.geometry, self.b)

    def apply(self, values):
        """Nodal values of the operator applied to a (band-limited) nodal field."""
        return self.nodal @ analyze(values, self.grid)

    def apply_coeffs(self, coeffs):
        return self.nodal @ coeffs

    def solve(self, rhs_values, rcond=1e-12):
        """Coefficients of f with (operator f) = rhs, minimum-norm on an exact kernel."""
        return _solve(self.matrix, analyze(rhs_values, self.grid), rcond)


def curvature_radius(geo: SurfaceGeometry, b: float = 0.0) -> float:
    """sigma with mean(H + b tr K) = -2/sigma; equals the prescribed value on leaves."""
    mean = geo.integrate(geo.H + b * geo.trK) / geo.area
    return -2.0 / mean


def _solve(matrix, rhs, rcond=1e-12):
    # LU unless the condition estimate is at roundoff; then min-norm least squares
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            x = scipy.linalg.solve(matrix, rhs, check_finite=True)
        good = np.all(np.isfinite(x))
    except (np.linalg.LinAlgError, ValueError, scipy.linalg.LinAlgWarning):
        good = False
    if good:
        scale = np.linalg.norm(matrix, 1) * np.linalg.norm(x)
        rnorm = np.linalg.norm(rhs)
        if rnorm == 0:
            return x
        resid = np.linalg.norm(matrix @ x - rhs)
        if resid <= 1e-10 * rnorm and scale <= 1e12 * rnorm:
            return x
    x, *_ = np.linalg.lstsq(matrix, rhs, rcond=rcond)
    rnorm = np.linalg.norm(rhs)
    if np.linalg.norm(matrix @ x - rhs) > 1e-6 * max(rnorm, 1e-300):
        raise SingularOperator("linear system is singular and inconsistent")
    return x


class SingularOperator(CefoliatorError, np.linalg.LinAlgError):
    pass


def _second_order_coefficients(geo: SurfaceGeometry, b: float):
    """Coefficients (a^AB, first-order b^A, potential) of J^b in theta/phi coordinates."""
    gi = geo.gaminv
    v = np.einsum("qab,qcab->qc", gi, geo.surf_gamma)
    first = -v
    if b != 0.0:
        first = first + 2.0 * b * np.einsum("qab,qb->qa", gi, geo.K_nuA)
    pot = geo.ric_nn + geo.A_sq
    if b != 0.0:
        pot = pot + b * (geo.trace_dK + geo.J_nu)
    return gi, first, pot


def _assemble(geo: SurfaceGeometry, a, first, pot, weight=None):
    """Nodal matrix of f -> a^AB d_A d_B (w f) + first^A d_A (w f) + pot w f."""
    grid = geo.grid
    S = grid.Y
    D = {k: grid.derivative_matrix(k) for k in DERIVS}
    if weight is None:
        cS = pot
        ct, cp = first[:, 0], first[:, 1]
        ctt, ctp, cpp = a[:, 0, 0], 2.0 * a[:, 0, 1], a[:, 1, 1]
    else:
        w = weight
        dw = geo.derivatives(w)
        cS = (
            a[:, 0, 0] * dw["tt"]
            + 2.0 * a[:, 0, 1] * dw["tp"]
            + a[:, 1, 1] * dw["pp"]
            + first[:, 0] * dw["t"]
            + first[:, 1] * dw["p"]
            + pot * w
        )
        ct = 2.0 * a[:, 0, 0] * dw["t"] + 2.0 * a[:, 0, 1] * dw["p"] + first[:, 0] * w
        cp = 2.0 * a[:, 1, 1] * dw["p"] + 2.0 * a[:, 0, 1] * dw["t"] + first[:, 1] * w
        ctt, ctp, cpp = a[:, 0, 0] * w, 2.0 * a[:, 0, 1] * w, a[:, 1, 1] * w
    return (
        cS[:, None] * S
        + ct[:, None] * D["t"]
        + cp[:, None] * D["p"]
        + ctt[:, None] * D["tt"]
        + ctp[:, None] * D["tp"]
        + cpp[:, None] * D["pp"]
    )


def _require_curvature(geo):
    if geo.ric_nn is None:
        raise ValueError("stability operators need ambient second derivatives")


def conventional_stability(geo: SurfaceGeometry) -> OperatorMatrix:
    """L f = Laplace f + (Ric(nu, nu) + |A|^2) f."""
    return weighted_pseudo_stability(geo, 0.0, kind="L")


def weighted_pseudo_stability(geo: SurfaceGeometry, b: float, momdensity=None, kind="J") -> OperatorMatrix:
    """J^b f = L f + 2b K(nu, grad f) + b (div K_nu + <A, K> + J(nu) - H K_nunu) f.

    The zeroth-order b-term is assembled as ``g^AB (nabla_{X_A} K)(nu, X_B) + J(nu)``,
    which equals the bracket above.  ``momdensity`` optionally replaces the
    momentum density computed from the constraint equations; it maps (N, 3)
    points to (N, 3) covectors.
    """
    _require_curvature(geo)
    if not -1.0 <= b <= 1.0:
        raise ValueError("weight b must lie in [-1, 1]")
    a, first, pot = _second_order_coefficients(geo, float(b))
    if momdensity is not None and b != 0.0:
        jnu = np.einsum("qi,qi->q", momdensity(geo.X), geo.nu)
        pot = pot - b * geo.J_nu + b * jnu
    nodal = _assemble(geo, a, first, pot)
    return OperatorMatrix(nodal, geo.grid.analysis @ nodal, geo, float(b), kind)


def radial_jacobian(geo: SurfaceGeometry, b: float, theta=None) -> OperatorMatrix:
    """Linearisation of rho -> Theta_b for radial graphs.

    ``d/dt Theta_b(rho + t drho) = J^b[w drho] + drho <n^T, grad Theta_b>`` with
    ``w = g(n, nu)`` and ``n^T`` the tangential part of the radial direction.
    """
    _require_curvature(geo)
    a, first, pot = _second_order_coefficients(geo, float(b))
    nodal = _assemble(geo, a, first, pot, weight=geo.w)
    if theta is None:
        theta = geo.H + b * geo.trK
    dth = geo.derivatives(theta)
    transport = geo.n_tangential[:, 0] * dth["t"] + geo.n_tangential[:, 1] * dth["p"]
    nodal = nodal + transport[:, None] * geo.grid.Y
    return OperatorMatrix(nodal, geo.grid.analysis @ nodal, geo, float(b), "radial")


def temporal_action(geo: SurfaceGeometry, td, sign: int):
    """Variation of Theta_(+-) = H +- tr K when the slice is pushed forward by the lapse.

    ``td`` is a temporal provider with ``temporal_jets(points)``.  The result is

        -2 K(nu, grad a) + (d_nu a) tr K + a (J(nu) - div K_nu + <A, K>)
        +- [ -Laplace a + H d_nu a
             + a (rho + G(nu, nu) + |K_Sigma|^2 - tr K K_nunu - Ric(nu, nu)) ]

    for the zero-shift evolution ``d_t g = -2 a K``; it was checked against a
    finite difference in time of Theta on a synthetic spacetime.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    _require_curvature(geo)
    data = td.temporal_jets(geo.X)
    alpha = data.alpha
    dnu = np.einsum("qi,qi->q", data.dalpha, geo.nu)
    grad_t = np.einsum("qai,qi->qa", geo.T, data.dalpha)  # d_A alpha
    tr_hess = np.einsum("qab,qai,qij,qbj->q", geo.gaminv, geo.T, data.hess_alpha, geo.T, optimize=True)
    lap = tr_hess + geo.H * dnu
    Knu_grad = np.einsum("qab,qa,qb->q", geo.gaminv, geo.K_nuA, grad_t)
    G_nn = np.einsum("qi,qij,qj->q", geo.nu, data.einstein, geo.nu)
    jnu = np.einsum("qi,qi->q", data.jmom, geo.nu)
    spatial = -2.0 * Knu_grad + dnu * geo.trK + alpha * (jnu - geo.div_K_nu + geo.A_dot_K)
    bracket = -lap + geo.H * dnu + alpha * (
        data.rho + G_nn + geo.K_sigma_sq - geo.trK * geo.K_nunu - geo.ric_nn
    )
    return spatial + sign * bracket


# ---------------------------------------------------------------------------
# spectra


def laplace_eigensystem(geo: SurfaceGeometry):
    """Eigenpairs of -Laplace in the harmonic basis, L2(Sigma)-orthonormal.

    Returns (eigenvalues ascending, coefficient eigenvectors as columns, Gram matrix).
    """
    grid = geo.grid
    S = grid.Y
    St, Sp = grid.derivative_matrix("t"), grid.derivative_matrix("p")
    w = geo.dmu
    gi = geo.gaminv
    mass = S.T @ (w[:, None] * S)
    stiff = (
        St.T @ ((w * gi[:, 0, 0])[:, None] * St)
        + St.T @ ((w * gi[:, 0, 1])[:, None] * Sp)
        + Sp.T @ ((w * gi[:, 1, 0])[:, None] * St)
        + Sp.T @ ((w * gi[:, 1, 1])[:, None] * Sp)
    )
    stiff = 0.5 * (stiff + stiff.T)
    mass = 0.5 * (mass + mass.T)
    vals, vecs = scipy.linalg.eigh(stiff, mass)
    return vals, vecs, mass


def translational_basis(geo: SurfaceGeometry, sigma=None):
    """Laplace eigenvectors with |lambda - 2/sigma^2| <= 1/sigma^2."""
    sigma = curvature_radius(geo) if sigma is None else sigma
    vals, vecs, mass = laplace_eigensystem(geo)
    sel = np.abs(vals - 2.0 / sigma**2) <= 1.0 / sigma**2
    return vecs[:, sel], vals[sel], vecs[:, ~sel], mass


def translational_projector(geo: SurfaceGeometry, sigma=None):
    """L2(Sigma)-orthogonal projector onto the translative part, in coefficient space."""
    V, _, _, mass = translational_basis(geo, sigma)
    G = V.T @ mass @ V
    return V @ np.linalg.solve(G, V.T @ mass)


@dataclass
class SpectralSummary:
    eigenvalues: np.ndarray  # complex, sorted by real part
    smallest: np.ndarray  # k smallest-magnitude eigenvalues
    smallest_vectors: np.ndarray  # nodal eigenfunctions, one column each
    translational_rank: int
    translational_flags: np.ndarray  # per sorted eigenvalue
    complex_flags: np.ndarray
    sigma: float


def spectrum(M: OperatorMatrix, k: int = 6) -> SpectralSummary:
    n = M.matrix.shape[0]
    if not 0 < k <= n:
        raise ValueError("k must lie in 1..n")
    try:
        vals, vecs = scipy.linalg.eig(M.matrix)
    except np.linalg.LinAlgError as exc:
        raise CefoliatorError(f"eigensolver failed: {exc}") from exc
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    geo = M.geometry
    V, _, _, mass = translational_basis(geo, M.sigma)
    # fraction of each eigenvector's L2 norm inside the translational span
    P = V @ np.linalg.solve(V.T @ mass @ V, V.T @ mass)
    flags = np.zeros(n, dtype=bool)
    for j in range(n):
        v = vecs[:, j]
        pv = P @ v
        num = np.real(np.vdot(pv, mass @ pv))
        den = np.real(np.vdot(v, mass @ v))
        flags[j] = den > 0 and num / den > 0.5
    cflags = np.abs(vals.imag) > 1e-8 * np.abs(vals.real)
    small = np.argsort(np.abs(vals), kind="stable")[:k]
    nodal_vecs = geo.grid.Y @ vecs[:, small]
    return SpectralSummary(
        eigenvalues=vals,
        smallest=vals[small],
        smallest_vectors=nodal_vecs,
        translational_rank=V.shape[1],
        translational_flags=flags,
        complex_flags=cflags,
        sigma=M.sigma,
    )


def spectrum_csv_rows(summary: SpectralSummary):
    for i, (lam, flag) in enumerate(zip(summary.eigenvalues, summary.translational_flags)):
        yield i, float(lam.real), float(lam.imag), int(flag)


@dataclass
class InvertibilityReport:
    sigma: float
    hawking_mass: float
    translational_rank: int
    reference_eigenvalue: float  # translational_sign * 6 m_H / sigma^3
    translational_block: np.ndarray  # 3x3 matrix of int (J f_i) f_j
    D_measured: float
    complement_lower: float  # min ||J h|| / ||h|| over h orthogonal to translations
    complement_margin: float  # complement_lower - 1/sigma^2
    global_lower: float  # min ||J h|| / ||h||
    global_bound: float  # (6|m_H| - D)/sigma^3
    global_margin: float
    mass_degenerate: bool

    @property
    def margins_positive(self):
        return (
            not self.mass_degenerate
            and self.complement_margin > 0
            and self.global_margin > 0
        )


def verify_invertibility_estimates(
    geo: SurfaceGeometry,
    b: float,
    translational_sign: float = -1.0,
    mass_threshold: float = 1e-12,
    sigma: float | None = None,
) -> InvertibilityReport:
    """Evaluate both sides of the three invertibility estimates for J^b.

    On a leaf of positive mass the translative eigenvalues of J^b sit near
    ``-6 m_H / sigma^3`` (see ``translational_sign``); the bilinear estimate is
    measured against that value.  sigma defaults to the curvature radius
    ``-2 / mean(H + b tr K)``.
    """
    J = weighted_pseudo_stability(geo, b)
    if sigma is None:
        sigma = curvature_radius(geo, b)
    mH = geo.hawking_mass
    V, _, W, mass = translational_basis(geo, sigma)
    S = geo.grid.Y
    sq = np.sqrt(geo.dmu)
    ref = translational_sign * 6.0 * mH / sigma**3
    B = (S @ V).T @ (geo.dmu[:, None] * (J.nodal @ V))
    dev = B - ref * np.eye(V.shape[1])
    D = sigma**3 * (np.linalg.norm(dev, 2) if dev.size else 0.0)
    # the eigenvector sets are L2(Sigma)-orthonormal, so ||h|| = |y|
    G = sq[:, None] * J.nodal
    s_perp = scipy.linalg.svdvals(G @ W)
    s_all = scipy.linalg.svdvals(G @ np.hstack([V, W]))
    comp = float(s_perp.min())
    glob = float(s_all.min())
    bound = (6.0 * abs(mH) - D) / sigma**3
    return InvertibilityReport(
        sigma=sigma,
        hawking_mass=mH,
        translational_rank=V.shape[1],
        reference_eigenvalue=ref,
        translational_block=B,
        D_measured=D,
        complement_lower=comp,
        complement_margin=comp - 1.0 / sigma**2,
        global_lower=glob,
        global_bound=bound,
        global_margin=glob - bound,
        mass_degenerate=abs(mH) <= mass_threshold * max(sigma, 1.0),
    )
