"""Radial-graph surfaces and their geometry inside an initial data set.

A surface is ``X(theta, phi) = c + rho(theta, phi) n(theta, phi)`` with rho
band-limited on the grid.  The second fundamental form is
``A_AB = g(nabla_A X_B, nu)`` with nu the outward unit normal, so the round
sphere of radius r in flat space has ``H = -2/r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GeometryError, GridParseError
from .initialdata import InitialDataProvider, christoffel, constraint_from_jets, covariant_dK, ricci
from .sphere import SphericalGrid, analyze, harmonic_basis, reference_normals, synthesize

__all__ = [
    "RadialSurface",
    "SurfaceGeometry",
    "ExpansionField",
    "compute_geometry",
    "expansion",
    "hawking_mass",
    "coordinate_center",
    "concentricity_check",
    "ConcentricityReport",
    "sobolev_norm",
    "umbilicity_report",
    "surface_dump_bytes",
    "write_surface",
    "read_surface",
]

DERIVS = ("t", "p", "tt", "tp", "pp")


@dataclass
class RadialSurface:
    """Radial graph over the unit sphere about ``center``; rho kept as coefficients."""

    grid: SphericalGrid
    coeffs: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).copy()
        self.center = np.asarray(self.center, dtype=float).reshape(3).copy()
        if self.coeffs.shape != (self.grid.ncoef,):
            raise ValueError("coefficient count does not match the grid")

    @classmethod
    def round(cls, grid, radius, center=(0.0, 0.0, 0.0)):
        c = np.zeros(grid.ncoef)
        c[0] = radius * math.sqrt(4.0 * math.pi)
        return cls(grid, c, center)

    @classmethod
    def from_values(cls, grid, values, center=(0.0, 0.0, 0.0)):
        return cls(grid, analyze(values, grid), center)

    @property
    def rho(self):
        return synthesize(self.coeffs, self.grid)

    def with_coeffs(self, coeffs):
        return RadialSurface(self.grid, coeffs, self.center)

    def scaled(self, factor):
        """Radial scaling about the center."""
        return RadialSurface(self.grid, self.coeffs * factor, self.center)

    def points(self):
        n = np.stack(reference_normals(self.grid), axis=-1)
        return self.center + self.rho[:, None] * n

    def evaluate(self, theta, phi):
        """rho at arbitrary directions by harmonic summation."""
        return harmonic_basis(self.grid.lmax, theta, phi)["Y"] @ self.coeffs

    def recentered(self, new_center, iterations=60, tol=1e-14):
        """The same point set written as a radial graph about ``new_center``.

        Each node direction n' is matched to the direction u about the old
        center with ``c + rho(u) u - c'`` parallel to n'.  The result is
        band-limited by projection, so the match is exact only up to the
        truncation of the new radius function.
        """
        new_center = np.asarray(new_center, dtype=float).reshape(3)
        d = new_center - self.center
        nprime = np.stack(reference_normals(self.grid), axis=-1)
        u = nprime.copy()
        rho_new = self.rho.copy()
        for _ in range(iterations):
            th = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
            ph = np.arctan2(u[:, 1], u[:, 0])
            rho_old = self.evaluate(th, ph)
            pts = rho_old[:, None] * u - d
            rho_next = np.linalg.norm(pts, axis=-1)
            # direction about the old center of the point c' + rho' n'
            v = d + rho_next[:, None] * nprime
            u_next = v / np.linalg.norm(v, axis=-1)[:, None]
            done = np.max(np.abs(rho_next - rho_new)) <= tol * np.max(rho_next)
            u, rho_new = u_next, rho_next
            if done:
                break
        return RadialSurface.from_values(self.grid, rho_new, new_center)


@dataclass
class ExpansionField:
    b: float
    theta: np.ndarray

    def __post_init__(self):
        if not -1.0 <= self.b <= 1.0:
            raise ValueError("weight b must lie in [-1, 1]")


def _inv2(a):
    det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    inv = np.empty_like(a)
    inv[:, 0, 0] = a[:, 1, 1] / det
    inv[:, 1, 1] = a[:, 0, 0] / det
    inv[:, 0, 1] = -a[:, 0, 1] / det
    inv[:, 1, 0] = -a[:, 1, 0] / det
    return inv, det


class SurfaceGeometry:
    """Pointwise geometry of a radial surface.  All arrays are per node.

    Index conventions: ``T[q, A, i]`` are the tangent vectors X_A, ``T2[q, A, B, i]``
    their coordinate derivatives, tangential indices A in (theta, phi).
    """

    def __init__(self, surface: RadialSurface, provider: InitialDataProvider):
        self.surface = surface
        self.provider = provider
        grid = self.grid = surface.grid
        c = surface.coeffs
        rho = synthesize(c, grid)
        if np.any(rho <= 0):
            raise GeometryError("radius function is not positive", int(np.argmin(rho)))
        d = {k: grid.derivative_matrix(k) @ c for k in DERIVS}
        st, ct = grid.sin_theta, grid.cos_theta
        sp, cp = np.sin(grid.phis), np.cos(grid.phis)
        zero = np.zeros_like(st)
        n = np.stack([st * cp, st * sp, ct], axis=-1)
        n_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
        n_p = np.stack([-st * sp, st * cp, zero], axis=-1)
        n_tp = np.stack([-ct * sp, ct * cp, zero], axis=-1)
        n_pp = np.stack([-st * cp, -st * sp, zero], axis=-1)
        r = rho[:, None]
        X_t = d["t"][:, None] * n + r * n_t
        X_p = d["p"][:, None] * n + r * n_p
        X_tt = d["tt"][:, None] * n + 2 * d["t"][:, None] * n_t - r * n
        X_tp = d["tp"][:, None] * n + d["t"][:, None] * n_p + d["p"][:, None] * n_t + r * n_tp
        X_pp = d["pp"][:, None] * n + 2 * d["p"][:, None] * n_p + r * n_pp
        self.rho = rho
        self.rho_derivs = d
        self.n = n
        self.X = surface.center + r * n
        T = self.T = np.stack([X_t, X_p], axis=1)
        T2 = self.T2 = np.stack([np.stack([X_tt, X_tp], 1), np.stack([X_tp, X_pp], 1)], 1)

        mj, ej = provider.jets(self.X)
        self.metric_jet, self.extrinsic_jet = mj, ej
        g = self.gbar = mj.g
        ginv = self.gbar_inv = np.linalg.inv(g)
        if mj.ddg is not None:
            curv = ricci(mj)
            Gamma = curv.Gamma
            self.ric = curv.Ric
            self.Rbar = curv.R
        else:
            Gamma = christoffel(mj)
            self.ric = None
            self.Rbar = None
        self.Gamma = Gamma

        gam = np.einsum("qai,qij,qbj->qab", T, g, T)
        gaminv, det = _inv2(gam)
        bad = np.flatnonzero(~(det > 0))
        if bad.size:
            raise GeometryError(f"degenerate induced metric at node {bad[0]}", int(bad[0]))
        self.gam, self.gaminv = gam, gaminv
        self.sqrt_det = np.sqrt(det)
        self.dmu = grid.weights * self.sqrt_det / st

        N = np.cross(X_t, X_p)
        nn = np.sqrt(np.einsum("qi,qij,qj->q", N, ginv, N))
        nu_low = self.nu_low = N / nn[:, None]
        nu = self.nu = np.einsum("qij,qj->qi", ginv, nu_low)

        # ambient covariant derivative of the tangents
        DT = T2 + np.einsum("qkij,qai,qbj->qabk", Gamma, T, T)
        self.A = np.einsum("qabk,qk->qab", DT, nu_low)
        self.surf_gamma = np.einsum(
            "qcd,qabk,qkj,qdj->qcab", gaminv, DT, g, T
        )  # Gamma^C_AB
        self.H = np.einsum("qab,qab->q", gaminv, self.A)
        Aup = np.einsum("qac,qbd,qcd->qab", gaminv, gaminv, self.A)
        self.A_sq = np.einsum("qab,qab->q", Aup, self.A)
        self.Aring = self.A - 0.5 * self.H[:, None, None] * gam
        self.Aring_norm = self.tensor_norm(self.Aring)

        K = self.Kbar = ej.K
        self.K_AB = np.einsum("qai,qij,qbj->qab", T, K, T)
        self.K_nuA = np.einsum("qi,qij,qaj->qa", nu, K, T)
        self.K_nunu = np.einsum("qi,qij,qj->q", nu, K, nu)
        self.trK = np.einsum("qab,qab->q", gaminv, self.K_AB)
        Kup = np.einsum("qac,qbd,qcd->qab", gaminv, gaminv, self.K_AB)
        self.K_sigma_sq = np.einsum("qab,qab->q", Kup, self.K_AB)
        self.K_nu_sq = np.einsum("qab,qa,qb->q", gaminv, self.K_nuA, self.K_nuA)
        self.Hbar = np.einsum("qij,qij->q", ginv, K)
        self.A_dot_K = np.einsum("qab,qab->q", Aup, self.K_AB)

        nablaK = self.nablaK = covariant_dK(ej, Gamma)
        # g^{AB} (nabla_{X_A} K)(nu, X_B)
        self.trace_dK = np.einsum("qab,qak,qkij,qi,qbj->q", gaminv, T, nablaK, nu, T, optimize=True)
        self.div_K_nu = self.trace_dK - self.A_dot_K + self.H * self.K_nunu
        if self.ric is not None:
            self.ric_nn = np.einsum("qi,qij,qj->q", nu, self.ric, nu)
            self.rho_matter, jmom = constraint_from_jets(mj, ej, curv)
            self.jmom = jmom
            self.J_nu = np.einsum("qi,qi->q", jmom, nu)
        else:
            self.ric_nn = None
            self.rho_matter = None
            self.jmom = None
            self.J_nu = None

        # radial chain-rule data
        self.w = np.einsum("qi,qi->q", n, nu_low)
        self.n_tangential = np.einsum("qab,qbj,qij,qi->qa", gaminv, T, g, n)

        # Euclidean measure for the coordinate center
        self.dmu_euclid = grid.weights * np.linalg.norm(N, axis=-1) / st

    # -- aggregates -------------------------------------------------------
    @cached_property
    def area(self):
        return float(np.sum(self.dmu))

    @cached_property
    def area_radius(self):
        return math.sqrt(self.area / (4.0 * math.pi))

    @property
    def sigma(self):
        return self.area_radius

    @cached_property
    def center_z(self):
        return coordinate_center(self)

    @cached_property
    def hawking_mass(self):
        return hawking_mass(self)

    def integrate(self, values):
        return float(np.sum(self.dmu * values))

    def derivatives(self, values):
        """Spectral theta/phi derivatives of a nodal field."""
        coef = analyze(values, self.grid)
        return {k: self.grid.derivative_matrix(k) @ coef for k in DERIVS}

    def gradient_norm(self, values, derivs=None):
        d = self.derivatives(values) if derivs is None else derivs
        grad = np.stack([d["t"], d["p"]], axis=-1)
        return np.sqrt(np.maximum(np.einsum("qab,qa,qb->q", self.gaminv, grad, grad), 0.0))

    def hessian(self, values, derivs=None):
        d = self.derivatives(values) if derivs is None else derivs
        grad = np.stack([d["t"], d["p"]], axis=-1)
        hess = np.stack(
            [np.stack([d["tt"], d["tp"]], -1), np.stack([d["tp"], d["pp"]], -1)], -2
        )
        return hess - np.einsum("qcab,qc->qab", self.surf_gamma, grad)

    def laplacian(self, values):
        return np.einsum("qab,qab->q", self.gaminv, self.hessian(values))

    def tensor_norm(self, T_ab):
        up = np.einsum("qac,qbd,qcd->qab", self.gaminv, self.gaminv, T_ab)
        return np.sqrt(np.maximum(np.einsum("qab,qab->q", up, T_ab), 0.0))

    def intrinsic_scalar_curvature(self):
        """Scalar curvature of the induced metric via the Gauss equation."""
        if self.ric is None:
            raise ValueError("ambient Ricci curvature not available")
        return self.Rbar - 2.0 * self.ric_nn + self.H**2 - self.A_sq


def compute_geometry(s: RadialSurface, p: InitialDataProvider) -> SurfaceGeometry:
    return SurfaceGeometry(s, p)


def expansion(geo: SurfaceGeometry, b: float) -> ExpansionField:
    """Theta_b = H + b tr_Sigma K."""
    return ExpansionField(float(b), geo.H + b * geo.trK)


def hawking_mass(geo: SurfaceGeometry) -> float:
    area = geo.area
    willmore = geo.integrate(geo.H**2)
    return math.sqrt(area / (16.0 * math.pi)) * (1.0 - willmore / (16.0 * math.pi))


def coordinate_center(geo: SurfaceGeometry):
    """Average of the chart coordinates over the Euclidean area measure."""
    w = geo.dmu_euclid
    return (w @ geo.X) / np.sum(w)


@dataclass
class ConcentricityReport:
    passed: bool
    margins: tuple
    center_offset: float
    sigma: float
    min_radius: float
    willmore_excess: float


def concentricity_check(geo: SurfaceGeometry, eps, eta, cz, c1) -> ConcentricityReport:
    """Evaluate the three inequalities defining the asymptotically concentric class.

    Margins are right-hand side minus left-hand side; the check passes when
    all three are non-negative.
    """
    sigma = geo.area_radius
    z = float(np.linalg.norm(geo.center_z))
    rmin = float(np.min(np.linalg.norm(geo.X, axis=-1)))
    excess = geo.integrate(geo.H**2) - 16.0 * math.pi
    m1 = cz * sigma + c1 * sigma ** (1.0 - eta) - z
    m2 = rmin ** (5.0 + 2.0 * eps) - sigma ** (4.0 + eta)
    m3 = c1 / sigma**eta - excess
    margins = (m1, m2, m3)
    return ConcentricityReport(
        passed=all(m >= 0 for m in margins),
        margins=margins,
        center_offset=z,
        sigma=sigma,
        min_radius=rmin,
        willmore_excess=excess,
    )


def _lp(values, geo, p):
    values = np.abs(values)
    if p == math.inf:
        return float(values.max())
    return geo.integrate(values**p) ** (1.0 / p)


def sobolev_norm(f, geo: SurfaceGeometry, k: int, p=2.0) -> float:
    """||f||_{W^{k,p}} = ||f||_p + sigma ||grad f||_{W^{k-1,p}} for scalar fields, k <= 2."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    f = np.asarray(f, dtype=float)
    sigma = geo.area_radius
    total = _lp(f, geo, p)
    if k == 0:
        return total
    d = geo.derivatives(f)
    inner = _lp(geo.gradient_norm(f, d), geo, p)
    if k == 2:
        inner += sigma * _lp(geo.tensor_norm(geo.hessian(f, d)), geo, p)
    return total + sigma * inner


def _tangent_tensor_gradient_norm(geo: SurfaceGeometry, T_ab):
    """Pointwise |nabla T| for a tangential symmetric 2-tensor.

    T is pushed forward to ambient Cartesian components, which are smooth on
    the sphere and can be differentiated spectrally; the intrinsic covariant
    derivative is the tangential projection of the ambient one.
    """
    up = np.einsum("qac,qbd,qcd->qab", geo.gaminv, geo.gaminv, T_ab)
    amb = np.einsum("qab,qai,qbj->qij", up, geo.T, geo.T)
    deriv = np.zeros((geo.grid.nnodes, 2, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            d = geo.derivatives(amb[:, i, j])
            deriv[:, 0, i, j] = deriv[:, 0, j, i] = d["t"]
            deriv[:, 1, i, j] = deriv[:, 1, j, i] = d["p"]
    G = geo.Gamma
    D = (
        deriv
        + np.einsum("qikl,qck,qlj->qcij", G, geo.T, amb)
        + np.einsum("qjkl,qck,qil->qcij", G, geo.T, amb)
    )
    Tlow = np.einsum("qij,qai->qaj", geo.gbar, geo.T)  # g(X_A, .)
    nab = np.einsum("qcij,qai,qbj->qcab", D, Tlow, Tlow)
    gi = geo.gaminv
    sq = np.einsum("qce,qaf,qbg,qcab,qefg->q", gi, gi, gi, nab, nab)
    return np.sqrt(np.maximum(sq, 0.0))


def umbilicity_report(geo: SurfaceGeometry):
    """(sup |Aring|, sigma^-1 ||Aring||_{W^{1,2}})."""
    sigma = geo.area_radius
    sup = float(geo.Aring_norm.max())
    l2 = _lp(geo.Aring_norm, geo, 2.0)
    grad = _lp(_tangent_tensor_gradient_norm(geo, geo.Aring), geo, 2.0)
    return sup, (l2 + sigma * grad) / sigma


# ---------------------------------------------------------------------------
# surface dump

SURF_MAGIC = b"CESURF1"


def surface_dump_bytes(s: RadialSurface, sigma: float, b: float) -> bytes:
    header = "\n".join(
        [
            SURF_MAGIC.decode(),
            f"{s.grid.lmax} {sigma:.17g} {b:.17g}",
            " ".join(f"{v:.17g}" for v in s.center),
        ]
    ) + "\n"
    return header.encode("ascii") + np.asarray(s.rho, dtype="<f8").tobytes()


def write_surface(path, s: RadialSurface, sigma: float, b: float):
    with open(path, "wb") as fh:
        fh.write(surface_dump_bytes(s, sigma, b))


def read_surface(path):
    """Read a surface dump; returns (RadialSurface, sigma, b)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    pos = 0
    lines = []
    for _ in range(3):
        end = raw.find(b"\n", pos)
        if end < 0:
            raise GridParseError("unexpected end of surface header", pos)
        lines.append((pos, raw[pos:end]))
        pos = end + 1
    if lines[0][1] != SURF_MAGIC:
        raise GridParseError("bad magic, expected CESURF1", 0)
    try:
        parts = lines[1][1].split()
        lmax = int(parts[0])
        sigma, b = float(parts[1]), float(parts[2])
        if len(parts) != 3 or lmax < 1:
            raise ValueError
    except (ValueError, IndexError):
        raise GridParseError("expected 'Lmax sigma b'", lines[1][0]) from None
    try:
        center = [float(v) for v in lines[2][1].split()]
        if len(center) != 3:
            raise ValueError
    except ValueError:
        raise GridParseError("expected 'cx cy cz'", lines[2][0]) from None
    grid = SphericalGrid(lmax)
    need = grid.nnodes * 8
    have = len(raw) - pos
    if have != need:
        raise GridParseError(f"payload has {have} bytes, expected {need}", len(raw) if have < need else pos + need)
    rho = np.frombuffer(raw, dtype="<f8", offset=pos).astype(float)
    bad = np.flatnonzero(~np.isfinite(rho))
    if bad.size:
        raise GridParseError("non-finite radius value", pos + 8 * int(bad[0]))
    return RadialSurface.from_values(grid, rho, center), sigma, b
