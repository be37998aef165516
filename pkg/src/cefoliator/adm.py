"""Asymptotic diagnostics on centred coordinate spheres: ADM mass (flux and
curvature forms), the Hawking-mass limit, ADM linear momentum and the five
integral quantities controlling the existence of the CE foliation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .initialdata import InitialDataProvider
from .sphere import SphericalGrid
from .surface import RadialSurface, SurfaceGeometry, compute_geometry

__all__ = [
    "MOMENTUM_CONVENTION_FACTOR",
    "RadiusSeries",
    "extrapolate",
    "coordinate_sphere",
    "adm_mass_flux",
    "adm_mass_curvature",
    "hawking_limit",
    "adm_linear_momentum",
    "momentum_limit_check",
    "MomentumCheck",
    "smallness_integrals",
    "SmallnessReport",
    "report_rows",
]

# lim of  int tr_Sigma K (x_i/r) dmu  equals  s * P_i  with P_i normalised by 1/(8 pi)
# and pi = tr(K) g - K.  Fixed by the Bowen-York quadrature (see tests).
MOMENTUM_CONVENTION_FACTOR = 4.0 * math.pi

DEFAULT_LMAX = 16


def _fit_exponent(r, v, scale):
    """Exponent p of v(r) = L + c r^-p through three points, or None."""
    d1, d2 = v[0] - v[1], v[1] - v[2]
    if d2 == 0.0 or d1 * d2 <= 0.0:
        return None
    target = d1 / d2

    def f(p):
        return (r[0] ** -p - r[1] ** -p) - target * (r[1] ** -p - r[2] ** -p)

    lo, hi = 1e-3, 8.0
    try:
        if f(lo) * f(hi) > 0:
            return None
        return brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    except (ValueError, RuntimeError):
        return None


def _richardson(r, v, p):
    a, b = r[-2] ** -p, r[-1] ** -p
    c = (v[-2] - v[-1]) / (a - b)
    return v[-1] - c * b


def _extrapolate_scalar(r, v, eps):
    scale = max(np.abs(v).max(), 1e-300)
    if np.ptp(v[-3:]) <= 1e-14 * scale:
        return float(v[-1]), 0.0, math.nan
    p = _fit_exponent(r[-3:], v[-3:], scale)
    if p is None:
        p = eps
    L = _richardson(r, v, p)
    if len(r) >= 4:
        p_prev = _fit_exponent(r[-4:-1], v[-4:-1], scale) or eps
        err = abs(L - _richardson(r[:-1], v[:-1], p_prev))
    else:
        # size of the correction itself; conservative for monotone series
        err = abs(L - v[-1])
    return float(L), float(err), float(p)


def extrapolate(radii, values, eps=0.5):
    """Limit r -> inf of a series with leading error c r^-p.

    p is fitted from the last three points; if no positive exponent fits,
    p = eps (the decay rate of the data) is used.  Returns (limit, error, p)
    with arrays for vector-valued series.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or len(r) < 3:
        raise ValueError("extrapolation needs at least three radii")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly ascending")
    if v.ndim == 1:
        return _extrapolate_scalar(r, v, eps)
    flat = v.reshape(len(r), -1)
    out = [_extrapolate_scalar(r, flat[:, k], eps) for k in range(flat.shape[1])]
    shape = v.shape[1:]
    return (
        np.array([o[0] for o in out]).reshape(shape),
        np.array([o[1] for o in out]).reshape(shape),
        np.array([o[2] for o in out]).reshape(shape),
    )


@dataclass
class RadiusSeries:
    quantity: str
    radii: np.ndarray
    values: np.ndarray
    limit: object = None
    error: object = None
    exponent: object = None

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly ascending")

    @classmethod
    def build(cls, quantity, radii, values, eps):
        s = cls(quantity, radii, values)
        if len(s.radii) >= 3:
            s.limit, s.error, s.exponent = extrapolate(s.radii, s.values, eps)
        return s

    def rows(self):
        rows = []
        for r, v in zip(self.radii, self.values):
            for idx, x in _indexed(v):
                rows.append((r, self.quantity, idx, x))
        if self.limit is not None:
            for idx, x in _indexed(self.limit):
                rows.append((math.inf, self.quantity, idx, x))
            for idx, x in _indexed(self.error):
                rows.append((math.inf, self.quantity + "_error", idx, x))
        return rows


def _indexed(v):
    a = np.asarray(v, dtype=float)
    if a.ndim == 0:
        return [("0", float(a))]
    return [("".join(str(i) for i in idx), float(a[idx])) for idx in np.ndindex(a.shape)]


def _check_radii(p, radii):
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("radii must be a non-empty list")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly ascending")
    if r[0] <= p.metadata.r_inner:
        raise ValueError(f"radius {r[0]} is inside r_inner = {p.metadata.r_inner}")
    return r


def coordinate_sphere(p: InitialDataProvider, r: float, lmax: int = DEFAULT_LMAX) -> SurfaceGeometry:
    return compute_geometry(RadialSurface.round(SphericalGrid(lmax), r), p)


def _spheres(p, radii, lmax):
    r = _check_radii(p, radii)
    return r, [coordinate_sphere(p, ri, lmax) for ri in r]


def adm_mass_flux(p: InitialDataProvider, radii, lmax: int = DEFAULT_LMAX) -> RadiusSeries:
    """(1/16 pi) int (d_j g_ij - d_i g_jj) nu^i dmu with the normal and area of g."""
    r, geos = _spheres(p, radii, lmax)
    vals = []
    for geo in geos:
        dg = geo.metric_jet.dg  # [q, k, i, j] = d_k g_ij
        div = np.einsum("qjij->qi", dg) - np.einsum("qijj->qi", dg)
        vals.append(geo.integrate(np.einsum("qi,qi->q", div, geo.nu)) / (16 * math.pi))
    return RadiusSeries.build("mass_flux", r, vals, p.metadata.eps)


def adm_mass_curvature(p: InitialDataProvider, radii, lmax: int = DEFAULT_LMAX) -> RadiusSeries:
    """(-r/8 pi) int (Ric(nu, nu) - R/2) dmu."""
    r, geos = _spheres(p, radii, lmax)
    vals = [-ri / (8 * math.pi) * geo.integrate(geo.ric_nn - 0.5 * geo.Rbar) for ri, geo in zip(r, geos)]
    return RadiusSeries.build("mass_curvature", r, vals, p.metadata.eps)


def hawking_limit(p: InitialDataProvider, radii, lmax: int = DEFAULT_LMAX) -> RadiusSeries:
    r, geos = _spheres(p, radii, lmax)
    return RadiusSeries.build("hawking_mass", r, [g.hawking_mass for g in geos], p.metadata.eps)


def _momentum_at(geo, r):
    n = (geo.X - geo.surface.center) / r
    pi = geo.Hbar[:, None, None] * geo.gbar - geo.Kbar
    flux = np.einsum("qij,qj->qi", pi, n)
    return (geo.dmu_euclid[:, None] * flux).sum(axis=0) / (8 * math.pi)


def adm_linear_momentum(p: InitialDataProvider, radii, lmax: int = DEFAULT_LMAX) -> RadiusSeries:
    """(1/8 pi) int pi_ij x_j/r dmu_e with pi = tr(K) g - K, Euclidean area element."""
    r, geos = _spheres(p, radii, lmax)
    vals = [_momentum_at(geo, ri) for ri, geo in zip(r, geos)]
    return RadiusSeries.build("momentum", r, vals, p.metadata.eps)


@dataclass
class MomentumCheck:
    radii: np.ndarray
    integrals: np.ndarray  # int tr_Sigma K x_i/r dmu, per radius
    momentum: np.ndarray  # adm_linear_momentum per radius
    factor: float
    relative_mismatch: np.ndarray  # |I - s P| / |s P| per radius
    hbar_dipole: np.ndarray  # |int Hbar x_i/r dmu| per radius, the convergence hypothesis
    integral_series: RadiusSeries
    momentum_series: RadiusSeries


def momentum_limit_check(p: InitialDataProvider, radii, lmax: int = DEFAULT_LMAX) -> MomentumCheck:
    """Compare int tr_Sigma K (x_i/r) dmu with s times the ADM momentum at each radius."""
    r, geos = _spheres(p, radii, lmax)
    s = MOMENTUM_CONVENTION_FACTOR
    integ, mom, hdip = [], [], []
    for ri, geo in zip(r, geos):
        n = (geo.X - geo.surface.center) / ri
        integ.append((geo.dmu[:, None] * geo.trK[:, None] * n).sum(axis=0))
        hdip.append(np.abs((geo.dmu[:, None] * geo.Hbar[:, None] * n).sum(axis=0)).max())
        mom.append(_momentum_at(geo, ri))
    integ, mom = np.array(integ), np.array(mom)
    denom = np.linalg.norm(s * mom, axis=1)
    diff = np.linalg.norm(integ - s * mom, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(denom > 0, diff / np.where(denom > 0, denom, 1.0), np.where(diff > 0, np.inf, 0.0))
    eps = p.metadata.eps
    return MomentumCheck(
        r, integ, mom, s, rel, np.array(hdip),
        RadiusSeries.build("trK_dipole", r, integ, eps),
        RadiusSeries.build("momentum", r, mom, eps),
    )


@dataclass
class SmallnessReport:
    radii: np.ndarray
    rotation: np.ndarray  # [r, i, j] int K_kl n^k (n^j d^il - n^i d^jl) dmu
    trK: np.ndarray  # [r] int tr_Sigma K dmu
    hbar_quadrupole: np.ndarray  # [r, i, j] int Hbar n_i n_j dmu
    hbar_dipole: np.ndarray  # [r, i] int Hbar n_i dmu
    trK_dipole: np.ndarray  # [r, i] int tr_Sigma K n_i dmu
    ck: np.ndarray  # [r] supremum over indices of all five

    def series(self):
        names = ("rotation", "trK", "hbar_quadrupole", "hbar_dipole", "trK_dipole", "ck")
        return [RadiusSeries(nm, self.radii, getattr(self, nm)) for nm in names]


def smallness_integrals(p: InitialDataProvider, radii, lmax: int = DEFAULT_LMAX) -> SmallnessReport:
    r, geos = _spheres(p, radii, lmax)
    rot, trk, hq, hd, kd = [], [], [], [], []
    for ri, geo in zip(r, geos):
        n = (geo.X - geo.surface.center) / ri
        dmu = geo.dmu
        Kn = np.einsum("qkl,qk->ql", geo.Kbar, n)  # K_kl n^k
        # int K_kl n^k n^j d^il - K_kl n^k n^i d^jl = M_ij - M_ji with M_ij = int (K n)_i n_j
        M = np.einsum("q,qi,qj->ij", dmu, Kn, n)
        rot.append(M - M.T)
        trk.append(geo.integrate(geo.trK))
        hq.append(np.einsum("q,q,qi,qj->ij", dmu, geo.Hbar, n, n))
        hd.append(np.einsum("q,q,qi->i", dmu, geo.Hbar, n))
        kd.append(np.einsum("q,q,qi->i", dmu, geo.trK, n))
    rot, trk, hq, hd, kd = map(np.array, (rot, trk, hq, hd, kd))
    ck = np.max(
        np.stack(
            [
                np.abs(rot).reshape(len(r), -1).max(1),
                np.abs(trk),
                np.abs(hq).reshape(len(r), -1).max(1),
                np.abs(hd).max(1),
                np.abs(kd).max(1),
            ]
        ),
        axis=0,
    )
    return SmallnessReport(r, rot, trk, hq, hd, kd, ck)


def report_rows(series_list):
    """Rows (radius, quantity, index, value) for the CSV report."""
    rows = []
    for s in series_list:
        rows.extend(s.rows())
    return rows
