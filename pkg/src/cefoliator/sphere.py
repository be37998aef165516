"""Gauss-Legendre grids and real spherical-harmonic transforms on the unit sphere.

Nodes are stored theta-major: node ``q = itheta * nphi + iphi``.  Coefficients
use the flat index ``k = l*l + l + m`` of the real orthonormal basis

    Y_l0  = Pbar_l0(cos t) / sqrt(2 pi)
    Y_lm  = Pbar_lm(cos t) cos(m p) / sqrt(pi)      (m > 0)
    Y_l-m = Pbar_lm(cos t) sin(m p) / sqrt(pi)      (m > 0)

where Pbar is normalised to unit L2 norm on [-1, 1] without the
Condon-Shortley phase.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.special import assoc_legendre_p_all, roots_legendre

__all__ = [
    "SphericalGrid",
    "harmonic_index",
    "harmonic_basis",
    "analyze",
    "synthesize",
    "integrate",
    "reference_normals",
]


def harmonic_index(l, m):
    """Flat coefficient index of the real harmonic (l, m)."""
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l, got l={l}, m={m}")
    return l * l + l + m


def harmonic_basis(lmax, theta, phi, order=0):
    """Evaluate the real harmonic basis and its derivatives at given points.

    @param lmax  Band limit.
    @param theta,phi  1-D arrays of colatitudes and longitudes (same length).
    @param order  0 returns only values; 1 adds first derivatives; 2 adds
        second derivatives.
    @return dict with keys among ``Y, t, p, tt, tp, pp``, each of shape
        ``(npoints, (lmax+1)**2)``.  ``t`` means d/dtheta, ``p`` d/dphi.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    x = np.cos(theta)
    s = np.sin(theta)
    leg = assoc_legendre_p_all(lmax, lmax, x, norm=True, diff_n=min(order, 2))
    npts = theta.size
    ncoef = (lmax + 1) ** 2
    keys = ["Y"]
    if order >= 1:
        keys += ["t", "p"]
    if order >= 2:
        keys += ["tt", "tp", "pp"]
    out = {key: np.zeros((npts, ncoef)) for key in keys}
    for m in range(lmax + 1):
        sign = -1.0 if m % 2 else 1.0
        P = sign * leg[0][m:, m]
        if order >= 1:
            dP = sign * leg[1][m:, m]
            Pt = -s * dP
        if order >= 2:
            d2P = sign * leg[2][m:, m]
            Ptt = s * s * d2P - x * dP
        ells = np.arange(m, lmax + 1)
        if m == 0:
            c = 1.0 / np.sqrt(2.0 * np.pi)
            idx = ells * ells + ells
            out["Y"][:, idx] = c * P.T
            if order >= 1:
                out["t"][:, idx] = c * Pt.T
            if order >= 2:
                out["tt"][:, idx] = c * Ptt.T
            continue
        c = 1.0 / np.sqrt(np.pi)
        cm = np.cos(m * phi)[:, None]
        sm = np.sin(m * phi)[:, None]
        for idx, trig, dtrig in (
            (ells * ells + ells + m, cm, -m * sm),
            (ells * ells + ells - m, sm, m * cm),
        ):
            out["Y"][:, idx] = c * P.T * trig
            if order >= 1:
                out["t"][:, idx] = c * Pt.T * trig
                out["p"][:, idx] = c * P.T * dtrig
            if order >= 2:
                out["tt"][:, idx] = c * Ptt.T * trig
                out["tp"][:, idx] = c * Pt.T * dtrig
                out["pp"][:, idx] = -(m * m) * c * P.T * trig
    return out


class SphericalGrid:
    """Gauss-Legendre grid with ``lmax+1`` colatitudes and twice as many longitudes."""

    def __init__(self, lmax: int):
        lmax = int(lmax)
        if lmax < 1:
            raise ValueError("lmax must be at least 1")
        self.lmax = lmax
        self.ntheta = lmax + 1
        self.nphi = 2 * self.ntheta
        x, w = roots_legendre(self.ntheta)
        # ascending colatitude
        x = x[::-1]
        w = w[::-1]
        self.theta_1d = np.arccos(x)
        self.phi_1d = 2.0 * np.pi * np.arange(self.nphi) / self.nphi
        tt, pp = np.meshgrid(self.theta_1d, self.phi_1d, indexing="ij")
        self.thetas = tt.ravel()
        self.phis = pp.ravel()
        self.weights = np.repeat(w, self.nphi) * (2.0 * np.pi / self.nphi)
        self.sin_theta = np.sin(self.thetas)
        self.cos_theta = np.cos(self.thetas)
        self.ell = np.concatenate([np.full(2 * l + 1, l) for l in range(lmax + 1)])
        self.em = np.concatenate([np.arange(-l, l + 1) for l in range(lmax + 1)])

    @property
    def nnodes(self) -> int:
        return self.ntheta * self.nphi

    @property
    def ncoef(self) -> int:
        return (self.lmax + 1) ** 2

    def __eq__(self, other):
        return isinstance(other, SphericalGrid) and other.lmax == self.lmax

    def __hash__(self):
        return hash(("SphericalGrid", self.lmax))

    def __repr__(self):
        return f"SphericalGrid(lmax={self.lmax})"

    @cached_property
    def _basis(self):
        return harmonic_basis(self.lmax, self.thetas, self.phis, order=2)

    @property
    def Y(self):
        """Synthesis matrix, nodes x coefficients."""
        return self._basis["Y"]

    def derivative_matrix(self, which: str):
        """Synthesis matrix of a coordinate derivative (``t, p, tt, tp, pp``)."""
        return self._basis[which]

    @cached_property
    def analysis(self):
        """Quadrature projection, coefficients x nodes."""
        return (self.Y * self.weights[:, None]).T.copy()

    def node_values(self, field):
        """Reshape a flat nodal array to ``(ntheta, nphi)``."""
        return np.asarray(field).reshape(self.ntheta, self.nphi)


def _check_nodal(values, grid):
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.nnodes:
        raise ValueError(
            f"field has {values.shape[0]} nodes but grid has {grid.nnodes}"
        )
    return values


def analyze(values, grid: SphericalGrid):
    """Project nodal values onto the harmonic basis (exact when band-limited)."""
    values = _check_nodal(values, grid)
    return grid.analysis @ values


def synthesize(coeffs, grid: SphericalGrid):
    """Nodal values of a harmonic expansion."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != grid.ncoef:
        raise ValueError(
            f"expected {grid.ncoef} coefficients, got {coeffs.shape[0]}"
        )
    return grid.Y @ coeffs


def integrate(values, grid: SphericalGrid):
    """Quadrature of nodal values against the round measure dOmega."""
    values = _check_nodal(values, grid)
    return grid.weights @ values


def reference_normals(grid: SphericalGrid):
    """Euclidean unit normals ``(n1, n2, n3)`` at the grid nodes."""
    s = grid.sin_theta
    return (s * np.cos(grid.phis), s * np.sin(grid.phis), grid.cos_theta.copy())
