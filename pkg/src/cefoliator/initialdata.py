"""Initial data sets: point-wise jets of the metric g and extrinsic curvature K.

All jet arrays carry leading batch dimensions.  Derivative indices come first:
``dg[..., k, i, j] = d_k g_ij`` and ``ddg[..., l, k, i, j] = d_l d_k g_ij``,
likewise ``dK[..., k, i, j] = d_k K_ij``.  K follows the sign fixed by
``d_t g = -2 alpha K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridParseError

__all__ = [
    "MetricJet",
    "ExtrinsicJet",
    "AmbientCurvature",
    "ProviderMetadata",
    "TemporalData",
    "InitialDataProvider",
    "FlatData",
    "SchwarzschildData",
    "BowenYorkData",
    "PerturbedData",
    "GridData",
    "PERTURBATION_PATTERN",
    "eval_flat",
    "eval_schwarzschild_isotropic",
    "eval_bowen_york",
    "eval_perturbed",
    "christoffel",
    "ricci",
    "constraint_from_jets",
    "constraint_residual",
    "decay_audit",
    "DecayReport",
    "sample_provider",
    "write_grid_data",
    "load_grid_data",
    "ConstantLapse",
    "StaticSchwarzschildLapse",
    "SyntheticSpacetime",
    "static_schwarzschild_spacetime",
]

EYE = np.eye(3)

# Fixed angular pattern of the perturbed family: constant, symmetric,
# trace-free, hence even under x -> -x.
PERTURBATION_PATTERN = np.array(
    [[1.0, 0.5, 0.0], [0.5, -1.0, 0.3], [0.0, 0.3, 0.0]]
)


@dataclass
class MetricJet:
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray | None = None


@dataclass
class ExtrinsicJet:
    K: np.ndarray
    dK: np.ndarray


@dataclass
class AmbientCurvature:
    Gamma: np.ndarray  # Gamma[..., k, i, j] = Gamma^k_ij
    Ric: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class ProviderMetadata:
    mass_param: float = 0.0
    eps: float = 0.5
    r_inner: float = 1e-12
    momentum_param: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.r_inner > 0:
            raise ValueError("r_inner must be positive")
        if not 0 < self.eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")


@dataclass
class TemporalData:
    """Lapse jets and matter terms of a slicing, batched over points.

    ``hess_alpha`` is the covariant Hessian with respect to g and ``einstein``
    the spatial components G_ij of the spacetime Einstein tensor.
    """

    alpha: np.ndarray
    dalpha: np.ndarray
    hess_alpha: np.ndarray
    einstein: np.ndarray
    rho: np.ndarray
    jmom: np.ndarray

    def __post_init__(self):
        if np.any(self.alpha <= 0):
            raise ValueError("lapse must be positive")


def _as_points(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != 3:
        raise ValueError("points must have 3 components")
    return pts, single


def _squeeze_jets(mj, ej, single):
    if not single:
        return mj, ej
    ddg = None if mj.ddg is None else mj.ddg[0]
    return MetricJet(mj.g[0], mj.dg[0], ddg), ExtrinsicJet(ej.K[0], ej.dK[0])


def _conformal_jets(m, pts):
    """Jets of (1 + m/2r)^4 delta for points of shape (N, 3)."""
    r = np.linalg.norm(pts, axis=-1)
    phi = 1.0 + m / (2.0 * r)
    dphi = -m * pts / (2.0 * r[:, None] ** 3)
    ddphi = -0.5 * m * (
        EYE[None] / r[:, None, None] ** 3
        - 3.0 * pts[:, :, None] * pts[:, None, :] / r[:, None, None] ** 5
    )
    psi = phi**4
    dpsi = 4.0 * phi[:, None] ** 3 * dphi
    ddpsi = (
        12.0 * phi[:, None, None] ** 2 * dphi[:, :, None] * dphi[:, None, :]
        + 4.0 * phi[:, None, None] ** 3 * ddphi
    )
    g = psi[:, None, None] * EYE
    dg = dpsi[:, :, None, None] * EYE
    ddg = ddpsi[:, :, :, None, None] * EYE
    return g, dg, ddg


def _zero_extrinsic(n):
    return ExtrinsicJet(np.zeros((n, 3, 3)), np.zeros((n, 3, 3, 3)))


def eval_flat(x):
    """Euclidean metric, K = 0."""
    pts, single = _as_points(x)
    n = pts.shape[0]
    mj = MetricJet(
        np.broadcast_to(EYE, (n, 3, 3)).copy(),
        np.zeros((n, 3, 3, 3)),
        np.zeros((n, 3, 3, 3, 3)),
    )
    return _squeeze_jets(mj, _zero_extrinsic(n), single)


def eval_schwarzschild_isotropic(m, x):
    """Time-symmetric Schwarzschild slice in isotropic coordinates."""
    pts, single = _as_points(x)
    mj = MetricJet(*_conformal_jets(float(m), pts))
    return _squeeze_jets(mj, _zero_extrinsic(pts.shape[0]), single)


def _bowen_york_K(P, pts):
    P = np.asarray(P, dtype=float)
    r = np.linalg.norm(pts, axis=-1)
    n = pts / r[:, None]
    Pn = n @ P
    F = (
        P[None, :, None] * n[:, None, :]
        + n[:, :, None] * P[None, None, :]
        - (EYE[None] - n[:, :, None] * n[:, None, :]) * Pn[:, None, None]
    )
    # dn[k, i] = d_k n_i
    dn = (EYE[None] - n[:, :, None] * n[:, None, :]) / r[:, None, None]
    dPn = dn @ P  # d_k (P.n)
    dF = (
        P[None, None, :, None] * dn[:, :, None, :]
        + dn[:, :, :, None] * P[None, None, None, :]
        + (dn[:, :, :, None] * n[:, None, None, :] + n[:, None, :, None] * dn[:, :, None, :])
        * Pn[:, None, None, None]
        - (EYE[None, None] - n[:, None, :, None] * n[:, None, None, :])
        * dPn[:, :, None, None]
    )
    c = 1.5 / r**2
    K = c[:, None, None] * F
    dK = c[:, None, None, None] * dF - 3.0 * (n / r[:, None] ** 3)[:, :, None, None] * F[:, None]
    return K, dK


def eval_bowen_york(m, P, x):
    """Bowen-York momentum curvature on the isotropic Schwarzschild metric."""
    pts, single = _as_points(x)
    mj = MetricJet(*_conformal_jets(float(m), pts))
    ej = ExtrinsicJet(*_bowen_york_K(P, pts))
    return _squeeze_jets(mj, ej, single)


def eval_perturbed(m, a, x, eps=0.5):
    """Schwarzschild plus ``a * r^-(1/2+eps) * S`` with the fixed pattern S."""
    pts, single = _as_points(x)
    g, dg, ddg = _conformal_jets(float(m), pts)
    p = 0.5 + eps
    r = np.linalg.norm(pts, axis=-1)
    S = PERTURBATION_PATTERN
    f = r ** (-p)
    df = -p * r[:, None] ** (-p - 2.0) * pts
    ddf = -p * r[:, None, None] ** (-p - 2.0) * (
        EYE[None] - (p + 2.0) * pts[:, :, None] * pts[:, None, :] / r[:, None, None] ** 2
    )
    g = g + a * f[:, None, None] * S
    dg = dg + a * df[:, :, None, None] * S
    ddg = ddg + a * ddf[:, :, :, None, None] * S
    return _squeeze_jets(MetricJet(g, dg, ddg), _zero_extrinsic(pts.shape[0]), single)


class InitialDataProvider:
    """Base class.  Subclasses implement ``_jets(points)`` for (N, 3) arrays."""

    metadata: ProviderMetadata = ProviderMetadata()
    name = "provider"

    def _jets(self, pts):
        raise NotImplementedError

    def check_domain(self, pts):
        r = np.linalg.norm(pts, axis=-1)
        bad = np.flatnonzero(~(r >= self.metadata.r_inner))
        if bad.size:
            i = bad[0]
            raise DomainError(
                f"{self.name}: point {pts[i].tolist()} has |x|={r[i]:.6g} "
                f"inside r_inner={self.metadata.r_inner:.6g}"
            )

    def jets(self, x):
        """Metric and extrinsic-curvature jets at one point or a batch of points."""
        pts, single = _as_points(x)
        self.check_domain(pts)
        mj, ej = self._jets(pts)
        return _squeeze_jets(mj, ej, single)

    def parity_partner(self):
        """Provider related by P -> -P, or None when not meaningful."""
        return None


class FlatData(InitialDataProvider):
    name = "flat"

    def __init__(self):
        self.metadata = ProviderMetadata()

    def _jets(self, pts):
        return eval_flat(pts)


class SchwarzschildData(InitialDataProvider):
    name = "schwarzschild"

    def __init__(self, mass, r_inner=None):
        self.mass = float(mass)
        if r_inner is None:
            r_inner = max(self.mass / 2.0, 1e-12)
        self.metadata = ProviderMetadata(mass_param=self.mass, eps=0.5, r_inner=r_inner)

    def _jets(self, pts):
        return eval_schwarzschild_isotropic(self.mass, pts)


class BowenYorkData(InitialDataProvider):
    name = "bowen_york"

    def __init__(self, mass, momentum, r_inner=None):
        self.mass = float(mass)
        self.momentum = np.array(momentum, dtype=float).reshape(3)
        if r_inner is None:
            r_inner = max(self.mass / 2.0, 1e-12)
        self.metadata = ProviderMetadata(
            mass_param=self.mass,
            eps=0.5,
            r_inner=r_inner,
            momentum_param=tuple(self.momentum.tolist()),
        )

    def _jets(self, pts):
        return eval_bowen_york(self.mass, self.momentum, pts)

    def parity_partner(self):
        return BowenYorkData(self.mass, -self.momentum, self.metadata.r_inner)


class PerturbedData(InitialDataProvider):
    """Schwarzschild metric with a slowly decaying trace-free perturbation, K = 0."""

    name = "perturbed"

    def __init__(self, mass, amplitude, eps=0.5, r_inner=None):
        self.mass = float(mass)
        self.amplitude = float(amplitude)
        self.eps = float(eps)
        p = 0.5 + self.eps
        if r_inner is None:
            size = np.linalg.norm(PERTURBATION_PATTERN, 2)
            r_pd = (4.0 * abs(self.amplitude) * size) ** (1.0 / p)
            r_inner = max(self.mass / 2.0, r_pd, 1e-12)
        self.metadata = ProviderMetadata(mass_param=self.mass, eps=self.eps, r_inner=r_inner)

    def _jets(self, pts):
        return eval_perturbed(self.mass, self.amplitude, pts, self.eps)


# ---------------------------------------------------------------------------
# curvature


def christoffel(jet: MetricJet):
    """Gamma[..., k, i, j] = Gamma^k_ij of the metric jet."""
    ginv = np.linalg.inv(jet.g)
    return np.einsum("...kl,...lij->...kij", ginv, _christoffel_low(jet.dg))


def _christoffel_low(dg):
    # low[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    return 0.5 * (
        np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg
    )


def ricci(jet: MetricJet) -> AmbientCurvature:
    """Christoffel symbols, Ricci tensor and scalar curvature of a metric jet."""
    if jet.ddg is None:
        raise ValueError("ricci needs second derivatives of the metric")
    ginv = np.linalg.inv(jet.g)
    low = _christoffel_low(jet.dg)
    Gamma = np.einsum("...kl,...lij->...kij", ginv, low)
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, jet.dg, ginv)
    ddg = jet.ddg
    dlow = 0.5 * (
        np.einsum("...mijl->...mlij", ddg)
        + np.einsum("...mjil->...mlij", ddg)
        - ddg
    )
    dGamma = np.einsum("...mkl,...lij->...mkij", dginv, low) + np.einsum(
        "...kl,...mlij->...mkij", ginv, dlow
    )
    Ric = (
        np.einsum("...kkij->...ij", dGamma)
        - np.einsum("...jkik->...ij", dGamma)
        + np.einsum("...kkl,...lij->...ij", Gamma, Gamma)
        - np.einsum("...kjl,...lik->...ij", Gamma, Gamma)
    )
    Ric = 0.5 * (Ric + np.swapaxes(Ric, -1, -2))
    R = np.einsum("...ij,...ij->...", ginv, Ric)
    return AmbientCurvature(Gamma, Ric, R)


def covariant_dK(ej: ExtrinsicJet, Gamma):
    """(nabla K)[..., k, i, j] = nabla_k K_ij."""
    return (
        ej.dK
        - np.einsum("...lki,...lj->...kij", Gamma, ej.K)
        - np.einsum("...lkj,...il->...kij", Gamma, ej.K)
    )


def constraint_from_jets(mj: MetricJet, ej: ExtrinsicJet, curv: AmbientCurvature):
    """Energy density rho and momentum density J from the constraint equations."""
    ginv = np.linalg.inv(mj.g)
    Kup = np.einsum("...ia,...jb,...ab->...ij", ginv, ginv, ej.K)
    K2 = np.einsum("...ij,...ij->...", Kup, ej.K)
    Hbar = np.einsum("...ij,...ij->...", ginv, ej.K)
    rho = 0.5 * (curv.R - K2 + Hbar**2)
    nK = covariant_dK(ej, curv.Gamma)
    dH = np.einsum("...jk,...ijk->...i", ginv, nK)
    divK = np.einsum("...jk,...jki->...i", ginv, nK)
    return rho, dH - divK


def constraint_residual(p: InitialDataProvider, x):
    """(rho, J) from the constraint equations evaluated on the provider's jets."""
    mj, ej = p.jets(x)
    return constraint_from_jets(mj, ej, ricci(mj))


# ---------------------------------------------------------------------------
# decay audit


@dataclass
class DecayReport:
    radii: np.ndarray
    eps: float
    columns: dict = field(default_factory=dict)
    bounded: dict = field(default_factory=dict)

    def rows(self):
        names = list(self.columns)
        for i, r in enumerate(self.radii):
            yield r, {name: self.columns[name][i] for name in names}


def _audit_directions(lmax=8):
    from .sphere import SphericalGrid, reference_normals

    return np.stack(reference_normals(SphericalGrid(lmax)), axis=-1)


def decay_audit(p: InitialDataProvider, radii, directions=None) -> DecayReport:
    """Weighted sup-norms of the decay quantities of g and K on spheres.

    A column counts as bounded when it is finite and its log-log slope over
    the last two radii is at most 0.1 (no power-law growth).
    """
    radii = np.asarray(sorted(float(r) for r in radii))
    if np.any(radii <= p.metadata.r_inner):
        raise DomainError("audit radii must exceed r_inner")
    eps = p.metadata.eps
    q = 0.5 + eps
    dirs = _audit_directions() if directions is None else np.asarray(directions)
    names = ["metric", "metric_d1", "metric_d2", "curv", "curv_d1", "antisym"]
    cols = {name: np.zeros(radii.size) for name in names}
    for i, r in enumerate(radii):
        mj, ej = p.jets(r * dirs)
        _, ejm = p.jets(-r * dirs)
        norm = lambda a: np.sqrt(np.sum(a.reshape(a.shape[0], -1) ** 2, axis=1)).max()
        cols["metric"][i] = r**q * norm(mj.g - EYE)
        cols["metric_d1"][i] = r ** (q + 1) * norm(mj.dg)
        cols["metric_d2"][i] = r ** (q + 2) * norm(mj.ddg) if mj.ddg is not None else np.nan
        cols["curv"][i] = r**q * r * norm(ej.K)
        cols["curv_d1"][i] = r**q * r**2 * norm(ej.dK)
        cols["antisym"][i] = r ** (2 + eps) * norm(ej.K + ejm.K)
    bounded = {}
    for name, vals in cols.items():
        ok = bool(np.all(np.isfinite(vals)))
        if ok and radii.size >= 2 and vals[-1] > 0 and vals[-2] > 0:
            slope = math.log(vals[-1] / vals[-2]) / math.log(radii[-1] / radii[-2])
            ok = slope <= 0.1
        bounded[name] = ok
    return DecayReport(radii=radii, eps=eps, columns=cols, bounded=bounded)


# ---------------------------------------------------------------------------
# gridded data

GRID_MAGIC = b"CEGRID1"
GRID_CHANNELS = 15
_META_KEYS = {"mass_param": 1, "eps": 1, "r_inner": 1, "momentum_param": 3}


def sample_provider(p: InitialDataProvider, shape, origin, spacing, lapse=None):
    """Sample a provider onto a node array of shape (nz, ny, nx, 15)."""
    nx, ny, nz = shape
    xs = origin[0] + spacing[0] * np.arange(nx)
    ys = origin[1] + spacing[1] * np.arange(ny)
    zs = origin[2] + spacing[2] * np.arange(nz)
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
    mj, ej = p.jets(pts)
    iu = np.triu_indices(3)
    data = np.zeros((pts.shape[0], GRID_CHANNELS))
    data[:, 0:6] = mj.g[:, iu[0], iu[1]]
    data[:, 6:12] = ej.K[:, iu[0], iu[1]]
    data[:, 12] = 1.0 if lapse is None else lapse.jets(pts)[0]
    return data.reshape(nz, ny, nx, GRID_CHANNELS)


def write_grid_data(path, data, origin, spacing, metadata: ProviderMetadata | None = None):
    """Write node data of shape (nz, ny, nx, 15) in the grid file format."""
    data = np.asarray(data, dtype="<f8")
    nz, ny, nx, nch = data.shape
    if nch != GRID_CHANNELS:
        raise ValueError("grid data needs 15 channels")
    lines = [GRID_MAGIC.decode(), f"{nx} {ny} {nz}"]
    lines.append(" ".join(f"{v:.17g}" for v in (*origin, *spacing)))
    if metadata is not None:
        lines.append(f"mass_param {metadata.mass_param:.17g}")
        lines.append(f"eps {metadata.eps:.17g}")
        lines.append(f"r_inner {metadata.r_inner:.17g}")
        lines.append("momentum_param " + " ".join(f"{v:.17g}" for v in metadata.momentum_param))
    header = ("\n".join(lines) + "\n\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes(order="C"))


def _lagrange_weights(s):
    """Cubic Lagrange weights on nodes -1, 0, 1, 2 and their first two derivatives."""
    nodes = np.array([-1.0, 0.0, 1.0, 2.0])
    out = np.zeros((3, s.size, 4))
    for j in range(4):
        others = np.delete(nodes, j)
        poly = np.poly(others) / np.prod(nodes[j] - others)
        d1 = np.polyder(poly)
        d2 = np.polyder(d1)
        out[0, :, j] = np.polyval(poly, s)
        out[1, :, j] = np.polyval(d1, s)
        out[2, :, j] = np.polyval(d2, s)
    return out


class GridData(InitialDataProvider):
    """Tensor-product cubic Lagrange interpolation of gridded (g, K, alpha)."""

    name = "grid"

    def __init__(self, data, origin, spacing, metadata: ProviderMetadata | None = None):
        data = np.asarray(data, dtype=float)
        if data.ndim != 4 or data.shape[-1] != GRID_CHANNELS:
            raise ValueError("grid data must have shape (nz, ny, nx, 15)")
        if min(data.shape[:3]) < 4:
            raise ValueError("cubic interpolation needs at least 4 nodes per axis")
        self.data = data
        self.origin = np.asarray(origin, dtype=float)
        self.spacing = np.asarray(spacing, dtype=float)
        self.shape = (data.shape[2], data.shape[1], data.shape[0])  # nx, ny, nz
        self.metadata = metadata if metadata is not None else ProviderMetadata()
        self.upper = self.origin + self.spacing * (np.array(self.shape) - 1)

    def check_domain(self, pts):
        super().check_domain(pts)
        tol = 1e-12 * self.spacing
        inside = np.all((pts >= self.origin - tol) & (pts <= self.upper + tol), axis=-1)
        bad = np.flatnonzero(~inside)
        if bad.size:
            raise DomainError(f"grid: point {pts[bad[0]].tolist()} outside the sampled box")

    def _stencil(self, pts, axis):
        n = self.shape[axis]
        t = (pts[:, axis] - self.origin[axis]) / self.spacing[axis]
        i0 = np.clip(np.floor(t).astype(int), 1, n - 3)
        idx = i0[:, None] + np.arange(-1, 3)[None, :]
        w = _lagrange_weights(t - i0)
        w[1] /= self.spacing[axis]
        w[2] /= self.spacing[axis] ** 2
        return idx, w

    def interpolate(self, pts):
        """Value, gradient and Hessian of all 15 channels at (N, 3) points."""
        (ix, wx), (iy, wy), (iz, wz) = (self._stencil(pts, a) for a in range(3))
        F = self.data[iz[:, :, None, None], iy[:, None, :, None], ix[:, None, None, :]]
        # orders per axis (x, y, z)
        def contract(ox, oy, oz):
            return np.einsum("nc,nb,na,ncbaq->nq", wz[oz], wy[oy], wx[ox], F)

        val = contract(0, 0, 0)
        grad = np.stack([contract(1, 0, 0), contract(0, 1, 0), contract(0, 0, 1)], axis=1)
        hess = np.empty((pts.shape[0], 3, 3, GRID_CHANNELS))
        for a in range(3):
            for b in range(a, 3):
                o = [0, 0, 0]
                o[a] += 1
                o[b] += 1
                hess[:, a, b] = hess[:, b, a] = contract(*o)
        return val, grad, hess

    @staticmethod
    def _sym(v):
        # v[..., 6] -> [..., 3, 3]
        iu = np.triu_indices(3)
        out = np.zeros(v.shape[:-1] + (3, 3))
        out[..., iu[0], iu[1]] = v
        out[..., iu[1], iu[0]] = v
        return out

    def _jets(self, pts):
        val, grad, hess = self.interpolate(pts)
        g = self._sym(val[:, 0:6])
        dg = self._sym(grad[:, :, 0:6])
        ddg = self._sym(hess[:, :, :, 0:6])
        K = self._sym(val[:, 6:12])
        dK = self._sym(grad[:, :, 6:12])
        return MetricJet(g, dg, ddg), ExtrinsicJet(K, dK)

    @property
    def lapse(self):
        return _GridLapse(self)


class _GridLapse:
    def __init__(self, grid):
        self.grid = grid

    def jets(self, x):
        pts, _ = _as_points(x)
        self.grid.check_domain(pts)
        val, grad, hess = self.grid.interpolate(pts)
        return val[:, 12], grad[:, :, 12], hess[:, :, :, 12]


def load_grid_data(path) -> GridData:
    """Read a grid file; malformed content raises GridParseError with a byte offset."""
    with open(path, "rb") as fh:
        raw = fh.read()
    pos = 0

    def next_line():
        nonlocal pos
        end = raw.find(b"\n", pos)
        if end < 0:
            raise GridParseError("unexpected end of header", pos)
        start = pos
        pos = end + 1
        return start, raw[start:end]

    start, line = next_line()
    if line != GRID_MAGIC:
        raise GridParseError("bad magic, expected CEGRID1", start)
    start, line = next_line()
    try:
        dims = [int(v) for v in line.split()]
    except ValueError:
        raise GridParseError("grid dimensions are not integers", start) from None
    if len(dims) != 3 or min(dims) < 4:
        raise GridParseError("expected three dimensions, each at least 4", start)
    start, line = next_line()
    try:
        geom = [float(v) for v in line.split()]
    except ValueError:
        raise GridParseError("origin/spacing are not decimals", start) from None
    if len(geom) != 6 or not all(math.isfinite(v) for v in geom):
        raise GridParseError("expected six finite values x0 y0 z0 hx hy hz", start)
    if min(geom[3:]) <= 0:
        raise GridParseError("axes must be strictly increasing (spacing > 0)", start)
    meta = {}
    while True:
        start, line = next_line()
        if line == b"":
            break
        parts = line.decode("ascii", "replace").split()
        key = parts[0] if parts else ""
        if key not in _META_KEYS or len(parts) != 1 + _META_KEYS[key]:
            raise GridParseError(f"unrecognised header line {line[:40]!r}", start)
        try:
            vals = [float(v) for v in parts[1:]]
        except ValueError:
            raise GridParseError(f"bad value in header line {key}", start) from None
        meta[key] = tuple(vals) if key == "momentum_param" else vals[0]
    nx, ny, nz = dims
    count = nx * ny * nz * GRID_CHANNELS
    need = count * 8
    have = len(raw) - pos
    if have < need:
        raise GridParseError(f"payload truncated: {have} of {need} bytes", len(raw))
    if have > need:
        raise GridParseError("trailing bytes after payload", pos + need)
    payload = np.frombuffer(raw, dtype="<f8", count=count, offset=pos)
    bad = np.flatnonzero(~np.isfinite(payload))
    if bad.size:
        raise GridParseError("non-finite value in payload", pos + 8 * int(bad[0]))
    data = payload.astype(float).reshape(nz, ny, nx, GRID_CHANNELS)
    try:
        metadata = ProviderMetadata(**meta) if meta else None
    except ValueError as exc:
        raise GridParseError(str(exc), 0) from None
    return GridData(data, geom[:3], geom[3:], metadata)


# ---------------------------------------------------------------------------
# temporal data


class ConstantLapse:
    def __init__(self, value=1.0):
        self.value = float(value)

    def jets(self, x):
        pts, _ = _as_points(x)
        n = pts.shape[0]
        return np.full(n, self.value), np.zeros((n, 3)), np.zeros((n, 3, 3))


class StaticSchwarzschildLapse:
    """alpha = (1 - m/2r)/(1 + m/2r), the static lapse in isotropic coordinates."""

    def __init__(self, mass):
        self.mass = float(mass)

    def jets(self, x):
        pts, _ = _as_points(x)
        m = self.mass
        r = np.linalg.norm(pts, axis=-1)
        u = m / (2.0 * r)
        alpha = (1.0 - u) / (1.0 + u)
        # d alpha / du = -2/(1+u)^2, du/dx_k = -u x_k / r^2
        da_du = -2.0 / (1.0 + u) ** 2
        d2a_du2 = 4.0 / (1.0 + u) ** 3
        du = -u[:, None] * pts / r[:, None] ** 2
        ddu = -(m / 2.0) * (
            EYE[None] / r[:, None, None] ** 3
            - 3.0 * pts[:, :, None] * pts[:, None, :] / r[:, None, None] ** 5
        )
        dalpha = da_du[:, None] * du
        ddalpha = d2a_du2[:, None, None] * du[:, :, None] * du[:, None, :] + da_du[:, None, None] * ddu
        return alpha, dalpha, ddalpha


class _SliceProvider(InitialDataProvider):
    def __init__(self, spacetime, t):
        self.spacetime = spacetime
        self.t = float(t)
        self.metadata = spacetime.base.metadata
        self.name = f"{spacetime.base.name}@t={t:g}"

    def _jets(self, pts):
        return self.spacetime._slice_jets(pts, self.t)


class SyntheticSpacetime:
    """Spacetime -alpha^2 dt^2 + g(t) with zero shift around a given slice.

    ``g(t) = g0 + t g1 + t^2/2 g2`` with ``g1 = -2 alpha K0`` so that the slice
    at t = 0 carries the base data (g0, K0).  ``accel`` optionally supplies
    ``(g2, dg2)`` for (N, 3) points; the lapse is time independent.  The
    spacetime Einstein tensor at t = 0 follows from the evolution equation
    for K, which holds identically for such a metric.
    """

    def __init__(self, base: InitialDataProvider, lapse, accel=None):
        self.base = base
        self.lapse = lapse
        self.accel = accel

    def slice_at(self, t) -> InitialDataProvider:
        if t == 0:
            return self.base
        return _SliceProvider(self, t)

    def _slice_jets(self, pts, t):
        mj, ej = self.base._jets(pts)
        a, da, _ = self.lapse.jets(pts)
        g1 = -2.0 * a[:, None, None] * ej.K
        dg1 = -2.0 * (da[:, :, None, None] * ej.K[:, None] + a[:, None, None, None] * ej.dK)
        g = mj.g + t * g1
        dg = mj.dg + t * dg1
        K = ej.K.copy()
        dK = ej.dK.copy()
        if self.accel is not None:
            g2, dg2 = self.accel(pts)
            g = g + 0.5 * t * t * g2
            dg = dg + 0.5 * t * t * dg2
            K = K - t * g2 / (2.0 * a[:, None, None])
            dK = dK - t * (
                dg2 / (2.0 * a[:, None, None, None])
                - g2[:, None] * da[:, :, None, None] / (2.0 * a[:, None, None, None] ** 2)
            )
        return MetricJet(g, dg, None), ExtrinsicJet(K, dK)

    def temporal_jets(self, x) -> TemporalData:
        pts, _ = _as_points(x)
        self.base.check_domain(pts)
        mj, ej = self.base._jets(pts)
        curv = ricci(mj)
        a, da, dda = self.lapse.jets(pts)
        hess = dda - np.einsum("...kij,...k->...ij", curv.Gamma, da)
        ginv = np.linalg.inv(mj.g)
        K = ej.K
        KK = np.einsum("...ik,...kl,...lj->...ij", K, ginv, K)
        Hbar = np.einsum("...ij,...ij->...", ginv, K)
        dtK = np.zeros_like(K)
        if self.accel is not None:
            g2, _ = self.accel(pts)
            dtK = -g2 / (2.0 * a[:, None, None])
        ric4 = (
            curv.Ric
            - 2.0 * KK
            + Hbar[:, None, None] * K
            - (hess + dtK) / a[:, None, None]
        )
        rho, jmom = constraint_from_jets(mj, ej, curv)
        tr4 = np.einsum("...ij,...ij->...", ginv, ric4)
        einstein = ric4 - (tr4 - rho)[:, None, None] * mj.g
        return TemporalData(a, da, hess, einstein, rho, jmom)


def static_schwarzschild_spacetime(mass) -> SyntheticSpacetime:
    """Static slicing of Schwarzschild: K = 0 and G = 0 up to round-off."""
    return SyntheticSpacetime(SchwarzschildData(mass), StaticSchwarzschildLapse(mass))
