"""Newton solves for surfaces of prescribed expansion and the continuations built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.linalg

from .errors import (
    ContinuationBreakdown,
    DomainError,
    GeometryError,
    NewtonDivergence,
    SingularJacobian,
    SolverError,
)
from .initialdata import InitialDataProvider
from .sphere import SphericalGrid, analyze
from .stability import (
    SingularOperator,
    _solve,
    radial_jacobian,
    temporal_action,
    translational_basis,
    weighted_pseudo_stability,
)
from .surface import (
    RadialSurface,
    SurfaceGeometry,
    compute_geometry,
    concentricity_check,
    sobolev_norm,
    umbilicity_report,
)

__all__ = [
    "SolveConfig",
    "TraceRecord",
    "ContinuationTrace",
    "LapseResult",
    "LeafResult",
    "FoliationResult",
    "UniquenessReport",
    "initial_guess",
    "solve_prescribed_expansion",
    "continue_weight",
    "weight_lapse",
    "radius_lapse",
    "foliation_sweep",
    "time_lapse",
    "uniqueness_probe",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = (
    "b", "sigma", "iters", "residual", "mH", "zx", "zy", "zz", "sup_Aring", "min_eig", "min_lapse",
)


@dataclass
class SolveConfig:
    lmax: int = 24
    newton_tol: float = 1e-10
    max_newton: int = 25
    b_step_init: float = 0.1
    b_step_min: float = 1e-4
    damping: float = 0.5
    sigma_list: tuple = ()
    max_backtracks: int = 20
    track_eigenvalues: bool = True

    def __post_init__(self):
        if self.newton_tol <= 0 or self.b_step_min <= 0:
            raise ValueError("tolerances must be positive")
        for name in ("b_step_init", "b_step_min", "damping"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.b_step_min > self.b_step_init:
            raise ValueError("b_step_min exceeds b_step_init")
        if self.max_newton < 1 or self.lmax < 2:
            raise ValueError("max_newton >= 1 and lmax >= 2 required")
        self.sigma_list = tuple(float(s) for s in self.sigma_list)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def grid(self):
        return SphericalGrid(self.lmax)


@dataclass
class TraceRecord:
    b: float
    sigma: float
    iters: int
    residual: float
    mH: float
    z: tuple
    sup_Aring: float
    min_eig: float = math.nan
    min_lapse: float = math.nan

    def row(self):
        return (
            self.b, self.sigma, self.iters, self.residual, self.mH, *self.z,
            self.sup_Aring, self.min_eig, self.min_lapse,
        )


@dataclass
class ContinuationTrace:
    records: list = field(default_factory=list)

    def append(self, rec):
        self.records.append(rec)

    def extend(self, other):
        self.records.extend(other.records)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def last(self):
        return self.records[-1]

    def rows(self):
        return [r.row() for r in self.records]


def _record(geo, b, sigma, iters, residual, min_eig=math.nan, min_lapse=math.nan):
    return TraceRecord(
        b=float(b),
        sigma=float(sigma),
        iters=int(iters),
        residual=float(residual),
        mH=float(geo.hawking_mass),
        z=tuple(float(v) for v in geo.center_z),
        sup_Aring=float(geo.Aring_norm.max()),
        min_eig=float(min_eig),
        min_lapse=float(min_lapse),
    )


def _min_eig(geo, b):
    vals = scipy.linalg.eigvals(weighted_pseudo_stability(geo, b).matrix)
    return float(vals[np.argmin(np.abs(vals))].real)


def initial_guess(p: InitialDataProvider, sigma: float, grid: SphericalGrid, center=(0.0, 0.0, 0.0)):
    """Centred coordinate sphere whose Schwarzschild area radius is sigma."""
    m = p.metadata.mass_param
    s = sigma - m
    r = 0.5 * (s + math.sqrt(s * s - m * m)) if s > abs(m) else sigma
    return RadialSurface.round(grid, r, center)


def _residual(geo, b, target):
    theta = geo.H + b * geo.trK
    return theta, theta - target


def solve_prescribed_expansion(
    p: InitialDataProvider, b: float, sigma_target: float, guess: RadialSurface, cfg: SolveConfig
):
    """Newton iteration for H + b tr K = -2/sigma_target on a radial graph.

    Returns the surface and a trace with one record per iterate.  The centre
    stays fixed; all motion is in rho.
    """
    if not -1.0 <= b <= 1.0:
        raise ValueError("weight b must lie in [-1, 1]")
    target = -2.0 / sigma_target
    trace = ContinuationTrace()
    s = guess
    try:
        geo = compute_geometry(s, p)
    except (GeometryError, DomainError) as exc:
        raise NewtonDivergence(f"initial guess is not admissible: {exc}", trace) from exc
    theta, R = _residual(geo, b, target)
    res = float(np.abs(R).max())
    for it in range(cfg.max_newton + 1):
        trace.append(_record(geo, b, sigma_target, it, res))
        if res <= cfg.newton_tol:
            return s, trace
        if it == cfg.max_newton:
            break
        J = radial_jacobian(geo, b, theta)
        try:
            delta = _solve(J.matrix, -(geo.grid.analysis @ R))
        except SingularOperator as exc:
            raise SingularJacobian(str(exc), trace) from exc
        t = 1.0
        for _ in range(cfg.max_backtracks + 1):
            trial = s.with_coeffs(s.coeffs + t * delta)
            try:
                geo_t = compute_geometry(trial, p)
                theta_t, R_t = _residual(geo_t, b, target)
                res_t = float(np.abs(R_t).max())
            except (GeometryError, DomainError):
                res_t = math.inf
            if res_t < res:
                break
            t *= cfg.damping
        else:
            raise NewtonDivergence(
                f"residual did not decrease after {cfg.max_backtracks} backtracking steps "
                f"(residual {res:.3e})",
                trace,
            )
        s, geo, theta, R, res = trial, geo_t, theta_t, R_t, res_t
    raise NewtonDivergence(
        f"no convergence in {cfg.max_newton} Newton steps (residual {res:.3e})", trace
    )


@dataclass
class LapseResult:
    u: np.ndarray
    u_translational: np.ndarray
    u_perp: np.ndarray
    norm_translational: float
    norm_perp: float
    coeffs: np.ndarray


def _split(geo, coeffs):
    V, _, _, mass = translational_basis(geo)
    proj = V @ np.linalg.solve(V.T @ mass @ V, V.T @ (mass @ coeffs))
    S = geo.grid.Y
    uT = S @ proj
    uP = S @ (coeffs - proj)
    return uT, uP, math.sqrt(max(geo.integrate(uT**2), 0)), math.sqrt(max(geo.integrate(uP**2), 0))


def _lapse_solve(geo, b, rhs):
    J = weighted_pseudo_stability(geo, b)
    try:
        coeffs = J.solve(rhs)
    except SingularOperator as exc:
        raise SingularJacobian(str(exc)) from exc
    uT, uP, nT, nP = _split(geo, coeffs)
    return LapseResult(geo.grid.Y @ coeffs, uT, uP, nT, nP, coeffs)


def weight_lapse(geo: SurfaceGeometry, b: float) -> LapseResult:
    """Normal speed u of the leaves in b: J^b u = -tr K."""
    return _lapse_solve(geo, b, -geo.trK)


def radius_lapse(geo: SurfaceGeometry, b: float, sigma: float) -> LapseResult:
    """Normal speed of the leaves in sigma: J^b u = 2/sigma^2."""
    return _lapse_solve(geo, b, np.full(geo.grid.nnodes, 2.0 / sigma**2))


def continue_weight(
    p: InitialDataProvider, sigma: float, b_target: float, cfg: SolveConfig, guess: RadialSurface | None = None
):
    """Predictor-corrector continuation from the CMC leaf (b = 0) to b_target.

    The predictor moves rho by ``db * u / w`` with u the weight lapse; the
    corrector is a Newton solve.  Failed steps are halved; below
    ``b_step_min`` the continuation stops with ContinuationBreakdown.
    """
    grid = cfg.grid()
    if guess is None:
        guess = initial_guess(p, sigma, grid)
    trace = ContinuationTrace()
    try:
        s, ntr = solve_prescribed_expansion(p, 0.0, sigma, guess, cfg)
    except SolverError as exc:
        raise ContinuationBreakdown(f"CMC solve failed: {exc}", None, exc.trace) from exc
    geo = compute_geometry(s, p)
    min_eig = _min_eig(geo, 0.0) if cfg.track_eigenvalues else math.nan
    trace.append(_record(geo, 0.0, sigma, ntr.last.iters, ntr.last.residual, min_eig))
    if b_target == 0:
        return s, trace
    if not -1.0 <= b_target <= 1.0:
        raise ValueError("b_target must lie in [-1, 1]")
    direction = 1.0 if b_target > 0 else -1.0
    if not np.any(geo.trK != 0.0):
        # Theta_b does not depend on b: the CMC leaf solves every b
        min_eig = _min_eig(geo, b_target) if cfg.track_eigenvalues else math.nan
        trace.append(_record(geo, b_target, sigma, 0, trace.last.residual, min_eig))
        return s, trace
    b = 0.0
    step = cfg.b_step_init
    while b != b_target:
        db = direction * min(step, abs(b_target - b))
        b_new = b + db
        if abs(b_target - b_new) < 1e-12:
            b_new = b_target
        try:
            u = weight_lapse(geo, b)
            pred = s.with_coeffs(s.coeffs + (b_new - b) * analyze(u.u / geo.w, grid))
            s_new, ntr = solve_prescribed_expansion(p, b_new, sigma, pred, cfg)
        except SolverError:
            step *= 0.5
            if step < cfg.b_step_min:
                raise ContinuationBreakdown(
                    f"step fell below {cfg.b_step_min} at b={b}", b, trace, s
                ) from None
            continue
        b, s = b_new, s_new
        geo = compute_geometry(s, p)
        min_eig = _min_eig(geo, b) if cfg.track_eigenvalues else math.nan
        trace.append(_record(geo, b, sigma, ntr.last.iters, ntr.last.residual, min_eig))
    return s, trace


@dataclass
class LeafResult:
    sigma: float
    surface: RadialSurface
    lapse: np.ndarray
    min_lapse: float
    max_lapse: float
    record: TraceRecord


@dataclass
class FoliationResult:
    sign: int
    leaves: list
    trace: ContinuationTrace
    nested: bool
    lapse_positive: bool


def foliation_sweep(p: InitialDataProvider, sign: int, sigma_list, cfg: SolveConfig) -> FoliationResult:
    """CE leaves for ascending sigma with their radius lapses.

    The first leaf comes from the weight continuation, later leaves from
    Newton started at the previous leaf scaled by the sigma ratio.
    """
    sigmas = [float(s) for s in sigma_list]
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValueError("sigma_list must be strictly ascending")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    leaves = []
    trace = ContinuationTrace()
    prev = None
    for sigma in sigmas:
        try:
            if prev is None:
                s, tr = continue_weight(p, sigma, float(sign), cfg)
            else:
                guess = prev.surface.scaled(sigma / prev.sigma)
                s, tr = solve_prescribed_expansion(p, float(sign), sigma, guess, cfg)
        except SolverError as exc:
            if exc.trace is not None:
                trace.extend(exc.trace)
            exc.trace = trace
            raise
        geo = compute_geometry(s, p)
        lap = radius_lapse(geo, float(sign), sigma)
        min_eig = _min_eig(geo, float(sign)) if cfg.track_eigenvalues else math.nan
        rec = _record(geo, sign, sigma, tr.last.iters, tr.last.residual, min_eig, lap.u.min())
        trace.append(rec)
        prev = LeafResult(sigma, s, lap.u, float(lap.u.min()), float(lap.u.max()), rec)
        leaves.append(prev)
    nested = all(
        np.all(b.surface.rho > a.surface.rho) and np.allclose(a.surface.center, b.surface.center)
        for a, b in zip(leaves, leaves[1:])
    )
    positive = all(leaf.min_lapse > 0 for leaf in leaves)
    return FoliationResult(sign, leaves, trace, bool(nested), bool(positive))


@dataclass
class TimeLapseResult:
    u: np.ndarray
    w1inf: float
    norm_translational: float
    norm_perp: float
    source: np.ndarray


def time_lapse(geo: SurfaceGeometry, td, sign: int) -> TimeLapseResult:
    """Normal speed u of the leaves under the time evolution: J^(+-) u = -J^t alpha."""
    source = temporal_action(geo, td, sign)
    res = _lapse_solve(geo, float(sign), -source)
    w1 = sobolev_norm(res.u, geo, 1, math.inf)
    return TimeLapseResult(res.u, w1, res.norm_translational, res.norm_perp, source)


@dataclass
class UniquenessReport:
    admissible: list
    concentricity: list
    surfaces: list
    distances: np.ndarray
    max_distance: float


def uniqueness_probe(
    p: InitialDataProvider,
    sign: int,
    sigma: float,
    guesses,
    cfg: SolveConfig,
    cz: float = 0.1,
    c1: float = 1.0,
    eta: float | None = None,
):
    """Solve from every admissible guess and compare the results about the origin.

    Guesses outside the asymptotically concentric class are flagged and not
    solved.
    """
    eps = p.metadata.eps
    eta = eps if eta is None else eta
    admissible, reports, surfaces = [], [], []
    for guess in guesses:
        rep = concentricity_check(compute_geometry(guess, p), eps, eta, cz, c1)
        reports.append(rep)
        admissible.append(rep.passed)
    for guess, ok in zip(guesses, admissible):
        if not ok:
            continue
        s, _ = solve_prescribed_expansion(p, float(sign), sigma, guess, cfg)
        if np.any(s.center != 0.0):
            s = s.recentered(np.zeros(3))
        surfaces.append(s)
    n = len(surfaces)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = float(np.abs(surfaces[i].rho - surfaces[j].rho).max())
    return UniquenessReport(admissible, reports, surfaces, dist, float(dist.max()) if n else 0.0)
