"""Acceptance criteria 1-11, one PASS/FAIL line each.

Lines are printed as the criteria run and repeated in the terminal summary.
Deviations from the literal wording are documented in the project notes and
in the detail text of the affected lines.
"""
import math
import time

import numpy as np
import pytest

from cefoliator.adm import (
    adm_linear_momentum,
    adm_mass_curvature,
    adm_mass_flux,
    hawking_limit,
    momentum_limit_check,
)
from cefoliator.initialdata import (
    BowenYorkData,
    ConstantLapse,
    PerturbedData,
    SchwarzschildData,
    SyntheticSpacetime,
    static_schwarzschild_spacetime,
)
from cefoliator.sphere import SphericalGrid, synthesize
from cefoliator.solver import (
    SolveConfig,
    foliation_sweep,
    initial_guess,
    solve_prescribed_expansion,
    time_lapse,
    uniqueness_probe,
)
from cefoliator.stability import (
    curvature_radius,
    radial_jacobian,
    spectrum,
    verify_invertibility_estimates,
    weighted_pseudo_stability,
)
from cefoliator.surface import RadialSurface, compute_geometry, expansion

from conftest import P_BY, band_limited, leaf, make_provider, record

pytestmark = pytest.mark.slow

CFG = SolveConfig(lmax=24, track_eigenvalues=False)
# the translational eigenvalue ~6m/sigma^3 amplifies a residual by up to
# sigma^3/(6m) in the shape; shape criteria use a tighter Newton tolerance
TIGHT = SolveConfig(lmax=24, newton_tol=1e-13, track_eigenvalues=False)


def test_criterion_01_exact_solution_recovery():
    p = SchwarzschildData(1.0)
    grid = CFG.grid()
    rng = np.random.default_rng(2024)
    base = initial_guess(p, 100.0, grid)
    guess = RadialSurface.from_values(grid, base.rho * (1 + 0.05 * band_limited(grid, rng)))
    t0 = time.perf_counter()
    s, tr = solve_prescribed_expansion(p, 0.0, 100.0, guess, TIGHT)
    elapsed = time.perf_counter() - t0
    loose, _ = solve_prescribed_expansion(p, 0.0, 100.0, guess, CFG)
    dev = float(np.ptp(s.rho))
    centre = float(np.linalg.norm(compute_geometry(s, p).center_z))
    ok = dev <= 1e-8 and tr.last.iters <= 8 and elapsed <= 60 and centre <= 1e-8
    record(
        1, ok,
        f"sup-dev {dev:.2e} (<=1e-8), iters {tr.last.iters} (<=8), {elapsed:.2f}s (<=60), |z| {centre:.1e}"
        f" at newton_tol 1e-13; default 1e-10 leaves sup-dev {np.ptp(loose.rho):.1e}",
    )
    assert ok


def test_criterion_02_hawking_mass():
    errs = []
    for r in (10.0, 100.0, 1000.0):
        geo = compute_geometry(RadialSurface.round(CFG.grid(), r), SchwarzschildData(1.0))
        errs.append(abs(geo.hawking_mass - 1.0))
    ok = max(errs) <= 1e-9
    record(2, ok, "|m_H - m| at r=10,100,1000: " + ", ".join(f"{e:.1e}" for e in errs) + " (<=1e-9)")
    assert ok


def _fd_error(p, s, b, ndirs=6, h=1e-3, seed=11):
    grid = s.grid
    rng = np.random.default_rng(seed)
    J = radial_jacobian(compute_geometry(s, p), b)
    worst = 0.0
    for _ in range(ndirs):
        dc = np.zeros(grid.ncoef)
        n = (8 + 1) ** 2
        dc[:n] = rng.normal(size=n)
        dc /= np.abs(synthesize(dc, grid)).max()

        def theta(t):
            return expansion(compute_geometry(s.with_coeffs(s.coeffs + t * dc), p), b).theta

        fd = (theta(h) - theta(-h)) / (2 * h)
        an = J.apply_coeffs(dc)
        worst = max(worst, float(np.abs(fd - an).max() / np.abs(fd).max()))
    return worst


def test_criterion_03_jacobian_fidelity():
    cases = [
        ("schwarzschild b=0", "schwarzschild", 0.0),
        ("bowen_york b=+1", "bowen_york", 1.0),
        ("bowen_york b=-1", "bowen_york", -1.0),
    ]
    errs = {}
    for label, name, b in cases:
        s, _ = leaf(name, 100, b)
        errs[label] = _fd_error(make_provider(name), s, b)
    ok = max(errs.values()) <= 1e-6
    record(3, ok, "; ".join(f"{k}: {v:.1e}" for k, v in errs.items()) + " (<=1e-6, 6 directions each)")
    assert ok


def test_criterion_04_translational_spectrum():
    p = SchwarzschildData(1.0)
    parts, ok, Ds = [], True, []
    for sigma in (100.0, 200.0):
        s, _ = leaf("schwarzschild", sigma, 0.0)
        geo = compute_geometry(s, p)
        # sigma is the leaf parameter, H = -2/sigma; with the area radius the
        # translational block is exactly -6m/sigma^3 on Schwarzschild and D = 0
        sig = curvature_radius(geo, 0.0)
        ev = spectrum(weighted_pseudo_stability(geo, 0.0), k=6).eigenvalues
        ref = 6 * geo.hawking_mass / sig**3
        near = np.abs(ev.real / -ref - 1) <= 0.1
        literal = int(np.sum(np.abs(ev.real / ref - 1) <= 0.1))
        rest = np.abs(ev[~near]).min() * sig**2
        D = verify_invertibility_estimates(geo, 0.0, sigma=sig).D_measured
        Ds.append(D)
        ok &= int(near.sum()) == 3 and rest >= 1.0 and literal == 0
        parts.append(f"sigma={sigma:g}: {int(near.sum())} near -6m/s^3, {literal} near +6m/s^3, min|rest|s^2={rest:.3f}, D={D:.3g}")
    ok &= Ds[1] < Ds[0]
    record(4, ok, "; ".join(parts) + " (sign: translations sit at -6m_H/sigma^3 with L = Lap + Ric + |A|^2)")
    assert ok


def test_criterion_05_ce_continuation():
    parts, ok = [], True
    p_plus, p_minus = make_provider("bowen_york"), make_provider("bowen_york_neg")
    for sigma in (50, 100, 200):
        res = []
        for b in (1.0, -1.0):
            s, tr = leaf("bowen_york", sigma, b)
            assert tr.last.b == b
            geo = compute_geometry(s, p_plus)
            res.append(float(np.abs(geo.H + b * geo.trK + 2.0 / sigma).max()))
        mirror, _ = leaf("bowen_york_neg", sigma, 1.0)
        minus, _ = leaf("bowen_york", sigma, -1.0)
        par = float(np.abs(mirror.rho - minus.rho).max())
        ok &= max(res) <= 1e-10 and par <= 1e-8
        parts.append(f"sigma={sigma}: res+ {res[0]:.1e}, res- {res[1]:.1e}, parity {par:.1e}")
    record(5, ok, "; ".join(parts) + " (res<=1e-10, parity<=1e-8)")
    assert ok


def test_criterion_06_foliation():
    p = make_provider("bowen_york")
    sigmas = np.geomspace(50, 500, 10)
    parts, ok = [], True
    for sign in (1, -1):
        res = foliation_sweep(p, sign, sigmas, CFG)
        mins = [lf.min_lapse for lf in res.leaves]
        ok &= res.lapse_positive and res.nested and len(res.leaves) == 10
        parts.append(f"sign {sign:+d}: min u {min(mins):.4f}, nested {res.nested}")
    record(6, ok, "; ".join(parts) + " over 10 leaves in [50, 500]")
    assert ok


def test_criterion_07_uniqueness():
    cfg = TIGHT
    p = make_provider("bowen_york")
    grid = cfg.grid()
    base = initial_guess(p, 100.0, grid)
    guesses = []
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        guesses.append(RadialSurface.from_values(grid, base.rho * (1 + 0.02 * band_limited(grid, rng))))
    rep = uniqueness_probe(p, 1, 100.0, guesses, cfg)
    ok = all(rep.admissible) and len(rep.surfaces) == 3 and rep.max_distance <= 1e-8
    record(7, ok, f"Bowen-York sigma=100, 3 admissible guesses, max pairwise {rep.max_distance:.1e} (<=1e-8, newton_tol 1e-13)")
    assert ok


def test_criterion_08_umbilicity_decay():
    sig = np.array([25.0, 50.0, 100.0, 200.0])
    sup = [leaf("perturbed", s, 1.0)[1].last.sup_Aring for s in sig]
    slope = float(np.polyfit(np.log(sig), np.log(sup), 1)[0])
    ok = slope <= -1.4
    record(8, ok, f"log-log slope of sup|A_ring| over sigma 25..200: {slope:.3f} (<=-1.4)")
    assert ok


def test_criterion_09_adm_consistency():
    radii = [250.0, 500.0, 1000.0]
    parts, ok = [], True
    for name in ("schwarzschild", "perturbed"):
        p = make_provider(name)
        lims = [f(p, radii).limit for f in (adm_mass_flux, adm_mass_curvature, hawking_limit)]
        spread = max(lims) - min(lims)
        ok &= spread <= 2e-3
        parts.append(f"{name}: flux {lims[0]:.6f}, curv {lims[1]:.6f}, hawking {lims[2]:.6f}")
    P = np.array(P_BY)
    plus = adm_linear_momentum(make_provider("bowen_york"), radii)
    minus = adm_linear_momentum(make_provider("bowen_york_neg"), radii)
    cos = float(plus.limit @ P / (np.linalg.norm(plus.limit) * np.linalg.norm(P)))
    parity = bool(np.array_equal(plus.values, -minus.values))
    chk = momentum_limit_check(make_provider("bowen_york"), radii)
    mism = float(chk.relative_mismatch.max())
    ok &= abs(abs(cos) - 1) <= 1e-12 and parity and mism <= 1e-4
    parts.append(f"BY cos(P_adm, P) {cos:+.12f}, parity exact {parity}, s={chk.factor:.6f} mismatch {mism:.1e}")
    record(9, ok, "; ".join(parts))
    assert ok


def test_criterion_10_time_invariance():
    p = SchwarzschildData(1.0)
    static = static_schwarzschild_spacetime(1.0)
    w_static = []
    for sign in (1, -1):
        for sigma in (50, 100, 200):
            s, _ = leaf("schwarzschild", sigma, float(sign))
            w_static.append(time_lapse(compute_geometry(s, p), static, sign).w1inf)
    by = make_provider("bowen_york")
    st = SyntheticSpacetime(by, ConstantLapse(1.0))
    sig = (50, 100, 200, 400)
    w_by = [time_lapse(compute_geometry(leaf("bowen_york", s, 1.0)[0], by), st, 1).w1inf for s in sig]
    decreasing = all(b < a for a, b in zip(w_by, w_by[1:]))
    ok = max(w_static) <= 1e-6 and decreasing
    record(
        10, ok,
        f"static max W1inf {max(w_static):.1e} (<=1e-6); Bowen-York alpha=1 W1inf "
        + ", ".join(f"{w:.7f}" for w in w_by)
        + f" at sigma {sig} decreasing {decreasing} (limit ~2|P|/m, a boost, not 0)",
    )
    assert ok


def test_criterion_11_discretization():
    cases = [("schwarzschild", 100, 0.0), ("bowen_york", 100, 1.0), ("perturbed", 100, 1.0)]
    big = SphericalGrid(32)
    worst_s, worst_e = 0.0, 0.0
    for name, sigma, b in cases:
        p = make_provider(name)
        lo, _ = leaf(name, sigma, b, lmax=16)
        hi, _ = leaf(name, sigma, b, lmax=32)
        pad = np.zeros(big.ncoef)
        pad[: lo.coeffs.size] = lo.coeffs
        worst_s = max(worst_s, float(np.abs(synthesize(pad, big) - hi.rho).max()))
        ev = []
        for s in (lo, hi):
            sm = spectrum(weighted_pseudo_stability(compute_geometry(s, p), b), k=6).smallest
            ev.append(np.sort_complex(sm))
        worst_e = max(worst_e, float(np.max(np.abs(ev[0] - ev[1]) / np.abs(ev[1]))))
    ok = worst_s <= 1e-8 and worst_e <= 1e-8
    record(11, ok, f"Lmax 16 vs 32: surfaces {worst_s:.1e} (<=1e-8), six smallest eigenvalues rel {worst_e:.1e} (<=1e-8)")
    assert ok
