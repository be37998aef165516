import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cefoliator.initialdata import BowenYorkData, FlatData, PerturbedData, SchwarzschildData
from cefoliator.solver import SolveConfig, continue_weight

settings.register_profile(
    "cefoliator",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("cefoliator")

P_BY = (0.01, 0.0, 0.0)


def make_provider(name):
    if name == "flat":
        return FlatData()
    if name == "schwarzschild":
        return SchwarzschildData(1.0)
    if name == "bowen_york":
        return BowenYorkData(1.0, P_BY)
    if name == "bowen_york_neg":
        return BowenYorkData(1.0, tuple(-v for v in P_BY))
    if name == "perturbed":
        return PerturbedData(1.0, 0.5)
    raise KeyError(name)


@functools.lru_cache(maxsize=None)
def leaf(name, sigma, b, lmax=24, track=False):
    """Cached continuation result (surface, trace) shared across test modules."""
    cfg = SolveConfig(lmax=lmax, track_eigenvalues=track)
    return continue_weight(make_provider(name), float(sigma), float(b), cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def band_limited(grid, rng, lmax_pert=6, scale=1.0):
    """Random smooth nodal field with unit sup norm."""
    from cefoliator.sphere import synthesize

    c = np.zeros(grid.ncoef)
    n = (lmax_pert + 1) ** 2
    c[:n] = rng.normal(size=n) / (1.0 + grid.ell[:n]) ** 2
    v = synthesize(c, grid)
    return scale * v / np.abs(v).max()


ACCEPTANCE = {}


def record(n, ok, detail):
    """Store the verdict of acceptance criterion n for the terminal summary."""
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
