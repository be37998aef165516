import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cefoliator.errors import DomainError, GridParseError
from cefoliator.initialdata import (
    PERTURBATION_PATTERN,
    BowenYorkData,
    FlatData,
    GridData,
    PerturbedData,
    ProviderMetadata,
    SchwarzschildData,
    christoffel,
    constraint_residual,
    decay_audit,
    eval_bowen_york,
    eval_flat,
    eval_perturbed,
    eval_schwarzschild_isotropic,
    load_grid_data,
    ricci,
    sample_provider,
    write_grid_data,
)

EYE = np.eye(3)
vec = st.tuples(*[st.floats(-1, 1)] * 3).map(np.array)


def fd_derivative(f, x, h):
    """Central differences of f along each coordinate, stacked on a new axis 0."""
    out = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        out.append((f(x + e) - f(x - e)) / (2 * h))
    return np.stack(out)


# --- analytic families -------------------------------------------------------


def test_flat_jets():
    mj, ej = eval_flat(np.array([1.0, 0, 0]))
    assert np.array_equal(mj.g, EYE)
    assert not mj.dg.any() and not mj.ddg.any()
    assert not ej.K.any() and not ej.dK.any()


def test_flat_constraints_zero():
    rho, J = constraint_residual(FlatData(), np.array([[3.0, -2, 1], [0.5, 7, 2]]))
    assert not np.any(rho) and not np.any(J)


def test_schwarzschild_m0_is_flat():
    mj, ej = eval_schwarzschild_isotropic(0.0, np.array([2.0, 3, 4]))
    assert np.array_equal(mj.g, EYE) and not mj.dg.any() and not mj.ddg.any()


def test_schwarzschild_g11_at_10():
    mj, _ = eval_schwarzschild_isotropic(1.0, np.array([10.0, 0, 0]))
    assert abs(mj.g[0, 0] - 1.21550625) <= 1e-15
    assert abs(mj.g[0, 1]) == 0.0


def test_schwarzschild_domain_error():
    with pytest.raises(DomainError):
        SchwarzschildData(1.0).jets(np.array([0.1, 0, 0]))


FAMILIES = [
    ("schwarzschild", SchwarzschildData(1.0)),
    ("bowen_york", BowenYorkData(1.0, [0.01, -0.02, 0.03])),
    ("perturbed", PerturbedData(1.0, 0.5)),
]


@pytest.mark.parametrize("name,p", FAMILIES, ids=[f[0] for f in FAMILIES])
def test_jet_derivatives_match_finite_differences(name, p):
    x = np.array([6.0, -3.0, 4.0])
    r = np.linalg.norm(x)
    h = 1e-4 * r
    mj, ej = p.jets(x)

    def rel(a, b):
        return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)

    assert rel(fd_derivative(lambda y: p.jets(y)[0].g, x, h), mj.dg) <= 1e-7
    assert rel(fd_derivative(lambda y: p.jets(y)[0].dg, x, h), mj.ddg) <= 1e-7
    if ej.K.any():
        assert rel(fd_derivative(lambda y: p.jets(y)[1].K, x, h), ej.dK) <= 1e-7


def test_schwarzschild_dg_fd_tight():
    p = SchwarzschildData(1.0)
    x = np.array([10.0, 0, 0])
    fd = fd_derivative(lambda y: p.jets(y)[0].g, x, 1e-4)
    assert np.abs(fd - p.jets(x)[0].dg).max() / np.abs(fd).max() <= 1e-9


def test_jet_symmetries():
    mj, ej = PerturbedData(1.0, 0.5).jets(np.array([[5.0, 1, 2], [-3, 4, 8]]))
    assert np.array_equal(mj.g, mj.g.swapaxes(-1, -2))
    assert np.array_equal(mj.dg, mj.dg.swapaxes(-1, -2))
    assert np.allclose(mj.ddg, mj.ddg.swapaxes(1, 2), rtol=0, atol=1e-18)
    assert np.all(np.linalg.eigvalsh(mj.g) > 0)


def test_bowen_york_zero_momentum():
    _, ej = eval_bowen_york(1.0, np.zeros(3), np.array([3.0, 4, 5]))
    assert not ej.K.any()


@given(vec, st.floats(1.0, 1e3))
def test_bowen_york_odd_parity(direction, r):
    if np.linalg.norm(direction) < 1e-3:
        return
    x = r * direction / np.linalg.norm(direction)
    P = np.array([0.01, 0.02, -0.005])
    _, ep = eval_bowen_york(1.0, P, x)
    _, em = eval_bowen_york(1.0, P, -x)
    assert np.abs(ep.K + em.K).max() <= 1e-15 * np.abs(ep.K).max()


@given(vec, st.floats(1.0, 1e3))
def test_bowen_york_flat_trace_free(direction, r):
    if np.linalg.norm(direction) < 1e-3:
        return
    x = r * direction / np.linalg.norm(direction)
    _, ej = eval_bowen_york(1.0, np.array([0.01, 0, 0]), x)
    assert abs(np.trace(ej.K)) <= 1e-15 * max(np.abs(ej.K).max(), 1e-300) + 1e-30


def test_bowen_york_closed_form():
    P = np.array([0.01, 0.0, 0.0])
    x = np.array([3.0, 4.0, 12.0])
    r = 13.0
    n = x / r
    want = 1.5 / r**2 * (np.outer(P, n) + np.outer(n, P) - (EYE - np.outer(n, n)) * P.dot(n))
    _, ej = eval_bowen_york(1.0, P, x)
    assert np.abs(ej.K - want).max() <= 1e-18


def test_perturbed_a0_is_schwarzschild():
    x = np.array([[7.0, 2, -1]])
    a, _ = eval_perturbed(1.0, 0.0, x)
    b, _ = eval_schwarzschild_isotropic(1.0, x)
    assert np.array_equal(a.g, b.g) and np.array_equal(a.dg, b.dg)


def test_perturbation_trace_free_and_even():
    S = np.asarray(PERTURBATION_PATTERN)
    assert abs(np.trace(S)) == 0.0
    x = np.array([[4.0, -2, 9], [-4.0, 2, -9]])
    mj, _ = eval_perturbed(1.0, 0.3, x)
    ms, _ = eval_schwarzschild_isotropic(1.0, x)
    h = mj.g - ms.g
    assert np.abs(np.einsum("qii->q", h)).max() <= 1e-16
    assert np.abs(h[0] - h[1]).max() == 0.0


# --- curvature ---------------------------------------------------------------


def test_flat_curvature_exactly_zero():
    mj, _ = eval_flat(np.array([[1.0, 2, 3]]))
    assert not christoffel(mj).any()
    c = ricci(mj)
    assert not c.Ric.any() and not c.R.any()


def test_christoffel_conformal_formula():
    m = 1.0
    x = np.array([10.0, 0, 0])
    mj, _ = eval_schwarzschild_isotropic(m, x)
    G = christoffel(mj)
    r = np.linalg.norm(x)
    phi = 1 + m / (2 * r)
    dlnphi = -m * x / (2 * r**3) / phi
    want = 2 * (
        np.einsum("ki,j->kij", EYE, dlnphi) + np.einsum("kj,i->kij", EYE, dlnphi) - np.einsum("ij,k->kij", EYE, dlnphi)
    )
    assert np.abs(G - want).max() <= 1e-12 * np.abs(want).max()
    assert np.array_equal(G, G.swapaxes(1, 2))


def test_christoffel_matches_fd_of_metric():
    p = SchwarzschildData(1.0)
    x = np.array([10.0, 0, 0])
    h = 1e-4
    dg = fd_derivative(lambda y: p.jets(y)[0].g, x, h)
    g = p.jets(x)[0].g
    low = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)  # Gamma_{l ij}
    want = np.einsum("kl,lij->kij", np.linalg.inv(g), low)
    got = christoffel(p.jets(x)[0])
    assert np.abs(got - want).max() / np.abs(want).max() <= 1e-9


def test_schwarzschild_scalar_curvature_zero():
    p = SchwarzschildData(1.0)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 3))
    x *= (5 + 200 * rng.random(50))[:, None] / np.linalg.norm(x, axis=1)[:, None]
    c = ricci(p.jets(x)[0])
    assert np.abs(c.R).max() <= 1e-8


def test_schwarzschild_ricci_radial_closed_form():
    m, r = 1.0, 10.0
    x = np.array([0.0, 6.0, 8.0])
    n = x / r
    c = ricci(SchwarzschildData(m).jets(x)[0])
    phi = 1 + m / (2 * r)
    want = -2 * m / (phi * r**3) + m**2 / (phi**2 * r**4)
    assert abs(n @ c.Ric @ n - want) <= 1e-8 * abs(want)


def test_ricci_trace_identity():
    mj, _ = PerturbedData(1.0, 0.5).jets(np.array([[6.0, 2, -3]]))
    c = ricci(mj)
    assert abs(np.einsum("qij,qij->q", np.linalg.inv(mj.g), c.Ric)[0] - c.R[0]) <= 1e-15


@pytest.mark.parametrize("r", [5.0, 20.0, 300.0, 1e4])
def test_schwarzschild_constraints_vanish(r):
    x = r * np.array([[0.6, 0.0, 0.8], [0.0, 1.0, 0.0]])
    rho, J = constraint_residual(SchwarzschildData(1.0), x)
    assert np.abs(rho).max() <= 1e-8 and np.abs(J).max() <= 1e-8


def test_bowen_york_flat_background_constraints():
    p = BowenYorkData(0.0, [0.01, 0.0, 0.0])
    x = np.array([[3.0, 1, 2], [-5, 4, 0.5], [0.2, -8, 3]])
    rho, J = constraint_residual(p, x)
    K = p.jets(x)[1].K
    assert np.abs(J).max() <= 1e-9
    assert np.abs(rho + 0.5 * np.einsum("qij,qij->q", K, K)).max() <= 1e-18
    assert np.all(rho < 0)


# --- audit -------------------------------------------------------------------


def test_decay_audit_flat_zero():
    rep = decay_audit(FlatData(), [10, 100, 1000])
    for name, col in rep.columns.items():
        assert not np.any(col), name
    assert all(rep.bounded.values())


def test_decay_audit_schwarzschild_bounded():
    rep = decay_audit(SchwarzschildData(1.0), [50, 100, 200, 400])
    assert rep.bounded["metric"] and np.all(np.isfinite(rep.columns["metric"]))
    # r * |g - delta| ~ 2m sqrt(3): bounded exactly at eps = 1/2
    assert rep.columns["metric"][-1] <= 2.0 * math.sqrt(3) * 1.01


def test_decay_audit_perturbed_bounded():
    rep = decay_audit(PerturbedData(1.0, 0.1), [50, 100, 200])
    assert rep.bounded["metric"] and rep.bounded["metric_d1"]


def test_decay_audit_bowen_york_antisymmetric():
    rep = decay_audit(BowenYorkData(1.0, [0.01, 0, 0]), [50, 100, 200])
    assert np.abs(rep.columns["antisym"]).max() <= 1e-12
    assert rep.bounded["curv"]


def test_metadata_validation():
    with pytest.raises(ValueError):
        ProviderMetadata(eps=0.0)
    with pytest.raises(ValueError):
        ProviderMetadata(eps=0.7)
    with pytest.raises(ValueError):
        ProviderMetadata(r_inner=0.0)


# --- grid files --------------------------------------------------------------


def _write(tmp_path, p, n=8, h=1.0, origin=(4.0, 4.0, 4.0), name="g.cegrid"):
    data = sample_provider(p, (n, n, n), origin, (h, h, h))
    path = tmp_path / name
    write_grid_data(path, data, origin, (h, h, h), p.metadata)
    return path


def test_grid_flat_exact(tmp_path):
    g = load_grid_data(_write(tmp_path, FlatData()))
    mj, ej = g.jets(np.array([[6.3, 7.1, 5.5], [8.0, 9.9, 10.2]]))
    assert np.abs(mj.g - EYE).max() <= 1e-12
    assert np.abs(mj.dg).max() <= 1e-12 and np.abs(mj.ddg).max() <= 1e-12
    assert np.abs(ej.K).max() <= 1e-12


def test_grid_metadata_roundtrip(tmp_path):
    p = BowenYorkData(1.0, [0.01, 0.0, -0.02])
    g = load_grid_data(_write(tmp_path, p))
    assert g.metadata == p.metadata


def test_grid_fourth_order_convergence(tmp_path):
    p = SchwarzschildData(1.0)
    x = np.array([[10.37, 10.61, 10.23]])
    exact = p.jets(x)[0].g
    errs = []
    for h in (0.4, 0.2):
        n = int(round(6.4 / h)) + 1
        g = load_grid_data(_write(tmp_path, p, n=n, h=h, origin=(8.0, 8.0, 8.0), name=f"h{h}.cegrid"))
        errs.append(np.abs(g.jets(x)[0].g - exact).max())
    order = math.log2(errs[0] / errs[1])
    assert order >= 3.5, (errs, order)


def test_grid_outside_box(tmp_path):
    g = load_grid_data(_write(tmp_path, FlatData()))
    with pytest.raises(DomainError):
        g.jets(np.array([0.0, 0.0, 100.0]))


def test_grid_lapse_channel(tmp_path):
    g = load_grid_data(_write(tmp_path, FlatData()))
    a, da, dda = g.lapse.jets(np.array([[6.0, 6.0, 6.0]]))
    assert abs(a[0] - 1.0) <= 1e-14 and np.abs(da).max() <= 1e-12


def _bytes(tmp_path):
    return _write(tmp_path, FlatData(), n=4).read_bytes()


@pytest.mark.parametrize(
    "mutate,offset",
    [
        (lambda b: b.replace(b"CEGRID1", b"CEGRIDX", 1), 0),
        (lambda b: b.replace(b"4 4 4", b"4 x 4", 1), 8),
        (lambda b: b[:-5], None),
        (lambda b: b + b"\x00", None),
    ],
    ids=["magic", "dims", "truncated", "trailing"],
)
def test_grid_parse_errors(tmp_path, mutate, offset):
    path = tmp_path / "bad.cegrid"
    raw = mutate(_bytes(tmp_path))
    path.write_bytes(raw)
    with pytest.raises(GridParseError) as err:
        load_grid_data(path)
    assert "byte offset" in str(err.value)
    if offset is not None:
        assert err.value.offset == offset


def test_grid_nonpositive_spacing(tmp_path):
    raw = _bytes(tmp_path)
    lines = raw.split(b"\n")
    lines[2] = b"4 4 4 1 0 1"
    path = tmp_path / "bad.cegrid"
    path.write_bytes(b"\n".join(lines))
    with pytest.raises(GridParseError) as err:
        load_grid_data(path)
    assert err.value.offset == raw.index(b"\n", 8) + 1


def test_grid_nan_payload(tmp_path):
    raw = bytearray(_bytes(tmp_path))
    start = raw.index(b"\n\n") + 2
    raw[start + 16 : start + 24] = struct.pack("<d", float("nan"))
    path = tmp_path / "nan.cegrid"
    path.write_bytes(bytes(raw))
    with pytest.raises(GridParseError) as err:
        load_grid_data(path)
    assert err.value.offset == start + 16


def test_grid_unknown_header_line(tmp_path):
    raw = _bytes(tmp_path)
    raw = raw.replace(b"\nmass_param", b"\ncolour 3\nmass_param", 1)
    path = tmp_path / "bad.cegrid"
    path.write_bytes(raw)
    with pytest.raises(GridParseError):
        load_grid_data(path)


def test_griddata_shape_validation():
    with pytest.raises(ValueError):
        GridData(np.zeros((3, 4, 4, 15)), (0, 0, 0), (1, 1, 1))
