import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tikcurve import (
    DiscreteVectorField,
    GridMismatchError,
    GridTooSmallError,
    circle,
    frame_at,
    h1_ambient_norm,
    h1_ambient_seminorm,
    h1_split_norm,
    h1_split_seminorm,
    l2_inner,
    l2_norm,
    load_field,
    norm_report,
    parameter_grid,
    save_field,
    semicircle_graph,
    sine_graph,
    surface_gradient_vector,
)
from tikcurve.fields import decompose, mass_matrix, stiffness_factor, stiffness_matrix
from tikcurve.geometry import curvature_bound

CIRCLE = circle()
T_CIRCLE = parameter_grid(CIRCLE, 512)


def random_smooth_field(curve, t, rng, modes=6):
    """Trigonometric polynomial in the parameter, random in each component."""
    s = (t - curve.a) / (curve.b - curve.a) * 2 * np.pi
    k = np.arange(modes)
    c = rng.standard_normal((2, 2, modes)) / (1 + k) ** 2
    vals = np.stack([
        c[i, 0] @ np.cos(np.outer(k, s)) + c[i, 1] @ np.sin(np.outer(k, s)) for i in range(2)
    ], axis=1)
    return DiscreteVectorField(curve, t, vals)


def test_l2_examples():
    ones = np.ones(T_CIRCLE.size)
    e1 = DiscreteVectorField(CIRCLE, T_CIRCLE, np.stack([ones, 0 * ones], axis=1))
    e2 = DiscreteVectorField(CIRCLE, T_CIRCLE, np.stack([0 * ones, ones], axis=1))
    assert l2_inner(e1, e1) == pytest.approx(2 * np.pi, abs=1e-8)
    assert l2_inner(e1, e2) == 0.0
    for curve in (CIRCLE, sine_graph(), semicircle_graph()):
        t = parameter_grid(curve, 200)
        fr = frame_at(curve, t)
        tau = DiscreteVectorField(curve, t, fr.tangent)
        n = DiscreteVectorField(curve, t, fr.normal)
        assert abs(l2_inner(tau, n)) < 1e-10


def test_grid_mismatch_and_validation():
    u = DiscreteVectorField(CIRCLE, T_CIRCLE, np.zeros((512, 2)))
    v = DiscreteVectorField(CIRCLE, parameter_grid(CIRCLE, 256), np.zeros((256, 2)))
    with pytest.raises(GridMismatchError):
        l2_inner(u, v)
    with pytest.raises(ValueError):
        DiscreteVectorField(CIRCLE, T_CIRCLE, np.full((512, 2), np.nan))
    with pytest.raises(ValueError):
        DiscreteVectorField(CIRCLE, np.array([0.0, 0.1, 0.3]), np.zeros((3, 2)))
    with pytest.raises(GridTooSmallError):
        h1_split_seminorm(DiscreteVectorField(sine_graph(), np.array([0.0, 1.0]), np.zeros((2, 2))))


def test_decompose_examples():
    t = T_CIRCLE
    fr = frame_at(CIRCLE, t)
    n = DiscreteVectorField(CIRCLE, t, fr.normal)
    tan, nor = decompose(n)
    np.testing.assert_allclose(tan.values, 0, atol=1e-15)
    np.testing.assert_allclose(nor.values, fr.normal, atol=1e-15)
    u = DiscreteVectorField.from_frame_components(CIRCLE, t, 10.0, 5.0)
    tan, nor = decompose(u)
    np.testing.assert_allclose(np.linalg.norm(tan.values, axis=1), 10, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(nor.values, axis=1), 5, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_decompose_recomposes_and_splits_l2(seed):
    rng = np.random.default_rng(seed)
    curve = sine_graph()
    t = parameter_grid(curve, 128)
    u = DiscreteVectorField(curve, t, rng.standard_normal((129, 2)))
    tan, nor = decompose(u)
    assert np.abs(tan.values + nor.values - u.values).max() < 1e-14
    # nodal projections are orthogonal only up to interpolation error
    smooth = random_smooth_field(curve, parameter_grid(curve, 512), rng)
    tan, nor = decompose(smooth)
    assert l2_norm(smooth) ** 2 == pytest.approx(l2_norm(tan) ** 2 + l2_norm(nor) ** 2, rel=1e-3)


def test_split_seminorm_examples():
    u = DiscreteVectorField.from_frame_components(CIRCLE, T_CIRCLE, 10.0, 5.0)
    assert h1_split_seminorm(u) < 1e-10
    assert h1_ambient_seminorm(u) > 1.0
    zero = DiscreteVectorField(CIRCLE, T_CIRCLE, np.zeros((512, 2)))
    assert h1_split_seminorm(zero) == 0.0


def test_split_seminorm_sine_graph_converges():
    curve = sine_graph()

    def value(n):
        t = parameter_grid(curve, n)
        fr = frame_at(curve, t)
        a = 8 * fr.point[:, 1]
        b = 4 * np.cos(fr.point[:, 0])
        return h1_split_seminorm(DiscreteVectorField.from_frame_components(curve, t, a, b))

    v = [value(n) for n in (200, 400, 800)]
    assert v[2] > 0
    assert abs(v[1] - v[2]) < abs(v[0] - v[1]) / 3


def test_ambient_seminorm_examples():
    n = DiscreteVectorField(CIRCLE, T_CIRCLE, frame_at(CIRCLE, T_CIRCLE).normal)
    assert h1_ambient_seminorm(n) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-4)
    const = DiscreteVectorField(CIRCLE, T_CIRCLE, np.tile([2.0, -1.0], (512, 1)))
    assert h1_ambient_seminorm(const) == pytest.approx(0.0, abs=1e-12)
    # 10 tau + 5 n on the unit circle: |grad u|_F = sqrt(125) pointwise
    u = DiscreteVectorField.from_frame_components(CIRCLE, T_CIRCLE, 10.0, 5.0)
    assert h1_ambient_seminorm(u) == pytest.approx(np.sqrt(125 * 2 * np.pi), rel=1e-4)


def test_norm_report():
    rng = np.random.default_rng(3)
    u = random_smooth_field(CIRCLE, T_CIRCLE, rng)
    r = norm_report(u)
    assert r.h1_split_full ** 2 == pytest.approx(r.l2**2 + r.h1_split_semi**2, rel=1e-12)
    assert r.l2 ** 2 == pytest.approx(r.tangential_l2**2 + r.normal_l2**2, rel=1e-3)
    assert min(r.l2, r.h1_ambient_semi, r.h1_split_semi, r.tangential_l2, r.normal_l2) >= 0


def test_norm_equivalence_and_projection_continuity():
    rng = np.random.default_rng(7)
    for curve in (CIRCLE, sine_graph()):
        t = parameter_grid(curve, 512)
        cc = curvature_bound(curve)
        c1 = np.sqrt(2 * (1 + (1 + cc) ** 2))
        c2 = np.sqrt(4 * cc**2 + 2)
        for _ in range(100):
            u = random_smooth_field(curve, t, rng)
            split, amb = h1_split_norm(u), h1_ambient_norm(u)
            assert split <= c1 * amb * 1.05
            assert amb <= c2 * split * 1.05
            for part in decompose(u):
                assert h1_split_norm(part) ** 2 <= (1 + (1 + cc) ** 2) * amb**2 * 1.05


def _pointwise_split_seminorm_sq(curve, t, u):
    """Quadrature of |grad u - (n.u) grad n + n u^T grad n|_F^2 at the nodes."""
    fr = frame_at(curve, t)
    n = fr.normal
    Gu = surface_gradient_vector(curve, t, u)
    Gn = surface_gradient_vector(curve, t, n)
    nu = np.einsum("ni,ni->n", n, u)
    U = Gu - nu[:, None, None] * Gn + np.einsum("ni,nk->nik", n, np.einsum("nj,njk->nk", u, Gn))
    dens = np.sum(U**2, axis=(1, 2)) * np.linalg.norm(fr.jacobian, axis=1)
    h = t[1] - t[0]
    if curve.closed:
        return h * dens.sum()
    return h * (dens.sum() - 0.5 * (dens[0] + dens[-1]))


@pytest.mark.parametrize("curve", [circle(), sine_graph()], ids=["circle", "sine"])
def test_seminorm_identity(curve):
    errs = []
    for n in (256, 512):
        t = parameter_grid(curve, n)
        s = (t - curve.a) / (curve.b - curve.a)
        w = 2 * np.pi * s
        u = np.stack([np.sin(w) + np.cos(w) ** 2, np.cos(2 * w) * np.sin(w)], axis=1)
        fem = h1_split_seminorm(DiscreteVectorField(curve, t, u)) ** 2
        errs.append(abs(fem - _pointwise_split_seminorm_sq(curve, t, u)) / fem)
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] > 3.0


def test_tangent_field_seminorm_matches_covariant_form():
    # for tangent fields only the tangential amplitude contributes
    curve = sine_graph()
    t = parameter_grid(curve, 400)
    a = np.cos(t)
    u = DiscreteVectorField.from_frame_components(curve, t, a, 0.0)
    K = stiffness_matrix(curve, t)
    assert h1_split_seminorm(u) == pytest.approx(np.sqrt(a @ K @ a), rel=1e-12)


def test_mass_matrix_integrates_length():
    curve = semicircle_graph()
    t = parameter_grid(curve, 64)
    M = mass_matrix(curve, t)
    assert M.sum() == pytest.approx(curve.length(), rel=1e-6)
    assert abs(M - M.T).max() == 0


def test_field_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    u = random_smooth_field(sine_graph(), parameter_grid(sine_graph(), 50), rng)
    path = tmp_path / "u.txt"
    save_field(u, path, carrier_id="sine graph")
    header = path.read_text().splitlines()[0].split()
    assert header == ["sine_graph", "51"]
    v = load_field(path, u.carrier)
    np.testing.assert_array_equal(v.values, u.values)
    np.testing.assert_array_equal(v.t, u.t)


def test_field_arithmetic():
    rng = np.random.default_rng(0)
    u = random_smooth_field(CIRCLE, T_CIRCLE, rng)
    v = random_smooth_field(CIRCLE, T_CIRCLE, rng)
    np.testing.assert_allclose((u + v - v).values, u.values, atol=1e-15)
    np.testing.assert_allclose((2 * u).values, (u + u).values)
    np.testing.assert_allclose((-u).values, -u.values)
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0


@pytest.mark.parametrize("curve", [circle(), sine_graph()], ids=["circle", "sine"])
def test_stiffness_factor(curve):
    t = parameter_grid(curve, 64)
    G, K = stiffness_factor(curve, t), stiffness_matrix(curve, t)
    assert abs(G.T @ G - K).max() <= 1e-12 * abs(K).max()


def test_seminorm_accurate_near_kernel():
    # a nearly constant field: the difference form keeps the tiny seminorm exact
    t = T_CIRCLE
    eps = 1e-7
    u = DiscreteVectorField.from_frame_components(CIRCLE, t, 10.0 + eps * np.cos(t), 5.0)
    assert h1_split_seminorm(u) == pytest.approx(eps * np.sqrt(np.pi), rel=1e-4)
