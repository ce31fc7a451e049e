import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stratbesov import coorbit as co
from stratbesov.group_core import StratifiedGroup
from stratbesov.lattice import LatticeSpec, lp_norm, point_of, zeros
from stratbesov.littlewood_paley import build_window, psi_kernels
from stratbesov.multipliers import Bump, Constant
from stratbesov.spectral import assemble, kernel_of


@pytest.fixture(scope="module")
def setup():
    L = assemble(LatticeSpec.abelian(512, 0.1, periodic=True), "fourier")
    w = build_window(j_range=(-1, 1))
    uh = co.normalize_analyzing_vector(w.base)
    vec = co.AnalyzingVector(L, uh)
    grid = co.ScaleGrid.for_band(L.spec, w.j_range)
    lo, hi = co.reproducing_band(uh, grid)
    phi = kernel_of(L, Bump(2 * lo, hi / 2))
    return L, w, uh, vec, grid, phi


pt = arrays(float, 3, elements=st.floats(-5, 5))
scale = st.floats(0.1, 10)


@settings(max_examples=100, deadline=None)
@given(scale, pt, scale, pt, scale, pt)
def test_affine_group_laws(a, x, b, y, c, z):
    g = StratifiedGroup.heisenberg()
    l = co.affine_multiply(g, co.affine_multiply(g, (a, x), (b, y)), (c, z))
    r = co.affine_multiply(g, (a, x), co.affine_multiply(g, (b, y), (c, z)))
    assert l[0] == pytest.approx(r[0], rel=1e-14)
    np.testing.assert_allclose(l[1], r[1], rtol=1e-11, atol=1e-9)
    e = co.affine_multiply(g, (a, x), co.affine_inverse(g, (a, x)))
    assert e[0] == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(e[1], 0, atol=1e-10)


def test_represent_identity(setup):
    L, *_, phi = setup
    out = co.represent(1.0, [0.0], phi)
    np.testing.assert_array_equal(out.values, phi.values)
    with pytest.raises(ValueError):
        co.represent(0.0, [0.0], phi)


def test_normalize_analyzing_vector():
    b = Bump(0.5, 2.0)
    n = co.normalize_analyzing_vector(b)
    assert co.admissibility_integral(n) == pytest.approx(2.0, rel=1e-12)
    assert co.normalize_analyzing_vector(n) is n
    n3 = co.normalize_analyzing_vector(3 * b)
    lam = np.geomspace(0.5, 2, 17)
    np.testing.assert_allclose(n3(lam), n(lam), rtol=1e-12)
    with pytest.raises(ValueError):
        co.normalize_analyzing_vector(0 * b)
    with pytest.raises(ValueError):
        co.normalize_analyzing_vector(Constant(1.0))


def test_discrete_admissibility_exact_for_meyer(setup):
    _, _, uh, _, grid, _ = setup
    lo, hi = co.reproducing_band(uh, grid)
    lam = np.geomspace(lo, hi, 1001)
    np.testing.assert_allclose(co.discrete_admissibility(uh, grid, lam), 1.0, atol=1e-13)


def test_scale_grid():
    spec = LatticeSpec.abelian(8, 0.5)
    g = co.ScaleGrid.covering(spec, 0.5, 2.0, 2 ** 0.5)
    assert g.exponents == (-2, -1, 0, 1, 2)
    assert g.refined().exponents == tuple(range(-4, 5))
    assert g.position(0) == 2 and g.position(7) is None
    with pytest.raises(ValueError):
        co.ScaleGrid((0, 2), 2.0, spec)
    with pytest.raises(ValueError):
        co.ScaleGrid((0,), 1.0, spec)


def test_wavelet_transform_paths(setup):
    L, w, uh, vec, grid, phi = setup
    assert np.all(co.wavelet_transform(zeros(L.spec), vec, grid).values == 0)
    W = co.wavelet_transform(phi, vec, grid)
    S = co.wavelet_transform(phi, vec, grid, method="spectral")
    assert np.max(np.abs(W.values - S.values)) < 1e-10 * np.abs(S.values).max()
    x = point_of(L.spec, (7,))
    k = grid.position(1)
    c = co.wavelet_coefficient(phi, vec, grid.scales[k], x)
    idx = (k,) + tuple(np.round(L.spec.to_index(x)).astype(int))
    assert c == pytest.approx(W.values[idx], rel=1e-10, abs=1e-14)
    other = zeros(LatticeSpec.abelian(16, 0.1, periodic=True))
    with pytest.raises(ValueError):
        co.wavelet_transform(other, vec, grid)


def test_wavelet_transform_decays():
    L = assemble(LatticeSpec.abelian(16384, 0.1, periodic=True), "fourier")
    w = build_window(j_range=(-1, 1))
    vec = co.AnalyzingVector(L, co.normalize_analyzing_vector(w.base))
    grid = co.ScaleGrid.for_band(L.spec, w.j_range)
    phi = kernel_of(L, Bump(0.5, 2.0))
    W = np.abs(co.wavelet_transform(phi, vec, grid, method="spectral").values)
    x = np.abs(L.spec.points()[..., 0])
    assert W[:, x > 0.9 * x.max()].max() < 1e-6 * W.max()


def test_mixed_norm_oracles(setup):
    L, _, _, _, grid, phi = setup
    assert co.mixed_norm(co.scale_space_zeros(grid), co.MixedNormParams()) == 0
    v = np.zeros((len(grid),) + L.spec.shape, complex)
    k = 3
    v[k] = phi.values
    F = co.ScaleSpaceFunction(grid, v)
    for p, q, s in [(2, 2, 0), (1, 3, 0.5), (2, 1, -1)]:
        expect = lp_norm(phi, p) * grid.scales[k] ** (-s / 2) * grid.log_rho ** (1 / q)
        assert co.mixed_norm(F, co.MixedNormParams(p, q, s)) == pytest.approx(expect, rel=1e-13)
    assert co.mixed_norm(F, co.MixedNormParams(2, np.inf, 0)) == pytest.approx(lp_norm(phi))


def test_scale_space_delta_is_identity(setup):
    L, _, _, vec, _, phi = setup
    # interpolated spikes keep mass a^Q only for integer a >= 1
    grid = co.ScaleGrid((0, 1), 2.0, L.spec)
    W = co.wavelet_transform(phi, vec, grid)
    out = co.scale_space_convolve(W, co.scale_space_delta(grid))
    assert co.product_l2(out - W) < 1e-3 * co.product_l2(W)
    other = co.ScaleGrid(grid.exponents, grid.rho ** 2, grid.spec)
    with pytest.raises(ValueError):
        co.scale_space_convolve(W, co.scale_space_delta(other))


def test_convolution_fast_matches_direct():
    L = assemble(LatticeSpec.abelian(12, 0.5, periodic=False), "chebyshev")
    grid = co.ScaleGrid((-1, 0, 1), 2.0, L.spec)
    r = np.random.default_rng(3)
    shape = (3,) + L.spec.shape
    F = co.ScaleSpaceFunction(grid, r.standard_normal(shape))
    # H vanishes from the edge of the box shrunk by a_max = 2 outward, so the
    # interpolated dilates stay on the box
    h = r.standard_normal(shape)
    h[:, np.abs(L.spec.points()[..., 0]) >= 3.0] = 0
    H = co.ScaleSpaceFunction(grid, h)
    a = co.scale_space_convolve(F, H).values
    b = co.scale_space_convolve_direct(F, H).values
    assert np.max(np.abs(a - b)) < 1e-12 * np.abs(b).max()


def test_reproducing_formula(setup):
    L, w, uh, vec, grid, phi = setup
    assert co.reproducing_check(zeros(L.spec), vec, grid) == 0.0
    assert co.reproducing_check(phi, vec, grid) < 1e-12
    Phi = co.ReproducingKernel(vec, grid)
    assert co.reproducing_check(phi, vec, grid, Phi.materialize()) < 2e-2


def test_reproducing_kernel_at_identity(setup):
    L, _, uh, vec, grid, _ = setup
    Phi = co.ReproducingKernel(vec, grid)
    # Phi(1, e) = <u, u> = ||u||^2
    assert Phi.at_identity() == pytest.approx(lp_norm(vec.u) ** 2, rel=1e-12)


def test_besov_index_maps():
    mp = co.MixedNormParams(2, 2, 0)
    assert co.besov_index(4, mp) == 4
    assert co.besov_index(4, co.MixedNormParams(1, 4, 2)) == 3
    assert co.besov_index(1, mp, "scaling") == -0.5
    with pytest.raises(ValueError):
        co.besov_index(1, co.MixedNormParams(2, np.inf, 0))
    with pytest.raises(ValueError):
        co.besov_index(1, mp, "other")


def test_coorbit_ratio_degenerate_and_finite(setup):
    L, w, uh, vec, grid, phi = setup
    ks = psi_kernels(L, w)
    out = co.coorbit_vs_besov(zeros(L.spec), vec, grid, ks, co.MixedNormParams())
    assert out["degenerate"] and np.isnan(out["ratio"])
    out = co.coorbit_vs_besov(phi, vec, grid, ks, co.MixedNormParams(2, 2, 1), "stated")
    # s = Q gives sigma = Q - Q = 0 under both maps at (2, 2): an L2 isometry against the L2 norm
    assert out["sigma"] == 0
    assert out["ratio"] == pytest.approx(1.0, rel=1e-6)


def test_scale_young(setup):
    L, _, _, vec, grid, phi = setup
    Z = co.scale_space_zeros(grid)
    r = co.scale_young_check(Z, co.ReproducingKernel(vec, grid), co.MixedNormParams())
    assert r["lhs"] == 0 and r["holds"]
    W = co.wavelet_transform(phi, vec, grid)
    r = co.scale_young_check(W, co.ReproducingKernel(vec, grid), co.MixedNormParams(2, 2, 0.5))
    assert r["holds"]


def test_scale_space_function_checks(setup):
    *_, grid, _ = setup
    with pytest.raises(ValueError):
        co.ScaleSpaceFunction(grid, np.zeros((1, 3)))
    with pytest.raises(ValueError):
        co.MixedNormParams(0.5, 2, 0)
