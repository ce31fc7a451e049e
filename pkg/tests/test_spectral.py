import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratbesov.lattice import GridFunction, LatticeSpec, convolve, delta, lp_norm, sample
from stratbesov.multipliers import Auto, Bump, Constant, Function, Heat, HeatPower
from stratbesov.spectral import (ConvergenceError, KernelVerificationError, apply_multiplier, assemble,
                                 chebyshev_fit, dilation_covariance_check, fit_slope, fourier_apply,
                                 kernel_of, l1_decay_check, moments, polynomial_annihilation_check,
                                 random_interior_function)


def rel(a, b):
    return lp_norm(a - b) / lp_norm(b)


def test_operator_is_symmetric_psd(heis_small):
    A = heis_small.matrix
    assert abs(A - A.T).max() == 0
    x = np.random.default_rng(0).standard_normal(A.shape[0])
    assert x @ (A @ x) >= 0
    # Gershgorin bound covers the top of the spectrum
    from scipy.sparse.linalg import eigsh
    top = eigsh(A.astype(float), k=1, which="LA", return_eigenvectors=False)[0]
    assert top <= heis_small.lambda_max + 1e-9
    assert heis_small.lambda_max == 8.0  # two generators, 4 / h^2 each


def test_assemble_rejects_bad_inputs():
    with pytest.raises(ValueError):
        assemble(LatticeSpec.heisenberg(3, 5), "fourier")
    with pytest.raises(ValueError):
        assemble(LatticeSpec.abelian(8, 0.1), "svd")


def test_constant_multiplier_is_exact(line_cheb, rng):
    f = random_interior_function(line_cheb.spec, rng)
    np.testing.assert_array_equal(apply_multiplier(line_cheb, Constant(1.0), f).values, f.values)
    k = kernel_of(line_cheb, Constant(1.0))
    np.testing.assert_array_equal(k.values, delta(line_cheb.spec, normalized=True).values)


def test_heat_on_plane_wave(line_cheb):
    spec = line_cheb.spec
    h, n = spec.spacing[0], spec.shape[0]
    k = 2 * np.pi * 9 / (n * h)
    f = sample(spec, lambda x: np.exp(1j * k * x[..., 0]))
    t = 0.3
    expect = np.exp(-t * (2 - 2 * np.cos(k * h)) / h ** 2) * f.values
    out = apply_multiplier(line_cheb, Heat(t), f)
    assert np.max(np.abs(out.values - expect)) < 1e-8


@pytest.mark.parametrize("m", [Heat(0.1), Heat(1.0), Bump(2.0, 8.0), Bump(4.0, 32.0)])
def test_chebyshev_matches_fourier(line_cheb, m, rng):
    f = random_interior_function(line_cheb.spec, rng)
    cheb = apply_multiplier(line_cheb, m, f)
    exact = fourier_apply(line_cheb.spec, m, f)
    assert rel(cheb, exact) <= 1e-8


def test_multiplicativity(line_cheb, rng):
    f = random_interior_function(line_cheb.spec, rng)
    a, b = Heat(0.1), Bump(2.0, 8.0)
    two = apply_multiplier(line_cheb, a, apply_multiplier(line_cheb, b, f))
    one = apply_multiplier(line_cheb, a * b, f)
    assert rel(two, one) <= 2e-8


def test_shared_recurrence_matches_single(line_cheb, rng):
    f = random_interior_function(line_cheb.spec, rng)
    ms = [Heat(0.2), Bump(2.0, 8.0)]
    many = apply_multiplier(line_cheb, ms, f)
    for m, g in zip(ms, many):
        assert rel(g, apply_multiplier(line_cheb, m, f)) < 1e-12


def test_chebyshev_errors():
    with pytest.raises(ConvergenceError):
        chebyshev_fit(Bump(1e-3, 2e-3), 64.0)
    with pytest.raises(ValueError):
        with np.errstate(all="ignore"):
            chebyshev_fit(Function(lambda x: np.log(x - 5), "log(x-5)"), 10.0, budget=64)
    c, tail = chebyshev_fit(Heat(1.0), 8.0, Auto(1e-12))
    assert tail < 1e-12 and len(c) < 64


def test_kernel_adjoint_identity(line, rng):
    # kernel of conj(m) is the involution of the kernel of m
    from stratbesov.lattice import involution
    m = Function(lambda x: np.exp(-0.3 * x) * (1 + 1j * np.sin(x / 3)), "osc", real=False)
    k = kernel_of(line, m)
    ks = kernel_of(line, m.conj())
    assert lp_norm(ks - involution(k)) <= 1e-10 * lp_norm(k)


def test_kernel_verification(line):
    k = kernel_of(line, Bump(1.0, 16.0), verify=True, trials=5)
    assert k.meta["verification_error"] < 1e-12
    L = assemble(LatticeSpec.heisenberg(3, 6), "chebyshev")
    with pytest.raises(KernelVerificationError):
        kernel_of(L, Heat(3.0), verify=True, trials=3)


def test_dilation_covariance_abelian():
    L = assemble(LatticeSpec.abelian(16384, 0.025, periodic=True), "fourier")
    assert dilation_covariance_check(L, Bump(1.0, 4.0), 1.0)["discrepancy_interp"] == 0.0
    out = dilation_covariance_check(L, Bump(1.0, 4.0), 4.0)
    assert out["discrepancy_interp"] < 1e-3
    assert out["discrepancy_lattice"] == 0.0


@pytest.mark.parametrize("d,k,bound", [(0, 1, 0.0), (3, 2, 1e-9)])
def test_polynomial_annihilation(heis_small, d, k, bound):
    assert polynomial_annihilation_check(heis_small, d, k) <= bound


def test_polynomial_annihilation_negative_control(heis_small):
    assert polynomial_annihilation_check(heis_small, 4, 2) > 1e-3


def test_band_limited_kernel_moments():
    L = assemble(LatticeSpec.abelian(16384, 0.025, periodic=True), "fourier")
    k = kernel_of(L, Bump(0.5, 2.0))
    for alpha, mom, scale in moments(k, 4):
        assert abs(mom) <= 1e-6 * scale, alpha
    # negative control: the heat kernel has mass 1
    h = kernel_of(L, Heat(1.0))
    assert abs(moments(h, 0)[0][1] - 1) < 1e-12


def test_l1_decay_slopes():
    L = assemble(LatticeSpec.abelian(4096, 0.05, periodic=True), "fourier")
    m = HeatPower(1.0, 3)
    out = l1_decay_check(L, m, m, 2, np.geomspace(1e-3, 1e3, 25))
    assert out["small_slope"] >= 2 and out["large_slope"] <= -2
    assert min(out["small_r2"], out["large_r2"]) >= 0.98
    assert all(v <= 1 for v in out["bound_ratio"].values())


def test_fit_slope_exact_power():
    x = np.geomspace(1, 100, 9)
    s, r2 = fit_slope(x, 3 * x ** -2.5)
    assert s == pytest.approx(-2.5, abs=1e-12) and r2 == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.complex_numbers(max_magnitude=10), st.floats(0.01, 2.0))
def test_linearity(seed, c, t):
    L = assemble(LatticeSpec.abelian(32, 0.25, periodic=True), "chebyshev")
    r = np.random.default_rng(seed)
    f = GridFunction(L.spec, r.standard_normal(L.spec.shape))
    g = GridFunction(L.spec, r.standard_normal(L.spec.shape))
    lhs = apply_multiplier(L, Heat(t), f * c + g)
    rhs = apply_multiplier(L, Heat(t), f) * c + apply_multiplier(L, Heat(t), g)
    assert lp_norm(lhs - rhs) <= 1e-12 * (1 + lp_norm(rhs))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_kernel_convolution_identity_heisenberg(seed):
    L = assemble(LatticeSpec.heisenberg(4, 16, 1.0), "chebyshev")
    r = np.random.default_rng(seed)
    f = random_interior_function(L.spec, r, 0.25)
    k = kernel_of(L, Heat(0.05))
    assert lp_norm(convolve(f, k) - apply_multiplier(L, Heat(0.05), f)) <= 1e-8 * lp_norm(f)
