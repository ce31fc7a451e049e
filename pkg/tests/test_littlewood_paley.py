import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratbesov.lattice import LatticeSpec, convolve, involution, lp_norm, zeros
from stratbesov.littlewood_paley import (BesovParams, TGrid, WindowError, band_norms, besov_norm_continuous,
                                         besov_norm_discrete, besov_norm_heat, build_window, calderon_reconstruct,
                                         cutoff_corollary_check, has_plateau, psi_kernels, ratio_interval)
from stratbesov.multipliers import Bump, Constant, Plateau
from stratbesov.spectral import assemble


@pytest.fixture(scope="module")
def bed():
    L = assemble(LatticeSpec.abelian(1024, 0.1, periodic=True), "fourier")
    w = build_window(j_range=(-3, 3))
    return L, w, psi_kernels(L, w)


def test_partition_of_unity():
    w = build_window(j_range=(-3, 3))
    assert w.normalization_residual < 1e-10
    assert abs(w.partition(np.array([1.0]))[0] - 1) < 1e-12
    lam = 4.0 ** np.arange(-2, 3)
    np.testing.assert_allclose(w.partition(lam), 1.0, atol=1e-12)
    assert w.covered_band() == (4.0 ** -3, 4.0 ** 3)


def test_custom_profile_is_normalized():
    w = build_window(Bump(0.25, 4.0, "cos2"), j_range=(-1, 1))
    assert w.normalization_residual < 1e-12


def test_window_errors():
    with pytest.raises(WindowError):
        build_window(Bump(0.1, 4.0))
    with pytest.raises(WindowError):
        build_window(Bump(0.9, 1.1))  # not positive on [1/2, 2]
    with pytest.raises(WindowError):
        build_window(j_range=(2, 1))


def test_psi_kernel_range_errors(bed):
    L, _, _ = bed
    with pytest.raises(WindowError):
        psi_kernels(L, build_window(j_range=(0, 5)))  # 4^5 far above lambda_max = 400
    with pytest.raises(WindowError):
        psi_kernels(L, build_window(j_range=(-6, 0)))  # below the spectral floor


def test_psi_norm_ratio(bed):
    L, _, ks = bed
    ratio = lp_norm(ks[1]) / lp_norm(ks[0])
    assert abs(ratio / np.sqrt(2) - 1) < 0.05  # 2^{Q/2}, Q = 1
    assert ks[0].meta["dilation_discrepancy"] == 0.0


def test_non_neighbor_bands_are_orthogonal(bed):
    _, _, ks = bed
    for j in (-2, -1, 0):
        c = convolve(ks[j], involution(ks[j + 2]))
        assert lp_norm(c) < 1e-8 * lp_norm(ks[j]) ** 2


def test_calderon(bed):
    L, _, ks = bed
    out = calderon_reconstruct(ks[0], ks)
    assert out.meta["relative_error"] < 1e-6
    assert lp_norm(calderon_reconstruct(zeros(L.spec), ks)) == 0


def test_discrete_norm_oracles(bed):
    L, _, ks = bed
    assert besov_norm_discrete(zeros(L.spec), ks, BesovParams()) == 0
    f = ks[0]
    expect = np.sqrt(sum(lp_norm(convolve(f, ks[j])) ** 2 for j in (-1, 0, 1)))
    assert besov_norm_discrete(f, ks, BesovParams(2, 2, 0)) == pytest.approx(expect, rel=1e-8)


def test_continuous_norm_zero_and_grid_errors(bed):
    L, w, _ = bed
    tg = TGrid.for_window(w)
    assert besov_norm_continuous(zeros(L.spec), L, Bump(1.0, 4.0), BesovParams(), tg) == 0
    assert besov_norm_heat(zeros(L.spec), L, 1, BesovParams(), tg) == 0
    with pytest.raises(ValueError):
        besov_norm_continuous(zeros(L.spec), L, Bump(1.0, 4.0), BesovParams(), TGrid.for_window(w, 3))
    with pytest.raises(ValueError):
        besov_norm_heat(zeros(L.spec), L, 1, BesovParams(2, 2, 2.0), tg)


def test_cutoff_with_unit_psi_is_continuous_norm(bed):
    L, w, ks = bed
    tg = TGrid.for_window(w)
    cut = Plateau(0.5, 1.0, 2.0, 4.0)
    assert has_plateau(cut) and not has_plateau(Bump(1.0, 4.0))
    out = cutoff_corollary_check(ks[0], L, cut, Constant(1.0), BesovParams(), tg, ks)
    assert out["norm"] == besov_norm_continuous(ks[0], L, cut, BesovParams(), tg)
    with pytest.raises(ValueError):
        cutoff_corollary_check(ks[0], L, Bump(1.0, 4.0), Constant(1.0), BesovParams(), tg)


def test_norm_oracles_for_psi0(bed):
    L, w, ks = bed
    f = ks[0]
    tg = TGrid.for_window(w)
    # sum_j ||psi_0 * psi_j||^2 = int |psi_0 hat|^2 sum_j |psi_j hat|^2 = ||psi_0||^2
    d = besov_norm_discrete(f, ks, BesovParams(2, 2, 0))
    assert d == pytest.approx(lp_norm(f), rel=1e-12)
    # heat: (int_0^inf x^2 e^{-2x} dx / x)^{1/2} = 1/2 per spectral point
    assert besov_norm_heat(f, L, 1, BesovParams(2, 2, 0), tg) / d == pytest.approx(0.5, abs=1e-4)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3), st.floats(1, 4), st.floats(-1, 1))
def test_norm_homogeneity(c, p, s):
    L = assemble(LatticeSpec.abelian(128, 0.25, periodic=True), "fourier")
    ks = psi_kernels(L, build_window(j_range=(-1, 2)), cross_check=False)
    bp = BesovParams(p, 2, s)
    f = ks[0] + 0.5 * ks[1]
    n = besov_norm_discrete(f, ks, bp)
    assert besov_norm_discrete(f * c, ks, bp) == pytest.approx(abs(c) * n, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=4, max_size=4), st.floats(1, 3), st.floats(0, 5))
def test_q_monotone(norms, q1, dq):
    # l^q norms decrease in q
    class K:
        js = [0, 1, 2, 3]
    a = besov_norm_discrete(None, K(), BesovParams(2, q1, 0.3), norms=np.array(norms))
    b = besov_norm_discrete(None, K(), BesovParams(2, q1 + dq, 0.3), norms=np.array(norms))
    assert b <= a * (1 + 1e-12) + 1e-300


def test_ratio_interval():
    assert ratio_interval([2.0, 1.0, 4.0]) == (1.0, 4.0, 4.0)
    assert np.isnan(ratio_interval([0.0, np.nan])[2])


def test_band_norms_shape(bed):
    _, _, ks = bed
    assert band_norms(ks[0], ks, 1).shape == (7,)
