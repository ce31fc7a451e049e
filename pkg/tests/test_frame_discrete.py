import numpy as np
import pytest

from stratbesov import coorbit as co
from stratbesov import frame_discrete as fd
from stratbesov.lattice import LatticeSpec, lp_norm, zeros
from stratbesov.littlewood_paley import build_window
from stratbesov.multipliers import Bump
from stratbesov.spectral import ConvergenceError, apply_multiplier, assemble, kernel_of


@pytest.fixture(scope="module")
def bed():
    L = assemble(LatticeSpec.abelian(256, 0.05, periodic=True), "fourier")
    w = build_window(j_range=(-1, 1))
    vec = co.AnalyzingVector(L, co.normalize_analyzing_vector(w.base))
    grid = co.ScaleGrid.for_band(L.spec, w.j_range)
    return L, vec, grid, co.ReproducingKernel(vec, grid)


@pytest.fixture(scope="module")
def systems(bed):
    L, vec, grid, Phi = bed
    out = {}
    for e in (0.8, 0.4, 0.2):
        ss = fd.build_separated_set(grid, e)
        fs = fd.FrameSystem(fd.build_bupu(ss), Phi, "T3")
        fd.estimate_defect(fs, trials=2, seed=0)
        out[e] = fs
    return out


def _single_row(M, h):
    spec = LatticeSpec.abelian(M, h, periodic=False)
    return co.ScaleGrid((0,), 2.0, spec)


def test_huge_epsilon_single_center():
    grid = _single_row(8, 0.5)
    ss = fd.build_separated_set(grid, 100.0)
    assert len(ss) == 1 and ss.N == 1
    b = fd.build_bupu(ss)
    assert np.all(b.psi(0).values == 1)
    assert b.partition_residual() == 0 and b.subordinate()


def test_one_cell_epsilon_selects_every_other_node():
    grid = _single_row(8, 1.0)
    ss = fd.build_separated_set(grid, 1.0)
    np.testing.assert_array_equal(ss.centers, np.arange(0, 17, 2))
    assert fd.is_covering(ss)
    assert ss.N == 3


def test_epsilon_below_resolution_raises(bed):
    grid = bed[2]
    with pytest.raises(fd.FrameError):
        fd.build_separated_set(grid, 0.5 * fd._Geometry(grid).min_resolvable())


def test_covering_and_bupu(systems):
    for fs in systems.values():
        ss = fs.bupu.set
        assert fd.is_covering(ss)
        assert fs.bupu.partition_residual() == 0
        assert fs.bupu.subordinate()
        mu = fs.grid.node_measure().sum() * fs.grid.spec.size
        assert fs.bupu.cell_measure().sum() == pytest.approx(mu, rel=1e-12)


def test_halving_epsilon_count_growth(systems):
    for e in (0.8, 0.4):
        g = len(systems[e / 2].bupu.set) / len(systems[e].bupu.set)
        assert 1.5 <= g <= 4.0


def test_sequence_norm(systems):
    ss = systems[0.8].bupu.set
    assert fd.sequence_norm(np.zeros(len(ss)), ss) == 0
    with pytest.raises(ValueError):
        fd.sequence_norm(np.zeros(len(ss) + 1), ss)
    lam = np.random.default_rng(0).standard_normal(len(ss))
    n = fd.sequence_norm(lam, ss)
    assert fd.sequence_norm(-3 * lam, ss) == pytest.approx(3 * n, rel=1e-12)
    # larger boxes at the same centers only add overlap
    big = fd.sequence_norm(lam, ss, fd.SequenceSpaceParams(epsilon=1.2))
    assert big >= n


def test_apply_T_linear_and_zero(systems, bed):
    fs = systems[0.4]
    z = co.scale_space_zeros(fs.grid)
    assert np.all(fd.apply_T(fs, z).values == 0)
    rng = np.random.default_rng(5)
    f = fd.random_reproducing(fs, rng)
    g = fd.random_reproducing(fs, rng)
    lhs = fd.apply_T(fs, f * 2.0 + g).values
    rhs = 2.0 * fd.apply_T(fs, f).values + fd.apply_T(fs, g).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(rhs).max())
    with pytest.raises(fd.FrameError):
        co_rand = np.random.default_rng(1).standard_normal((len(fs.grid),) + fs.grid.spec.shape)
        fd.apply_T(fs, co.ScaleSpaceFunction(fs.grid, co_rand), check=True)


def test_operator_kinds_agree_on_coefficients(systems):
    fs = systems[0.4]
    f = fd.random_reproducing(fs, np.random.default_rng(2))
    t1 = fd.coefficients(fs, f, "T1")
    t3 = fd.coefficients(fs, f, "T3")
    np.testing.assert_allclose(t3, t1 * fs.bupu.cell_measure(), rtol=1e-14)
    with pytest.raises(fd.FrameError):
        fd.FrameSystem(fs.bupu, fs.Phi, "T9")


def test_defect_trend(systems):
    d = [systems[e].defect for e in (0.8, 0.4, 0.2)]
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.5


def test_single_center_defect_near_one(bed):
    _, vec, grid, Phi = bed
    ss = fd.build_separated_set(grid, 100.0)
    assert len(ss) == 1
    fs = fd.FrameSystem(fd.build_bupu(ss), Phi, "T3")
    assert fd.estimate_defect(fs) >= 0.9
    g = fd.random_reproducing(fs, np.random.default_rng(0))
    with pytest.raises(fd.FrameError):
        fd.invert_neumann(fs, g)


def test_neumann_identity_one_iteration(systems):
    fs = systems[0.4].with_kind("I")
    fd.estimate_defect(fs)
    assert fs.defect == 0
    g = fd.random_reproducing(fs, np.random.default_rng(3))
    x = fd.invert_neumann(fs, g)
    assert x.meta["iterations"] == 1
    np.testing.assert_array_equal(x.values, g.values)


def test_neumann_converges_within_bound(systems):
    fs = systems[0.2]
    g = fd.random_reproducing(fs, np.random.default_rng(4))
    x = fd.invert_neumann(fs, g, tol=1e-6)
    assert x.meta["within_bound"]
    r = fd.apply_T(fs, x) - co.scale_space_convolve(g, fs.Phi)
    assert co.mixed_norm(r, fs.mp) < 1e-5 * co.mixed_norm(g, fs.mp)
    with pytest.raises(ConvergenceError):
        fd.invert_neumann(systems[0.8], g, tol=1e-12, max_iter=1)


def test_iteration_bound():
    assert fd.iteration_bound(0.0, 1e-6) == 2
    assert fd.iteration_bound(0.1, 1e-6) == 8
    assert fd.iteration_bound(0.5, 1e-6) == 21


def test_atomic_reconstruct(systems, bed):
    L, vec, grid, _ = bed
    fs = systems[0.2]
    rec, rep = fd.atomic_reconstruct(fs, zeros(L.spec), vec)
    assert lp_norm(rec) == 0 and rep["relative_error"] == 0
    lo, hi = co.reproducing_band(vec.u_hat, grid)
    phi = kernel_of(L, Bump(2 * lo, hi / 2))
    rec, rep = fd.atomic_reconstruct(fs, phi, vec)
    assert rep["relative_error"] < 1e-5
    assert rep["coefficients"].shape == (len(fs.bupu.set),)
    _, rep2 = fd.atomic_reconstruct(fs.with_kind("T2"), phi, vec)
    assert rep2["relative_error"] < 1e-4
    with pytest.raises(fd.FrameError):
        fd.atomic_reconstruct(fs.with_kind("T1"), phi, vec)


def test_verify_atomic_decomposition(systems, bed):
    L, vec, grid, Phi = bed
    lo, hi = co.reproducing_band(vec.u_hat, grid)
    phi = kernel_of(L, Bump(2 * lo, hi / 2))
    shifted = apply_multiplier(L, Bump(3 * lo, hi / 3), phi)
    ok = fd.verify_atomic_decomposition(systems[0.2], [zeros(L.spec), phi, shifted], vec)
    assert ok["finite"] and ok["equivalence"] and ok["reconstruction"]
    assert ok["ratio_spread"] < 10
    ss = fd.build_separated_set(grid, 100.0)
    broken = fd.FrameSystem(fd.build_bupu(ss), Phi, "T3")
    bad = fd.verify_atomic_decomposition(broken, [phi], vec)
    assert bad["refused"] and not bad["reconstruction"]
