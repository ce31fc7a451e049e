"""Sub-Laplacian on a lattice and its Chebyshev functional calculus.

The operator is ``L = sum_i (2 f(x) - f(x exp(h X_i)) - f(x exp(-h X_i))) / h^2``
over the first-layer generators, built from exact right translates and zero
extension (or wrap-around on periodic abelian lattices).  ``m(L)`` is applied
through a Chebyshev expansion of ``m`` on ``[0, lambda_max]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.polynomial.chebyshev as npcheb
import scipy.fft as sfft
import scipy.sparse as sp

from .lattice import (GridFunction, LatticeSpec, _index_product, convolve, delta, dilate_function,
                      lp_norm)
from .multipliers import Auto, Constant, MultiplierSpec, PowerBump

DEGREE_CAP = 4096


class ConvergenceError(RuntimeError):
    """An iterative approximation did not reach its tolerance within its cap."""


class KernelVerificationError(RuntimeError):
    """``f * phi`` and ``m(L) f`` disagree beyond the verification tolerance."""


@dataclass(frozen=True, eq=False)
class SubLaplacian:
    spec: LatticeSpec
    matrix: sp.csr_matrix = field(repr=False)
    lambda_max: float
    method: str = "chebyshev"

    def __matmul__(self, f: GridFunction) -> GridFunction:
        return GridFunction(self.spec, (self.matrix @ f.values.reshape(-1)).reshape(self.spec.shape))

    def spectral_floor(self) -> float:
        """Smallest resolvable positive frequency scale of the box.

        Periodic: lowest nonzero eigenvalue.  Truncated: the discrete
        Dirichlet ground state of the first-layer box, a lower estimate.
        """
        s = self.spec
        vals = []
        for i in range(s.group.n1):
            n, h = s.shape[i], s.spacing[i]
            if s.periodic:
                vals.append((2 - 2 * np.cos(2 * np.pi / n)) / h ** 2)
            else:
                vals.append((2 - 2 * np.cos(np.pi / (n + 1))) / h ** 2)
        return float(min(vals) if s.periodic else sum(vals))


def assemble(spec: LatticeSpec, method: str = "chebyshev") -> SubLaplacian:
    """Sparse symmetric second-difference operator along right-translate directions.

    ``method`` selects how multipliers are applied: ``"chebyshev"`` (any
    lattice) or ``"fourier"`` (exact diagonalization, periodic abelian only).
    """
    if method not in ("chebyshev", "fourier"):
        raise ValueError(f"unknown multiplier method {method!r}")
    if method == "fourier" and not (spec.periodic and spec.group.kind == "abelian"):
        raise ValueError("the Fourier method needs a periodic abelian lattice")
    g = spec.group
    if g.kind == "heisenberg":
        h = spec.spacing
        if h[0] != h[1] or abs(h[2] - h[0] * h[1] / 2) > 1e-14 * h[2]:
            raise ValueError("spacing incompatible with closure rule")
    idx = spec.index_grid().reshape(-1, g.dim)
    M = np.asarray(spec.half_counts)
    n = np.asarray(spec.shape)
    N = spec.size
    rows, cols, vals = [np.arange(N)], [np.arange(N)], []
    diag = np.zeros(N)
    for i in range(g.n1):
        h2 = spec.spacing[i] ** 2
        diag += 2.0 / h2
        for sgn in (1, -1):
            e = np.zeros(g.dim, dtype=np.int64)
            e[i] = sgn
            z = _index_product(spec, idx, e)
            if spec.periodic:
                z = (z + M) % n - M
                ok = np.ones(N, bool)
            else:
                ok = np.all(np.abs(z) <= M, axis=1)
            rows.append(np.nonzero(ok)[0])
            cols.append(np.ravel_multi_index(tuple((z[ok] + M).T), spec.shape))
            vals.append(np.full(ok.sum(), -1.0 / h2))
    vals.insert(0, diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    A.sum_duplicates()
    lam_max = float(np.max(np.abs(A).sum(axis=1)))
    return SubLaplacian(spec, A, lam_max, method)


# Chebyshev expansion --------------------------------------------------------

def cheb_coefficients(m: MultiplierSpec, lam_max: float, degree: int) -> np.ndarray:
    """Chebyshev interpolation coefficients of ``m`` on ``[0, lam_max]``."""
    n = int(degree) + 1
    x = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    vals = np.asarray(m.evaluate((x + 1) * (lam_max / 2)))
    if not np.all(np.isfinite(vals)) or np.max(np.abs(vals), initial=0) > 1e12:
        raise ValueError(f"multiplier {m.label()} is unbounded on [0, {lam_max:g}]")

    def dct(v):
        c = sfft.dct(v, type=2) / n
        c[0] /= 2
        return c

    if np.iscomplexobj(vals) and np.any(vals.imag != 0):
        return dct(vals.real) + 1j * dct(vals.imag)
    return dct(np.real(vals))


def chebyshev_fit(m: MultiplierSpec, lam_max: float, budget=None):
    """Coefficients and tail estimate for ``m`` under its degree budget.

    Returns ``(coeffs, tail)``.  ``Auto(tol)`` doubles the degree from 32 until
    the last quarter of the coefficients has l1 mass below ``tol``; trailing
    coefficients that cannot matter at that tolerance are dropped.
    """
    budget = m.cheb_degree if budget is None else budget
    if isinstance(m, Constant):
        return np.array([m.value]), 0.0
    if not isinstance(budget, Auto):
        c = cheb_coefficients(m, lam_max, int(budget))
        return c, float(np.sum(np.abs(c[-max(1, len(c) // 4):])))
    tol = budget.tol
    deg = 32
    while True:
        c = cheb_coefficients(m, lam_max, deg)
        tail = float(np.sum(np.abs(c[-max(1, len(c) // 4):])))
        if tail < tol and _fit_error(m, c, lam_max) < tol:
            break
        if deg >= DEGREE_CAP:
            raise ConvergenceError(
                f"Chebyshev expansion of {m.label()} on [0, {lam_max:g}] not converged at "
                f"degree {DEGREE_CAP} (tail {tail:.2e} >= {tol:.1e})")
        deg = min(2 * deg, DEGREE_CAP)
    # drop coefficients whose cumulative tail is far below the tolerance
    back = np.cumsum(np.abs(c[::-1]))[::-1]
    keep = np.nonzero(back > 1e-3 * tol)[0]
    c = c[: (keep[-1] + 1 if len(keep) else 1)]
    return c, tail


def _fit_error(m: MultiplierSpec, c: np.ndarray, lam_max: float) -> float:
    """Max deviation on finer nodes and inside the support; catches features missed by the nodes."""
    n = 2 * len(c) + 1
    x = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    s = m.support
    if s is not None and s[0] < lam_max:
        lam = np.geomspace(s[0], min(s[1], lam_max), 257)
        x = np.concatenate([x, 2 * lam / lam_max - 1])
    ref = np.asarray(m.evaluate((x + 1) * (lam_max / 2)))
    return float(np.max(np.abs(npcheb.chebval(x, c) - ref)))


def _recurrence(L: SubLaplacian, coeff_sets: Sequence[np.ndarray], v: np.ndarray):
    A = L.matrix
    s = 2.0 / L.lambda_max
    deg = max(len(c) for c in coeff_sets) - 1
    outs = [c[0] * v for c in coeff_sets]
    if deg == 0:
        return outs
    t0 = v
    t1 = s * (A @ v) - v
    for o, c in zip(outs, coeff_sets):
        if len(c) > 1:
            o += c[1] * t1
    for k in range(2, deg + 1):
        t2 = 2 * s * (A @ t1) - 2 * t1 - t0
        for o, c in zip(outs, coeff_sets):
            if k < len(c):
                o += c[k] * t2
        t0, t1 = t1, t2
    return outs


def apply_multiplier(L: SubLaplacian, m, f: GridFunction):
    """``m(L) f``; ``m`` may be a single multiplier or a sequence sharing one recurrence."""
    if f.spec != L.spec:
        raise ValueError("lattice mismatch")
    single = isinstance(m, MultiplierSpec)
    ms = [m] if single else list(m)
    if L.method == "fourier":
        lam = fourier_symbol(L.spec)
        F = sfft.fftn(sfft.ifftshift(f.values))
        res = [GridFunction(L.spec, sfft.fftshift(sfft.ifftn(mi.evaluate(lam) * F)),
                            {"method": "fourier"}) for mi in ms]
        return res[0] if single else res
    fits = [chebyshev_fit(mi, L.lambda_max) for mi in ms]
    coeffs = [c for c, _ in fits]
    v = f.values.reshape(-1)
    real = np.all(v.imag == 0) and all(np.isrealobj(c) for c in coeffs)
    v = v.real.copy() if real else v.astype(complex)
    outs = _recurrence(L, coeffs, v)
    res = [GridFunction(L.spec, o.reshape(L.spec.shape),
                        {"cheb_degree": len(c) - 1, "cheb_tail": t})
           for o, (c, t) in zip(outs, fits)]
    return res[0] if single else res


def kernel_of(L: SubLaplacian, m, verify: bool = False, trials: int = 20,
              tol: float = 1e-6, seed: int = 0):
    """Convolution kernel ``phi`` with ``f * phi = m(L) f``.

    Computed as ``m(L) delta / weight``.  With ``verify=True`` the identity is
    checked on ``trials`` random functions supported in the central half of
    the box; the largest relative L2 residual is stored in ``meta`` and a
    :class:`KernelVerificationError` is raised if it exceeds ``tol``.
    """
    single = isinstance(m, MultiplierSpec)
    ms = [m] if single else list(m)
    ks = apply_multiplier(L, ms, delta(L.spec, normalized=True))
    if verify:
        rng = np.random.default_rng(seed)
        for mi, k in zip(ms, ks):
            err = 0.0
            for _ in range(trials):
                f = random_interior_function(L.spec, rng)
                lhs = convolve(f, k)
                rhs = apply_multiplier(L, mi, f)
                err = max(err, lp_norm(lhs - rhs) / lp_norm(f))
            k.meta["verification_error"] = err
            if err > tol:
                raise KernelVerificationError(
                    f"kernel of {mi.label()} fails f*phi = m(L)f: residual {err:.2e} > {tol:.1e}; "
                    "discretization too coarse for this multiplier")
    return ks[0] if single else ks


def random_interior_function(spec: LatticeSpec, rng, fraction: float = 0.5) -> GridFunction:
    """Gaussian noise on the central ``fraction`` of each axis, zero elsewhere."""
    v = np.zeros(spec.shape, complex)
    sl = tuple(slice(m - int(fraction * m), m + int(fraction * m) + 1) for m in spec.half_counts)
    shape = v[sl].shape
    v[sl] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return GridFunction(spec, v)


# periodic abelian oracle ----------------------------------------------------

def fourier_symbol(spec: LatticeSpec) -> np.ndarray:
    """Eigenvalues of the periodic discrete Laplacian on the FFT grid."""
    if not (spec.periodic and spec.group.kind == "abelian"):
        raise ValueError("Fourier oracle requires a periodic abelian lattice")
    lam = 0.0
    for ax, (n, h) in enumerate(zip(spec.shape, spec.spacing)):
        k = 2 * np.pi * sfft.fftfreq(n)
        shape = [1] * len(spec.shape)
        shape[ax] = n
        lam = lam + ((2 - 2 * np.cos(k)) / h ** 2).reshape(shape)
    return np.broadcast_to(lam, spec.shape)


def fourier_apply(spec: LatticeSpec, m: MultiplierSpec, f: GridFunction) -> GridFunction:
    """Exact ``m(L) f`` by diagonalization on a periodic abelian lattice."""
    lam = fourier_symbol(spec)
    F = sfft.fftn(sfft.ifftshift(f.values))
    return GridFunction(spec, sfft.fftshift(sfft.ifftn(m.evaluate(lam) * F)))


def fourier_kernel(spec: LatticeSpec, m: MultiplierSpec) -> GridFunction:
    return fourier_apply(spec, m, delta(spec, normalized=True))


# checks ---------------------------------------------------------------------

def dilation_covariance_check(L: SubLaplacian, m: MultiplierSpec, r: float,
                              phi: MultiplierSpec | None = None, t: float = 1.0) -> dict:
    """Kernel of ``m(r lambda)`` against ``r^{-Q/2} psi(r^{-1/2} x)``.

    ``psi`` is the kernel of ``m``; the dilated copy is built with
    ``dilate_function`` at ``a = sqrt(r)`` on the same lattice.  When ``r`` is
    a power of 4, the same comparison is also made exactly by rescaling the
    lattice (``L`` on the lattice dilated by ``sqrt(r)`` equals ``L / r``).

    With ``phi`` given, also compares the L1 norms
    ``||phi(t L) psi_j||_1`` and ``||phi(4^j t L) psi||_1`` where
    ``psi_j`` is the kernel of ``m(4^{-j} lambda)`` and ``4^j = r``.
    """
    Q = L.spec.group.Q
    out = {"r": r}
    k_r = kernel_of(L, m.scaled(r))
    psi = kernel_of(L, m)
    a = np.sqrt(r)
    dil = dilate_function(psi, a) * r ** (-Q / 4)
    out["discrepancy_interp"] = _rel(k_r, dil)
    j = np.log(r) / np.log(4.0)
    dyadic = abs(j - round(j)) < 1e-12
    if dyadic:
        # m(r L) on Lambda is m(L') on delta_{1/a} Lambda: same matrix, same index array
        Ls = assemble(L.spec.scaled(1.0 / a), L.method)
        psi_s = kernel_of(Ls, m)
        k_r_s = GridFunction(L.spec, psi_s.values * r ** (-Q / 2))
        out["discrepancy_lattice"] = _rel(k_r, k_r_s)
    if phi is not None:
        d = l1_dilation_identity(L, m, r, [phi], t)
        for key, v in d.items():
            out[key] = v[0] if isinstance(v, np.ndarray) else v
    return out


def l1_dilation_identity(L: SubLaplacian, m: MultiplierSpec, r: float, phis, t: float = 1.0) -> dict:
    """``||phi(t L) psi_j||_1`` against ``||phi(4^j t L) psi||_1`` for each ``phi``.

    ``psi_j`` is the kernel of ``m(lambda / r)``.  Each side is one shared
    Chebyshev recurrence over all ``phis``.  The right side is computed on
    the same lattice and, for dyadic ``r``, on the dilated lattice where the
    identity is exact.
    """
    phis = list(phis)
    lhs = np.array([lp_norm(k, 1) for k in kernel_of(L, [p.scaled(t) * m.scaled(1.0 / r) for p in phis])])
    rhs_same = np.array([lp_norm(k, 1) for k in kernel_of(L, [p.scaled(r * t) * m for p in phis])])
    den = np.maximum(lhs, 1e-300)
    out = {"l1_lhs": lhs, "l1_rhs_same_lattice": rhs_same,
           "l1_discrepancy_same_lattice": np.abs(lhs - rhs_same) / den}
    j = np.log(r) / np.log(4.0)
    if abs(j - round(j)) < 1e-12:
        # L / r on Lambda is the operator of delta_a Lambda
        Ls = assemble(L.spec.scaled(np.sqrt(r)), L.method)
        rhs = np.array([lp_norm(k, 1) for k in kernel_of(Ls, [p.scaled(r * t) * m for p in phis])])
        out["l1_rhs_lattice"] = rhs
        out["l1_discrepancy_lattice"] = np.abs(lhs - rhs) / den
    return out


def _rel(a: GridFunction, b: GridFunction) -> float:
    n = lp_norm(a)
    return lp_norm(a - b) / n if n > 0 else lp_norm(b)


def l1_decay_check(L: SubLaplacian, phi: MultiplierSpec, psi: MultiplierSpec, m: int,
                   r_list, floor: float = 1e-11, fit_gap: float = 10.0) -> dict:
    """L1 norms of the kernel of ``phi(r lambda) psi(lambda)`` over ``r_list``.

    Log-log slopes are fitted on the two asymptotic branches: ``r`` at most
    ``peak / fit_gap`` and at least ``peak * fit_gap``, keeping values above
    ``floor`` times the peak (smaller ones are at rounding level).  Also
    evaluates, for ``e = +-m``, the explicit bound
    ``||k(lambda^{-e} phi)||_1 ||k(lambda^{e} psi)||_1 r^e`` (``k`` = kernel),
    which follows from ``psi = L^{-e} k(lambda^e psi)``, homogeneity and
    Young's inequality; ``bound_ratio`` holds the largest value/bound ratio
    over ``r_list`` and should not exceed 1.
    """
    r = np.asarray(sorted(r_list), float)
    ks = kernel_of(L, [phi.scaled(ri) * psi for ri in r])
    v = np.array([lp_norm(k, 1) for k in ks])
    peak = int(np.argmax(v))
    rp = r[peak]
    out = {"r": r, "l1": v, "peak_r": float(rp)}
    for name, sel in (("small", r <= rp / fit_gap), ("large", r >= rp * fit_gap)):
        keep = sel & (v > floor * v[peak])
        slope, r2, n = np.nan, np.nan, int(keep.sum())
        if n >= 3:
            slope, r2 = fit_slope(r[keep], v[keep])
        out[f"{name}_slope"], out[f"{name}_r2"], out[f"{name}_points"] = slope, r2, n
    bounds = {}
    for e in (m, -m):
        try:
            PowerBump(-e, phi), PowerBump(e, psi)
        except ValueError:
            continue
        c_phi = lp_norm(kernel_of(L, PowerBump(-e, phi)), 1)
        c_psi = lp_norm(kernel_of(L, PowerBump(e, psi)), 1)
        bounds[e] = float(np.max(v / (c_phi * c_psi * r ** e)))
    out["bound_ratio"] = bounds
    return out


def fit_slope(x, y):
    """Least-squares slope and R^2 of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    r2 = 1 - resid @ resid / max(((ly - ly.mean()) ** 2).sum(), 1e-300)
    return float(coef[0]), float(r2)


def interior_mask(L: SubLaplacian, k: int) -> np.ndarray:
    """Nodes whose ``k``-fold stencil reaches only nodes with a full stencil."""
    A = L.matrix
    full_row = np.diff(A.indptr) == 1 + 2 * L.spec.group.n1
    if L.spec.periodic:
        return np.ones(L.spec.shape, bool)
    mask = full_row.copy()
    pattern = (abs(A) > 0).astype(np.int64)
    for _ in range(k - 1):
        bad = pattern @ (~mask).astype(np.int64)
        mask = mask & (bad == 0)
    return mask.reshape(L.spec.shape)


def polynomial_annihilation_check(L: SubLaplacian, d: int, k: int, seed: int = 0) -> float:
    """``max |L^k p|`` over interior nodes, relative to ``max |p|``.

    ``p`` is a seeded random polynomial of homogeneous degree ``d`` in the
    lattice coordinates, scaled to unit size on the box.
    """
    s = L.spec
    rng = np.random.default_rng(seed)
    x = s.points() / np.asarray(s.half_extent)
    deg = s.group.degrees
    p = np.zeros(s.shape)
    for alpha in _multi_indices(s.group.dim, d):
        if int(np.dot(alpha, deg)) <= d:
            p = p + rng.standard_normal() * np.prod(x ** np.asarray(alpha), axis=-1)
    v = p.reshape(-1)
    for _ in range(k):
        v = L.matrix @ v
    mask = interior_mask(L, k).reshape(-1)
    scale = np.max(np.abs(p))
    return float(np.max(np.abs(v[mask])) / scale) if mask.any() else np.nan


def _multi_indices(n, d):
    if n == 0:
        yield ()
        return
    for a in range(d + 1):
        for rest in _multi_indices(n - 1, d - a):
            yield (a,) + rest


def moments(phi: GridFunction, order: int = 4) -> list:
    """Discrete moments ``int x^alpha phi`` for ``|alpha| <= order`` (plain degree).

    Each entry is ``(alpha, moment, bound_scale)`` where ``bound_scale`` is
    ``||phi||_1 * extent^{|alpha|}``.
    """
    s = phi.spec
    x = s.points()
    l1 = lp_norm(phi, 1)
    ext = max(s.half_extent)
    rows = []
    for n in range(order + 1):
        for alpha in _multi_indices(s.group.dim, n):
            if sum(alpha) != n:
                continue
            mono = np.prod(x ** np.asarray(alpha), axis=-1)
            mom = s.weight * np.sum(mono * phi.values)
            rows.append((alpha, complex(mom), l1 * ext ** n))
    return rows
