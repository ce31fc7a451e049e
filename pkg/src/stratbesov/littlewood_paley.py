"""Dyadic windows, the kernel family psi_j, Calderon sums and Besov norms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lattice import GridFunction, convolve, dilate_function, involution, lp_norm
from .multipliers import (Constant, DyadicSum, HeatPower, MeyerProfile, MultiplierSpec, Plateau,
                          SquareRootQuotient)
from .spectral import SubLaplacian, apply_multiplier, kernel_of


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class BesovParams:
    p: float = 2.0
    q: float = 2.0
    s: float = 0.0

    def __post_init__(self):
        if not (float(self.p) >= 1 and float(self.q) >= 1):
            raise ValueError(f"Besov exponents must be >= 1, got p={self.p}, q={self.q}")


@dataclass(frozen=True)
class AdmissibleWindow:
    """``psi_hat`` with ``sum_j |psi_hat(4^{-j} lambda)|^2 = 1``, used for ``j`` in ``j_range``."""

    base: MultiplierSpec
    profile: MultiplierSpec
    j_range: tuple
    normalization_residual: float

    @property
    def js(self) -> list:
        return list(range(self.j_range[0], self.j_range[1] + 1))

    def psi_hat(self, j: int) -> MultiplierSpec:
        return self.base.scaled(4.0 ** (-j))

    def covered_band(self) -> tuple:
        """Interval where the finite sum over ``j_range`` equals one.

        For profile support ``[l, r]`` this is ``[4^{J_min-1} r, 4^{J_max+1} l]``,
        i.e. ``[4^{J_min}, 4^{J_max}]`` for ``[1/4, 4]``.
        """
        lo, hi = self.profile.support
        return (4.0 ** (self.j_range[0] - 1) * hi, 4.0 ** (self.j_range[1] + 1) * lo)

    def partition(self, lam) -> np.ndarray:
        lam = np.asarray(lam, float)
        return sum(np.abs(self.psi_hat(j).evaluate(lam)) ** 2 for j in self.js)


def build_window(profile: MultiplierSpec | None = None, j_range=(-3, 3),
                 scan_points: int = 10_000) -> AdmissibleWindow:
    """``psi_hat = sqrt(g / sum_j g(4^{-j} .))`` for a profile ``g`` on ``[1/4, 4]``.

    The default profile is :class:`MeyerProfile`, whose dyadic sum is already
    one.  Raises :class:`WindowError` if ``g`` leaves ``[1/4, 4]``, is not
    positive on ``[1/2, 2]``, or its dyadic sum vanishes somewhere.
    """
    g = MeyerProfile() if profile is None else profile
    sup = g.support
    if sup is None or sup[0] < 0.25 * (1 - 1e-12) or sup[1] > 4 * (1 + 1e-12):
        raise WindowError("window profile must be supported in [1/4, 4]")
    mid = np.geomspace(0.5, 2.0, 257)
    if np.min(np.real(g.evaluate(mid))) <= 0:
        raise WindowError("window profile must be strictly positive on [1/2, 2]")
    lam = np.geomspace(1.0, 4.0, 4097)
    den = DyadicSum(g)
    if np.min(den.evaluate(lam)) <= 1e-300:
        raise WindowError("window profile has a gap: dyadic sum vanishes")
    jr = (int(j_range[0]), int(j_range[1]))
    if jr[0] > jr[1]:
        raise WindowError("empty j_range")
    base = SquareRootQuotient(g, den)
    w = AdmissibleWindow(base, g, jr, 0.0)
    lo, hi = w.covered_band()
    scan = np.geomspace(lo, hi, scan_points)
    res = float(np.max(np.abs(w.partition(scan) - 1.0)))
    return AdmissibleWindow(base, g, jr, res)


@dataclass(frozen=True, eq=False)
class LPKernels:
    """Kernels ``psi_j`` for ``j`` in ``js`` on one lattice."""

    L: SubLaplacian
    window: AdmissibleWindow
    js: list
    kernels: list = field(repr=False)

    def __iter__(self):
        return iter(zip(self.js, self.kernels))

    def __len__(self):
        return len(self.js)

    def __getitem__(self, j) -> GridFunction:
        return self.kernels[self.js.index(j)]

    def squared(self) -> list:
        """Cached ``psi_j * psi_j^*``, one per band."""
        if not hasattr(self, "_sq"):
            object.__setattr__(self, "_sq", [convolve(k, involution(k)) for k in self.kernels])
        return self._sq


def psi_kernels(L: SubLaplacian, w: AdmissibleWindow, margin: float = 2.0,
                cross_check: bool = True) -> LPKernels:
    """``psi_j = kernel(psi_hat(4^{-j} .))`` for ``j`` in the window's range.

    Raises :class:`WindowError` when the band leaves what the lattice
    resolves: ``4^{J_max} > margin * lambda_max`` or ``4^{J_min}`` below the
    spectral floor.  With ``cross_check``, each kernel's ``meta`` records the
    relative L2 distance to ``2^{jQ} psi_0(2^j x)`` built by interpolation.
    """
    j0, j1 = w.j_range
    if 4.0 ** j1 > margin * L.lambda_max:
        raise WindowError(f"4^{j1} exceeds {margin:g} * lambda_max = {margin * L.lambda_max:g}")
    floor = L.spectral_floor()
    if 4.0 ** j0 < floor:
        raise WindowError(f"4^{j0} lies below the lattice spectral floor {floor:.3g}")
    js = w.js
    ks = kernel_of(L, [w.psi_hat(j) for j in js])
    if cross_check and 0 in js:
        Q = L.spec.group.Q
        psi0 = ks[js.index(0)]
        for j, k in zip(js, ks):
            d = dilate_function(psi0, 2.0 ** (-j)) * 2.0 ** (j * Q / 2)
            n = lp_norm(k)
            k.meta["dilation_discrepancy"] = lp_norm(k - d) / n if n > 0 else 0.0
    return LPKernels(L, w, js, ks)


def band_filter(w: AdmissibleWindow, L: SubLaplacian | None = None,
                transition: float = 2.0) -> MultiplierSpec:
    """Smooth multiplier equal to 1 well inside the covered band.

    The plateau is ``[lo * transition, hi / transition]`` with smooth log-scale
    edges at the band ends.  If the band reaches past ``lambda_max`` the upper
    edge is dropped, since nothing above the spectrum needs removing.
    """
    lo, hi = w.covered_band()
    if L is not None and hi >= L.lambda_max:
        return Plateau(lo, lo * transition, lo * transition, np.inf)
    return Plateau(lo, lo * transition, hi / transition, hi)


def calderon_reconstruct(f: GridFunction, kernels: LPKernels) -> GridFunction:
    """``sum_j f * psi_j * psi_j^*``; ``meta["relative_error"]`` compares with ``f``."""
    out = 0 * f
    for k2 in kernels.squared():
        out = out + convolve(f, k2)
    nf = lp_norm(f)
    err = lp_norm(out - f) / nf if nf > 0 else lp_norm(out)
    return GridFunction(f.spec, out.values, {"relative_error": err})


def band_norms(f: GridFunction, kernels: LPKernels, p: float) -> np.ndarray:
    return np.array([lp_norm(convolve(f, k), p) for _, k in kernels])


def _combine(weights, norms, q):
    a = weights * norms
    if np.isinf(q):
        return float(np.max(a, initial=0.0))
    return float(np.sum(a ** q) ** (1.0 / q))


def besov_norm_discrete(f: GridFunction, kernels: LPKernels, bp: BesovParams,
                        norms: np.ndarray | None = None) -> float:
    """``(sum_j 2^{jsq} ||f * psi_j||_p^q)^{1/q}``; ``norms`` may be precomputed band norms."""
    js = np.asarray(kernels.js, float)
    if norms is None:
        norms = band_norms(f, kernels, bp.p)
    return _combine(2.0 ** (js * bp.s), np.asarray(norms), float(bp.q))


@dataclass(frozen=True)
class TGrid:
    """Midpoints of a geometric partition of ``[t_lo, t_hi]``."""

    t: np.ndarray
    log_step: float

    @classmethod
    def covering(cls, t_lo: float, t_hi: float, per_octave: int = 8) -> "TGrid":
        n = int(np.ceil(np.log2(t_hi / t_lo) * per_octave))
        step = np.log(2.0) / per_octave
        t = t_lo * np.exp(step * (np.arange(n) + 0.5))
        return cls(t, step)

    @classmethod
    def for_window(cls, w: AdmissibleWindow, per_octave: int = 8) -> "TGrid":
        """Grid on ``[2^{-2 J_max - 2}, 2^{-2 J_min + 2}]``."""
        j0, j1 = w.j_range
        return cls.covering(2.0 ** (-2 * j1 - 2), 2.0 ** (-2 * j0 + 2), per_octave)

    @property
    def per_octave(self) -> float:
        return np.log(2.0) / self.log_step


def _check_tgrid(tg: TGrid):
    t = np.asarray(tg.t)
    if len(t) > 1:
        ratios = np.log(t[1:] / t[:-1])
        if np.max(np.abs(ratios - tg.log_step)) > 1e-9 * tg.log_step:
            raise ValueError("t grid is not geometric with the stated step")
    if tg.per_octave < 4 - 1e-9:
        raise ValueError(f"t grid too coarse: {tg.per_octave:.2f} points per octave (need >= 4)")


def _t_quadrature(t, norms, s, q, log_step):
    wts = t ** (-s / 2)
    if np.isinf(q):
        return float(np.max(wts * norms, initial=0.0))
    return float((np.sum((wts * norms) ** q) * log_step) ** (1.0 / q))


def multiplier_norm_profile(f: GridFunction, L: SubLaplacian, family, p: float) -> np.ndarray:
    """``||m_t(L) f||_p`` for a list of multipliers ``m_t``."""
    return np.array([lp_norm(g, p) for g in apply_multiplier(L, list(family), f)])


def besov_norm_continuous(f: GridFunction, L: SubLaplacian, phi: MultiplierSpec, bp: BesovParams,
                          t_grid: TGrid) -> float:
    """Midpoint rule in ``log t`` for ``(int t^{-sq/2} ||phi(tL) f||_p^q dt/t)^{1/q}``."""
    _check_tgrid(t_grid)
    t = np.asarray(t_grid.t)
    norms = multiplier_norm_profile(f, L, [phi.scaled(ti) for ti in t], bp.p)
    return _t_quadrature(t, norms, bp.s, float(bp.q), t_grid.log_step)


def besov_norm_heat(f: GridFunction, L: SubLaplacian, k: int, bp: BesovParams,
                    t_grid: TGrid) -> float:
    """Same quadrature with ``(t lambda)^k exp(-t lambda)``; needs ``|s| < 2k``."""
    if not abs(bp.s) < 2 * k:
        raise ValueError(f"heat characterization needs |s| < 2k (s={bp.s}, k={k})")
    _check_tgrid(t_grid)
    t = np.asarray(t_grid.t)
    norms = multiplier_norm_profile(f, L, [HeatPower(ti, k) for ti in t], bp.p)
    return _t_quadrature(t, norms, bp.s, float(bp.q), t_grid.log_step)


def has_plateau(m: MultiplierSpec, samples: int = 4000) -> bool:
    """True if ``m == 1`` (to rounding) on a subinterval of its support."""
    sup = m.support
    if sup is None:
        return False
    hi = sup[1] if np.isfinite(sup[1]) else sup[0] * 1e6
    lam = np.geomspace(sup[0], hi, samples)[1:-1]
    one = np.abs(np.asarray(m.evaluate(lam)) - 1) < 1e-14
    return bool(np.any(one[1:] & one[:-1]))


def cutoff_corollary_check(f: GridFunction, L: SubLaplacian, phi_cutoff: MultiplierSpec,
                           psi: MultiplierSpec, bp: BesovParams, t_grid: TGrid,
                           kernels: LPKernels | None = None) -> dict:
    """Norm with the composite multiplier ``psi(t lambda) phi(t lambda)``.

    Uses the same ``t^{-sq/2}`` weighting as :func:`besov_norm_continuous`, so
    ``psi = Constant(1)`` reproduces it exactly.  If ``kernels`` is given the
    ratio to the discrete norm is included.
    """
    if not has_plateau(phi_cutoff):
        raise ValueError("cutoff multiplier must equal 1 on an open subinterval of its support")
    comp = psi * phi_cutoff if not isinstance(psi, Constant) else Constant(psi.value) * phi_cutoff
    val = besov_norm_continuous(f, L, comp, bp, t_grid)
    out = {"norm": val}
    if kernels is not None:
        d = besov_norm_discrete(f, kernels, bp)
        out["discrete"] = d
        out["ratio"] = val / d if d > 0 else np.nan
    return out


def ratio_interval(values: Sequence[float]) -> tuple:
    """``(min, max, max/min)`` of positive ratios."""
    v = np.asarray([x for x in values if np.isfinite(x) and x > 0])
    if len(v) == 0:
        return (np.nan, np.nan, np.nan)
    return (float(v.min()), float(v.max()), float(v.max() / v.min()))
