"""Wavelet transform on the affine group ``R+ x| G`` and mixed norms.

Points of the affine group are pairs ``(a, x)`` with product
``(a, x)(b, y) = (ab, x . delta_a y)``; it acts on functions by
``pi(a, x) f = l_x D_a f``.  The left Haar measure is ``a^{-(Q+1)} dx da``.

On a lattice, ``D_a`` of a kernel ``u = u_hat(L) delta`` can be formed
exactly as ``a^{Q/2} u_hat(a^2 L) delta``; :class:`AnalyzingVector` does
this, and :class:`ReproducingKernel` keeps ``Phi = W_u(u)`` in the same
spectral form so convolving with it costs two multiplier applications per
scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sint

from .lattice import (GridFunction, LatticeSpec, _read, convolve, dilate_function, involution,
                      left_translate, lp_norm)
from .group_core import dilate, inverse, multiply
from .littlewood_paley import BesovParams, LPKernels, besov_norm_discrete
from .multipliers import Constant, MultiplierSpec, Product
from .spectral import SubLaplacian, apply_multiplier, kernel_of


# scale grid and scale-space functions -------------------------------------------

@dataclass(frozen=True)
class ScaleGrid:
    """Scales ``a_k = rho^k`` for integer ``k`` in ``exponents``; quadrature weight ``log rho``."""

    exponents: tuple
    rho: float
    spec: LatticeSpec

    def __post_init__(self):
        if not self.rho > 1:
            raise ValueError("scale ratio rho must exceed 1")
        e = tuple(int(k) for k in self.exponents)
        if len(e) == 0 or any(b - a != 1 for a, b in zip(e, e[1:])):
            raise ValueError("exponents must be consecutive integers")
        object.__setattr__(self, "exponents", e)

    @classmethod
    def covering(cls, spec: LatticeSpec, a_lo: float, a_hi: float,
                 rho: float = 2.0 ** 0.25) -> "ScaleGrid":
        """Smallest grid ``rho^k`` (through ``a = 1``) containing ``[a_lo, a_hi]``."""
        lo = int(np.floor(np.log(a_lo) / np.log(rho) + 1e-9))
        hi = int(np.ceil(np.log(a_hi) / np.log(rho) - 1e-9))
        return cls(tuple(range(lo, hi + 1)), rho, spec)

    @classmethod
    def for_band(cls, spec: LatticeSpec, j_range, rho: float = 2.0 ** 0.25) -> "ScaleGrid":
        """Grid covering ``[2^{-J_max-1}, 2^{-J_min+1}]``."""
        return cls.covering(spec, 2.0 ** (-j_range[1] - 1), 2.0 ** (-j_range[0] + 1), rho)

    @property
    def scales(self) -> np.ndarray:
        return self.rho ** np.asarray(self.exponents, float)

    @property
    def log_rho(self) -> float:
        return float(np.log(self.rho))

    def __len__(self):
        return len(self.exponents)

    def position(self, exponent: int):
        """Row of ``rho^exponent``, or ``None`` when off the grid."""
        i = exponent - self.exponents[0]
        return i if 0 <= i < len(self.exponents) else None

    def refined(self) -> "ScaleGrid":
        """Same range with ``rho -> sqrt(rho)``."""
        e = self.exponents
        return ScaleGrid(tuple(range(2 * e[0], 2 * e[-1] + 1)), float(np.sqrt(self.rho)), self.spec)

    def node_measure(self) -> np.ndarray:
        """Haar mass ``a^{-Q} w log(rho)`` of each product node, per scale."""
        Q = self.spec.group.Q
        return self.scales ** (-Q) * self.spec.weight * self.log_rho


@dataclass(frozen=True, eq=False)
class ScaleSpaceFunction:
    grid: ScaleGrid
    values: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, complex)
        want = (len(self.grid),) + self.grid.spec.shape
        if v.shape != want:
            raise ValueError(f"values shape {v.shape} does not match grid {want}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite scale-space values")
        v = v.copy() if v is self.values else v
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def at(self, k: int) -> GridFunction:
        return GridFunction(self.grid.spec, self.values[k])

    def _other(self, o):
        if isinstance(o, ScaleSpaceFunction):
            if o.grid != self.grid:
                raise ValueError("scale grid mismatch")
            return o.values
        return o

    def __add__(self, o):
        return ScaleSpaceFunction(self.grid, self.values + self._other(o))

    def __sub__(self, o):
        return ScaleSpaceFunction(self.grid, self.values - self._other(o))

    def __mul__(self, c):
        return ScaleSpaceFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ScaleSpaceFunction(self.grid, -self.values)


def scale_space_zeros(grid: ScaleGrid) -> ScaleSpaceFunction:
    return ScaleSpaceFunction(grid, np.zeros((len(grid),) + grid.spec.shape, complex))


@dataclass(frozen=True)
class MixedNormParams:
    p: float = 2.0
    q: float = 2.0
    s: float = 0.0

    def __post_init__(self):
        if not (float(self.p) >= 1 and float(self.q) >= 1):
            raise ValueError(f"mixed-norm exponents must be >= 1, got p={self.p}, q={self.q}")


# representation and analyzing vectors ---------------------------------------------

def affine_multiply(group, ax, by):
    """``(a, x)(b, y) = (ab, x . delta_a y)``."""
    (a, x), (b, y) = ax, by
    return a * b, multiply(group, np.asarray(x, float), dilate(group, a, np.asarray(y, float)))


def affine_inverse(group, ax):
    a, x = ax
    return 1.0 / a, dilate(group, 1.0 / a, inverse(group, np.asarray(x, float)))


def represent(a: float, x, f: GridFunction, interpolate: bool = True) -> GridFunction:
    """``pi(a, x) f = l_x D_a f`` (interpolated)."""
    if not a > 0:
        raise ValueError("scale must be positive")
    return left_translate(dilate_function(f, a), x, interpolate=interpolate)


def normalize_analyzing_vector(u_hat: MultiplierSpec, constant: float = 2.0) -> MultiplierSpec:
    """Rescale ``u_hat`` so that ``int |u_hat(lam)|^2 dlam / lam = constant``.

    With the measure ``da/a`` on scales, ``int |u_hat(a^2 lam)|^2 da/a`` is
    half that integral, so ``constant=2`` makes the reproducing identity
    ``W_u(phi) * W_u(u) = W_u(phi)`` hold without extra factors.
    """
    base, c0 = u_hat, 1.0
    if isinstance(u_hat, Product) and isinstance(u_hat.a, Constant):
        base, c0 = u_hat.b, u_hat.a.value
        if c0 == 0:
            raise ValueError("analyzing vector is zero")
    sup = base.support
    if sup is None or not sup[0] > 0:
        raise ValueError("analyzing vector needs a support bounded away from zero")
    lo, hi = np.log(sup[0]), np.log(min(sup[1], 1e300))
    val, _ = sint.quad(lambda v: float(np.abs(base.evaluate(np.array([np.exp(v)]))[0]) ** 2),
                       lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
    if not val > 0:
        raise ValueError("analyzing vector is zero")
    k = float(np.sqrt(constant / val))
    if abs(abs(c0) - k) <= 1e-12 * k:
        return u_hat
    return Product(Constant(k), base, cheb_degree=base.cheb_degree)


def admissibility_integral(u_hat: MultiplierSpec) -> float:
    """``int |u_hat(lam)|^2 dlam / lam`` by adaptive quadrature in ``log lam``."""
    lo, hi = u_hat.support
    val, _ = sint.quad(lambda v: float(np.abs(u_hat.evaluate(np.array([np.exp(v)]))[0]) ** 2),
                       np.log(lo), np.log(hi), epsabs=0.0, epsrel=1e-13, limit=400)
    return float(val)


def discrete_admissibility(u_hat: MultiplierSpec, grid: ScaleGrid, lam) -> np.ndarray:
    """``sum_k log(rho) |u_hat(a_k^2 lam)|^2``, the scale-grid version of the reproducing factor."""
    lam = np.asarray(lam, float)
    return sum(grid.log_rho * np.abs(u_hat.evaluate(a * a * lam)) ** 2 for a in grid.scales)


def reproducing_band(u_hat: MultiplierSpec, grid: ScaleGrid) -> tuple:
    """Spectral interval on which every contributing scale ``a^2 lam in supp(u_hat)`` is on the grid.

    For ``supp(u_hat) = [l, r]`` this is ``[r / a_max^2, l / a_min^2]``.
    """
    l, r = u_hat.support
    a = grid.scales
    return (r / a.max() ** 2, l / a.min() ** 2)


class AnalyzingVector:
    """Kernel ``u`` of ``u_hat`` with exact lattice dilations ``D_a u = a^{Q/2} u_hat(a^2 L) delta``."""

    def __init__(self, L: SubLaplacian, u_hat: MultiplierSpec):
        self.L = L
        self.u_hat = u_hat
        self._cache = {}

    @property
    def spec(self) -> LatticeSpec:
        return self.L.spec

    @property
    def u(self) -> GridFunction:
        return self.dilated(1.0)

    def dilated(self, a: float) -> GridFunction:
        a = float(a)
        if a not in self._cache:
            Q = self.spec.group.Q
            self._cache[a] = kernel_of(self.L, self.u_hat.scaled(a * a)) * a ** (Q / 2)
        return self._cache[a]


def _dilated(u, a):
    return u.dilated(a) if isinstance(u, AnalyzingVector) else dilate_function(u, a)


def wavelet_transform(phi: GridFunction, u, grid: ScaleGrid, method: str = "convolution"
                      ) -> ScaleSpaceFunction:
    """``W_u(phi)(a_k, x) = <phi, pi(a_k, x) u> = (phi * (D_{a_k} u)^*)(x)``.

    ``u`` is an :class:`AnalyzingVector` (exact dilations) or a grid function
    (interpolated dilations).  ``method="spectral"`` applies
    ``a^{Q/2} conj(u_hat)(a^2 L)`` directly and needs an analyzing vector.
    """
    if phi.spec != grid.spec:
        raise ValueError("lattice mismatch between phi and scale grid")
    if method == "spectral":
        if not isinstance(u, AnalyzingVector):
            raise ValueError("spectral wavelet transform needs an AnalyzingVector")
        Q = grid.spec.group.Q
        ms = [u.u_hat.conj().scaled(a * a) for a in grid.scales]
        rows = apply_multiplier(u.L, ms, phi)
        vals = np.stack([r.values * a ** (Q / 2) for r, a in zip(rows, grid.scales)])
        return ScaleSpaceFunction(grid, vals)
    if method != "convolution":
        raise ValueError(f"unknown method {method!r}")
    rows = [convolve(phi, involution(_dilated(u, a))).values for a in grid.scales]
    return ScaleSpaceFunction(grid, np.stack(rows))


def wavelet_coefficient(phi: GridFunction, u, a: float, x) -> complex:
    """Single ``<phi, pi(a, x) u>`` by a direct quadrature inner product."""
    from .lattice import inner
    return inner(phi, left_translate(_dilated(u, a), x, interpolate=True))


class ReproducingKernel:
    """``Phi = W_u(u)`` on a scale grid, held in spectral form."""

    def __init__(self, vec: AnalyzingVector, grid: ScaleGrid):
        if vec.spec != grid.spec:
            raise ValueError("lattice mismatch")
        self.vec = vec
        self.grid = grid
        self._dense = None

    def materialize(self) -> ScaleSpaceFunction:
        if self._dense is None:
            self._dense = wavelet_transform(self.vec.u, self.vec, self.grid, method="spectral")
        return self._dense

    @property
    def values(self) -> np.ndarray:
        return self.materialize().values

    def at_identity(self) -> complex:
        """``Phi(1, e)``."""
        k = self.grid.position(0)
        return complex(self.values[k][self.grid.spec.center_index()])


# mixed norms and scale-space convolution ----------------------------------------------

def scale_profile(F: ScaleSpaceFunction, p: float) -> np.ndarray:
    """Inner lattice ``L^p`` norm of each scale slice."""
    return np.array([lp_norm(F.at(k), p) for k in range(len(F.grid))])


def mixed_norm(F: ScaleSpaceFunction, mp: MixedNormParams) -> float:
    """``(sum_k log(rho) (a_k^{-s/2} ||F(a_k, .)||_p)^q)^{1/q}``; sup over ``k`` when ``q = inf``."""
    inner_norms = scale_profile(F, mp.p)
    w = F.grid.scales ** (-mp.s / 2) * inner_norms
    q = float(mp.q)
    if np.isinf(q):
        return float(np.max(w, initial=0.0))
    return float((F.grid.log_rho * np.sum(w ** q)) ** (1 / q))


def _pairs(grid: ScaleGrid):
    # (output row l, input row k, kernel row m) with a_l / a_k = a_m on the grid
    e = grid.exponents
    for li, el in enumerate(e):
        for ki, ek in enumerate(e):
            mi = grid.position(el - ek)
            if mi is not None:
                yield li, ki, mi


def scale_space_convolve(F: ScaleSpaceFunction, H) -> ScaleSpaceFunction:
    """``(F*H)(b, y) = sum_k sum_x F(a_k, x) H(b/a_k, delta_{1/a_k}(x^{-1} y)) a_k^{-Q} w log(rho)``.

    Kernel rows ``b/a_k`` off the grid count as zero.  For a generic ``H`` the
    inner sum is ``a_k^{-Q/2} (F_k * D_{a_k} H_{b/a_k})(y)`` with interpolated
    dilations; ``D_{a_k} H`` is kept on the box, so this matches the literal
    sum when ``H`` vanishes on and outside the boundary of the box shrunk
    by ``a_max``.  Interpolating a
    spike does not conserve its mass under compression (``a < 1``), so the
    generic path assumes ``H`` is smooth on the lattice scale.  For a
    :class:`ReproducingKernel` it is evaluated exactly as
    ``(b/a_k)^{Q/2} u_hat(a_k^2 L) conj(u_hat)(b^2 L) F_k``.
    """
    grid = F.grid
    Q = grid.spec.group.Q
    a = grid.scales
    lr = grid.log_rho
    if isinstance(H, ReproducingKernel):
        if H.grid != grid:
            raise ValueError("scale grid mismatch")
        L, uh = H.vec.L, H.vec.u_hat
        G = [apply_multiplier(L, uh.scaled(ak * ak), F.at(k)).values if np.any(F.values[k]) else None
             for k, ak in enumerate(a)]
        out = np.zeros_like(F.values)
        acc = {}
        for li, ki, _ in _pairs(grid):
            if G[ki] is not None:
                acc.setdefault(li, []).append(lr * (a[li] / a[ki]) ** (Q / 2) * G[ki])
        for li, terms in acc.items():
            s = GridFunction(grid.spec, np.sum(terms, axis=0))
            out[li] = apply_multiplier(L, uh.conj().scaled(a[li] ** 2), s).values
        return ScaleSpaceFunction(grid, out)
    if H.grid != grid:
        raise ValueError("scale grid mismatch")
    out = np.zeros_like(F.values)
    dil = {}
    for li, ki, mi in _pairs(grid):
        if not np.any(F.values[ki]) or not np.any(H.values[mi]):
            continue
        if (ki, mi) not in dil:
            dil[ki, mi] = dilate_function(H.at(mi), a[ki])
        out[li] += lr * a[ki] ** (-Q / 2) * convolve(F.at(ki), dil[ki, mi]).values
    res = ScaleSpaceFunction(grid, out)
    edge = max(np.abs(H.values[0]).max(), np.abs(H.values[-1]).max())
    top = np.abs(H.values).max()
    res.meta["kernel_edge_ratio"] = float(edge / top) if top > 0 else 0.0
    return res


def scale_space_convolve_direct(F: ScaleSpaceFunction, H: ScaleSpaceFunction) -> ScaleSpaceFunction:
    """Literal triple sum of :func:`scale_space_convolve`; small grids only."""
    grid = F.grid
    spec = grid.spec
    g = spec.group
    Q = g.Q
    a = grid.scales
    pts = spec.points().reshape(-1, g.dim)
    out = np.zeros((len(grid), len(pts)), complex)
    for li, ki, mi in _pairs(grid):
        Fk = F.values[ki].reshape(-1)
        Hm = H.at(mi)
        for xi in np.flatnonzero(Fk):
            z = dilate(g, 1.0 / a[ki], multiply(g, inverse(g, pts[xi]), pts))
            hv = _read(Hm, z, interpolate=True)
            out[li] += Fk[xi] * hv * a[ki] ** (-Q) * spec.weight * grid.log_rho
    return ScaleSpaceFunction(grid, out.reshape((len(grid),) + spec.shape))


def scale_space_delta(grid: ScaleGrid) -> ScaleSpaceFunction:
    """Unit mass at ``(1, e)`` for the product Haar quadrature."""
    v = np.zeros((len(grid),) + grid.spec.shape, complex)
    k = grid.position(0)
    v[(k,) + grid.spec.center_index()] = 1.0 / grid.node_measure()[k]
    return ScaleSpaceFunction(grid, v)


def product_l2(F: ScaleSpaceFunction) -> float:
    """``L^2`` norm for the Haar measure ``a^{-(Q+1)} dx da``."""
    return mixed_norm(F, MixedNormParams(2, 2, F.grid.spec.group.Q))


def reproducing_check(phi: GridFunction, u, grid: ScaleGrid, Phi=None) -> float:
    """``||W_u(phi) * W_u(u) - W_u(phi)|| / ||W_u(phi)||`` in Haar ``L^2``; 0 when ``phi = 0``."""
    W = wavelet_transform(phi, u, grid)
    n = product_l2(W)
    if n == 0:
        return 0.0
    if Phi is None:
        Phi = ReproducingKernel(u, grid) if isinstance(u, AnalyzingVector) else wavelet_transform(u, u, grid)
    R = scale_space_convolve(W, Phi)
    return product_l2(R - W) / n


def besov_index(Q: float, mp: MixedNormParams, index_map: str = "stated") -> float:
    """Besov smoothness matched to the mixed norm ``L^{p,q}_s``.

    ``"stated"`` is ``Q - 2 s / q``; ``"scaling"`` is ``(s - Q) / 2``, the index
    that makes both norms scale alike under dilations.
    """
    q = float(mp.q)
    if np.isinf(q):
        raise ValueError("index map is undefined for q = inf")
    if index_map == "stated":
        return Q - 2 * mp.s / q
    if index_map == "scaling":
        return (mp.s - Q) / 2
    raise ValueError(f"unknown index map {index_map!r}")


def coorbit_vs_besov(phi: GridFunction, u, grid: ScaleGrid, kernels: LPKernels, mp: MixedNormParams,
                     index_map: str = "stated") -> dict:
    """Ratio ``||W_u(phi)||_{L^{p,q}_s} / ||phi||_{B^sigma_{p,q}}``."""
    Q = grid.spec.group.Q
    sigma = besov_index(Q, mp, index_map)
    W = wavelet_transform(phi, u, grid)
    num = mixed_norm(W, mp)
    den = besov_norm_discrete(phi, kernels, BesovParams(mp.p, mp.q, sigma))
    if den == 0:
        return {"ratio": np.nan, "mixed": num, "besov": den, "sigma": sigma, "degenerate": True}
    return {"ratio": num / den, "mixed": num, "besov": den, "sigma": sigma, "degenerate": False}


def scale_young_check(F: ScaleSpaceFunction, H, mp: MixedNormParams, tol: float = 1e-6) -> dict:
    """Test ``||F*H||_{L^{p,q}_s} <= (1+tol) ||F||_{L^{p,q}_s} ||H||_{L^{1,1}_{s}}``.

    The weight on ``H`` carries ``+s``: with ``b = a c`` the scale weight
    splits as ``b^{-s/2} = a^{-s/2} c^{-s/2}``.  The ``-s`` variant is reported
    too; both agree at ``s = 0``.
    """
    Hd = H.materialize() if isinstance(H, ReproducingKernel) else H
    lhs = mixed_norm(scale_space_convolve(F, H), mp)
    nf = mixed_norm(F, mp)
    rhs = nf * mixed_norm(Hd, MixedNormParams(1, 1, mp.s))
    rhs_neg = nf * mixed_norm(Hd, MixedNormParams(1, 1, -mp.s))
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= (1 + tol) * rhs),
            "rhs_minus_s": rhs_neg, "holds_minus_s": bool(lhs <= (1 + tol) * rhs_neg)}
