"""Scalar spectral multipliers on the half line.

Each multiplier is a frozen dataclass evaluating ``m(lambda)`` on arrays, plus
a Chebyshev budget ``cheb_degree`` (an integer or :class:`Auto`).  Multipliers
compose: ``m.scaled(r)`` is ``lambda -> m(r*lambda)``, ``m1 * m2`` is the
pointwise product and ``m.conj()`` the complex conjugate.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class Auto:
    """Grow the Chebyshev degree until the coefficient tail is below ``tol``."""

    tol: float = 1e-8


def smooth_step(z):
    """C-infinity step: 0 for z <= 0, 1 for z >= 1, S(z) + S(1-z) = 1."""
    z = np.asarray(z, float)
    out = np.where(z >= 1, 1.0, 0.0)
    m = (z > 0) & (z < 1)
    if np.any(m):
        zm = z[m]
        with np.errstate(over="ignore", divide="ignore"):  # subnormal z underflows to 0
            a = np.exp(-1.0 / zm)
            b = np.exp(-1.0 / (1.0 - zm))
        out[m] = a / (a + b)
    return out


def _log_coord(lam, lo, hi):
    """Position of lambda in [lo, hi] on the log scale, NaN-free for lambda <= 0."""
    lam = np.asarray(lam, float)
    with np.errstate(divide="ignore"):
        return np.where(lam > 0, np.log(np.maximum(lam, 1e-300) / lo) / np.log(hi / lo), -1.0)


@dataclass(frozen=True, kw_only=True)
class MultiplierSpec:
    cheb_degree: object = field(default_factory=Auto)

    def __call__(self, lam):
        return self.evaluate(np.asarray(lam, float))

    def evaluate(self, lam):  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def support(self) -> Optional[tuple]:
        """Compact support ``(lo, hi)`` if known, else ``None``."""
        return None

    @property
    def is_real(self) -> bool:
        return True

    def with_degree(self, deg) -> "MultiplierSpec":
        return replace(self, cheb_degree=deg)

    def scaled(self, r: float) -> "MultiplierSpec":
        if r == 1:
            return self
        return Scaled(self, float(r), cheb_degree=self.cheb_degree)

    def conj(self) -> "MultiplierSpec":
        return self if self.is_real else Conjugate(self, cheb_degree=self.cheb_degree)

    def __mul__(self, other):
        if isinstance(other, MultiplierSpec):
            return Product(self, other, cheb_degree=_min_budget(self.cheb_degree, other.cheb_degree))
        return Product(Constant(complex(other) if np.iscomplexobj(other) else float(other)), self,
                       cheb_degree=self.cheb_degree)

    __rmul__ = __mul__

    def label(self) -> str:
        return type(self).__name__


def _min_budget(a, b):
    if isinstance(a, Auto) and isinstance(b, Auto):
        return Auto(min(a.tol, b.tol))
    if isinstance(a, Auto):
        return b
    if isinstance(b, Auto):
        return a
    return max(a, b)


@dataclass(frozen=True)
class Constant(MultiplierSpec):
    value: complex = 1.0

    def evaluate(self, lam):
        return np.full(lam.shape, self.value)

    @property
    def is_real(self):
        return np.isrealobj(self.value) or np.imag(self.value) == 0

    def label(self):
        return f"Constant({self.value})"


@dataclass(frozen=True)
class Bump(MultiplierSpec):
    """Smooth bump supported in ``[lo, hi]``, shaped on the log scale.

    ``profile="exp"`` is ``exp(1 - 1/(1-s^2))`` with ``s`` in (-1, 1) (peak 1),
    ``profile="cos2"`` is ``cos(pi s / 2)^2``.
    """

    lo: float
    hi: float
    profile: str = "exp"

    def __post_init__(self):
        if not 0 < self.lo < self.hi < np.inf:
            raise ValueError(f"bump support must satisfy 0 < lo < hi, got [{self.lo}, {self.hi}]")
        if self.profile not in ("exp", "cos2"):
            raise ValueError(f"unknown bump profile {self.profile!r}")

    @property
    def support(self):
        return (self.lo, self.hi)

    def evaluate(self, lam):
        s = 2 * _log_coord(lam, self.lo, self.hi) - 1
        out = np.zeros(np.shape(s))
        m = np.abs(s) < 1
        if self.profile == "exp":
            out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
        else:
            out[m] = np.cos(0.5 * np.pi * s[m]) ** 2
        return out

    def label(self):
        return f"Bump[{self.lo:g},{self.hi:g}]"


@dataclass(frozen=True)
class Plateau(MultiplierSpec):
    """Equal to 1 on ``[a, b]``, smooth log-scale transitions to 0 at ``lo`` and ``hi``.

    ``hi = inf`` keeps the value 1 beyond ``b``.
    """

    lo: float
    a: float
    b: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo < self.a <= self.b < self.hi):
            raise ValueError("plateau needs 0 < lo < a <= b < hi")

    @property
    def support(self):
        return (self.lo, self.hi)

    def evaluate(self, lam):
        lam = np.asarray(lam, float)
        up = smooth_step(_log_coord(lam, self.lo, self.a))
        if np.isinf(self.hi):
            return up
        return up * (1.0 - smooth_step(_log_coord(lam, self.b, self.hi)))

    def label(self):
        return f"Plateau[{self.lo:g},{self.a:g},{self.b:g},{self.hi:g}]"


@dataclass(frozen=True)
class MeyerProfile(MultiplierSpec):
    """Squared Meyer-type window on ``[1/4, 4]`` in ``v = log_4 lambda``.

    ``S(v + 1)`` on ``[-1, 0]`` and ``1 - S(v)`` on ``[0, 1]``; its dyadic
    translates ``g(4^{-j} lambda)`` sum to one identically.
    """

    @property
    def support(self):
        return (0.25, 4.0)

    def evaluate(self, lam):
        lam = np.asarray(lam, float)
        with np.errstate(divide="ignore"):
            v = np.where(lam > 0, np.log(np.maximum(lam, 1e-300)) / np.log(4.0), -np.inf)
        return np.where(v <= 0, smooth_step(v + 1), 1.0 - smooth_step(v))

    def label(self):
        return "Meyer[0.25,4]"


@dataclass(frozen=True)
class Heat(MultiplierSpec):
    t: float

    def evaluate(self, lam):
        return np.exp(-self.t * lam)

    def label(self):
        return f"Heat({self.t:g})"


@dataclass(frozen=True)
class HeatPower(MultiplierSpec):
    """``(t lambda)^k exp(-t lambda)``."""

    t: float
    k: int = 1

    def evaluate(self, lam):
        x = self.t * lam
        return x ** self.k * np.exp(-x)

    def label(self):
        return f"HeatPower({self.t:g},{self.k})"


@dataclass(frozen=True)
class PowerBump(MultiplierSpec):
    """``lambda^k * base(lambda)``; ``k`` may be negative.

    For ``k < 0`` the base must vanish near 0: either compactly supported
    away from 0, or a :class:`HeatPower` of order at least ``-k``.
    """

    k: int
    base: MultiplierSpec

    def __post_init__(self):
        if self.k < 0 and not _vanishes_to(self.base, -self.k):
            raise ValueError("PowerBump with k < 0 needs a base vanishing to that order at 0")

    @property
    def support(self):
        return self.base.support

    @property
    def is_real(self):
        return self.base.is_real

    def evaluate(self, lam):
        lam = np.asarray(lam, float)
        if isinstance(self.base, HeatPower):
            # fold the power into the closed form to avoid 0 * inf at lam = 0
            t, j = self.base.t, self.base.k + self.k
            x = t * lam
            return t ** (-self.k) * x ** j * np.exp(-x)
        b = self.base.evaluate(lam)
        lo = self.base.support[0] if self.base.support is not None else 0.0
        pos = lam > lo if lo == 0 else lam >= lo
        safe = np.where(pos, lam, 1.0)
        return np.where(pos, safe ** self.k * b, 0.0)

    def label(self):
        return f"PowerBump({self.k},{self.base.label()})"


def _vanishes_to(m, k):
    if isinstance(m, HeatPower):
        return m.k >= k
    s = m.support
    return s is not None and s[0] > 0


@dataclass(frozen=True)
class DyadicSum(MultiplierSpec):
    """``sum_j g(4^{-j} lambda)`` over all ``j`` where the terms can be nonzero."""

    g: MultiplierSpec

    def __post_init__(self):
        if self.g.support is None:
            raise ValueError("dyadic sum needs a compactly supported profile")

    def evaluate(self, lam):
        lam = np.asarray(lam, float)
        lo, hi = self.g.support
        out = np.zeros(lam.shape)
        pos = lam > 0
        if not np.any(pos):
            return out
        lv = np.log(lam[pos]) / np.log(4.0)
        jmin = int(np.floor(lv.min() - np.log(hi) / np.log(4.0))) - 1
        jmax = int(np.ceil(lv.max() - np.log(lo) / np.log(4.0))) + 1
        acc = np.zeros(lv.shape)
        for j in range(jmin, jmax + 1):
            acc += self.g.evaluate(lam[pos] * 4.0 ** (-j))
        out[pos] = acc
        return out


@dataclass(frozen=True)
class SquareRootQuotient(MultiplierSpec):
    """``sqrt(num / den)``, zero where ``num`` vanishes."""

    num: MultiplierSpec
    den: MultiplierSpec

    @property
    def support(self):
        return self.num.support

    def evaluate(self, lam):
        a = np.real(self.num.evaluate(lam))
        b = np.real(self.den.evaluate(lam))
        out = np.zeros(np.shape(a))
        m = a > 0
        out[m] = np.sqrt(a[m] / b[m])
        return out

    def label(self):
        return f"sqrt({self.num.label()}/dyadic)"


@dataclass(frozen=True)
class Tabulated(MultiplierSpec):
    """Piecewise-linear interpolation of samples ``(lam, values)``; zero outside."""

    lam: tuple
    values: tuple

    def __post_init__(self):
        x = np.asarray(self.lam, float)
        y = np.asarray(self.values)
        if x.shape != y.shape or x.ndim != 1 or len(x) < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("tabulated multiplier needs increasing abscissae and matching values")
        if not np.all(np.isfinite(y)):
            raise ValueError("tabulated samples must be finite")

    @property
    def support(self):
        return (float(self.lam[0]), float(self.lam[-1])) if self.lam[0] > 0 else None

    @property
    def is_real(self):
        return np.isrealobj(np.asarray(self.values))

    def evaluate(self, lam):
        x = np.asarray(self.lam, float)
        y = np.asarray(self.values)
        if np.iscomplexobj(y):
            return (np.interp(lam, x, y.real, left=0, right=0)
                    + 1j * np.interp(lam, x, y.imag, left=0, right=0))
        return np.interp(lam, x, y, left=0, right=0)


@dataclass(frozen=True)
class Function(MultiplierSpec):
    """Wrap an arbitrary vectorized callable."""

    fn: Callable
    name: str = "function"
    real: bool = True
    supp: Optional[tuple] = None

    @property
    def support(self):
        return self.supp

    @property
    def is_real(self):
        return self.real

    def evaluate(self, lam):
        return np.asarray(self.fn(lam))

    def label(self):
        return self.name


@dataclass(frozen=True)
class Scaled(MultiplierSpec):
    base: MultiplierSpec
    r: float

    @property
    def support(self):
        s = self.base.support
        return None if s is None else (s[0] / self.r, s[1] / self.r)

    @property
    def is_real(self):
        return self.base.is_real

    def evaluate(self, lam):
        return self.base.evaluate(self.r * lam)

    def label(self):
        return f"{self.base.label()}(x{self.r:g})"


@dataclass(frozen=True)
class Product(MultiplierSpec):
    a: MultiplierSpec
    b: MultiplierSpec

    @property
    def support(self):
        sa, sb = self.a.support, self.b.support
        if sa is None:
            return sb
        if sb is None:
            return sa
        lo, hi = max(sa[0], sb[0]), min(sa[1], sb[1])
        return (lo, hi) if lo < hi else (lo, lo)

    @property
    def is_real(self):
        return self.a.is_real and self.b.is_real

    def evaluate(self, lam):
        return self.a.evaluate(lam) * self.b.evaluate(lam)

    def label(self):
        return f"{self.a.label()}*{self.b.label()}"


@dataclass(frozen=True)
class Conjugate(MultiplierSpec):
    base: MultiplierSpec

    @property
    def support(self):
        return self.base.support

    def evaluate(self, lam):
        return np.conj(self.base.evaluate(lam))

    def label(self):
        return f"conj({self.base.label()})"
