"""Named lattices and the seeded band-limited test family.

Family members are defined by physical data (multipliers and translation
points that are nodes of the coarse lattice), so the same member can be
rebuilt on a refined lattice with identical meaning:

* unitary dilates ``D_{2^-m} psi_{j*}`` for every admissible ``m``, each
  left-translated by a seeded lattice point; ``j* = J_min + 1`` is the lowest
  band whose window lies inside the covered band;
* random superpositions: for two distinct bands ``j`` drawn from the
  admissible ones, ``psi_j(L)`` applied to three translated spikes with complex
  normal weights;
* one heat-filtered spike: ``P(L) exp(-tau L) delta_x`` with ``P`` a smooth
  plateau rising inside the safe band.

Off the Fourier path each distinct multiplier is evaluated once, as a kernel
at the identity, and translated to the term nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .lattice import GridFunction, LatticeSpec, left_translate, point_of
from .littlewood_paley import AdmissibleWindow, build_window
from .multipliers import Bump, Heat, Plateau
from .spectral import SubLaplacian, apply_multiplier, assemble, kernel_of


@dataclass(frozen=True)
class Bed:
    name: str
    spec: LatticeSpec
    method: str
    j_range: tuple

    def operator(self) -> SubLaplacian:
        return assemble(self.spec, self.method)

    def window(self) -> AdmissibleWindow:
        return build_window(j_range=self.j_range)

    def refined(self, factor: int = 2) -> "Bed":
        """Spacing divided by ``factor`` at fixed physical extent."""
        s = self.spec
        if s.group.kind == "heisenberg":
            raise ValueError("Heisenberg beds are not refined (box size)")
        M = tuple(m * factor for m in s.half_counts)
        h = tuple(x / factor for x in s.spacing)
        spec = LatticeSpec(s.group, M, h, s.periodic)
        return replace(self, name=f"{self.name}-r{factor}", spec=spec)


def abelian_lp(M: int = 1024, h: float = 0.1) -> Bed:
    """Periodic line, exact Fourier calculus, ``j`` in ``[-3, 3]``."""
    return Bed("abelian-lp", LatticeSpec.abelian(M, h, periodic=True), "fourier", (-3, 3))


def heisenberg_lp(M: int = 14, K: int = 160, h: float = 1.0) -> Bed:
    """Truncated Heisenberg box with Chebyshev calculus, ``j`` in ``[0, 2]``."""
    return Bed("heisenberg-lp", LatticeSpec.heisenberg(M, K, h), "chebyshev", (0, 2))


def abelian_frames(M: int = 4096, h: float = 0.05) -> Bed:
    """Periodic line for the wavelet transform and frames, ``j`` in ``[-1, 1]``."""
    return Bed("abelian-frames", LatticeSpec.abelian(M, h, periodic=True), "fourier", (-1, 1))


def abelian_fine(M: int = 16384, h: float = 0.025) -> Bed:
    """Fine periodic line for interpolation-based dilation checks and moments."""
    return Bed("abelian-fine", LatticeSpec.abelian(M, h, periodic=True), "fourier", (-1, 1))


BEDS = {"abelian-lp": abelian_lp, "heisenberg-lp": heisenberg_lp,
        "abelian-frames": abelian_frames, "abelian-fine": abelian_fine}


# family ----------------------------------------------------------------------

@dataclass(frozen=True)
class Member:
    """One family member: ``coeff_i * m_i(L) delta_{x_i}`` summed over ``i``."""

    name: str
    terms: tuple  # of (coefficient, MultiplierSpec, index vector on the coarse lattice)
    base_spec: LatticeSpec

    def build(self, L: SubLaplacian) -> GridFunction:
        return build_family(L, [self])[0]


def _spike(spec: LatticeSpec, x) -> GridFunction:
    k = spec.to_index(np.asarray(x, float))
    r = np.round(k)
    if np.max(np.abs(k - r)) > 1e-9:
        raise ValueError("translation point is not a lattice node")
    r = r.astype(int)
    shape = np.asarray(spec.shape)
    if spec.periodic:
        r = r % shape
    elif np.any(r < 0) or np.any(r >= shape):
        raise ValueError("translation point lies outside the box")
    v = np.zeros(spec.shape, complex)
    v[tuple(r)] = 1.0 / spec.weight
    return GridFunction(spec, v)


def _safe_band(w: AdmissibleWindow, lam_max: float) -> tuple:
    lo, hi = w.covered_band()
    return 2 * lo, min(hi / 2, lam_max)


def _offset(rng, spec: LatticeSpec, frac: float = 0.2) -> tuple:
    # seeded first-layer offsets; higher layers stay at 0 to keep kernels inside the box
    M = np.asarray(spec.half_counts)
    deg = np.asarray(spec.group.degrees)
    lim = np.floor(frac * M).astype(int)
    idx = [int(rng.integers(-l, l + 1)) if d == 1 else 0 for l, d in zip(lim, deg)]
    return tuple(idx)


def lp_family(L: SubLaplacian, w: AdmissibleWindow, seed: int = 0, n: int = 10) -> list:
    """Seeded ``n``-member family (see module docstring); returns :class:`Member` list."""
    rng = np.random.default_rng(seed)
    spec = L.spec
    Q = spec.group.Q
    j0, j1 = w.j_range
    top = 4.0 ** j1 >= L.lambda_max
    js = [j for j in range(j0 + 1, j1 + 1) if j + 1 <= j1 or top]
    members = []
    for m, j in enumerate(js):
        if len(members) >= n - 2:
            break
        # unitary dilate by 2^-m of psi_{j*}: kernel of psi_hat_j times 2^{-mQ/2}
        c = 2.0 ** (-m * Q / 2)
        members.append(Member(f"dilate{m}", ((c, w.psi_hat(j), _offset(rng, spec)),), spec))
    lo, hi = _safe_band(w, L.lambda_max)
    k = 0
    while len(members) < n - 1:
        terms = []
        for j in rng.choice(js, size=min(2, len(js)), replace=False):
            for _ in range(3):
                coef = complex(rng.standard_normal(), rng.standard_normal())
                terms.append((coef, w.psi_hat(int(j)), _offset(rng, spec)))
        members.append(Member(f"random{k}", tuple(terms), spec))
        k += 1
    tau = 1.0 / np.sqrt(lo * hi)
    ramp = Plateau(lo, 2 * lo, 2 * lo, np.inf)
    members.append(Member("heatspike", ((1.0, ramp * Heat(tau), _offset(rng, spec)),), spec))
    return members


def build_family(L: SubLaplacian, members) -> list:
    """Build all members.

    With Fourier calculus each multiplier is applied to its summed spikes.
    Otherwise each distinct multiplier's kernel is computed once at the
    identity and left-translated to the term's node, which is exact on the
    lattice and agrees with the spectral value up to box truncation.
    """
    spec = L.spec
    out = []
    if L.method == "fourier":
        for mem in members:
            groups: dict = {}
            for c, m, idx in mem.terms:
                g = groups.setdefault(m, np.zeros(spec.shape, complex))
                g += c * _spike(spec, point_of(mem.base_spec, idx)).values
            v = sum(apply_multiplier(L, m, GridFunction(spec, g)).values for m, g in groups.items())
            out.append(GridFunction(spec, v))
        return out
    cache: dict = {}
    for mem in members:
        v = np.zeros(spec.shape, complex)
        for c, m, idx in mem.terms:
            if m not in cache:
                cache[m] = kernel_of(L, m)
            x = point_of(mem.base_spec, idx)
            _spike(spec, x)  # node and box check
            v += c * left_translate(cache[m], x).values
        out.append(GridFunction(spec, v))
    return out


def frame_family(L: SubLaplacian, band: tuple, seed: int = 0, n: int = 10) -> list:
    """Band-limited members for the frame tests: translated kernels of bumps inside ``band``."""
    rng = np.random.default_rng(seed)
    spec = L.spec
    lo, hi = band
    out = []
    for k in range(n):
        terms = []
        for _ in range(2):
            width = np.exp(rng.uniform(np.log(2.0), np.log(hi / lo)))
            a = np.exp(rng.uniform(np.log(lo), np.log(hi / width)))
            coef = complex(rng.standard_normal(), rng.standard_normal())
            terms.append((coef, Bump(float(a), float(a * width)), _offset(rng, spec, 0.05)))
        out.append(Member(f"frame{k}", tuple(terms), spec))
    return out
