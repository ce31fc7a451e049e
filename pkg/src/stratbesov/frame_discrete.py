"""Separated sets, indicator BUPUs and the discretization operators on ``R+ x| G``.

Product-grid nodes are numbered ``row * S + n`` with ``row`` the scale index
and ``n`` the flat lattice index (C order), ``S`` the lattice size.  The
neighborhood ``U_eps`` is ``exp(t_1 X_1) ... exp(t_n X_n) exp(t_0 A)`` with
``|t_i| <= eps``, ``A`` the dilation generator, so that

    (b, y) in (a, x) U_eps  iff  |log(b/a)| <= eps  and  delta_{1/a}(x^{-1} y) in U_eps(G).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coorbit import (AnalyzingVector, MixedNormParams, ReproducingKernel, ScaleGrid,
                      ScaleSpaceFunction, mixed_norm, reproducing_band, scale_space_convolve,
                      wavelet_transform)
from .group_core import hom_norm
from .lattice import GridFunction, lp_norm
from .multipliers import Bump, Plateau
from .spectral import ConvergenceError, apply_multiplier

_EPS_TOL = 1e-12


class FrameError(ValueError):
    pass


# neighborhoods ---------------------------------------------------------------

def _group_box_coords(group, z):
    # canonical coordinates t of z = exp(t_1 X_1) ... exp(t_n X_n)
    if group.kind == "heisenberg":
        t = np.array(z, float, copy=True)
        t[..., 2] = z[..., 2] - z[..., 0] * z[..., 1] / 2
        return t
    return z


def _displacement(spec, x, pts):
    """``x^{-1} y`` for lattice points ``y`` (minimal image when periodic)."""
    g = spec.group
    if g.kind == "heisenberg":
        from .group_core import inverse, multiply
        return multiply(g, inverse(g, x), pts)
    d = pts - x
    if spec.periodic:
        P = np.asarray(spec.period)
        d = d - P * np.round(d / P)
    return d


class _Geometry:
    """Box and distance queries on the product grid."""

    def __init__(self, grid: ScaleGrid):
        self.grid = grid
        spec = grid.spec
        self.spec = spec
        self.S = spec.size
        self.pts = spec.points().reshape(-1, spec.group.dim)
        self.idx = spec.index_grid().reshape(-1, spec.group.dim)
        self.deg = np.asarray(spec.group.degrees)
        self.loga = np.log(grid.scales)

    def rows_near(self, row, eps):
        d = np.abs(self.loga - self.loga[row])
        return np.flatnonzero(d <= eps + _EPS_TOL)

    def lattice_candidates(self, n, a, eps):
        # index window on first-layer axes, full range on the others
        spec = self.spec
        h = np.asarray(spec.spacing)
        M = np.asarray(spec.half_counts)
        c = self.idx[n]
        axes = []
        for ax in range(len(M)):
            if self.deg[ax] == 1:
                r = int(np.floor(a * eps / h[ax] + 1e-9))
                if spec.periodic:
                    r = min(r, M[ax])
                    w = np.arange(c[ax] - r, c[ax] + r + 1)
                    w = (w + M[ax]) % (2 * M[ax] + 1) - M[ax]
                    w = np.unique(w)
                else:
                    w = np.arange(max(-M[ax], c[ax] - r), min(M[ax], c[ax] + r) + 1)
            else:
                w = np.arange(-M[ax], M[ax] + 1)
            axes.append(w + M[ax])
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.ravel_multi_index(tuple(m.ravel() for m in mesh), spec.shape)

    def box(self, node, eps):
        """Flat product indices inside ``(a, x) U_eps`` and their BUPU distances."""
        row, n = divmod(int(node), self.S)
        a = self.grid.scales[row]
        g = self.spec.group
        cand = self.lattice_candidates(n, a, eps)
        z = _displacement(self.spec, self.pts[n], self.pts[cand])
        z = z / a ** self.deg
        t = _group_box_coords(g, z)
        keep = np.all(np.abs(t) <= eps + _EPS_TOL, axis=1)
        cand, z = cand[keep], z[keep]
        rows = self.rows_near(row, eps)
        dl = np.abs(self.loga[rows] - self.loga[row])
        dz = hom_norm(g, z) if len(z) else np.zeros(0)
        nodes = (rows[:, None] * self.S + cand[None, :]).ravel()
        dist = (dl[:, None] + dz[None, :]).ravel()
        return nodes, dist

    def min_resolvable(self):
        h = np.asarray(self.spec.spacing)
        a_min = self.grid.scales.min()
        lat = np.max(h[self.deg == 1] / a_min)
        return max(self.grid.log_rho, lat)


@dataclass(eq=False)
class SeparatedSet:
    """Greedy ``U_eps`` covering of the product grid.

    ``centers`` are flat product indices; ``incidence`` is the sparse
    ``(centers x nodes)`` box membership matrix; ``N`` the overlap multiplicity.
    """

    grid: ScaleGrid
    epsilon: float
    centers: np.ndarray
    incidence: sp.csr_matrix = field(repr=False)
    N: int = 0
    distances: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.centers)

    @property
    def rows(self) -> np.ndarray:
        return self.centers // self.grid.spec.size

    @property
    def lattice_index(self) -> np.ndarray:
        return self.centers % self.grid.spec.size

    def points(self) -> tuple:
        """``(a_i, x_i)`` arrays."""
        g = _Geometry(self.grid)
        return self.grid.scales[self.rows], g.pts[self.lattice_index]


def _incidence(geo, centers, eps, boxes=None):
    rows, cols, dists = [], [], []
    for i, c in enumerate(centers):
        nodes, dist = boxes[i] if boxes is not None else geo.box(c, eps)
        rows.append(np.full(len(nodes), i))
        cols.append(nodes)
        dists.append(dist)
    n_nodes = len(geo.grid) * geo.S
    r = np.concatenate(rows) if rows else np.zeros(0, int)
    c = np.concatenate(cols) if cols else np.zeros(0, int)
    d = np.concatenate(dists) if dists else np.zeros(0)
    # store distance + 1 so that zero distances survive as explicit entries
    D = sp.csr_matrix((d + 1.0, (r, c)), shape=(len(centers), n_nodes))
    A = D.copy()
    A.data[:] = 1.0
    return A, D


def overlap_multiplicity(A: sp.csr_matrix) -> int:
    """``max_i #{j : box_i and box_j share a node}`` (including ``i``)."""
    B = (A @ A.T).tocsr()
    return int(np.diff(B.indptr).max(initial=0))


def build_separated_set(grid: ScaleGrid, epsilon: float) -> SeparatedSet:
    """Accept nodes in lexicographic (scale, lattice index) order unless already covered."""
    geo = _Geometry(grid)
    need = geo.min_resolvable()
    if epsilon < need * (1 - 1e-9):
        raise FrameError(f"epsilon={epsilon:g} below grid resolution {need:g}")
    n_nodes = len(grid) * geo.S
    covered = np.zeros(n_nodes, bool)
    centers, boxes = [], []
    for node in range(n_nodes):
        if covered[node]:
            continue
        centers.append(node)
        box = geo.box(node, epsilon)
        boxes.append(box)
        covered[box[0]] = True
    centers = np.asarray(centers, np.int64)
    A, D = _incidence(geo, centers, epsilon, boxes)
    return SeparatedSet(grid, float(epsilon), centers, A, overlap_multiplicity(A), D)


def box_incidence(ss: SeparatedSet, epsilon: float) -> sp.csr_matrix:
    """Membership matrix for boxes of a different size at the same centers."""
    return _incidence(_Geometry(ss.grid), ss.centers, epsilon)[0]


def is_covering(ss: SeparatedSet) -> bool:
    return bool(np.all(np.asarray(ss.incidence.sum(axis=0)).ravel() > 0))


# BUPU ----------------------------------------------------------------------

@dataclass(eq=False)
class Bupu:
    """Indicator partition: node ``n`` belongs to cell ``owner[n]``."""

    set: SeparatedSet
    owner: np.ndarray = field(repr=False)

    def psi(self, i: int) -> ScaleSpaceFunction:
        v = (self.owner == i).astype(complex)
        return ScaleSpaceFunction(self.set.grid, v.reshape(_shape(self.set.grid)))

    def partition_residual(self) -> float:
        """``max |sum_i psi_i - 1|`` over the product grid."""
        n = len(self.owner)
        P = sp.csr_matrix((np.ones(n), (self.owner, np.arange(n))), shape=(len(self.set), n))
        return float(np.max(np.abs(np.asarray(P.sum(axis=0)).ravel() - 1.0)))

    def subordinate(self) -> bool:
        A = self.set.incidence.tocsr()
        return bool(np.all(np.asarray(A[self.owner, np.arange(len(self.owner))]).ravel() > 0))

    def cell_measure(self) -> np.ndarray:
        """Haar mass of each cell."""
        mu = np.repeat(self.set.grid.node_measure(), self.set.grid.spec.size)
        return np.bincount(self.owner, weights=mu, minlength=len(self.set))


def _shape(grid):
    return (len(grid),) + grid.spec.shape


def build_bupu(ss: SeparatedSet) -> Bupu:
    """Nearest center in ``|log(b/a_i)| + |delta_{1/a_i}(x_i^{-1} y)|`` among covering boxes."""
    D = ss.distances if ss.distances is not None else _incidence(_Geometry(ss.grid), ss.centers, ss.epsilon)[1]
    C = D.tocoo()
    n_nodes = D.shape[1]
    # per node: smallest distance, ties to the lowest center index
    order = np.lexsort((C.row, C.data, C.col))
    col = C.col[order]
    first = np.r_[True, col[1:] != col[:-1]]
    owner = np.full(n_nodes, -1, np.int64)
    owner[col[first]] = C.row[order][first]
    if np.any(owner < 0):
        raise FrameError("separated set does not cover the grid")
    return Bupu(ss, owner)


# sequence spaces -----------------------------------------------------------------

@dataclass(frozen=True)
class SequenceSpaceParams:
    base: MixedNormParams = MixedNormParams()
    epsilon: float | None = None


def sequence_norm(lam, ss: SeparatedSet, params: SequenceSpaceParams = SequenceSpaceParams(),
                  incidence: sp.csr_matrix | None = None) -> float:
    """``mixed_norm(sum_i |lam_i| 1_{(a_i, x_i) U})``."""
    lam = np.asarray(lam)
    if lam.shape != (len(ss),):
        raise ValueError(f"expected {len(ss)} coefficients, got shape {lam.shape}")
    if incidence is None:
        same = params.epsilon is None or abs(params.epsilon - ss.epsilon) <= _EPS_TOL
        incidence = ss.incidence if same else box_incidence(ss, params.epsilon)
    v = incidence.T @ np.abs(lam)
    F = ScaleSpaceFunction(ss.grid, v.reshape(_shape(ss.grid)))
    return mixed_norm(F, params.base)


# frame operators -----------------------------------------------------------

KINDS = ("T1", "T2", "T3", "I")


@dataclass(eq=False)
class FrameSystem:
    bupu: Bupu
    Phi: object
    operator_kind: str = "T3"
    mp: MixedNormParams = MixedNormParams()
    defect: float | None = None

    def __post_init__(self):
        if self.operator_kind not in KINDS:
            raise FrameError(f"operator kind must be one of {KINDS}")

    @property
    def grid(self) -> ScaleGrid:
        return self.bupu.set.grid

    def with_kind(self, kind: str) -> "FrameSystem":
        return FrameSystem(self.bupu, self.Phi, kind, self.mp)


def _flat(f: ScaleSpaceFunction) -> np.ndarray:
    return f.values.reshape(-1)


def _node_measure(grid) -> np.ndarray:
    return np.repeat(grid.node_measure(), grid.spec.size)


def _cbincount(idx, w, n):
    return np.bincount(idx, weights=w.real, minlength=n) + 1j * np.bincount(idx, weights=w.imag, minlength=n)


def coefficients(fs: FrameSystem, f: ScaleSpaceFunction, kind: str | None = None) -> np.ndarray:
    """``f(a_i, x_i)`` (T1), ``lambda_i(f)`` (T2) or ``c_i f(a_i, x_i)`` (T3)."""
    kind = kind or fs.operator_kind
    ss = fs.bupu.set
    v = _flat(f)
    if kind in ("T1", "T3"):
        c = v[ss.centers]
        return c * fs.bupu.cell_measure() if kind == "T3" else c
    if kind == "T2":
        return _cbincount(fs.bupu.owner, v * _node_measure(fs.grid), len(ss))
    raise FrameError(f"no coefficient functional for {kind}")


def reproducing_defect(fs: FrameSystem, f: ScaleSpaceFunction) -> float:
    n = mixed_norm(f, fs.mp)
    return mixed_norm(f - scale_space_convolve(f, fs.Phi), fs.mp) / n if n > 0 else 0.0


def apply_T(fs: FrameSystem, f: ScaleSpaceFunction, check: bool = False, tol: float = 2e-2
            ) -> ScaleSpaceFunction:
    """T1: ``sum_i f(a_i,x_i) psi_i * Phi``; T2: ``sum_i lambda_i(f) l_{(a_i,x_i)} Phi``;
    T3: ``sum_i c_i f(a_i,x_i) l_{(a_i,x_i)} Phi``.

    Translates of ``Phi`` are convolutions with node spikes of Haar mass one.
    With ``check`` the input must satisfy ``f = f * Phi`` within ``tol``.
    """
    if check:
        d = reproducing_defect(fs, f)
        if d > tol:
            raise FrameError(f"input outside the reproducing class (defect {d:.3g})")
    kind = fs.operator_kind
    if kind == "I":
        return f
    grid = fs.grid
    ss = fs.bupu.set
    n_nodes = len(grid) * grid.spec.size
    if kind == "T1":
        F = coefficients(fs, f, "T1")[fs.bupu.owner]
    else:
        F = np.zeros(n_nodes, complex)
        F[ss.centers] = coefficients(fs, f, kind) / _node_measure(grid)[ss.centers]
    return scale_space_convolve(ScaleSpaceFunction(grid, F.reshape(_shape(grid))), fs.Phi)


def random_reproducing(fs: FrameSystem, rng) -> ScaleSpaceFunction:
    """``W_u(phi)`` for seeded noise ``phi`` band-limited to where the scale grid reproduces.

    Falls back to ``G * Phi`` for white noise ``G`` when ``Phi`` is a plain
    scale-space function.  Normalized in the B-norm.
    """
    spec = fs.grid.spec
    if isinstance(fs.Phi, ReproducingKernel):
        vec = fs.Phi.vec
        lo, hi = reproducing_band(vec.u_hat, fs.grid)
        m = Plateau(lo, 2 * lo, hi / 2, hi) if hi >= 4 * lo else Bump(lo, hi)
        g = rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape)
        phi = apply_multiplier(vec.L, m, GridFunction(spec, g))
        F = wavelet_transform(phi, vec, fs.grid, method="spectral")
    else:
        shp = _shape(fs.grid)
        G = rng.standard_normal(shp) + 1j * rng.standard_normal(shp)
        F = scale_space_convolve(ScaleSpaceFunction(fs.grid, G), fs.Phi)
    return F * (1.0 / mixed_norm(F, fs.mp))


def estimate_defect(fs: FrameSystem, trials: int = 4, seed: int = 0, power_steps: int = 40,
                    rtol: float = 1e-3) -> float:
    """Max of ``||f - T f|| / ||f||`` over seeded reproducing-class test functions; stored on ``fs``.

    Each random start is followed by normalized power iterates of
    ``P (I - T)`` with ``P = * Phi``, stopping once the ratio changes by less
    than ``rtol`` or after ``power_steps``.  Without ``P`` the iterates drift
    to the edge scale rows, where ``* Phi`` is far from the identity and
    which reproducing inputs never reach.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = random_reproducing(fs, rng)
        prev = -1.0
        for _ in range(power_steps + 1):
            r = f - apply_T(fs, f)
            if fs.operator_kind != "I":
                r = scale_space_convolve(r, fs.Phi)
            nr = mixed_norm(r, fs.mp)
            ratio = nr / mixed_norm(f, fs.mp)
            worst = max(worst, ratio)
            if nr == 0 or abs(ratio - prev) <= rtol * ratio:
                break
            prev = ratio
            f = r * (1.0 / nr)
    fs.defect = float(worst)
    return fs.defect


def iteration_bound(defect: float, tol: float) -> int:
    """``log(tol) / log(defect) + 2``."""
    if defect <= 0:
        return 2
    return int(np.floor(np.log(tol) / np.log(defect))) + 2


def invert_neumann(fs: FrameSystem, g: ScaleSpaceFunction, tol: float = 1e-6, max_iter: int = 500,
                   project: bool = True, order: int | None = None) -> ScaleSpaceFunction:
    """``sum_k (I - T)^k g`` until the increment drops below ``tol ||g||``.

    The series is taken on the range of ``* Phi`` where ``T`` acts; with
    ``project`` the input is replaced by ``g * Phi`` first.  Refuses when
    the recorded defect is ``>= 0.9``.  A given ``order`` truncates the sum
    after exactly that many correction terms instead.
    """
    if fs.defect is None:
        estimate_defect(fs)
    if fs.defect >= 0.9:
        raise FrameError(f"defect {fs.defect:.3g} >= 0.9; Neumann inversion refused")
    if project and fs.operator_kind != "I":
        g = scale_space_convolve(g, fs.Phi)
    ng = mixed_norm(g, fs.mp)
    x = g
    r = g
    k = 0
    if order is not None:
        for k in range(1, int(order) + 1):
            r = r - apply_T(fs, r)
            x = x + r
        k = int(order)
    elif ng > 0:
        while True:
            r = r - apply_T(fs, r)
            x = x + r
            k += 1
            if mixed_norm(r, fs.mp) < tol * ng:
                break
            if k >= max_iter:
                raise ConvergenceError(f"Neumann series not converged in {max_iter} iterations")
    x = ScaleSpaceFunction(x.grid, x.values)
    bound = iteration_bound(fs.defect, tol)
    x.meta.update(iterations=k, iteration_bound=bound, within_bound=k <= bound, defect=fs.defect)
    return x


def synthesize(fs: FrameSystem, coeff: np.ndarray, vec: AnalyzingVector) -> GridFunction:
    """``sum_i coeff_i pi(a_i, x_i) u`` grouped by scale row."""
    grid = fs.grid
    spec = grid.spec
    Q = spec.group.Q
    ss = fs.bupu.set
    out = np.zeros(spec.size, complex)
    rows = ss.rows
    for k, a in enumerate(grid.scales):
        sel = rows == k
        if not np.any(sel):
            continue
        spikes = np.zeros(spec.size, complex)
        np.add.at(spikes, ss.lattice_index[sel], coeff[sel])
        f = GridFunction(spec, spikes.reshape(spec.shape) * (a ** (Q / 2) / spec.weight))
        out += apply_multiplier(vec.L, vec.u_hat.scaled(a * a), f).values.reshape(-1)
    return GridFunction(spec, out.reshape(spec.shape))


def atomic_reconstruct(fs: FrameSystem, phi: GridFunction, vec: AnalyzingVector, tol: float = 1e-6,
                       order: int | None = None) -> tuple:
    """``phi = sum_i coeff_i pi(a_i, x_i) u`` with ``coeff`` from ``T^{-1} W_u(phi)``.

    T3 uses ``c_i h(a_i, x_i)``, T2 uses ``lambda_i(h)`` with ``h = T^{-1} W_u(phi)``.
    ``order`` fixes the number of Neumann terms (see :func:`invert_neumann`).
    Returns ``(reconstruction, report)``.
    """
    if fs.operator_kind not in ("T2", "T3"):
        raise FrameError("atomic reconstruction needs a T2 or T3 system")
    W = wavelet_transform(phi, vec, fs.grid)
    nphi = lp_norm(phi)
    if nphi == 0:
        z = GridFunction(phi.spec, np.zeros(phi.spec.shape, complex))
        return z, {"relative_error": 0.0, "iterations": 0, "coefficient_norm": 0.0,
                   "defect": fs.defect, "within_bound": True, "coefficients": np.zeros(len(fs.bupu.set))}
    h = invert_neumann(fs, W, tol=tol, order=order)
    coeff = coefficients(fs, h)
    rec = synthesize(fs, coeff, vec)
    rep = {"relative_error": lp_norm(rec - phi) / nphi,
           "iterations": h.meta["iterations"], "iteration_bound": h.meta["iteration_bound"],
           "within_bound": h.meta["within_bound"], "defect": fs.defect,
           "coefficient_norm": sequence_norm(coeff, fs.bupu.set, SequenceSpaceParams(fs.mp)),
           "coefficients": coeff}
    return rec, rep


def verify_atomic_decomposition(fs: FrameSystem, family, vec: AnalyzingVector, tol: float = 5e-2,
                                ratio_limit: float = 10.0) -> dict:
    """Clauses: (i) finite coefficient norms, (ii) ratio interval, (iii) reconstruction.

    ``||f||`` is the coorbit norm ``mixed_norm(W_u f)``.  A system whose
    inversion is refused fails clause (iii).
    """
    ratios, errors, finite = [], [], True
    refused = False
    for f in family:
        nf = mixed_norm(wavelet_transform(f, vec, fs.grid), fs.mp)
        try:
            _, rep = atomic_reconstruct(fs, f, vec)
        except (FrameError, ConvergenceError):
            refused = True
            break
        cn = rep["coefficient_norm"]
        finite &= bool(np.isfinite(cn))
        errors.append(rep["relative_error"])
        if nf > 0:
            ratios.append(cn / nf)
    r = np.asarray(ratios)
    spread = float(r.max() / r.min()) if len(r) and r.min() > 0 else (1.0 if len(r) == 0 else np.inf)
    return {
        "finite": finite and not refused,
        "ratio_min": float(r.min()) if len(r) else np.nan,
        "ratio_max": float(r.max()) if len(r) else np.nan,
        "ratio_spread": spread,
        "equivalence": (not refused) and spread < ratio_limit,
        "max_error": float(max(errors)) if errors else (np.inf if refused else 0.0),
        "reconstruction": (not refused) and all(e < tol for e in errors),
        "refused": refused,
    }
