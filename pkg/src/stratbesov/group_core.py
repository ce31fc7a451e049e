"""Stratified groups of step at most two in exponential coordinates.

Points are plain float arrays whose last axis holds the coordinates, ordered
layer by layer.  All operations broadcast over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class StratifiedGroup:
    """A step-1 or step-2 stratified group.

    Parameters
    ----------
    kind : {"abelian", "heisenberg"}
    layer_dims : tuple of int
        Dimensions ``(n1,)`` or ``(n1, n2)`` of the layers.
    bracket : ndarray, shape (n2, n1, n1), optional
        Antisymmetric structure constants; ``[X_i, X_j] = sum_k c[k, i, j] T_k``.
    """

    kind: str
    layer_dims: tuple
    bracket: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        dims = tuple(int(n) for n in self.layer_dims)
        if not dims or any(n <= 0 for n in dims) or len(dims) > 2:
            raise ValueError(f"unsupported layer dimensions {self.layer_dims}")
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) == 2:
            c = np.asarray(self.bracket, dtype=float)
            if c.shape != (dims[1], dims[0], dims[0]):
                raise ValueError("bracket table shape does not match layers")
            if not np.allclose(c, -np.swapaxes(c, 1, 2)):
                raise ValueError("bracket table must be antisymmetric")
            c.setflags(write=False)
            object.__setattr__(self, "bracket", c)
        if self.kind == "abelian" and len(dims) != 1:
            raise ValueError("abelian groups have a single layer")
        if self.kind == "heisenberg" and dims != (2, 1):
            raise ValueError("Heisenberg group has layers (2, 1)")

    @classmethod
    def abelian(cls, d: int = 1) -> "StratifiedGroup":
        return cls("abelian", (d,))

    @classmethod
    def heisenberg(cls) -> "StratifiedGroup":
        c = np.zeros((1, 2, 2))
        c[0, 0, 1], c[0, 1, 0] = 1.0, -1.0
        return cls("heisenberg", (2, 1), c)

    @property
    def dim(self) -> int:
        return sum(self.layer_dims)

    @property
    def Q(self) -> int:
        """Homogeneous degree, sum of k * dim V_k."""
        return sum(k * n for k, n in enumerate(self.layer_dims, start=1))

    @property
    def n1(self) -> int:
        return self.layer_dims[0]

    @property
    def degrees(self) -> np.ndarray:
        """Homogeneity degree of each coordinate."""
        return np.concatenate([np.full(n, k) for k, n in enumerate(self.layer_dims, 1)])

    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"expected coordinates of length {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("group point has non-finite coordinates")
        return x


def multiply(g: StratifiedGroup, x, y) -> np.ndarray:
    """Group product via the (terminating) BCH formula."""
    x, y = g.check_point(x), g.check_point(y)
    out = x + y
    if len(g.layer_dims) == 2:
        n1 = g.n1
        # layer-2 correction: half the bracket of the first-layer parts
        out[..., n1:] += 0.5 * np.einsum("kij,...i,...j->...k", g.bracket, x[..., :n1], y[..., :n1])
    return out


def inverse(g: StratifiedGroup, x) -> np.ndarray:
    return -g.check_point(x)


def dilate(g: StratifiedGroup, r: float, x) -> np.ndarray:
    """Anisotropic dilation scaling layer k by ``r**k``."""
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    return g.check_point(x) * float(r) ** g.degrees


def hom_norm(g: StratifiedGroup, x) -> np.ndarray:
    """Homogeneous norm; Euclidean in the abelian case."""
    x = g.check_point(x)
    if len(g.layer_dims) == 1:
        return np.sqrt(np.sum(x * x, axis=-1))
    n1 = g.n1
    s = np.sum(x[..., :n1] ** 4, axis=-1) + np.sum(x[..., n1:] ** 2, axis=-1)
    return s ** 0.25


def random_points(g: StratifiedGroup, n: int, rng, scale: float = 1.0) -> np.ndarray:
    """Seeded sample of points with homogeneous size about ``scale``."""
    x = rng.standard_normal((n, g.dim))
    return x * scale ** g.degrees


def quasi_triangle_constant(g: StratifiedGroup, x, y) -> float:
    """Empirical constant C with |xy| <= C(|x| + |y|) over the given samples."""
    num = hom_norm(g, multiply(g, x, y))
    den = hom_norm(g, x) + hom_norm(g, y)
    keep = den > 0
    return float(np.max(num[keep] / den[keep])) if np.any(keep) else 0.0


def axiom_residuals(g: StratifiedGroup, n: int = 1000, seed: int = 0,
                    radii=(0.5, 2.0, 3.0)) -> dict:
    """Residuals of the group and norm axioms on seeded samples.

    Returns relative componentwise residuals for associativity, inverse,
    dilation homomorphism, norm homogeneity and symmetry, plus the measured
    quasi-triangle constant.
    """
    rng = np.random.default_rng(seed)
    x, y, z = (random_points(g, n, rng) for _ in range(3))

    def rel(a, b):
        scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
        return float(np.max(np.abs(a - b) / scale))

    res = {}
    res["associativity"] = rel(multiply(g, multiply(g, x, y), z), multiply(g, x, multiply(g, y, z)))
    res["inverse"] = max(rel(multiply(g, x, inverse(g, x)), 0 * x),
                         rel(multiply(g, inverse(g, x), x), 0 * x))
    res["identity"] = rel(multiply(g, x, np.zeros_like(x)), x)
    res["dilation_homomorphism"] = max(
        rel(dilate(g, r, multiply(g, x, y)), multiply(g, dilate(g, r, x), dilate(g, r, y)))
        for r in radii)
    res["norm_homogeneity"] = max(rel(hom_norm(g, dilate(g, r, x)), r * hom_norm(g, x)) for r in radii)
    res["norm_symmetry"] = rel(hom_norm(g, inverse(g, x)), hom_norm(g, x))
    res["norm_identity"] = float(hom_norm(g, g.identity()))
    res["norm_positive"] = float(np.min(hom_norm(g, x)) > 0)
    res["quasi_triangle_C"] = quasi_triangle_constant(g, x, y)
    return res
