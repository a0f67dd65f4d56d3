"""Truncated polynomial self-maps of C^(2n) anchored at a base point.

A ``JetMap`` stores its components in local coordinates ``w = z - p``; the
constant parts are the image of the base point.  Composition requires the
inner image to match the outer base, which keeps pipelines explicit about
where every jet lives.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .defaults import COND_BOUND, DEFAULT_TOL
from .errors import PreconditionError, ToleranceError
from .poly import PolyScalar, compose_truncated


class JetMap:
    """Degree-``order`` truncation of a holomorphic self-map at ``base``."""

    __slots__ = ("base", "order", "components")

    def __init__(self, base: Sequence[complex], order: int,
                 components: Sequence[PolyScalar]):
        self.base = np.asarray(base, dtype=complex)
        if self.base.ndim != 1:
            raise PreconditionError("base point must be a vector")
        if order < 0:
            raise PreconditionError(f"order must be non-negative, got {order}")
        dim = self.base.size
        comps = tuple(components)
        if len(comps) != dim:
            raise PreconditionError(
                f"expected {dim} components, got {len(comps)}")
        for c in comps:
            if c.dim != dim:
                raise PreconditionError("component dimension mismatch")
            if c.degree() > order:
                raise PreconditionError(
                    f"component degree {c.degree()} exceeds order {order}")
        self.order = int(order)
        self.components = comps

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls, base: Sequence[complex], order: int) -> "JetMap":
        base = np.asarray(base, dtype=complex)
        dim = base.size
        comps = []
        for i in range(dim):
            comps.append(PolyScalar.variable(dim, i).add(
                PolyScalar.constant(dim, base[i])))
        return cls(base, order, comps)

    @classmethod
    def from_linear(cls, base: Sequence[complex], matrix: np.ndarray,
                    order: int, const: Sequence[complex] | None = None) -> "JetMap":
        base = np.asarray(base, dtype=complex)
        matrix = np.asarray(matrix, dtype=complex)
        dim = base.size
        if const is None:
            const = base
        comps = []
        for i in range(dim):
            comps.append(PolyScalar.linear(matrix[i, :], const[i]))
        return cls(base, order, comps)

    # -- inspection ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.base.size

    def constant_part(self) -> np.ndarray:
        return np.array([c.constant_term() for c in self.components])

    def local_components(self) -> list[PolyScalar]:
        """Components with the constant term removed."""
        out = []
        for c in self.components:
            t = dict(c.terms)
            t.pop((0,) * self.dim, None)
            out.append(PolyScalar(self.dim, t))
        return out

    def evaluate(self, z: Sequence[complex]) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape != self.base.shape:
            raise PreconditionError("evaluation point dimension mismatch")
        w = z - self.base
        return np.array([c.evaluate(w) for c in self.components])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex) - self.base
        return np.stack([c.evaluate_many(pts) for c in self.components], axis=-1)

    def max_abs_coeff(self) -> float:
        return max(c.max_abs_coeff() for c in self.components)

    def truncate(self, order: int) -> "JetMap":
        return JetMap(self.base, min(order, self.order),
                      [c.truncate(order) for c in self.components])

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"JetMap(dim={self.dim}, order={self.order}, base={self.base})"


def poly_eval(obj, z):
    """Evaluate a PolyScalar, UniPoly, or JetMap at a point."""
    if isinstance(obj, JetMap):
        return obj.evaluate(z)
    if isinstance(obj, PolyScalar):
        return obj.evaluate(z)
    return obj(z)


def jet_sub(a: JetMap, b: JetMap) -> list[PolyScalar]:
    return [ca.sub(cb) for ca, cb in zip(a.components, b.components)]


def jet_compose(outer: JetMap, inner: JetMap, tol: float = DEFAULT_TOL) -> JetMap:
    """Taylor coefficients of ``outer ∘ inner`` at ``inner.base``.

    The inner constant part must match the outer base within ``tol``;
    the mismatch is dropped exactly so the truncation stays exact.
    """
    if outer.dim != inner.dim:
        raise PreconditionError("jet dimension mismatch")
    order = min(outer.order, inner.order)
    const = inner.constant_part()
    gap = float(np.max(np.abs(const - outer.base)))
    scale = 1.0 + float(np.max(np.abs(outer.base)))
    if gap > tol * scale:
        raise PreconditionError(
            "inner image does not match outer base",
            {"gap": gap, "tolerance": tol * scale})
    inner_local = inner.local_components()
    memo: dict = {}
    comps = [compose_truncated(c.truncate(order), inner_local, order, memo)
             for c in outer.components]
    return JetMap(inner.base, order, comps)


def linear_part(F: JetMap) -> np.ndarray:
    """Jacobian of the truncation at the base point."""
    if F.order < 1:
        raise PreconditionError("linear part needs order >= 1")
    dim = F.dim
    M = np.zeros((dim, dim), dtype=complex)
    for i, c in enumerate(F.components):
        for k in range(dim):
            e = [0] * dim
            e[k] = 1
            M[i, k] = c.coeff(e)
    return M


def homogeneous_part(F: JetMap, r: int) -> tuple[PolyScalar, ...]:
    """Degree-``r`` terms of every component, in local coordinates."""
    if r > F.order:
        raise PreconditionError(
            f"degree {r} exceeds truncation order {F.order}")
    return tuple(c.homogeneous_component(r) for c in F.components)


def jet_invert(F: JetMap, tol: float = DEFAULT_TOL,
               cond_bound: float = COND_BOUND) -> JetMap:
    """Compositional inverse jet, anchored at the image of ``F.base``."""
    A = linear_part(F)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > cond_bound:
        raise PreconditionError(
            "linear part is singular or too ill-conditioned to invert",
            {"condition": cond})
    m = F.order
    p = F.base
    q = F.constant_part()
    Ainv = np.linalg.inv(A)
    G = JetMap.from_linear(q, Ainv, m, const=p)
    identity = JetMap.identity(p, m)
    scale = max(1.0, F.max_abs_coeff())
    best: tuple[float, JetMap] | None = None
    for _ in range(m + 3):
        E = jet_sub(jet_compose(G, F, tol=max(tol, 1e-6)), identity)
        err = max(c.max_abs_coeff() for c in E)
        if best is None or err < best[0]:
            best = (err, G)
        if err <= 1e-13 * scale:
            break
        G_local = G.local_components()
        memo: dict = {}
        corr = [compose_truncated(c, G_local, m, memo) for c in E]
        G = JetMap(q, m, [a.sub(b) for a, b in zip(G.components, corr)])
    err, G = best
    if err > 1e-6 * scale:
        raise ToleranceError("jet inversion did not converge",
                             {"residual": err})
    return G
