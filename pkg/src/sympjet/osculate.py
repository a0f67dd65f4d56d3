"""Constrained univariate polynomial factory.

Hermite osculation matches prescribed Taylor expansions at finitely many
points; the constrained factory manufactures polynomials with an exact
leading term at a marked point, prescribed flatness orders, prescribed
roots, and a certified small sup on a compact region separated from the
marked point by a half-plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log
from typing import Sequence

import numpy as np

from .defaults import DEFAULT_TOL, MAX_DAMPING_DEGREE
from .errors import PreconditionError, ToleranceError
from .poly import (UniPoly, conv_trunc, pow_trunc_series, series_inverse,
                   shift_coeffs)


@dataclass(frozen=True)
class OsculationConstraint:
    """Prescribed expansion of f at ``point``: f = sum jet[t] (z-point)^t + ..."""

    point: complex
    jet: tuple

    def __post_init__(self):
        object.__setattr__(self, "point", complex(self.point))
        object.__setattr__(self, "jet", tuple(complex(c) for c in self.jet))
        if not self.jet:
            raise PreconditionError("constraint carries no coefficients")

    @property
    def order(self) -> int:
        return len(self.jet) - 1


def _closest_hull_point(samples: np.ndarray, target: complex = 0.0) -> complex:
    """Closest point of the convex hull of ``samples`` to ``target``.

    The minimum over all pairwise segments (plus vertices) equals the hull
    distance because the hull boundary is covered by pairwise segments.
    """
    s = np.asarray(samples, dtype=complex).ravel() - target
    if s.size == 0:
        raise PreconditionError("region has no samples")
    best = s[np.argmin(np.abs(s))]
    if s.size > 1:
        a = s[:, None]
        d = s[None, :] - a
        denom = np.abs(d) ** 2
        denom[denom == 0] = 1.0
        t = np.clip(-np.real(np.conj(d) * a) / denom, 0.0, 1.0)
        pts = a + t * d
        idx = np.unravel_index(np.argmin(np.abs(pts)), pts.shape)
        cand = pts[idx]
        if abs(cand) < abs(best):
            best = cand
    return complex(best + target)


@dataclass(frozen=True)
class CompactRegion:
    """Finite sample cloud in C with a separating half-plane from 0.

    ``Re(conj(u) * z) >= margin`` for every sample, with ``margin > 0``;
    ``radius`` is the largest sample magnitude.
    """

    samples: np.ndarray
    u: complex
    margin: float
    radius: float

    @classmethod
    def from_samples(cls, samples: Sequence[complex],
                     tol: float = DEFAULT_TOL) -> "CompactRegion":
        s = np.asarray(samples, dtype=complex).ravel()
        if s.size == 0:
            raise PreconditionError("region needs at least one sample")
        closest = _closest_hull_point(s)
        dist = abs(closest)
        scale = max(1.0, float(np.max(np.abs(s))))
        if dist <= 100 * tol * scale:
            raise PreconditionError(
                "region hull contains (or nearly contains) the origin",
                {"hull_distance": dist})
        u = closest / dist
        margin = float(np.min(np.real(np.conj(u) * s)))
        if margin <= 0:
            raise PreconditionError("separator margin is not positive",
                                    {"margin": margin})
        return cls(s, complex(u), margin, float(np.max(np.abs(s))))

    @classmethod
    def explicit(cls, samples: Sequence[complex], u: complex, margin: float,
                 tol: float = DEFAULT_TOL) -> "CompactRegion":
        s = np.asarray(samples, dtype=complex).ravel()
        u = complex(u) / abs(complex(u))
        if margin <= 0:
            raise PreconditionError("margin must be positive")
        lows = float(np.min(np.real(np.conj(u) * s)))
        if lows < margin - tol * max(1.0, margin):
            raise PreconditionError(
                "samples violate the declared separator",
                {"declared": margin, "actual": lows})
        return cls(s, u, float(margin), float(np.max(np.abs(s))))


def hermite_osculate(constraints: Sequence[OsculationConstraint],
                     tol: float = DEFAULT_TOL) -> UniPoly:
    """The unique polynomial of minimal degree matching every expansion.

    Built in Lagrange-Hermite product form: each node contributes a low
    degree correction times factors vanishing to the prescribed order at the
    other nodes, so cross-node flatness is exact by construction.  Verified
    by re-expansion at every node.
    """
    cons = list(constraints)
    if not cons:
        raise PreconditionError("no constraints given")
    pts = np.array([c.point for c in cons])
    scale_pts = max(1.0, float(np.max(np.abs(pts))))
    for i in range(len(cons)):
        for j in range(i + 1, len(cons)):
            if abs(pts[i] - pts[j]) <= 1e3 * tol * scale_pts:
                raise PreconditionError(
                    "constraint points are not distinct",
                    {"points": [pts[i], pts[j]]})
    if len(cons) == 1:
        c = cons[0]
        return UniPoly(shift_coeffs(np.array(c.jet, dtype=complex), -c.point)) \
            if c.point != 0 else UniPoly(np.array(c.jet, dtype=complex))

    terms = []
    for j, cj in enumerate(cons):
        m = cj.order
        bases = []
        taylor = np.array([1.0 + 0j])
        for i, ci in enumerate(cons):
            if i == j:
                continue
            gap = cj.point - ci.point
            base = np.array([-ci.point / gap, 1.0 / gap])
            bases.append((base, ci.order + 1))
            local0 = (cj.point - ci.point) / gap  # exactly 1 in exact math
            local = np.array([local0, 1.0 / gap])
            taylor = conv_trunc(
                taylor, pow_trunc_series(local, ci.order + 1, m), m)
        correction = conv_trunc(np.array(cj.jet, dtype=complex),
                                series_inverse(taylor, m), m)
        h_global = shift_coeffs(correction, -cj.point)
        terms.append((1.0, [(h_global, 1)] + bases))
    f = UniPoly.from_terms(terms)

    worst = 0.0
    jet_scale = max(1.0, max(max(abs(c) for c in cj.jet) for cj in cons))
    for cj in cons:
        got = f.taylor(cj.point, cj.order)
        want = np.array(cj.jet, dtype=complex)
        worst = max(worst, float(np.max(np.abs(got - want))))
    if worst > max(1e-9, tol) * jet_scale:
        cond = _confluent_condition(cons)
        raise ToleranceError(
            "osculation re-expansion mismatch",
            {"residual": worst, "condition_estimate": cond})
    return f


def _confluent_condition(cons) -> float:
    """Condition estimate of the (scaled) confluent Vandermonde system."""
    total = sum(c.order + 1 for c in cons)
    if total > 120:
        return float("nan")
    pts = np.array([c.point for c in cons])
    mu = pts.mean()
    s = max(1.0, float(np.max(np.abs(pts - mu))))
    rows = []
    from math import comb as _comb
    for c in cons:
        x = (c.point - mu) / s
        for t in range(c.order + 1):
            rows.append([_comb(k, t) * x ** (k - t) if k >= t else 0.0
                         for k in range(total)])
    return float(np.linalg.cond(np.array(rows, dtype=complex)))


def attenuation_factor(K: CompactRegion, eps: float,
                       max_degree: int = MAX_DAMPING_DEGREE) -> UniPoly:
    """q with q(0) = 1 exactly and max |q| over the region samples < eps.

    q(z) = (1 - c conj(u) z)^d with c = margin / radius^2, so the factor has
    modulus at most sqrt(1 - (margin/radius)^2) < 1 on the separated side.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    c = K.margin / K.radius ** 2
    base = np.array([1.0, -c * np.conj(K.u)])
    vals = np.abs(1.0 - c * np.conj(K.u) * K.samples)
    worst = float(np.max(vals))
    if worst >= 1.0:
        raise PreconditionError(
            "separator does not damp the region",
            {"max_base_modulus": worst})
    d = max(1, ceil(log(eps) / log(worst)) if eps < 1 else 1)
    while d <= max_degree:
        if float(np.max(vals ** d)) < eps:
            return UniPoly.from_product(1.0, [(base, d)])
        d += max(1, d // 8)
    raise ToleranceError(
        "required damping degree exceeds the cap",
        {"margin": K.margin, "radius": K.radius, "cap": max_degree})


def constrained_polynomial(anchor: complex, r: int, beta: complex,
                           flats: Sequence[tuple[complex, int]] = (),
                           zeros: Sequence[complex] = (),
                           region: Sequence[complex] | None = None,
                           eps: float = 1.0,
                           max_degree: int = MAX_DAMPING_DEGREE,
                           tol: float = DEFAULT_TOL) -> UniPoly:
    """f(z) = beta (z - anchor)^r (1 + O(z - anchor)) with constraints.

    The degree-r leading coefficient at the anchor is beta up to a final
    rounding, f vanishes to order N at each flat point, vanishes at each
    prescribed zero exactly to the bit (monic root factors, normalizations
    folded into the scalar), and has sampled sup below eps on the region.
    The damping factor has value 1 at the anchor, so the leading behaviour
    survives it.
    """
    anchor = complex(anchor)
    sites = [complex(a) for a, _ in flats] + [complex(c) for c in zeros]
    ascale = max(1.0, abs(anchor), max((abs(s) for s in sites), default=0.0))
    for s in sites:
        if abs(s - anchor) <= tol * ascale:
            raise PreconditionError(
                "constraint point collides with the anchor",
                {"anchor": anchor, "point": s})
    for i in range(len(sites)):
        for j in range(i + 1, len(sites)):
            if abs(sites[i] - sites[j]) <= tol * ascale:
                raise PreconditionError(
                    "flat points and zeros must be pairwise distinct",
                    {"points": [sites[i], sites[j]]})
    scalar = complex(beta)
    bases: list[tuple[np.ndarray, int]] = []
    if r > 0:
        bases.append((np.array([-anchor, 1.0]), int(r)))
    for a, N in flats:
        a = complex(a)
        bases.append((np.array([-a, 1.0]), int(N)))
        scalar *= (1.0 / (anchor - a)) ** int(N)
    for c in zeros:
        c = complex(c)
        bases.append((np.array([-c, 1.0]), 1))
        scalar *= 1.0 / (anchor - c)
    if region is not None:
        reg = np.asarray(region, dtype=complex).ravel()
        K = CompactRegion.from_samples(reg - anchor, tol=tol)
        probe = UniPoly.from_product(scalar, bases)
        mg = float(np.max(np.abs(probe(reg))))
        if mg >= eps:
            q = attenuation_factor(K, eps / mg * (1 - 1e-9),
                                   max_degree=max_degree)
            for b, p in q._terms[0][1]:
                # re-anchor the damping base so its value at the anchor is 1
                bases.append((shift_coeffs(b, -anchor) if anchor != 0 else b, p))
    f = UniPoly.from_product(scalar, bases)
    if region is not None:
        sup = float(np.max(np.abs(f(np.asarray(region, complex).ravel()))))
        if sup >= eps:
            raise ToleranceError("region sup not achieved",
                                 {"sup": sup, "eps": eps})
    return f


def magic_function(r: int, beta: complex,
                   flats: Sequence[tuple[complex, int]] = (),
                   zeros: Sequence[complex] = (),
                   K: CompactRegion | None = None,
                   eps: float = 1.0,
                   max_degree: int = MAX_DAMPING_DEGREE,
                   tol: float = DEFAULT_TOL) -> UniPoly:
    """f(z) = beta z^r (1 + O(z)) with prescribed flats, roots, and smallness.

    The leading coefficient at 0 is exactly beta; f vanishes to order N at
    each flat point, vanishes at each prescribed zero, and has sampled sup
    below eps on the region when one is given.
    """
    for s in [a for a, _ in flats] + list(zeros):
        if complex(s) == 0:
            raise PreconditionError("flat points and zeros must avoid 0")
    return constrained_polynomial(
        0.0, r, beta, flats=flats, zeros=zeros,
        region=None if K is None else K.samples, eps=eps,
        max_degree=max_degree, tol=tol)


def anchored_one_function(anchor: complex,
                          flats: Sequence[tuple[complex, int]] = (),
                          zeros: Sequence[complex] = (),
                          region: Sequence[complex] | None = None,
                          eps: float = 1.0,
                          max_degree: int = MAX_DAMPING_DEGREE,
                          tol: float = DEFAULT_TOL) -> UniPoly:
    """f with f(anchor) = 1 up to a final rounding, flats/roots exact."""
    return constrained_polynomial(anchor, 0, 1.0, flats=flats, zeros=zeros,
                                  region=region, eps=eps,
                                  max_degree=max_degree, tol=tol)
