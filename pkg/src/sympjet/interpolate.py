"""Finite-point jet interpolation by symplectic shear words.

A point-mover word first carries the base point to the jet's target value
when they differ; the remaining stages interpolate the retargeted jet in
place, realizing its linear part through a factorization into shears and
then cancelling one homogeneous degree per stage via the Hamiltonian
decomposition of the residual.  Each stage's univariate functions are
anchored at the stage direction's pairing value of the base point, and
every stage respects a shared constraint set: flatness at marked points on
the diagonal line, exact fixing of marked points, and a sampled sup bound
on a compact region.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .defaults import DEFAULT_TOL, RESAMPLE_ROUNDS
from .errors import PreconditionError, ToleranceError
from .factor import factor_sp, shear_of_factor
from .jets import (JetMap, homogeneous_part, jet_compose, jet_invert,
                   linear_part)
from .osculate import anchored_one_function, constrained_polynomial
from .shears import Shear, Word, word_jet
from .symplectic import (J_matrix, hamiltonian_decompose, lambda_values,
                         omega, pullback_defect, symplectic_order,
                         symplectic_residual)


def delta_vector(dim: int) -> np.ndarray:
    return np.ones(dim, dtype=complex)


def diagonal_coefficient(point: np.ndarray, tol: float = DEFAULT_TOL) -> complex:
    """The gamma with point = gamma * (1,...,1); errors off the diagonal."""
    p = np.asarray(point, dtype=complex)
    gamma = complex(p.mean())
    if float(np.max(np.abs(p - gamma))) > tol * max(1.0, abs(gamma)):
        raise PreconditionError("point is not on the diagonal line",
                                {"point": p.tolist()})
    return gamma


@dataclass
class LambdaDiagnostic:
    images: list
    injective: bool
    min_gap: float

    def as_json(self) -> dict:
        return {"images": [[z.real, z.imag] for z in self.images],
                "injective": self.injective, "min_gap": self.min_gap}


def lambda_image_check(points: Sequence, v: Sequence[complex],
                       tol: float = DEFAULT_TOL) -> LambdaDiagnostic:
    """Whether the pairing functional separates the given points."""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts[None, :]
    images = lambda_values(pts, v)
    scale = max(1.0, float(np.max(np.abs(images))) if images.size else 1.0)
    min_gap = float("inf")
    injective = True
    for i in range(images.size):
        for j in range(i + 1, images.size):
            gap = abs(images[i] - images[j])
            min_gap = min(min_gap, gap)
            if gap <= tol * scale:
                injective = False
    if images.size <= 1:
        min_gap = float("inf")
    return LambdaDiagnostic(list(map(complex, images)), injective, min_gap)


# ---------------------------------------------------------------------------
# constraint bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlatSpec:
    point: np.ndarray
    order: int

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=complex))
        if self.order < 1:
            raise PreconditionError("flatness order must be >= 1")


@dataclass(frozen=True)
class StageBudget:
    """Per-stage sup budget eps/(k+1) and the shared flatness order."""

    eps: float
    stages: int
    flat_order: int

    @property
    def per_stage(self) -> float:
        return self.eps / (self.stages + 1)


@dataclass
class InterpolationJob:
    """Target jet plus the constraint set the output word must respect."""

    jet: JetMap
    flats: tuple = ()
    fixpoints: tuple = ()
    region: np.ndarray | None = None
    eps: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.flats = tuple(f if isinstance(f, FlatSpec) else FlatSpec(*f)
                           for f in self.flats)
        self.fixpoints = tuple(np.asarray(c, dtype=complex)
                               for c in self.fixpoints)
        if self.region is not None:
            self.region = np.asarray(self.region, dtype=complex)
            if self.region.ndim == 1:
                self.region = self.region[None, :]

    def validate(self, tol: float = DEFAULT_TOL) -> None:
        p = self.jet.base
        q = self.jet.constant_part()
        scale = 1.0 + float(max(np.max(np.abs(p)), np.max(np.abs(q))))
        for f in self.flats:
            diagonal_coefficient(f.point, tol)
            for x in (p, q):
                if float(np.max(np.abs(f.point - x))) <= 1e3 * tol * scale:
                    raise PreconditionError(
                        "flat point collides with the jet base or target",
                        {"point": f.point.tolist()})
        for c in self.fixpoints:
            diagonal_coefficient(c, tol)
            for x in (p, q):
                if float(np.max(np.abs(c - x))) <= 1e3 * tol * scale:
                    raise PreconditionError(
                        "fixpoint collides with the jet base or target",
                        {"point": c.tolist()})
        if self.region is not None:
            for x in (p, q):
                d = float(np.min(np.max(np.abs(self.region - x), axis=1)))
                if d <= 1e3 * tol * scale:
                    raise PreconditionError(
                        "region samples touch the jet base or target",
                        {"distance": d})
        if self.eps <= 0:
            raise PreconditionError("eps must be positive")


@dataclass
class _StageSites:
    """Lambda-images of the constraint set for one shear direction.

    Fixpoint images carry order 2: the double root pins the point and
    flattens the word's derivative there, which keeps later re-targeting
    through the word's inverse well conditioned.
    """

    flats: list            # (node, order)
    zeros: list            # nodes, rooted to order 2
    region: object | None  # padded sample cloud or None


def _pad_complex(samples: np.ndarray, radius: float,
                 directions: int = 8) -> np.ndarray:
    if radius <= 0:
        return samples
    offs = radius * np.exp(2j * np.pi * np.arange(directions) / directions)
    return np.concatenate([samples] + [samples + o for o in offs])


def _lam_point(v: np.ndarray, point: np.ndarray) -> complex:
    """lambda_v at one point, bit-identical to the shear's own evaluation."""
    n = v.size // 2
    return complex(point @ (J_matrix(n) @ v))


def _stage_sites(v: np.ndarray, anchor: complex, flats, fixpoints,
                 region: np.ndarray | None, wander: float,
                 tol: float = DEFAULT_TOL) -> _StageSites:
    """Transport constraints through the pairing functional lambda_v.

    Constraint nodes become exact polynomial roots, so the node arithmetic
    matches the shear's own evaluation bit for bit.  Flat nodes must stay
    away from the anchor (the leading-term site); fixpoints whose image
    equals the anchor bitwise are rooted by the leading factor already;
    near-collisions that are not bit-exact raise so the caller can re-seed
    the stage basis.
    """
    flat_nodes: list[tuple[complex, int]] = []
    zero_nodes: list[complex] = []
    raw: list[tuple[complex, int | None]] = []
    for f in flats:
        raw.append((_lam_point(v, f.point), f.order))
    for c in fixpoints:
        raw.append((_lam_point(v, c), None))
    scale = max([1e-9, abs(anchor)] + [abs(node) for node, _ in raw])
    for node, order in raw:
        if node == anchor:
            if order is None:
                continue  # the leading factor roots the anchor already
            raise PreconditionError(
                "flat point pairs onto the anchor along a stage direction",
                {"direction": v.tolist()})
        if abs(node - anchor) <= 2e-2 * scale:
            raise PreconditionError(
                "constraint image too close to the stage anchor",
                {"direction": v.tolist()})
        merged = False
        for idx, (nd, od) in enumerate(flat_nodes):
            if nd == node:
                if order is not None:
                    flat_nodes[idx] = (nd, max(od, order))
                merged = True
                break
            if abs(nd - node) <= 1e-6 * scale:
                raise PreconditionError(
                    "constraint pairing images nearly collide",
                    {"direction": v.tolist()})
        if merged:
            continue
        if any(z == node for z in zero_nodes):
            if order is None:
                continue
            zero_nodes.remove(node)
            flat_nodes.append((node, order))
            continue
        if any(abs(z - node) <= 1e-6 * scale for z in zero_nodes):
            raise PreconditionError(
                "constraint pairing images nearly collide",
                {"direction": v.tolist()})
        if order is None:
            zero_nodes.append(node)
        else:
            flat_nodes.append((node, order))
    samples = None
    if region is not None:
        images = lambda_values(region, v)
        samples = _pad_complex(images, wander * float(np.linalg.norm(v)))
    return _StageSites(flat_nodes, zero_nodes, samples)


# ---------------------------------------------------------------------------
# tame normalizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TameTarget:
    j: int
    gamma: complex
    order: int = 0


def tame_normalizer(n: int, targets: Sequence[TameTarget],
                    tol: float = DEFAULT_TOL) -> Word:
    """Three-shear word sending j*Delta to gamma_j*Delta, translation-like.

    The word is built along the directions J*Delta, Delta, J*Delta; each
    stage interpolates its values with the prescribed flatness through
    Hermite osculation.  The jet of the word at j*Delta agrees with the
    translation z -> gamma_j*Delta + (z - j*Delta) up to the given order.
    """
    from .osculate import OsculationConstraint, hermite_osculate

    targets = list(targets)
    if not targets:
        return Word(())
    dim = 2 * n
    delta = delta_vector(dim)
    dtilde = J_matrix(n) @ delta
    js = [t.j for t in targets]
    if len(set(js)) != len(js):
        raise PreconditionError("target indices must be distinct")
    gammas = [complex(t.gamma) for t in targets]
    gscale = max(1.0, max(abs(g) for g in gammas))
    for a in range(len(gammas)):
        for b in range(a + 1, len(gammas)):
            if abs(gammas[a] - gammas[b]) <= 1e3 * tol * gscale:
                raise PreconditionError(
                    "stage-3 pairing images collide: targets not distinct",
                    {"stage": 3, "values": [gammas[a], gammas[b]]})

    lam_delta_tilde = complex(omega(delta, dtilde))  # = -2n
    lam_on_delta = complex(omega(dtilde, delta))     # = +2n
    c1 = [OsculationConstraint(lam_delta_tilde * t.j,
                               (t.j,) + (0.0,) * t.order) for t in targets]
    c2 = [OsculationConstraint(lam_on_delta * t.j,
                               (t.gamma - t.j,) + (0.0,) * t.order)
          for t in targets]
    c3 = [OsculationConstraint(lam_delta_tilde * t.gamma,
                               (-t.j,) + (0.0,) * t.order) for t in targets]
    psi1 = Shear(dtilde, hermite_osculate(c1, tol))
    psi2 = Shear(delta, hermite_osculate(c2, tol))
    psi3 = Shear(dtilde, hermite_osculate(c3, tol))
    word = Word((psi3, psi2, psi1))

    for t in targets:
        got = word.apply(t.j * delta)
        want = t.gamma * delta
        if float(np.max(np.abs(got - want))) > 1e-9 * max(1.0, abs(t.gamma)):
            raise ToleranceError(
                "normalizer point mapping failed",
                {"j": t.j, "error": float(np.max(np.abs(got - want)))})
    return word


# ---------------------------------------------------------------------------
# point mover
# ---------------------------------------------------------------------------


def _collides(zp: complex, sites: Sequence[complex], scale: float,
              margin: float) -> bool:
    return any(abs(zp - s) <= margin * scale for s in sites)


def _single_mover(p: np.ndarray, q: np.ndarray, flats, fixpoints,
                  region: np.ndarray | None, eps: float,
                  tol: float) -> Word | None:
    """One-shear route p -> q; None when the pairing geometry degenerates."""
    v = q - p
    dim = p.size
    delta = delta_vector(dim)
    lam_delta = complex(omega(delta, v))
    vscale = max(1.0, float(np.linalg.norm(v)))
    if abs(lam_delta) <= 1e-9 * vscale * np.sqrt(dim):
        return None
    zp = _lam_point(v, p)
    nodes = [_lam_point(v, f.point) for f in flats]
    nodes += [_lam_point(v, c) for c in fixpoints]
    scale = max(1.0, abs(zp), max((abs(s) for s in nodes), default=0.0))
    # generous clearance: crowded nodes give the shear huge local slopes
    if _collides(zp, nodes, scale, 5e-2):
        return None
    lam_region = None
    if region is not None:
        lam_region = lambda_values(region, v)
        from .osculate import _closest_hull_point
        dist = abs(_closest_hull_point(lam_region, zp) - zp)
        if dist <= 1e-6 * max(scale, float(np.max(np.abs(lam_region)))):
            return None
    flat_nodes: list[tuple[complex, int]] = []
    zero_nodes: list[complex] = []
    for node, order in \
            [(_lam_point(v, f.point), f.order) for f in flats] + \
            [(_lam_point(v, c), None) for c in fixpoints]:
        hit = False
        for idx, (nd, od) in enumerate(flat_nodes):
            if nd == node:
                if order is not None:
                    flat_nodes[idx] = (nd, max(od, order))
                hit = True
                break
            if abs(nd - node) <= 1e-7 * scale:
                return None
        if hit:
            continue
        if any(z == node for z in zero_nodes):
            if order is None:
                continue
            zero_nodes.remove(node)
            flat_nodes.append((node, order))
            continue
        if any(abs(z - node) <= 1e-7 * scale for z in zero_nodes):
            return None
        if order is None:
            zero_nodes.append(node)
        else:
            flat_nodes.append((node, order))
    try:
        f = anchored_one_function(
            zp, flats=flat_nodes + [(z, 2) for z in zero_nodes],
            region=lam_region,
            eps=eps / float(np.linalg.norm(v)) if region is not None else 1.0,
            tol=tol)
    except (PreconditionError, ToleranceError):
        return None
    return Word((Shear(v, f),))


def point_mover(p: Sequence[complex], q: Sequence[complex], flats=(),
                fixpoints=(), region: np.ndarray | None = None,
                eps: float = 0.5, seed: int = 0,
                tol: float = DEFAULT_TOL) -> Word:
    """A shear word with F(p) = q, flat at marked points, fixing others.

    Uses a single shear along q - p when the pairing functional separates
    the data; otherwise routes through a seeded intermediate point with two
    shears, each run at half the sup budget and the second on the image of
    the region under the first.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    flats = tuple(f if isinstance(f, FlatSpec) else FlatSpec(*f) for f in flats)
    fixpoints = tuple(np.asarray(c, dtype=complex) for c in fixpoints)
    scale = 1.0 + float(max(np.max(np.abs(p)), np.max(np.abs(q))))
    if float(np.max(np.abs(p - q))) <= tol * scale:
        raise PreconditionError("source and target coincide")
    best = None
    direct = _single_mover(p, q, flats, fixpoints, region, eps, tol)
    if direct is not None:
        # crowded constraint geometry distorts the word violently near p,
        # which poisons everything built on top of its jet
        cond = float(np.linalg.cond(direct.jacobian(p)))
        if cond <= 3e3:
            return direct
        best = (cond, direct)
    rng = np.random.default_rng(seed)
    dim = p.size
    delta = delta_vector(dim)
    for _ in range(4 * RESAMPLE_ROUNDS):
        r = 0.5 * (p + q) + 0.35 * scale * (rng.standard_normal(dim)
                                            + 1j * rng.standard_normal(dim))
        v1 = r - p
        v2 = q - r
        nv1 = float(np.linalg.norm(v1))
        nv2 = float(np.linalg.norm(v2))
        if min(nv1, nv2) < 1e-2 * scale:
            continue
        if abs(omega(v1, delta)) <= 0.25 * nv1 * np.sqrt(dim) or \
                abs(omega(v2, delta)) <= 0.25 * nv2 * np.sqrt(dim):
            continue
        first = _single_mover(p, r, flats, fixpoints, region, eps / 2, tol)
        if first is None:
            continue
        region2 = first.apply(region) if region is not None else None
        second = _single_mover(r, q, flats, fixpoints, region2, eps / 2, tol)
        if second is None:
            continue
        word = Word(second.factors + first.factors)
        # a crowded shear geometry gives huge local distortion at p
        cond = float(np.linalg.cond(word.jacobian(p)))
        if best is None or cond < best[0]:
            best = (cond, word)
        if cond <= 3e3:
            return word
    if best is not None and best[0] <= 1e6:
        return best[1]
    raise PreconditionError(
        "no valid intermediate point found for the two-stage route",
        {"p": p.tolist(), "q": q.tolist()})


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def linear_stage(Q: np.ndarray, *, anchor: np.ndarray | None = None,
                 flats=(), fixpoints=(),
                 region: np.ndarray | None = None,
                 eps_stage: float | None = None, seed: int = 0,
                 tol: float = DEFAULT_TOL,
                 hypothesis_tol: float | None = None) -> Word:
    """A shear word whose linear part at the anchor point is Q.

    With constraints present, Q is factored through the logarithm frame
    (fixed directions pairing the diagonal line with unit margins, small
    slopes), falling back to validated transvections and then to elementary
    block factors; each factor's linear function is upgraded to a
    constrained one anchored at the factor's pairing value of the anchor
    point, so the word fixes that point exactly and leaves the marked
    points alone.  Without constraints every factor stays an exactly
    linear shear.
    """
    Q = np.asarray(Q, dtype=complex)
    dim = Q.shape[0]
    point = np.zeros(dim, dtype=complex) if anchor is None else \
        np.asarray(anchor, dtype=complex)
    if float(np.max(np.abs(Q - np.eye(dim)))) <= tol:
        return Word(())
    constrained = bool(flats) or bool(fixpoints) or region is not None \
        or float(np.max(np.abs(point))) > tol
    ftol = max(tol, hypothesis_tol or 0.0)
    if not constrained:
        fw = factor_sp(Q, seed, mode="transvections", tol=ftol)
        word = Word(tuple(shear_of_factor(f) for f in fw.factors))
        got = linear_part(word_jet(word, point, 1))
        err = float(np.max(np.abs(got - Q))) / max(1.0, float(np.max(np.abs(Q))))
        if err > max(1e-8, hypothesis_tol or 0.0):
            raise ToleranceError("linear stage does not reproduce the matrix",
                                 {"relative_residual": err})
        return word

    delta = delta_vector(dim)
    wander = eps_stage if eps_stage is not None else 0.0

    def anchor_clear(v):
        # the constraint images must keep away from this direction's anchor
        zp = _lam_point(v, point)
        nodes = [_lam_point(v, f.point) for f in flats]
        nodes += [_lam_point(v, c) for c in fixpoints]
        if not nodes:
            return True
        scale = max([abs(zp)] + [abs(nd) for nd in nodes] + [1e-9])
        return min(abs(nd - zp) for nd in nodes) > 2.5e-2 * scale

    def healthy(v):
        nv = float(np.linalg.norm(v))
        return nv > 1e-12 and abs(omega(delta, v)) >= 0.5 * nv \
            and anchor_clear(v)

    def dress(fw):
        L = max(1, len(fw))
        shears = []
        for f in fw.factors:
            base = shear_of_factor(f)
            slope = complex(base.f.coeffs[1]) if base.f.degree >= 1 else 0.0
            if slope == 0:
                continue
            zp = _lam_point(base.v, point)
            sites = _stage_sites(base.v, zp, flats, fixpoints, region,
                                 wander, tol)
            eps_f = None
            if region is not None and eps_stage is not None:
                eps_f = eps_stage / (L * max(float(np.linalg.norm(base.v)),
                                             1e-9))
            g = constrained_polynomial(
                zp, 1, slope,
                flats=list(sites.flats) + [(z, 2) for z in sites.zeros],
                region=sites.region if eps_f is not None else None,
                eps=eps_f if eps_f is not None else 1.0, tol=tol)
            shears.append(Shear(base.v, g))
        return Word(tuple(shears))

    word = None
    last_exc = None
    for attempt in range(3):
        try:
            if attempt == 0:
                fw = factor_sp(Q, seed, mode="frame", tol=ftol)
            elif attempt == 1:
                fw = factor_sp(Q, seed, mode="transvections", tol=ftol,
                               direction_ok=healthy)
            else:
                fw = factor_sp(Q, seed, mode="elementary", tol=ftol)
            word = dress(fw)
            break
        except (PreconditionError, ToleranceError) as exc:
            last_exc = exc
            continue
    if word is None:
        raise ToleranceError("linear stage construction failed",
                             {"reason": str(last_exc)})
    got = linear_part(word_jet(word, point, 1))
    err = float(np.max(np.abs(got - Q))) / max(1.0, float(np.max(np.abs(Q))))
    if err > max(1e-8, hypothesis_tol or 0.0):
        raise ToleranceError("linear stage does not reproduce the matrix",
                             {"relative_residual": err})
    return word


def higher_stage(residual: JetMap, r: int, *, flats=(), fixpoints=(),
                 region: np.ndarray | None = None,
                 eps_stage: float | None = None, seed: int = 0,
                 tol: float = DEFAULT_TOL,
                 hypothesis_tol: float | None = None) -> Word:
    """Shears cancelling the degree-r part of a residual jet id + P_r + ...

    Decomposes P_r into paired-power fields c_j (b_j^T J w)^r b_j in local
    coordinates at the residual's base point and emits one shear per term,
    its univariate function anchored at the direction's pairing value of the
    base point with exact degree-r leading coefficient; the basis is
    re-seeded when a pairing image collides with a constraint site.
    """
    dim = residual.dim
    point = residual.base
    if r < 2 or r > residual.order:
        raise PreconditionError(f"stage degree {r} out of range")
    hyp = hypothesis_tol if hypothesis_tol is not None else max(tol, 1e-7)
    so = symplectic_order(residual, hyp)
    if so < min(r, residual.order - 1):
        raise PreconditionError(
            "residual is not symplectic to the stage order",
            {"symplectic_order": so, "required": min(r, residual.order - 1)})
    P_r = homogeneous_part(residual, r)
    scale = max(1.0, residual.max_abs_coeff())
    if max(c.max_abs_coeff() for c in P_r) <= tol * scale:
        return Word(())
    constrained = bool(flats) or bool(fixpoints) or region is not None \
        or float(np.max(np.abs(point))) > tol
    delta = delta_vector(dim)
    direction_ok = None
    if constrained:
        # constraints live near the diagonal line; keep its pairing image
        # comparable to the direction's size, and keep the constraint nodes
        # away from this direction's anchor value
        def direction_ok(b):
            if abs(omega(delta, b)) < 0.8 * float(np.linalg.norm(b)):
                return False
            zp = _lam_point(b, point)
            nodes = [_lam_point(b, f.point) for f in flats]
            nodes += [_lam_point(b, c) for c in fixpoints]
            if not nodes:
                return True
            scale = max([abs(zp)] + [abs(nd) for nd in nodes] + [1e-9])
            return min(abs(nd - zp) for nd in nodes) > 2.5e-2 * scale
    last: dict = {}
    sign = 1.0 if r % 2 == 0 else -1.0
    for round_idx in range(RESAMPLE_ROUNDS):
        try:
            dec = hamiltonian_decompose(P_r, seed + 7919 * round_idx,
                                        degree=r, tol=max(tol, hyp),
                                        direction_ok=direction_ok)
            nh = dec.directions.shape[0]
            shears = []
            for c_j, b_j in zip(dec.coefficients, dec.directions):
                if abs(c_j) <= 1e-14 * scale:
                    continue
                zp = _lam_point(b_j, point)
                sites = _stage_sites(b_j, zp, flats, fixpoints, region,
                                     eps_stage or 0.0, tol)
                eps_f = None
                if region is not None and eps_stage is not None:
                    eps_f = eps_stage / (nh * max(float(np.linalg.norm(b_j)),
                                                  1e-9))
                # local leading term c_j lambda_b(w)^r needs the sign of
                # (w^T J b)^r = (-1)^r (b^T J w)^r
                g = constrained_polynomial(
                    zp, r, sign * complex(c_j),
                    flats=list(sites.flats) + [(z, 2) for z in sites.zeros],
                    region=sites.region if eps_f is not None else None,
                    eps=eps_f if eps_f is not None else 1.0, tol=tol)
                shears.append(Shear(b_j, g))
            return Word(tuple(shears))
        except (PreconditionError, ToleranceError) as exc:
            last = {"round": round_idx, "reason": str(exc)}
            continue
    raise ToleranceError("stage construction failed after reseeding", last)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def _staged_interpolate(jet: JetMap, flats, fixpoints,
                        region: np.ndarray | None, eps: float, seed: int,
                        tol: float,
                        hypothesis_tol: float | None = None) -> Word:
    """Stagewise interpolation of a jet fixing its own base point."""
    dim = jet.dim
    k = jet.order
    point = jet.base
    hyp = hypothesis_tol if hypothesis_tol is not None else max(tol, 1e-7)
    budget = StageBudget(eps, k, max((f.order for f in flats), default=1))
    Q = linear_part(jet)
    res_q = symplectic_residual(Q)
    if res_q > hyp * max(1.0, float(np.max(np.abs(Q))) ** 2):
        raise PreconditionError("jet linear part is not symplectic",
                                {"residual": res_q})
    word = linear_stage(Q, anchor=point, flats=flats, fixpoints=fixpoints,
                        region=region,
                        eps_stage=budget.per_stage if region is not None else None,
                        seed=seed, tol=tol, hypothesis_tol=hyp)
    scale = max(1.0, jet.max_abs_coeff())
    residual = jet
    if len(word):
        inv_jet = jet_invert(word_jet(word, point, k))
        residual = jet_compose(jet, inv_jet, tol=max(tol, 1e-6))
    lin_err = float(np.max(np.abs(linear_part(residual) - np.eye(dim))))
    if lin_err > 0.3 * scale:
        raise ToleranceError("linear stage residual is not unipotent",
                             {"residual": lin_err})
    for r in range(2, k + 1):
        stage = higher_stage(residual, r, flats=flats, fixpoints=fixpoints,
                             region=region,
                             eps_stage=budget.per_stage if region is not None else None,
                             seed=seed + r, tol=tol, hypothesis_tol=hyp)
        if len(stage):
            inv_jet = jet_invert(word_jet(stage, point, k))
            residual = jet_compose(residual, inv_jet, tol=max(tol, 1e-6))
            word = Word(stage.factors + word.factors)
        # floating-point leftovers here are cleaned by the refinement
        # pass on top of the assembled word; only gross failures abort
        low = 0.0
        ident = JetMap.identity(point, k)
        for a, b in zip(residual.components, ident.components):
            for e, c in a.sub(b).terms.items():
                if sum(e) <= r:
                    low = max(low, abs(c))
        if low > 0.3 * scale:
            raise ToleranceError(
                f"degree-{r} stage left low-order residual",
                {"residual": low})
    return word


def finite_jet_interpolate(job: InterpolationJob, tol: float = DEFAULT_TOL,
                           _refine: int = 2,
                           _hypothesis_tol: float | None = None) -> Word:
    """A shear word matching the job's jet at its base point to full order,
    flat to the prescribed orders at the marked diagonal points, fixing the
    marked fixpoints exactly, and moving the region samples by at most eps.

    When the base maps to a different point, a point-mover word runs first
    and the stages interpolate the retargeted jet anchored at the image
    point; every stage's univariate functions are anchored there directly,
    so no conjugation back and forth is needed.  If the assembled word's
    re-expanded jet misses the target beyond the floating-point floor,
    residual-correction words with error-sized coefficients are composed on
    top.
    """
    job.validate(tol)
    jet = job.jet
    k = jet.order
    if k < 1:
        raise PreconditionError("interpolation needs a jet of order >= 1")
    hyp = _hypothesis_tol if _hypothesis_tol is not None else max(tol, 1e-7)
    so = symplectic_order(jet, hyp)
    if so < k - 1:
        defect = pullback_defect(jet)
        raise PreconditionError(
            "target jet is not symplectic to its truncation order",
            {"symplectic_order": so, "required": k - 1,
             "worst_defect_term": repr(defect.worst_term())})
    p = jet.base
    q = jet.constant_part()
    scale = max(1.0, jet.max_abs_coeff())
    moved = float(np.max(np.abs(q - p))) > tol * max(1.0, float(np.max(np.abs(p))))
    mover = Word(())
    target = jet
    if moved:
        mover = point_mover(p, q, flats=job.flats, fixpoints=job.fixpoints,
                            region=job.region, eps=job.eps / 2.0,
                            seed=job.seed + 101, tol=tol)
        target = jet_compose(jet, jet_invert(word_jet(mover, p, k)),
                             tol=max(tol, 1e-6))
    stage_region = job.region
    if stage_region is not None and len(mover):
        stage_region = mover.apply(stage_region)
    stage_eps = job.eps / 2.0
    stages = _staged_interpolate(target, job.flats, job.fixpoints,
                                 stage_region, stage_eps, job.seed, tol,
                                 hypothesis_tol=hyp)
    word = Word.concat(stages, mover)
    final = word_jet(word, p, k)
    err = max(a.sub(b).max_abs_coeff()
              for a, b in zip(final.components, jet.components))
    passes = _refine
    while err > 1e-9 * scale and passes > 0:
        passes -= 1
        corr_jet = jet_compose(jet, jet_invert(final), tol=max(tol, 1e-6))
        corr_region = None
        if job.region is not None:
            corr_region = word.apply(job.region)
        corr_job = InterpolationJob(
            jet=corr_jet, flats=job.flats, fixpoints=job.fixpoints,
            region=corr_region, eps=job.eps / 8.0, seed=job.seed + 9001)
        try:
            corr = finite_jet_interpolate(
                corr_job, tol, _refine=0,
                _hypothesis_tol=min(0.3, max(hyp, 200.0 * err / scale)))
        except (PreconditionError, ToleranceError):
            break
        word = Word.concat(corr, word)
        final = word_jet(word, p, k)
        err = max(a.sub(b).max_abs_coeff()
                  for a, b in zip(final.components, jet.components))
    if err > 1e-6 * scale:
        raise ToleranceError("interpolation jet mismatch", {"residual": err})
    return word


# ---------------------------------------------------------------------------
# multi-point driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StageJob:
    alpha: int
    jet: JetMap


def multi_point_stage(jobs: Sequence[StageJob], horizon: int,
                      seed: int = 0, tol: float = DEFAULT_TOL) -> Word:
    """Finite staged interpolation at increasing diagonal lattice points.

    Stage k+1 re-targets its jet through the inverse of the composition so
    far, stays flat at every point already handled, and fixes all diagonal
    lattice points above its own up to the horizon.
    """
    jobs = list(jobs)
    if not jobs:
        return Word(())
    dim = jobs[0].jet.dim
    delta = delta_vector(dim)
    alphas = [j.alpha for j in jobs]
    if any(a <= 0 for a in alphas) or sorted(alphas) != alphas \
            or len(set(alphas)) != len(alphas):
        raise PreconditionError(
            "stage points must be strictly increasing positive integers")
    if horizon <= alphas[-1]:
        raise PreconditionError("horizon must exceed the last stage point")
    for job in jobs:
        base_want = job.alpha * delta
        if float(np.max(np.abs(job.jet.base - base_want))) > tol * job.alpha:
            raise PreconditionError(
                f"stage jet must be anchored at {job.alpha}*Delta")
        diagonal_coefficient(job.jet.constant_part(), max(tol, 1e-8))

    word = Word(())
    handled: list[tuple[np.ndarray, int]] = []
    for idx, job in enumerate(jobs):
        point = job.alpha * delta
        m = job.jet.order
        if len(word):
            here = word.apply(point)
            if float(np.max(np.abs(here - point))) > 1e-8 * job.alpha:
                raise ToleranceError(
                    "composition failed to fix the next stage point",
                    {"alpha": job.alpha})
            fk = word_jet(word, point, m)
            target = jet_compose(job.jet, jet_invert(fk), tol=max(tol, 1e-6))
        else:
            target = job.jet
        flats = tuple(FlatSpec(pt, order) for pt, order in handled)
        fixpoints = tuple(i * delta for i in range(job.alpha + 1, horizon + 1))
        sub = InterpolationJob(jet=target, flats=flats, fixpoints=fixpoints,
                               region=None, eps=1.0, seed=seed + 31 * idx)
        psi = finite_jet_interpolate(sub, tol)
        word = Word(psi.factors + word.factors)
        handled.append((np.asarray(job.jet.constant_part()), m + 1))
    return word
