"""Discrete-set constructions: gradient interpolation, Lagrangian-projection
taming, set splitting, symplectic plane embeddings, the determinant
projection bound, and the shell-based unavoidable-set generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi
from typing import Sequence

import numpy as np

from .defaults import DEFAULT_TOL
from .errors import PreconditionError, ToleranceError
from .jets import JetMap
from .poly import PolyScalar
from .shears import GradShear, Word
from .symplectic import homog_exponents, pullback_defect


@dataclass(frozen=True)
class DiscreteSet:
    """Finitely many pairwise-distinct points of C^(2n)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[None, :]
        object.__setattr__(self, "points", pts)
        m = pts.shape[0]
        for i in range(m):
            for j in range(i + 1, m):
                if np.max(np.abs(pts[i] - pts[j])) == 0:
                    raise PreconditionError("points repeat", {"indices": (i, j)})

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def gradient_interpolant(points: np.ndarray, targets: np.ndarray,
                         tol: float = DEFAULT_TOL,
                         max_degree: int = 12) -> PolyScalar:
    """A polynomial f on C^n with grad f(w_k) = g_k at every given point.

    Solves for monomial coefficients at adaptively increasing degree after
    centring and scaling the points; the gradient residual is verified at
    every point before returning.
    """
    w = np.asarray(points, dtype=complex)
    g = np.asarray(targets, dtype=complex)
    if w.ndim == 1:
        w = w[None, :]
    if g.ndim == 1:
        g = g[None, :]
    if w.shape != g.shape:
        raise PreconditionError("points/targets shape mismatch")
    m, n = w.shape
    for i in range(m):
        for j in range(i + 1, m):
            if np.max(np.abs(w[i] - w[j])) <= tol:
                raise PreconditionError("interpolation points repeat")
    if float(np.max(np.abs(g))) == 0.0:
        return PolyScalar.zero(n)
    mu = w.mean(axis=0)
    s = max(1.0, float(np.max(np.abs(w - mu))))
    u = (w - mu) / s
    gs = g * s

    degree = 1
    while True:
        exps = []
        for d in range(1, degree + 1):
            exps.extend(homog_exponents(n, d))
        exps_arr = np.array(exps, dtype=np.int64)
        cols = len(exps)
        rows = np.zeros((m * n, cols), dtype=complex)
        rhs = gs.reshape(-1)
        for t, e in enumerate(exps):
            for i in range(n):
                if e[i] == 0:
                    continue
                de = np.array(e, dtype=np.int64)
                de[i] -= 1
                vals = e[i] * np.prod(u ** de[None, :], axis=1)
                rows[i::n, t] = 0.0
                rows[np.arange(m) * n + i, t] = vals
        sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        resid = float(np.max(np.abs(rows @ sol - rhs)))
        if resid <= max(tol, 1e-10) * max(1.0, float(np.max(np.abs(gs)))):
            terms = {tuple(e): sol[t] for t, e in enumerate(exps)
                     if sol[t] != 0}
            f = _affine_pullback(PolyScalar(n, terms), mu, s)
            worst = 0.0
            for k in range(m):
                grad = np.array([f.derivative(i).evaluate(w[k])
                                 for i in range(n)])
                worst = max(worst, float(np.max(np.abs(grad - g[k]))))
            if worst <= 1e3 * max(tol, 1e-10) * max(1.0, float(np.max(np.abs(g)))):
                return f
        degree += 1
        if degree > max_degree:
            raise ToleranceError(
                "gradient interpolation failed at the degree cap",
                {"residual": resid, "degree_cap": max_degree})


def _affine_pullback(f_scaled: PolyScalar, mu: np.ndarray, s: float) -> PolyScalar:
    """f(w) = f_scaled((w - mu)/s) expanded in w."""
    n = f_scaled.dim
    scaled = PolyScalar(n, {e: c / s ** sum(e)
                            for e, c in f_scaled.terms.items()})
    return scaled.shift(-mu)


def lagrangian_tame_word(E: DiscreteSet, tol: float = DEFAULT_TOL) -> Word:
    """Two gradient shears sending the k-th point (z_k, w_k) to k e_1.

    Requires the second-block coordinates w_k to be pairwise distinct; the
    first shear straightens the z-block onto k e_1, the second flattens the
    w-block to zero.
    """
    pts = E.points
    m, dim = pts.shape
    n = dim // 2
    z = pts[:, :n]
    w = pts[:, n:]
    for i in range(m):
        for j in range(i + 1, m):
            if np.max(np.abs(w[i] - w[j])) <= tol * max(1.0, float(np.max(np.abs(w)))):
                raise PreconditionError(
                    "second-block projection is not injective; "
                    "separate the fibers first", {"indices": (i, j)})
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    targets1 = np.stack([-z[k] + (k + 1) * e1 for k in range(m)])
    f = gradient_interpolant(w, targets1, tol)
    psi1 = GradShear("first", f)
    mid = np.stack([(k + 1) * e1 for k in range(m)])
    g = gradient_interpolant(mid, -w, tol)
    psi2 = GradShear("second", g)
    word = Word((psi2, psi1))
    for k in range(m):
        want = np.zeros(dim, dtype=complex)
        want[0] = k + 1
        got = word.apply(pts[k])
        if float(np.max(np.abs(got - want))) > 1e-8 * (1 + k):
            raise ToleranceError("taming word failed end-to-end",
                                 {"index": k,
                                  "error": float(np.max(np.abs(got - want)))})
    return word


@dataclass
class FiberSeparation:
    fiber_values: list
    offsets: np.ndarray
    radii: list
    word: Word


def fiber_separation(E: DiscreteSet, tol: float = DEFAULT_TOL) -> FiberSeparation:
    """Offsets per fiber putting first-block magnitudes in disjoint annuli.

    Fibers are grouped over equal second-block values; the emitted gradient
    shear translates each fiber's first block so the annulus radii nest
    strictly, which makes the first-block projection injective afterwards.
    """
    pts = E.points
    m, dim = pts.shape
    n = dim // 2
    z = pts[:, :n]
    w = pts[:, n:]
    scale = max(1.0, float(np.max(np.abs(w))))
    fibers: list[tuple[np.ndarray, list[int]]] = []
    for idx in range(m):
        for val, members in fibers:
            if np.max(np.abs(w[idx] - val)) <= tol * scale:
                members.append(idx)
                break
        else:
            fibers.append((w[idx], [idx]))
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    radii = [1.0]
    offsets = []
    for val, members in fibers:
        zs = z[members]
        spread = float(np.max(np.abs(zs))) if len(members) else 0.0
        t = radii[-1] + spread + 1.0
        b = t * e1
        mags = np.abs(np.linalg.norm(zs + b, axis=1))
        if not (np.min(mags) > radii[-1]):
            raise ToleranceError("fiber offset failed the nesting bound")
        offsets.append(b)
        radii.append(float(np.max(mags)) + 0.5)
    fvals = [val for val, _ in fibers]
    f = gradient_interpolant(np.stack(fvals), np.stack(offsets), tol) \
        if fibers else PolyScalar.zero(n)
    word = Word((GradShear("first", f),))
    return FiberSeparation(fvals, np.stack(offsets) if offsets else
                           np.zeros((0, n), complex), radii, word)


def set_split(E: DiscreteSet) -> tuple[DiscreteSet | None, DiscreteSet | None]:
    """Partition by block magnitudes: |z| >= |w| goes to the first part."""
    pts = E.points
    n = pts.shape[1] // 2
    zmag = np.linalg.norm(pts[:, :n], axis=1)
    wmag = np.linalg.norm(pts[:, n:], axis=1)
    first = pts[zmag >= wmag]
    second = pts[zmag < wmag]
    E1 = DiscreteSet(first) if len(first) else None
    E2 = DiscreteSet(second) if len(second) else None
    return E1, E2


# ---------------------------------------------------------------------------
# plane embeddings
# ---------------------------------------------------------------------------


class PlaneEmbedding:
    """A self-map of C^(2n) acting by a unit-Jacobian map on one plane."""

    __slots__ = ("phi", "plane", "n")

    def __init__(self, phi: tuple[PolyScalar, PolyScalar], plane: int, n: int):
        self.phi = phi
        self.plane = plane
        self.n = n

    @property
    def dim(self) -> int:
        return 2 * self.n

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z[None, :] if single else z
        j = self.plane - 1
        args = pts[:, [j, self.n + j]]
        out = pts.copy()
        out[:, j] = self.phi[0].evaluate_many(args)
        out[:, self.n + j] = self.phi[1].evaluate_many(args)
        return out[0] if single else out

    def jet(self, p: Sequence[complex], order: int) -> JetMap:
        p = np.asarray(p, dtype=complex)
        dim = self.dim
        j = self.plane - 1
        comps = []
        for i in range(dim):
            comps.append(PolyScalar.variable(dim, i).add(
                PolyScalar.constant(dim, p[i])))
        arg0 = np.array([p[j], p[self.n + j]])
        index_map = [j, self.n + j]
        for slot, poly in zip((j, self.n + j), self.phi):
            shifted = poly.shift(arg0).truncate(order)
            comps[slot] = shifted.map_variables(index_map, dim)
        return JetMap(p, order, comps)


def plane_embed(phi: tuple[PolyScalar, PolyScalar], plane: int, n: int,
                tol: float = DEFAULT_TOL, seed: int = 0,
                n_samples: int = 25) -> PlaneEmbedding:
    """Embed a unit-Jacobian polynomial self-map of C^2 into plane ``plane``.

    The Jacobian determinant is checked at seeded sample points and the
    embedded map's pullback defect is verified on jet samples.
    """
    if not (1 <= plane <= n):
        raise PreconditionError(f"plane index {plane} out of range for n={n}")
    f1, f2 = phi
    if f1.dim != 2 or f2.dim != 2:
        raise PreconditionError("plane map components must be bivariate")
    det = f1.derivative(0).mul(f2.derivative(1)).sub(
        f1.derivative(1).mul(f2.derivative(0)))
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n_samples, 2)) + 1j * rng.standard_normal((n_samples, 2))
    vals = det.evaluate_many(pts)
    worst = float(np.max(np.abs(vals - 1.0)))
    if worst > max(tol, 1e-8):
        raise PreconditionError("plane map Jacobian is not identically one",
                                {"max_deviation": worst})
    emb = PlaneEmbedding((f1, f2), plane, n)
    order = max(2, max(f1.degree(), f2.degree()))
    for idx in range(3):
        p = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
        defect = pullback_defect(emb.jet(p, order))
        if defect.max_abs_coeff() > 1e-8 * max(1.0, f1.max_abs_coeff(),
                                               f2.max_abs_coeff()) ** 2:
            raise ToleranceError("embedded map fails the symplectic check",
                                 {"defect": defect.max_abs_coeff()})
    return emb


# ---------------------------------------------------------------------------
# determinant projection bound and shell constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool


def projection_bound_check(A: np.ndarray, P: np.ndarray, u: np.ndarray,
                           tol: float = DEFAULT_TOL) -> BoundCheck:
    """Check |A^{-1} u| <= ||P A||^k for det-one A, rank-k orthogonal P,
    and a unit vector u in the kernel of P."""
    A = np.asarray(A, dtype=complex)
    P = np.asarray(P, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if abs(np.linalg.det(A) - 1.0) > 1e-6:
        raise PreconditionError("matrix determinant is not one",
                                {"det": complex(np.linalg.det(A))})
    if float(np.max(np.abs(P @ P - P))) > 1e-8 or \
            float(np.max(np.abs(P - P.conj().T))) > 1e-8:
        raise PreconditionError("P is not an orthogonal projection")
    k = int(round(float(np.real(np.trace(P)))))
    if not (1 <= k <= A.shape[0] - 1):
        raise PreconditionError(f"projection rank {k} out of range")
    if float(np.max(np.abs(P @ u))) > 1e-8:
        raise PreconditionError("u is not in the kernel of P")
    if abs(np.linalg.norm(u) - 1.0) > 1e-8:
        raise PreconditionError("u is not a unit vector")
    lhs = float(np.linalg.norm(np.linalg.solve(A, u)))
    rhs = float(np.linalg.norm(P @ A, ord=2)) ** k
    holds = lhs <= rhs * (1 + 1e-9) + 1e-12
    return BoundCheck(lhs, rhs, holds)


def a_sequence(a1: float, count: int) -> np.ndarray:
    """a_(k+1) = a_k + 1/k^2 starting from a1 (> 1), ``count`` entries."""
    if a1 <= 1:
        raise PreconditionError("a1 must exceed 1", {"a1": a1})
    if count < 1:
        raise PreconditionError("count must be positive")
    ks = np.arange(1, count, dtype=float)
    increments = 1.0 / ks ** 2
    out = np.empty(count, dtype=float)
    out[0] = a1
    if count > 1:
        out[1:] = a1 + np.cumsum(increments)
    return out


def a_limit(a1: float) -> float:
    return a1 + pi ** 2 / 6.0


def rr_delta(a1: float, a2: float, r: float, k: int) -> float:
    """delta = (k/r)^k ((a2 - a1)/(k+1))^(k+1)."""
    if a2 < a1:
        raise PreconditionError("a2 must be at least a1")
    return (k / r) ** k * ((a2 - a1) / (k + 1)) ** (k + 1)


def shell_delta(j: int, a1: float) -> float:
    """Ball radius for shell j: rr_delta with the two gaps above a_(j+1).

    Matches the frozen reference value delta_1(1.5) = 4/177147 obtained by
    stepping the recursion from the (j+2)-nd element.
    """
    a = a_sequence(a1, j + 4)
    return rr_delta(a[j + 1], a[j + 2], j + 2, 2)


def shell_constants(a1: float, count: int) -> tuple[np.ndarray, float, np.ndarray]:
    """(a-sequence, limit, delta_j series for j = 1..count-3)."""
    seq = a_sequence(a1, max(count, 4))
    deltas = np.array([rr_delta(seq[j + 1], seq[j + 2], j + 2, 2)
                       for j in range(1, max(count - 3, 1) + 1)])
    return seq[:count], a_limit(a1), deltas


# ---------------------------------------------------------------------------
# unavoidable set generator
# ---------------------------------------------------------------------------


@dataclass
class Shell:
    j: int
    delta: float
    sphere_points: np.ndarray
    box_points: np.ndarray
    spacing: float
    box_radius: float
    resolution: int

    def counts(self) -> dict:
        return {"sphere": int(self.sphere_points.shape[0]),
                "box": int(self.box_points.shape[0])}


@dataclass
class ShellSet:
    n: int
    a1: float
    shells: list
    note: str = ("sphere layer is a parameterized angular net standing in "
                 "for the externally defined extremal sphere sets; only the "
                 "net geometry is certified")

    def all_points(self) -> np.ndarray:
        blocks = []
        for sh in self.shells:
            for sp in sh.sphere_points:
                for bp in sh.box_points:
                    blocks.append(np.concatenate([sp, bp]))
        return np.array(blocks) if blocks else \
            np.zeros((0, 2 * self.n), dtype=complex)

    def plane_projection_counts(self) -> dict:
        return {sh.j: sh.sphere_points.shape[0] for sh in self.shells}


def _sphere_net(radius: float, resolution: int) -> np.ndarray:
    """Deterministic angular net on the sphere |(z1, z2)| = radius in C^2."""
    thetas = np.linspace(0.0, pi / 2, resolution + 1)
    phis = 2 * pi * np.arange(resolution) / resolution
    pts = []
    for th in thetas:
        for p1 in phis:
            for p2 in phis:
                pts.append([radius * np.cos(th) * np.exp(1j * p1),
                            radius * np.sin(th) * np.exp(1j * p2)])
    return np.array(pts, dtype=complex)


def _box_lattice(delta: float, box_radius: float, real_dim: int,
                 max_points: int) -> tuple[np.ndarray, float]:
    """Cubic lattice of spacing 2 delta / sqrt(real_dim) covering the box.

    Extends one step beyond the box so every box point is within half a
    spacing per axis of the lattice, hence within delta in total.
    """
    spacing = 2.0 * delta / np.sqrt(real_dim)
    if box_radius == 0:
        return np.zeros((1, real_dim)), spacing
    steps = int(np.ceil(box_radius / spacing))
    per_axis = 2 * steps + 1
    total = per_axis ** real_dim
    if total > max_points:
        raise ToleranceError(
            "box lattice too large for this shell radius",
            {"points": total, "cap": max_points})
    axis = spacing * np.arange(-steps, steps + 1)
    grids = np.meshgrid(*([axis] * real_dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1), spacing


def unavoidable_set(n: int, j_max: int, a1: float, sphere_resolution: int,
                    box_radius: float, max_points: int = 2_000_000,
                    seed: int = 0, cert_samples: int = 10_000) -> ShellSet:
    """Shells E_j = (sphere net at radius j) x (delta_j lattice in a box).

    The lattice certifies the covering property inside the box: every
    sampled box point lies within delta_j of a lattice point.
    """
    if n < 2:
        raise PreconditionError("construction needs n >= 2")
    if j_max < 1:
        raise PreconditionError("j_max must be positive")
    real_dim = 2 * (2 * n - 2)
    shells = []
    for j in range(1, j_max + 1):
        delta = shell_delta(j, a1)
        sphere = _sphere_net(float(j), sphere_resolution)
        lattice, spacing = _box_lattice(delta, box_radius, real_dim,
                                        max_points)
        box_pts = lattice[:, ::2] + 1j * lattice[:, 1::2]
        rad = np.abs(np.linalg.norm(sphere, axis=1) - j)
        if np.max(rad) > 1e-9 * max(1.0, j):
            raise ToleranceError("sphere net drifted off the sphere")
        shells.append(Shell(j, delta, sphere, box_pts, spacing, box_radius,
                            sphere_resolution))
    ss = ShellSet(n, a1, shells)
    for sh in ss.shells:
        rep = covering_certificate(sh, cert_samples, seed + sh.j)
        if not rep["holds"]:
            raise ToleranceError("covering certificate failed",
                                 {"shell": sh.j, **rep})
    return ss


def covering_certificate(shell: Shell, n_samples: int, seed: int) -> dict:
    """Sampled check that every box point is within delta of the lattice."""
    rng = np.random.default_rng(seed)
    real_dim = 2 * shell.box_points.shape[1]
    if shell.box_radius == 0:
        return {"holds": True, "max_distance": 0.0, "samples": 0}
    samples = rng.uniform(-shell.box_radius, shell.box_radius,
                          size=(n_samples, real_dim))
    steps = int(np.ceil(shell.box_radius / shell.spacing))
    snapped = np.clip(np.round(samples / shell.spacing), -steps, steps) \
        * shell.spacing
    dist = np.linalg.norm(samples - snapped, axis=1)
    worst = float(np.max(dist))
    return {"holds": bool(worst <= shell.delta * (1 + 1e-9)),
            "max_distance": worst, "samples": int(n_samples)}
