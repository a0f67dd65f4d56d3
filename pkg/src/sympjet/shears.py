"""Exact symplectic shears, gradient shears, and finite words of them.

A shear ``z -> z + f(z^T J v) v`` is symplectic for every polynomial ``f``
because the pairing ``lambda_v(z) = z^T J v`` kills its own direction.  A
gradient shear ``(z, w) -> (z + grad f(w), w)`` is symplectic for every
polynomial potential by symmetry of the Hessian.  Words store their factors
and are never expanded globally: global claims are checked on jets (exact,
truncated) or at sample points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .defaults import DEFAULT_TOL
from .errors import PreconditionError
from .jets import JetMap, jet_compose
from .poly import PolyScalar, UniPoly
from .symplectic import J_matrix, pullback_defect


class Shear:
    """The map z -> z + f(lambda_v(z)) v."""

    __slots__ = ("v", "f", "_jv")

    def __init__(self, v: Sequence[complex], f: UniPoly):
        self.v = np.asarray(v, dtype=complex)
        if self.v.ndim != 1 or self.v.size % 2:
            raise PreconditionError("shear direction must live in C^(2n)")
        self.f = f
        n = self.v.size // 2
        self._jv = J_matrix(n) @ self.v

    @property
    def dim(self) -> int:
        return self.v.size

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        lam = z @ self._jv
        return z + np.multiply.outer(self.f(lam), self.v) if z.ndim > 1 \
            else z + self.f(lam) * self.v

    def jacobian(self, z: Sequence[complex]) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        lam = complex(z @ self._jv)
        _, slope = self.f.eval_with_derivative(lam)
        return np.eye(self.dim, dtype=complex) + slope * np.outer(self.v, self._jv)

    def inverse(self) -> "Shear":
        return Shear(self.v, self.f.neg())

    def jet(self, p: Sequence[complex], order: int) -> JetMap:
        p = np.asarray(p, dtype=complex)
        dim = self.dim
        lam0 = complex(p @ self._jv)
        local = self.f.taylor(lam0, order)
        ell = PolyScalar.linear(self._jv)  # lambda_v of the displacement
        comps = []
        # f(lam0 + ell(w)) expanded through the structured Taylor coefficients
        ell_pows = [PolyScalar.constant(dim, 1.0)]
        for _ in range(order):
            ell_pows.append(ell_pows[-1].mul(ell, max_degree=order))
        fpoly = PolyScalar.zero(dim)
        for t, c in enumerate(local):
            if c != 0:
                fpoly = fpoly.add(ell_pows[t].scale(c))
        for i in range(dim):
            comp = PolyScalar.variable(dim, i).add(
                PolyScalar.constant(dim, p[i]))
            if self.v[i] != 0:
                comp = comp.add(fpoly.scale(self.v[i]))
            comps.append(comp)
        return JetMap(p, order, comps)


class GradShear:
    """(z, w) -> (z + grad f(w), w) or (z, w) -> (z, w + grad g(z))."""

    __slots__ = ("side", "potential", "_grads", "_hess")

    def __init__(self, side: str, potential: PolyScalar):
        if side not in ("first", "second"):
            raise PreconditionError("side must be 'first' or 'second'")
        self.side = side
        self.potential = potential
        self._grads = potential.gradient()
        self._hess = [g.gradient() for g in self._grads]

    @property
    def n(self) -> int:
        return self.potential.dim

    @property
    def dim(self) -> int:
        return 2 * self.potential.dim

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        n = self.n
        single = z.ndim == 1
        pts = z[None, :] if single else z
        if self.side == "first":
            args = pts[:, n:]
        else:
            args = pts[:, :n]
        shift = np.stack([g.evaluate_many(args) for g in self._grads], axis=-1)
        out = pts.copy()
        if self.side == "first":
            out[:, :n] += shift
        else:
            out[:, n:] += shift
        return out[0] if single else out

    def jacobian(self, z: Sequence[complex]) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        n = self.n
        arg = z[n:] if self.side == "first" else z[:n]
        H = np.array([[h.evaluate(arg) for h in row] for row in self._hess])
        M = np.eye(2 * n, dtype=complex)
        if self.side == "first":
            M[:n, n:] = H
        else:
            M[n:, :n] = H
        return M

    def inverse(self) -> "GradShear":
        return GradShear(self.side, self.potential.neg())

    def jet(self, p: Sequence[complex], order: int) -> JetMap:
        p = np.asarray(p, dtype=complex)
        n = self.n
        dim = 2 * n
        if self.side == "first":
            arg0, arg_index = p[n:], list(range(n, dim))
            out_offset = 0
        else:
            arg0, arg_index = p[:n], list(range(n))
            out_offset = n
        comps = []
        for i in range(dim):
            comps.append(PolyScalar.variable(dim, i).add(
                PolyScalar.constant(dim, p[i])))
        for i, g in enumerate(self._grads):
            shifted = g.shift(arg0).truncate(order)
            embedded = shifted.map_variables(arg_index, dim)
            comps[out_offset + i] = comps[out_offset + i].add(embedded)
        return JetMap(p, order, comps)


Factor = Shear | GradShear


@dataclass(frozen=True)
class Word:
    """Finite composition of shears; the leftmost factor is applied last."""

    factors: tuple[Factor, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def __len__(self) -> int:
        return len(self.factors)

    @property
    def dim(self) -> int | None:
        return self.factors[0].dim if self.factors else None

    @classmethod
    def concat(cls, *words: "Word") -> "Word":
        out: tuple[Factor, ...] = ()
        for w in words:
            out = out + w.factors
        return cls(out)

    def apply(self, z: np.ndarray) -> np.ndarray:
        out = np.asarray(z, dtype=complex)
        for f in reversed(self.factors):
            out = f.apply(out)
        return out

    def jacobian(self, z: Sequence[complex]) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        dim = z.size
        M = np.eye(dim, dtype=complex)
        cur = z
        for f in reversed(self.factors):
            M = f.jacobian(cur) @ M
            cur = f.apply(cur)
        return M

    def inverse(self) -> "Word":
        return Word(tuple(f.inverse() for f in reversed(self.factors)))

    def jet(self, p: Sequence[complex], order: int) -> JetMap:
        return word_jet(self, p, order)


def shear_apply(S: Factor, z) -> np.ndarray:
    return S.apply(z)


def word_apply(W: Word, z) -> np.ndarray:
    return W.apply(z)


def word_inverse(W: Word) -> Word:
    return W.inverse()


def word_jet(W: Word, p: Sequence[complex], order: int,
             tol: float = DEFAULT_TOL) -> JetMap:
    """Exact degree-``order`` truncation of the word at ``p``."""
    if order < 1:
        raise PreconditionError("word jet needs order >= 1")
    p = np.asarray(p, dtype=complex)
    current = JetMap.identity(p, order)
    for f in reversed(W.factors):
        fj = f.jet(current.constant_part(), order)
        current = jet_compose(fj, current, tol=max(tol, 1e-6))
    return current


@dataclass
class VerificationReport:
    """Numeric audit of a word against a constraint list."""

    n_samples: int = 0
    symplectic_residual: float = 0.0
    defect_max: float | None = None
    jet_residual: float | None = None
    fixpoint_errors: list = field(default_factory=list)
    flat_reports: list = field(default_factory=list)
    region_sup: float | None = None
    eps: float | None = None
    passed: bool = True
    failures: list = field(default_factory=list)

    def as_json(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "symplectic_residual": self.symplectic_residual,
            "defect_max": self.defect_max,
            "jet_residual": self.jet_residual,
            "fixpoint_errors": self.fixpoint_errors,
            "flat_reports": self.flat_reports,
            "region_sup": self.region_sup,
            "eps": self.eps,
            "passed": self.passed,
            "failures": self.failures,
        }


def word_verify(W: Word, *, jet_target: JetMap | None = None,
                flats: Sequence[tuple] = (), fixpoints: Sequence = (),
                region: np.ndarray | None = None, eps: float | None = None,
                point_maps: Sequence[tuple] = (),
                n_samples: int = 20, seed: int = 0, sample_scale: float = 1.0,
                center: np.ndarray | None = None,
                defect_order: int = 3,
                tolerances: dict | None = None) -> VerificationReport:
    """Report-only audit: symplecticity, pullback defect, and constraints."""
    tolerances = dict(tolerances or {})
    symp_tol = tolerances.get("symplectic", 1e-9)
    fix_tol = tolerances.get("fixpoint", 1e-9)
    flat_tol = tolerances.get("flat", 1e-8)
    jet_tol = tolerances.get("jet", 1e-6)
    defect_tol = tolerances.get("defect", 1e-8)

    report = VerificationReport(eps=eps)
    dim = W.dim
    if dim is None:
        if jet_target is not None:
            dim = jet_target.dim
        elif fixpoints:
            dim = np.asarray(fixpoints[0]).size
        elif region is not None:
            dim = np.asarray(region).shape[-1]
        else:
            dim = 2
    rng = np.random.default_rng(seed)
    base_pt = np.zeros(dim, dtype=complex) if center is None else \
        np.asarray(center, dtype=complex)
    if center is None and jet_target is not None:
        base_pt = jet_target.base
    pts = base_pt + sample_scale * (rng.standard_normal((n_samples, dim))
                                    + 1j * rng.standard_normal((n_samples, dim)))
    n = dim // 2
    J = J_matrix(n)
    worst = 0.0
    escaped = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for z in pts:
            G = W.jacobian(z)
            # backward-error style: the class is exactly symplectic, so the
            # defect is judged relative to the Jacobian's own size
            res = float(np.max(np.abs(G.T @ J @ G - J)))
            res /= max(1.0, float(np.max(np.abs(G))) ** 2)
            if not np.isfinite(res):
                escaped += 1
                continue
            worst = max(worst, res)
    report.n_samples = n_samples
    report.symplectic_residual = worst
    if worst > symp_tol:
        report.failures.append(f"symplectic residual {worst:.3g}")
    if escaped > n_samples // 2:
        report.failures.append(
            f"{escaped} samples overflowed the word's polynomial growth")

    base = jet_target.base if jet_target is not None else np.zeros(dim)
    order = jet_target.order if jet_target is not None else defect_order
    jw = word_jet(W, base, order)
    defect = pullback_defect(jw)
    report.defect_max = defect.max_abs_coeff()
    scale = max(1.0, jw.max_abs_coeff())
    if report.defect_max > defect_tol * scale:
        report.failures.append(f"pullback defect {report.defect_max:.3g}")

    if jet_target is not None:
        diff = max(a.sub(b).max_abs_coeff()
                   for a, b in zip(jw.components, jet_target.components))
        report.jet_residual = diff
        tscale = max(1.0, jet_target.max_abs_coeff())
        if diff > jet_tol * tscale:
            report.failures.append(f"jet mismatch {diff:.3g}")

    for c in fixpoints:
        c = np.asarray(c, dtype=complex)
        err = float(np.max(np.abs(W.apply(c) - c)))
        report.fixpoint_errors.append(err)
        if err > fix_tol:
            report.failures.append(f"fixpoint error {err:.3g}")

    for (a, N) in flats:
        a = np.asarray(a, dtype=complex)
        ja = word_jet(W, a, max(1, N - 1))
        diff_jet = [c.sub(i) for c, i in zip(
            ja.components, JetMap.identity(a, ja.order).components)]
        worst_low = 0.0
        for comp in diff_jet:
            for e, cval in comp.terms.items():
                if sum(e) < N:
                    worst_low = max(worst_low, abs(cval))
        report.flat_reports.append(
            {"order": int(N), "max_low_coeff": worst_low})
        if worst_low > flat_tol:
            report.failures.append(f"flatness residual {worst_low:.3g}")

    for (src, dst) in point_maps:
        err = float(np.max(np.abs(W.apply(np.asarray(src, complex))
                                  - np.asarray(dst, complex))))
        report.fixpoint_errors.append(err)
        if err > fix_tol:
            report.failures.append(f"point map error {err:.3g}")

    if region is not None and len(region):
        region = np.asarray(region, dtype=complex)
        moved = W.apply(region)
        sup = float(np.max(np.abs(moved - region)))
        report.region_sup = sup
        if eps is not None and sup > eps:
            report.failures.append(f"region sup {sup:.3g} > eps {eps:.3g}")

    report.passed = not report.failures
    return report
