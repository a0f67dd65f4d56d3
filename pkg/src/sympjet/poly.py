"""Sparse multivariate polynomials over C and structured univariate polynomials.

``PolyScalar`` stores coefficients as a map from exponent tuples to complex
numbers; arithmetic is exact up to floating point and supports eager degree
truncation so pipelines cannot blow up their truncation order silently.

``UniPoly`` additionally remembers the sum-of-products structure it was built
with.  The interpolation pipeline manufactures high-degree products (flatness
factors, prescribed roots, damping powers) whose expanded monomial form is
numerically useless far from the origin; evaluating and Taylor-expanding
through the factored form keeps prescribed roots and flat points exact to the
last bit.
"""

from __future__ import annotations

from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .defaults import DEFAULT_TOL
from .errors import PreconditionError, ToleranceError

Exponent = tuple

_PACK_BASE = 64  # per-axis exponent cap for int64 key packing
_SMALL_PRODUCT = 1024  # term-count product below which the dict loop wins


def _pack_weights(dim: int) -> np.ndarray:
    return _PACK_BASE ** np.arange(dim, dtype=np.int64)


class PolyScalar:
    """Sparse polynomial in ``dim`` complex variables."""

    __slots__ = ("dim", "terms", "_pack", "_deglist")

    def __init__(self, dim: int, terms: Mapping[Exponent, complex] | None = None):
        if dim < 1:
            raise PreconditionError(f"dimension must be positive, got {dim}")
        self.dim = dim
        self.terms: dict[Exponent, complex] = {}
        if terms:
            for e, c in terms.items():
                if c != 0:
                    self.terms[tuple(e)] = complex(c)
        self._pack = None
        self._deglist = None

    def _degree_list(self):
        if self._deglist is None:
            self._deglist = [(e, c, sum(e)) for e, c in self.terms.items()]
        return self._deglist

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "PolyScalar":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: complex) -> "PolyScalar":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, index: int) -> "PolyScalar":
        e = [0] * dim
        e[index] = 1
        return cls(dim, {tuple(e): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[complex], const: complex = 0.0) -> "PolyScalar":
        dim = len(coeffs)
        terms: dict[Exponent, complex] = {}
        if const != 0:
            terms[(0,) * dim] = complex(const)
        for i, c in enumerate(coeffs):
            if c != 0:
                e = [0] * dim
                e[i] = 1
                terms[tuple(e)] = complex(c)
        return cls(dim, terms)

    # -- inspection --------------------------------------------------------

    def is_zero(self, tol: float = 0.0) -> bool:
        if not self.terms:
            return True
        return max(abs(c) for c in self.terms.values()) <= tol

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def constant_term(self) -> complex:
        return self.terms.get((0,) * self.dim, 0.0)

    def coeff(self, exponent: Sequence[int]) -> complex:
        return self.terms.get(tuple(exponent), 0.0)

    # -- arithmetic ---------------------------------------------------------

    def _check_dim(self, other: "PolyScalar") -> None:
        if self.dim != other.dim:
            raise PreconditionError(
                f"dimension mismatch: {self.dim} vs {other.dim}")

    def add(self, other: "PolyScalar") -> "PolyScalar":
        self._check_dim(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0.0) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = v
        return PolyScalar(self.dim, out)

    def sub(self, other: "PolyScalar") -> "PolyScalar":
        return self.add(other.scale(-1.0))

    def scale(self, factor: complex) -> "PolyScalar":
        if factor == 0:
            return PolyScalar(self.dim)
        return PolyScalar(self.dim, {e: c * factor for e, c in self.terms.items()})

    def neg(self) -> "PolyScalar":
        return self.scale(-1.0)

    def _packed(self):
        if self._pack is None:
            if self.terms:
                exp = np.array(list(self.terms.keys()), dtype=np.int64)
                if exp.max(initial=0) >= _PACK_BASE:
                    raise ToleranceError("exponent exceeds packing capacity")
                keys = exp @ _pack_weights(self.dim)
                degs = exp.sum(axis=1)
                coef = np.array(list(self.terms.values()), dtype=complex)
            else:
                keys = np.empty(0, np.int64)
                degs = np.empty(0, np.int64)
                coef = np.empty(0, complex)
            self._pack = (keys, coef, degs)
        return self._pack

    @classmethod
    def _from_packed(cls, dim: int, keys: np.ndarray, coefs: np.ndarray) -> "PolyScalar":
        exp = np.empty((keys.size, dim), np.int64)
        k = keys.copy()
        for i in range(dim):
            exp[:, i] = k % _PACK_BASE
            k //= _PACK_BASE
        return cls(dim, dict(zip(map(tuple, exp.tolist()), coefs.tolist())))

    def mul(self, other: "PolyScalar", max_degree: int | None = None) -> "PolyScalar":
        self._check_dim(other)
        if not self.terms or not other.terms:
            return PolyScalar(self.dim)
        if len(self.terms) * len(other.terms) <= _SMALL_PRODUCT:
            out: dict[Exponent, complex] = {}
            lb = other._degree_list()
            get = out.get
            if max_degree is None:
                for ea, ca in self.terms.items():
                    for eb, cb, _ in lb:
                        e = tuple(map(int.__add__, ea, eb))
                        out[e] = get(e, 0.0) + ca * cb
            else:
                for ea, ca, da in self._degree_list():
                    rem = max_degree - da
                    for eb, cb, db in lb:
                        if db > rem:
                            continue
                        e = tuple(map(int.__add__, ea, eb))
                        out[e] = get(e, 0.0) + ca * cb
            return PolyScalar(self.dim, out)
        ka, ca, da = self._packed()
        kb, cb, db = other._packed()
        keys = (ka[:, None] + kb[None, :]).ravel()
        coef = (ca[:, None] * cb[None, :]).ravel()
        if max_degree is not None:
            mask = (da[:, None] + db[None, :]).ravel() <= max_degree
            keys = keys[mask]
            coef = coef[mask]
        if keys.size == 0:
            return PolyScalar(self.dim)
        uk, inv = np.unique(keys, return_inverse=True)
        re = np.bincount(inv, weights=coef.real, minlength=uk.size)
        im = np.bincount(inv, weights=coef.imag, minlength=uk.size)
        acc = re + 1j * im
        keep = acc != 0
        return PolyScalar._from_packed(self.dim, uk[keep], acc[keep])

    def pow_trunc(self, exponent: int, max_degree: int | None = None) -> "PolyScalar":
        result = PolyScalar.constant(self.dim, 1.0)
        base = self
        e = exponent
        while e > 0:
            if e & 1:
                result = result.mul(base, max_degree)
            e >>= 1
            if e:
                base = base.mul(base, max_degree)
        return result

    def truncate(self, max_degree: int) -> "PolyScalar":
        return PolyScalar(self.dim, {e: c for e, c in self.terms.items()
                                     if sum(e) <= max_degree})

    def normalize(self, tol: float = DEFAULT_TOL) -> "PolyScalar":
        """Drop terms with coefficient magnitude at or below ``tol``."""
        return PolyScalar(self.dim, {e: c for e, c in self.terms.items()
                                     if abs(c) > tol})

    def derivative(self, index: int) -> "PolyScalar":
        out: dict[Exponent, complex] = {}
        for e, c in self.terms.items():
            k = e[index]
            if k == 0:
                continue
            ne = list(e)
            ne[index] = k - 1
            out[tuple(ne)] = c * k
        return PolyScalar(self.dim, out)

    def gradient(self) -> list["PolyScalar"]:
        return [self.derivative(i) for i in range(self.dim)]

    def homogeneous_component(self, r: int) -> "PolyScalar":
        return PolyScalar(self.dim, {e: c for e, c in self.terms.items()
                                     if sum(e) == r})

    def shift(self, offset: Sequence[complex]) -> "PolyScalar":
        """Coefficients of ``p(w + offset)`` as a polynomial in ``w``."""
        off = np.asarray(offset, dtype=complex)
        out: dict[Exponent, complex] = {}
        for e, c in self.terms.items():
            partial: dict[Exponent, complex] = {(): c}
            for i, ei in enumerate(e):
                nxt: dict[Exponent, complex] = {}
                for stem, cc in partial.items():
                    for k in range(ei + 1):
                        coef = cc * comb(ei, k) * off[i] ** (ei - k)
                        if coef == 0 and k < ei:
                            continue
                        key = stem + (k,)
                        nxt[key] = nxt.get(key, 0.0) + coef
                partial = nxt
            for e2, cc in partial.items():
                if cc != 0:
                    out[e2] = out.get(e2, 0.0) + cc
        return PolyScalar(self.dim, {e: c for e, c in out.items() if c != 0})

    def map_variables(self, index_map: Sequence[int], new_dim: int) -> "PolyScalar":
        """Re-embed into ``new_dim`` variables, axis i becoming index_map[i]."""
        out: dict[Exponent, complex] = {}
        for e, c in self.terms.items():
            ne = [0] * new_dim
            for i, ei in enumerate(e):
                ne[index_map[i]] = ei
            out[tuple(ne)] = out.get(tuple(ne), 0.0) + c
        return PolyScalar(new_dim, out)

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, point: Sequence[complex]) -> complex:
        z = np.asarray(point, dtype=complex)
        if z.shape != (self.dim,):
            raise PreconditionError(
                f"point dimension {z.shape} does not match {self.dim}")
        total = 0.0 + 0.0j
        for e, c in self.terms.items():
            term = c
            for zi, ei in zip(z, e):
                if ei:
                    term *= zi ** ei
            total += term
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[None, :]
        if not self.terms:
            return np.zeros(pts.shape[0], dtype=complex)
        exp = np.array(list(self.terms.keys()), dtype=np.int64)
        coef = np.array(list(self.terms.values()), dtype=complex)
        powers = pts[:, None, :] ** exp[None, :, :]
        return powers.prod(axis=2) @ coef

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        items = sorted(self.terms.items())[:6]
        body = " + ".join(f"{c:.3g}*w^{e}" for e, c in items)
        more = "" if len(self.terms) <= 6 else f" (+{len(self.terms) - 6} terms)"
        return f"PolyScalar[{self.dim}]({body or '0'}{more})"


def max_coeff_diff(a: PolyScalar, b: PolyScalar) -> float:
    return a.sub(b).max_abs_coeff()


def compose_truncated(outer: PolyScalar, inner: Sequence[PolyScalar],
                      order: int,
                      memo: dict | None = None) -> PolyScalar:
    """Substitute ``inner`` (constant-free) polynomials into ``outer``.

    The result is truncated at total degree ``order``; correctness of the
    truncation relies on every inner polynomial having zero constant term.
    ``memo`` may be shared across calls with the same inner list to reuse
    monomial power products.
    """
    if len(inner) != outer.dim:
        raise PreconditionError("substitution arity mismatch")
    dim_in = inner[0].dim
    if memo is None:
        memo = {}
    memo.setdefault((0,) * outer.dim, PolyScalar.constant(dim_in, 1.0))

    def power_product(e: Exponent) -> PolyScalar:
        got = memo.get(e)
        if got is not None:
            return got
        i = next(idx for idx, v in enumerate(e) if v)
        prev = list(e)
        prev[i] -= 1
        p = power_product(tuple(prev)).mul(inner[i], max_degree=order)
        memo[e] = p
        return p

    acc: dict[Exponent, complex] = {}
    for e, c in sorted(outer.terms.items(), key=lambda kv: sum(kv[0])):
        if sum(e) > order:
            continue
        for e2, c2 in power_product(e).terms.items():
            v = acc.get(e2, 0.0) + c * c2
            acc[e2] = v
    return PolyScalar(dim_in, {e: c for e, c in acc.items() if c != 0})


# ---------------------------------------------------------------------------
# univariate polynomials
# ---------------------------------------------------------------------------


def _trim(coeffs: np.ndarray) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
    n = arr.size
    while n > 1 and arr[n - 1] == 0:
        n -= 1
    return arr[:n].copy()


def shift_coeffs(coeffs: np.ndarray, a: complex) -> np.ndarray:
    """Coefficients of ``p(x + a)`` given those of ``p``."""
    c = _trim(coeffs)
    n = c.size
    out = c.copy()
    # synthetic Taylor shift, O(n^2)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] = out[j] + a * out[j + 1]
    return out


def conv_trunc(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[:order + 1]


def pow_trunc_series(base: np.ndarray, p: int, order: int) -> np.ndarray:
    result = np.array([1.0 + 0j])
    b = np.asarray(base, dtype=complex)[:order + 1]
    e = p
    while e > 0:
        if e & 1:
            result = conv_trunc(result, b, order)
        e >>= 1
        if e:
            b = conv_trunc(b, b, order)
    return result


def series_inverse(c: np.ndarray, order: int) -> np.ndarray:
    """Truncated reciprocal series of ``c`` (requires c[0] != 0)."""
    c = np.asarray(c, dtype=complex)
    if c[0] == 0:
        raise PreconditionError("series has no reciprocal: zero constant term")
    inv = np.zeros(order + 1, dtype=complex)
    inv[0] = 1.0 / c[0]
    for k in range(1, order + 1):
        s = 0.0 + 0j
        for j in range(1, min(k, c.size - 1) + 1):
            s += c[j] * inv[k - j]
        inv[k] = -s / c[0]
    return inv


class UniPoly:
    """Univariate complex polynomial with an optional factored-form plan.

    The plan is a tuple of terms ``(scalar, ((base_coeffs, power), ...))``;
    the polynomial equals the sum over terms of scalar times the product of
    the bases raised to their powers.  Evaluation and local Taylor expansion
    go through the plan when present, which keeps manufactured roots and
    flat points exact; the expanded coefficient vector is materialized lazily
    for inspection and serialization.
    """

    __slots__ = ("_coeffs", "_terms")

    def __init__(self, coeffs=None, _terms=None):
        if coeffs is None and _terms is None:
            raise PreconditionError("UniPoly needs coefficients or a plan")
        self._coeffs = None if coeffs is None else _trim(coeffs)
        self._terms = _terms

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls) -> "UniPoly":
        return cls([0.0])

    @classmethod
    def const(cls, c: complex) -> "UniPoly":
        return cls([c])

    @classmethod
    def monomial(cls, r: int, c: complex = 1.0) -> "UniPoly":
        arr = np.zeros(r + 1, dtype=complex)
        arr[r] = c
        return cls(arr)

    @classmethod
    def affine(cls, c0: complex, c1: complex) -> "UniPoly":
        return cls([c0, c1])

    @classmethod
    def from_product(cls, scalar: complex,
                     bases: Iterable[tuple[np.ndarray, int]]) -> "UniPoly":
        plan = tuple((np.asarray(b, dtype=complex), int(p)) for b, p in bases)
        return cls(_terms=((complex(scalar), plan),))

    @classmethod
    def from_terms(cls, terms) -> "UniPoly":
        plan = tuple((complex(s), tuple((np.asarray(b, dtype=complex), int(p))
                                        for b, p in bases))
                     for s, bases in terms)
        return cls(_terms=plan)

    # -- structure -------------------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            total = np.array([0.0 + 0j])
            for scalar, bases in self._terms:
                term = np.array([scalar])
                for b, p in bases:
                    bp = np.array([1.0 + 0j])
                    base = np.asarray(b, dtype=complex)
                    e = p
                    while e > 0:
                        if e & 1:
                            bp = np.convolve(bp, base)
                        e >>= 1
                        if e:
                            base = np.convolve(base, base)
                    term = np.convolve(term, bp)
                if term.size > total.size:
                    total = np.concatenate(
                        [total, np.zeros(term.size - total.size, complex)])
                total[:term.size] += term
            self._coeffs = _trim(total)
        return self._coeffs

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs)) <= tol)

    def normalize(self, tol: float = DEFAULT_TOL) -> "UniPoly":
        """Expanded copy with trailing coefficients below ``tol`` dropped."""
        c = self.coeffs.copy()
        c[np.abs(c) <= tol] = 0.0
        return UniPoly(_trim(c))

    # -- evaluation --------------------------------------------------------------

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        scalar_input = z.ndim == 0
        pv = np.polynomial.polynomial.polyval
        if self._terms is None:
            out = pv(z, self._coeffs)
            return complex(out) if scalar_input else out
        zz = z[None] if scalar_input else z
        total = np.zeros(zz.shape, dtype=complex)
        # an exact base root forces the whole product to zero, even when
        # another factor overflows at that point
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            for scalar, bases in self._terms:
                term = np.full(zz.shape, complex(scalar))
                dead = np.zeros(zz.shape, dtype=bool)
                for b, p in bases:
                    bv = pv(zz, b)
                    if p > 0:
                        dead |= bv == 0
                    term = term * bv ** p
                total = total + np.where(dead, 0.0, term)
        return complex(total[0]) if scalar_input else total

    def eval_with_derivative(self, z: complex) -> tuple[complex, complex]:
        if self._terms is None:
            c = self._coeffs
            d = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.array([0j])
            pv = np.polynomial.polynomial.polyval
            return complex(pv(z, c)), complex(pv(z, d))
        val_total = 0j
        der_total = 0j
        pv = np.polynomial.polynomial.polyval
        pd = np.polynomial.polynomial.polyder
        zc = np.complex128(z)
        for scalar, bases in self._terms:
            evals = []
            for b, p in bases:
                bv = np.complex128(pv(zc, b))
                bd = np.complex128(pv(zc, pd(b))) if b.size > 1 else \
                    np.complex128(0)
                evals.append((bv, bd, p))
            roots = [(bv, bd, p) for bv, bd, p in evals if bv == 0 and p > 0]
            with np.errstate(over="ignore", invalid="ignore"):
                if roots:
                    # product vanishes; the derivative survives a simple root
                    if len(roots) > 1 or roots[0][2] > 1:
                        continue
                    der = np.complex128(scalar) * roots[0][1]
                    for bv, _, p in evals:
                        if bv != 0:
                            der = der * bv ** p
                    der_total += complex(der)
                    continue
                val = np.complex128(scalar)
                der = np.complex128(0)
                for bv, bd, p in evals:
                    if p == 0:
                        continue
                    bvp = bv ** p
                    der = der * bvp + val * (p * bv ** (p - 1) * bd)
                    val = val * bvp
            val_total += complex(val)
            der_total += complex(der)
        return val_total, der_total

    def taylor(self, center: complex, order: int) -> np.ndarray:
        """Coefficients of the expansion around ``center`` up to ``order``.

        Exact root factors are handled through their vanishing offset so the
        leading zero coefficients stay exact even when other factors carry
        astronomically large local values.
        """
        if self._terms is None:
            out = shift_coeffs(self._coeffs, center)[:order + 1]
            if out.size < order + 1:
                out = np.concatenate([out, np.zeros(order + 1 - out.size, complex)])
            return out
        total = np.zeros(order + 1, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            for scalar, bases in self._terms:
                offset = 0
                coeffs = np.array([scalar], dtype=complex)
                dead = False
                for b, p in bases:
                    local = shift_coeffs(b, center)
                    # association-order roundoff can leave a phantom constant
                    # at an exact root of the base; snap it against the
                    # cancellation scale of the evaluation
                    if local[0] != 0:
                        mag = float(np.sum(np.abs(b) *
                                           np.abs(center) ** np.arange(b.size)))
                        if abs(local[0]) <= 1e-12 * mag:
                            local = local.copy()
                            local[0] = 0.0
                    lead = 0
                    while lead < local.size and local[lead] == 0:
                        lead += 1
                    if lead == local.size:
                        dead = True
                        break
                    offset += lead * p
                    if offset > order:
                        dead = True
                        break
                    coeffs = conv_trunc(
                        coeffs, pow_trunc_series(local[lead:], p, order - offset),
                        order - offset)
                if dead:
                    continue
                total[offset:offset + coeffs.size] += coeffs[:order + 1 - offset]
        return total

    # -- arithmetic ---------------------------------------------------------------

    def _as_terms(self):
        if self._terms is not None:
            return self._terms
        return ((1.0 + 0j, ((self._coeffs, 1),)),)

    def scale(self, factor: complex) -> "UniPoly":
        if self._terms is None:
            return UniPoly(self._coeffs * factor)
        return UniPoly(_terms=tuple((s * factor, bases) for s, bases in self._terms))

    def neg(self) -> "UniPoly":
        return self.scale(-1.0)

    def add(self, other: "UniPoly") -> "UniPoly":
        if self._terms is None and other._terms is None:
            a, b = self._coeffs, other._coeffs
            n = max(a.size, b.size)
            out = np.zeros(n, dtype=complex)
            out[:a.size] += a
            out[:b.size] += b
            return UniPoly(out)
        return UniPoly(_terms=self._as_terms() + other._as_terms())

    def sub(self, other: "UniPoly") -> "UniPoly":
        return self.add(other.neg())

    def mul(self, other: "UniPoly") -> "UniPoly":
        if self._terms is None and other._terms is None:
            return UniPoly(np.convolve(self._coeffs, other._coeffs))
        terms = []
        for sa, ba in self._as_terms():
            for sb, bb in other._as_terms():
                terms.append((sa * sb, ba + bb))
        return UniPoly(_terms=tuple(terms))

    def compose_power(self, r: int) -> "UniPoly":
        """The polynomial ``p(x^r)``."""
        if r == 1:
            return self

        def stretch(c: np.ndarray) -> np.ndarray:
            out = np.zeros((c.size - 1) * r + 1, dtype=complex)
            out[::r] = c
            return out

        if self._terms is None:
            return UniPoly(stretch(self._coeffs))
        return UniPoly(_terms=tuple(
            (s, tuple((stretch(b), p) for b, p in bases))
            for s, bases in self._terms))

    def derivative(self) -> "UniPoly":
        c = self.coeffs
        if c.size == 1:
            return UniPoly.zero()
        return UniPoly(np.polynomial.polynomial.polyder(c))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        c = self.coeffs
        return f"UniPoly(deg={c.size - 1}, lead={c[-1]:.3g})"
