"""The standard symplectic form on C^(2n), pullback defects, and the
Hamiltonian structure of homogeneous symplectic vector fields.

The form is omega = sum_i dz_i ^ dz_(n+i), paired through the block matrix
J = [[0, I], [-I, 0]]; two vectors pair as u^T J v.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb, factorial
from typing import Sequence

import numpy as np

from .defaults import DEFAULT_TOL, RESAMPLE_ROUNDS
from .errors import PreconditionError, ToleranceError
from .jets import JetMap
from .poly import PolyScalar


@lru_cache(maxsize=None)
def J_matrix(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n), dtype=complex)
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    J.setflags(write=False)
    return J


def omega(u: Sequence[complex], v: Sequence[complex]) -> complex:
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    n = u.size // 2
    return complex(u @ (J_matrix(n) @ v))


def lambda_pairing(z: Sequence[complex], v: Sequence[complex]) -> complex:
    """The linear functional lambda_v(z) = z^T J v."""
    return omega(z, v)


def lambda_values(points: np.ndarray, v: Sequence[complex]) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    v = np.asarray(v, dtype=complex)
    n = v.size // 2
    return pts @ (J_matrix(n) @ v)


def symplectic_residual(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=complex)
    n = M.shape[0] // 2
    J = J_matrix(n)
    return float(np.max(np.abs(M.T @ J @ M - J)))


def is_symplectic_matrix(M: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    M = np.asarray(M, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(M)))) ** 2
    return symplectic_residual(M) <= tol * scale


class SympMatrix:
    """A 2n x 2n matrix validated against M^T J M = J."""

    __slots__ = ("entries",)

    def __init__(self, entries: np.ndarray, tol: float = DEFAULT_TOL):
        M = np.asarray(entries, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise PreconditionError("entries must form a square 2n x 2n matrix")
        if not is_symplectic_matrix(M, tol):
            raise PreconditionError(
                "matrix is not symplectic",
                {"residual": symplectic_residual(M)})
        self.entries = M

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


class TwoFormPoly:
    """Polynomial coefficients of a 2-form sum_{i<j} g_ij dw_i ^ dw_j.

    Indices are stored 0-based internally; the JSON encoding is 1-based.
    """

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: dict[tuple[int, int], PolyScalar]):
        for (i, j) in coeffs:
            if not (0 <= i < j < dim):
                raise PreconditionError(f"bad 2-form index pair ({i}, {j})")
        self.dim = dim
        self.coeffs = dict(coeffs)

    def max_abs_coeff(self) -> float:
        return max((g.max_abs_coeff() for g in self.coeffs.values()), default=0.0)

    def min_degree_above(self, tol: float) -> int | None:
        """Smallest total degree carrying a coefficient above ``tol``."""
        best = None
        for g in self.coeffs.values():
            for e, c in g.terms.items():
                if abs(c) > tol:
                    d = sum(e)
                    if best is None or d < best:
                        best = d
        return best

    def worst_term(self) -> tuple | None:
        worst = None
        for (i, j), g in self.coeffs.items():
            for e, c in g.terms.items():
                if worst is None or abs(c) > abs(worst[3]):
                    worst = (i, j, e, c)
        return worst


def pullback_defect(F: JetMap) -> TwoFormPoly:
    """Coefficients of F*omega - omega, truncated at degree ``order - 1``."""
    if F.order < 1:
        raise PreconditionError("pullback defect needs order >= 1")
    dim = F.dim
    n = dim // 2
    cap = F.order - 1
    D = [[c.derivative(k) for k in range(dim)] for c in F.components]
    out: dict[tuple[int, int], PolyScalar] = {}
    for k in range(dim):
        for l in range(k + 1, dim):
            acc = PolyScalar.zero(dim)
            for i in range(n):
                acc = acc.add(D[i][k].mul(D[n + i][l], max_degree=cap))
                acc = acc.sub(D[i][l].mul(D[n + i][k], max_degree=cap))
            if l == k + n:
                acc = acc.sub(PolyScalar.constant(dim, 1.0))
            if not acc.is_zero():
                out[(k, l)] = acc
    return TwoFormPoly(dim, out)


def symplectic_order(F: JetMap, tol: float = DEFAULT_TOL) -> int:
    """Largest k <= order-1 with all defect coefficients of degree < k small.

    Returns the cap ``order - 1`` when the defect vanishes at truncation.
    """
    defect = pullback_defect(F)
    scale = max(1.0, F.max_abs_coeff())
    first_bad = defect.min_degree_above(tol * scale)
    cap = F.order - 1
    if first_bad is None:
        return cap
    return min(cap, first_bad)


# ---------------------------------------------------------------------------
# Hamiltonian decomposition of homogeneous symplectic fields
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def homog_exponents(nvars: int, d: int) -> tuple:
    """All exponent tuples of total degree ``d``, deterministic order."""
    out = []
    for bars in combinations_with_replacement(range(nvars), d):
        e = [0] * nvars
        for b in bars:
            e[b] += 1
        out.append(tuple(e))
    return tuple(sorted(out))


def homog_dim(nvars: int, d: int) -> int:
    return comb(nvars - 1 + d, d)


def nhat(n: int, k: int) -> int:
    """Dimension of the space of k-homogeneous Hamiltonian fields on C^(2n)."""
    return comb(2 * n + k, 2 * n - 1)


def linear_power_coeffs(c: np.ndarray, d: int) -> np.ndarray:
    """Coefficient vector of (c . z)^d over ``homog_exponents(len(c), d)``."""
    c = np.asarray(c, dtype=complex)
    exps = np.array(homog_exponents(c.size, d), dtype=np.int64)
    multinom = np.array([factorial(d) // np.prod([factorial(int(e)) for e in row])
                         for row in exps], dtype=float)
    return multinom * np.prod(c[None, :] ** exps, axis=1)


def _field_degree(P: Sequence[PolyScalar]) -> int:
    degs = {c.degree() for c in P if not c.is_zero()}
    if not degs:
        return -1
    if len(degs) > 1:
        raise PreconditionError(f"field is not homogeneous: degrees {sorted(degs)}")
    (d,) = degs
    for c in P:
        if not c.homogeneous_component(d).sub(c).is_zero():
            raise PreconditionError("field is not homogeneous")
    return d


def closedness_residual(P: Sequence[PolyScalar]) -> float:
    """Max coefficient of d(iota_P omega); zero iff the field is symplectic."""
    dim = P[0].dim
    n = dim // 2
    J = J_matrix(n)
    a = []
    for k in range(dim):
        acc = PolyScalar.zero(dim)
        for i in range(dim):
            if J[i, k] != 0:
                acc = acc.add(P[i].scale(J[i, k]))
        a.append(acc)
    worst = 0.0
    for k in range(dim):
        for l in range(k + 1, dim):
            res = a[l].derivative(k).sub(a[k].derivative(l))
            worst = max(worst, res.max_abs_coeff())
    return worst


def hamiltonian_potential(P: Sequence[PolyScalar],
                          tol: float = DEFAULT_TOL) -> PolyScalar:
    """The unique homogeneous H with H(0) = 0 and J . DH = P.

    Uses the Euler formula H = -(1/(r+1)) z^T J P(z); verified by symbolic
    differentiation before returning.
    """
    P = list(P)
    dim = P[0].dim
    n = dim // 2
    r = _field_degree(P)
    if r < 0:
        return PolyScalar.zero(dim)
    scale = max(1.0, max(c.max_abs_coeff() for c in P))
    residual = closedness_residual(P)
    if residual > tol * scale:
        raise PreconditionError(
            "field is not symplectic: d(iota_P omega) != 0",
            {"closedness_residual": residual})
    J = J_matrix(n)
    H = PolyScalar.zero(dim)
    for k in range(dim):
        JP_k = PolyScalar.zero(dim)
        for i in range(dim):
            if J[k, i] != 0:
                JP_k = JP_k.add(P[i].scale(J[k, i]))
        H = H.add(PolyScalar.variable(dim, k).mul(JP_k))
    H = H.scale(-1.0 / (r + 1))
    recon = hamiltonian_field(H)
    err = max(a.sub(b).max_abs_coeff() for a, b in zip(recon, P))
    if err > max(tol, 10 * residual) * scale:
        raise ToleranceError("potential verification failed", {"residual": err})
    return H


def hamiltonian_field(H: PolyScalar) -> list[PolyScalar]:
    """The vector field J . DH."""
    dim = H.dim
    n = dim // 2
    J = J_matrix(n)
    grad = H.gradient()
    out = []
    for i in range(dim):
        acc = PolyScalar.zero(dim)
        for k in range(dim):
            if J[i, k] != 0:
                acc = acc.add(grad[k].scale(J[i, k]))
        out.append(acc)
    return out


def linear_form_power_basis(n: int, d: int, seed: int,
                            cond_bound: float = 1e5,
                            rounds: int = RESAMPLE_ROUNDS,
                            direction_ok=None) -> np.ndarray:
    """Unit vectors b_j whose paired powers (b_j^T J z)^d span degree-d forms.

    Draws complex Gaussian directions, normalizes them, and resamples until
    the coefficient matrix in the monomial basis is acceptably conditioned;
    poor conditioning here turns directly into cancellation between the
    decomposition terms downstream.  ``direction_ok`` filters individual
    draws (callers use it to keep the pairing geometry of their constraint
    sets healthy).  Deterministic for a fixed seed.
    """
    if d < 1:
        raise PreconditionError("degree must be >= 1")
    dim = 2 * n
    N = homog_dim(dim, d)
    rng = np.random.default_rng(seed)
    J = J_matrix(n)
    last_cond = None
    for _ in range(rounds):
        picked = []
        for _ in range(12):
            batch = rng.standard_normal((N, dim)) + \
                1j * rng.standard_normal((N, dim))
            batch /= np.linalg.norm(batch, axis=1)[:, None]
            for row in batch:
                if direction_ok is None or direction_ok(row):
                    picked.append(row)
                    if len(picked) == N:
                        break
            if len(picked) == N:
                break
        if len(picked) < N:
            continue
        b = np.stack(picked)
        M = np.stack([linear_power_coeffs(J.T @ b[j], d) for j in range(N)])
        norms = np.linalg.norm(M, axis=1)
        if np.any(norms == 0):
            continue
        cond = float(np.linalg.cond(M / norms[:, None]))
        last_cond = cond
        if np.isfinite(cond) and cond <= cond_bound:
            return b
    raise ToleranceError(
        "could not find a well-conditioned power basis",
        {"n": n, "degree": d, "last_condition": last_cond})


class HamiltonianDecomposition:
    """P(z) = sum_j c_j (b_j^T J z)^k b_j for a k-homogeneous field P."""

    __slots__ = ("directions", "coefficients", "degree")

    def __init__(self, directions: np.ndarray, coefficients: np.ndarray,
                 degree: int):
        self.directions = np.asarray(directions, dtype=complex)
        self.coefficients = np.asarray(coefficients, dtype=complex)
        self.degree = int(degree)
        n = self.directions.shape[1] // 2
        if self.directions.shape[0] != nhat(n, self.degree):
            raise PreconditionError(
                "decomposition length must equal binom(2n+k, 2n-1)",
                {"expected": nhat(n, self.degree),
                 "got": self.directions.shape[0]})
        if self.coefficients.shape[0] != self.directions.shape[0]:
            raise PreconditionError("coefficient/direction length mismatch")

    def resum(self) -> list[PolyScalar]:
        dim = self.directions.shape[1]
        n = dim // 2
        k = self.degree
        exps = homog_exponents(dim, k)
        J = J_matrix(n)
        rows = np.stack([linear_power_coeffs(J.T @ b, k)
                         for b in self.directions])
        weighted = self.coefficients[:, None, None] * \
            rows[:, :, None] * self.directions[:, None, :]
        comp_coeffs = weighted.sum(axis=0)
        out = []
        for i in range(dim):
            out.append(PolyScalar(dim, dict(zip(exps, comp_coeffs[:, i].tolist()))))
        return out


def hamiltonian_decompose(P: Sequence[PolyScalar], seed: int,
                          degree: int | None = None,
                          tol: float = DEFAULT_TOL,
                          direction_ok=None) -> HamiltonianDecomposition:
    """Decompose a homogeneous symplectic field into paired-power shear fields.

    The directions come from ``linear_form_power_basis`` at degree k+1; the
    coefficients solve the expansion of the Hamiltonian potential in that
    basis.  The resummation is checked against the input before returning.
    """
    P = list(P)
    dim = P[0].dim
    n = dim // 2
    k = _field_degree(P)
    if k < 0:
        if degree is None:
            raise PreconditionError("zero field needs an explicit degree")
        k = degree
        b = linear_form_power_basis(n, k + 1, seed, direction_ok=direction_ok)
        return HamiltonianDecomposition(b, np.zeros(b.shape[0], complex), k)
    if degree is not None and degree != k:
        raise PreconditionError(f"field degree {k} != requested {degree}")
    H = hamiltonian_potential(P, tol)
    b = linear_form_power_basis(n, k + 1, seed, direction_ok=direction_ok)
    exps = homog_exponents(dim, k + 1)
    J = J_matrix(n)
    M = np.stack([linear_power_coeffs(J.T @ bj, k + 1) for bj in b])
    h = np.array([H.coeff(e) for e in exps], dtype=complex)
    norms = np.linalg.norm(M, axis=1)
    y = np.linalg.solve((M / norms[:, None]).T, h)
    c_tilde = y / norms
    coeffs = (k + 1) * c_tilde
    dec = HamiltonianDecomposition(b, coeffs, k)
    recon = dec.resum()
    scale = max(1.0, max(c.max_abs_coeff() for c in P))
    err = max(a.sub(b2).max_abs_coeff() for a, b2 in zip(recon, P))
    if err > max(1e-8, tol) * scale:
        raise ToleranceError("decomposition resummation failed",
                             {"residual": err})
    return dec
