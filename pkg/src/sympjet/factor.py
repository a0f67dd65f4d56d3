"""Factorization of symplectic matrices into transvections and elementary
block-unipotent factors, and their realization as shears.

Two dialects are produced.  Transvections ``x -> x + alpha (x^T J v) v`` come
out of a pair-by-pair reduction of the standard hyperbolic basis and give the
shortest words.  Elementary factors E^u(alpha E~_ij) / E^l(alpha E~_ij) have
fixed shear directions with guaranteed behaviour on the diagonal line
span{(1,...,1)}, which the constrained interpolation stages rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .defaults import DEFAULT_TOL, RESAMPLE_ROUNDS
from .errors import PreconditionError, ToleranceError
from .poly import UniPoly
from .shears import Shear
from .symplectic import J_matrix, is_symplectic_matrix, omega

# -- elementary building blocks ------------------------------------------------


def sym_basis(n: int, i: int, j: int) -> np.ndarray:
    """The symmetric basis matrix E~_ij (1-based indices, i <= j)."""
    if not (1 <= i <= j <= n):
        raise PreconditionError(f"indices ({i}, {j}) out of range for n={n}")
    A = np.zeros((n, n), dtype=complex)
    if i == j:
        A[i - 1, i - 1] = 1.0
    else:
        A[i - 1, j - 1] = A[j - 1, i - 1] = 1.0
        A[i - 1, i - 1] = A[j - 1, j - 1] = 1.0
    return A


def e_upper(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    M = np.eye(2 * n, dtype=complex)
    M[:n, n:] = A
    return M


def e_lower(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    M = np.eye(2 * n, dtype=complex)
    M[n:, :n] = A
    return M


def etilde_vec(n: int, i: int, j: int) -> np.ndarray:
    """Shear direction for upper factors: -(e_i + e_j), or -e_i when i = j."""
    v = np.zeros(2 * n, dtype=complex)
    v[i - 1] -= 1.0
    v[j - 1] -= 1.0
    if i == j:
        v[i - 1] = -1.0
    return v


def ftilde_vec(n: int, i: int, j: int) -> np.ndarray:
    """Shear direction for lower factors: e_(n+i) + e_(n+j), or e_(n+i)."""
    v = np.zeros(2 * n, dtype=complex)
    v[n + i - 1] += 1.0
    v[n + j - 1] += 1.0
    if i == j:
        v[n + i - 1] = 1.0
    return v


@dataclass(frozen=True)
class ElemFactor:
    """E^u(alpha E~_ij) or E^l(alpha E~_ij); indices are 1-based."""

    n: int
    side: str  # "u" | "l"
    i: int
    j: int
    alpha: complex

    def __post_init__(self):
        if self.side not in ("u", "l"):
            raise PreconditionError(f"bad side {self.side!r}")
        if not (1 <= self.i <= self.j <= self.n):
            raise PreconditionError(
                f"indices ({self.i}, {self.j}) out of range for n={self.n}")

    @property
    def matrix(self) -> np.ndarray:
        A = complex(self.alpha) * sym_basis(self.n, self.i, self.j)
        return e_upper(A) if self.side == "u" else e_lower(A)

    @property
    def dim(self) -> int:
        return 2 * self.n


@dataclass(frozen=True)
class Transvection:
    """The linear shear x -> x + alpha (x^T J v) v."""

    v: np.ndarray
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=complex))

    @property
    def matrix(self) -> np.ndarray:
        n = self.v.size // 2
        jv = J_matrix(n) @ self.v
        return np.eye(self.v.size, dtype=complex) + \
            complex(self.alpha) * np.outer(self.v, jv)

    @property
    def dim(self) -> int:
        return self.v.size


def elem_matrix(f: ElemFactor) -> np.ndarray:
    return f.matrix


@dataclass(frozen=True)
class FactorWord:
    """Ordered factors; the product is factors[0] @ factors[1] @ ...

    so the rightmost factor acts first, matching shear-word convention.
    """

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def __len__(self) -> int:
        return len(self.factors)

    def matrix(self, dim: int | None = None) -> np.ndarray:
        if not self.factors:
            if dim is None:
                raise PreconditionError("empty word needs an explicit dimension")
            return np.eye(dim, dtype=complex)
        M = self.factors[0].matrix
        for f in self.factors[1:]:
            M = M @ f.matrix
        return M


def split_symmetric_block(n: int, side: str, A: np.ndarray,
                          tol: float = DEFAULT_TOL) -> list[ElemFactor]:
    """Coordinates of a symmetric block in the E~_ij basis, one factor each.

    The emitted factors commute (same side), so their product equals
    E^side(A) exactly by additivity.
    """
    A = np.asarray(A, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(A))))
    if float(np.max(np.abs(A - A.T))) > tol * scale:
        raise PreconditionError(
            "block is not symmetric",
            {"asymmetry": float(np.max(np.abs(A - A.T)))})
    out = []
    for i in range(1, n + 1):
        diag = A[i - 1, i - 1] - sum(A[i - 1, j - 1]
                                     for j in range(1, n + 1) if j != i)
        if diag != 0:
            out.append(ElemFactor(n, side, i, i, diag))
        for j in range(i + 1, n + 1):
            if A[i - 1, j - 1] != 0:
                out.append(ElemFactor(n, side, i, j, A[i - 1, j - 1]))
    return out


# -- transvection factorization --------------------------------------------------


def _sqrtm_db(A: np.ndarray, iters: int = 80) -> np.ndarray:
    """Principal matrix square root by the Denman-Beavers iteration."""
    X = A.astype(complex)
    Y = np.eye(A.shape[0], dtype=complex)
    for _ in range(iters):
        Xi = np.linalg.inv(X)
        Yi = np.linalg.inv(Y)
        Xn = 0.5 * (X + Yi)
        Yn = 0.5 * (Y + Xi)
        if float(np.max(np.abs(Xn - X))) <= 1e-15 * max(1.0, float(np.max(np.abs(Xn)))):
            return Xn
        X, Y = Xn, Yn
    res = float(np.max(np.abs(X @ X - A)))
    if res > 1e-10 * max(1.0, float(np.max(np.abs(A)))):
        raise ToleranceError("matrix square root did not converge",
                             {"residual": res})
    return X


def _matrix_log(M: np.ndarray) -> np.ndarray:
    """Principal logarithm by inverse scaling-and-squaring."""
    dim = M.shape[0]
    I = np.eye(dim, dtype=complex)
    R = M.astype(complex)
    s = 0
    while float(np.max(np.abs(R - I))) > 0.3:
        if s > 60:
            raise ToleranceError("matrix log scaling failed")
        R = _sqrtm_db(R)
        s += 1
    E = R - I
    L = np.zeros_like(E)
    term = E.copy()
    sign = 1.0
    for k in range(1, 80):
        L += (sign / k) * term
        term = term @ E
        sign = -sign
        if float(np.max(np.abs(term))) < 1e-20:
            break
    return L * (2.0 ** s)


def _sym_rank_one_coords(S: np.ndarray) -> list:
    """S = sum c w w^T over the rank-one frame {e_i e_i^T, (e_i+e_j)(e_i+e_j)^T}."""
    d = S.shape[0]
    out = []
    for i in range(d):
        diag = S[i, i] - sum(S[i, j] for j in range(d) if j != i)
        if diag != 0:
            w = np.zeros(d, dtype=complex)
            w[i] = 1.0
            out.append((w, complex(diag)))
        for j in range(i + 1, d):
            if S[i, j] != 0:
                w = np.zeros(d, dtype=complex)
                w[i] = w[j] = 1.0
                out.append((w, complex(S[i, j])))
    return out


def _factor_frame(M: np.ndarray) -> FactorWord:
    """Log-frame factorization: peel exp of small Hamiltonian chunks.

    Writes log R = J S, expands S over the rank-one symmetric frame, and
    emits one small-slope transvection per frame coordinate; every direction
    J w pairs the diagonal line with a unit-size margin, and slopes total
    roughly the log's norm, which keeps downstream compositions from
    inflating.  Deterministic; no randomness involved.
    """
    dim = M.shape[0]
    n = dim // 2
    J = J_matrix(n)
    I = np.eye(dim, dtype=complex)
    R = M.astype(complex)
    factors: list[Transvection] = []
    for _ in range(300):
        gap = float(np.max(np.abs(R - I)))
        if gap <= 1e-13:
            break
        L = _matrix_log(R)
        S = -J @ L
        S = (S + S.T) / 2
        m = max(1, int(np.ceil(float(np.max(np.abs(S))) / 0.25)))
        chunk = [(w, c) for w, c in _sym_rank_one_coords(S / m)]
        P = I
        ts = []
        for w, c in chunk:
            t = Transvection(J @ w, -c)
            ts.append(t)
            P = P @ t.matrix
        R = np.linalg.solve(P, R)
        factors.extend(ts)
    else:
        raise ToleranceError("frame factorization did not converge",
                             {"gap": gap})
    return FactorWord(tuple(factors))


def _constraint_kernel(dim: int, constraints: list[np.ndarray]) -> np.ndarray:
    """Basis of directions t with omega(c, t) = 0 for every constraint c."""
    n = dim // 2
    J = J_matrix(n)
    if not constraints:
        return np.eye(dim, dtype=complex)
    C = np.stack(constraints) @ J
    _, s, vh = np.linalg.svd(C)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    return vh[rank:].conj().T


def factor_sp(M: np.ndarray, seed: int, mode: str = "transvections",
              max_factors: int | None = None, tol: float = DEFAULT_TOL,
              direction_ok: Callable[[np.ndarray], bool] | None = None) -> FactorWord:
    """Factor a symplectic matrix into transvections or elementary factors.

    The transvection mode fixes the images of the standard hyperbolic basis
    pairs one pair at a time, mapping each image back with one transvection
    when the pairing is nonzero and through a seeded intermediate witness
    otherwise.  Deterministic for a fixed seed.
    """
    M = np.asarray(M, dtype=complex)
    dim = M.shape[0]
    if not is_symplectic_matrix(M, max(tol, 1e-7)):
        raise PreconditionError("matrix is not symplectic")
    if mode == "elementary":
        word = _factor_elementary(M, seed, tol)
    elif mode == "transvections":
        word = _factor_transvections(M, seed, direction_ok)
    elif mode == "frame":
        word = _factor_frame(M)
    else:
        raise PreconditionError(f"unknown factorization mode {mode!r}")
    if max_factors is not None and len(word) > max_factors:
        raise ToleranceError("factor cap exceeded",
                             {"count": len(word), "cap": max_factors})
    recon = word.matrix(dim)
    scale = max(1.0, float(np.linalg.norm(M)))
    residual = float(np.linalg.norm(recon - M)) / scale
    if residual > 1e-7:
        raise ToleranceError("factorization reconstruction failed",
                             {"relative_residual": residual})
    return word


def _factor_transvections(M: np.ndarray, seed: int,
                          direction_ok) -> FactorWord:
    dim = M.shape[0]
    n = dim // 2
    rng = np.random.default_rng(seed)
    eye = np.eye(dim, dtype=complex)
    cur = M.copy()
    applied: list[Transvection] = []

    def pairing_scale(u, w):
        return max(1.0, float(np.linalg.norm(u) * np.linalg.norm(w)))

    def usable(v: np.ndarray) -> bool:
        return direction_ok is None or bool(direction_ok(v))

    def apply_transvection(v: np.ndarray, alpha: complex):
        # unit directions keep the realized shear coefficients tame
        nonlocal cur
        s = float(np.linalg.norm(v))
        t = Transvection(v / s, alpha * s * s)
        cur = t.matrix @ cur
        applied.append(t)

    def map_to(u: np.ndarray, w: np.ndarray, constraints: list[np.ndarray]):
        if float(np.max(np.abs(u - w))) <= 1e-14 * pairing_scale(u, w):
            return
        o = omega(u, w)
        direct = abs(o) > 1e-2 * pairing_scale(u, w)
        if direct and usable(w - u):
            apply_transvection(w - u, 1.0 / o)
            return
        kernel = _constraint_kernel(dim, constraints)
        if kernel.shape[1] == 0:
            raise ToleranceError("no admissible witness directions remain")
        best = None
        for _ in range(4 * RESAMPLE_ROUNDS):
            coeff = rng.standard_normal(kernel.shape[1]) + \
                1j * rng.standard_normal(kernel.shape[1])
            t = kernel @ coeff
            y = u + t
            o1 = omega(u, y)
            o2 = omega(y, w)
            margin = min(abs(o1), abs(o2)) / pairing_scale(u, w)
            if margin < 1e-3:
                continue
            if not (usable(y - u) and usable(w - y)):
                continue
            if best is None or margin > best[0]:
                best = (margin, y, o1, o2)
            if margin > 0.35:
                break
        if best is None or best[0] < 1e-3:
            raise ToleranceError("witness search failed",
                                 {"stage": len(applied)})
        _, y, o1, o2 = best
        apply_transvection(y - u, 1.0 / o1)
        apply_transvection(w - y, 1.0 / o2)

    fixed: list[np.ndarray] = []
    for k in range(n):
        map_to(cur[:, k].copy(), eye[:, k], fixed)
        fixed.append(eye[:, k])
        map_to(cur[:, n + k].copy(), eye[:, n + k], fixed)
        fixed.append(eye[:, n + k])
    factors = tuple(Transvection(t.v, -t.alpha) for t in applied)
    return FactorWord(factors)


def _factor_elementary(M: np.ndarray, seed: int, tol: float) -> FactorWord:
    """Block Gaussian factorization into E^u/E^l factors.

    Writes M = E^l(-S0) E^u(X) diag(D^-T, D) E^l(Y) after a seeded symmetric
    kick S0 makes the lower-right block D invertible, then expands the torus
    through two symmetric factors of D and the block analog of the classical
    w(alpha) = E^u E^l E^u identity.
    """
    dim = M.shape[0]
    n = dim // 2
    rng = np.random.default_rng(seed)
    I = np.eye(n, dtype=complex)
    A, B = M[:n, :n], M[:n, n:]
    C, D = M[n:, :n], M[n:, n:]

    last_err: dict = {}
    for round_idx in range(RESAMPLE_ROUNDS):
        if round_idx == 0:
            S0 = np.zeros((n, n), dtype=complex)
        else:
            base = rng.integers(-2, 3, size=(n, n)).astype(complex)
            base += 0.3 * (rng.random((n, n)) - 0.5)
            base += 0.3j * (rng.random((n, n)) - 0.5)
            S0 = (base + base.T) / 2
        D2 = D + S0 @ B
        C2 = C + S0 @ A
        if abs(np.linalg.det(D2)) < 1e-10 or np.linalg.cond(D2) > 1e7:
            last_err = {"reason": "singular block"}
            continue
        X = B @ np.linalg.inv(D2)
        Y = np.linalg.solve(D2, C2)
        scale = max(1.0, float(np.max(np.abs(M))))
        if max(float(np.max(np.abs(X - X.T))),
               float(np.max(np.abs(Y - Y.T)))) > 1e-7 * scale ** 2:
            last_err = {"reason": "asymmetric Gauss blocks"}
            continue
        X = (X + X.T) / 2
        Y = (Y + Y.T) / 2
        lam, V = np.linalg.eig(D2)
        if np.linalg.cond(V) > 1e7 or np.min(np.abs(lam)) < 1e-9:
            last_err = {"reason": "defective torus block"}
            continue
        S1 = V @ np.diag(lam) @ V.T
        S2 = np.linalg.inv(V).T @ np.linalg.inv(V)
        S1 = (S1 + S1.T) / 2
        S2 = (S2 + S2.T) / 2
        if np.linalg.cond(S1) > 1e8 or np.linalg.cond(S2) > 1e8:
            last_err = {"reason": "ill-conditioned symmetric split"}
            continue
        P1 = np.linalg.inv(S1)
        P2 = np.linalg.inv(S2)
        # diag(S^-1, S) = W(S^-1) W(-I), W(P) = E^u(P) E^l(-P^-1) E^u(P)
        blocks = [("l", -S0), ("u", X)]
        for P, S in ((P1, S1), (P2, S2)):
            blocks += [("u", P), ("l", -S), ("u", P - I),
                       ("l", I), ("u", -I)]
        blocks += [("l", Y)]
        merged: list[tuple[str, np.ndarray]] = []
        for side, blk in blocks:
            if merged and merged[-1][0] == side:
                merged[-1] = (side, merged[-1][1] + blk)
            else:
                merged.append((side, blk.copy()))
        factors: list[ElemFactor] = []
        for side, blk in merged:
            factors.extend(split_symmetric_block(n, side, blk, tol=1e-6 * scale))
        word = FactorWord(tuple(factors))
        recon = word.matrix(dim)
        if float(np.linalg.norm(recon - M)) / max(1.0, float(np.linalg.norm(M))) <= 1e-8:
            return word
        last_err = {"reason": "reconstruction residual",
                    "residual": float(np.linalg.norm(recon - M))}
    raise ToleranceError("elementary factorization failed", last_err)


def shear_of_factor(f: ElemFactor | Transvection) -> Shear:
    """The symplectic shear whose linear part is the factor's matrix."""
    if isinstance(f, Transvection):
        return Shear(f.v, UniPoly([0.0, f.alpha]))
    if f.side == "u":
        return Shear(etilde_vec(f.n, f.i, f.j), UniPoly([0.0, -f.alpha]))
    return Shear(ftilde_vec(f.n, f.i, f.j), UniPoly([0.0, f.alpha]))
