import numpy as np
import pytest

from sympjet.errors import PreconditionError, ToleranceError
from sympjet.poly import PolyScalar
from sympjet.tame import (DiscreteSet, a_limit, a_sequence, covering_certificate,
                          fiber_separation, gradient_interpolant,
                          lagrangian_tame_word, plane_embed,
                          projection_bound_check, rr_delta, set_split,
                          shell_constants, shell_delta, unavoidable_set)


def test_discrete_set_rejects_repeats():
    with pytest.raises(PreconditionError):
        DiscreteSet(np.array([[1.0, 0, 0, 0], [1.0, 0, 0, 0]]))


def test_gradient_interpolant_examples():
    f = gradient_interpolant(np.array([[0.0]]), np.array([[5.0 + 1j]]))
    assert f.coeff((1,)) == pytest.approx(5.0 + 1j)
    f2 = gradient_interpolant(np.array([[0.0], [1.0]]), np.array([[0.0], [2.0]]))
    assert abs(f2.coeff((2,)) - 1.0) < 1e-10
    assert abs(f2.coeff((1,))) < 1e-10
    f3 = gradient_interpolant(np.array([[0.0], [1.0]]),
                              np.array([[0.0], [0.0]]))
    assert f3.is_zero()
    with pytest.raises(PreconditionError):
        gradient_interpolant(np.array([[0.0], [0.0]]), np.array([[1.0], [2.0]]))


def test_gradient_interpolant_random(rng):
    w = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    g = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    f = gradient_interpolant(w, g)
    for k in range(4):
        grad = np.array([f.derivative(i).evaluate(w[k]) for i in range(2)])
        assert np.max(np.abs(grad - g[k])) < 1e-7


def test_lagrangian_tame_word(rng):
    n = 2
    z = rng.standard_normal((5, n)) + 1j * rng.standard_normal((5, n))
    w = np.stack([k * np.ones(n) + 0.3 * rng.standard_normal(n)
                  for k in range(1, 6)])
    E = DiscreteSet(np.concatenate([z, w], axis=1))
    word = lagrangian_tame_word(E)
    assert len(word) == 2
    for idx in range(5):
        want = np.zeros(2 * n, dtype=complex)
        want[0] = idx + 1
        assert np.max(np.abs(word.apply(E.points[idx]) - want)) < 1e-8


def test_lagrangian_tame_word_needs_injective_fibers():
    pts = np.array([[1.0, 0, 0.5, 0.5], [2.0, 0, 0.5, 0.5]], dtype=complex)
    with pytest.raises(PreconditionError):
        lagrangian_tame_word(DiscreteSet(pts))


def test_fiber_separation(rng):
    n = 2
    pts = []
    wvals = [np.array([0.5, -0.2]), np.array([2.0, 1.0]), np.array([-1.0, 0.7])]
    sizes = [2, 1, 3]
    for wv, s in zip(wvals, sizes):
        for t in range(s):
            zv = rng.standard_normal(n) + 1j * rng.standard_normal(n) + t
            pts.append(np.concatenate([zv, wv]))
    fs = fiber_separation(DiscreteSet(np.array(pts)))
    assert all(fs.radii[i] < fs.radii[i + 1] for i in range(len(fs.radii) - 1))
    moved = fs.word.apply(np.array(pts))
    mags = np.linalg.norm(moved[:, :n], axis=1)
    idx = 0
    for fi, s in enumerate(sizes):
        for _ in range(s):
            assert fs.radii[fi] < mags[idx] < fs.radii[fi + 1]
            idx += 1
    # singleton fibers come out separated as well
    single = DiscreteSet(np.array(pts)[[0, 2, 3]])
    fs2 = fiber_separation(single)
    assert len(fs2.fiber_values) == 3


def test_set_split():
    pts = np.array([[3, 0, 1, 0], [0, 1, 2, 2], [1, 1, 1, 1]], dtype=complex)
    E1, E2 = set_split(DiscreteSet(pts))
    assert len(E1) == 2 and len(E2) == 1  # the tie goes to the first part
    z_only = DiscreteSet(np.array([[1, 0, 0, 0], [2, 0, 0, 0]], dtype=complex))
    A, B = set_split(z_only)
    assert len(A) == 2 and B is None


def test_plane_embed():
    f1 = PolyScalar(2, {(1, 0): 1.0, (0, 2): 1.0})  # z + w^2
    f2 = PolyScalar(2, {(0, 1): 1.0})
    emb = plane_embed((f1, f2), 1, 2)
    z = np.array([1.0, 2.0, 3.0, 4.0], dtype=complex)
    out = emb.apply(z)
    assert np.allclose(out, [1 + 9, 2, 3, 4])
    ident = plane_embed((PolyScalar(2, {(1, 0): 1.0}),
                         PolyScalar(2, {(0, 1): 1.0})), 2, 2)
    assert np.allclose(ident.apply(z), z)
    bad = (PolyScalar(2, {(1, 0): 2.0}), PolyScalar(2, {(0, 1): 1.0}))
    with pytest.raises(PreconditionError):
        plane_embed(bad, 1, 2)


def test_projection_bound_identity_and_diagonal():
    n = 3
    P = np.diag([1.0, 0, 0]).astype(complex)
    u = np.array([0, 1.0, 0], dtype=complex)
    chk = projection_bound_check(np.eye(n, dtype=complex), P, u)
    assert chk.holds and chk.lhs == pytest.approx(1.0) and chk.rhs == pytest.approx(1.0)
    # the diagonal family tracks the bound tightly
    for t in (0.5, 1.0, 2.0, 5.0):
        A = np.diag([t, 1 / t]).astype(complex)
        P2 = np.diag([1.0, 0.0]).astype(complex)
        u2 = np.array([0, 1.0], dtype=complex)
        chk2 = projection_bound_check(A, P2, u2)
        assert chk2.lhs == pytest.approx(t)
        assert chk2.rhs == pytest.approx(t)
        assert chk2.holds


def test_projection_bound_counterexample_detected():
    # the printed inequality fails for contraction inside the kernel; the
    # checker's job is to report it honestly
    A = np.diag([0.5, 0.5, 4.0]).astype(complex)
    P = np.diag([1.0, 0, 0]).astype(complex)
    u = np.array([0, 1.0, 0], dtype=complex)
    chk = projection_bound_check(A, P, u)
    assert chk.lhs == pytest.approx(2.0)
    assert chk.rhs == pytest.approx(0.5)
    assert not chk.holds


def test_projection_bound_preconditions():
    with pytest.raises(PreconditionError):
        projection_bound_check(np.diag([2.0, 1.0]).astype(complex),
                               np.diag([1.0, 0.0]).astype(complex),
                               np.array([0, 1.0], complex))
    with pytest.raises(PreconditionError):
        projection_bound_check(np.eye(2, dtype=complex),
                               np.diag([1.0, 0.0]).astype(complex),
                               np.array([1.0, 0.0], complex))


def test_shell_constants_and_deltas():
    seq, limit, deltas = shell_constants(1.5, 8)
    assert np.allclose(seq[:4], [1.5, 2.5, 2.75, 2.75 + 1 / 9])
    assert np.all(np.diff(seq) > 0)
    assert np.all(seq < limit + 1e-12)
    assert np.all(deltas > 0)
    assert np.all(np.diff(deltas) < 0)
    assert abs(shell_delta(1, 1.5) - 4.0 / 177147.0) < 1e-12 * 4.0 / 177147.0
    assert rr_delta(1.5, 1.5, 3.0, 2) == 0.0
    with pytest.raises(PreconditionError):
        a_sequence(1.0, 10)


def test_a_sequence_limit_tail():
    K = 1_000_000
    seq = a_sequence(1.5, K)
    gap = a_limit(1.5) - seq[-1]
    # analytic tail bracket: 1/K < sum_{k >= K} k^-2 < 1/(K-1)
    assert 1.0 / K < gap < 1.0 / (K - 1)


def test_unavoidable_set_shells():
    ss = unavoidable_set(2, 2, 1.5, 4, 1e-6, cert_samples=2000, seed=7)
    assert len(ss.shells) == 2
    for sh in ss.shells:
        assert np.max(np.abs(np.linalg.norm(sh.sphere_points, axis=1) - sh.j)) < 1e-9
        rep = covering_certificate(sh, 2000, seed=11)
        assert rep["holds"]
    assert ss.plane_projection_counts()[1] == ss.shells[0].sphere_points.shape[0]
    assert "net" in ss.note


def test_unavoidable_set_degenerate_box():
    ss = unavoidable_set(2, 1, 1.5, 3, 0.0, cert_samples=10)
    sh = ss.shells[0]
    assert sh.box_points.shape[0] == 1
    assert covering_certificate(sh, 100, seed=0)["holds"]


def test_unavoidable_set_preconditions():
    with pytest.raises(PreconditionError):
        unavoidable_set(1, 1, 1.5, 3, 0.0)
    with pytest.raises(ToleranceError):
        unavoidable_set(2, 4, 1.5, 3, 1.0, max_points=1000)
