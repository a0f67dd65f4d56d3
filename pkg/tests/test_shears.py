import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sympjet.jets import JetMap, jet_compose
from sympjet.poly import PolyScalar, UniPoly
from sympjet.shears import (GradShear, Shear, Word, shear_apply, word_apply,
                            word_inverse, word_jet, word_verify)
from sympjet.symplectic import (J_matrix, lambda_values, pullback_defect,
                                symplectic_residual)

from conftest import random_gradshear, random_shear, random_shear_word


def test_shear_apply_examples():
    delta = np.ones(2, dtype=complex)
    e1 = np.array([1.0, 0.0], dtype=complex)
    S = Shear(delta - e1, UniPoly([0.0, 1.0]))
    assert np.max(np.abs(shear_apply(S, 2 * e1) - 2 * delta)) < 1e-14
    idS = Shear(e1, UniPoly.zero())
    z = np.array([0.4 + 1j, -0.7], dtype=complex)
    assert np.max(np.abs(idS.apply(z) - z)) == 0


def test_gradshear_apply_example():
    f = PolyScalar(1, {(2,): 1.0})  # potential w^2
    G = GradShear("first", f)
    z = np.array([1.0, 3.0], dtype=complex)
    out = G.apply(z)
    assert np.allclose(out, [1.0 + 6.0, 3.0])
    G2 = GradShear("second", f)
    out2 = G2.apply(z)
    assert np.allclose(out2, [1.0, 3.0 + 2.0])


def test_lambda_invariance(rng):
    S = random_shear(4, rng, fdeg=4)
    pts = rng.standard_normal((30, 4)) + 1j * rng.standard_normal((30, 4))
    before = lambda_values(pts, S.v)
    after = lambda_values(S.apply(pts), S.v)
    assert np.max(np.abs(before - after)) < 1e-12


def test_word_inverse_round_trip(rng):
    W = random_shear_word(4, 3, rng, zero_const=False)
    Winv = word_inverse(W)
    pts = 0.5 * (rng.standard_normal((100, 4)) + 1j * rng.standard_normal((100, 4)))
    back = Winv.apply(W.apply(pts))
    assert np.max(np.abs(back - pts)) < 1e-12
    assert len(word_inverse(Word(()))) == 0


def test_word_jacobian_symplectic(rng):
    factors = [random_shear(4, rng), random_gradshear(2, rng),
               random_shear(4, rng)]
    W = Word(tuple(factors))
    J = J_matrix(2)
    for _ in range(20):
        z = 2 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        G = W.jacobian(z)
        assert np.max(np.abs(G.T @ J @ G - J)) < 1e-9


def test_word_jet_examples(rng):
    ident = word_jet(Word(()), np.zeros(2), 3)
    assert all(a.sub(b).max_abs_coeff() == 0 for a, b in
               zip(ident.components, JetMap.identity(np.zeros(2), 3).components))
    S = Shear(np.array([1.0, 0.0], complex), UniPoly([0.0, -1.0]))
    from sympjet.jets import linear_part
    M = linear_part(word_jet(Word((S,)), np.zeros(2), 1))
    assert np.max(np.abs(M - np.array([[1, 1], [0, 1]]))) < 1e-14


def test_word_jet_inverse_composition(rng):
    W = random_shear_word(4, 3, rng, zero_const=False)
    p = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    F = word_jet(W, p, 3)
    G = word_jet(W.inverse(), F.constant_part(), 3)
    both = jet_compose(G, F, tol=1e-6)
    ident = JetMap.identity(p, 3)
    err = max(a.sub(b).max_abs_coeff()
              for a, b in zip(both.components, ident.components))
    assert err < 1e-9


def test_gradshear_jet_pullback(rng):
    for _ in range(5):
        G = random_gradshear(2, rng)
        p = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        jm = G.jet(p, 4)
        assert pullback_defect(jm).max_abs_coeff() < 1e-10


def test_word_defect_vanishes(rng):
    W = Word(tuple([random_shear(4, rng), random_gradshear(2, rng)]))
    jm = word_jet(W, np.zeros(4), 4)
    assert pullback_defect(jm).max_abs_coeff() < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_shear_symplectic_everywhere(seed):
    rng = np.random.default_rng(seed)
    S = random_shear(2, rng, fdeg=5, zero_const=False)
    z = 2 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    G = S.jacobian(z)
    assert symplectic_residual(G) < 1e-9


def test_word_verify_report(rng):
    W = random_shear_word(2, 2, rng)
    target = word_jet(W, np.zeros(2), 3)
    rep = word_verify(W, jet_target=target, fixpoints=[],
                      n_samples=10, seed=1)
    assert rep.passed
    assert rep.symplectic_residual < 1e-9
    assert rep.jet_residual < 1e-10
    # report, not raise, on a planted failure
    rep2 = word_verify(W, point_maps=[(np.zeros(2), np.ones(2))],
                       n_samples=5, seed=1)
    assert not rep2.passed


def test_word_apply_alias(rng):
    W = random_shear_word(2, 2, rng)
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    assert np.array_equal(word_apply(W, z), W.apply(z))


def test_lambda_invariance_symbolic(rng):
    # the pairing functional composed with the shear jet is unchanged
    from sympjet.poly import PolyScalar
    S = random_shear(4, rng, fdeg=3, zero_const=False)
    p = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    jm = S.jet(p, 4)
    n = 2
    jv = J_matrix(n) @ S.v
    lam_of_image = PolyScalar.zero(4)
    for i in range(4):
        lam_of_image = lam_of_image.add(jm.components[i].scale(jv[i]))
    lam_direct = PolyScalar.linear(jv, const=complex(p @ jv))
    assert lam_of_image.sub(lam_direct).max_abs_coeff() < 1e-10
