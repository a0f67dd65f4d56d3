import numpy as np
import pytest

from sympjet.errors import PreconditionError
from sympjet.jets import (JetMap, homogeneous_part, jet_compose, jet_invert,
                          linear_part, poly_eval)
from sympjet.poly import PolyScalar, UniPoly
from sympjet.shears import Shear

from conftest import random_shear_word


def _w(i, dim=2):
    return PolyScalar.variable(dim, i)


def test_poly_eval_identity_and_monomial():
    ident = JetMap.identity([0, 0], 2)
    z = np.array([0.3 + 1j, -0.2])
    assert np.max(np.abs(poly_eval(ident, z) - z)) < 1e-14
    mono = PolyScalar(2, {(1, 1): 1.0})
    assert poly_eval(mono, np.array([2.0, 3.0])) == 6.0


def test_poly_eval_shear_diagonal_image():
    # the linear-pairing shear sends a*e1 to a*(1,...,1)
    delta = np.ones(2, dtype=complex)
    e1 = np.array([1.0, 0.0], dtype=complex)
    S = Shear(delta - e1, UniPoly([0.0, 1.0]))
    jm = S.jet(np.zeros(2), 3)
    for a in (1.0, -2.5, 0.5 + 1j):
        assert np.max(np.abs(poly_eval(jm, a * e1) - a * delta)) < 1e-12


def test_jet_compose_identity_and_linear(rng):
    F = JetMap.identity([0, 0], 3)
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    B = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    LA = JetMap.from_linear(np.zeros(2), A, 3, const=np.zeros(2))
    LB = JetMap.from_linear(np.zeros(2), B, 3, const=np.zeros(2))
    comp = jet_compose(LA, LB)
    assert np.max(np.abs(linear_part(comp) - A @ B)) < 1e-12
    again = jet_compose(F, LA)
    assert np.max(np.abs(linear_part(again) - A)) < 1e-14


def test_jet_compose_hand_expansion():
    F = JetMap([0, 0], 2, [_w(0).add(_w(1).mul(_w(1))), _w(1)])
    G = JetMap([0, 0], 2, [_w(0), _w(1).add(_w(0).mul(_w(0)))])
    C = jet_compose(F, G)
    assert C.components[0].coeff((1, 0)) == 1.0
    assert C.components[0].coeff((0, 2)) == 1.0
    assert C.components[1].coeff((2, 0)) == 1.0
    assert C.components[1].coeff((0, 1)) == 1.0


def test_jet_compose_base_mismatch():
    F = JetMap.identity([1.0, 0], 2)
    G = JetMap.identity([0, 0], 2)
    with pytest.raises(PreconditionError):
        jet_compose(F, G)


def test_jet_invert_examples():
    ident = JetMap.identity([0, 0], 3)
    inv = jet_invert(ident)
    assert np.max(np.abs(linear_part(inv) - np.eye(2))) < 1e-13
    F = JetMap([0, 0], 2, [_w(0).add(_w(1).mul(_w(1))), _w(1)])
    G = jet_invert(F)
    assert G.components[0].coeff((0, 2)) == pytest.approx(-1.0)
    both = jet_compose(G, F)
    ident_c = JetMap.identity([0, 0], 2)
    assert max(a.sub(b).max_abs_coeff()
               for a, b in zip(both.components, ident_c.components)) < 1e-12


def test_jet_invert_round_trip_random(rng):
    for _ in range(8):
        W = random_shear_word(4, 3, rng)
        F = W.jet(np.zeros(4), 3)
        G = jet_invert(F)
        both = jet_compose(G, F, tol=1e-6)
        ident = JetMap.identity(np.zeros(4), 3)
        err = max(a.sub(b).max_abs_coeff()
                  for a, b in zip(both.components, ident.components))
        assert err < 1e-9


def test_jet_invert_singular():
    F = JetMap([0, 0], 2, [_w(0), PolyScalar.zero(2)])
    with pytest.raises(PreconditionError):
        jet_invert(F)


def test_homogeneous_part():
    ident = JetMap.identity([0, 0], 3)
    lin = homogeneous_part(ident, 1)
    assert lin[0].coeff((1, 0)) == 1.0
    assert all(c.is_zero() for c in homogeneous_part(ident, 2))
    v = np.array([1.0, 2.0], dtype=complex)
    S = Shear(v, UniPoly([0, 0, 1.0]))  # f(t) = t^2
    jm = S.jet(np.zeros(2), 3)
    quad = homogeneous_part(jm, 2)
    # degree-2 part is (z^T J v)^2 * v
    lam = PolyScalar.linear(np.array([[0, 1], [-1, 0]]) @ v)
    expect = lam.mul(lam)
    for i in range(2):
        assert quad[i].sub(expect.scale(v[i])).max_abs_coeff() < 1e-12
    with pytest.raises(PreconditionError):
        homogeneous_part(jm, 5)


def test_homogeneous_reconstruction(rng):
    W = random_shear_word(4, 2, rng)
    F = W.jet(np.zeros(4), 4)
    acc = [PolyScalar.zero(4) for _ in range(4)]
    for r in range(0, 5):
        for i, c in enumerate(homogeneous_part(F, r)):
            acc[i] = acc[i].add(c)
    assert max(a.sub(b).max_abs_coeff()
               for a, b in zip(acc, F.components)) == 0.0


def test_linear_part_examples():
    assert np.max(np.abs(linear_part(JetMap.identity([0, 0], 2)) - np.eye(2))) == 0
    e1 = np.array([1.0, 0.0], dtype=complex)
    S = Shear(e1, UniPoly([0.0, -1.0]))
    M = linear_part(S.jet(np.zeros(2), 2))
    assert np.max(np.abs(M - np.array([[1, 1], [0, 1]]))) < 1e-14


def test_compose_associativity(rng):
    for _ in range(5):
        A = random_shear_word(2, 2, rng).jet(np.zeros(2), 3)
        B = random_shear_word(2, 2, rng).jet(np.zeros(2), 3)
        C = random_shear_word(2, 2, rng).jet(np.zeros(2), 3)
        left = jet_compose(jet_compose(A, B, tol=1e-6), C, tol=1e-6)
        right = jet_compose(A, jet_compose(B, C, tol=1e-6), tol=1e-6)
        scale = max(1.0, left.max_abs_coeff())
        err = max(a.sub(b).max_abs_coeff()
                  for a, b in zip(left.components, right.components))
        assert err < 1e-10 * scale
