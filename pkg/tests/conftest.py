import numpy as np
import pytest

from sympjet.poly import PolyScalar, UniPoly
from sympjet.shears import Shear, GradShear, Word


def random_poly(dim, degree, rng, scale=1.0, terms=6):
    out = {}
    for _ in range(terms):
        e = tuple(int(x) for x in rng.integers(0, degree + 1, size=dim))
        if sum(e) > degree:
            continue
        out[e] = scale * complex(rng.standard_normal(), rng.standard_normal())
    return PolyScalar(dim, out)


def random_shear(dim, rng, fdeg=3, scale=0.3, zero_const=True):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    coeffs = scale * (rng.standard_normal(fdeg + 1)
                      + 1j * rng.standard_normal(fdeg + 1))
    if zero_const:
        coeffs[0] = 0.0
    return Shear(v, UniPoly(coeffs))


def random_shear_word(dim, count, rng, fdeg=3, scale=0.3, zero_const=True):
    return Word(tuple(random_shear(dim, rng, fdeg, scale, zero_const)
                      for _ in range(count)))


def random_gradshear(n, rng, degree=3, scale=0.3):
    side = "first" if rng.random() < 0.5 else "second"
    return GradShear(side, random_poly(n, degree, rng, scale))


def region_ball(center, radius, dim, count, rng):
    pts = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    r = radius * rng.random(count)[:, None] ** (1.0 / dim)
    return center + pts * r


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
