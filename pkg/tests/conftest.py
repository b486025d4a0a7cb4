import math

import numpy as np
import pytest

from siframe.grids import CoefficientArray, field_from_samples

INF = math.inf

EXPONENT_PAIRS = [(1, 1), (2, 2), (1.5, 3), (1, INF), (INF, 1), (INF, INF)]


def make_box(rho, d=1):
    """Indicator of the unit box [0,1]^(1+d)."""
    return field_from_samples(
        d, 1.0 / rho, ((0,) * (1 + d), (1,) * (1 + d)), np.ones((rho,) * (1 + d))
    )


def make_hat(rho, d=1):
    """Tensor of the linear spline on [0,2] with unit boxes on the rest."""
    x = np.arange(2 * rho) / rho
    hat = np.where(x < 1, x, 2 - x)
    vals = hat
    for _ in range(d):
        vals = np.multiply.outer(vals, np.ones(rho))
    return field_from_samples(
        d, 1.0 / rho, ((0,) + (0,) * d, (2,) + (1,) * d), vals
    )


def make_tensor_hat(rho):
    """hat(x) * hat(y) on [0,2]^2 (d=1)."""
    x = np.arange(2 * rho) / rho
    hat = np.where(x < 1, x, 2 - x)
    return field_from_samples(
        1, 1.0 / rho, ((0, 0), (2, 2)), np.multiply.outer(hat, hat)
    )


def random_field(rng, rho=8, d=1, width=2, complex_values=True):
    nd = 1 + d
    lo = tuple(int(v) for v in rng.integers(-2, 2, size=nd))
    hi = tuple(a + int(w) for a, w in zip(lo, rng.integers(1, width + 1, size=nd)))
    shape = tuple((b - a) * rho for a, b in zip(lo, hi))
    vals = rng.standard_normal(shape)
    if complex_values:
        vals = vals + 1j * rng.standard_normal(shape)
    return field_from_samples(d, 1.0 / rho, (lo, hi), vals)


def random_coeff_array(rng, d=1, taps=50, extent=5):
    nd = 1 + d
    lo = tuple(int(v) for v in rng.integers(-2, 2, size=nd))
    shape = (extent,) * nd
    data = np.zeros(shape, dtype=np.complex128)
    flat = rng.integers(0, extent**nd, size=taps)
    np.add.at(
        data.reshape(-1),
        flat,
        rng.standard_normal(taps) + 1j * rng.standard_normal(taps),
    )
    return CoefficientArray(d, lo, data)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
