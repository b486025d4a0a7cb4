"""Built-in generator corpus with known spectral behavior.

Every entry is reproducible bit-exactly from its parameters.  Splines
and Gaussians are tensorized across the 1 + d axes (the spatial factor
of a spline generator is the unit box, matching its use as a sampling
model along time).  Compactly supported entries are exact on their box;
the Gaussian records the truncation tail mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, UnknownCorpusEntry
from .grids import Decay, SampledField, UniformGrid
from .lattice_ops import GeneratorSystem

__all__ = ["CorpusEntry", "corpus_build", "corpus_list", "bspline_values"]


def bspline_values(order, x):
    """Cardinal B-spline of the given order on [0, order] at points x.

    Order 1 is the unit box indicator (half-open); higher orders follow
    the iterated-convolution formula and are continuous.
    """
    if order < 1:
        raise BadParams("spline order must be >= 1")
    x = np.asarray(x, dtype=float)
    if order == 1:
        return ((x >= 0.0) & (x < 1.0)).astype(float)
    out = np.zeros_like(x)
    fact = math.factorial(order - 1)
    for k in range(order + 1):
        out += (-1) ** k * math.comb(order, k) * np.clip(x - k, 0.0, None) ** (
            order - 1
        )
    return out / fact


def _tensor_field(d, h, axis_values, axis_lo, decay=None):
    """Outer product of per-axis sample vectors into a SampledField."""
    vals = axis_values[0]
    for v in axis_values[1:]:
        vals = np.multiply.outer(vals, v)
    lo = tuple(axis_lo)
    hi = tuple(a + n // round(1 / h) for a, n in zip(lo, [len(v) for v in axis_values]))
    grid = UniformGrid(d, h, (lo, hi))
    return SampledField(grid, vals, decay or Decay())


def _axis_samples(fn, lo, hi, rho):
    x = lo + np.arange((hi - lo) * rho) / rho
    return fn(x)


def _build_box(d, h, **params):
    _reject_params(params)
    rho = round(1 / h)
    ones = np.ones(rho)
    return GeneratorSystem(
        (_tensor_field(d, h, [ones] * (1 + d), (0,) * (1 + d)),), ("box",)
    )


def _build_bspline(d, h, order=2, **params):
    _reject_params(params)
    order = int(order)
    if order < 1:
        raise BadParams("spline order must be >= 1")
    rho = round(1 / h)
    ax0 = _axis_samples(lambda x: bspline_values(order, x), 0, order, rho)
    box = np.ones(rho)
    f = _tensor_field(d, h, [ax0] + [box] * d, (0,) * (1 + d))
    return GeneratorSystem((f,), (f"bspline{order}",))


def _build_gaussian(d, h, sigma=0.5, cutoff=4, **params):
    _reject_params(params)
    sigma = float(sigma)
    cutoff = int(cutoff)
    if sigma <= 0 or cutoff < 1:
        raise BadParams("gaussian needs sigma > 0 and cutoff >= 1")
    rho = round(1 / h)
    ax = _axis_samples(
        lambda x: np.exp(-(x**2) / (2 * sigma**2)), -cutoff, cutoff, rho
    )
    out_frac = math.erfc(cutoff / sigma)  # relative squared-mass per axis
    if out_frac < 1e-8:
        tail = (1 + d) * out_frac  # first order, exact to o(out_frac^2)
    else:
        tail = 1.0 - (1.0 - out_frac) ** (1 + d)
    decay = Decay("exponential", rate=1.0 / (2 * sigma**2), tail_mass=tail)
    f = _tensor_field(d, h, [ax] * (1 + d), (-cutoff,) * (1 + d), decay)
    return GeneratorSystem((f,), ("gaussian",))


def _build_shifted_pair(d, h, base="box", shift=None, **params):
    if base not in ("box", "bspline", "gaussian"):
        raise BadParams(f"shifted_pair base {base!r} not supported")
    inner = corpus_build(base, d=d, h=h, **params)
    g = inner.generators[0]
    shift = tuple(shift) if shift is not None else (1,) + (0,) * d
    if len(shift) != 1 + d:
        raise BadParams("shift must have 1 + d entries")
    return GeneratorSystem(
        (g, g.shifted(shift)), (inner.labels[0], inner.labels[0] + "_shifted")
    )


def _build_diff_filtered_box(d, h, **params):
    _reject_params(params)
    rho = round(1 / h)
    prof = np.concatenate(
        [-np.ones(rho), 2 * np.ones(rho), -np.ones(rho)]
    )  # cells [-1, 0, 1] of 2 b - b(.-1) - b(.+1)
    box = np.ones(rho)
    f = _tensor_field(d, h, [prof] + [box] * d, (-1,) + (0,) * d)
    return GeneratorSystem((f,), ("diff_box",))


def _reject_params(params):
    if params:
        raise BadParams(f"unexpected parameters: {sorted(params)}")


_BUILDERS = {
    "box": _build_box,
    "bspline": _build_bspline,
    "gaussian": _build_gaussian,
    "shifted_pair": _build_shifted_pair,
    "diff_filtered_box": _build_diff_filtered_box,
}


@dataclass(frozen=True)
class CorpusEntry:
    """Catalog row: constructor parameters and expected properties."""

    name: str
    params: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)


_CATALOG = (
    CorpusEntry("box", {}, {"frame": True, "k0": 1, "bracket": "identically 1"}),
    CorpusEntry(
        "bspline",
        {"order": 2},
        {"frame": True, "k0": 1, "bracket": "(2 + cos xi)/3 at order 2"},
    ),
    CorpusEntry("gaussian", {"sigma": 0.5, "cutoff": 4}, {"frame": True, "k0": 1}),
    CorpusEntry(
        "shifted_pair",
        {"base": "box", "shift": (1, 0)},
        {"frame": True, "k0": 1, "bracket": "rank-1 with unimodular phase"},
    ),
    CorpusEntry(
        "diff_filtered_box",
        {},
        {"frame": False, "k0": 0, "bracket": "(2 - 2 cos xi)^2, vanishing at 0"},
    ),
)


def corpus_list():
    """Catalog of known generator constructions."""
    return _CATALOG


def corpus_build(name, d=1, h=1.0 / 32, **params):
    """Build a catalog generator system deterministically."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownCorpusEntry(
            f"unknown corpus entry {name!r}; known: {sorted(_BUILDERS)}"
        ) from None
    return builder(d, h, **params)
