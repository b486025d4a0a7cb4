"""Lattice operators: semi-convolution, analysis and synthesis.

The semi-convolution f *' D = sum_j d(j) f(. - j) synthesizes a field
from integer translates of a generator.  Analysis takes inner products
against translated generators; synthesis maps coefficient arrays back
through the generator system.  Output boxes grow to the Minkowski sum of
the participating supports; nothing is cropped.

Operator norms obey the Young-type bounds

    ||f *' D||_{L^{p,q}}      <= ||D||_{l^{p,q}}  * ||f||_{amalgam (p,q)}
    ||f *' D||_{amalgam}      <= ||D||_{l^{1,1}}  * ||f||_{amalgam (p,q)}
    ||f *' D||_{Wiener}       <= ||D||_{l^{1,1}}  * ||f||_{Wiener}
    ||analysis coefficients|| <= ||f||_{L^{p,q}}  * ||g||_{amalgam (inf,inf)}

which hold exactly at the sample level and are enforced by the test
suite on random instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ArityMismatch, BadParams, DimensionMismatch, WindowTooSmall
from .grids import CoefficientArray, SampledField, UniformGrid, union_box

__all__ = [
    "GeneratorSystem",
    "semi_convolve",
    "analyze",
    "synthesize",
    "default_window",
]


@dataclass(frozen=True)
class GeneratorSystem:
    """A finite family of generators sharing one grid step and dimension."""

    generators: tuple
    labels: tuple = ()

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise BadParams("generator system must contain at least one field")
        g0 = gens[0].grid
        for g in gens[1:]:
            if not g.grid.compatible(g0):
                raise DimensionMismatch("generators live on incompatible grids")
        for g in gens:
            if not np.any(g.values):
                raise BadParams("generator is identically zero")
        labels = tuple(self.labels) or tuple(f"phi{i+1}" for i in range(len(gens)))
        if len(labels) != len(gens):
            raise BadParams("label count does not match generator count")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "labels", labels)

    @property
    def r(self):
        return len(self.generators)

    @property
    def d(self):
        return self.generators[0].d

    @property
    def grid(self):
        return self.generators[0].grid


def _check_dims(f, c):
    if c.d_spatial != f.d:
        raise DimensionMismatch(
            f"coefficients have d={c.d_spatial}, field has d={f.d}"
        )


def semi_convolve(f, coeffs):
    """Semi-convolution sum_j d(j) f(. - j) on the Minkowski-sum box."""
    _check_dims(f, coeffs)
    r = f.rho
    lo_j, hi_j = coeffs.window
    out_lo = tuple(a + j for a, j in zip(f.grid.lo, lo_j))
    out_hi = tuple(b + j - 1 for b, j in zip(f.grid.hi, hi_j))
    grid = UniformGrid(f.d, f.h, (out_lo, out_hi))
    out = np.zeros(grid.shape, dtype=np.complex128)
    fshape = f.values.shape
    for idx in np.ndindex(coeffs.data.shape):
        w = coeffs.data[idx]
        if w == 0:
            continue
        sl = tuple(slice(i * r, i * r + n) for i, n in zip(idx, fshape))
        out[sl] += w * f.values
    return SampledField(grid, out)


def default_window(f, system):
    """Smallest lattice window containing every translate that meets f.

    Computed from the Minkowski bound of the boxes: translate j of a
    generator with box [lo, hi) overlaps f's box exactly when
    f.lo - hi < j < f.hi - lo componentwise.
    """
    los, his = [], []
    for g in system.generators:
        los.append(tuple(a - b + 1 for a, b in zip(f.grid.lo, g.grid.hi)))
        his.append(tuple(a - b for a, b in zip(f.grid.hi, g.grid.lo)))
    lo = tuple(min(v) for v in zip(*los))
    hi = tuple(max(v) for v in zip(*his))
    return lo, hi


def analyze(f, system, window=None):
    """Frame coefficients <f, g_i(. - j)> for every lattice point in window.

    Inner products use the shared rectangle-rule quadrature.  The window
    must cover all lattice points where the supports overlap; a window
    that misses any of them raises :class:`WindowTooSmall`.
    """
    if system.d != f.d or system.grid.rho != f.rho:
        raise DimensionMismatch("field and generators live on incompatible grids")
    needed = default_window(f, system)
    if window is None:
        window = needed
    else:
        lo, hi = window
        if any(a > na for a, na in zip(lo, needed[0])) or any(
            b < nb for b, nb in zip(hi, needed[1])
        ):
            raise WindowTooSmall(
                f"window {window} misses overlap range {needed}"
            )
    lo, hi = window
    shape = tuple(b - a for a, b in zip(lo, hi))
    if any(n <= 0 for n in shape):
        raise WindowTooSmall(f"window {window} is empty")
    r = f.rho
    scale = f.h ** f.grid.ndim
    out = []
    for g in system.generators:
        flip = tuple(slice(None, None, -1) for _ in range(g.values.ndim))
        corr = fftconvolve(f.values, np.conj(g.values[flip]), mode="full")
        # full-correlation index for lattice point j, per axis:
        #   n = (j + g.lo - f.lo) * rho + (len(g) - 1)
        data = np.zeros(shape, dtype=np.complex128)
        grids = np.meshgrid(
            *[np.arange(a, b) for a, b in zip(lo, hi)], indexing="ij"
        )
        idx = []
        valid = np.ones(shape, dtype=bool)
        for ax, j in enumerate(grids):
            n = (j + g.grid.lo[ax] - f.grid.lo[ax]) * r + g.values.shape[ax] - 1
            valid &= (n >= 0) & (n < corr.shape[ax])
            idx.append(np.clip(n, 0, corr.shape[ax] - 1))
        data[valid] = corr[tuple(i[valid] for i in idx)] * scale
        out.append(CoefficientArray(f.d, lo, data))
    return out


def synthesize(system, coeff_list):
    """Superposition sum_i g_i *' D_i of semi-convolutions."""
    if len(coeff_list) != system.r:
        raise ArityMismatch(
            f"expected {system.r} coefficient arrays, got {len(coeff_list)}"
        )
    parts = [
        semi_convolve(g, c) for g, c in zip(system.generators, coeff_list)
    ]
    box = union_box(*[p.box for p in parts])
    grid = system.grid.with_box(box)
    out = np.zeros(grid.shape, dtype=np.complex128)
    r = system.grid.rho
    for p in parts:
        sl = tuple(
            slice((a - b) * r, (a - b) * r + n)
            for a, b, n in zip(p.grid.lo, box[0], p.values.shape)
        )
        out[sl] += p.values
    return SampledField(grid, out)
