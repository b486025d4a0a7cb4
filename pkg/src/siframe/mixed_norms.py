"""Mixed-norm evaluation: L^{p,q}, l^{p,q}, amalgam and Wiener norms.

The continuous norms apply the q-norm over the spatial axis group first
and the p-norm over the time axis second.  The amalgam norm measures the
mixed norm, over one unit cell, of the field's translate periodization
sum_{j1} || sum_{j2} |f(x1+j1, x2+j2)| ||; the Wiener norm replaces both
cell integrals with per-cell suprema (taken over closed grid cells).

All reductions follow the sampling convention of :mod:`siframe.grids`:
rectangle-rule quadrature for finite exponents, node suprema at infinity.
"""

from __future__ import annotations

import numpy as np

from .grids import INF, MixedExponents

__all__ = ["lpq_seq_norm", "Lpq_norm", "amalgam_norm", "wiener_norm"]


def _reduce(a, exponent, axes, weight):
    """Collapse ``axes`` of a nonnegative array with an L^e norm.

    ``weight`` is the quadrature weight per node (1.0 for counting
    measure); ignored at exponent infinity, where the node supremum is
    taken instead.
    """
    if not axes:
        return a
    if exponent == INF:
        return a.max(axis=axes)
    if exponent == 1.0:
        return a.sum(axis=axes) * weight
    if exponent == 2.0:
        return np.sqrt(np.sum(a * a, axis=axes) * weight)
    return (np.sum(a**exponent, axis=axes) * weight) ** (1.0 / exponent)


def lpq_seq_norm(c, e):
    """Mixed sequence norm of a coefficient array.

    Sums |d(j1, j2)|^q over the spatial indices, then applies the
    p-norm over j1; suprema replace sums at infinity.  The empty or
    zero array has norm 0.
    """
    e = MixedExponents.of(e)
    a = np.abs(c.data)
    inner = _reduce(a, e.q, tuple(range(1, a.ndim)), 1.0)
    return float(_reduce(inner, e.p, (0,), 1.0))


def Lpq_norm(f, e):
    """Mixed Lebesgue norm of a sampled field.

    Rectangle-rule approximation of || ||f(x1, .)||_{L^q} ||_{L^p};
    exact for fields constant on grid cells.
    """
    e = MixedExponents.of(e)
    a = np.abs(f.values)
    h = f.h
    inner = _reduce(a, e.q, tuple(range(1, a.ndim)), h**f.d)
    return float(_reduce(inner, e.p, (0,), h))


def _interleaved(f):
    v = np.abs(f.values)
    r = f.rho
    shape = []
    for n in v.shape:
        shape.extend((n // r, r))
    return v.reshape(shape)


def amalgam_norm(f, e):
    """Amalgam norm: mixed norm of the translate periodization on a unit cell.

    Dominates the plain mixed norm of the same field and is dominated by
    its Wiener norm.
    """
    e = MixedExponents.of(e)
    a = _interleaved(f)  # axes (j1, u1, j2, u2, ..., jd, ud)
    nd = f.grid.ndim
    h = f.h
    spatial_cells = tuple(2 * k for k in range(1, nd))
    t = a.sum(axis=spatial_cells)  # (j1, u1, u2, ..., ud)
    inner = _reduce(t, e.q, tuple(range(2, t.ndim)), h**f.d)  # (j1, u1)
    u = inner.sum(axis=0)  # (u1,)
    return float(_reduce(u, e.p, (0,), h))


def _cellmax(a, axis, rho):
    """Per-cell maximum along one axis.

    Cells are half-open, matching the essential-sup semantics of the
    continuous definition (each node carries the value of the cell to
    its upper right, so the in-cell node maximum is the cell ess-sup of
    the sampled function).
    """
    a = np.moveaxis(a, axis, 0)
    w = a.shape[0] // rho
    core = a.reshape((w, rho) + a.shape[1:]).max(axis=1)
    return np.moveaxis(core, 0, axis)


def wiener_norm(f):
    """Wiener norm: sum over j1 of per-cell sups of the spatial cell sums.

    Computes sum_{j1} sup_{x1} sum_{j2} sup_{x2} |f(x1+j1, x2+j2)| with
    cell sups taken over grid nodes; dominates the amalgam norm at
    (inf, inf) and is invariant under zero-padding the box.
    """
    a = np.abs(f.values)
    r = f.rho
    for axis in range(1, a.ndim):
        a = _cellmax(a, axis, r)  # per-cell sup along each spatial axis
    s = a.sum(axis=tuple(range(1, a.ndim)))  # (x1 nodes,)
    return float(_cellmax(s, 0, r).sum())
