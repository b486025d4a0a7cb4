"""Core domain types: exponent pairs, uniform grids, sampled fields, lattice arrays.

Sampling convention
-------------------
Fields on R x R^d are sampled on the uniform lattice h*Z^(1+d) with
1/h a positive integer rho.  A field stores values at the nodes of a
half-open integer-cornered box [lo, hi): node coordinates are
``lo + m*h`` with ``0 <= m < (hi - lo)*rho`` per axis, and the field is
zero at every node outside the box.  Each node represents the grid cell
to its upper right, so the rectangle rule

    integral f  ~=  h^(1+d) * sum(values)

is exact for fields that are constant on grid cells.  Suprema (for
infinity exponents and the Wiener norm) are taken over nodes, using the
closed cell where the definition calls for a per-cell supremum.

Axis 0 is the time-like variable x1; axes 1..d form the spatial group x2.
All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, DimensionMismatch

INF = math.inf


def _as_int_tuple(t, n, what):
    t = tuple(int(x) for x in t)
    if len(t) != n:
        raise BadParams(f"{what} must have {n} entries, got {len(t)}")
    return t


@dataclass(frozen=True)
class MixedExponents:
    """An exponent pair (p, q) in [1, inf] with its conjugate pair.

    Conjugates satisfy 1/p + 1/p' = 1, with the convention that 1 and
    infinity are conjugate to each other.
    """

    p: float
    q: float

    def __post_init__(self):
        for name, v in (("p", self.p), ("q", self.q)):
            if not (v >= 1.0):
                raise BadParams(f"exponent {name} must be >= 1, got {v}")

    @staticmethod
    def _conjugate(v):
        if v == INF:
            return 1.0
        if v == 1.0:
            return INF
        return v / (v - 1.0)

    @property
    def p_conj(self):
        return self._conjugate(self.p)

    @property
    def q_conj(self):
        return self._conjugate(self.q)

    @classmethod
    def of(cls, e):
        """Coerce a MixedExponents or a (p, q) pair."""
        if isinstance(e, cls):
            return e
        p, q = e
        return cls(float(p), float(q))


@dataclass(frozen=True)
class UniformGrid:
    """Uniform sampling grid on R x R^d with an integer-cornered box.

    ``d`` is the dimension of the spatial axis group, ``h`` the common
    grid step (1/h must be a positive integer so integer translates map
    nodes to nodes), and ``box`` the half-open support box, given as a
    pair of integer corner tuples (lo, hi) of length 1 + d.
    """

    d: int
    h: float
    box: tuple

    def __post_init__(self):
        if self.d < 1:
            raise BadParams(f"spatial dimension d must be >= 1, got {self.d}")
        rho = round(1.0 / self.h)
        if rho < 1 or abs(rho * self.h - 1.0) > 1e-9:
            raise BadParams(f"1/h must be a positive integer, got h={self.h}")
        lo, hi = self.box
        lo = _as_int_tuple(lo, self.ndim, "box corner")
        hi = _as_int_tuple(hi, self.ndim, "box corner")
        if any(a >= b for a, b in zip(lo, hi)):
            raise BadParams(f"box {self.box} is empty")
        object.__setattr__(self, "box", (lo, hi))

    @property
    def ndim(self):
        return 1 + self.d

    @property
    def rho(self):
        """Samples per unit length; the unit cell holds rho**(1+d) nodes."""
        return round(1.0 / self.h)

    @property
    def lo(self):
        return self.box[0]

    @property
    def hi(self):
        return self.box[1]

    @property
    def shape(self):
        """Value-array shape implied by the box."""
        r = self.rho
        return tuple((b - a) * r for a, b in zip(*self.box))

    def compatible(self, other):
        """Same d and h; boxes may differ."""
        return self.d == other.d and self.rho == other.rho

    def axis_nodes(self, axis):
        """Node coordinates along one axis."""
        a, b = self.lo[axis], self.hi[axis]
        n = (b - a) * self.rho
        return a + np.arange(n) * self.h

    def with_box(self, box):
        return UniformGrid(self.d, self.h, box)


@dataclass(frozen=True)
class Decay:
    """Decay metadata: 'compact' support, or 'exponential' with a rate.

    ``tail_mass`` records the relative energy discarded when an
    exponentially decaying function was truncated to its box.
    """

    kind: str = "compact"
    rate: float | None = None
    tail_mass: float = 0.0

    def __post_init__(self):
        if self.kind not in ("compact", "exponential"):
            raise BadParams(f"unknown decay kind {self.kind!r}")


@dataclass(frozen=True)
class SampledField:
    """Complex samples of a function on a uniform grid inside its box."""

    grid: UniformGrid
    values: np.ndarray
    decay: Decay = field(default_factory=Decay)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise BadParams(
                f"value shape {v.shape} does not match box shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(v.view(np.float64))):
            raise BadParams("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self):
        return self.grid.d

    @property
    def h(self):
        return self.grid.h

    @property
    def rho(self):
        return self.grid.rho

    @property
    def box(self):
        return self.grid.box

    def shifted(self, k):
        """Translate by an integer lattice vector (exact index relabeling)."""
        k = _as_int_tuple(k, self.grid.ndim, "shift")
        lo = tuple(a + s for a, s in zip(self.grid.lo, k))
        hi = tuple(b + s for b, s in zip(self.grid.hi, k))
        return SampledField(self.grid.with_box((lo, hi)), self.values, self.decay)

    def scaled(self, c):
        return SampledField(self.grid, c * self.values, self.decay)

    def energy(self):
        """Quadrature of |f|^2 over the box."""
        v = self.values
        return float(np.sum(v.real**2 + v.imag**2)) * self.h ** self.grid.ndim


def field_from_samples(d, h, box, values, decay=None):
    """Convenience constructor."""
    grid = UniformGrid(d, h, box)
    return SampledField(grid, np.asarray(values), decay or Decay())


def embed(fld, box):
    """Re-box a field into a larger box (pads with zeros)."""
    lo, hi = box
    if any(a > fa or b < fb for a, fa, b, fb in
           zip(lo, fld.grid.lo, hi, fld.grid.hi)):
        raise BadParams(f"target box {box} does not contain {fld.box}")
    grid = fld.grid.with_box(box)
    out = np.zeros(grid.shape, dtype=np.complex128)
    r = fld.rho
    sl = tuple(
        slice((fa - a) * r, (fa - a) * r + n)
        for a, fa, n in zip(lo, fld.grid.lo, fld.values.shape)
    )
    out[sl] = fld.values
    return SampledField(grid, out, fld.decay)


def union_box(*boxes):
    los = [b[0] for b in boxes]
    his = [b[1] for b in boxes]
    return (tuple(min(v) for v in zip(*los)), tuple(max(v) for v in zip(*his)))


def add_fields(a, b, alpha=1.0, beta=1.0):
    """alpha*a + beta*b on the union box."""
    if not a.grid.compatible(b.grid):
        raise DimensionMismatch("fields live on incompatible grids")
    box = union_box(a.box, b.box)
    ea, eb = embed(a, box), embed(b, box)
    return SampledField(ea.grid, alpha * ea.values + beta * eb.values)


def subtract_fields(a, b):
    return add_fields(a, b, 1.0, -1.0)


@dataclass(frozen=True)
class CoefficientArray:
    """Finitely supported complex array d(j1, j2) on the lattice Z x Z^d.

    ``offset`` is the integer corner of the index window; entry
    ``data[m]`` sits at lattice point ``offset + m``.
    """

    d_spatial: int
    offset: tuple
    data: np.ndarray

    def __post_init__(self):
        nd = 1 + self.d_spatial
        off = _as_int_tuple(self.offset, nd, "offset")
        object.__setattr__(self, "offset", off)
        v = np.ascontiguousarray(self.data, dtype=np.complex128)
        if v.ndim != nd:
            raise BadParams(f"data must have {nd} axes, got {v.ndim}")
        if v.size == 0:
            raise BadParams("coefficient window is empty")
        v.setflags(write=False)
        object.__setattr__(self, "data", v)

    @property
    def window(self):
        """Half-open lattice window (lo, hi)."""
        lo = self.offset
        hi = tuple(a + n for a, n in zip(lo, self.data.shape))
        return lo, hi

    def shifted(self, k):
        k = _as_int_tuple(k, 1 + self.d_spatial, "shift")
        return CoefficientArray(
            self.d_spatial, tuple(a + s for a, s in zip(self.offset, k)), self.data
        )


def delta_coeffs(d_spatial, at=None):
    """A unit impulse at one lattice point."""
    at = tuple(at) if at is not None else (0,) * (1 + d_spatial)
    data = np.ones((1,) * (1 + d_spatial), dtype=np.complex128)
    return CoefficientArray(d_spatial, at, data)
