"""Dual generators, reconstruction, empirical frame bounds, scaling diagnostic.

Dual construction works fiberwise on a periodized sample lattice: the
dual transform is ``psi^ = pinv(G) * phi^`` with G the self-bracket
Gramian and the pseudo-inverse cut at the shared rank tolerance.  Under
constant fiber rank this yields a valid dual system: every bracket
fiber [phi^, psi^] is the identity on the column space of the fiber
matrix, so both orderings of the reconstruction identity

    f = sum_i sum_j <f, psi_i(.-j)> phi_i(.-j)
      = sum_i sum_j <f, phi_i(.-j)> psi_i(.-j)

hold on members of the shift-invariant space.  Dual samples are
recovered by an inverse lattice transform on a window sized from the
generators' support plus a decay margin; the energy outside the
retained box is recorded as ``tail_mass``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParams,
    ConditionIIIFails,
    PreconditionSumNonzero,
    TailMassExceeded,
)
from .fiberization import bracket, fourier_fibers, spectral_profile
from .grids import Decay, SampledField, UniformGrid
from .lattice_ops import GeneratorSystem, analyze, synthesize
from .mixed_norms import Lpq_norm, amalgam_norm, lpq_seq_norm

__all__ = [
    "DualSystem",
    "FrameBounds",
    "ScalingDiagnostic",
    "dual_generators",
    "reconstruct",
    "frame_bounds_empirical",
    "coefficient_cost_upper",
    "scaling_limit_diagnostic",
    "default_modulation",
    "random_coefficients",
]


@dataclass(frozen=True)
class DualSystem:
    """Dual generators with construction metadata."""

    system: GeneratorSystem
    construction: str
    residual: float
    tail_mass: float
    k0: int
    rank_tol: float


def _embedded_bins(field, big_shape, rho):
    """FFT bins of the field embedded at its absolute position (mod window)."""
    out = np.zeros(big_shape, dtype=np.complex128)
    idx = []
    for ax, (lo, n, S) in enumerate(
        zip(field.grid.lo, field.values.shape, big_shape)
    ):
        idx.append((lo * rho + np.arange(n)) % S)
    out[np.ix_(*idx)] = field.values
    return np.fft.fftn(out)


def _lattice_gramian(bins_list, windows, rho, h, nd):
    """Gramian fibers G[t.., i, i'] from full-lattice FFT bins."""
    split = []
    for W in windows:
        split.extend((rho, W))
    stacked = [b.reshape(split) for b in bins_list]
    karg = tuple(2 * i for i in range(nd))
    r = len(bins_list)
    shape = tuple(windows) + (r, r)
    G = np.empty(shape, dtype=np.complex128)
    for i in range(r):
        for j in range(r):
            G[..., i, j] = np.sum(stacked[i] * np.conj(stacked[j]), axis=karg)
    return G * h ** (2 * nd)


def _pinv_hermitian(G, cut):
    """Batched pseudo-inverse of Hermitian PSD matrices with a fixed cutoff."""
    lam, U = np.linalg.eigh(0.5 * (G + np.conj(np.swapaxes(G, -1, -2))))
    inv = np.where(lam > cut, 1.0 / np.where(lam > cut, lam, 1.0), 0.0)
    return np.einsum("...ik,...k,...jk->...ij", U, inv, np.conj(U))


def _trim_box(values, rho, abs_lo, tail_target):
    """Smallest sub-box keeping all but ``tail_target`` of the energy.

    ``values`` is the rolled sample array whose cell c corresponds to
    absolute integer coordinate ``abs_lo + c``.  Returns (box, kept
    values, tail_mass).
    """
    nd = values.ndim
    e = values.real**2 + values.imag**2
    total = float(e.sum())
    if total == 0.0:
        raise BadParams("dual candidate has zero energy")
    lo_cells, hi_cells = [], []
    for ax in range(nd):
        other = tuple(a for a in range(nd) if a != ax)
        marg = e.sum(axis=other)
        W = marg.size // rho
        cells = marg.reshape(W, rho).sum(axis=1)
        budget = tail_target * total / (2 * nd)
        a, b = 0, W
        acc = 0.0
        while a < b - 1 and acc + cells[a] <= budget:
            acc += cells[a]
            a += 1
        acc = 0.0
        while b > a + 1 and acc + cells[b - 1] <= budget:
            acc += cells[b - 1]
            b -= 1
        lo_cells.append(a)
        hi_cells.append(b)
    sl = tuple(slice(a * rho, b * rho) for a, b in zip(lo_cells, hi_cells))
    kept = values[sl]
    mask = np.ones(values.shape, dtype=bool)
    mask[sl] = False
    tail = float(e[mask].sum()) / total  # summed directly: no cancellation
    box = (
        tuple(al + a for al, a in zip(abs_lo, lo_cells)),
        tuple(al + b for al, b in zip(abs_lo, hi_cells)),
    )
    return box, kept, max(tail, 0.0)


def _dual_once(phi, rank_tol, margins, tail_target):
    nd = phi.grid.ndim
    rho = phi.grid.rho
    h = phi.generators[0].h
    los = [min(g.grid.lo[ax] for g in phi.generators) for ax in range(nd)]
    his = [max(g.grid.hi[ax] for g in phi.generators) for ax in range(nd)]
    windows = [
        hi - lo + 2 * m for lo, hi, m in zip(los, his, margins)
    ]
    big = tuple(W * rho for W in windows)
    if np.prod([float(s) for s in big]) > 2**26:
        raise BadParams("dual lattice too large; reduce margin or grid density")
    bins = [_embedded_bins(g, big, rho) for g in phi.generators]
    G = _lattice_gramian(bins, windows, rho, h, nd)
    lam = np.linalg.eigvalsh(0.5 * (G + np.conj(np.swapaxes(G, -1, -2))))
    lam_max = float(lam.max())
    ranks = (lam > rank_tol * lam_max).sum(axis=-1)
    k0 = int(ranks.min())
    if int(ranks.max()) != k0:
        raise ConditionIIIFails(
            "fiber rank is not constant on the dual construction lattice"
        )
    Gplus = _pinv_hermitian(G, rank_tol * lam_max)
    # broadcast the per-fiber inverse over the alias-stack axes
    split = []
    for W in windows:
        split.extend((rho, W))
    B = np.stack([b.reshape(split) for b in bins], axis=-1) * h**nd
    expand = []
    for W in windows:
        expand.extend((1, W))
    Gb = Gplus.reshape(tuple(expand) + Gplus.shape[-2:])
    psi_bins = np.einsum("...ij,...j->...i", Gb, B)
    duals = []
    tails = []
    r = phi.r
    for i in range(r):
        yb = psi_bins[..., i].reshape(big) / h**nd
        samples = np.fft.ifftn(yb)
        g = phi.generators[i]
        center = [
            (g.grid.lo[ax] + g.grid.hi[ax]) // 2 for ax in range(nd)
        ]
        a0 = [c - W // 2 for c, W in zip(center, windows)]
        rolled = np.roll(
            samples, tuple(-a * rho for a in a0), axis=tuple(range(nd))
        )
        box, kept, tail = _trim_box(rolled, rho, a0, tail_target)
        grid = UniformGrid(phi.d, h, box)
        duals.append(
            SampledField(grid, kept, Decay("exponential", rate=None, tail_mass=tail))
        )
        tails.append(tail)
    labels = tuple(f"psi{i+1}" for i in range(r))
    return GeneratorSystem(tuple(duals), labels), k0, max(tails)


def _bracket_residual(phi, psi, freq):
    """Max deviation of [phi^, psi^] from the identity on the fiber columns."""
    Gf = bracket(phi, psi, freq, with_tail_bound=False).fibers
    stacks = [fourier_fibers(g, freq) for g in phi.generators]
    nd = phi.grid.ndim
    node_shape = stacks[0].values.shape[:nd]
    P = np.stack(
        [s.values.reshape(node_shape + (-1,)) for s in stacks], axis=-1
    )  # (nodes.., K, r)
    Pv = np.einsum("...ij,...kj->...ki", Gf, P)
    vmax = float(np.max(np.linalg.norm(P, axis=-1)))
    return float(np.max(np.linalg.norm(Pv - P, axis=-1))) / max(vmax, 1e-300)


def dual_generators(phi, freq, rank_tol=1e-8, margin=24, tail_target=1e-20,
                    tail_cap=1e-6):
    """Construct dual generators by a fiberwise pseudo-inverse.

    Requires constant fiber rank on the given frequency grid (the
    eigenvalue-band condition); raises :class:`ConditionIIIFails`
    otherwise.  When the rank equals the generator count the
    pseudo-inverse coincides with the exact inverse.  ``margin`` (one
    integer, or one per axis) sets the decay allowance of the inverse
    transform window and doubles on retry; :class:`TailMassExceeded`
    is raised when the retained window cannot capture the dual's
    energy to within ``tail_cap``.
    """
    prof = spectral_profile(bracket(phi, freq=freq, with_tail_bound=False), rank_tol)
    if not prof.constancy:
        raise ConditionIIIFails(
            f"fiber rank varies across frequencies (k in [{prof.k0}, "
            f"{int(prof.ranks.max())}])"
        )
    nd = phi.grid.ndim
    if np.isscalar(margin):
        margins = [int(margin)] * nd
    else:
        margins = [int(m) for m in margin]
        if len(margins) != nd:
            raise BadParams("margin needs one entry per axis")
    if min(margins) < 1:
        raise BadParams("margins must be >= 1")
    last_tail = None
    for _ in range(3):
        psi_sys, k0, tail = _dual_once(phi, rank_tol, margins, tail_target)
        last_tail = tail
        if tail <= tail_cap:
            residual = _bracket_residual(phi, psi_sys, freq)
            construction = (
                "full_rank_inverse" if k0 == phi.r else "constant_rank_pseudoinverse"
            )
            return DualSystem(
                system=psi_sys,
                construction=construction,
                residual=residual,
                tail_mass=tail,
                k0=k0,
                rank_tol=rank_tol,
            )
        if tail <= 100.0 * tail_target:
            break  # window already resolves the decay; a bigger one cannot help
        margins = [2 * m for m in margins]
    raise TailMassExceeded(
        f"dual tail mass {last_tail:.3e} exceeds cap {tail_cap:.3e}"
    )


def reconstruct(f, synth, coeff, window=None):
    """Expand f against ``coeff`` translates and resynthesize with ``synth``.

    The standard ordering is ``reconstruct(f, phi, dual)``; swapping the
    two systems evaluates the second form of the reconstruction
    identity.  Accepts a :class:`DualSystem` wherever a generator
    system is expected.  Inputs are assumed to be members of the
    shift-invariant space (built via :func:`synthesize`).
    """
    synth = synth.system if isinstance(synth, DualSystem) else synth
    coeff = coeff.system if isinstance(coeff, DualSystem) else coeff
    cs = analyze(f, coeff, window)
    return synthesize(synth, cs)


@dataclass(frozen=True)
class FrameBounds:
    """Empirical frame-bound estimates from random synthesis trials."""

    A_lo: float
    B_hi: float
    samples: tuple
    analytic_B: float
    exponents: tuple
    squared: bool


def random_coefficients(rng, r, d, taps=50, extent=6, lo=None):
    """r random sparse coefficient arrays on a common window."""
    nd = 1 + d
    lo = tuple(lo) if lo is not None else (0,) * nd
    shape = (extent,) * nd
    out = []
    from .grids import CoefficientArray

    for _ in range(r):
        data = np.zeros(shape, dtype=np.complex128)
        flat = rng.integers(0, int(np.prod(shape)), size=taps)
        vals = rng.standard_normal(taps) + 1j * rng.standard_normal(taps)
        np.add.at(data.reshape(-1), flat, vals)
        out.append(CoefficientArray(d, lo, data))
    return out


def frame_bounds_empirical(phi, psi=None, e=(2, 2), trials=100, seed=0,
                           taps=50, extent=6, coefficients=None, squared=False):
    """Sample the analysis/norm ratio over random members of the space.

    Each trial synthesizes ``f`` from random sparse coefficients and
    measures ``sum_i ||<f, phi_i(.-j)>||_{l^{p,q}} / ||f||_{L^{p,q}}``;
    with ``squared=True`` (exponents (2,2) only) the ratio of squared
    l2 analysis energy to squared field energy is used instead.  The
    maximum ratio never exceeds the amalgam-norm analysis bound, which
    is returned as ``analytic_B``.  An explicit ``coefficients``
    schedule (list of coefficient lists) overrides random generation.
    """
    from .grids import MixedExponents

    ex = MixedExponents.of(e)
    if squared and (ex.p, ex.q) != (2.0, 2.0):
        raise BadParams("squared ratios are defined for exponents (2, 2)")
    rng = np.random.default_rng(seed)
    if coefficients is None:
        if trials < 1:
            raise BadParams("trials must be >= 1")
        coefficients = [
            random_coefficients(rng, phi.r, phi.d, taps, extent)
            for _ in range(trials)
        ]
    ratios = []
    for coeff_list in coefficients:
        f = synthesize(phi, coeff_list)
        cs = analyze(f, phi)
        if squared:
            num = sum(lpq_seq_norm(c, (2, 2)) ** 2 for c in cs)
            den = Lpq_norm(f, (2, 2)) ** 2
        else:
            num = sum(lpq_seq_norm(c, ex) for c in cs)
            den = Lpq_norm(f, ex)
        if den == 0.0:
            continue
        ratios.append(num / den)
    if not ratios:
        raise BadParams("all trial fields were zero")
    analytic = sum(
        amalgam_norm(g, (math.inf, math.inf)) for g in phi.generators
    )
    return FrameBounds(
        A_lo=float(min(ratios)),
        B_hi=float(max(ratios)),
        samples=tuple(ratios),
        analytic_B=float(analytic),
        exponents=(ex.p, ex.q),
        squared=squared,
    )


def coefficient_cost_upper(f, phi, dual, e):
    """Upper bound for the minimal mixed-norm representation cost of f.

    Evaluates ``sum_i ||<f, psi_i(.-j)>||_{l^{p,q}}`` with the dual
    coefficients, an admissible representation of f in the space, hence
    an upper bound for the infimum over all representations.
    """
    dual_sys = dual.system if isinstance(dual, DualSystem) else dual
    if not np.any(f.values):
        return 0.0
    cs = analyze(f, dual_sys)
    return float(sum(lpq_seq_norm(c, e) for c in cs))


def default_modulation(x1, x2):
    """Gaussian modulation envelope exp(-x1^2 - |x2|^2)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return np.exp(-(x1**2) - np.sum(x2**2, axis=-1))


def _check_modulation(h_fn, d, eps, seed=20, cap=100.0):
    """Lipschitz-decay spot check on random point pairs.

    Accepts envelopes whose increments are bounded by a mixed
    Lipschitz term with polynomial decay of orders 1+eps1 and d+eps2 in
    the two axis groups.
    """
    rng = np.random.default_rng(seed)
    e1, e2 = eps
    a = rng.uniform(-8, 8, size=(512, 1 + d))
    b = rng.uniform(-8, 8, size=(512, 1 + d))
    ha = h_fn(a[:, 0], a[:, 1:])
    hb = h_fn(b[:, 0], b[:, 1:])
    lhs = np.abs(ha - hb)
    dx = np.abs(a[:, 0] - b[:, 0])
    dy = np.max(np.abs(a[:, 1:] - b[:, 1:]), axis=-1)
    mx = np.minimum(np.abs(a[:, 0]), np.abs(b[:, 0]))
    my = np.minimum(
        np.max(np.abs(a[:, 1:]), axis=-1), np.max(np.abs(b[:, 1:]), axis=-1)
    )
    rhs = dx * (1.0 + mx) ** (-1.0 - e1) + dy * (1.0 + my) ** (-float(d) - e2)
    ok = rhs > 0
    ratio = np.max(lhs[ok] / rhs[ok]) if np.any(ok) else 0.0
    if not np.isfinite(ratio) or ratio > cap:
        raise BadParams(
            f"modulation function fails the Lipschitz-decay check ({ratio:.3g})"
        )


@dataclass(frozen=True)
class ScalingDiagnostic:
    """Rescaled amalgam norms of modulated translate sums."""

    n_values: tuple
    values: tuple
    eps: tuple
    translate_sum: float
    window_radius: float

    def ratio(self):
        return self.values[-1] / self.values[0]


def _cell_values(phi):
    """Per-cell constants of an integer-cell-constant field."""
    r = phi.rho
    v = phi.values
    shape = []
    for n in v.shape:
        shape.extend((n // r, r))
    a = v.reshape(shape)
    sub = tuple(2 * i + 1 for i in range(v.ndim))
    ref = a[tuple(slice(None) if s % 2 == 0 else slice(0, 1) for s in range(a.ndim))]
    dev = np.max(np.abs(a - ref))
    scale = max(float(np.max(np.abs(v))), 1e-300)
    if dev > 1e-12 * scale:
        raise BadParams(
            "scaling diagnostic requires a field constant on integer cells"
        )
    return np.ascontiguousarray(
        ref.reshape(tuple(a.shape[2 * i] for i in range(v.ndim)))
    )


def scaling_limit_diagnostic(phi, n_max, h_fn=None, eps=(0.5, 0.5),
                             window_radius=5.0):
    """Rescaled norms of modulated translate sums over dyadic scales.

    For a field with vanishing translate sum, computes

        v_n = 2^{-n(1+d)} || sum_j h(2^{-n} j) phi(. - j) ||_amalgam

    for n = 2..n_max on truncated lattice windows.  The field must be
    constant on integer cells (then the amalgam norm of the modulated
    sum reduces to an absolute lattice sum, identical for every
    exponent pair).  Raises :class:`PreconditionSumNonzero` when the
    translate sum does not vanish.
    """
    if n_max < 4:
        raise BadParams("n_max must be at least 4")
    d = phi.d
    nd = 1 + d
    cells = _cell_values(phi)
    s = complex(cells.sum())
    if abs(s) > 1e-8 * max(1.0, float(np.max(np.abs(cells)))):
        raise PreconditionSumNonzero(
            f"translate sum {abs(s):.3e} does not vanish on the unit cell"
        )
    separable = h_fn is None
    fn = h_fn or default_modulation
    _check_modulation(fn, d, eps)
    # rank-one cell pattern enables the separable fast path (d = 1)
    fast = False
    if separable and nd == 2:
        sv = np.linalg.svd(cells, compute_uv=False)
        fast = sv.size == 1 or (sv[1:] <= 1e-12 * sv[0]).all()
        if fast:
            u, svals, vt = np.linalg.svd(cells)
            cx = u[:, 0] * svals[0]
            cy = vt[0]
    values = []
    ns = tuple(range(2, n_max + 1))
    for n in ns:
        scale = 2.0**-n
        R = int(math.ceil(window_radius * 2**n))
        if fast:
            total = 1.0
            for c, lo in ((cx, phi.grid.lo[0]), (cy, phi.grid.lo[1])):
                k = np.arange(-R - len(c) - abs(lo), R + len(c) + abs(lo) + 1)
                g = np.zeros(k.size, dtype=np.complex128)
                for m, cm in enumerate(c):
                    if cm == 0:
                        continue
                    g = g + cm * np.exp(-((scale * (k - m - lo)) ** 2))
                total *= float(np.sum(np.abs(g)))
        else:
            axes = [
                np.arange(-R - sh - abs(lo), R + sh + abs(lo) + 1)
                for sh, lo in zip(cells.shape, phi.grid.lo)
            ]
            block = max(1, 2**21 // max(1, int(np.prod([a.size for a in axes[1:]]))))
            total = 0.0
            for start in range(0, axes[0].size, block):
                k1 = axes[0][start : start + block]
                g = np.zeros((k1.size,) + tuple(a.size for a in axes[1:]),
                             dtype=np.complex128)
                for m in np.ndindex(cells.shape):
                    cm = cells[m]
                    if cm == 0:
                        continue
                    pts1 = scale * (k1 - m[0] - phi.grid.lo[0])
                    rest = [
                        scale * (axes[1 + i] - m[1 + i] - phi.grid.lo[1 + i])
                        for i in range(d)
                    ]
                    mesh = np.meshgrid(*rest, indexing="ij") if rest else []
                    x2 = np.stack(mesh, axis=-1)
                    hv = fn(
                        pts1.reshape((-1,) + (1,) * d),
                        x2.reshape((1,) + x2.shape),
                    )
                    g = g + cm * hv
                total += float(np.sum(np.abs(g)))
        values.append(scale**nd * total)
    return ScalingDiagnostic(
        n_values=ns,
        values=tuple(values),
        eps=tuple(eps),
        translate_sum=abs(s),
        window_radius=window_radius,
    )
