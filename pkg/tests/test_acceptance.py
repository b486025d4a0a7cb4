"""Acceptance suite: one test per criterion, printed pass/fail lines.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the
per-criterion lines and timings.
"""

import contextlib
import math
import time

import numpy as np
import pytest

from siframe.corpus import corpus_build
from siframe.discrete_oracle import (
    DiscreteModel,
    adversarial_models,
    exact_fiber_profile,
    model_from_field,
    random_model,
    verdict_equivalence,
)
from siframe.duality import (
    dual_generators,
    frame_bounds_empirical,
    random_coefficients,
    reconstruct,
    scaling_limit_diagnostic,
)
from siframe.errors import ConditionIIIFails, PreconditionSumNonzero
from siframe.fiberization import (
    FrequencyGrid,
    bracket,
    condition_iii_check,
    spectral_profile,
)
from siframe.grids import subtract_fields
from siframe.lattice_ops import GeneratorSystem, analyze, semi_convolve, synthesize
from siframe.mixed_norms import Lpq_norm, amalgam_norm, lpq_seq_norm, wiener_norm

from conftest import random_coeff_array, random_field

INF = math.inf


@contextlib.contextmanager
def criterion(number, label, budget=None):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL criterion {number}: {label}")
        raise
    dt = time.perf_counter() - t0
    print(f"PASS criterion {number}: {label} ({dt:.1f}s)")
    if budget is not None:
        assert dt <= budget, f"criterion {number} exceeded {budget}s ({dt:.1f}s)"


def test_c1_box_generator_identity():
    with criterion(1, "box bracket == 1, C = 1, A = B = 1 at (2,2)", budget=5.0):
        sysb = corpus_build("box", d=1, h=1 / 64)
        freq = FrequencyGrid(1, 256, 4, 32)
        G = bracket(sysb, freq=freq)
        assert np.max(np.abs(G.fibers - 1.0)) <= 1e-8
        prof = spectral_profile(G)
        cond = condition_iii_check(prof)
        assert cond.holds
        assert abs(cond.C - 1.0) <= 1e-6
        fb = frame_bounds_empirical(sysb, e=(2, 2), trials=100, seed=0)
        assert abs(fb.A_lo - 1.0) <= 1e-6
        assert abs(fb.B_hi - 1.0) <= 1e-6


def test_c2_hat_bracket_closed_form():
    with criterion(2, "hat bracket line (2+cos)/3 at 1e-6, C = 3 +- 1e-3"):
        rho = 1024
        sysh = corpus_build("bspline", d=1, h=1.0 / rho, order=2)
        freq = FrequencyGrid(1, 64, 4, 64)
        G = bracket(sysh, freq=freq, with_tail_bound=False)
        xi = freq.axis_nodes(0)
        i0 = int(np.where(np.isclose(freq.axis_nodes(1), 0.0))[0][0])
        line = G.fibers[:, i0, 0, 0].real
        assert np.max(np.abs(line - (2 + np.cos(xi)) / 3)) <= 1e-6
        Gc = bracket(sysh, freq=FrequencyGrid(1, 4, 4, 512),
                     with_tail_bound=False)
        cond = condition_iii_check(spectral_profile(Gc))
        assert cond.holds
        assert abs(cond.C - 3.0) <= 1e-3


def test_c3_difference_filtered_box():
    with criterion(3, "diff-filtered box: non-constant rank, C growth, no dual"):
        sysd = corpus_build("diff_filtered_box", d=1, h=1 / 64)
        f64 = FrequencyGrid(1, 64, 4, 32)
        p64 = spectral_profile(bracket(sysd, freq=f64))
        assert not p64.constancy
        p512 = spectral_profile(
            bracket(sysd, freq=FrequencyGrid(1, 512, 4, 32),
                    with_tail_bound=False)
        )
        assert p512.C_est >= 10.0 * p64.C_est
        with pytest.raises(ConditionIIIFails):
            dual_generators(sysd, f64)


def test_c4_reconstruction_identity():
    with criterion(4, "hat reconstruction at 4 exponent pairs, both orderings",
                   budget=30.0):
        sysh = corpus_build("bspline", d=1, h=1 / 64, order=2)
        dual = dual_generators(sysh, FrequencyGrid(1, 64, 4, 32))
        worst = {e: 0.0 for e in ((1, 1), (2, 2), (1, 2), (INF, INF))}
        orderings = 0.0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            coeffs = random_coefficients(rng, 1, 1, taps=50)
            f = synthesize(sysh, coeffs)
            g1 = reconstruct(f, sysh, dual)
            g2 = reconstruct(f, dual, sysh)
            for e in worst:
                err = Lpq_norm(subtract_fields(g1, f), e) / Lpq_norm(f, e)
                worst[e] = max(worst[e], err)
            orderings = max(
                orderings,
                Lpq_norm(subtract_fields(g1, g2), (2, 2)) / Lpq_norm(f, (2, 2)),
            )
        for e, err in worst.items():
            assert err <= 1e-6, (e, err)
        assert orderings <= 1e-8


def test_c5_boundedness_lemma_suite():
    with criterion(5, "operator bounds on 200 instances each, norm chain"):
        rng = np.random.default_rng(42)
        pool = [1, 1.5, 2, 3, INF]

        def pick_e():
            return (pool[rng.integers(0, 5)], pool[rng.integers(0, 5)])

        for _ in range(200):
            f = random_field(rng)
            d = random_coeff_array(rng, taps=30)
            e = pick_e()
            lhs = Lpq_norm(semi_convolve(f, d), e)
            rhs = lpq_seq_norm(d, e) * amalgam_norm(f, e)
            assert lhs <= rhs * (1 + 1e-9)
        for _ in range(200):
            f = random_field(rng)
            d = random_coeff_array(rng, taps=30)
            e = pick_e()
            lhs = amalgam_norm(semi_convolve(f, d), e)
            rhs = lpq_seq_norm(d, (1, 1)) * amalgam_norm(f, e)
            assert lhs <= rhs * (1 + 1e-9)
        for _ in range(200):
            f = random_field(rng)
            d = random_coeff_array(rng, taps=30)
            lhs = wiener_norm(semi_convolve(f, d))
            rhs = lpq_seq_norm(d, (1, 1)) * wiener_norm(f)
            assert lhs <= rhs * (1 + 1e-9)
        for _ in range(200):
            f = random_field(rng)
            g = GeneratorSystem((random_field(rng, width=2),))
            e = pick_e()
            lhs = lpq_seq_norm(analyze(f, g)[0], e)
            rhs = Lpq_norm(f, e) * amalgam_norm(g.generators[0], (INF, INF))
            assert lhs <= rhs * (1 + 1e-9)
        for _ in range(100):
            f = random_field(rng, rho=4)
            e = pick_e()
            a = Lpq_norm(f, e)
            b = amalgam_norm(f, e)
            c = amalgam_norm(f, (INF, INF))
            w = wiener_norm(f)
            s = 1e-12 * max(w, 1.0)
            assert a <= b + s <= c + 2 * s <= w + 3 * s


def test_c6_oracle_equivalence():
    with criterion(6, "finite-group verdict agreement on 25 systems",
                   budget=60.0):
        agree = 0
        for i in range(20):
            r = 1 if i % 2 == 0 else 2
            m = random_model(32, 16, 1, 2, r, seed=100 + i)
            v = verdict_equivalence(m)
            assert v.flags == (True,) * 5
            assert v.min_norm_consistent
            assert 0 < v.sigma_min_retained <= v.sigma_max
            agree += v.agreement
        for name, m in adversarial_models(32, 16, 1, 2):
            v = verdict_equivalence(m)
            assert v.flags == (False,) * 5, name
            agree += v.agreement
        assert agree == 25


def test_c7_scaling_diagnostic():
    with criterion(7, "dyadic scaling decay; box rejected"):
        sysd = corpus_build("diff_filtered_box", d=1, h=1 / 8)
        diag = scaling_limit_diagnostic(sysd.generators[0], 10)
        v = np.array(diag.values)  # n = 2..10
        assert np.all(np.diff(v[2:]) < 0)  # strictly decreasing for n >= 4
        assert v[-1] <= 1e-2 * v[0]
        sysb = corpus_build("box", d=1, h=1 / 8)
        with pytest.raises(PreconditionSumNonzero):
            scaling_limit_diagnostic(sysb.generators[0], 10)


def test_c8_continuum_discrete_cross_check():
    with criterion(8, "hat fiber eigenvalues: continuum vs finite group"):
        rho, N, M = 64, 8, 4
        sysh = corpus_build("bspline", d=1, h=1.0 / rho, order=2)
        f = sysh.generators[0]
        G = bracket(sysh, freq=FrequencyGrid(1, N, M, rho // 2),
                    with_tail_bound=False)
        lam_cont = np.linalg.eigvalsh(G.fibers)[..., -1]
        m = DiscreteModel(N, M, 1, rho, (model_from_field(f, N, M),))
        sv = exact_fiber_profile(m).singular_values[..., 0]
        lam_disc = sv**2 * f.h**2
        t1 = (np.arange(N) - N // 2) % N
        t2 = (np.arange(M) - M // 2) % M
        assert np.max(np.abs(lam_cont - lam_disc[np.ix_(t1, t2)])) <= 5e-3
