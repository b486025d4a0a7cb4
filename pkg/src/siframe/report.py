"""Pipeline orchestration and report assembly.

``run_analyze`` drives bracket -> spectral profile -> band condition ->
dual construction -> reconstruction sweep -> empirical frame bounds for
one configured generator system, collecting everything into a versioned
FrameReport.  Every numeric field is computed by exactly one upstream
operation; this module only sequences stages and tags their failures.

``run_oracle`` evaluates finite-group scenarios through the discrete
verdict machinery.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import discrete_oracle as oracle
from .corpus import corpus_build
from .duality import (
    dual_generators,
    frame_bounds_empirical,
    random_coefficients,
    reconstruct,
)
from .errors import BadScenario, SiframeError, StageFailure
from .fiberization import (
    FrequencyGrid,
    bracket,
    condition_iii_check,
    default_truncation,
    spectral_profile,
)
from .grids import INF
from .lattice_ops import synthesize
from .mixed_norms import Lpq_norm
from .grids import subtract_fields

__all__ = ["FrameReport", "run_analyze", "run_oracle", "DEFAULT_CONFIG"]

SCHEMA_VERSION = 1

DEFAULT_CONFIG = {
    "corpus": "box",
    "d": 1,
    "h": 1.0 / 32,
    "p": 2.0,
    "q": 2.0,
    "n1": 64,
    "n2": 4,
    "J": None,
    "rank_tol": 1e-8,
    "trials": 50,
    "seed": 0,
    "recon_trials": 3,
    "recon_taps": 50,
    "refine_factor": 8,
    "oracle_N": None,
    "oracle_M": None,
    "stable": False,
}

_RECON_EXPONENTS = ((1, 1), (2, 2), (1, 2), (INF, INF))

_CORPUS_KEYS = ("order", "sigma", "cutoff", "base", "shift")


@dataclass(frozen=True)
class FrameReport:
    """Versioned summary of one analysis run."""

    digest: str
    config: dict
    k0: int
    constancy: bool
    C: float
    tail_bound: float
    A_lo: float | None
    B_hi: float | None
    analytic_B: float | None
    dual: dict | None
    reconstruction: dict | None
    oracle: dict | None
    warnings: tuple
    verdict: bool
    timestamp: str | None

    def to_dict(self):
        out = {
            "schema": SCHEMA_VERSION,
            "digest": self.digest,
            "config": self.config,
            "k0": self.k0,
            "constancy": self.constancy,
            "C": self.C,
            "tail_bound": self.tail_bound,
            "A_lo": self.A_lo,
            "B_hi": self.B_hi,
            "analytic_B": self.analytic_B,
            "dual": self.dual,
            "reconstruction": self.reconstruction,
            "oracle": self.oracle,
            "warnings": list(self.warnings),
            "verdict": self.verdict,
        }
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _digest(system, config):
    hsh = hashlib.sha256()
    hsh.update(
        json.dumps(
            {k: config[k] for k in sorted(config) if k != "stable"},
            sort_keys=True,
            default=str,
        ).encode()
    )
    for g in system.generators:
        hsh.update(np.ascontiguousarray(g.values).tobytes())
        hsh.update(repr(g.box).encode())
    return hsh.hexdigest()


def _stage(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, StageFailure):
                raise StageFailure(name, exc) from exc
            return False

    return _Ctx()


def _exponent(v):
    if v in ("inf", "Infinity", None):
        return INF
    return float(v)


def run_analyze(config):
    """Run the full analysis pipeline for one configuration dict.

    Unknown keys are rejected; missing keys take defaults.  Stage
    failures propagate as :class:`StageFailure` with the stage tag.
    """
    cfg = dict(DEFAULT_CONFIG)
    extra = {}
    for k, v in (config or {}).items():
        if k in DEFAULT_CONFIG:
            cfg[k] = v
        elif k in _CORPUS_KEYS:
            extra[k] = v
        else:
            raise BadScenario(f"unknown config key {k!r}")
    warnings = []

    with _stage("corpus"):
        params = dict(extra)
        if "shift" in params:
            params["shift"] = tuple(params["shift"])
        system = corpus_build(cfg["corpus"], d=cfg["d"], h=cfg["h"], **params)

    with _stage("bracket"):
        J = cfg["J"] or default_truncation(system)
        freq = FrequencyGrid(cfg["d"], cfg["n1"], cfg["n2"], J)
        G = bracket(system, freq=freq)

    with _stage("spectral"):
        prof = spectral_profile(G, cfg["rank_tol"])
        cond = condition_iii_check(prof)

    dual_info = None
    recon_info = None
    bounds = None
    if not cond.holds:
        with _stage("refine"):
            wide = FrequencyGrid(cfg["d"], cfg["refine_factor"] * cfg["n1"],
                                 cfg["n2"], J)
            prof_wide = spectral_profile(
                bracket(system, freq=wide, with_tail_bound=False), cfg["rank_tol"]
            )
            growth = prof_wide.C_est / prof.C_est if prof.C_est else math.inf
            warnings.append(
                f"condition-iii fails; dual skipped; refinement sweep "
                f"{cfg['n1']} -> {cfg['refine_factor'] * cfg['n1']} fibers grows "
                f"C_est by {growth:.3g}x"
            )
    else:
        with _stage("dual"):
            dual = dual_generators(system, freq, cfg["rank_tol"])
            dual_info = {
                "construction": dual.construction,
                "residual": dual.residual,
                "tail_mass": dual.tail_mass,
            }
        with _stage("reconstruct"):
            rng_seed = cfg["seed"]
            table = {}
            orderings = 0.0
            for trial in range(cfg["recon_trials"]):
                rng = np.random.default_rng(rng_seed + trial)
                coeffs = random_coefficients(
                    rng, system.r, system.d, taps=cfg["recon_taps"]
                )
                f = synthesize(system, coeffs)
                g1 = reconstruct(f, system, dual)
                g2 = reconstruct(f, dual, system)
                for e in _RECON_EXPONENTS:
                    den = Lpq_norm(f, e)
                    err = Lpq_norm(subtract_fields(g1, f), e) / den
                    key = f"({e[0]:g},{e[1]:g})"
                    table[key] = max(table.get(key, 0.0), err)
                orderings = max(
                    orderings,
                    Lpq_norm(subtract_fields(g1, g2), (2, 2)) / Lpq_norm(f, (2, 2)),
                )
            recon_info = {
                "max_rel_error": table,
                "ordering_agreement": orderings,
            }
        with _stage("frame_bounds"):
            e = (_exponent(cfg["p"]), _exponent(cfg["q"]))
            fb = frame_bounds_empirical(
                system, e=e, trials=cfg["trials"], seed=cfg["seed"]
            )
            bounds = fb

    oracle_info = None
    if cfg["oracle_N"] and cfg["oracle_M"]:
        with _stage("oracle"):
            gens = tuple(
                oracle.model_from_field(g, cfg["oracle_N"], cfg["oracle_M"])
                for g in system.generators
            )
            model = oracle.DiscreteModel(
                cfg["oracle_N"], cfg["oracle_M"], cfg["d"], system.grid.rho, gens
            )
            v = oracle.verdict_equivalence(model)
            oracle_info = v.to_dict()
            oracle_info["matches_continuum"] = bool(
                v.agreement and v.frame_22 == cond.holds
            )

    digest = _digest(system, cfg)
    stamp = None if cfg["stable"] else datetime.datetime.now(
        datetime.timezone.utc
    ).isoformat()
    return FrameReport(
        digest=digest,
        config={k: (str(v) if v is INF else v) for k, v in cfg.items()}
        | {k: list(v) if isinstance(v, tuple) else v for k, v in extra.items()},
        k0=prof.k0,
        constancy=prof.constancy,
        C=prof.C_est,
        tail_bound=G.tail_bound,
        A_lo=bounds.A_lo if bounds else None,
        B_hi=bounds.B_hi if bounds else None,
        analytic_B=bounds.analytic_B if bounds else None,
        dual=dual_info,
        reconstruction=recon_info,
        oracle=oracle_info,
        warnings=tuple(warnings),
        verdict=bool(cond.holds),
        timestamp=stamp,
    )


def _scenario_generator(desc, N, M, d, rho):
    shape = (rho * N,) + (rho * M,) * d
    kind = desc.get("kind")
    if kind == "delta":
        g = np.zeros(shape, dtype=complex)
        g[(0,) * (1 + d)] = 1.0
        return g
    if kind == "box":
        g = np.zeros(shape, dtype=complex)
        g[tuple(slice(0, rho) for _ in range(1 + d))] = 1.0
        return g
    if kind == "diff_box":
        order = int(desc.get("order", 2))
        b = np.zeros(shape, dtype=complex)
        b[tuple(slice(0, rho) for _ in range(1 + d))] = 1.0
        if order == 1:
            return b - np.roll(b, rho, axis=0)
        if order == 2:
            return 2 * b - np.roll(b, rho, axis=0) - np.roll(b, -rho, axis=0)
        raise BadScenario(f"diff_box order {order} not supported")
    if kind == "explicit":
        re = np.asarray(desc["re"], dtype=float)
        im = np.asarray(desc.get("im", np.zeros_like(re)), dtype=float)
        vals = (re + 1j * im).reshape(shape)
        return vals
    raise BadScenario(f"unknown generator kind {kind!r}")


def run_oracle(scenario):
    """Evaluate one oracle scenario (dict or path to a JSON file)."""
    if isinstance(scenario, str):
        with open(scenario, "r", encoding="utf-8") as fh:
            scenario = json.load(fh)
    if not isinstance(scenario, dict):
        raise BadScenario("scenario must be a JSON object")
    try:
        N, M, d, rho = (
            int(scenario["N"]),
            int(scenario["M"]),
            int(scenario.get("d", 1)),
            int(scenario.get("rho", 1)),
        )
    except KeyError as e:
        raise BadScenario(f"scenario missing key {e}") from None
    rank_tol = float(scenario.get("rank_tol", 1e-3))
    models = []
    if "random" in scenario:
        desc = scenario["random"]
        count = int(desc.get("count", 1))
        pattern = [int(x) for x in desc.get("r_pattern", [1])]
        seed0 = int(desc.get("seed", 0))
        for i in range(count):
            r = pattern[i % len(pattern)]
            models.append(
                (f"random-{i}", oracle.random_model(N, M, d, rho, r, seed0 + i,
                                                    rank_tol=rank_tol))
            )
    elif "generators" in scenario:
        gens = tuple(
            _scenario_generator(g, N, M, d, rho) for g in scenario["generators"]
        )
        try:
            models.append((scenario.get("name", "model"),
                           oracle.DiscreteModel(N, M, d, rho, gens)))
        except SiframeError as e:
            raise BadScenario(str(e)) from e
    else:
        raise BadScenario("scenario needs 'generators' or 'random'")
    results = []
    for name, m in models:
        v = oracle.verdict_equivalence(m, rank_tol=rank_tol)
        row = {"model": name}
        row.update(v.to_dict())
        results.append(row)
    return {
        "schema": SCHEMA_VERSION,
        "name": scenario.get("name", "scenario"),
        "rank_tol": rank_tol,
        "results": results,
        "agreement": all(r["agreement"] for r in results),
        "frame": all(r["frame_22"] for r in results),
    }
