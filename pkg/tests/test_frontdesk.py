import json
import math
import os

import numpy as np
import pytest

from siframe import cli, fileio
from siframe.corpus import bspline_values, corpus_build, corpus_list
from siframe.duality import DualSystem, dual_generators
from siframe.errors import BadParams, BadScenario, StageFailure, UnknownCorpusEntry
from siframe.fiberization import FrequencyGrid
from siframe.grids import CoefficientArray, field_from_samples
from siframe.lattice_ops import GeneratorSystem
from siframe.report import run_analyze, run_oracle

INF = math.inf


class TestCorpus:
    def test_box_entry(self):
        sysb = corpus_build("box", d=1, h=1 / 32)
        g = sysb.generators[0]
        assert g.box == ((0, 0), (1, 1))
        assert np.all(g.values == 1.0)
        assert g.decay.kind == "compact"

    def test_bspline_order_two_is_hat_tensor_box(self):
        sysh = corpus_build("bspline", d=1, h=1 / 16, order=2)
        g = sysh.generators[0]
        assert g.box == ((0, 0), (2, 1))
        x = np.arange(32) / 16
        expected = np.where(x < 1, x, 2 - x)
        assert np.allclose(g.values[:, 0].real, expected)
        assert np.allclose(g.values, g.values[:, :1])

    def test_bspline_partition_of_unity(self):
        for order in (1, 2, 3, 4):
            x = np.linspace(0.0, 1.0, 13, endpoint=False)
            total = sum(bspline_values(order, x + k) for k in range(order + 1))
            assert np.allclose(total, 1.0)

    def test_gaussian_entry(self):
        sysg = corpus_build("gaussian", d=1, h=1 / 8, sigma=0.5, cutoff=3)
        g = sysg.generators[0]
        assert g.box == ((-3, -3), (3, 3))
        assert g.decay.kind == "exponential"
        assert 0 < g.decay.tail_mass < 1e-8

    def test_shifted_pair(self):
        sysp = corpus_build("shifted_pair", d=1, h=1 / 8)
        assert sysp.r == 2
        assert sysp.generators[1].box == ((1, 0), (2, 1))

    def test_diff_filtered_box_translate_sum(self):
        sysd = corpus_build("diff_filtered_box", d=1, h=1 / 16)
        g = sysd.generators[0]
        cells = g.values[::16, ::16]
        assert abs(cells.sum()) <= 1e-10
        assert g.box == ((-1, 0), (2, 1))

    def test_determinism(self):
        a = corpus_build("bspline", d=1, h=1 / 32, order=3)
        b = corpus_build("bspline", d=1, h=1 / 32, order=3)
        assert np.array_equal(a.generators[0].values, b.generators[0].values)

    def test_unknown_entry(self):
        with pytest.raises(UnknownCorpusEntry):
            corpus_build("chirp")

    def test_bad_params(self):
        with pytest.raises(BadParams):
            corpus_build("bspline", order=0)
        with pytest.raises(BadParams):
            corpus_build("box", cutoff=3)

    def test_catalog(self):
        names = {e.name for e in corpus_list()}
        assert names == {
            "box", "bspline", "gaussian", "shifted_pair", "diff_filtered_box"
        }


class TestFileIO:
    @pytest.mark.parametrize("fmt", ["bin", "csv"])
    def test_field_roundtrip(self, tmp_path, fmt, rng):
        f = field_from_samples(
            1, 1 / 4, ((-1, 0), (1, 2)),
            rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)),
        )
        base = str(tmp_path / "field")
        fileio.save_field(f, base, fmt)
        g = fileio.load_field(base + ".json")
        assert g.box == f.box and g.h == f.h
        assert np.allclose(g.values, f.values, atol=1e-15)

    @pytest.mark.parametrize("fmt", ["bin", "csv"])
    def test_coefficients_roundtrip(self, tmp_path, fmt, rng):
        c = CoefficientArray(
            1, (-2, 1), rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        )
        base = str(tmp_path / "coef")
        fileio.save_coefficients(c, base, fmt)
        c2 = fileio.load_coefficients(base + ".json")
        assert c2.offset == c.offset
        assert np.allclose(c2.data, c.data, atol=1e-15)

    def test_system_and_dual_roundtrip(self, tmp_path):
        sysb = corpus_build("box", d=1, h=1 / 16)
        dual = dual_generators(sysb, FrequencyGrid(1, 8, 4, 8))
        base = str(tmp_path / "dual")
        fileio.save_dual(dual, base)
        back = fileio.load_dual(base + ".json")
        assert isinstance(back, DualSystem)
        assert back.construction == dual.construction
        assert back.tail_mass == dual.tail_mass
        assert np.allclose(
            back.system.generators[0].values, dual.system.generators[0].values
        )

    def test_gramian_and_profile_export(self, tmp_path):
        from siframe.fiberization import bracket, spectral_profile

        sysb = corpus_build("box", d=1, h=1 / 16)
        G = bracket(sysb, freq=FrequencyGrid(1, 8, 4, 8))
        base = str(tmp_path / "gram")
        fileio.save_gramian(G, base)
        header = json.load(open(base + ".json"))
        assert header["n1"] == 8 and header["r"] == 1
        raw = np.fromfile(base + ".bin", dtype="<c16")
        assert raw.size == G.fibers.size
        prof = spectral_profile(G)
        path = fileio.profile_to_csv(prof, str(tmp_path / "prof.csv"))
        lines = open(path).read().strip().splitlines()
        assert lines[0] == "node,lambda1,rank"
        assert len(lines) == 1 + 8 * 4


class TestRunAnalyze:
    def test_box_report(self):
        r = run_analyze(
            {"corpus": "box", "h": 1 / 32, "n1": 32, "n2": 4, "trials": 10,
             "stable": True}
        )
        assert r.verdict and r.constancy and r.k0 == 1
        assert r.C == pytest.approx(1.0, abs=1e-6)
        assert r.A_lo == pytest.approx(1.0, abs=1e-6)
        assert r.B_hi == pytest.approx(1.0, abs=1e-6)
        assert r.dual["construction"] == "full_rank_inverse"
        assert max(r.reconstruction["max_rel_error"].values()) <= 1e-6
        assert r.timestamp is None
        d = r.to_dict()
        assert d["schema"] == 1 and "timestamp" not in d

    def test_diff_report_skips_dual(self):
        r = run_analyze(
            {"corpus": "diff_filtered_box", "h": 1 / 16, "n1": 64, "n2": 4,
             "stable": True}
        )
        assert not r.verdict and not r.constancy
        assert r.dual is None and r.reconstruction is None
        assert any("refinement sweep" in w for w in r.warnings)
        assert any("10" in w or "x" in w for w in r.warnings)

    def test_hat_reconstruction_at_mixed_exponents(self):
        r = run_analyze(
            {"corpus": "bspline", "order": 2, "h": 1 / 32, "n1": 32, "n2": 4,
             "p": 1, "q": 2, "trials": 5, "recon_trials": 2, "stable": True}
        )
        assert r.verdict
        assert r.reconstruction["max_rel_error"]["(1,2)"] <= 1e-6

    def test_determinism_byte_identical(self):
        cfg = {"corpus": "box", "h": 1 / 16, "n1": 16, "n2": 4, "trials": 5,
               "seed": 3, "stable": True}
        a = run_analyze(cfg).to_json()
        b = run_analyze(cfg).to_json()
        assert a == b

    def test_oracle_stage(self):
        r = run_analyze(
            {"corpus": "box", "h": 1 / 4, "n1": 8, "n2": 4, "trials": 2,
             "oracle_N": 8, "oracle_M": 4, "stable": True}
        )
        assert r.oracle["agreement"] and r.oracle["matches_continuum"]

    def test_unknown_key_rejected(self):
        with pytest.raises(BadScenario):
            run_analyze({"corpse": "box"})

    def test_stage_failure_tagged(self):
        with pytest.raises(StageFailure) as ei:
            run_analyze({"corpus": "box", "h": 0.3})
        assert ei.value.stage == "corpus"


class TestRunOracle:
    def test_delta_scenario(self):
        out = run_oracle(
            {"name": "delta", "N": 8, "M": 4, "d": 1, "rho": 1,
             "generators": [{"kind": "delta"}]}
        )
        assert out["agreement"] and out["frame"]

    def test_diff_scenario_all_false(self):
        out = run_oracle(
            {"name": "diff", "N": 32, "M": 16, "d": 1, "rho": 2,
             "generators": [{"kind": "diff_box", "order": 2}]}
        )
        assert out["agreement"] and not out["frame"]
        flags = out["results"][0]
        assert not any(
            flags[k] for k in
            ("frame_22", "rank_constant", "band_ok", "dual_exists",
             "min_norm_consistent")
        )

    def test_explicit_generator(self):
        g = np.zeros(32)
        g[0] = 1.0
        out = run_oracle(
            {"N": 8, "M": 4, "d": 1, "rho": 1,
             "generators": [{"kind": "explicit", "re": g.tolist()}]}
        )
        assert out["frame"]

    def test_bad_scenarios(self):
        with pytest.raises(BadScenario):
            run_oracle({"N": 8})
        with pytest.raises(BadScenario):
            run_oracle({"N": 8, "M": 4, "generators": [{"kind": "wiggle"}]})
        with pytest.raises(BadScenario):
            run_oracle({"N": 8, "M": 4})
        with pytest.raises(BadScenario):
            run_oracle(
                {"N": 8, "M": 4, "rho": 1,
                 "generators": [{"kind": "explicit", "re": [0.0] * 32}]}
            )


class TestCLI:
    def test_analyze_exit_codes(self, tmp_path):
        out = str(tmp_path / "r.json")
        code = cli.main(
            ["analyze", "--corpus", "box", "--h", "1/16", "--fibers", "16x4",
             "--trials", "3", "--stable", "--out", out]
        )
        assert code == 0
        data = json.load(open(out))
        assert data["verdict"] is True
        code = cli.main(
            ["analyze", "--corpus", "diff_filtered_box", "--h", "1/16",
             "--fibers", "32x4", "--stable", "--out", out]
        )
        assert code == 2

    def test_analyze_csv_output(self, tmp_path, capsys):
        code = cli.main(
            ["analyze", "--corpus", "box", "--h", "1/16", "--fibers", "16x4",
             "--trials", "2", "--stable", "--format", "csv"]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "verdict,True" in text

    def test_cli_byte_identical_reports(self, tmp_path):
        args = ["analyze", "--corpus", "box", "--h", "1/16", "--fibers",
                "16x4", "--trials", "3", "--seed", "5", "--stable"]
        f1, f2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        assert cli.main(args + ["--out", f1]) == 0
        assert cli.main(args + ["--out", f2]) == 0
        assert open(f1, "rb").read() == open(f2, "rb").read()

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = {"corpus": "box", "h": 1 / 16, "n1": 16, "n2": 4, "trials": 2,
               "stable": True}
        path = str(tmp_path / "cfg.json")
        json.dump(cfg, open(path, "w"))
        out = str(tmp_path / "r.json")
        assert cli.main(["analyze", "--config", path, "--out", out]) == 0
        assert json.load(open(out))["config"]["corpus"] == "box"

    def test_oracle_bundled_scenarios(self, tmp_path):
        out = str(tmp_path / "o.json")
        assert cli.main(["oracle", "--scenario", "delta", "--out", out]) == 0
        assert json.load(open(out))["agreement"] is True
        assert cli.main(["oracle", "--scenario", "diff-filter", "--out", out]) == 2
        data = json.load(open(out))
        assert data["agreement"] is True and data["frame"] is False

    def test_oracle_unknown_scenario(self):
        assert cli.main(["oracle", "--scenario", "nope"]) == 1

    def test_dual_and_reconstruct_commands(self, tmp_path):
        prefix = str(tmp_path / "dual")
        out = str(tmp_path / "d.json")
        code = cli.main(
            ["dual", "--corpus", "box", "--h", "1/16", "--fibers", "16x4",
             "--dual-out", prefix, "--out", out]
        )
        assert code == 0
        assert os.path.exists(prefix + ".json")
        assert fileio.load_dual(prefix + ".json").construction == \
            "full_rank_inverse"
        code = cli.main(
            ["reconstruct", "--corpus", "bspline", "--order", "2", "--h",
             "1/16", "--fibers", "16x4", "--out", out]
        )
        assert code == 0
        assert json.load(open(out))["relative_error_22"] <= 1e-6

    def test_dual_command_failure_exit_code(self):
        code = cli.main(
            ["dual", "--corpus", "diff_filtered_box", "--h", "1/16",
             "--fibers", "32x4", "--dual-out", "/tmp/unused-dual"]
        )
        assert code == 1

    def test_diagnose_scaling_command(self, tmp_path):
        out = str(tmp_path / "s.json")
        code = cli.main(
            ["diagnose-scaling", "--h", "1/8", "--n-max", "8", "--out", out]
        )
        assert code == 0
        data = json.load(open(out))
        assert data["decayed"] is True and len(data["values"]) == 7

    def test_corpus_emit(self, tmp_path):
        base = str(tmp_path / "sys")
        assert cli.main(
            ["corpus", "emit", "--name", "bspline", "--order", "2",
             "--h", "1/8", "--out", base]
        ) == 0
        loaded = fileio.load_system(base + ".json")
        assert loaded.r == 1 and loaded.generators[0].box == ((0, 0), (2, 1))


class TestValidation:
    def test_zero_generator_rejected(self):
        from siframe.grids import field_from_samples

        z = field_from_samples(1, 1 / 4, ((0, 0), (1, 1)), np.zeros((4, 4)))
        with pytest.raises(BadParams):
            GeneratorSystem((z,))

    def test_frequency_grid_validation(self):
        with pytest.raises(BadParams):
            FrequencyGrid(1, 1, 4, 8)
        with pytest.raises(BadParams):
            FrequencyGrid(1, 4, 4, 0)
        with pytest.raises(BadParams):
            FrequencyGrid(0, 4, 4, 2)

    def test_zero_discrete_generator_rejected(self):
        from siframe.discrete_oracle import DiscreteModel

        with pytest.raises(BadParams):
            DiscreteModel(4, 4, 1, 1, (np.zeros((4, 4), dtype=complex),))

    def test_inline_random_scenario(self):
        out = run_oracle(
            {"name": "mini", "N": 16, "M": 8, "d": 1, "rho": 2,
             "random": {"count": 2, "r_pattern": [1, 2], "seed": 500}}
        )
        assert out["agreement"] and out["frame"]
        assert len(out["results"]) == 2

    def test_bundled_scenario_files_wellformed(self):
        from importlib import resources

        for name, frame in (("delta", True), ("diff-filter", False)):
            ref = resources.files("siframe") / "scenarios" / f"{name}.json"
            data = json.loads(ref.read_text())
            assert {"N", "M", "d", "rho"} <= set(data)
        rnd = json.loads(
            (resources.files("siframe") / "scenarios" / "random-20.json")
            .read_text()
        )
        assert rnd["random"]["count"] == 20
        assert rnd["random"]["seed"] == 100

    def test_shifted_pair_cli_shift_flag(self, tmp_path):
        base = str(tmp_path / "pair")
        assert cli.main(
            ["corpus", "emit", "--name", "shifted_pair", "--h", "1/8",
             "--shift", "2,0", "--out", base]
        ) == 0
        loaded = fileio.load_system(base + ".json")
        assert loaded.generators[1].box == ((2, 0), (3, 1))


class TestMoreReports:
    def test_gaussian_end_to_end(self):
        r = run_analyze(
            {"corpus": "gaussian", "sigma": 0.5, "cutoff": 3, "h": 1 / 16,
             "n1": 16, "n2": 4, "trials": 5, "recon_trials": 1, "stable": True}
        )
        assert r.verdict and r.constancy and r.k0 == 1
        assert r.dual["tail_mass"] <= 1e-6
        assert max(r.reconstruction["max_rel_error"].values()) <= 1e-6

    def test_infinite_exponent_config(self):
        r = run_analyze(
            {"corpus": "box", "h": 1 / 16, "n1": 16, "n2": 4, "p": "inf",
             "q": "inf", "trials": 5, "stable": True}
        )
        assert r.verdict
        assert abs(r.A_lo - 1.0) <= 1e-6 and abs(r.B_hi - 1.0) <= 1e-6

    def test_report_numeric_fields_finite(self):
        r = run_analyze(
            {"corpus": "bspline", "order": 2, "h": 1 / 16, "n1": 16, "n2": 4,
             "trials": 3, "recon_trials": 1, "stable": True}
        )
        d = r.to_dict()

        def walk(obj):
            if isinstance(obj, dict):
                for v in obj.values():
                    walk(v)
            elif isinstance(obj, (list, tuple)):
                for v in obj:
                    walk(v)
            elif isinstance(obj, float):
                assert math.isfinite(obj)

        walk(d)
        json.dumps(d)  # serializable

    def test_shifted_pair_end_to_end(self):
        r = run_analyze(
            {"corpus": "shifted_pair", "base": "box", "shift": [1, 0],
             "h": 1 / 16, "n1": 16, "n2": 4, "trials": 3, "recon_trials": 1,
             "stable": True}
        )
        # constant rank 1 with two generators: a frame of its span via
        # the rank-deficient pseudo-inverse dual
        assert r.verdict and r.k0 == 1
        assert r.dual["construction"] == "constant_rank_pseudoinverse"
        assert max(r.reconstruction["max_rel_error"].values()) <= 1e-6
