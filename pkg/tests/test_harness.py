import io

import numpy as np
import pytest
import scipy.sparse as sp

from matkaczmarz.harness import cli
from matkaczmarz.harness.generate import RandomSpec, random_problem, rank_configurations
from matkaczmarz.harness.mmio import (MatrixMarketError, read_header,
                                      read_matrix_market, write_matrix_market)
from matkaczmarz.harness.tracefile import (HEADER, format_trace, read_trace_csv,
                                           write_trace_csv)
from matkaczmarz.harness.trials import (ExperimentSpec, TrialStats,
                                        format_summary, run_trials)
from matkaczmarz.harness.verify import CheckResult
from matkaczmarz.imaging import read_ppm
from matkaczmarz.linalg import svd
from matkaczmarz.solvers import (Problem, SolverConfig, StopRule, Trace,
                                 solve, warmup)


@pytest.fixture(scope="module", autouse=True)
def _compiled():
    warmup()


def mtx(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestMatrixMarket:
    def test_identity(self, tmp_path):
        p = mtx(tmp_path, "i.mtx", "%%MatrixMarket matrix coordinate real general\n"
                                   "% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n")
        A = read_matrix_market(p)
        assert sp.isspmatrix_csr(A) or sp.issparse(A)
        np.testing.assert_array_equal(A.toarray(), np.eye(2))

    def test_pattern(self, tmp_path):
        p = mtx(tmp_path, "p.mtx", "%%MatrixMarket matrix coordinate pattern general\n"
                                   "2 3 3\n1 1\n1 3\n2 2\n")
        A = read_matrix_market(p)
        assert A.shape == (2, 3)
        np.testing.assert_array_equal(A.data, 1.0)
        np.testing.assert_array_equal(A.toarray(), [[1, 0, 1], [0, 1, 0]])

    def test_symmetric_mirrored(self, tmp_path):
        p = mtx(tmp_path, "s.mtx", "%%MatrixMarket matrix coordinate real symmetric\n"
                                   "2 2 2\n1 1 4\n2 1 5\n")
        A = read_matrix_market(p).toarray()
        assert A[1, 0] == 5 and A[0, 1] == 5 and A[0, 0] == 4

    def test_integer_and_duplicates(self, tmp_path):
        p = mtx(tmp_path, "d.mtx", "%%MatrixMarket matrix coordinate integer general\n"
                                   "2 2 3\n1 1 1\n1 1 2\n2 1 -3\n")
        A = read_matrix_market(p)
        np.testing.assert_array_equal(A.toarray(), [[3, 0], [-3, 0]])
        assert A.has_sorted_indices and A.nnz == 2

    @pytest.mark.parametrize("text", [
        "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
        "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
        "%%MatrixMarket matrix coordinate real hermitian\n1 1 1\n1 1 1\n",
        "%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n",
        "2 2 1\n1 1 1\n",
    ])
    def test_bad_header(self, tmp_path, text):
        with pytest.raises(MatrixMarketError):
            read_matrix_market(mtx(tmp_path, "h.mtx", text))

    @pytest.mark.parametrize("body", ["2 2 1\n3 1 1.0\n", "2 2 1\n1 0 1.0\n", "2 2 3\n1 1 1.0\n"])
    def test_bad_body(self, tmp_path, body):
        p = mtx(tmp_path, "b.mtx", "%%MatrixMarket matrix coordinate real general\n" + body)
        with pytest.raises(MatrixMarketError):
            read_matrix_market(p)

    def test_round_trip(self, tmp_path):
        A = sp.random(7, 5, density=0.4, random_state=1, format="csr")
        write_matrix_market(tmp_path / "r.mtx", A)
        assert read_header(tmp_path / "r.mtx") == ("real", "general")
        np.testing.assert_allclose(read_matrix_market(tmp_path / "r.mtx").toarray(), A.toarray(),
                                   rtol=1e-15)


class TestGenerator:
    def test_set4_shape(self):
        prob = random_problem(RandomSpec(35, 60, 80, 20, seed=0))
        assert prob.a.shape == (35, 60) and prob.b.shape == (80, 20)
        assert np.linalg.norm(prob.residual(prob.x_star)) <= 1e-8 * prob.c_fro

    def test_duplicated_blocks_have_base_rank(self):
        prob = random_problem(RandomSpec(12, 10, 9, 7, rank_a=4, rank_b=3, seed=1))
        assert svd(prob.a.toarray()).rank == 4
        assert svd(prob.b).rank == 3

    def test_deterministic(self):
        a = random_problem(RandomSpec(6, 5, 4, 3, seed=9))
        b = random_problem(RandomSpec(6, 5, 4, 3, seed=9))
        assert (a.a != b.a).nnz == 0
        np.testing.assert_array_equal(a.c, b.c)
        c = random_problem(RandomSpec(6, 5, 4, 3, seed=10))
        assert not np.array_equal(a.c, c.c)

    def test_parse_and_validate(self):
        assert RandomSpec.parse("3,4,5,6", seed=2) == RandomSpec(3, 4, 5, 6, seed=2)
        assert RandomSpec.parse("8,8,4,4,2,3").rank_b == 3
        for bad in ("1,2,3", "a,b,c,d"):
            with pytest.raises(ValueError):
                RandomSpec.parse(bad)
        with pytest.raises(ValueError):
            RandomSpec(3, 3, 3, 3, rank_a=4)
        with pytest.raises(ValueError):
            RandomSpec(0, 3, 3, 3)

    def test_rank_configurations(self):
        cfgs = rank_configurations()
        assert len(cfgs) == 9 and len({lab for lab, _ in cfgs}) == 9
        for label, spec in cfgs:
            prob = random_problem(spec)
            ka, kb = label.split("/")
            ra, rb = svd(prob.a.toarray()).rank, svd(prob.b).rank
            assert max(spec.m, spec.p, spec.q, spec.n) <= 30
            assert (ra == prob.m) == (ka == "row") or ka == "def"
            assert (ra == prob.p) == (ka == "col") or ka == "def"
            assert (rb == prob.q) == (kb == "row") or kb == "def"
            assert (rb == prob.n) == (kb == "col") or kb == "def"
            if ka == "def":
                assert ra < min(prob.m, prob.p)
            if kb == "def":
                assert rb < min(prob.q, prob.n)


class TestTraceCsv:
    def trace(self, n=3, rse=True):
        k = np.arange(1, n + 1)
        vals = np.array([0.1, 1 / 3, np.pi])[:n] * 1.2345678901234567
        return Trace(k, k % 2, vals if rse else np.full(n, np.nan), vals / 7, vals * 1e-6)

    def test_lines(self, tmp_path):
        write_trace_csv(self.trace(), tmp_path / "t.csv")
        raw = (tmp_path / "t.csv").read_bytes()
        assert b"\r" not in raw
        lines = raw.decode("utf-8").splitlines()
        assert len(lines) == 4 and lines[0] == ",".join(HEADER)

    def test_missing_rse(self):
        text = format_trace(self.trace(rse=False))
        assert all(line.split(",")[2] == "" for line in text.splitlines()[1:])

    def test_round_trip(self, tmp_path):
        tr = self.trace()
        write_trace_csv(tr, tmp_path / "t.csv")
        back = read_trace_csv(tmp_path / "t.csv")
        for name in ("rse", "res_fro", "wall_s"):
            np.testing.assert_allclose(getattr(back, name), getattr(tr, name), rtol=1e-15)
        np.testing.assert_array_equal(back.k, tr.k)

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_trace_csv(Trace(*(np.empty(0) for _ in range(5))), tmp_path / "e.csv")

    def test_gi_rows_blank(self):
        prob = random_problem(RandomSpec(5, 4, 3, 3, seed=0))
        rep = solve(prob, "GI", SolverConfig(max_iters=2, trace_stride=1))
        assert format_trace(rep.trace).splitlines()[1].split(",")[1] == ""

    def test_reproducible_bytes(self, tmp_path):
        prob = random_problem(RandomSpec(10, 6, 3, 4, seed=1))
        cfg = SolverConfig(seed=5, max_iters=400, trace_stride=3, stop=StopRule("rse", 1e-12))
        for j in range(2):
            write_trace_csv(solve(prob, "RGRBK", cfg), tmp_path / f"{j}.csv", timings=False)
        assert (tmp_path / "0.csv").read_bytes() == (tmp_path / "1.csv").read_bytes()


class TestTrials:
    def test_stats(self):
        s = TrialStats.from_values([10, 12, 14], [1.0, 1.0, 1.0])
        assert s.it_min <= s.it_mean <= s.it_max and s.it_sd == pytest.approx(2.0)
        assert s.cpu_sd == 0.0
        d = TrialStats.from_values([7], [0.5], deterministic=True)
        assert d.it_sd is None and d.cpu_sd is None
        with pytest.raises(ValueError):
            TrialStats.from_values([], [])

    def test_run_and_table(self):
        spec = ExperimentSpec(RandomSpec(12, 8, 4, 5, seed=3), ("RBK", "MWRBK", "RGRBK"),
                              SolverConfig(stop=StopRule("rse", 1e-6)), trials=4,
                              thetas=(0.5, 1.0), base_seed=10)
        results = run_trials(spec)
        labels = [r.label for r in results]
        assert labels == ["RBK", "MWRBK", "RGRBK(theta=0.5)", "RGRBK(theta=1)"]
        rbk = results[0]
        assert len(rbk.reports) == 4 and rbk.stats.it_sd is not None
        assert rbk.stats.it_min == min(rbk.iterations) and rbk.stats.it_max == max(rbk.iterations)
        # seeds are base_seed + trial index
        prob = spec.problem()
        again = solve(prob, "RBK", SolverConfig(stop=StopRule("rse", 1e-6), seed=12))
        assert again.iterations == rbk.iterations[2]
        assert len(results[1].reports) == 1 and results[1].stats.it_sd is None
        table = format_summary(results)
        for col in ("IT", "CPU", "SD", "Range", "CPU/IT"):
            assert col in table.splitlines()[0]
        assert "--" in table.splitlines()[3]

    def test_failures_recorded(self):
        spec = ExperimentSpec(RandomSpec(6, 4, 3, 5, seed=1), ("BK_FULLCOL", "BK"),
                              SolverConfig(max_iters=10), trials=2)
        results = run_trials(spec)
        assert results[0].stats is None and results[0].errors
        assert results[1].stats is not None
        assert "failed" in format_summary(results)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ExperimentSpec(RandomSpec(3, 3, 3, 3), trials=0)
        with pytest.raises(TypeError):
            ExperimentSpec("problem.mtx")


def run_cli(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


class TestCli:
    def test_solve_random(self, tmp_path):
        code, text = run_cli("solve", "--random", "12,8,4,5", "--method", "mwrbk",
                             "--stop", "rse:1e-8", "--out", str(tmp_path / "t.csv"))
        assert code == 0 and "rse_below" in text
        assert read_trace_csv(tmp_path / "t.csv").k[-1] > 0

    def test_solve_matrix_market(self, tmp_path):
        A = sp.random(15, 6, density=0.5, random_state=2, format="csr") + sp.csr_matrix(np.tile(np.eye(6), (3, 1))[:15])
        write_matrix_market(tmp_path / "a.mtx", A)
        write_matrix_market(tmp_path / "b.mtx", np.random.default_rng(0).standard_normal((3, 4)))
        code, text = run_cli("solve", "--a", str(tmp_path / "a.mtx"), "--b", str(tmp_path / "b.mtx"),
                             "--stop", "rse:1e-6")
        assert code == 0 and "relative solution error" in text

    def test_alpha_out_of_range(self):
        code, _ = run_cli("solve", "--random", "6,5,3,3", "--method", "BK_FULLROW", "--alpha", "3.0")
        assert code == 2

    @pytest.mark.parametrize("argv", [
        ("frobnicate",), ("solve", "--bogus"), ("solve", "--alpha", "fast"),
        ("solve", "--stop", "rse"), ("bench", "--trials", "0"), ("bench", "--method", "XYZ"),
        ("solve", "--random", "1,2"), ("solve", "--a", "missing.mtx", "--b", "missing.mtx"),
        ("deblur", "--synthetic", "axb"), ("bench", "--theta", "2"),
    ])
    def test_usage_errors(self, argv):
        assert run_cli(*argv)[0] == 2

    def test_bench_theta_grid(self):
        code, text = run_cli("bench", "--random", "10,8,4,5", "--trials", "3",
                             "--theta", "0.5,0.75,1.0", "--stop", "rse:1e-5")
        assert code == 0
        rows = [ln for ln in text.splitlines() if ln.startswith("RGRBK(")]
        assert len(rows) == 3

    def test_bench_default_methods(self, tmp_path):
        code, text = run_cli("bench", "--random", "10,8,4,5", "--trials", "2",
                             "--stop", "rse:1e-4", "--out", str(tmp_path / "tr"))
        assert code == 0
        for m in ("RBK", "GRBK", "MWRBK"):
            assert any(ln.startswith(m + " ") for ln in text.splitlines())
        assert len(list((tmp_path / "tr").glob("*.csv"))) == 5

    def test_config_file_and_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# solver settings\nmethod = GI\nmax-iters = 5\nrandom = 6,5,3,3\n")
        code, text = run_cli("solve", "--config", str(cfg))
        assert code == 0 and "iterations 5" in text and "method GI" in text
        code, text = run_cli("solve", "--config", str(cfg), "--max-iters", "7")
        assert "iterations 7" in text
        cfg.write_text("colour = red\n")
        assert run_cli("solve", "--config", str(cfg))[0] == 2

    def test_deblur(self, tmp_path):
        code, text = run_cli("deblur", "--synthetic", "12x12", "--out", str(tmp_path / "d"))
        assert code == 0 and "PSNR" in text
        img = read_ppm(tmp_path / "d" / "restored.ppm")
        assert img.pixels.shape == (12, 12, 3)
        assert read_trace_csv(tmp_path / "d" / "trace.csv").k.size > 0

    def test_deblur_from_file_zero_boundary(self, tmp_path):
        from matkaczmarz.imaging import synthetic_image, write_ppm
        write_ppm(synthetic_image(10, 8, seed=3), tmp_path / "in.ppm")
        code, text = run_cli("deblur", "--image", str(tmp_path / "in.ppm"), "--boundary", "zero",
                             "--method", "RBK")
        assert code == 0 and "rse_below" in text

    def test_verify_exit_codes(self, monkeypatch, tmp_path):
        from matkaczmarz.harness import verify
        ok = [lambda quick=False: [CheckResult("a", True, "fine")]]
        monkeypatch.setattr(verify, "CHECKS", ok)
        code, text = run_cli("verify", "--quick", "--out", str(tmp_path / "v"))
        assert code == 0 and "1/1 checks passed" in text
        assert (tmp_path / "v" / "checks.csv").read_text().startswith("check,passed")
        assert len((tmp_path / "v" / "bounds.csv").read_text().splitlines()) == 1 + 5 * 11
        bad = ok + [lambda quick=False: [CheckResult("b", False, "broken")]]
        monkeypatch.setattr(verify, "CHECKS", bad)
        code, text = run_cli("verify")
        assert code == 1 and "FAIL b" in text


def test_verify_quick_suite_passes():
    code, text = run_cli("verify", "--quick")
    assert code == 0, text
    assert "FAIL" not in text


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "matkaczmarz", "solve", "--random", "6,5,3,3",
                          "--max-iters", "10"], capture_output=True, text=True)
    assert res.returncode == 0 and "iterations 10" in res.stdout
    res = subprocess.run([sys.executable, "-m", "matkaczmarz", "nope"], capture_output=True)
    assert res.returncode == 2
