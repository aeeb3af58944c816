"""End-to-end command-line runs: artifacts, exit codes, determinism.

Most tests drive cli.main in process for speed; two subprocess tests
cover module invocation (python -m slw) and real process exit codes.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import bump_potential, supported_matrix
from slw import cli
from slw import io as sio
from slw.contour import SolutionCache
from slw.problem import Potential, SingularProblem, TransitionMatrix


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_fixtures")
    A = supported_matrix()
    target = SingularProblem(a=1.0, nu=1.0 / 3.0, A=A, T=2.5,
                             q=bump_potential())
    model = SingularProblem(a=1.0, nu=1.0 / 3.0, A=A, T=2.5,
                            q=Potential.zero())
    trivial = SingularProblem(a=1.0, nu=0.5, A=TransitionMatrix.identity(),
                              T=1.5, q=Potential.zero())
    paths = {
        "dir": d,
        "target": d / "target.json",
        "model": d / "model.json",
        "trivial": d / "trivial.json",
        "bad_a12": d / "bad_a12.json",
        "model_wrong_matrix": d / "model_wrong_matrix.json",
        "target_obj": target,
    }
    sio.dump_json(target.to_dict(), paths["target"])
    sio.dump_json(model.to_dict(), paths["model"])
    sio.dump_json(trivial.to_dict(), paths["trivial"])
    bad = target.to_dict()
    bad["A"][1] = [0.4, 0.0]
    sio.dump_json(bad, paths["bad_a12"])
    wrong = model.to_dict()
    wrong["A"] = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
    sio.dump_json(wrong, paths["model_wrong_matrix"])
    return paths


@pytest.fixture(scope="module")
def weyl160(files):
    """Weyl samples of the bump target on a 160-node contour."""
    out = files["dir"] / "weyl160.json"
    rc = cli.main(["forward", "--problem", str(files["target"]),
                   "--out", str(out), "--nodes", "160", "--s-max", "40"])
    assert rc == 0
    return out


class TestArgumentHandling:
    def test_unknown_command_exits_1(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["bogus"])
        assert err.value.code == 1

    def test_missing_required_option_exits_1(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["forward"])
        assert err.value.code == 1

    def test_bad_grid_spec(self, files, capsys):
        rc = cli.main(["invert", "--weyl", "w.json",
                       "--model", str(files["model"]),
                       "--grid", "1:2", "--out", "q.json"])
        assert rc == 1
        assert "start:stop:n" in capsys.readouterr().err

    def test_descending_grid(self, files, weyl160):
        rc = cli.main(["invert", "--weyl", str(weyl160),
                       "--model", str(files["model"]),
                       "--grid", "2:1:10", "--out", "q.json"])
        assert rc == 1

    def test_negative_grid_start(self, files, weyl160):
        rc = cli.main(["invert", "--weyl", str(weyl160),
                       "--model", str(files["model"]),
                       "--grid=-1:2:10", "--out", "q.json"])
        assert rc == 1

    def test_odd_node_count(self, files):
        rc = cli.main(["forward", "--problem", str(files["target"]),
                       "--out", "w.json", "--nodes", "161"])
        assert rc == 1

    def test_bad_h_value(self, files):
        rc = cli.main(["forward", "--problem", str(files["target"]),
                       "--out", "w.json", "--h", "fast"])
        assert rc == 1

    def test_bad_threads_env(self, files, monkeypatch):
        monkeypatch.setenv("SLW_THREADS", "many")
        rc = cli.main(["forward", "--problem", str(files["target"]),
                       "--out", "w.json"])
        assert rc == 1

    def test_exclusion_radius_must_be_inside(self, files, weyl160,
                                              tmp_path, capsys):
        rc = cli.main(["invert", "--weyl", str(weyl160),
                       "--model", str(files["model"]),
                       "--grid", "0:2.5:11", "--exclude", "1.5",
                       "--out", str(tmp_path / "q.json")])
        assert rc == 1
        assert "smaller than a" in capsys.readouterr().err


class TestForwardCommand:
    def test_trivial_m_is_i_rho(self, files, tmp_path):
        out = tmp_path / "w.json"
        rc = cli.main(["forward", "--problem", str(files["trivial"]),
                       "--out", str(out), "--nodes", "200",
                       "--s-max", "40"])
        assert rc == 0
        contour, m, emb = sio.load_weyl(out)
        exact = 1j * contour.rho
        assert np.max(np.abs(m - exact) / np.abs(exact)) <= 1e-8
        assert emb.to_dict() == json.loads(files["trivial"].read_text())

    def test_rerun_byte_identical(self, files, tmp_path):
        out1 = tmp_path / "w1.json"
        out2 = tmp_path / "w2.json"
        args = ["forward", "--problem", str(files["target"]),
                "--nodes", "64", "--s-max", "40", "--h", "1.3"]
        assert cli.main(args + ["--out", str(out1)]) == 0
        assert cli.main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_validation_failure_exits_1(self, files, tmp_path, capsys):
        rc = cli.main(["forward", "--problem", str(files["bad_a12"]),
                       "--out", str(tmp_path / "w.json")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "error [validate]" in err
        assert "a12 = 0" in err

    def test_explicit_low_h_warns(self, files, tmp_path, capsys):
        rc = cli.main(["forward", "--problem", str(files["target"]),
                       "--out", str(tmp_path / "w.json"),
                       "--nodes", "64", "--s-max", "40", "--h", "0.4"])
        assert rc == 0
        assert "H_BELOW_SPECTRUM" in capsys.readouterr().err

    def test_auto_h_clears_spectrum(self, files, tmp_path):
        out = tmp_path / "w.json"
        rc = cli.main(["forward", "--problem", str(files["target"]),
                       "--out", str(out), "--nodes", "64", "--s-max", "40"])
        assert rc == 0
        contour, _, _ = sio.load_weyl(out)
        assert contour.h > 1.2


class TestSpectrumCommand:
    def test_stdout_payload(self, files, capsys):
        rc = cli.main(["spectrum", "--problem", str(files["target"]),
                       "--kmax", "4"])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert set(data) == {"theta_plus", "theta_minus", "eigenvalues",
                             "real_zeros"}
        ks = [r["k"] for r in data["eigenvalues"]]
        assert len(ks) >= 8
        assert min(ks) < 0 < max(ks)
        assert all(r["residual"] <= 1e-8 for r in data["eigenvalues"])
        for r in data["eigenvalues"]:
            rho = complex(*r["rho"])
            assert complex(*r["lambda"]) == pytest.approx(rho * rho)

    def test_unsupported_regime_exits_3(self, files, capsys):
        rc = cli.main(["spectrum", "--problem", str(files["trivial"])])
        assert rc == 3
        assert "error [spectrum]" in capsys.readouterr().err

    def test_out_file_matches_stdout(self, files, tmp_path, capsys):
        rc = cli.main(["spectrum", "--problem", str(files["target"]),
                       "--kmax", "3"])
        assert rc == 0
        stdout_text = capsys.readouterr().out
        out = tmp_path / "s.json"
        rc = cli.main(["spectrum", "--problem", str(files["target"]),
                       "--kmax", "3", "--out", str(out)])
        assert rc == 0
        assert out.read_text() == stdout_text


class TestInvertCommand:
    def test_recovers_bump(self, files, weyl160, tmp_path):
        out = tmp_path / "q.json"
        rc = cli.main(["invert", "--weyl", str(weyl160),
                       "--model", str(files["model"]),
                       "--grid", "0:2.5:41", "--out", str(out)])
        assert rc == 0
        rec = sio.load_recovered(out)
        q_true = files["target_obj"].q.eval(rec["x"])
        rel = np.linalg.norm(rec["q_hat"] - q_true) / np.linalg.norm(q_true)
        assert rel <= 2e-2
        assert rec["mhat_decay_order"] >= 2.0
        assert rec["s_condition_min"] >= 0.5

    def test_exclusion_gap_in_grid(self, files, weyl160, tmp_path):
        out = tmp_path / "q.json"
        rc = cli.main(["invert", "--weyl", str(weyl160),
                       "--model", str(files["model"]),
                       "--grid", "0:2.5:101", "--out", str(out)])
        assert rc == 0
        rec = sio.load_recovered(out)
        assert np.min(np.abs(rec["x"] - 1.0)) >= 0.05

    def test_threads_give_identical_bytes(self, files, weyl160, tmp_path,
                                          monkeypatch):
        args = ["invert", "--weyl", str(weyl160),
                "--model", str(files["model"]), "--grid", "0:2.5:21"]
        serial = tmp_path / "serial.json"
        assert cli.main(args + ["--out", str(serial)]) == 0
        threaded = tmp_path / "threaded.json"
        monkeypatch.setenv("SLW_THREADS", "3")
        assert cli.main(args + ["--out", str(threaded)]) == 0
        assert serial.read_bytes() == threaded.read_bytes()

    def test_mismatched_model_rejected_by_decay(self, files, weyl160,
                                                tmp_path, capsys):
        rc = cli.main(["invert", "--weyl", str(weyl160),
                       "--model", str(files["model_wrong_matrix"]),
                       "--grid", "0:2.5:11",
                       "--out", str(tmp_path / "q.json")])
        assert rc == 4
        err = capsys.readouterr().err
        assert "MODEL_MISMATCH" in err
        assert "DECAY_REJECTED" in err
        assert "error [decay-check]" in err

    def test_singular_operator_exits_2(self, files, weyl160, tmp_path,
                                       capsys):
        contour, m, emb = sio.load_weyl(weyl160)
        model = sio.load_problem(files["model"])
        m_model = SolutionCache(model, contour).weyl_at_nodes()
        # huge but smoothly decaying Mhat: passes the decay gate, then
        # drives the Nystrom operator numerically singular
        mhat = 3e6 * np.exp(-np.abs(contour.s) / 3.0) \
            * np.exp(0.3j * contour.s)
        huge = tmp_path / "huge.json"
        sio.save_weyl(huge, contour, m_model + mhat, emb)
        rc = cli.main(["invert", "--weyl", str(huge),
                       "--model", str(files["model"]),
                       "--grid", "0:2.5:11",
                       "--out", str(tmp_path / "q.json")])
        assert rc == 2
        assert "error [invert]" in capsys.readouterr().err

    def test_emit_csv_writes_plots(self, files, weyl160, tmp_path):
        out = tmp_path / "q.json"
        plotdir = tmp_path / "plots"
        args = ["invert", "--weyl", str(weyl160),
                "--model", str(files["model"]), "--grid", "0:2.5:21",
                "--out", str(out), "--emit-csv", str(plotdir)]
        assert cli.main(args) == 0
        csv = plotdir / "recovered.csv"
        assert csv.exists()
        assert (plotdir / "recovered.png").stat().st_size > 0
        assert (plotdir / "mhat_decay.png").stat().st_size > 0
        header = csv.read_text().splitlines()[0]
        assert header == "x,re_q_hat,im_q_hat,re_epsilon0,im_epsilon0"
        first = csv.read_bytes()
        assert cli.main(args) == 0
        assert csv.read_bytes() == first


class TestRoundtripCommand:
    def test_trivial_identity(self, files, tmp_path):
        report_path = tmp_path / "report.json"
        out = tmp_path / "q.json"
        rc = cli.main(["roundtrip", "--problem", str(files["trivial"]),
                       "--report", str(report_path), "--out", str(out)])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["metrics"]["max_abs_error"] <= 1e-8
        assert report["metrics"]["rel_l2_error"] <= 1e-8
        assert report["metrics"]["m_reproduction_max_rel"] <= 1e-8
        assert report["metrics"]["mhat_decay_order"] is None
        assert [w["code"] for w in report["warnings"]] == \
            ["REGIME_WITHOUT_LATTICE"]
        rec = sio.load_recovered(out)
        assert np.max(np.abs(rec["q_hat"])) <= 1e-8

    def test_bump_report(self, files, tmp_path):
        report_path = tmp_path / "report.json"
        rc = cli.main(["roundtrip", "--problem", str(files["target"]),
                       "--report", str(report_path),
                       "--nodes", "160", "--s-max", "40",
                       "--grid", "0:2.5:41"])
        assert rc == 0
        report = json.loads(report_path.read_text())
        metrics = report["metrics"]
        assert metrics["rel_l2_error"] <= 2e-2
        assert metrics["m_reproduction_max_rel"] <= 1e-3
        assert metrics["mhat_decay_order"] >= 2.0
        assert metrics["s_condition_min"] >= 0.5
        assert metrics["h"] > 1.2
        assert report["warnings"] == []
        stages = [s["name"] for s in report["stages"]]
        for name in ("validate", "spectrum", "forward", "model",
                     "decay-check", "invert", "error-table", "reforward"):
            assert name in stages
        table = report["error_table"]
        n = len(table["x"])
        assert n > 0
        assert len(table["q_true"]) == len(table["q_hat"]) == n
        assert len(table["abs_error"]) == n
        assert str(report_path) in report["outputs"]

    def test_error_table_consistent_with_outputs(self, files, tmp_path):
        report_path = tmp_path / "report.json"
        out = tmp_path / "q.json"
        rc = cli.main(["roundtrip", "--problem", str(files["target"]),
                       "--report", str(report_path), "--out", str(out),
                       "--nodes", "160", "--s-max", "40",
                       "--grid", "0:2.5:21"])
        assert rc == 0
        report = json.loads(report_path.read_text())
        rec = sio.load_recovered(out)
        table = report["error_table"]
        assert np.array_equal(np.asarray(table["x"]), rec["x"])
        q_true = files["target_obj"].q.eval(rec["x"])
        expected = np.abs(rec["q_hat"] - q_true)
        assert np.allclose(table["abs_error"], expected, rtol=0, atol=1e-15)


class TestModuleInvocation:
    def test_subprocess_unsupported_regime(self, files):
        proc = subprocess.run(
            [sys.executable, "-m", "slw", "spectrum",
             "--problem", str(files["trivial"])],
            capture_output=True, text=True)
        assert proc.returncode == 3

    def test_subprocess_usage_error(self):
        proc = subprocess.run([sys.executable, "-m", "slw"],
                              capture_output=True, text=True)
        assert proc.returncode == 1
