"""Canonical JSON layer: float formatting, schemas, file round-trips.

The frozen formatting strings were derived from the exact binary
expansion of each double (via decimal.Decimal) rounded to 17
significant digits, independently of the serializer, so a formatting
regression cannot hide behind its own output.  17 significant digits
round-trip every finite double exactly.
"""

import json
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import bump_potential, supported_matrix
from slw import io as sio
from slw.contour import build_contour
from slw.errors import BadTruncation, NearIntegerNu, ProblemValidationError
from slw.problem import Potential, SingularProblem, TransitionMatrix

FROZEN_17G = {
    0.1: "0.10000000000000001",
    1.0: "1",
    0.125: "0.125",
    3.141592653589793: "3.1415926535897931",
    1e-9: "1.0000000000000001e-09",
    6.02214076e23: "6.0221407599999999e+23",
}


class TestCanonicalSerializer:
    def test_frozen_float_strings(self):
        for value, expected in FROZEN_17G.items():
            assert sio.canonical_json(value) == expected + "\n"

    def test_float_roundtrip_random_doubles(self):
        rng = np.random.default_rng(1137)
        bits = rng.integers(0, 2**64, size=20000, dtype=np.uint64)
        vals = bits.view(np.float64)
        vals = vals[np.isfinite(vals)]
        for v in vals:
            assert float(sio.canonical_json(float(v))) == v

    def test_scalars(self):
        assert sio.canonical_json(None) == "null\n"
        assert sio.canonical_json(True) == "true\n"
        assert sio.canonical_json(False) == "false\n"
        assert sio.canonical_json(17) == "17\n"
        assert sio.canonical_json("a\"b") == '"a\\"b"\n'

    def test_nonfinite_to_null(self):
        assert sio.canonical_json(float("inf")) == "null\n"
        assert sio.canonical_json(float("-inf")) == "null\n"
        assert sio.canonical_json(float("nan")) == "null\n"

    def test_containers_and_numpy(self):
        obj = {"a": [1, 2.5], "b": np.array([0.125, 0.25]),
               "c": (np.int64(3), np.float64(0.1))}
        assert sio.canonical_json(obj) == \
            '{"a": [1, 2.5], "b": [0.125, 0.25], ' \
            '"c": [3, 0.10000000000000001]}\n'

    def test_key_order_preserved(self):
        assert sio.canonical_json({"z": 1, "a": 2}) == '{"z": 1, "a": 2}\n'

    def test_unserializable_type(self):
        with pytest.raises(TypeError):
            sio.canonical_json(object())

    def test_pair(self):
        assert sio.pair(2 - 3j) == [2.0, -3.0]
        assert sio.pair(1.5) == [1.5, 0.0]

    def test_output_parses_as_json(self):
        obj = {"m": [[1.0, -2.0]], "tag": "x", "n": None, "ok": True}
        assert json.loads(sio.canonical_json(obj)) == obj


@pytest.fixture()
def problem():
    return SingularProblem(a=1.0, nu=1.0 / 3.0, A=supported_matrix(),
                           T=2.5, q=bump_potential())


class TestProblemFiles:
    def test_roundtrip_is_exact_and_stable(self, problem, tmp_path):
        path = tmp_path / "p.json"
        sio.dump_json(problem.to_dict(), path)
        loaded = sio.load_problem(path)
        assert loaded.to_dict() == problem.to_dict()
        text = path.read_bytes()
        sio.dump_json(loaded.to_dict(), path)
        assert path.read_bytes() == text

    def test_grid_potential_roundtrip(self, tmp_path):
        q = Potential.grid([1.2, 1.5, 1.9], [0.0, 0.5 - 0.25j, 0.0])
        p = SingularProblem(a=1.0, nu=0.3, A=supported_matrix(), T=2.0, q=q)
        path = tmp_path / "p.json"
        sio.dump_json(p.to_dict(), path)
        assert sio.load_problem(path).to_dict() == p.to_dict()

    def test_not_json(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text("{broken")
        with pytest.raises(ProblemValidationError, match="not valid JSON"):
            sio.load_problem(path)

    def test_missing_field_pointer(self, problem):
        data = problem.to_dict()
        del data["T"]
        with pytest.raises(ProblemValidationError,
                           match="'T' is a required property"):
            sio.problem_from_data(data)

    def test_bad_nu_shape_pointer(self, problem):
        data = problem.to_dict()
        data["nu"] = [0.3, 0.0, 1.0]
        with pytest.raises(ProblemValidationError, match=r"/nu:"):
            sio.problem_from_data(data)

    def test_bad_matrix_count_pointer(self, problem):
        data = problem.to_dict()
        data["A"] = data["A"][:3]
        with pytest.raises(ProblemValidationError, match=r"/A:"):
            sio.problem_from_data(data)

    def test_nonpositive_a_pointer(self, problem):
        data = problem.to_dict()
        data["a"] = -1.0
        with pytest.raises(ProblemValidationError, match=r"/a:"):
            sio.problem_from_data(data)

    def test_unknown_potential_type(self, problem):
        data = problem.to_dict()
        data["q"] = {"type": "sinusoid"}
        with pytest.raises(ProblemValidationError, match=r"/q:"):
            sio.problem_from_data(data)

    def test_grid_length_mismatch_pointers(self, problem):
        data = problem.to_dict()
        data["q"] = {"type": "grid", "x": [1.2, 1.5, 1.9],
                     "re": [0.0, 1.0], "im": [0.0, 0.0, 0.0]}
        with pytest.raises(ProblemValidationError,
                           match=r"/q/re: length 2 does not match"):
            sio.problem_from_data(data)

    def test_a12_nonzero_cites_regime(self, problem):
        data = problem.to_dict()
        data["A"][1] = [0.4, 0.0]
        with pytest.raises(ProblemValidationError,
                           match="a12 = 0 in the implemented regime"):
            sio.problem_from_data(data)

    def test_integer_nu_rejected(self, problem):
        data = problem.to_dict()
        data["nu"] = [2.0, 0.0]
        with pytest.raises(NearIntegerNu):
            sio.problem_from_data(data)

    def test_all_errors_itemized_together(self, problem):
        data = problem.to_dict()
        data["a"] = -1.0
        data["nu"] = [0.3, 0.0, 1.0]
        try:
            sio.problem_from_data(data)
        except ProblemValidationError as exc:
            message = str(exc)
        assert "/a:" in message and "/nu:" in message


@pytest.fixture()
def weyl_file(problem, tmp_path):
    contour = build_contour(1.3, 40.0, 64)
    m = np.exp(1j * contour.rho) / (1.0 + contour.s ** 2)
    path = tmp_path / "w.json"
    sio.save_weyl(path, contour, m, problem)
    return path, contour, m


class TestWeylFiles:
    def test_roundtrip_bit_exact(self, weyl_file, problem):
        path, contour, m = weyl_file
        c2, m2, emb = sio.load_weyl(path)
        assert len(c2) == len(contour)
        assert np.array_equal(c2.lam, contour.lam)
        assert np.array_equal(c2.weights, contour.weights)
        assert np.array_equal(m2, m)
        assert emb.to_dict() == problem.to_dict()

    def test_rerun_byte_identical(self, weyl_file):
        path, _, _ = weyl_file
        text = path.read_bytes()
        c2, m2, emb = sio.load_weyl(path)
        sio.save_weyl(path, c2, m2, emb)
        assert path.read_bytes() == text

    def test_model_may_be_null(self, tmp_path):
        contour = build_contour(1.0, 40.0, 32)
        path = tmp_path / "w.json"
        sio.save_weyl(path, contour, np.zeros(32, dtype=complex), None)
        _, _, emb = sio.load_weyl(path)
        assert emb is None

    def test_rejects_tampered_nodes(self, weyl_file):
        path, _, _ = weyl_file
        data = json.loads(path.read_text())
        data["nodes_lambda"][3][0] += 1e-3
        path.write_text(json.dumps(data))
        with pytest.raises(ProblemValidationError, match=r"/nodes_lambda"):
            sio.load_weyl(path)

    def test_rejects_m_length_mismatch(self, weyl_file):
        path, _, _ = weyl_file
        data = json.loads(path.read_text())
        data["M"] = data["M"][:-1]
        path.write_text(json.dumps(data))
        with pytest.raises(ProblemValidationError, match=r"/M: length"):
            sio.load_weyl(path)

    def test_rejects_odd_node_count(self, weyl_file):
        path, _, _ = weyl_file
        data = json.loads(path.read_text())
        data["contour"]["N"] = 63
        path.write_text(json.dumps(data))
        with pytest.raises(ProblemValidationError, match=r"/contour"):
            sio.load_weyl(path)

    def test_short_truncation_surfaces(self, weyl_file):
        path, _, _ = weyl_file
        data = json.loads(path.read_text())
        data["contour"]["s_max"] = 2.0
        path.write_text(json.dumps(data))
        with pytest.raises(BadTruncation):
            sio.load_weyl(path)

    def test_embedded_model_validated(self, weyl_file):
        path, _, _ = weyl_file
        data = json.loads(path.read_text())
        data["model"]["A"][1] = [0.4, 0.0]
        path.write_text(json.dumps(data))
        with pytest.raises(ProblemValidationError,
                           match="a12 = 0 in the implemented regime"):
            sio.load_weyl(path)


class TestRecoveredFiles:
    def _record(self):
        return SimpleNamespace(
            x=np.array([0.5, 1.5, 2.0]),
            q_hat=np.array([1.0 + 0.5j, -2.0j, 0.25 + 0j]),
            epsilon0=np.array([0.1j, 0.2 + 0j, 0.0j]),
            route_discrepancy=np.array([np.nan, 1e-9, 2e-8]),
            s_condition_min=0.75,
        )

    def test_nan_and_inf_serialize_as_null(self, tmp_path):
        path = tmp_path / "q.json"
        sio.save_recovered(path, self._record(), np.inf)
        data = json.loads(path.read_text())
        assert data["route_discrepancy"][0] is None
        assert data["mhat_decay_order"] is None

    def test_roundtrip_restores_nonfinite(self, tmp_path):
        path = tmp_path / "q.json"
        rec = self._record()
        sio.save_recovered(path, rec, np.inf)
        back = sio.load_recovered(path)
        assert np.isnan(back["route_discrepancy"][0])
        assert back["route_discrepancy"][1] == pytest.approx(1e-9)
        assert back["mhat_decay_order"] == np.inf
        assert np.array_equal(back["q_hat"], rec.q_hat)
        assert np.array_equal(back["x"], rec.x)
        assert back["s_condition_min"] == rec.s_condition_min

    def test_finite_decay_order_kept(self, tmp_path):
        path = tmp_path / "q.json"
        sio.save_recovered(path, self._record(), 2.25)
        assert sio.load_recovered(path)["mhat_decay_order"] == 2.25


class TestCsv:
    def test_golden_rows(self, tmp_path):
        path = tmp_path / "out.csv"
        sio.write_csv(path,
                      x=np.array([0.0, 0.1]),
                      q_hat=np.array([1.0 + 0.125j, -2.0 + 0j]),
                      epsilon0=np.array([0.0j, 0.5 - 0.1j]))
        assert path.read_text() == (
            "x,re_q_hat,im_q_hat,re_epsilon0,im_epsilon0\n"
            "0,1,0.125,0,0\n"
            "0.10000000000000001,-2,0,0.5,-0.10000000000000001\n"
        )
