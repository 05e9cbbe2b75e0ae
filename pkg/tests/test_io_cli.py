import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entmax.cli import main
from entmax.errors import StateFileError
from entmax.io import StateFile, dumps_state, format_float, loads_state
from entmax.report import clean, dumps, to_csv
from entmax.states import ginibre_mixed, mes


def _write(tmp_path, name, state, meta=None):
    p = tmp_path / name
    p.write_text(dumps_state(StateFile.from_state(state, meta)))
    return str(p)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_format_float():
    assert format_float(-0.0) == "0"
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1 / 3)) == 1 / 3
    with pytest.raises(StateFileError):
        format_float(float("nan"))


@given(st.integers(0, 2**32 - 1))
def test_state_file_round_trip(seed):
    rho = ginibre_mixed((2, 3), np.random.default_rng(seed))
    text = dumps_state(StateFile.from_state(rho, {"seed": seed, "name": "x"}))
    sf = loads_state(text)
    assert dumps_state(sf) == text
    np.testing.assert_array_equal(sf.matrix, rho.matrix)


@pytest.mark.parametrize("bad", [
    "not json",
    '{"schema": 2, "dims": [1, 1], "matrix": [[[1, 0]]]}',
    '{"schema": 1, "dims": [2, 2], "matrix": [[[1, 0]]]}',
    '{"schema": 1, "dims": [1, 1], "matrix": [[[1]]]}',
    '{"schema": 1, "dims": [1, 1], "matrix": [[["a", 0]]]}',
    '{"schema": 1, "dims": [1, 1], "matrix": [[[1, 0]]], "extra": 1}',
])
def test_state_file_rejects(bad):
    with pytest.raises(StateFileError):
        loads_state(bad)


def test_subnormalized_flag():
    sf = loads_state('{"schema": 1, "dims": [1, 2], "matrix": [[[0.25, 0], [0, 0]], [[0, 0], [0.25, 0]]]}')
    with pytest.raises(StateFileError):
        sf.to_state()
    assert sf.to_state(subnormalized=True).trace == pytest.approx(0.5)


def test_report_cleaning():
    data = clean({"a": -0.0, "b": float("inf"), "c": np.array([1j]), "d": np.float64(2.5), "e": None})
    assert data == {"a": 0.0, "b": "inf", "c": [[0.0, 1.0]], "d": 2.5, "e": None}
    assert json.loads(dumps({"x": float("-inf")})) == {"x": "-inf"}


def test_gen_determinism_and_mes_round_trip(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "ginibre", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "ginibre", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    m3 = tmp_path / "m3.json"
    assert main(["gen", "mes", "--M", "3", "--out", str(m3)]) == 0
    code, out, _ = _run(["measure", str(m3), "--measures", "emax"], capsys)
    assert code == 0
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(np.log2(3), abs=1e-6)


def test_gen_isotropic_zero(tmp_path):
    p = tmp_path / "iso.json"
    assert main(["gen", "isotropic", "--q", "0", "--out", str(p)]) == 0
    np.testing.assert_allclose(loads_state(p.read_text()).matrix, np.eye(4) / 4)


def test_measure_mes(tmp_path, capsys):
    path = _write(tmp_path, "phi.json", mes(2))
    code, out, _ = _run(["measure", "--in", path, "--measures", "emax,er,ln"], capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["name"] for r in rows] == ["emax", "er", "ln"]
    for r in rows:
        assert r["value"] == pytest.approx(1.0, abs=1e-6)
        assert r["wallTimeMs"] is None


def test_measure_separable_zeros(tmp_path, capsys):
    from entmax.states import product_mixture

    path = _write(tmp_path, "sep.json", product_mixture((2, 2), 3, np.random.default_rng(0)))
    code, out, _ = _run(["measure", path, "--measures", "emax,rg,lrg,emin,ln,er"], capsys)
    assert code == 0
    assert all(r["value"] == pytest.approx(0.0, abs=1e-12) for r in json.loads(out)["rows"])


def test_measure_batch_deterministic(tmp_path, capsys):
    paths = [_write(tmp_path, f"s{i}.json", ginibre_mixed((2, 2), np.random.default_rng(i), rank=1 + i % 4))
             for i in range(20)]
    code1, out1, _ = _run(["measure", *paths, "--measures", "emax,ln"], capsys)
    code2, out2, _ = _run(["measure", *paths, "--measures", "emax,ln", "--jobs", "3"], capsys)
    assert code1 == code2 == 0
    assert out1 == out2
    assert len(json.loads(out1)["rows"]) == 40


def test_csv_is_derived_from_json(tmp_path, capsys):
    path = _write(tmp_path, "phi.json", mes(2))
    _, js, _ = _run(["measure", path, "--measures", "emax,ln"], capsys)
    _, csv_text, _ = _run(["measure", path, "--measures", "emax,ln", "--csv"], capsys)
    assert csv_text == to_csv(json.loads(js))
    header = csv_text.splitlines()[0].split(",")
    assert {"state", "name", "value", "maxResidual"} <= set(header)
    assert len(csv_text.splitlines()) == 3


def test_smooth_command(tmp_path, capsys):
    path = _write(tmp_path, "phi.json", mes(2))
    code, out, _ = _run(["smooth", path, "--epsilon", "0,0.01,0.05,0.1"], capsys)
    assert code == 0
    rep = json.loads(out)
    vals = [r["exact"] for r in rep["rows"]]
    assert vals[0] == pytest.approx(1.0, abs=1e-6)
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    assert all(r["constructive"] >= r["exact"] - 1e-7 for r in rep["rows"])
    assert rep["checks"][0]["monotone"]


def test_regularize_command(tmp_path, capsys):
    path = _write(tmp_path, "phi.json", mes(2))
    code, out, _ = _run(["regularize", path, "--epsilon", "0.01", "--copies", "2"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert [r["copies"] for r in rep["rows"]] == [1, 2]
    assert all(abs(r["value"] - 1) < 0.02 for r in rep["rows"])
    assert rep["probes"][0]["subadditivity"]["pass"]


def test_dilution_command(tmp_path, capsys):
    from entmax.states import isotropic

    paths = [_write(tmp_path, "phi.json", mes(2)), _write(tmp_path, "iso.json", isotropic(0.9)),
             _write(tmp_path, "sep.json", isotropic(0.2))]
    code, out, _ = _run(["dilution", *paths, "--samples", "20", "--seed", "3"], capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows[0]["M"] == 2 and rows[0]["checks"]["perfectOutput"] <= 1e-12
    assert rows[1]["audit"]["pass"]
    assert rows[2]["vacuous"] and rows[2]["audit"]["skipped"]


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": 1}')
    assert _run(["measure", str(bad)], capsys)[0] == 3
    assert _run(["measure", str(tmp_path / "missing.json")], capsys)[0] == 3
    assert _run(["measure"], capsys)[0] == 3
    path = _write(tmp_path, "phi.json", mes(2))
    assert _run(["measure", path, "--measures", "ef"], capsys)[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["measure", "--nope"])
    assert exc.value.code == 3


def test_solver_failure_exit_code(tmp_path, capsys, monkeypatch):
    from entmax import measures
    from entmax.errors import SolverError

    def boom(*a, **k):
        raise SolverError("forced")

    monkeypatch.setitem(measures.MEASURES, "emax", boom)
    path = _write(tmp_path, "phi.json", mes(2))
    code, _, err = _run(["measure", path, "--measures", "emax"], capsys)
    assert code == 4 and "forced" in err


def test_residual_failure_exit_code(tmp_path, capsys, monkeypatch):
    from entmax import measures
    from entmax.measures import MeasureResult

    monkeypatch.setitem(measures.MEASURES, "ln",
                        lambda *a, **k: MeasureResult("ln", 1.0, "closed_form", residuals={"gap": 1e-3}))
    path = _write(tmp_path, "phi.json", mes(2))
    assert _run(["measure", path, "--measures", "ln"], capsys)[0] == 2


def test_tampered_tolerance_fails_selftest(tmp_path):
    env = {"ENTMAX_TOL": "1", "PATH": ""}
    proc = subprocess.run([sys.executable, "-m", "entmax", "selftest", "--quick"], capture_output=True,
                          text=True, env=env, timeout=600)
    assert proc.returncode == 2
    rep = json.loads(proc.stdout)
    assert not rep["pass"]
    assert not next(s for s in rep["suites"] if s["id"] == "mes_values")["pass"]
