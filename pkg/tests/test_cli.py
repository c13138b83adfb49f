import csv
import io
import json
import math
from pathlib import Path

import pytest

from pencil_spectra.cli import (
    EXIT_INPUT,
    EXIT_OK,
    EXIT_SOFT,
    EXIT_UNSUPPORTED,
    ComparisonRow,
    fmt,
    gap_slack,
    is_decreasing,
    main,
    relative_diff,
)

from .oracles import FREE_FREE_ROOTS

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue()


def table(text):
    """Split CSV output into '# key=value' summary lines and data rows."""
    summary, body = {}, []
    for line in text.splitlines():
        if line.startswith("# ") and "=" in line and not line.startswith("# fit"):
            key, _, value = line[2:].partition("=")
            summary[key] = value
        elif not line.startswith("#"):
            body.append(line)
    return summary, list(csv.DictReader(body))


def write(tmp_path, payload, name="p.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return path


def test_fmt_has_fifteen_significant_digits():
    assert fmt(math.pi) == "3.14159265358979e+00"
    assert fmt(-1e-20) == "-1.00000000000000e-20"
    assert len(fmt(123.0).split("e")[0].replace(".", "")) == 15


# --- classify --------------------------------------------------------------


def test_classify_missile():
    code, text = run("classify", PROBLEMS / "missile.json")
    assert code == EXIT_OK
    assert "right_class: FlexibleMissile" in text
    assert "left_case: 6" in text
    assert "regular: yes" in text


def test_classify_case_a1_case5_json():
    code, text = run("classify", PROBLEMS / "caseA1-case5.json", "--json")
    data = json.loads(text)
    assert code == EXIT_OK and data["regular"]
    assert {"C(1,0)", "C(4,1)"} <= set(data["conditions"]["left"]) | set(data["conditions"]["right"])


def test_classify_nonregular_is_soft_failure():
    code, text = run("classify", PROBLEMS / "nonregular.json")
    assert code == EXIT_SOFT
    assert "regular: no" in text


# --- input errors ----------------------------------------------------------


def test_missing_file(tmp_path):
    assert run("classify", tmp_path / "absent.json")[0] == EXIT_INPUT


def test_malformed_json(tmp_path):
    assert run("classify", write(tmp_path, "{not json"))[0] == EXIT_INPUT


def test_bad_expression(tmp_path, capsys):
    data = json.loads((PROBLEMS / "missile.json").read_text())
    data["g"] = "1 + * x"
    assert run("classify", write(tmp_path, data))[0] == EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_schema_violation(tmp_path):
    data = json.loads((PROBLEMS / "missile.json").read_text())
    data["bcs"] = data["bcs"][:3]
    assert run("solve", write(tmp_path, data))[0] == EXIT_INPUT


def test_singular_coefficient(tmp_path):
    data = json.loads((PROBLEMS / "missile.json").read_text())
    data["g"] = "1/(x - 0.5)"
    assert run("solve", write(tmp_path, data), "--kmax", 4)[0] == EXIT_INPUT


def test_bad_flag_value():
    assert run("asym", PROBLEMS / "missile.json", "--kmax", 0)[0] == EXIT_INPUT


# --- asym ------------------------------------------------------------------


def test_asym_missile_row_k4():
    code, text = run("asym", PROBLEMS / "missile.json", "--kmax", 8)
    assert code == EXIT_OK
    rows = {int(r["k"]): r for r in table(text)[1]}
    assert float(rows[4]["re_mu_hat"]) == pytest.approx(4.712389, abs=1e-6)
    assert float(rows[4]["im_mu_hat"]) == 0
    re = [float(rows[k]["re_mu_hat"]) for k in sorted(rows)]
    assert all(b > a for a, b in zip(re, re[1:]))


def test_asym_header_echoes_tau2():
    text = run("asym", PROBLEMS / "caseA1-case2.json")[1]
    line = next(l for l in text.splitlines() if l.startswith("# tau2"))
    _, re, im = line[2:].split(",")
    assert float(re) == pytest.approx(-1 / math.pi**2, rel=1e-14)
    assert float(im) == pytest.approx(1 / math.pi, rel=1e-14)


def test_asym_unsupported():
    assert run("asym", PROBLEMS / "nonregular.json")[0] == EXIT_UNSUPPORTED


def test_asym_json_flags_anomaly():
    data = json.loads(run("asym", PROBLEMS / "caseA2-case6.json", "--json", "--kmax", 3)[1])
    assert data["anomalies"] and len(data["rows"]) == 3


# --- solve / compare -------------------------------------------------------


def test_solve_missile_rows_match_oracle():
    code, text = run("solve", PROBLEMS / "missile.json", "--kmax", 7)
    assert code == EXIT_OK
    summary, rows = table(text)
    assert summary["complete"] == "True"
    mus = {int(r["k"]): float(r["re_mu"]) for r in rows if r["k"]}
    assert [mus[k] for k in range(4, 8)] == pytest.approx(FREE_FREE_ROOTS, abs=1e-9)
    assert all(abs(float(r["im_lambda"])) < 1e-7 * (1 + abs(float(r["re_lambda"]))) for r in rows)


@pytest.mark.parametrize("name, parity", [("caseA1-case5.json", "even"), ("caseA2-case2.json", "odd")])
def test_solve_parity_field(name, parity):
    code, text = run("solve", PROBLEMS / name, "--kmax", 5, "--json")
    assert code == EXIT_OK
    assert json.loads(text)["axis_parity"] == parity


def test_solve_output_independent_of_threads(monkeypatch):
    one = run("solve", PROBLEMS / "caseA1-case2.json", "--kmax", 8, "--threads", 1)
    monkeypatch.setenv("PENCIL_SPECTRA_THREADS", "3")
    two = run("solve", PROBLEMS / "caseA1-case2.json", "--kmax", 8)
    assert one == two


def test_compare_reports_trend_and_fit():
    code, text = run("compare", PROBLEMS / "caseA2-case6.json", "--kmax", 12, "--fit")
    assert code == EXIT_OK
    summary, rows = table(text)
    assert summary["trend_top_half"] in {"decreasing", "not decreasing"}
    ks = [int(r["k"]) for r in rows]
    assert ks == list(range(ks[0], 13)) and ks[0] <= 2
    fit_lines = [l for l in text.splitlines() if l.startswith("# fit")]
    assert [l.split(":")[0] for l in fit_lines] == ["# fit tau0", "# fit tau1", "# fit tau2"]


def test_compare_json_fit_payload():
    code, text = run("compare", PROBLEMS / "caseA1-case5.json", "--kmax", 10, "--fit", "--json")
    data = json.loads(text)
    assert code == EXIT_OK
    assert set(data["fit"]["terms"]) == {"tau0", "tau1", "tau2"}
    assert data["fit"]["terms"]["tau1"]["relative_difference"] < 0.10
    assert all(r["scaled_gap"] >= 0 for r in data["rows"])


def test_compare_unsupported():
    assert run("compare", PROBLEMS / "nonregular.json", "--kmax", 3)[0] == EXIT_UNSUPPORTED


# --- helpers ---------------------------------------------------------------


def _rows(gaps, start=1):
    return [ComparisonRow(start + i, 0j, 0j, 0j, 0.0, g) for i, g in enumerate(gaps)]


def test_is_decreasing():
    assert is_decreasing(_rows([3, 2, 1]), 1, 3)
    assert not is_decreasing(_rows([3, 2, 2.5]), 1, 3)
    # ties within the roundoff slack are accepted
    assert is_decreasing(_rows([1.0, 1.0 + gap_slack(2) / 2]), 1, 2)
    # a missing index is not a verdict
    assert not is_decreasing(_rows([3, 1], start=1)[:1] + _rows([1], start=3), 1, 3)


def test_relative_diff():
    assert relative_diff(1.1, 1.0) == pytest.approx(0.1)
    assert relative_diff(0, 0) == 0
    assert relative_diff(1, 0) == math.inf
