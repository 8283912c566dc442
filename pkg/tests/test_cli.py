import io
import json
import subprocess
import sys

import numpy as np
import pytest

from gb2kit import cli, dist, fit
from gb2kit.cli import DeflatorSeries, DataError
from gb2kit.fit import FitResult
from gb2kit.ineq import IndexReport
from gb2kit.sample import Sample
from gb2kit.sde import SdeConfig


def run(argv):
    out = io.StringIO()
    code = cli.main(argv, out=out)
    return code, out.getvalue()


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# --- ingestion -----------------------------------------------------------------------

def test_ingest_simple(tmp_path):
    s = cli.ingest(write(tmp_path, "a.csv", "price\n100\n200\n300\n"))
    np.testing.assert_array_equal(s.values, [100, 200, 300])


def test_ingest_parse_error_names_row(tmp_path):
    path = write(tmp_path, "a.csv", "price\n100\nabc\n300\n")
    with pytest.raises(DataError, match="row 3"):
        cli.ingest(path)


def test_ingest_column_by_name_or_index(tmp_path):
    path = write(tmp_path, "a.csv", "id,price\n1,10.5\n2,20.5\n3,7\n")
    a = cli.ingest(path, "price")
    b = cli.ingest(path, 1)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.original(), [10.5, 20.5, 7.0])


def test_ingest_headerless_and_non_positive(tmp_path, capsys):
    path = write(tmp_path, "a.csv", "5\n0\n-2\n7\n")
    s, st = cli.read_columns(path)
    assert st.header is None and st.non_positive == 2 and st.kept == 2
    cli.ingest(path)
    assert "dropped 2 non-positive" in capsys.readouterr().err


def test_ingest_errors(tmp_path):
    with pytest.raises(DataError):
        cli.ingest(write(tmp_path, "e.csv", "price\n"))
    with pytest.raises(DataError):
        cli.ingest(write(tmp_path, "n.csv", "price\n0\n-1\n"))
    with pytest.raises(DataError):
        cli.ingest(write(tmp_path, "c.csv", "price\n1\n"), "cost")
    with pytest.raises(OSError):
        cli.ingest(str(tmp_path / "missing.csv"))


# --- deflation -------------------------------------------------------------------------

def test_deflate_identity_and_ratio():
    s = Sample.from_values([100.0, 200.0, 300.0], years=[1990, 2000, 2010])
    flat = DeflatorSeries({1990: 1.0, 2000: 1.0, 2010: 1.0}, 1990)
    np.testing.assert_allclose(cli.deflate(s, flat).original(), [100, 200, 300])
    d = DeflatorSeries({1990: 100.0, 2000: 125.0, 2010: 160.0}, 1990)
    d2 = DeflatorSeries({k: 2 * v for k, v in d.index.items()}, 1990)
    a = cli.deflate(s, d).original()
    np.testing.assert_allclose(a, [100, 160, 187.5])
    np.testing.assert_allclose(cli.deflate(s, d2).original(), a)


def test_deflate_errors():
    s = Sample.from_values([1.0, 2.0], years=[1990, 1995])
    with pytest.raises(DataError):
        cli.deflate(s, DeflatorSeries({1990: 1.0}, 1990))
    with pytest.raises(DataError):
        DeflatorSeries({1990: 1.0}, 2010)
    with pytest.raises(DataError):
        cli.deflate(Sample.from_values([1.0]), DeflatorSeries({1990: 1.0}, 1990))


def test_base_change_keeps_shape():
    x = dist.sample(dist.gb2(3.03, 1.5521, 1.8265, 57.52), 4000, seed=1).original()
    years = 1990 + np.arange(x.size) % 20
    cpi = DeflatorSeries({y: 100.0 * 1.03 ** (y - 1990) for y in range(1990, 2011)}, 1990)
    s = Sample.from_values(x, years=years)
    a = fit.mle_fit(cli.deflate(s, cpi, 1990), "GB2")
    b = fit.mle_fit(cli.deflate(s, cpi, 2010), "GB2")
    for k in ("p", "q", "alpha"):
        assert a.spec[k] == pytest.approx(b.spec[k], rel=1e-4)
    assert b.spec["beta"] / a.spec["beta"] == pytest.approx(1.03 ** 20, rel=1e-4)
    assert a.indices.gini == pytest.approx(b.indices.gini, abs=1e-6)


# --- subcommands ------------------------------------------------------------------------

def test_indices_spec():
    code, out = run(["indices", "--spec", '{"family":"BP","p":1,"q":2,"beta":1}'])
    assert code == 0
    rep = json.loads(out)
    assert rep["gini"] == pytest.approx(0.6667, abs=1e-4)
    assert rep["hoover"] == pytest.approx(0.5, abs=1e-12)
    assert rep["theil_t"] == pytest.approx(1.0) and rep["theil_l"] == pytest.approx(1.0)
    assert rep["dmms"] == pytest.approx(0.4801, abs=1e-4)
    assert IndexReport.from_dict(rep).to_dict() == rep


def test_indices_csv(tmp_path):
    code, out = run(["indices", write(tmp_path, "a.csv", "v\n1\n3\n")])
    assert code == 0
    assert json.loads(out)["gini"] == pytest.approx(0.25)


def test_dmms_command():
    code, out = run(["dmms", "--spec", '{"family":"BP","p":1,"q":2,"beta":1}'])
    rep = json.loads(out)
    assert code == 0
    assert rep["dmms"] == pytest.approx(3 - 2 ** (4 / 3), abs=1e-8)
    assert rep["mpdf"] == pytest.approx(2.0) and rep["half_width"] == pytest.approx(2 ** (1 / 3) - 1)


def test_fit_constant_values_is_data_error(tmp_path):
    code, _ = run(["fit", write(tmp_path, "c.csv", "price\n" + "5\n" * 100)])
    assert code == 2


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--config", "{}"])
    assert exc.value.code == 1
    code, _ = run(["indices"])
    assert code == 1


def test_bad_spec_is_data_error():
    assert run(["indices", "--spec", '{"family":"BP","p":1}'])[0] == 2
    assert run(["indices", "--spec", "{not json"])[0] == 2


def test_fit_json_and_csv(tmp_path):
    x = dist.sample(dist.ln(2.0, 0.5), 500, seed=1).original()
    path = write(tmp_path, "d.csv", "value\n" + "\n".join(f"{v:.10g}" for v in x) + "\n")
    series = str(tmp_path / "s.json")
    code, out = run(["fit", path, "--families", "LN", "Ga", "--json", "--series", series])
    assert code == 0
    rows = [FitResult.from_dict(r) for r in json.loads(out)]
    assert rows[0].family == "Data" and rows[1].family == "LN"
    assert [r.to_dict() for r in rows] == json.loads(out)
    assert set(json.loads(open(series).read())) == {"x", "data", "LN", "Ga"}
    code, out = run(["fit", path, "--families", "LN", "--csv", "--tail-cut", "0.01"])
    assert code == 0 and out.splitlines()[0].startswith("type,parameters,KS")


def test_tailfit(tmp_path):
    n = 5000
    u = (np.arange(1, n + 1) - 0.5) / n
    x = (1 - u) ** (-1 / 2.5)
    path = write(tmp_path, "p.csv", "\n".join(f"{v:.12g}" for v in x) + "\n")
    code, out = run(["tailfit", path, "--fraction", "0.2", "--json"])
    assert code == 0
    assert json.loads(out)["slope"] == pytest.approx(-2.5, abs=0.02)
    code, out = run(["tailfit", path])
    assert code == 0 and out.startswith("slope -2.5")


def test_simulate_then_fit(tmp_path):
    cfg = SdeConfig.from_dict({"gamma_rate": 1.0, "theta": 1.0, "kappa2": (2 / 3) ** 0.5,
                               "kappa1": (2 / 3) ** 0.5, "n_paths": 256, "dt": 2e-3})
    out_csv = str(tmp_path / "sim.csv")
    code, out = run(["simulate", "--config", json.dumps(cfg.to_dict()), "--seed", "5",
                     "-n", "10000", "-o", out_csv])
    assert code == 0
    echo = json.loads(out)
    assert echo["steady_state"] == {"family": "BP", "p": 3.0, "q": 4.0, "beta": 1.0}
    assert SdeConfig.from_dict(echo["config"]) == cfg
    code, out = run(["fit", out_csv, "--families", "BP", "--json"])
    assert code == 0
    spec = FitResult.from_dict(json.loads(out)[1]).spec
    assert spec["p"] == pytest.approx(3.0, rel=0.25)
    assert spec["q"] == pytest.approx(4.0, rel=0.25)
    # same seed, same file
    code, _ = run(["simulate", "--config", json.dumps(cfg.to_dict()), "--seed", "5",
                   "-n", "10000", "-o", str(tmp_path / "sim2.csv")])
    assert open(out_csv).read() == open(tmp_path / "sim2.csv").read()


def test_numerical_failure_exit_code(tmp_path):
    cfg = {"gamma_rate": 1.0, "theta": 0.5, "kappa2": 1.5, "kappa_alpha": 1.0,
           "dt": 1.5, "burn_in": 10, "thin": 1, "n_paths": 64}
    code, _ = run(["simulate", "--config", json.dumps(cfg), "--seed", "1", "-n", "640",
                   "-o", str(tmp_path / "x.csv")])
    assert code == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gb2kit", "dmms", "--spec",
                           '{"family":"LN","mu":0,"sigma":0.62}'], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["dmms"] == pytest.approx(0.1551, abs=2e-3)
