import io
import json
import subprocess
import sys

import pytest

from subhyp import catalog
from subhyp.cli import EXIT_DOMAIN, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_geodesic_convex_alpha_one(tmp_path):
    svg = tmp_path / "g.svg"
    code, out, _ = run("geodesic", "--domain", "catalog:square", "--alpha", "1",
                       "--from", "0.2,0.2", "--to", "0.7,0.2", "--svg", str(svg))
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["result"]["value"] == pytest.approx(0.5, rel=0.02)
    assert rep["status"] == "ok" and rep["exit_code"] == 0
    assert rep["domain"]["checksum"] == catalog.checksum(catalog.get("square"))
    assert rep["statement"] and rep["seed"] == rep["config"]["seed"]
    assert "resolution" in rep
    assert svg.read_text().startswith("<svg")


def test_reports_byte_identical(tmp_path):
    argv = ["selfimprove", "--domain", "catalog:square", "--alpha", "0.5",
            "--from", "0.2,0.05", "--to", "0.7,0.05"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(*argv, "--out", str(a))[0] == EXIT_OK
    assert run(*argv, "--out", str(b))[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["result"]["exponents"]["m"] >= 3
    assert rep["result"]["verification"]["oscillation"]["holds"]


def test_certify_exit_and_csv(tmp_path):
    csv = tmp_path / "scales.csv"
    code, out, _ = run("certify", "--domain", "catalog:square", "--alpha", "1", "--budget", "8",
                       "--csv", str(csv))
    assert code == EXIT_OK
    assert json.loads(out)["result"]["verdict"] == "subhyperbolic"
    lines = csv.read_text().splitlines()
    assert lines[0] == "scale,max_ratio" and len(lines) == 5


def test_workers_do_not_change_output():
    argv = ["certify", "--domain", "catalog:square", "--alpha", "0.5", "--budget", "8"]
    one = run(*argv, "--workers", "1")[1]
    two = run(*argv, "--workers", "2")[1]
    assert one == two


def test_classify_disk():
    code, out, _ = run("classify", "--domain", "catalog:disk", "--p", "3")
    assert code == EXIT_OK
    assert json.loads(out)["result"]["verdict"] == "extension domain"


def test_bad_exponent_is_usage_error():
    code, out, err = run("classify", "--domain", "catalog:disk", "--p", "2")
    assert code == EXIT_USAGE
    assert json.loads(out)["error"] == "BadExponent"
    code, _, _ = run("certify", "--domain", "catalog:square", "--alpha", "1.5")
    assert code == EXIT_USAGE


def test_argument_errors():
    assert run("geodesic", "--domain", "catalog:square")[0] == EXIT_USAGE
    assert run("nonsense")[0] == EXIT_USAGE
    assert run()[0] == EXIT_USAGE
    assert run("geodesic", "--domain", "catalog:square", "--alpha", "1", "--from", "0.2",
               "--to", "0.3,0.3")[0] == EXIT_USAGE


def test_domain_errors(tmp_path):
    code, out, _ = run("geodesic", "--domain", "catalog:nowhere", "--alpha", "1",
                       "--from", "0.2,0.2", "--to", "0.3,0.3")
    assert code == EXIT_DOMAIN
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "bow", "outer": [[0,0],[1,1],[1,0],[0,1]], "holes": []}')
    assert run("geodesic", "--domain", str(bad), "--alpha", "1", "--from", "0.2,0.2",
               "--to", "0.3,0.3")[0] == EXIT_DOMAIN
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run("geodesic", "--domain", str(broken), "--alpha", "1", "--from", "0.2,0.2",
               "--to", "0.3,0.3")[0] == EXIT_DOMAIN


def test_numeric_failure_reports_error_name():
    code, out, _ = run("geodesic", "--domain", "catalog:annulus", "--alpha", "0.5",
                       "--from", "0,0", "--to", "0.7,0")
    assert code == EXIT_NUMERIC
    assert json.loads(out)["error"] == "PointOutsideDomain"
    code, out, _ = run("selfimprove", "--domain", "catalog:square", "--alpha", "0.5",
                       "--from", "0.5,0.5", "--to", "0.55,0.5")
    assert code == EXIT_NUMERIC
    assert json.loads(out)["error"] == "PreconditionNotMet"


def test_catalog_emit_round_trip(tmp_path):
    code, out, _ = run("catalog", "list")
    names = [d["name"] for d in json.loads(out)["domains"]]
    assert names == list(catalog.BASE_NAMES)
    path = tmp_path / "annulus.json"
    assert run("catalog", "emit", "annulus", "--out", str(path))[0] == EXIT_OK
    code, out, _ = run("geodesic", "--domain", str(path), "--alpha", "1",
                       "--from", "0.7,0", "--to", "0.8,0")
    assert code == EXIT_OK
    assert json.loads(out)["domain"]["checksum"] == catalog.checksum(catalog.get("annulus"))


def test_chain_and_sharpmax(tmp_path):
    code, out, _ = run("chain", "--domain", "catalog:square", "--alpha", "0.5",
                       "--from", "0.1,0.1", "--to", "0.9,0.2", "--svg", str(tmp_path / "c.svg"))
    assert code == EXIT_OK
    assert json.loads(out)["result"]["verification"]["holds"]
    csv = tmp_path / "f.csv"
    code, out, _ = run("sharpmax", "--domain", "catalog:square", "--function", "x^2 + y",
                       "--k", "2", "--q", "3", "--h", "0.0625", "--radii", "dyadic:1:3", "--csv", str(csv))
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["resolution"]["radii_cells"] == [2, 4, 8]
    assert csv.read_text().splitlines()[0] == "x,y,f,sharp,argmax_radius,hl"
    code, out, _ = run("sharpmax", "--domain", "catalog:square", "--function", "exp(x)",
                       "--k", "1", "--q", "3")
    assert code == EXIT_USAGE
    assert json.loads(out)["error"] == "FunctionSpecError"


def test_extend_check_exit_codes():
    ok = run("extend-check", "--domain", "catalog:square", "--function", "1 + x", "--k", "2",
             "--q", "3", "--h", "0.0625")
    assert ok[0] == EXIT_OK
    assert json.loads(ok[1])["result"]["verdict"] == "extendable at grid scale"


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "subhyp.cli", "catalog", "list"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "catalog"


def test_negative_coordinates_accepted():
    code, out, _ = run("geodesic", "--domain", "catalog:disk", "--alpha", "1",
                       "--from", "-0.5,0", "--to", "0.25,-0.25")
    assert code == EXIT_OK
    assert json.loads(out)["result"]["value"] > 0
