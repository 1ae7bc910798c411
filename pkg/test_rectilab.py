"""
Test Rectilab - Escenarios, config.ini, ejecución ordenada, emisión y línea de comandos
"""

import json
import os
import sys
import tempfile

import pytest

import rectilab
from rectilab_config import (DEFAULTS, KNOWN_CHECKS, Scenario, apply_overrides, builtin_scenario, ini_text,
                             load_defaults, load_ini, resolve_workers)
from rectilab_errors import ArgumentError, ConfigurationError
from rectilab_geometry import SphereBoundary
from rectilab_log import set_verbose
from rectilab_runner import CSV_COLUMNS, REGISTRY, Check, check_seed, emit, plain, plan, run

set_verbose(False)

MISSING_INI = os.path.join(tempfile.gettempdir(), "rectilab-sin-config.ini")


def _scenario(**doc):
    base = {"schema_version": 1, "name": "prueba"}
    base.update(doc)
    return Scenario.from_dict(base)


def test_scenario_json_round_trip():
    print(" Probando ida y vuelta del escenario...")
    sc = builtin_scenario("sphere-geometry", MISSING_INI)
    again = Scenario.from_dict(json.loads(sc.to_json()))
    assert again == sc
    assert again.grid["k_max"] == 3
    assert isinstance(again.boundary_model(), SphereBoundary)


def test_unknown_key_names_path():
    print(" Probando clave desconocida...")
    with pytest.raises(ConfigurationError) as info:
        _scenario(geometry={"bogus": 1.0})
    assert info.value.path == "geometry.bogus"
    assert "geometry.bogus" in str(info.value)


def test_schema_version_rejected():
    with pytest.raises(ConfigurationError) as info:
        Scenario.from_dict({"schema_version": 2})
    assert info.value.path == "schema_version"


def test_exponent_range():
    print(" Probando 1 < p < ∞...")
    with pytest.raises(ConfigurationError) as info:
        _scenario(functionals={"p": 1.0})
    assert info.value.path == "functionals.p"
    with pytest.raises(ConfigurationError):
        _scenario(functionals={"q": float("inf")})
    assert _scenario(functionals={"p": 3}).functionals["p"] == 3


def test_unknown_check_in_scenario():
    with pytest.raises(ConfigurationError) as info:
        _scenario(checks=["adr", "nope"])
    assert info.value.path == "checks[1]"


def test_boundary_replaced_whole():
    sc = _scenario(boundary={"variant": "sphere", "params": {"dim": 3}})
    assert sc.boundary == {"variant": "sphere", "params": {"dim": 3}, "samples": []}
    assert sc.grid == DEFAULTS["grid"]


def test_workers_precedence():
    print(" Probando precedencia de trabajadores...")
    env = {"RECTILAB_WORKERS": "3"}
    assert resolve_workers(2, 1, env) == 2
    assert resolve_workers(None, 1, env) == 3
    assert resolve_workers(None, 4, {}) == 4
    with pytest.raises(ConfigurationError):
        resolve_workers(None, 1, {"RECTILAB_WORKERS": "0"})
    with pytest.raises(ConfigurationError):
        resolve_workers(None, 1, {"RECTILAB_WORKERS": "muchos"})


def test_overrides():
    sc = apply_overrides(_scenario(), seed=7, reference=True, output="salida", env={})
    assert sc.seed == 7
    assert sc.whitney["reference"] is True
    assert sc.output == "salida"
    assert sc.workers == 1


def test_ini_round_trip():
    print(" Probando config.ini...")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "config.ini")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(ini_text())
        assert load_defaults(path) == DEFAULTS
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("[Walks]\nwalks = 500\nbogus = 1\n")
        with pytest.raises(ConfigurationError) as info:
            load_ini(path)
    assert "config.ini:[Walks].bogus" in str(info.value)
    assert load_ini(MISSING_INI) == {}


def test_ini_values_reach_scenario():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "config.ini")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("[Walks]\nwalks = 500\n\n[Run]\nseed = 11\n")
        sc = builtin_scenario("empty", path)
    assert sc.walks["walks"] == 500
    assert sc.walks["eps_shell"] == DEFAULTS["walks"]["eps_shell"]
    assert sc.seed == 11


def test_registry_covers_known_checks():
    assert set(REGISTRY) == set(KNOWN_CHECKS)


def test_plan_order():
    print(" Probando orden de dependencia...")
    order = plan(["nt-green", "adr", "wos-halfspace-disk", "carleson-plane", "adr"])
    assert order == ["adr", "carleson-plane", "wos-halfspace-disk", "nt-green"]
    with pytest.raises(ArgumentError):
        plan(["bogus"])


def test_check_seed_stable():
    assert check_seed(0, "adr") == check_seed(0, "adr")
    assert check_seed(0, "adr") != check_seed(0, "dyadic-grid")
    assert check_seed(0, "adr") != check_seed(1, "adr")


def test_empty_builtin():
    report = run(builtin_scenario("empty", MISSING_INI))
    assert report.passed
    assert report.reports == []
    assert report.failures == []


def test_workers_do_not_change_results():
    print(" Probando independencia del número de trabajadores...")
    sc = _scenario(checks=["thin-boundary", "dyadic-plane"])
    one = run(sc)
    two = run(sc.replace(workers=2))
    assert one.passed and two.passed
    assert [r.check_id for r in one.reports] == ["dyadic-plane", "thin-boundary"]
    assert json.dumps(plain([r.to_dict() for r in one.reports]), sort_keys=True) == \
        json.dumps(plain([r.to_dict() for r in two.reports]), sort_keys=True)


def test_failure_record():
    print(" Probando registro de fallos...")
    sc = _scenario(boundary={"variant": "nope"}, checks=["adr", "dyadic-plane"])
    report = run(sc)
    assert not report.passed
    assert report.statuses() == {"adr": "error", "dyadic-plane": "pass"}
    failure = report.failures[0]
    assert failure["error"] == "ConfigurationError"
    assert failure["replay"]["check"] == "adr"
    assert failure["seed"] == check_seed(0, "adr")


def test_empty_lists_rejected():
    print(" Probando listas vacías de generaciones...")
    for key in ("generations", "approximants", "cantor_depths"):
        with pytest.raises(ConfigurationError) as info:
            _scenario(functionals={key: []})
        assert info.value.path == f"functionals.{key}"


def test_unexpected_error_isolated():
    print(" Probando aislamiento de errores no tipados...")
    original = REGISTRY["dyadic-plane"]

    def broken(sc, seed):
        return [][0]

    REGISTRY["dyadic-plane"] = Check("dyadic-plane", original.stage, original.summary, broken)
    try:
        report = run(_scenario(checks=["dyadic-plane", "thin-boundary"]))
    finally:
        REGISTRY["dyadic-plane"] = original
    assert not report.passed
    assert report.statuses() == {"dyadic-plane": "error", "thin-boundary": "pass"}
    failure = report.failures[0]
    assert failure["error"] == "IndexError"
    assert failure["replay"]["check"] == "dyadic-plane"


def test_emit_byte_identical():
    print(" Probando emisión reproducible...")
    sc = _scenario(name="emision", checks=["dyadic-plane"])
    contents = []
    with tempfile.TemporaryDirectory() as tmp:
        for sub in ("a", "b"):
            out = os.path.join(tmp, sub)
            emit(run(sc), out)
            files = {}
            for name in ("emision.csv", "emision.json"):
                with open(os.path.join(out, name), "rb") as fh:
                    files[name] = fh.read()
            assert os.path.exists(os.path.join(out, "emision.timings.json"))
            contents.append(files)
        with pytest.raises(ArgumentError):
            emit(run(sc), os.path.join(tmp, "c"), formats=("xml",))
    assert contents[0] == contents[1]
    header = contents[0]["emision.csv"].decode("utf-8").splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    doc = json.loads(contents[0]["emision.json"])
    assert doc["statuses"] == {"dyadic-plane": "pass"}
    assert "timings" not in doc


def test_boundary_names():
    assert rectilab.boundary_doc("cantor-3") == {"variant": "four-corner-cantor", "params": {"depth": 3}}
    assert rectilab.boundary_doc("sphere")["variant"] == "sphere"
    with pytest.raises(ArgumentError):
        rectilab.boundary_doc("cantor-x")
    with pytest.raises(ArgumentError):
        rectilab.boundary_doc("no-existe.json")


def test_cli_listings():
    print(" Probando línea de comandos...")
    assert rectilab.main(["--quiet", "list-builtins"]) == 0
    assert rectilab.main(["--quiet", "list-checks"]) == 0


def test_cli_large_constants_flag():
    print(" Probando bandera de constantes grandes...")
    parser = rectilab.build_parser()
    assert parser.parse_args(["run", "empty", "--paper-constants"]).reference_constants is True
    assert parser.parse_args(["run", "empty", "--reference-constants"]).reference_constants is True
    assert parser.parse_args(["run", "empty"]).reference_constants is False
    with tempfile.TemporaryDirectory() as tmp:
        code = rectilab.main(["--quiet", "--ini", MISSING_INI, "run", "empty", "--paper-constants", "--out", tmp])
        with open(os.path.join(tmp, "empty.json"), "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    assert code == 0
    assert doc["scenario"]["whitney"]["reference"] is True


def test_cli_run_empty():
    with tempfile.TemporaryDirectory() as tmp:
        code = rectilab.main(["--quiet", "--ini", MISSING_INI, "run", "empty", "--out", tmp])
        with open(os.path.join(tmp, "empty.csv"), "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    assert code == 0
    assert lines == [",".join(CSV_COLUMNS)]


def test_cli_bad_scenario_exit_code():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "malo.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"schema_version": 1, "whitney": {"ratio": "alto"}}, fh)
        assert rectilab.main(["--quiet", "--ini", MISSING_INI, "run", path, "--out", tmp]) == 1


def test_cli_grid_stats():
    with tempfile.TemporaryDirectory() as tmp:
        code = rectilab.main(["--quiet", "--ini", MISSING_INI, "grid", "stats", "--boundary", "unit-patch",
                              "--out", tmp])
        with open(os.path.join(tmp, "grid_stats.json"), "r", encoding="utf-8") as fh:
            counts = json.load(fh)
    assert code == 0
    assert counts["partition"] == 0 and counts["nesting"] == 0
    assert counts["cubes"] == sum(4 ** k for k in range(5))


def test_cli_approx_ply():
    with tempfile.TemporaryDirectory() as tmp:
        code = rectilab.main(["--quiet", "--ini", MISSING_INI, "approx", "--N", "4", "--out", tmp])
        with open(os.path.join(tmp, "approx_4.json"), "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        assert os.path.exists(os.path.join(tmp, "approx_4.ply"))
    assert code == 0
    assert doc["faces"] > 0
    assert doc["scale"] == 1.0 / 16.0


def main():
    """Ejecutar todas las pruebas de la línea de comandos"""
    print(" Ejecutando pruebas de Rectilab")
    print("=" * 50)
    tests = [obj for name, obj in sorted(globals().items()) if name.startswith("test_") and callable(obj)]
    passed = 0
    for test in tests:
        try:
            test()
            passed += 1
        except Exception as exc:
            print(f"    Error en {test.__name__}: {exc}")
    print("=" * 50)
    print(f" Resultados: {passed}/{len(tests)} pruebas pasaron")
    return passed == len(tests)


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
