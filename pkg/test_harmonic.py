"""
Test Harmonic - Medida armónica por caminatas, núcleo de Poisson, Green y diagnósticos
"""

import math
import sys

import numpy as np
import pytest

from rectilab_connectivity import harnack_chain
from rectilab_errors import ArgumentError, DomainError, PreconditionError
from rectilab_geometry import Domain, HyperplanePatch, SphereBoundary, SurfaceBall
from rectilab_harmonic import (WalkConfig, bourgain_check, cfms_check, corkscrew_pole, doubling_check,
                               exit_points, green_function, green_lower_bound_check, green_symmetry,
                               harnack_measure_check, pole_change_check, poisson_density, stderr_scaling,
                               wos_harmonic_measure, wos_partition)
from rectilab_log import set_verbose

set_verbose(False)

HALFSPACE = Domain(HyperplanePatch(3), "interior")
BALL = Domain(SphereBoundary(3), "interior")
UNIT_DISK = SurfaceBall((0.0, 0.0, 0.0), 1.0)
FAR = (0.0, 0.0, 8.0)


def _halfspace_disk(t, r):
    """ω^{(0,0,t)}(Δ(0, r)) del semiespacio de R³"""
    return 1.0 - t / math.sqrt(t * t + r * r)


def test_walk_config_validation():
    print(" Probando la configuración de caminatas...")
    with pytest.raises(ArgumentError):
        WalkConfig(walks=1)
    with pytest.raises(ArgumentError):
        WalkConfig(eps_shell=0.0)
    with pytest.raises(ArgumentError):
        WalkConfig(attribution="uniform")
    cfg = WalkConfig().replace(walks=100, seed=7)
    assert cfg.walks == 100 and cfg.seed == 7
    assert cfg.to_dict()["eps_shell"] == 1e-3


def test_exit_points_reject_outside():
    with pytest.raises(DomainError):
        exit_points(HALFSPACE, (0.0, 0.0, -1.0), WalkConfig(walks=10))
    with pytest.raises(DomainError):
        exit_points(HALFSPACE, (0.0, 0.0, 1e-5), WalkConfig(walks=10, scale=1.0))


def test_halfspace_disk_exact_sampler():
    """ω^{(0,0,1)}(Δ(0,1)) = 1 - 1/√2 con 10⁵ caminatas"""
    print(" Probando medida armónica del disco unidad...")
    est = wos_harmonic_measure(HALFSPACE, (0.0, 0.0, 1.0), UNIT_DISK, WalkConfig(walks=100_000))
    assert est.stderr <= 5e-3
    assert abs(est.mean - (1.0 - 1.0 / math.sqrt(2.0))) <= 4.0 * est.stderr
    assert est.escaped == 0.0
    assert est.walks == 100_000


def test_halfspace_disk_by_walks():
    print(" Probando medida armónica con caminatas sobre esferas...")
    cfg = WalkConfig(walks=20_000, exact=False)
    est = wos_harmonic_measure(HALFSPACE, (0.0, 0.0, 1.0), UNIT_DISK, cfg)
    assert abs(est.mean - _halfspace_disk(1.0, 1.0)) <= 4.0 * est.stderr + 0.01
    lo, hi = est.interval()
    assert lo < est.mean < hi


def test_ball_center_is_uniform():
    """Desde el centro el casquete de radio cordal 1 tiene medida 1/4"""
    print(" Probando medida armónica de la bola...")
    est = wos_harmonic_measure(BALL, (0.0, 0.0, 0.0), SurfaceBall((0.0, 0.0, 1.0), 1.0))
    assert abs(est.mean - 0.25) <= 4.0 * est.stderr


def test_ball_walks_match_exact_sampler():
    X = (0.0, 0.0, 0.5)
    cap = SurfaceBall((0.0, 0.0, 1.0), 1.0)
    exact = wos_harmonic_measure(BALL, X, cap, WalkConfig(walks=20_000))
    walked = wos_harmonic_measure(BALL, X, cap, WalkConfig(walks=20_000, exact=False, seed=3))
    spread = math.hypot(exact.stderr, walked.stderr)
    assert abs(exact.mean - walked.mean) <= 4.0 * spread + 0.01


def test_partition_sums_to_one():
    print(" Probando una partición de la esfera...")
    cells = [lambda Z: Z[:, 2] > 0.0, lambda Z: Z[:, 2] <= 0.0]
    part = wos_partition(BALL, (0.1, 0.0, 0.2), cells, WalkConfig(walks=5000))
    assert part["total"] == pytest.approx(1.0)
    assert sum(part["masses"]) + part["outside"] + part["escaped"] == pytest.approx(1.0)
    assert part["masses"][0] > part["masses"][1]


def test_poisson_kernel_halfspace():
    """k(0) = 1/(2π) y k((2,0,0)) = 1/(2π·5^{3/2}) desde (0,0,1)"""
    print(" Probando el núcleo de Poisson del semiespacio...")
    cfg = WalkConfig(walks=400_000)
    at_zero = poisson_density(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 0.0), 0.2, cfg)
    assert abs(at_zero.value - 1.0 / (2.0 * math.pi)) <= 4.0 * at_zero.stderr + 0.005
    assert not at_zero.low_confidence
    away = poisson_density(HALFSPACE, (0.0, 0.0, 1.0), (2.0, 0.0, 0.0), 0.2, cfg)
    expected = 1.0 / (2.0 * math.pi * 5.0 ** 1.5)
    assert abs(away.value - expected) <= 4.0 * away.stderr + 0.001


def test_poisson_kernel_ball_center():
    print(" Probando el núcleo de Poisson en el centro de la bola...")
    est = poisson_density(BALL, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.2, WalkConfig(walks=400_000))
    assert abs(est.value - 1.0 / (4.0 * math.pi)) <= 4.0 * est.stderr + 0.002


def test_poisson_rejects_bad_arguments():
    with pytest.raises(DomainError):
        poisson_density(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 0.5), 0.2)
    with pytest.raises(ArgumentError):
        poisson_density(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 0.0), 1e-3)


def test_green_halfspace():
    """G((0,0,1), (0,0,2)) = (1 - 1/3)/(4π) = 1/(6π)"""
    print(" Probando la función de Green del semiespacio...")
    G = green_function(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 2.0))
    assert abs(G.value - 1.0 / (6.0 * math.pi)) <= 4.0 * G.stderr + 1e-3
    assert G.singular == pytest.approx(1.0 / (4.0 * math.pi))
    assert G.escaped == 0.0
    with pytest.raises(ArgumentError):
        green_function(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 1.0))


def test_green_symmetry():
    print(" Probando simetría de Green...")
    report = green_symmetry(HALFSPACE, (0.0, 0.0, 1.0), (1.0, 0.5, 2.0))
    assert abs(report["difference"]) <= 5.0 * report["stderr"] + 1e-3
    assert report["G_xy"] > 0.0


def test_green_lower_bound():
    report = green_lower_bound_check(HALFSPACE, (0.0, 0.0, 1.0), WalkConfig(walks=4000))
    assert len(report["rows"]) == 4
    assert report["passed"]


def test_corkscrew_pole_on_normal():
    assert np.allclose(corkscrew_pole(HALFSPACE, UNIT_DISK), [0.0, 0.0, 0.5])
    assert np.allclose(corkscrew_pole(BALL, SurfaceBall((0.0, 0.0, 1.0), 0.5)), [0.0, 0.0, 0.75])


def test_bourgain_halfspace():
    """Desde B(0, r/10) el disco Δ(0, r) se ve con medida cercana a 1"""
    print(" Probando la estimación de Bourgain...")
    report = bourgain_check(HALFSPACE, (0.0, 0.0, 0.0), 1.0, WalkConfig(walks=5000), c=0.1)
    assert len(report["rows"]) == 8
    assert report["min"] >= 0.85
    assert report["C"] <= 1.0 / 0.85
    assert abs(report["corkscrew"] - _halfspace_disk(0.5, 1.0)) <= 4.0 * report["corkscrew_stderr"] + 0.01
    with pytest.raises(PreconditionError):
        bourgain_check(BALL, (0.0, 0.0, 1.0), 2.5)


def test_cfms_halfspace():
    """ω^X(Δ) ≈ r^{n-1} G(X_Δ, X) con X = (0,0,8)"""
    print(" Probando la comparación CFMS...")
    report = cfms_check(HALFSPACE, UNIT_DISK, FAR, WalkConfig(walks=40_000))
    exact_green = (1.0 / 7.5 - 1.0 / 8.5) / (4.0 * math.pi)
    assert abs(report["green"] - exact_green) <= 4.0 * report["green_stderr"] + 1e-4
    assert 0.1 <= report["ratio"] <= 10.0
    with pytest.raises(PreconditionError):
        cfms_check(HALFSPACE, UNIT_DISK, (0.0, 0.0, 2.0))


def test_doubling_halfspace():
    print(" Probando la duplicación...")
    report = doubling_check(HALFSPACE, UNIT_DISK, FAR, WalkConfig(walks=400_000))
    expected = _halfspace_disk(8.0, 2.0) / _halfspace_disk(8.0, 1.0)
    assert expected < 4.0
    assert abs(report["ratio"] - expected) <= 4.0 * report["stderr"] + 0.01
    assert report["escaped"] == 0.0


def test_pole_change_halfspace():
    print(" Probando el cambio de polo...")
    inner = SurfaceBall((0.5, 0.0, 0.0), 0.25)
    report = pole_change_check(HALFSPACE, inner, UNIT_DISK, FAR, WalkConfig(walks=400_000))
    assert 1.0 / 3.0 <= report["factor"] <= 3.0
    assert np.allclose(report["pole"], [0.0, 0.0, 0.5])
    with pytest.raises(PreconditionError):
        pole_change_check(HALFSPACE, SurfaceBall((0.9, 0.0, 0.0), 0.25), UNIT_DISK, FAR)
    with pytest.raises(PreconditionError):
        pole_change_check(HALFSPACE, inner, UNIT_DISK, (0.0, 0.0, 3.0))


def test_harnack_along_chain():
    chain = harnack_chain(HALFSPACE, (0.0, 0.0, 1.0), (3.0, 0.0, 1.0), 1.0, 3.0)
    report = harnack_measure_check(HALFSPACE, chain, UNIT_DISK, WalkConfig(walks=5000))
    assert report["passed"]
    assert report["ratio"] > 1.0


def test_stderr_scaling():
    """4× caminatas reducen el error estándar a la mitad"""
    print(" Probando escalado del error estándar...")
    report = stderr_scaling(HALFSPACE, (0.0, 0.0, 1.0), UNIT_DISK, WalkConfig(walks=20_000))
    assert report["expected"] == pytest.approx(2.0)
    assert report["relative_error"] <= 0.1


def test_threaded_walks_are_reproducible():
    print(" Probando reproducibilidad con varios hilos...")
    cfg = WalkConfig(walks=20_000, chunk=2048, exact=False, seed=11)
    serial = wos_harmonic_measure(BALL, (0.0, 0.0, 0.3), SurfaceBall((0.0, 0.0, 1.0), 1.0), cfg)
    threaded = wos_harmonic_measure(BALL, (0.0, 0.0, 0.3), SurfaceBall((0.0, 0.0, 1.0), 1.0),
                                    cfg.replace(workers=4))
    assert serial.mean == threaded.mean
    assert serial.stderr == threaded.stderr


def main():
    """Ejecutar todas las pruebas de medida armónica"""
    print(" Ejecutando pruebas de medida armónica")
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
