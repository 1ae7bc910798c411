"""
Test Geometry - Modelos de borde, medida σ, distancias y muestreo
"""

import json
import math
import sys

import numpy as np
import pytest

from rectilab_errors import ArgumentError, DomainError
from rectilab_geometry import (CantorBoundary, Domain, HyperplanePatch, LipschitzGraph, PolyhedralBoundary,
                               SlitBoundary, SphereBoundary, SurfaceBall, adr_check, as_points, boundary_from_dict,
                               distance_to_boundary, sample_boundary, sigma_of_ball, unit_sphere_area)
from rectilab_log import set_verbose

set_verbose(False)


def test_plane_disk_area():
    """σ(Δ(0, 1)) en el plano es π"""
    print(" Probando área del disco en el plano...")
    E = HyperplanePatch(3)
    assert sigma_of_ball(E, SurfaceBall((0.0, 0.0, 0.0), 1.0)) == pytest.approx(math.pi, rel=1e-12)
    assert sigma_of_ball(E, SurfaceBall((0.0, 0.0, 0.0), 1e-8)) < 1e-15


def test_sphere_full_cap():
    print(" Probando casquete completo de la esfera...")
    S = SphereBoundary(3)
    assert sigma_of_ball(S, SurfaceBall((0.0, 0.0, 1.0), 2.0)) == pytest.approx(4.0 * math.pi, rel=1e-12)
    # Arquímedes: el casquete de radio cordal r mide π r²
    assert S.cap_area(0.5) == pytest.approx(math.pi * 0.25, rel=1e-9)
    assert S.cap_area(1.5) == pytest.approx(math.pi * 2.25, rel=1e-9)


def test_sigma_rejects_off_boundary_center():
    print(" Probando centro fuera del borde...")
    with pytest.raises(DomainError):
        sigma_of_ball(HyperplanePatch(3), SurfaceBall((0.0, 0.0, 0.5), 1.0))


def test_surface_ball_rejects_radius():
    with pytest.raises(ArgumentError):
        SurfaceBall((0.0, 0.0, 0.0), 0.0)


def test_distance_plane_and_sphere():
    """Proyección vertical y simetría en el origen"""
    print(" Probando distancias al borde...")
    d, x = distance_to_boundary(HyperplanePatch(3), (0.0, 0.0, 1.0))
    assert d == pytest.approx(1.0)
    assert np.allclose(x, 0.0)
    d, x = distance_to_boundary(SphereBoundary(3), (0.0, 0.0, 0.0))
    assert d == pytest.approx(1.0)
    assert np.linalg.norm(x) == pytest.approx(1.0)


def test_point_cloud_distance_within_spacing():
    print(" Probando distancia a la nube de puntos...")
    h = 0.05
    cloud = sample_boundary(HyperplanePatch(3, lo=-1.0, hi=1.0), h)
    d, _ = distance_to_boundary(cloud, (0.0, 0.0, 1.0))
    assert abs(d - 1.0) <= h


def test_as_points_rejects_wrong_dimension():
    with pytest.raises(ArgumentError):
        as_points([[1.0, 2.0]], 3)


def test_adr_plane_constant_pi():
    print(" Probando ADR del plano...")
    rng = np.random.default_rng(0)
    centers = np.hstack([rng.uniform(-5, 5, (8, 2)), np.zeros((8, 1))])
    report = adr_check(HyperplanePatch(3), centers, [0.1, 1.0, 10.0], bound=4.0)
    assert report.passed
    assert report.worst_lower == pytest.approx(math.pi, rel=1e-12)
    assert report.constant == pytest.approx(math.pi, rel=1e-12)


def test_adr_sphere_bounded():
    print(" Probando ADR de la esfera...")
    S = SphereBoundary(3)
    sample = S.sample(0.5)
    report = adr_check(S, sample.points[:12], [0.25, 0.5, 1.0, 2.0], bound=4.0)
    assert report.passed
    assert report.constant <= 4.0
    assert report.worst_upper <= math.pi * (1.0 + 1e-9)


def test_adr_rejects_radius_above_diameter():
    with pytest.raises(ArgumentError):
        adr_check(SphereBoundary(3), [[0.0, 0.0, 1.0]], [3.0])


def test_adr_reports_violations():
    report = adr_check(HyperplanePatch(3), [[0.0, 0.0, 0.0]], [1.0], bound=2.0)
    assert not report.passed
    assert report.violations[0]["ratio"] == pytest.approx(math.pi)


def test_sphere_quadrature():
    """Nube de Fibonacci con h = 0.1"""
    print(" Probando cuadratura de la esfera...")
    cloud = SphereBoundary(3).sample(0.1)
    assert len(cloud.points) == 1257
    assert cloud.total_weight == pytest.approx(4.0 * math.pi, rel=0.02)
    assert np.allclose(np.linalg.norm(cloud.points, axis=1), 1.0)


def test_patch_quadrature():
    print(" Probando cuadratura del parche unidad...")
    cloud = HyperplanePatch(3, lo=0.0, hi=1.0, infinite=False).sample(0.25)
    assert len(cloud.points) == 16
    assert np.allclose(cloud.weights, 1.0 / 16.0)
    assert cloud.total_weight == pytest.approx(1.0)


def test_ridge_quadrature():
    """Dos semiparches inclinados con pendiente 1/2 sobre [-1, 1]²"""
    print(" Probando cuadratura de la cresta Lipschitz...")
    ridge = LipschitzGraph.abs_ridge(slope=0.5, resolution=64)
    cloud = ridge.sample(0.05)
    assert cloud.total_weight == pytest.approx(2.0 * math.sqrt(5.0), rel=1e-9)


def test_sample_rejects_bad_spacing():
    with pytest.raises(ArgumentError):
        SphereBoundary(3).sample(0.0)
    with pytest.raises(ArgumentError):
        SphereBoundary(3).sample(5.0)


def test_point_cloud_coarsening():
    print(" Probando reagrupación de la nube...")
    fine = HyperplanePatch(3, lo=0.0, hi=1.0, infinite=False).sample(1.0 / 32.0)
    coarse = fine.sample(0.25)
    assert len(coarse.points) == 16
    assert coarse.total_weight == pytest.approx(fine.total_weight)


def test_domain_sides():
    print(" Probando lados del dominio...")
    ball = Domain(SphereBoundary(3), "interior")
    pts = np.array([[0.0, 0.0, 0.5], [0.0, 0.0, 2.0], [0.0, 0.0, 1.0]])
    assert ball.contains(pts).tolist() == [True, False, False]
    assert ball.opposite().contains(pts).tolist() == [False, True, False]
    with pytest.raises(ArgumentError):
        SphereBoundary(3).contains(pts, side="sideways")


def test_cantor_structure():
    print(" Probando el Cantor de cuatro esquinas...")
    for m in (1, 2, 3):
        C = CantorBoundary(m)
        assert len(C.corners) == 4 ** m
        # perímetro de 4^m cuadrados de lado 4^-m
        assert C.total_area == pytest.approx(4.0, rel=1e-12)
        assert C.dim == 2


def test_slit_measure():
    E = SlitBoundary(3)
    assert E.sigma_ball([5.0, 0.0, 0.0], 1.0) == pytest.approx(math.pi)
    assert E.sigma_ball([0.0, 0.0, 0.0], 1.0) == pytest.approx(math.pi / 2.0)
    assert E.contains([[-1.0, 0.0, 0.0]])[0]


def test_boundary_from_dict():
    print(" Probando reconstrucción de bordes...")
    for E in (HyperplanePatch(3, lo=0.0, hi=2.0, infinite=False), SphereBoundary(3, radius=2.0),
              CantorBoundary(2), LipschitzGraph.abs_ridge(resolution=32)):
        rebuilt = boundary_from_dict(E.to_dict())
        assert type(rebuilt) is type(E)
        assert rebuilt.to_dict() == E.to_dict()
    with pytest.raises(ArgumentError):
        boundary_from_dict({"variant": "torus"})


def _unit_cube_surface():
    lo, hi, axis = [], [], []
    for a in range(3):
        for side in (0.0, 1.0):
            l, h = np.zeros(3), np.ones(3)
            l[a] = h[a] = side
            lo.append(l)
            hi.append(h)
            axis.append(a)
    return PolyhedralBoundary(axis, lo, hi, name="unit-cube")


def test_polyhedral_round_trip():
    """Las celdas viajan en el registro y Ω se recupera por paridad"""
    print(" Probando reconstrucción de fronteras poliédricas...")
    E = _unit_cube_surface()
    doc = E.to_dict()
    assert len(doc["cells"]) == 6
    rebuilt = boundary_from_dict(json.loads(json.dumps(doc)))
    assert isinstance(rebuilt, PolyhedralBoundary)
    assert rebuilt.to_dict() == doc
    assert rebuilt.total_area == pytest.approx(6.0)
    pts = np.array([[0.5, 0.5, 0.5], [0.2, 0.7, 0.9], [-0.5, 0.5, 0.5], [0.5, 1.5, 0.5], [1.5, 0.3, 0.3]])
    expected = [True, True, False, False, False]
    assert rebuilt.interior(pts).tolist() == expected
    assert E.interior(pts).tolist() == expected
    with pytest.raises(ArgumentError):
        boundary_from_dict({"variant": "polyhedral", "params": {"dim": 3}})


def test_unit_sphere_area():
    assert unit_sphere_area(3) == pytest.approx(4.0 * math.pi)
    assert unit_sphere_area(2) == pytest.approx(2.0 * math.pi)


def main():
    """Ejecutar todas las pruebas de geometría"""
    print(" Ejecutando pruebas de geometría")
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
