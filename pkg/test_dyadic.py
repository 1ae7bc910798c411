"""
Test Dyadic - Rejillas de cubos diádicos, familias y frontera delgada
"""

import math
import sys

import numpy as np
import pytest

from rectilab_dyadic import (CubeFamily, FlatDyadicGrid, build_grid, cube_ball, descendants,
                             discretized_carleson, discretized_sawtooth, fit_thin_exponent,
                             thin_boundary_check, verify_grid)
from rectilab_errors import ArgumentError
from rectilab_geometry import HyperplanePatch, SphereBoundary
from rectilab_log import set_verbose

set_verbose(False)

UNIT_PATCH = HyperplanePatch(3, lo=0.0, hi=1.0, infinite=False)


def test_flat_levels_are_dyadic_squares():
    print(" Probando cuadrados diádicos del parche...")
    grid = FlatDyadicGrid(UNIT_PATCH, 0, 4)
    for k in range(5):
        keys = grid.level_keys(k)
        assert len(keys) == 4 ** k
        assert sum(grid.cube(key).sigma for key in keys) == pytest.approx(1.0)
    cube = grid.cube((2, 1, 3))
    assert np.allclose(cube.lo, [0.25, 0.75, 0.0])
    assert np.allclose(cube.hi, [0.5, 1.0, 0.0])
    assert grid.parent((2, 1, 3)) == (1, 0, 1)
    assert grid.locate([0.3, 0.8, 0.0], 2) == (2, 1, 3)


def test_flat_grid_rejects_foreign_level():
    grid = FlatDyadicGrid(UNIT_PATCH, 1, 3)
    with pytest.raises(ArgumentError):
        grid.cube((0, 0, 0))
    with pytest.raises(ArgumentError):
        FlatDyadicGrid(UNIT_PATCH, 3, 1)


def test_flat_grid_properties():
    print(" Probando propiedades (i)-(v) en el parche plano...")
    counts = verify_grid(FlatDyadicGrid(UNIT_PATCH, 0, 5), sigma_total=1.0)
    assert counts["cubes"] == sum(4 ** k for k in range(6))
    assert all(counts[name] == 0 for name in ("partition", "ownership", "nesting", "diameter", "inner_ball"))


def test_sphere_grid_properties():
    print(" Probando propiedades (i)-(v) en la esfera...")
    S = SphereBoundary(3)
    grid = build_grid(S, 0, 3, spacing=0.05)
    assert grid.method == "net"
    counts = verify_grid(grid, sigma_total=grid.cloud.total_weight)
    assert counts["cubes"] <= 10 ** 4
    assert all(counts[name] == 0 for name in ("partition", "ownership", "nesting", "diameter", "inner_ball"))
    assert grid.a0 > 0.0
    assert math.isfinite(grid.C1)
    assert grid.cloud.total_weight == pytest.approx(S.total_area)


def test_grid_checks_use_a_priori_constants():
    """Las cotas de diámetro y bola interior no salen de los propios cubos"""
    print(" Probando cotas a priori de la rejilla...")
    grid = FlatDyadicGrid(UNIT_PATCH, 0, 3)
    assert verify_grid(grid)["diameter"] == 0
    assert verify_grid(grid, C1=1.0)["diameter"] > 0
    assert verify_grid(grid, a0=0.6)["inner_ball"] > 0
    sphere = build_grid(SphereBoundary(3), 0, 3, spacing=0.05)
    bound = sphere.diameter_bound(3)
    assert 2.0 < bound <= 2.0 + 8.0 * sphere.cloud.spacing + 1e-12


def test_cloud_grid_ownership_detects_overlap():
    print(" Probando que cada punto de la nube tiene un único cubo por nivel...")
    grid = build_grid(SphereBoundary(3), 0, 2, spacing=0.1)
    assert verify_grid(grid)["ownership"] == 0
    first, second = grid._members[2][0], grid._members[2][1]
    grid._members[2][0] = np.concatenate([first, second[:1]])
    assert verify_grid(grid)["ownership"] == 1


def test_sphere_descendants_are_nested():
    """Todo cubo de 𝔻_Q tiene generación ≥ k(Q) y ancestro Q"""
    grid = build_grid(SphereBoundary(3), 0, 3, spacing=0.05)
    root = grid.level_keys(1)[0]
    tree = discretized_carleson(grid, root)
    assert tree[0] == root
    for key in tree:
        assert key[0] >= root[0]
        assert grid.is_ancestor(root, key)


def test_cloud_grid_matches_flat_grid():
    """Nube del parche a espaciado 2^-6 frente a los cuadrados analíticos"""
    print(" Probando rejilla sobre nube frente a la analítica...")
    cloud = UNIT_PATCH.sample(2.0 ** -6)
    grid = build_grid(cloud, 0, 4)
    assert grid.method == "ambient"
    flat = FlatDyadicGrid(UNIT_PATCH, 0, 4)
    for k in range(5):
        keys = grid.level_keys(k)
        assert len(keys) == 4 ** k
        for key in keys:
            idx = flat.locate_index(cloud.points[grid.members(key)], k)
            assert np.all(idx == idx[0])
            assert grid.cube(key).sigma == pytest.approx(flat.side(k) ** 2)


def test_descendants_count():
    print(" Probando número de descendientes...")
    grid = FlatDyadicGrid(HyperplanePatch(3), k_min=0)
    assert len(descendants(grid, (0, 0, 0), 2)) == 1 + 4 + 16
    leaf = FlatDyadicGrid(UNIT_PATCH, 0, 2)
    assert descendants(leaf, (2, 0, 0)) == [(2, 0, 0)]
    with pytest.raises(ArgumentError):
        descendants(grid, (0, 0, 0))


def test_cube_family_rules():
    print(" Probando familias de cubos...")
    grid = FlatDyadicGrid(UNIT_PATCH, 0, 3)
    root = (0, 0, 0)
    assert len(discretized_sawtooth(grid, CubeFamily(grid, []), root)) == 1 + 4 + 16 + 64
    assert discretized_sawtooth(grid, CubeFamily(grid, [root]), root) == []
    with pytest.raises(ArgumentError):
        CubeFamily(grid, [(1, 0, 0), (2, 1, 1)])


def test_generation_family():
    """F = 𝔻_N deja los cubos con ℓ(Q) ≥ 2^{-N+1}"""
    grid = FlatDyadicGrid(UNIT_PATCH, 0, 4)
    kept = discretized_sawtooth(grid, CubeFamily.generation(grid, 2), (0, 0, 0))
    assert sorted({key[0] for key in kept}) == [0, 1]
    assert len(kept) == 5


def test_cube_ball_flat():
    print(" Probando bolas de cubo...")
    grid = FlatDyadicGrid(UNIT_PATCH, 0, 3)
    balls = cube_ball(grid, (1, 1, 0))
    assert balls.inner_radius == pytest.approx(0.25)
    assert balls.containment_constant == pytest.approx(math.sqrt(2.0))
    assert np.allclose(balls.surface_ball.center, [0.75, 0.25, 0.0])


def test_thin_boundary_flat():
    print(" Probando frontera delgada...")
    grid = FlatDyadicGrid(HyperplanePatch(3), k_min=0)
    key = (3, 2, 5)
    assert thin_boundary_check(grid, key, 0.1) == pytest.approx(0.36)
    for tau in (0.05, 0.1, 0.2):
        assert thin_boundary_check(grid, key, tau) <= 4.0 * tau
    assert thin_boundary_check(grid, key, 1e-9) < 1e-8
    with pytest.raises(ArgumentError):
        thin_boundary_check(grid, key, 0.6)


def test_thin_boundary_rim_sides():
    """El lado pegado al borde del parche no cuenta como banda"""
    grid = FlatDyadicGrid(UNIT_PATCH, 0, 3)
    corner = thin_boundary_check(grid, (1, 0, 0), 0.1)
    assert corner == pytest.approx(1.0 - 0.9 * 0.9)


def test_thin_exponent_fit():
    grid = FlatDyadicGrid(HyperplanePatch(3), k_min=0)
    C, eta = fit_thin_exponent(grid, [(2, 0, 0), (2, 1, 1)], [0.05, 0.1, 0.2])
    # 1 - (1 - 2τ)² = 4τ - 4τ² tiene pendiente log-log ≈ 0.88 en [0.05, 0.2]
    assert 0.8 < eta < 1.0
    assert C < 4.0


def test_sphere_thin_boundary():
    grid = build_grid(SphereBoundary(3), 0, 3, spacing=0.05)
    key = grid.level_keys(2)[0]
    assert thin_boundary_check(grid, key, 0.05) <= 4.0 * 0.05 + 0.1


def main():
    """Ejecutar todas las pruebas de la rejilla diádica"""
    print(" Ejecutando pruebas de la rejilla diádica")
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
