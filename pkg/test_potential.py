"""
Test Potential - Capa simple, funcional de Carleson UR, SIO truncadas y maximal no tangencial
"""

import functools
import math
import sys

import numpy as np
import pytest

from rectilab_errors import ArgumentError, ProximityError
from rectilab_geometry import HyperplanePatch, SphereBoundary, SurfaceBall
from rectilab_log import set_verbose
from rectilab_potential import (CZKernel, FundamentalSolution, cantor_contrast, carleson_ur_functional,
                                default_tau, global_l2_check, hessian_checks, kernel_size_constants,
                                nontangential_region, nt_max, nt_max_extension, single_layer, sio_sup_check,
                                smooth_bump, smoothstep, truncated_sio)

set_verbose(False)

PLANE = HyperplanePatch(3)
UNIT_PATCH = HyperplanePatch(3, lo=0.0, hi=1.0, infinite=False)
SPHERE = SphereBoundary(3)


def test_fundamental_solution_flux():
    """Δℰ = -δ₀: el flujo por una esfera es -1"""
    print(" Probando flujo de la solución fundamental...")
    for dim in (2, 3):
        assert FundamentalSolution(dim).flux_check(radius=0.7) == pytest.approx(-1.0, rel=1e-9)
    assert FundamentalSolution(3).c_n == pytest.approx(1.0 / (4.0 * math.pi))
    with pytest.raises(ArgumentError):
        FundamentalSolution(1)


def test_shell_theorem_closed_form():
    """𝒮1 = 1/|X| fuera de la esfera unidad y 1 dentro"""
    print(" Probando el teorema de la capa...")
    X = [[0.0, 0.0, 2.0], [0.0, 0.0, 0.0], [1.5, -1.5, 0.0]]
    res = single_layer(SPHERE, 1.0, X)
    assert res.method == "analytic"
    assert res.value == pytest.approx([0.5, 1.0, 1.0 / (1.5 * math.sqrt(2.0))], rel=1e-12)
    grad = single_layer(SPHERE, 1.0, [[0.0, 0.0, 0.3]], order=1).value
    assert np.allclose(grad, 0.0)


def test_shell_theorem_by_quadrature():
    """Unos 10⁴ puntos de Fibonacci dan el teorema con error relativo ≤ 1e-2"""
    print(" Probando el teorema de la capa por cuadratura...")
    res = single_layer(SPHERE, 1.0, [[0.0, 0.0, 2.0], [0.0, 0.0, 0.0]], h=0.035, method="points")
    assert res.sources > 10_000
    assert res.value[0] == pytest.approx(0.5, rel=1e-2)
    assert res.value[1] == pytest.approx(1.0, rel=1e-2)


def test_panels_match_points():
    """Paneles exactos frente a la regla del punto medio sobre [0,1]²"""
    print(" Probando paneles exactos...")
    X = [[0.5, 0.5, 0.5], [1.5, 0.2, -0.4]]
    for order in (0, 1):
        exact = single_layer(UNIT_PATCH, 1.0, X, order=order)
        assert exact.method == "panels"
        approx = single_layer(UNIT_PATCH, 1.0, X, order=order, h=1.0 / 64.0, method="points")
        assert np.allclose(exact.value, approx.value, rtol=1e-3, atol=1e-6)


def test_plane_single_layer_is_flat():
    """∂_t𝒮1 ≈ -1/2 y ∇²𝒮1 ≈ 0 sobre un parche muy ancho"""
    print(" Probando 𝒮1 del plano...")
    X = [[0.0, 0.0, 1.0], [3.0, -2.0, 0.5]]
    grad = single_layer(PLANE, 1.0, X, order=1, window=1000.0).value
    assert grad[:, 2] == pytest.approx([-0.5, -0.5], abs=1e-3)
    assert np.allclose(grad[:, :2], 0.0, atol=2e-3)
    H = single_layer(PLANE, 1.0, X, order=2, window=1000.0).value
    assert np.max(np.abs(H)) <= 1e-3
    assert np.abs(np.trace(H, axis1=1, axis2=2)).max() <= 1e-12
    with pytest.raises(ArgumentError):
        single_layer(PLANE, 1.0, X, order=2)


def test_single_layer_rejects_points_on_boundary():
    print(" Probando el margen de proximidad...")
    with pytest.raises(ProximityError):
        single_layer(PLANE, 1.0, [[0.0, 0.0, 0.0]], window=10.0)
    with pytest.raises(ProximityError):
        single_layer(SPHERE, 1.0, [[0.0, 0.0, 1.01]], h=0.05, method="points")
    with pytest.raises(ArgumentError):
        single_layer(SPHERE, 1.0, [[0.0, 0.0, 2.0]], order=3)


def test_hessian_checks_sphere():
    """El hessiano cerrado es simétrico, de traza nula y coincide con diferencias"""
    checks = hessian_checks(SPHERE, 1.0, [[0.0, 0.0, 2.0], [1.0, 1.0, 1.0]])
    assert checks["asymmetry"] <= 1e-12
    assert checks["trace"] <= 1e-10
    assert checks["fd_error"] <= 1e-5


def test_carleson_plane_vanishes_under_refinement():
    """En el plano la razón es ≤ 1e-3 y baja al menos 4× al refinar"""
    print(" Probando el funcional de Carleson UR del plano...")
    report = carleson_ur_functional(PLANE, SurfaceBall((0.0, 0.0, 0.0), 1.0))
    assert report.patch == pytest.approx(32.0)
    assert 0.0 <= report.ratio <= 1e-3
    assert report.refined_ratio <= report.ratio / 4.0
    assert report.to_dict()["points"] == report.points


def test_carleson_sphere_is_stable():
    print(" Probando el funcional de Carleson UR de la esfera...")
    report = carleson_ur_functional(SPHERE, SurfaceBall((0.0, 0.0, 1.0), 1.0))
    assert 0.0 < report.ratio < math.inf
    assert report.err_est <= 0.1 * report.ratio


def test_carleson_rejects_bad_balls():
    with pytest.raises(ArgumentError):
        carleson_ur_functional(PLANE, SurfaceBall((0.0, 0.0, 0.5), 1.0))
    with pytest.raises(ArgumentError):
        carleson_ur_functional(SPHERE, SurfaceBall((0.0, 0.0, 1.0), 3.0))


@functools.lru_cache(maxsize=None)
def _cantor_sweep():
    return cantor_contrast([1, 2, 3], depth=5, subdivide=2, max_targets=512, seed=0)


def test_carleson_cantor_grows():
    """El funcional crece con la profundidad del Cantor y la recta no se mueve"""
    print(" Probando el funcional de Carleson UR del Cantor...")
    res = _cantor_sweep()
    assert res.depths == [1, 2, 3]
    assert all(b > a for a, b in zip(res.carleson, res.carleson[1:]))
    assert min(res.plane) > 0.0
    assert res.plane_drift <= 1.1


def test_sio_cantor_vs_plane():
    """sup_ε de la SIO del Cantor creciente y al menos el doble que en la recta"""
    print(" Probando la SIO truncada del Cantor frente a la recta...")
    res = _cantor_sweep()
    assert all(b > a for a, b in zip(res.sio, res.sio[1:]))
    assert res.sio_factor >= 2.0
    assert res.to_dict()["sio_factor"] == res.sio_factor
    with pytest.raises(ArgumentError):
        cantor_contrast([])


def test_global_l2_check():
    print(" Probando la cota L² global...")
    zero = global_l2_check(UNIT_PATCH, 0.0, depth=3)
    assert zero.lhs == 0.0
    assert zero.rhs == 0.0
    report = global_l2_check(UNIT_PATCH, 1.0, depth=3)
    assert report.rhs == pytest.approx(1.0)
    assert 0.0 < report.ratio < math.inf
    assert report.cone_ratio > 0.0


def test_smooth_cutoffs():
    rho = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    for phi in (smoothstep, smooth_bump):
        values = phi(rho)
        assert values[:3].tolist() == [0.0, 0.0, 0.0]
        assert values[3] == pytest.approx(0.5)
        assert values[4:].tolist() == [1.0, 1.0]


def test_riesz_kernel_constants():
    """|K(x)||x|^n = 1 y |∇K(x)||x|^{n+1} = √6 en R³"""
    print(" Probando el núcleo de Riesz...")
    K = CZKernel()
    assert K.oddness() == 0.0
    consts = kernel_size_constants(K)
    assert consts[0] == pytest.approx(1.0, rel=1e-9)
    assert consts[1] == pytest.approx(math.sqrt(6.0), rel=1e-9)
    assert 0.0 < consts[2] < math.inf
    with pytest.raises(ArgumentError):
        CZKernel(cutoff="box")


def test_truncated_kernel():
    K = CZKernel(cutoff="cinf")
    x = np.array([[0.0, 0.0, 0.0], [0.05, 0.0, 0.0], [0.3, 0.0, 0.0]])
    T = K.truncated(x, 0.1)
    assert np.all(np.isfinite(T))
    assert np.allclose(T[:2], 0.0)
    assert np.allclose(T[2], K.evaluate(x[2:])[0])


def test_sio_on_plane_has_no_tangential_part():
    """T_ε1 en el centro de un parche simétrico se anula"""
    print(" Probando SIO truncada sobre el plano...")
    patch = HyperplanePatch(3, lo=-1.0, hi=1.0, infinite=False)
    _, T = truncated_sio(patch, CZKernel(), 1.0, 0.2, 0.05, targets=[[0.0, 0.0, 0.0]])
    assert np.abs(T).max() <= 1e-9
    with pytest.raises(ArgumentError):
        truncated_sio(patch, CZKernel(), 1.0, 0.1, 0.05)


def test_sio_sphere_stable_in_eps():
    print(" Probando estabilidad en ε sobre la esfera...")
    report = sio_sup_check(SPHERE, CZKernel(), 1.0, [0.05, 0.1, 0.2], h=0.02, max_targets=512)
    assert all(math.isfinite(r) and r > 0.0 for r in report.ratios)
    assert max(report.ratios) / min(report.ratios) <= 1.5
    # |T1| = 2π en la esfera unidad
    assert 20.0 < report.sup_ratio < 60.0
    with pytest.raises(ArgumentError):
        sio_sup_check(SPHERE, CZKernel(), 0.0, [0.1], h=0.02)


def test_default_tau_region_contains_normal_axis():
    """Υ_τ(0) con τ por defecto contiene el eje (0,0,t)"""
    print(" Probando la región no tangencial...")
    tau = default_tau(3)
    assert tau > 0.0
    region = nontangential_region(PLANE, [0.0, 0.0, 0.0])
    assert region.tau == pytest.approx(tau)
    axis = [[0.0, 0.0, t] for t in (0.25, 0.5, 1.0, 2.0, 4.0)] + [[0.0, 0.0, -1.0]]
    assert region.contains(axis).all()
    assert not region.contains([[10.0, 0.0, 0.01]])[0]
    with pytest.raises(ArgumentError):
        nontangential_region(PLANE, [0.0, 0.0, 0.0], tau=0.0)


def test_nt_max_of_constant():
    print(" Probando N_* de una constante...")
    value = nt_max(lambda Y: np.full(len(Y), -2.5), PLANE, [0.0, 0.0, 0.0], levels=(0, 2))
    assert value == pytest.approx(2.5)


def test_nt_max_extension_rejects_zero():
    with pytest.raises(ArgumentError):
        nt_max_extension(UNIT_PATCH, CZKernel(), 0.0, h=0.1)


def main():
    """Ejecutar todas las pruebas de potencial"""
    print(" Ejecutando pruebas de potencial")
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
