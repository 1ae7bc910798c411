"""
Test Connectivity - Sacacorchos, cadenas de Harnack y diagnóstico NTA
"""

import math
import sys
from functools import lru_cache

import numpy as np
import pytest

from rectilab_connectivity import (achieved_c, corkscrew, corkscrew_inverse_check, cube_corkscrew,
                                   harnack_chain, harnack_kernel_check, nta_diagnostics, verify_chain)
from rectilab_dyadic import FlatDyadicGrid
from rectilab_errors import ArgumentError, ConnectivityError, CorkscrewError
from rectilab_geometry import Domain, HyperplanePatch, SlitBoundary, SphereBoundary, SurfaceBall
from rectilab_log import set_verbose
from rectilab_whitney import WhitneyOracle, halfspace_approximant, w_Q_predicate

set_verbose(False)

PLANE = HyperplanePatch(3)
HALFSPACE = Domain(PLANE, "interior")
GRID = FlatDyadicGrid(PLANE, k_min=0)
ORACLE = WhitneyOracle(PLANE, "interior")


@lru_cache(maxsize=None)
def _approximant(N):
    return halfspace_approximant(N)


def test_halfspace_corkscrew():
    """X_Δ = (0,0,r/2) con c = 1/2 a toda escala"""
    print(" Probando sacacorchos del semiespacio...")
    for r in (0.25, 1.0, 4.0):
        res = corkscrew(HALFSPACE, SurfaceBall((0.0, 0.0, 0.0), r))
        assert res.c == pytest.approx(0.5, rel=1e-9)
        assert np.allclose(res.point, [0.0, 0.0, 0.5 * r])
        assert res.certified


def test_ball_corkscrew():
    print(" Probando sacacorchos de la bola unidad...")
    ball = Domain(SphereBoundary(3), "interior")
    res = corkscrew(ball, SurfaceBall((0.0, 0.0, 1.0), 0.5))
    assert res.c >= 0.25
    assert res.point[2] < 1.0
    with pytest.raises(CorkscrewError):
        corkscrew(ball, SurfaceBall((0.0, 0.0, 1.0), 2.0))


def test_achieved_c_outside_is_zero():
    c = achieved_c(HALFSPACE, SurfaceBall((0.0, 0.0, 0.0), 1.0), [[0.0, 0.0, -0.5], [0.0, 0.0, 0.5]])
    assert c.tolist() == [0.0, 0.5]


def test_straight_harnack_chain():
    """(0,0,1) a (3,0,1) con ρ=1, Λ=3: 7 bolas de radio 1/2"""
    print(" Probando cadena de Harnack recta...")
    chain = harnack_chain(HALFSPACE, (0.0, 0.0, 1.0), (3.0, 0.0, 1.0), 1.0, 3.0)
    assert chain.route == "segment"
    assert chain.N <= 7
    assert np.allclose(chain.radii, 0.5)
    assert chain.ratio == pytest.approx(2.0)
    check = harnack_kernel_check(chain, [0.0, 0.0, 0.0])
    assert check["passed"]


def test_degenerate_chain():
    chain = harnack_chain(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 1.0), 1.0, 1.0)
    assert chain.N == 1
    assert chain.route == "single"


def test_chain_preconditions():
    print(" Probando precondiciones de la cadena...")
    with pytest.raises(ArgumentError):
        harnack_chain(HALFSPACE, (0.0, 0.0, 1.0), (3.0, 0.0, 1.0), 0.0, 3.0)
    with pytest.raises(ArgumentError):
        harnack_chain(HALFSPACE, (0.0, 0.0, 1.0), (3.0, 0.0, 1.0), 1.0, 2.0)
    with pytest.raises(ArgumentError):
        harnack_chain(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, -1.0), 0.5, 4.0)
    with pytest.raises(ArgumentError):
        harnack_chain(HALFSPACE, (0.0, 0.0, 0.5), (1.0, 0.0, 1.0), 1.0, 3.0)


def test_chain_through_shared_whitney_cubes():
    """Dos regiones U_Q vecinas se conectan por cubos permitidos"""
    print(" Probando cadena por regiones de Whitney...")
    q1, q2 = (2, 0, 0), (2, 1, 0)
    X1 = cube_corkscrew(GRID, ORACLE, q1).point
    X2 = cube_corkscrew(GRID, ORACLE, q2).point
    p1 = w_Q_predicate(GRID, q1, ORACLE.cfg, 3)
    p2 = w_Q_predicate(GRID, q2, ORACLE.cfg, 3)

    def allowed(k, idx):
        return p1(k, idx) | p2(k, idx)
    rho = float(min(X1[-1], X2[-1]))
    Lam = max(float(np.linalg.norm(X1 - X2)) / rho, 1.0)
    chain = harnack_chain(HALFSPACE, X1, X2, rho, Lam, allowed=allowed)
    assert chain.route == "astar"
    assert chain.cubes
    k = np.array([c[0] for c in chain.cubes])
    idx = np.array([c[1:] for c in chain.cubes])
    assert allowed(k, idx).all()
    assert verify_chain(HALFSPACE, chain)["valid"]


def test_slit_has_no_bounded_chain():
    """Control negativo: cruzar la rendija agota el presupuesto de cubos"""
    print(" Probando el control de la rendija...")
    slit = Domain(SlitBoundary(3), "interior")
    flat = harnack_chain(HALFSPACE, (1.0, 0.0, 0.25), (1.0, 0.0, 0.75), 0.25, 2.0, budget=2000)
    assert flat.N <= 5
    with pytest.raises(ConnectivityError):
        harnack_chain(slit, (1.0, 0.0, 0.25), (1.0, 0.0, -0.25), 0.25, 2.0, budget=2000)


def test_cube_corkscrew_height():
    """X_Q sobre un cuadrado plano a altura 5.25ℓ(Q) en toda generación"""
    print(" Probando X_Q de cubos planos...")
    for k in (1, 2, 3):
        res = cube_corkscrew(GRID, ORACLE, (k, 0, 0))
        ell = math.ldexp(1.0, -k)
        assert res.point[-1] == pytest.approx(5.25 * ell)
        assert res.delta_ratio == pytest.approx(5.25 / math.sqrt(2.0))
        assert res.to_dict()["cube"] == [k, 0, 0]


def test_corkscrew_inverse():
    rng = np.random.default_rng(3)
    pts = np.hstack([rng.uniform(-2, 2, (20, 2)), rng.uniform(0.01, 2, (20, 1))])
    report = corkscrew_inverse_check(HALFSPACE, pts, K=2.0)
    assert report["points"] == 20
    assert report["min_c"] == pytest.approx(0.5)
    assert report["passed"]


def test_nta_diagnostics_halfspace():
    print(" Probando diagnóstico NTA del semiespacio...")
    report = nta_diagnostics(HALFSPACE, [[0.0, 0.0, 0.0], [2.0, -1.0, 0.0]], [0.5, 1.0, 2.0], lambdas=(2.0, 4.0))
    assert len(report["rows"]) == 6
    assert report["min_c"] == pytest.approx(0.5, rel=1e-9)
    for row in report["rows"]:
        assert row["N_2"] is not None
        assert row["N_4"] >= row["N_2"]


def test_approximant_exterior_corkscrew():
    """∂Ω_N tiene sacacorchos exteriores a escala 2^{-N-1}"""
    print(" Probando sacacorchos exterior de Ω_N...")
    N = 4
    A = _approximant(N)
    outside = Domain(A.boundary, "exterior")
    _, near = A.boundary.distance([[0.0, 0.0, 0.0]])
    center = tuple(float(v) for v in near[0])
    res = corkscrew(outside, SurfaceBall(center, math.ldexp(1.0, -N - 1)))
    assert res.c >= 0.25
    with pytest.raises(CorkscrewError):
        corkscrew(outside, SurfaceBall(center, 2.0 * A.boundary.diameter))


def main():
    """Ejecutar todas las pruebas de conectividad"""
    print(" Ejecutando pruebas de conectividad")
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
