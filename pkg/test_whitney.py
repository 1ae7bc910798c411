"""
Test Whitney - Descomposición, engorde, regiones U_Q y T_Q, Ω_N
"""

import json
import math
import sys

import numpy as np
import pytest

from rectilab_connectivity import cube_corkscrew
from rectilab_dyadic import CubeFamily, FlatDyadicGrid
from rectilab_errors import ArgumentError
from rectilab_geometry import HyperplanePatch, SurfaceBall, adr_check, boundary_from_dict
from rectilab_log import set_verbose
from rectilab_whitney import (BoxUnion, WhitneyConfig, WhitneyOracle, augment_w_Q, ball_box_check,
                              carleson_box, check_whitney_inequality, fatten, halfspace_approximant,
                              kappa0_check, neighbor_ratio_check, pairwise_fattening_check,
                              region_inclusion_check, sawtooth, w_Q, w_Q_predicate, whitney_decompose,
                              whitney_inequality_ratios, whitney_region)

set_verbose(False)

PLANE = HyperplanePatch(3)
GRID = FlatDyadicGrid(PLANE, k_min=0)
ORACLE = WhitneyOracle(PLANE, "interior")
Q = (2, 0, 0)


def _decomposition(side="interior"):
    lo, hi = ([-1.0, -1.0, 0.0], [1.0, 1.0, 2.0]) if side == "interior" else ([-1.0, -1.0, -2.0], [1.0, 1.0, 0.0])
    return whitney_decompose(PLANE, (lo, hi), side, min_side=1.0 / 16.0)


def test_config_rejects_lambda():
    print(" Probando rango de λ...")
    with pytest.raises(ArgumentError):
        WhitneyConfig(lam=0.2)
    with pytest.raises(ArgumentError):
        WhitneyConfig(lam=0.0)
    assert WhitneyConfig().C0(3) == pytest.approx(8.0 * math.sqrt(3.0))
    assert WhitneyConfig(reference=True).C0(3) == pytest.approx(1000.0 * math.sqrt(2.0))


def test_cube_over_unit_height():
    """El cubo que contiene (0,0,1) cumple 4√3ℓ ≤ dist(4I) ≤ 40√3ℓ"""
    print(" Probando el cubo de Whitney sobre (0,0,1)...")
    k, idx, valid = ORACLE.locate([[0.0, 0.0, 1.0]])
    assert valid[0]
    assert k[0] == 4
    r = whitney_inequality_ratios(PLANE, k, idx)
    ell = math.ldexp(1.0, -int(k[0]))
    assert 4.0 * math.sqrt(3.0) * ell <= r["dist4"][0] <= 40.0 * math.sqrt(3.0) * ell


def test_decomposition_inequality():
    print(" Probando la desigualdad de Whitney en todos los cubos...")
    decomp = _decomposition()
    assert len(decomp) > 0
    assert check_whitney_inequality(decomp) == 0
    assert np.all(decomp.interior)
    assert neighbor_ratio_check(decomp)["violations"] == 0


def test_decomposition_is_disjoint():
    decomp = _decomposition()
    union = BoxUnion(decomp.k, decomp.idx, 0.0)
    centers = decomp.centers
    assert np.all(union.multiplicity(centers) == 1)
    assert np.all(decomp.lookup(centers) == np.arange(len(decomp)))


def test_both_sides_are_mirror_images():
    print(" Probando simetría entre ambos lados del plano...")
    up = _decomposition("interior")
    down = _decomposition("exterior")
    assert len(up) == len(down)
    mirrored = {(k, i, j, -m - 1) for k, i, j, m in up.keys()}
    assert mirrored == set(down.keys())
    assert not down.interior.any()


def test_decomposition_rejects_unbounded_window():
    with pytest.raises(ArgumentError):
        whitney_decompose(PLANE, ([-1.0, -1.0, 0.0], [1.0, 1.0, np.inf]))


def test_fattening_face_overlap():
    """Cubos de lado 1 con una cara común: solape de espesor λ"""
    print(" Probando engorde de cubos...")
    (a_lo, a_hi), (a2_lo, a2_hi) = fatten(0, (0, 0, 0), 0.05)
    (b_lo, b_hi), _ = fatten(0, (1, 0, 0), 0.05)
    assert a_hi[0] - b_lo[0] == pytest.approx(0.05)
    assert a2_hi[0] - a2_lo[0] == pytest.approx(1.1)
    (d_lo, _), _ = fatten(0, (1, 1, 1), 0.05)
    assert np.all(d_lo < a_hi)
    (g_lo, _), _ = fatten(0, (2, 0, 0), 0.05)
    assert g_lo[0] > a_hi[0]
    with pytest.raises(ArgumentError):
        fatten(0, (0, 0, 0), 0.5)


def test_pairwise_fattening_criteria():
    print(" Probando criterios de solape por pares...")
    report = pairwise_fattening_check(_decomposition(), 0.05)
    assert report["pairs"] > 0
    assert report["overlap_mismatch"] == 0
    assert report["tau_ok"]
    assert report["wide_gap_overlaps"] == 0


def test_w_Q_contains_cube_over_center():
    print(" Probando 𝒲_Q sobre un cuadrado plano...")
    k, idx = w_Q(GRID, ORACLE, Q)
    cube = GRID.cube(Q)
    X = cube.center + np.array([0.0, 0.0, 5.25 * cube.ell])
    kk, ii, valid = ORACLE.locate(X)
    assert valid[0]
    assert np.any((k == kk[0]) & np.all(idx == ii[0], axis=1))
    assert np.all((k >= Q[0] - 2) & (k <= Q[0] + 1))


def test_reference_constants_give_superset():
    k, idx = w_Q(GRID, ORACLE, Q)
    wide = w_Q_predicate(GRID, Q, WhitneyConfig(reference=True), 3)
    assert wide(k, idx).all()


def test_regions_nest():
    """U_Q ⊂ U*_Q y U_Q ⊂ T_Q"""
    print(" Probando inclusiones de regiones...")
    U, U2 = whitney_region(GRID, ORACLE, Q)
    T = carleson_box(GRID, ORACLE, Q)
    lo = np.array([-4.0, -4.0, 0.01])
    hi = np.array([4.0, 4.0, 6.0])
    outer = region_inclusion_check(U.contains, U2.contains, lo, hi, samples=4000, seed=1)
    assert outer["inner"] > 0
    assert outer["counterexamples"] == 0
    box = region_inclusion_check(U.contains, T.contains, lo, hi, samples=4000, seed=2)
    assert box["counterexamples"] == 0


def test_corkscrew_point_in_region():
    X = cube_corkscrew(GRID, ORACLE, Q).point
    U, _ = whitney_region(GRID, ORACLE, Q)
    assert U.contains(X)[0]


def test_augmented_region():
    print(" Probando 𝒲*_Q aumentado...")
    X = cube_corkscrew(GRID, ORACLE, Q).point
    region = augment_w_Q(GRID, ORACLE, Q, X, sample=8)
    assert region.k_star <= 2
    assert region.verified
    assert region.added >= 0
    assert len(region.augmented[0]) >= len(region.members[0])
    assert region.metadata()["rule"] == "dijkstra-face-adjacency"


def test_sawtooth_families():
    print(" Probando dientes de sierra...")
    X = cube_corkscrew(GRID, ORACLE, Q).point
    full = sawtooth(GRID, ORACLE, CubeFamily(GRID, []), root=Q, depth=2)
    assert full.contains(X)[0]
    empty = sawtooth(GRID, ORACLE, CubeFamily(GRID, [Q]), root=Q, depth=2)
    probes = np.array([X, X * [1.0, 1.0, 0.5], X + [0.1, 0.0, 0.0]])
    assert not empty.contains(probes).any()


def test_ball_box_containment():
    """(5/4)B_Δ ∩ Ω ⊂ T_Δ con 10⁴ muestras"""
    print(" Probando contención bola-caja...")
    grid = FlatDyadicGrid(PLANE, k_min=-12)
    report = ball_box_check(grid, ORACLE, SurfaceBall((0.0, 0.0, 0.0), 1.0), samples=10_000)
    assert report["samples"] == 10_000
    assert report["counterexamples"] == 0
    assert report["kappa0"] > 1.25


def test_kappa0_containment():
    print(" Probando κ0 para T̃_Q...")
    report = kappa0_check(GRID, ORACLE, Q, samples=10_000)
    assert report["samples"] == 10_000
    assert report["counterexamples"] == 0
    assert report["kappa0"] == pytest.approx(ORACLE.cfg.kappa0(3, math.sqrt(2.0)))
    assert report["box"] >= 2.0 * ORACLE.cfg.C0(3)


def test_kappa0_detects_small_ball():
    """Con κ0 por debajo del alcance de T̃_Q aparecen contraejemplos"""
    report = kappa0_check(GRID, ORACLE, Q, samples=2000, kappa0=2.0)
    assert report["samples"] == 2000
    assert report["counterexamples"] > 0


def test_approximant_adr_uniform():
    """∂Ω_N del semiespacio escala exactamente con 2^-N"""
    print(" Probando ADR uniforme de ∂Ω_N...")
    constants = []
    for N in (4, 5):
        A = halfspace_approximant(N)
        _, near = A.boundary.distance([[0.0, 0.0, 0.0]])
        radii = [A.scale * f for f in (1.0, 2.0, 4.0)]
        report = adr_check(A.boundary, near, radii)
        assert 0.0 < report.worst_lower <= report.worst_upper < math.inf
        constants.append(report.constant)
        assert A.scale == math.ldexp(1.0, -N)
        assert not A.contains(near).any()
    assert constants[0] == pytest.approx(constants[1], rel=1e-6)


def test_approximant_boundary_round_trip():
    print(" Probando registro y reconstrucción de ∂Ω_N...")
    A = halfspace_approximant(4)
    doc = A.boundary.to_dict()
    rebuilt = boundary_from_dict(json.loads(json.dumps(doc)))
    assert rebuilt.name == "approx-4"
    assert np.array_equal(rebuilt.axis, A.boundary.axis)
    assert np.allclose(rebuilt.lo, A.boundary.lo) and np.allclose(rebuilt.hi, A.boundary.hi)
    assert rebuilt.total_area == pytest.approx(A.boundary.total_area)
    _, near = A.boundary.distance([[0.0, 0.0, 0.0]])
    radii = [A.scale * f for f in (1.0, 2.0)]
    assert adr_check(rebuilt, near, radii).constant == pytest.approx(adr_check(A.boundary, near, radii).constant)


def main():
    """Ejecutar todas las pruebas de Whitney"""
    print(" Ejecutando pruebas de Whitney")
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
