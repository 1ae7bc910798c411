"""
Test Functionals - Conos, funciones cuadradas, Hölder inversa, A∞ y condiciones Tb
"""

import math
import sys

import numpy as np
import pytest

from rectilab_dyadic import FlatDyadicGrid
from rectilab_errors import ArgumentError
from rectilab_functionals import (ConeFactory, ConstantField, GreenDerivativeField, HarmonicField, LinearField,
                                  PoissonDiskField, ainfty_check, check_harmonic, cone_inclusion_check,
                                  cone_monotonicity_check, cone_splitting_check, dyadic_max, fit_ainfty,
                                  generation_sweep, good_lambda_experiment, good_lambda_sweep, nondecreasing,
                                  nt_green_bound, nt_max, rh_check, square_function, square_profile, tau0,
                                  tau0_ball, tb_conditions, tb_function)
from rectilab_geometry import Domain, HyperplanePatch, SurfaceBall
from rectilab_harmonic import WalkConfig
from rectilab_log import set_verbose
from rectilab_whitney import WhitneyConfig, WhitneyOracle

set_verbose(False)

HALFSPACE = Domain(HyperplanePatch(3), "interior")


def _flat_factory(dim=3):
    E = HyperplanePatch(dim)
    grid = FlatDyadicGrid(E, k_min=0)
    return ConeFactory(grid, WhitneyOracle(E, "interior", WhitneyConfig(c0_factor=4.0)))


FACTORY = _flat_factory()


class QuadraticField(HarmonicField):
    """|Y|², con Δu = 2d"""

    name = "quadratic"

    def value(self, Y):
        return np.sum(np.atleast_2d(Y) ** 2, axis=1)

    def gradient(self, Y):
        return 2.0 * np.atleast_2d(Y)


def test_tau0_formula():
    """τ₀ = (2C₁²)^{-1/n}"""
    print(" Probando fórmula de τ₀...")
    assert tau0(2.0, 2) == pytest.approx(8.0 ** -0.5, rel=1e-12)
    assert tau0(2.0, 2) == pytest.approx(0.3536, abs=1e-4)


def test_tau0_ball_flat():
    print(" Probando bola τ₀ en la rejilla plana...")
    ball = tau0_ball(FACTORY.grid, (2, 1, 1))
    assert ball.tau0 == pytest.approx((2.0 * math.pi ** 2) ** -0.5, rel=1e-9)
    assert ball.passed
    low, high = ball.slack
    assert low >= 0.1 and high >= 0.1


def test_tau0_ball_rim_rejected():
    grid = FlatDyadicGrid(HyperplanePatch(3, -1.0, 1.0, infinite=False), k_min=0)
    with pytest.raises(ArgumentError):
        tau0_ball(grid, (1, -2, -2))


def test_constant_field():
    """S u = 0 y Ñ u = |c| para u constante"""
    print(" Probando campo constante...")
    u = ConstantField(-2.5)
    x = np.array([0.3, 0.6, 0.0])
    assert square_function(u, FACTORY, (0, 0, 0), x, depth=2) == 0.0
    assert nt_max(u, FACTORY, (0, 0, 0), x, depth=2) == pytest.approx(2.5)


def test_square_function_height():
    """u = t: S^k creciente, comparable a la suma por cubos e invariante por escala"""
    print(" Probando función cuadrada de u = t...")
    u = LinearField.height()
    totals = []
    for k in (1, 2):
        root = (k, 0, 0)
        ell = 2.0 ** -k
        x = np.array([0.3 * ell, 0.7 * ell, 0.0])
        profile = square_profile(u, FACTORY.cone(root, x, "gamma", depth=3))
        assert nondecreasing(profile.values)
        assert 0.8 <= profile.total ** 2 / profile.cube_sum <= 1.3
        totals.append(profile.total / ell)
    assert totals[0] == pytest.approx(totals[1], rel=1e-6)


def test_truncated_square_function_monotone():
    print(" Probando monotonía de S^k en k...")
    x = np.array([0.2, 0.45, 0.0])
    fields = [LinearField.height(), LinearField([0.3, -0.2, 1.0], 0.5),
              PoissonDiskField((0.4, 0.4, 0.0), 0.3, 3, edges=128)]
    for u in fields:
        values = [square_function(u, FACTORY, (0, 0, 0), x, k=k) for k in (0, 1, 2)]
        assert nondecreasing(values)


def test_poisson_disk_maximum_principle():
    print(" Probando Ñ ≤ 1 para la extensión de Poisson de un disco...")
    u = PoissonDiskField((0.5, 0.5, 0.0), 0.3, 3)
    for x in ([0.5, 0.5, 0.0], [0.1, 0.9, 0.0]):
        value = nt_max(u, FACTORY, (0, 0, 0), np.array(x), depth=1)
        assert 0.0 < value <= 1.0 + 1e-9


def test_poisson_disk_closed_form_2d():
    """Extensión del intervalo [-1, 1] en (0, 1): (2/π) arctan(1)"""
    u = PoissonDiskField((0.0, 0.0), 1.0, 2)
    assert u.value([[0.0, 1.0]])[0] == pytest.approx(0.5, rel=1e-12)
    check_harmonic(u, [[0.0, 1.0], [0.3, 0.2], [-2.0, 0.5]], [1.0, 0.2, 0.5])


def test_check_harmonic_rejects():
    print(" Probando rechazo de un campo no armónico...")
    with pytest.raises(ArgumentError):
        check_harmonic(QuadraticField(3), [[0.1, 0.2, 1.0]], 1.0)
    assert check_harmonic(LinearField.height(), [[0.1, 0.2, 1.0]], 1.0) == 0.0


def test_dyadic_max_child_indicator():
    print(" Probando maximal diádica del indicador de un hijo...")
    grid = FACTORY.grid

    def child(P):
        return ((P[:, 0] >= 0.0) & (P[:, 0] < 0.5) & (P[:, 1] >= 0.0) & (P[:, 1] < 0.5)).astype(float)

    inside = dyadic_max(child, grid, (0, 0, 0), [0.25, 0.25, 0.0], depth=3)
    sibling = dyadic_max(child, grid, (0, 0, 0), [0.75, 0.25, 0.0], depth=3)
    assert inside >= 1.0 - 1e-12
    assert sibling == pytest.approx(0.25, rel=1e-12)


def test_dyadic_max_outside_root():
    with pytest.raises(ArgumentError):
        dyadic_max(lambda P: np.ones(len(P)), FACTORY.grid, (1, 0, 0), [0.75, 0.1, 0.0])


def test_cone_invariants():
    print(" Probando monotonía, división e inclusión de conos...")
    mono = cone_monotonicity_check(FACTORY, (2, 0, 0), (1, 0, 0), [0.1, 0.1, 0.0], k=3)
    assert mono["passed"] and mono["samples"] > 0
    split = cone_splitting_check(FACTORY, (1, 0, 0), (3, 0, 0), [0.05, 0.05, 0.0], [0.2, 0.2, 0.0], k=4)
    assert split["passed"]
    incl = cone_inclusion_check(FACTORY, (1, 0, 0), [0.2, 0.3, 0.0], depth=2)
    assert incl["passed"] and incl["kappa0"] < 20.0


def test_cone_rejects_foreign_apex():
    with pytest.raises(ArgumentError):
        FACTORY.cone((1, 0, 0), [0.8, 0.1, 0.0])


def test_pole_inside_cone_rejected():
    x = np.array([0.25, 0.25, 0.0])
    cone = FACTORY.cone((1, 0, 0), x, "gamma", depth=1)
    u = HarmonicField(3, cone.samples(vertices=False)[0])
    u.gradient = lambda Y: np.zeros((len(np.atleast_2d(Y)), 3))
    with pytest.raises(ArgumentError):
        square_profile(u, cone)


def test_good_lambda_trivial():
    report = good_lambda_experiment(ConstantField(1.0), FACTORY, (1, 0, 0), apex_side=2)
    assert report.passed and report.constant == 0.0 and "trivial" in report.flags


def test_good_lambda_height_generations():
    print(" Probando good-λ para u = t en tres generaciones...")
    reports = [good_lambda_experiment(LinearField.height(), FACTORY, (k, 0, 0), q=2.0, apex_side=2)
               for k in (1, 2, 3)]
    for report in reports:
        assert report.passed
        constants = [row["constant"] for row in report.sweep]
        assert max(constants) <= 1.2 * min(constants)
    sweep = generation_sweep(reports, band=1.2)
    assert sweep.passed


def test_green_energy_split_halves():
    print(" Probando la energía |∇u|² por mitades independientes...")
    root = (2, 0, 0)
    u = GreenDerivativeField(HALFSPACE, tb_function(FACTORY, root).pole, -1, WalkConfig(walks=400, seed=3))
    pts = np.array([[0.1, 0.2, 0.3], [0.4, 0.1, 0.15], [0.25, 0.25, 0.6]])
    first, second = u.batches(2)
    expected = np.sum(first.gradient(pts) * second.gradient(pts), axis=1)
    assert np.allclose(u.gradient_energy(pts), expected)
    assert sum(b.M for b in u.batches(4)) == u.M
    with pytest.raises(ArgumentError):
        u.batches(1)


def test_good_lambda_green_sweep():
    print(" Probando el barrido good-λ de la derivada de Green en generaciones y truncaciones...")
    cfg = WalkConfig(walks=2000, seed=3)
    fields = [((k, 0, 0), GreenDerivativeField(HALFSPACE, tb_function(FACTORY, (k, 0, 0)).pole, -1, cfg))
              for k in (1, 2)]
    report = good_lambda_sweep(fields, FACTORY, q=2.0, truncations=(1, 2), apex_side=2, batches=4)
    assert len(report.sweep) == 4
    median = report.details["median"]
    assert math.isfinite(median) and median > 0.0
    for row in report.sweep:
        assert math.isfinite(row["constant"]) and row["stderr"] >= 0.0
        assert row["pass"] == (abs(row["constant"] - median) <= 0.2 * median + 3.0 * row["stderr"])
    assert report.passed == all(row["pass"] for row in report.sweep)
    assert report.details["spread"] == report.constant and report.constant >= 1.0
    assert report.stderr == max(row["stderr"] for row in report.sweep)


def test_good_lambda_sweep_exact_field():
    report = good_lambda_sweep([((1, 0, 0), LinearField.height())], FACTORY, truncations=(1, 2), apex_side=2)
    assert all(row["stderr"] == 0.0 for row in report.sweep)
    assert report.details["within_band"] == report.passed
    with pytest.raises(ArgumentError):
        good_lambda_sweep([], FACTORY)


def test_nt_green_rejects_q1():
    with pytest.raises(ArgumentError):
        nt_green_bound(FACTORY, (1, 0, 0), q=1.0)


def test_nt_green_generations():
    print(" Probando la cota no tangencial de ∂G en tres generaciones...")
    cfg = WalkConfig(walks=2000, seed=5)
    reports = [nt_green_bound(FACTORY, (k, 0, 0), q=2.0, cfg=cfg, apex_side=2, depth=1, spot=5)
               for k in (1, 2, 3)]
    for report in reports:
        assert math.isfinite(report.constant) and report.constant > 0.0
    assert generation_sweep(reports, band=2.0).passed


def test_tb_closed_forms():
    """(a) ≈ ℓ²/(8πH²) y (b) ≈ ℓ²/(2πH²) con H la altura de X̂_Q"""
    print(" Probando condiciones Tb contra fórmulas cerradas...")
    reports = []
    for k in (1, 2, 3):
        report = tb_conditions(FACTORY, (k, 0, 0), q=2.0, apex_side=1, depth=1, samples=8)
        tb = report.details["tb"]
        ell = 2.0 ** -k
        H = tb["pole"][-1]
        assert tb["c"] == pytest.approx(0.5)
        assert H >= 6.0 * tb["kappa1"] * ell * (1.0 - 1e-9)
        assert report.details["b"] == pytest.approx(ell ** 2 / (2.0 * math.pi * H ** 2), rel=1e-2)
        assert report.details["a"] == pytest.approx(ell ** 2 / (8.0 * math.pi * H ** 2), rel=1e-2)
        assert math.isfinite(report.details["hessian_C"])
        reports.append(report)
    assert generation_sweep(reports, band=2.0).passed


def test_tb_rejects_q_above_two():
    with pytest.raises(ArgumentError):
        tb_conditions(FACTORY, (1, 0, 0), q=2.5)


def test_tb_square_condition_weights_each_apex():
    """(c) integra (S²)^{q/2} con el peso σ de cada ápice"""
    print(" Probando la condición (c) ponderada por ápice...")
    ell = 0.25
    report = tb_conditions(FACTORY, (2, 0, 0), q=1.5, apex_side=2, depth=1, samples=8)
    S2 = np.array(report.details["apex_square"])
    w = np.array(report.details["apex_weights"])
    assert len(S2) == len(w) == 4
    assert w.sum() == pytest.approx(ell ** 2)
    assert np.all(S2 >= 0.0)
    assert report.details["c"] == pytest.approx(float(np.sum(w * S2 ** 0.75)) / ell ** 2)
    assert report.constant >= report.details["c"]


def test_reverse_holder_halfspace():
    """∫_Δ k² dσ · σ(Δ) = 12/25 con el polo a altura r/2"""
    print(" Probando Hölder inversa en el semiespacio...")
    reports = [rh_check(HALFSPACE, SurfaceBall((0.0, 0.0, 0.0), r), 2.0) for r in (0.5, 1.0, 2.0)]
    assert reports[1].constant == pytest.approx(0.48, abs=0.02)
    for report in reports:
        assert abs(report.constant - reports[1].constant) <= 3.0 * reports[1].stderr + 1e-9


def test_reverse_holder_variants():
    cfg = WalkConfig(walks=8000, seed=2)
    ball = SurfaceBall((0.0, 0.0, 0.0), 1.0)
    classic = rh_check(HALFSPACE, ball, 2.0, cfg, variant="classic", cell_fraction=1 / 8)
    assert classic.constant >= 1.0 - 1e-9 and math.isfinite(classic.constant)
    for variant in ("weak", "pole-fixed"):
        report = rh_check(HALFSPACE, ball, 2.0, cfg, variant=variant, cell_fraction=1 / 8)
        assert math.isfinite(report.constant) and report.sweep
    with pytest.raises(ArgumentError):
        rh_check(HALFSPACE, ball, 1.0, cfg)


def test_fit_ainfty_scale_free():
    """Multiplicar ω por una constante no cambia θ"""
    rng = np.random.default_rng(0)
    sF = rng.random(50)
    sD = sF + rng.random(50)
    wF = sF ** 0.7
    wD = sD ** 0.7
    base = fit_ainfty(wF, sF, wD, sD)
    scaled = fit_ainfty(3.0 * wF, sF, 3.0 * wD, sD)
    assert base["theta"] == scaled["theta"]
    assert base["C"] == pytest.approx(scaled["C"], rel=1e-12)


def test_ainfty_variants():
    print(" Probando A∞ clásica, débil y diádica...")
    cfg = WalkConfig(walks=6000, seed=4)
    ball = SurfaceBall((0.0, 0.0, 0.0), 1.0)
    for variant in ("classic", "weak"):
        report = ainfty_check(HALFSPACE, ball, cfg, variant=variant, sets=12, cell_fraction=1 / 8)
        assert math.isfinite(report.constant)
        assert 0.1 <= report.details["theta"] <= 1.0
    dyadic = ainfty_check(HALFSPACE, None, cfg, variant="dyadic", grid=FACTORY.grid, key=(1, 0, 0), sets=12)
    assert math.isfinite(dyadic.constant)


def test_report_rows():
    report = rh_check(HALFSPACE, SurfaceBall((0.0, 0.0, 0.0), 1.0), 2.0, WalkConfig(walks=2000))
    rows = report.rows()
    assert list(rows[0]) == ["check_id", "scale", "lhs", "rhs", "constant", "stderr", "pass"]


def main():
    """Función principal de pruebas"""
    print(" Rectilab - Pruebas de funcionales")
    print("=" * 50)
    tests = [name for name in globals() if name.startswith("test_")]
    passed = 0
    for name in tests:
        try:
            globals()[name]()
            passed += 1
        except Exception as e:
            print(f"    Error en {name}: {e!r}")
    print("\n" + "=" * 50)
    print(f" Resultados: {passed}/{len(tests)} pruebas pasaron")
    return passed == len(tests)


if __name__ == "__main__":
    set_verbose(True)
    sys.exit(0 if main() else 1)
