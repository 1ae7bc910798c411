"""
Rectilab Runner - Registro de verificaciones, ejecución ordenada por etapas y emisión de informes
Cada verificación recibe el escenario y su semilla propia y devuelve un FunctionalReport
"""

import csv
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from rectilab_config import KNOWN_CHECKS, Scenario
from rectilab_connectivity import nta_diagnostics
from rectilab_dyadic import FlatDyadicGrid, build_grid, fit_thin_exponent, thin_boundary_check, verify_grid
from rectilab_errors import ArgumentError, RectilabError
from rectilab_functionals import (STABLE_BAND, ConeFactory, FunctionalReport, GreenDerivativeField, LinearField,
                                  ainfty_check, generation_sweep, good_lambda_experiment, good_lambda_sweep,
                                  nt_green_bound, rh_check, tb_conditions, tb_function)
from rectilab_geometry import (Domain, HyperplanePatch, SphereBoundary, SurfaceBall,
                               adr_check)
from rectilab_harmonic import (WalkConfig, bourgain_check, cfms_check, doubling_check, green_function,
                               green_symmetry, pole_change_check, poisson_density, wos_harmonic_measure)
from rectilab_log import status
from rectilab_potential import CZKernel, cantor_contrast, carleson_ur_functional, single_layer, sio_sup_check
from rectilab_whitney import (WhitneyConfig, WhitneyOracle, ball_box_check, check_whitney_inequality,
                              halfspace_approximant, kappa0_check, pairwise_fattening_check, whitney_decompose)

STAGES = ("geometry", "grid", "whitney", "connectivity", "potential", "hm", "functionals")
STAGE_RANK = {"geometry": 0, "grid": 1, "whitney": 2, "connectivity": 3, "potential": 4, "hm": 4,
              "functionals": 5}
CSV_COLUMNS = ("check_id", "scale", "lhs", "rhs", "constant", "stderr", "pass")
GRID_PROPERTIES = ("partition", "ownership", "nesting", "diameter", "inner_ball")

# Valores de referencia
CARLESON_PLANE_MAX = 1e-3
SHELL_TOLERANCE = 1e-2
RH_HALFSPACE = 0.48
RH_TOLERANCE = 0.02
ACCEPTANCE_WALKS = 100_000
FAR_WALKS = 400_000
DISK_STDERR_MAX = 5e-3
THIN_FACTOR = 4.0
SIO_SPREAD = 1.5
CANTOR_PLANE_DRIFT = 1.1
CANTOR_SIO_FACTOR = 2.0

PLANE = HyperplanePatch(3)
HALFSPACE = Domain(PLANE, "interior")
BALL = Domain(SphereBoundary(3), "interior")
UNIT_DISK = SurfaceBall((0.0, 0.0, 0.0), 1.0)
FAR_POLE = (0.0, 0.0, 8.0)


@dataclass(frozen=True)
class Check:
    check_id: str
    stage: str
    summary: str
    run: Callable[[Scenario, int], FunctionalReport]


REGISTRY: Dict[str, Check] = {}


def check(check_id: str, stage: str, summary: str):
    """Registra una verificación bajo su identificador y etapa"""
    def register(fn: Callable[[Scenario, int], FunctionalReport]):
        REGISTRY[check_id] = Check(check_id, stage, summary, fn)
        return fn
    return register


def check_seed(seed: int, check_id: str) -> int:
    """Semilla de la verificación: no depende del orden ni de los trabajadores"""
    state = np.random.SeedSequence([int(seed), KNOWN_CHECKS.index(check_id)]).generate_state(1)
    return int(state[0])


def plan(checks: Sequence[str]) -> List[str]:
    """Orden de dependencia: geometría → rejilla → Whitney → conectividad → potencial/ω → funcionales"""
    unique = list(dict.fromkeys(checks))
    for c in unique:
        if c not in REGISTRY:
            raise ArgumentError(f"verificación desconocida: {c}")
    return sorted(unique, key=lambda c: (STAGE_RANK[REGISTRY[c].stage], KNOWN_CHECKS.index(c)))


def _walks(sc: Scenario, seed: int, walks: Optional[int] = None) -> WalkConfig:
    cfg = sc.walk_config(seed)
    return cfg if walks is None else cfg.replace(walks=walks)


def _within(value: float, expected: float, stderr: float, k: float = 3.0, floor: float = 0.0) -> bool:
    return abs(value - expected) <= k * stderr + floor


def finite_boundary(E):
    """El plano infinito se recorta a su ventana para rejillas finitas"""
    if isinstance(E, HyperplanePatch) and E.infinite:
        return HyperplanePatch(E.dim, E.lo, E.hi, infinite=False)
    return E


def grid_sigma_total(grid) -> float:
    if isinstance(grid, FlatDyadicGrid):
        E = grid.boundary
        return (E.hi - E.lo) ** E.n
    return grid.cloud.total_weight


def _grid_report(check_id: str, grid) -> FunctionalReport:
    counts = verify_grid(grid, sigma_total=grid_sigma_total(grid))
    bad = float(sum(counts[p] for p in GRID_PROPERTIES))
    return FunctionalReport(check_id, bad, 0.0, bad, tolerance=0.0, passed=bad == 0.0, details=counts)


def _level_radii(sc: Scenario, E, limit: Optional[int] = None) -> List[float]:
    k_lo, k_hi = sc.grid["k_min"], sc.grid["k_max"]
    if limit is not None:
        k_hi = min(k_hi, k_lo + limit)
    return [math.ldexp(1.0, -k) for k in range(k_lo, k_hi + 1) if math.ldexp(1.0, -k) <= 0.5 * E.diameter]


def sample_centers(E, spacing: float, count: int, seed: int) -> np.ndarray:
    cloud = E.sample(spacing, seed)
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(cloud.points), min(count, len(cloud.points)), replace=False)
    return cloud.points[np.sort(pick)]


def cone_factory(sc: Scenario, E=PLANE, seed: int = 0) -> ConeFactory:
    """Conos sobre la rejilla plana o sobre una rejilla explícita del borde"""
    cfg = WhitneyConfig(**dict(sc.whitney_config().to_dict(), c0_factor=sc.functionals["cone_c0_factor"]))
    if isinstance(E, HyperplanePatch):
        grid = FlatDyadicGrid(E, k_min=sc.grid["k_min"])
    else:
        grid = build_grid(E, sc.grid["k_min"], sc.grid["k_max"], spacing=sc.grid["spacing"],
                          adr_bound=sc.geometry["adr_bound"], seed=seed)
    return ConeFactory(grid, WhitneyOracle(E, "interior", cfg))


def _increasing_run(values: Sequence[float]) -> int:
    best = run = 1 if values else 0
    for a, b in zip(values, values[1:]):
        run = run + 1 if b > a else 1
        best = max(best, run)
    return best


# ---------------------------------------------------------------------------
# Geometría y rejilla
# ---------------------------------------------------------------------------

@check("adr", "geometry", "cocientes σ(Δ(x,r))/r^n en los niveles de la rejilla")
def _adr(sc: Scenario, seed: int) -> FunctionalReport:
    E = sc.boundary_model()
    radii = [math.ldexp(1.0, -k) for k in range(sc.grid["k_min"], sc.grid["k_max"] + 1)
             if math.ldexp(1.0, -k) <= E.diameter]
    centers = sample_centers(E, sc.grid["spacing"], 12, seed)
    report = adr_check(E, centers, radii, bound=sc.geometry["adr_bound"])
    return FunctionalReport("adr", report.worst_upper, report.worst_lower, report.constant,
                            tolerance=sc.geometry["adr_bound"], passed=report.passed,
                            scale=max(radii) if radii else 1.0, details=report.to_dict())


@check("dyadic-grid", "grid", "propiedades (i)-(v) de la rejilla del escenario")
def _dyadic_grid(sc: Scenario, seed: int) -> FunctionalReport:
    grid = build_grid(finite_boundary(sc.boundary_model()), sc.grid["k_min"], sc.grid["k_max"],
                      spacing=sc.grid["spacing"], adr_bound=sc.geometry["adr_bound"], seed=seed)
    return _grid_report("dyadic-grid", grid)


@check("dyadic-plane", "grid", "propiedades (i)-(v) sobre [0,1]² con niveles 0..5")
def _dyadic_plane(sc: Scenario, seed: int) -> FunctionalReport:
    return _grid_report("dyadic-plane", FlatDyadicGrid(HyperplanePatch(3, 0.0, 1.0, infinite=False), 0, 5))


@check("dyadic-sphere", "grid", "propiedades (i)-(v) sobre la esfera unidad con niveles 0..3")
def _dyadic_sphere(sc: Scenario, seed: int) -> FunctionalReport:
    return _grid_report("dyadic-sphere", build_grid(SphereBoundary(3), 0, 3, spacing=0.05, seed=seed))


@check("thin-boundary", "grid", "franja de borde fino ≤ 4τ en el parche plano")
def _thin_boundary(sc: Scenario, seed: int) -> FunctionalReport:
    grid = FlatDyadicGrid(PLANE, k_min=0)
    keys = [(2, 0, 0), (2, 1, 1)]
    taus = (0.05, 0.1, 0.2)
    rows = []
    for key in keys:
        for tau in taus:
            value = thin_boundary_check(grid, key, tau)
            rows.append({"scale": tau, "lhs": value, "rhs": THIN_FACTOR * tau, "constant": value / tau,
                         "pass": value <= THIN_FACTOR * tau})
    C, eta = fit_thin_exponent(grid, keys, taus)
    worst = max(row["constant"] for row in rows)
    return FunctionalReport("thin-boundary", worst, THIN_FACTOR, worst, tolerance=THIN_FACTOR,
                            passed=all(row["pass"] for row in rows), sweep=rows,
                            details={"C": C, "eta": eta})


# ---------------------------------------------------------------------------
# Whitney
# ---------------------------------------------------------------------------

@check("whitney-suite", "whitney", "desigualdad de Whitney, solapes engordados y contenciones por rechazo")
def _whitney_suite(sc: Scenario, seed: int) -> FunctionalReport:
    cfg = sc.whitney_config()
    oracle = WhitneyOracle(PLANE, "interior", cfg)
    decomp = whitney_decompose(PLANE, ([-1.0, -1.0, 0.0], [1.0, 1.0, 2.0]), "interior", cfg, min_side=1.0 / 16.0)
    inequality = check_whitney_inequality(decomp)
    fattening = pairwise_fattening_check(decomp, cfg.lam)
    box = ball_box_check(FlatDyadicGrid(PLANE, k_min=-12), oracle, UNIT_DISK, samples=10_000, seed=seed)
    kappa = kappa0_check(FlatDyadicGrid(PLANE, k_min=0), oracle, (2, 0, 0), samples=10_000, seed=seed)
    counts = {"inequality": inequality, "overlap_mismatch": fattening["overlap_mismatch"],
              "wide_gap_overlaps": fattening["wide_gap_overlaps"], "tau": 0 if fattening["tau_ok"] else 1,
              "ball_box": box["counterexamples"], "kappa0": kappa["counterexamples"]}
    bad = float(sum(counts.values()))
    return FunctionalReport("whitney-suite", bad, 0.0, bad, tolerance=0.0, passed=bad == 0.0,
                            details={"cubes": len(decomp), "violations": counts, "kappa0": box["kappa0"],
                                     "pairs": fattening["pairs"]})


@check("approximant-adr", "whitney", "constante ADR de ∂Ω_N uniforme en N")
def _approximant_adr(sc: Scenario, seed: int) -> FunctionalReport:
    cfg = sc.whitney_config()
    rows = []
    for N in sc.functionals["approximants"]:
        A = halfspace_approximant(N, cfg=cfg)
        _, near = A.boundary.distance([[0.0, 0.0, 0.0]])
        report = adr_check(A.boundary, near, [A.scale * f for f in (1.0, 2.0, 4.0)])
        rows.append({"scale": A.scale, "lhs": report.worst_upper, "rhs": report.worst_lower,
                     "constant": report.constant, "pass": math.isfinite(report.constant)})
    constants = [row["constant"] for row in rows]
    spread = max(constants) / min(constants)
    return FunctionalReport("approximant-adr", max(constants), min(constants), spread, tolerance=1.0 + 1e-6,
                            passed=spread <= 1.0 + 1e-6, sweep=rows)


# ---------------------------------------------------------------------------
# Conectividad
# ---------------------------------------------------------------------------

def _nta_report(check_id: str, report: Dict[str, Any], c_min: float) -> FunctionalReport:
    c = report["min_c"]
    chained = all(row.get("N_2") is not None for row in report["rows"])
    errors = [row["error"] for row in report["rows"] if "error" in row]
    rows = [{"scale": row["r"], "lhs": row["c"], "rhs": c_min,
             "constant": 1.0 / row["c"] if row["c"] > 0 else math.inf, "pass": row["c"] >= c_min}
            for row in report["rows"]]
    return FunctionalReport(check_id, c, c_min, 1.0 / c if c > 0 else math.inf,
                            passed=c >= c_min and chained and not errors, sweep=rows,
                            details={"errors": errors, "pairs": report["pairs"]})


@check("corkscrew", "connectivity", "constante sacacorchos y cadenas de Harnack sobre el borde del escenario")
def _corkscrew(sc: Scenario, seed: int) -> FunctionalReport:
    E = sc.boundary_model()
    c_min = sc.geometry["c_min"]
    centers = sample_centers(E, sc.grid["spacing"], 3, seed)
    radii = _level_radii(sc, E, limit=2) if E.bounded else [math.ldexp(1.0, -k) for k in range(3)]
    if not radii:
        raise ArgumentError("ningún radio de la rejilla cabe en el borde", {"diameter": E.diameter})
    report = nta_diagnostics(Domain(E, "interior"), centers, radii, lambdas=(2.0, 4.0), c_min=c_min,
                             cfg=sc.whitney_config(), seed=seed)
    return _nta_report("corkscrew", report, c_min)


@check("nta-halfspace", "connectivity", "c = 1/2 y cadenas acotadas en el semiespacio")
def _nta_halfspace(sc: Scenario, seed: int) -> FunctionalReport:
    report = nta_diagnostics(HALFSPACE, [[0.0, 0.0, 0.0], [2.0, -1.0, 0.0]], [0.5, 1.0, 2.0],
                             lambdas=(2.0, 4.0), c_min=sc.geometry["c_min"], seed=seed)
    return _nta_report("nta-halfspace", report, sc.geometry["c_min"])


# ---------------------------------------------------------------------------
# Potencial
# ---------------------------------------------------------------------------

@check("carleson-plane", "potential", "funcional de Carleson UR del plano ≤ 1e-3 y decreciente al refinar")
def _carleson_plane(sc: Scenario, seed: int) -> FunctionalReport:
    quad = sc.quadrature
    report = carleson_ur_functional(PLANE, UNIT_DISK, resolution=quad["resolution"], depth=quad["depth"],
                                    subdivide=quad["subdivide"])
    passed = report.ratio <= CARLESON_PLANE_MAX and report.refined_ratio <= report.ratio / 4.0
    return FunctionalReport("carleson-plane", report.value, 1.0, report.ratio, tolerance=CARLESON_PLANE_MAX,
                            passed=passed, stderr=report.err_est, scale=1.0,
                            sweep=[{"scale": 1.0, "lhs": report.refined_ratio, "rhs": 1.0,
                                    "constant": report.refined_ratio, "resolution": quad["resolution"] + 1}],
                            details=report.to_dict())


@check("carleson-ur", "potential", "funcional de Carleson UR sobre el borde del escenario")
def _carleson_ur(sc: Scenario, seed: int) -> FunctionalReport:
    E = sc.boundary_model()
    quad = sc.quadrature
    x = sample_centers(E, sc.grid["spacing"], 1, seed)[0]
    r = min(0.5, 0.5 * E.diameter)
    report = carleson_ur_functional(E, SurfaceBall(tuple(float(v) for v in x), r), resolution=quad["resolution"],
                                    depth=quad["depth"], subdivide=quad["subdivide"])
    return FunctionalReport("carleson-ur", report.value, r ** E.n, report.ratio, passed=math.isfinite(report.ratio),
                            stderr=report.err_est or 0.0, scale=r, details=report.to_dict())


@check("shell-theorem", "potential", "𝒮1 = 1/|X| fuera y 1 dentro de la esfera por cuadratura")
def _shell_theorem(sc: Scenario, seed: int) -> FunctionalReport:
    X = [[0.0, 0.0, 2.0], [0.0, 0.0, 0.0]]
    expected = np.array([0.5, 1.0])
    res = single_layer(SphereBoundary(3), 1.0, X, h=sc.quadrature["spacing"], method="points")
    rel = np.abs(res.value - expected) / expected
    worst = float(rel.max())
    return FunctionalReport("shell-theorem", float(res.value[0]), 0.5, worst, tolerance=SHELL_TOLERANCE,
                            passed=worst <= SHELL_TOLERANCE, stderr=float(np.max(res.error)), scale=1.0,
                            sweep=[{"scale": float(np.linalg.norm(x)), "lhs": float(v), "rhs": float(e),
                                    "constant": float(r)} for x, v, e, r in zip(np.asarray(X), res.value,
                                                                               expected, rel)],
                            details=res.to_dict())


@check("sio-sphere", "potential", "sup_ε de la SIO truncada estable en ε sobre la esfera")
def _sio_sphere(sc: Scenario, seed: int) -> FunctionalReport:
    report = sio_sup_check(SphereBoundary(3), CZKernel(), 1.0, [0.05, 0.1, 0.2], h=0.02, max_targets=512,
                           seed=seed)
    spread = max(report.ratios) / min(report.ratios)
    return FunctionalReport("sio-sphere", report.sup_ratio, min(report.ratios), spread, tolerance=SIO_SPREAD,
                            passed=spread <= SIO_SPREAD,
                            sweep=[{"scale": e, "lhs": r, "rhs": 1.0, "constant": r}
                                   for e, r in zip(report.eps, report.ratios)],
                            details=report.to_dict())


@check("cantor-contrast", "potential", "Carleson y SIO crecientes en el Cantor con la recta estable")
def _cantor_contrast(sc: Scenario, seed: int) -> FunctionalReport:
    quad = sc.quadrature
    res = cantor_contrast(sc.functionals["cantor_depths"], depth=quad["depth"], subdivide=quad["subdivide"],
                          seed=seed)
    needed = min(4, len(res.carleson))
    passed = (_increasing_run(res.carleson) >= needed and _increasing_run(res.sio) == len(res.sio)
              and res.plane_drift <= CANTOR_PLANE_DRIFT and res.sio_factor >= CANTOR_SIO_FACTOR)
    rows = [{"scale": 4.0 ** -m, "lhs": c, "rhs": s, "constant": c, "depth": m, "plane": p, "plane_sio": ps}
            for m, c, s, p, ps in zip(res.depths, res.carleson, res.sio, res.plane, res.plane_sio)]
    return FunctionalReport("cantor-contrast", res.carleson[-1], res.carleson[0],
                            res.carleson[-1] / res.carleson[0] if res.carleson[0] > 0 else math.inf,
                            passed=passed, sweep=rows, details=res.to_dict())


# ---------------------------------------------------------------------------
# Medida armónica
# ---------------------------------------------------------------------------

@check("wos-halfspace-disk", "hm", "ω^{(0,0,1)}(disco unidad) = 1 - 1/√2 con 10⁵ caminatas")
def _wos_disk(sc: Scenario, seed: int) -> FunctionalReport:
    est = wos_harmonic_measure(HALFSPACE, (0.0, 0.0, 1.0), UNIT_DISK, _walks(sc, seed, ACCEPTANCE_WALKS))
    exact = 1.0 - 1.0 / math.sqrt(2.0)
    passed = _within(est.mean, exact, est.stderr) and est.stderr <= DISK_STDERR_MAX
    return FunctionalReport("wos-halfspace-disk", est.mean, exact, est.mean / exact, passed=passed,
                            stderr=est.stderr, flags=list(est.flags), details=est.to_dict())


@check("wos-ball-center", "hm", "desde el centro de la bola ω(Δ) = σ(Δ)/4π")
def _wos_ball(sc: Scenario, seed: int) -> FunctionalReport:
    cap = SurfaceBall((0.0, 0.0, 1.0), 1.0)
    est = wos_harmonic_measure(BALL, (0.0, 0.0, 0.0), cap, _walks(sc, seed))
    exact = SphereBoundary(3).cap_area(cap.radius) / (4.0 * math.pi)
    return FunctionalReport("wos-ball-center", est.mean, exact, est.mean / exact,
                            passed=_within(est.mean, exact, est.stderr), stderr=est.stderr,
                            flags=list(est.flags), details=est.to_dict())


@check("poisson-halfspace", "hm", "núcleo de Poisson del semiespacio en el origen = 1/2π")
def _poisson(sc: Scenario, seed: int) -> FunctionalReport:
    est = poisson_density(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 0.0), 0.2, _walks(sc, seed, FAR_WALKS))
    exact = 1.0 / (2.0 * math.pi)
    flags = ["low-confidence"] if est.low_confidence else []
    return FunctionalReport("poisson-halfspace", est.value, exact, est.value / exact,
                            passed=_within(est.value, exact, est.stderr, 4.0, 0.005), stderr=est.stderr,
                            scale=0.2, flags=flags, details=est.to_dict())


@check("green-halfspace", "hm", "G((0,0,1),(0,0,2)) = 1/6π en el semiespacio")
def _green_halfspace(sc: Scenario, seed: int) -> FunctionalReport:
    est = green_function(HALFSPACE, (0.0, 0.0, 1.0), (0.0, 0.0, 2.0), _walks(sc, seed))
    exact = 1.0 / (6.0 * math.pi)
    return FunctionalReport("green-halfspace", est.value, exact, est.value / exact,
                            passed=_within(est.value, exact, est.stderr), stderr=est.stderr,
                            details=est.to_dict())


@check("green-symmetry", "hm", "G(X,Y) = G(Y,X) dentro de 3 errores estándar")
def _green_symmetry(sc: Scenario, seed: int) -> FunctionalReport:
    report = green_symmetry(HALFSPACE, (0.0, 0.0, 1.0), (1.0, 0.5, 2.0), _walks(sc, seed))
    ratio = report["G_xy"] / report["G_yx"] if report["G_yx"] != 0 else math.inf
    return FunctionalReport("green-symmetry", report["G_xy"], report["G_yx"], ratio, passed=report["passed"],
                            stderr=report["stderr"], details=report)


@check("bourgain", "hm", "cota inferior de Bourgain para ω^Y(Δ) con Y cerca de x")
def _bourgain(sc: Scenario, seed: int) -> FunctionalReport:
    report = bourgain_check(HALFSPACE, (0.0, 0.0, 0.0), 1.0, _walks(sc, seed), c=0.1, seed=seed)
    return FunctionalReport("bourgain", report["min"], 1.0, report["C"],
                            passed=report["min"] > 0.0 and math.isfinite(report["C"]),
                            stderr=report["min_stderr"], details=report)


@check("cfms", "hm", "comparación r^{n-1}G(X_Δ, X) frente a ω^X(Δ)")
def _cfms(sc: Scenario, seed: int) -> FunctionalReport:
    report = cfms_check(HALFSPACE, UNIT_DISK, FAR_POLE, _walks(sc, seed))
    ratio = report["ratio"]
    return FunctionalReport("cfms", report["omega"], report["lhs"], ratio, passed=0.1 <= ratio <= 10.0,
                            stderr=report["ratio_stderr"], details=report)


@check("doubling", "hm", "ω^X(2Δ)/ω^X(Δ) con el polo lejano")
def _doubling(sc: Scenario, seed: int) -> FunctionalReport:
    report = doubling_check(HALFSPACE, UNIT_DISK, FAR_POLE, _walks(sc, seed, FAR_WALKS))
    return FunctionalReport("doubling", report["omega_2"], report["omega_1"], report["ratio"],
                            passed=math.isfinite(report["ratio"]), stderr=report["stderr"], details=report)


@check("pole-change", "hm", "ω^X(Δ')/ω^X(Δ) comparable a ω^{X_Δ}(Δ')")
def _pole_change(sc: Scenario, seed: int) -> FunctionalReport:
    inner = SurfaceBall((0.5, 0.0, 0.0), 0.25)
    report = pole_change_check(HALFSPACE, inner, UNIT_DISK, FAR_POLE, _walks(sc, seed, FAR_WALKS))
    factor = report["factor"]
    return FunctionalReport("pole-change", report["lhs"], report["rhs"], factor,
                            passed=1.0 / 3.0 <= factor <= 3.0, stderr=report["lhs_stderr"], scale=inner.radius,
                            details=report)


# ---------------------------------------------------------------------------
# Funcionales
# ---------------------------------------------------------------------------

@check("rh-halfspace", "functionals", "Hölder inversa normalizada invariante en r ∈ {1/2, 1, 2}")
def _rh_halfspace(sc: Scenario, seed: int) -> FunctionalReport:
    p = sc.functionals["p"]
    cfg = _walks(sc, seed)
    reports = [rh_check(HALFSPACE, SurfaceBall((0.0, 0.0, 0.0), r), p, cfg, seed=seed) for r in (0.5, 1.0, 2.0)]
    middle = reports[1]
    invariant = all(abs(r.constant - middle.constant) <= 3.0 * math.hypot(r.stderr, middle.stderr) + 1e-9
                    for r in reports)
    closed = abs(middle.constant - RH_HALFSPACE) <= RH_TOLERANCE if p == 2.0 else True
    sweep = generation_sweep(reports, band=math.inf, check_id="rh-halfspace")
    sweep.passed = invariant and closed
    sweep.stderr = middle.stderr
    sweep.details = {"p": p, "reference": RH_HALFSPACE if p == 2.0 else None, "constant": middle.constant}
    return sweep


@check("rh-approximants", "functionals", "Hölder inversa sobre ∂Ω_N uniforme en N dentro de un factor 2")
def _rh_approximants(sc: Scenario, seed: int) -> FunctionalReport:
    p = sc.functionals["p"]
    cfg = _walks(sc, seed)
    reports = []
    for N in sc.functionals["approximants"]:
        A = halfspace_approximant(N, cfg=sc.whitney_config())
        _, near = A.boundary.distance([[0.0, 0.0, 0.0]])
        ball = SurfaceBall(tuple(float(v) for v in near[0]), 4.0 * A.scale)
        reports.append(rh_check(A.domain, ball, p, cfg.replace(scale=A.scale), seed=seed))
    return generation_sweep(reports, band=2.0, check_id="rh-approximants")


@check("ainfty", "functionals", "ajuste (θ, C) de ω ∈ A∞ sobre el disco unidad")
def _ainfty(sc: Scenario, seed: int) -> FunctionalReport:
    return ainfty_check(HALFSPACE, UNIT_DISK, _walks(sc, seed), variant="classic", seed=seed)


@check("good-lambda", "functionals", "‖S u‖/‖Ñ u‖ estable en truncaciones y generaciones")
def _good_lambda(sc: Scenario, seed: int) -> FunctionalReport:
    q = sc.functionals["q"]
    factory = cone_factory(sc)
    reports = [good_lambda_experiment(LinearField.height(), factory, (k, 0, 0), q=q, apex_side=2, seed=seed)
               for k in sc.functionals["generations"]]
    sweep = generation_sweep(reports, band=STABLE_BAND[1], check_id="good-lambda")
    cfg = _walks(sc, seed)
    fields = []
    for k in sc.functionals["generations"]:
        root = (k, 0, 0)
        fields.append((root, GreenDerivativeField(HALFSPACE, tb_function(factory, root).pole, -1, cfg)))
    green = good_lambda_sweep(fields, factory, q=q, truncations=(1, 2, 3), apex_side=2, seed=seed)
    sweep.passed = sweep.passed and green.passed
    sweep.flags = sorted(set(sweep.flags) | set(green.flags))
    sweep.details = {"q": q, "green": green.to_dict()}
    return sweep


@check("tb-conditions", "functionals", "𝔸₀ de las condiciones Tb uniforme en tres generaciones")
def _tb_conditions(sc: Scenario, seed: int) -> FunctionalReport:
    factory = cone_factory(sc)
    reports = [tb_conditions(factory, (k, 0, 0), q=sc.functionals["q"], apex_side=1, depth=1, samples=8,
                             seed=seed) for k in sc.functionals["generations"]]
    return generation_sweep(reports, band=2.0, check_id="tb-conditions")


@check("nt-green", "functionals", "‖Ñ ∂G‖^q σ(Q)^{q-1} uniforme en tres generaciones")
def _nt_green(sc: Scenario, seed: int) -> FunctionalReport:
    factory = cone_factory(sc)
    cfg = _walks(sc, seed)
    reports = [nt_green_bound(factory, (k, 0, 0), q=sc.functionals["q"], cfg=cfg, apex_side=2, depth=1, spot=5,
                              seed=seed) for k in sc.functionals["generations"]]
    return generation_sweep(reports, band=2.0, check_id="nt-green")


# ---------------------------------------------------------------------------
# Ejecución y emisión
# ---------------------------------------------------------------------------

def fingerprint() -> Dict[str, str]:
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "platform": platform.platform()}


@dataclass
class RunReport:
    """Resultado de una ejecución: informes, fallos reproducibles y tiempos por etapa"""
    scenario: Dict[str, Any]
    reports: List[FunctionalReport] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    seeds: Dict[str, int] = field(default_factory=dict)
    fingerprint: Dict[str, str] = field(default_factory=fingerprint)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures and all(r.passed for r in self.reports)

    def statuses(self) -> Dict[str, str]:
        out = {r.check_id: "pass" if r.passed else "fail" for r in self.reports}
        out.update({f["check_id"]: "error" for f in self.failures})
        return out

    def to_dict(self) -> Dict[str, Any]:
        """Forma estructurada sin tiempos: idéntica entre ejecuciones"""
        return {"scenario": self.scenario, "seeds": self.seeds, "fingerprint": self.fingerprint,
                "passed": self.passed, "statuses": self.statuses(),
                "reports": [r.to_dict() for r in self.reports], "failures": self.failures}


def _execute(scenario: Scenario, check_id: str, seed: int) -> Tuple[Optional[FunctionalReport],
                                                                     Optional[Dict[str, Any]], float]:
    start = time.perf_counter()
    status(f"Verificando {check_id} (semilla {seed})...")
    try:
        report = REGISTRY[check_id].run(scenario, seed)
        failure = None
        status(f"   {check_id}: {'pasa' if report.passed else 'falla'}")
    except RectilabError as exc:
        report = None
        failure = {"check_id": check_id, "seed": seed, **exc.to_dict(),
                   "replay": {"scenario": scenario.to_dict(), "check": check_id}}
        status(f"   Error en {check_id}: {exc}")
    except Exception as exc:
        # fallo no tipado: se registra y las verificaciones independientes siguen
        report = None
        failure = {"check_id": check_id, "seed": seed, "error": type(exc).__name__, "message": str(exc),
                   "inputs": {}, "unexpected": True,
                   "replay": {"scenario": scenario.to_dict(), "check": check_id}}
        status(f"   Error inesperado en {check_id}: {type(exc).__name__}: {exc}")
    return report, failure, time.perf_counter() - start


def run(scenario: Scenario) -> RunReport:
    """Ejecuta las verificaciones declaradas en orden de dependencia"""
    order = plan(scenario.checks)
    seeds = {c: check_seed(scenario.seed, c) for c in order}
    result = RunReport(scenario.to_dict(), seeds=seeds)
    if not order:
        status("Escenario sin verificaciones")
        return result
    status(f"Ejecutando {len(order)} verificaciones con {scenario.workers} trabajadores...")
    with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
        outcomes = list(pool.map(lambda c: _execute(scenario, c, seeds[c]), order))
    for check_id, (report, failure, elapsed) in zip(order, outcomes):
        if report is not None:
            result.reports.append(report)
        if failure is not None:
            result.failures.append(failure)
        result.timings[check_id] = elapsed
        stage = REGISTRY[check_id].stage
        result.timings[f"stage:{stage}"] = result.timings.get(f"stage:{stage}", 0.0) + elapsed
    return result


def format_value(value: Any) -> str:
    """Celda CSV: flotantes con 17 cifras significativas"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def plain(value: Any) -> Any:
    """Convierte tipos de numpy en tipos nativos para JSON"""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def csv_rows(report: RunReport) -> List[Dict[str, Any]]:
    rows = [row for r in report.reports for row in r.rows()]
    for failure in report.failures:
        rows.append({"check_id": failure["check_id"], "scale": math.nan, "lhs": math.nan, "rhs": math.nan,
                     "constant": math.nan, "stderr": math.nan, "pass": False})
    return rows


def write_csv(rows: Sequence[Dict[str, Any]], filename: str, columns: Sequence[str] = CSV_COLUMNS) -> str:
    with open(filename, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: format_value(row.get(c, "")) for c in columns})
    return filename


def write_json(doc: Any, filename: str) -> str:
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(plain(doc), sort_keys=True, indent=2, ensure_ascii=False))
        fh.write("\n")
    return filename


def emit(report: RunReport, out_dir: str, formats: Sequence[str] = ("csv", "json")) -> List[str]:
    """Escribe <nombre>.csv y <nombre>.json; los tiempos van aparte"""
    unknown = set(formats) - {"csv", "json"}
    if unknown:
        raise ArgumentError(f"formato desconocido: {sorted(unknown)}")
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, report.scenario["name"])
    paths = []
    if "csv" in formats:
        paths.append(write_csv(csv_rows(report), base + ".csv"))
    if "json" in formats:
        paths.append(write_json(report.to_dict(), base + ".json"))
    paths.append(write_json(report.timings, base + ".timings.json"))
    status(f"Informe guardado en {out_dir}: {', '.join(os.path.basename(p) for p in paths)}")
    return paths
