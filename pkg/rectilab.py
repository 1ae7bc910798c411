"""
Rectilab - Laboratorio de rectificabilidad uniforme y medida armónica
Línea de comandos: escenarios de verificación y herramientas por módulo
"""

import argparse
import json
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from boundary_ply_io import write_polyhedral_ply
from rectilab_config import (BUILTINS, CONFIG_FILE, Scenario, apply_overrides, builtin_scenario,
                             load_defaults, load_scenario)
from rectilab_connectivity import corkscrew, harnack_chain, nta_diagnostics, verify_chain
from rectilab_dyadic import CubeFamily, FlatDyadicGrid, build_grid, verify_grid
from rectilab_errors import ArgumentError, ConfigurationError, RectilabError
from rectilab_functionals import (ConstantField, FunctionalReport, LinearField, PoissonDiskField, ainfty_check,
                                  good_lambda_experiment, nt_max, rh_check, square_function, tb_conditions)
from rectilab_geometry import BoundaryModel, Domain, HyperplanePatch, SurfaceBall
from rectilab_harmonic import (bourgain_check, cfms_check, doubling_check, green_function, poisson_density,
                               pole_change_check, wos_harmonic_measure)
from rectilab_log import set_verbose, status
from rectilab_potential import CZKernel, carleson_ur_functional, nt_max_extension, single_layer, sio_sup_check
from rectilab_runner import (REGISTRY, cone_factory, emit, finite_boundary, grid_sigma_total, plain, run,
                             sample_centers, write_csv, write_json)
from rectilab_whitney import (WhitneyOracle, approx_domain, check_whitney_inequality, halfspace_approximant,
                              sawtooth, whitney_decompose)

POTENTIAL_COLUMNS = ("scale", "value", "normalized", "err_est")
HM_COLUMNS = ("target", "mean", "stderr", "walks", "escaped", "seed")

# Bordes con nombre para --boundary
BOUNDARIES = {
    "plane": {"variant": "hyperplane-patch", "params": {"dim": 3}},
    "unit-patch": {"variant": "hyperplane-patch", "params": {"dim": 3, "lo": 0.0, "hi": 1.0, "infinite": False}},
    "sphere": {"variant": "sphere", "params": {"dim": 3}},
    "ridge": {"variant": "lipschitz-graph", "params": {"slope": 0.5}},
    "slit": {"variant": "slit", "params": {"dim": 3}},
}


def point(text: str) -> Tuple[float, ...]:
    """'x,y,z' → (x, y, z)"""
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"punto no válido: {text!r}") from exc


def cube_key(text: str) -> Tuple[int, ...]:
    """'k,i,j' → (k, i, j)"""
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"clave de cubo no válida: {text!r}") from exc


def boundary_doc(name: str) -> Dict[str, Any]:
    """Borde con nombre, cantor-N o archivo JSON {variant, params, samples}"""
    if name in BOUNDARIES:
        return json.loads(json.dumps(BOUNDARIES[name]))
    if name.startswith("cantor-"):
        try:
            depth = int(name.split("-", 1)[1])
        except ValueError as exc:
            raise ArgumentError(f"profundidad de Cantor no válida: {name}") from exc
        return {"variant": "four-corner-cantor", "params": {"depth": depth}}
    if not os.path.exists(name):
        raise ArgumentError(f"borde desconocido: {name} (internos: {', '.join(BOUNDARIES)}, cantor-N)")
    try:
        with open(name, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"JSON no válido: {exc.msg} (línea {exc.lineno})", name) from exc
    return doc


def scenario_for(args: argparse.Namespace) -> Scenario:
    """Escenario de las herramientas: config.ini, borde y banderas comunes"""
    doc: Dict[str, Any] = {"schema_version": 1, "name": args.command}
    if args.boundary is not None:
        doc["boundary"] = boundary_doc(args.boundary)
    sc = Scenario.from_dict(doc, load_defaults(args.ini))
    return apply_overrides(sc, args.seed, args.workers, args.reference_constants, args.out)


def dyadic_grid(sc: Scenario, E: BoundaryModel):
    """Cuadrados euclídeos sobre el plano; construcción general en otro caso"""
    k_min, k_max = sc.grid["k_min"], sc.grid["k_max"]
    if isinstance(E, HyperplanePatch):
        return FlatDyadicGrid(finite_boundary(E), k_min, k_max)
    return build_grid(E, k_min, k_max, spacing=sc.grid["spacing"], adr_bound=sc.geometry["adr_bound"],
                      seed=sc.seed)


def padded_window(E: BoundaryModel, pad: float) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = E.window()
    return np.asarray(lo, dtype=float) - pad, np.asarray(hi, dtype=float) + pad


def output_path(sc: Scenario, filename: str) -> str:
    os.makedirs(sc.output, exist_ok=True)
    return os.path.join(sc.output, filename)


def save_report(sc: Scenario, stem: str, report: FunctionalReport) -> None:
    """Informe estructurado y tabla de barrido"""
    write_json(report.to_dict(), output_path(sc, stem + ".json"))
    write_csv(report.rows(), output_path(sc, stem + ".csv"))
    mark = "pasa" if report.passed else "falla"
    status(f"{report.check_id} {mark}: constante {report.constant:.6g} → {sc.output}/{stem}.*")


# ---------------------------------------------------------------------------
# Escenarios
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    if args.scenario in BUILTINS:
        sc = builtin_scenario(args.scenario, args.ini)
    else:
        sc = load_scenario(args.scenario, args.ini)
    if args.boundary is not None:
        sc = sc.replace(boundary=boundary_doc(args.boundary))
    sc = apply_overrides(sc, args.seed, args.workers, args.reference_constants, args.out)
    report = run(sc)
    emit(report, sc.output)
    for check_id, outcome in report.statuses().items():
        print(f" {check_id}: {outcome}")
    total = len(report.reports) + len(report.failures)
    print(f" Resultados: {sum(1 for r in report.reports if r.passed)}/{total} verificaciones pasaron")
    return 0 if report.passed else 1


def cmd_list_builtins(args: argparse.Namespace) -> int:
    for name, factory in BUILTINS.items():
        checks = factory().get("checks", [])
        print(f"{name}: {len(checks)} verificaciones")
        for c in checks:
            print(f"  - {c}")
    return 0


def cmd_list_checks(args: argparse.Namespace) -> int:
    for check_id, entry in REGISTRY.items():
        print(f"{check_id} [{entry.stage}] {entry.summary}")
    return 0


# ---------------------------------------------------------------------------
# Rejilla, Whitney y aproximantes
# ---------------------------------------------------------------------------

def cmd_grid(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    grid = dyadic_grid(sc, E)
    if args.action == "stats":
        counts = verify_grid(grid, max_cubes=args.max_cubes, sigma_total=grid_sigma_total(grid))
        write_json(counts, output_path(sc, "grid_stats.json"))
        print(json.dumps(plain(counts), sort_keys=True))
        return 0
    levels: Dict[str, List[Dict[str, Any]]] = {}
    total = 0
    for k in grid.level_range():
        keys = grid.level_keys(k)
        if total + len(keys) > args.max_cubes:
            status(f"Exportación cortada en el nivel {k}: más de {args.max_cubes} cubos")
            break
        levels[str(k)] = [grid.cube(key).to_dict() for key in keys]
        total += len(keys)
    doc = {"boundary": E.to_dict(), "method": grid.method, "k_min": grid.k_min, "cubes": total, "levels": levels}
    write_json(doc, output_path(sc, "grid.json"))
    status(f"Rejilla exportada: {total} cubos en {len(levels)} niveles")
    return 0


def _whitney_cubes(decomp, mask: Optional[np.ndarray] = None) -> List[Dict[str, Any]]:
    keep = np.ones(len(decomp), dtype=bool) if mask is None else mask
    return [{"id": list(key), "side": float(s), "interior": bool(inside)}
            for key, s, inside, ok in zip(decomp.keys(), decomp.sides, decomp.interior, keep) if ok]


def cmd_whitney(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    decomp = whitney_decompose(E, padded_window(E, args.pad), args.side, sc.whitney_config(),
                               min_side=args.min_side)
    violations = check_whitney_inequality(decomp)
    doc = {"boundary": E.to_dict(), "side": args.side, "min_side": args.min_side, "violations": violations,
           "cubes": _whitney_cubes(decomp)}
    write_json(doc, output_path(sc, "whitney.json"))
    status(f"Whitney: {len(decomp)} cubos, {violations} violaciones")
    return 0 if violations == 0 else 1


def cmd_sawtooth(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    with open(args.family, "r", encoding="utf-8") as fh:
        fam_doc = json.load(fh)
    grid = dyadic_grid(sc, E)
    family = CubeFamily(grid, fam_doc.get("keys", []))
    root = tuple(fam_doc["root"]) if fam_doc.get("root") is not None else None
    cfg = sc.whitney_config()
    region = sawtooth(grid, WhitneyOracle(E, args.side, cfg), family, root=root, depth=fam_doc.get("depth"))
    decomp = whitney_decompose(E, padded_window(E, args.pad), args.side, cfg, min_side=args.min_side)
    inside = region.contains(decomp.centers)
    doc = {"kind": region.kind, "family": sorted(list(k) for k in family.keys), "root": fam_doc.get("root"),
           "cubes": _whitney_cubes(decomp, inside)}
    write_json(doc, output_path(sc, "sawtooth.json"))
    status(f"Sawtooth {region.kind}: {int(inside.sum())} de {len(decomp)} cubos de Whitney")
    return 0


def cmd_approx(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    cfg = sc.whitney_config()
    if isinstance(E, HyperplanePatch):
        A = halfspace_approximant(args.N, dim=E.dim, cfg=cfg, face_subdivision=args.face_subdivision)
    else:
        A = approx_domain(dyadic_grid(sc, E), E, args.N, cfg, face_subdivision=args.face_subdivision)
    ply = output_path(sc, f"approx_{args.N}.ply")
    faces = write_polyhedral_ply(A.boundary, ply, text=args.text)
    doc = {"N": A.N, "scale": A.scale, "cubes": len(A.k), "faces": faces, "area": A.boundary.total_area,
           "ply": os.path.basename(ply)}
    write_json(doc, output_path(sc, f"approx_{args.N}.json"))
    return 0


# ---------------------------------------------------------------------------
# Conectividad
# ---------------------------------------------------------------------------

def cmd_connectivity(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    domain = Domain(E, args.side)
    if args.action == "corkscrew":
        center = args.center or tuple(float(v) for v in sample_centers(E, sc.grid["spacing"], 1, sc.seed)[0])
        result = corkscrew(domain, SurfaceBall(center, args.radius), c_min=sc.geometry["c_min"], seed=sc.seed)
        doc = result.to_dict()
    elif args.action == "chain":
        if args.start is None or args.end is None:
            raise ArgumentError("chain requiere --from y --to")
        chain = harnack_chain(domain, args.start, args.end, args.rho, args.lam, sc.whitney_config())
        doc = {"chain": chain.to_dict(), "verify": verify_chain(domain, chain)}
    else:
        centers = [args.center] if args.center else sample_centers(E, sc.grid["spacing"], args.centers, sc.seed)
        scales = args.scale or [math.ldexp(1.0, -k) for k in range(3)]
        doc = nta_diagnostics(domain, centers, scales, c_min=sc.geometry["c_min"], cfg=sc.whitney_config(),
                              seed=sc.seed)
    write_json(doc, output_path(sc, f"connectivity_{args.action}.json"))
    print(json.dumps(plain(doc), sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# Potencial
# ---------------------------------------------------------------------------

def cmd_potential(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    quad = sc.quadrature
    h = args.h or quad["spacing"]
    rows: List[Dict[str, Any]] = []
    if args.action == "slayer":
        X = np.asarray(args.at or [(0.0,) * (E.dim - 1) + (1.0,)])
        res = single_layer(E, args.density, X, order=args.order, h=h)
        delta, _ = E.distance(X)
        mags = np.linalg.norm(np.asarray(res.value, dtype=float).reshape(len(X), -1), axis=1)
        for d, m, err in zip(delta, mags, res.error):
            rows.append({"scale": d, "value": m, "normalized": m * d ** (E.n - 1 + args.order), "err_est": err})
    elif args.action == "carleson":
        center = args.center or tuple(float(v) for v in sample_centers(E, quad["spacing"], 1, sc.seed)[0])
        for r in args.radius or [0.5, 1.0]:
            rep = carleson_ur_functional(E, SurfaceBall(center, r), resolution=quad["resolution"],
                                         refine=not args.no_refine, depth=quad["depth"], subdivide=quad["subdivide"])
            rows.append({"scale": r, "value": rep.value, "normalized": rep.ratio,
                         "err_est": rep.err_est if rep.err_est is not None else math.nan})
    elif args.action == "sio":
        eps = args.eps or [4.0 * h * 2.0 ** j for j in range(4)]
        rep = sio_sup_check(E, CZKernel(dim=E.dim, cutoff=args.cutoff), args.density, eps, h, seed=sc.seed)
        for e, ratio in zip(rep.eps, rep.ratios):
            rows.append({"scale": e, "value": ratio, "normalized": ratio / rep.sup_ratio if rep.sup_ratio else 0.0,
                         "err_est": math.nan})
    else:
        out = nt_max_extension(E, CZKernel(dim=E.dim, cutoff=args.cutoff), args.density, h,
                               levels=(sc.grid["k_min"], sc.grid["k_max"]), targets=args.targets, seed=sc.seed,
                               cfg=sc.whitney_config())
        rows.append({"scale": h, "value": out["lhs"], "normalized": out["C_tau"], "err_est": math.nan})
    path = write_csv(rows, output_path(sc, f"potential_{args.action}.csv"), POTENTIAL_COLUMNS)
    status(f"Potencial {args.action}: {len(rows)} filas en {path}")
    return 0


# ---------------------------------------------------------------------------
# Medida armónica
# ---------------------------------------------------------------------------

def _ball_label(ball: SurfaceBall) -> str:
    return f"B({','.join(f'{c:g}' for c in ball.center)};{ball.radius:g})"


def cmd_hm(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    domain = Domain(E, args.side)
    cfg = sc.walk_config()
    if args.walks is not None:
        cfg = cfg.replace(walks=args.walks)
    pole = args.pole or (0.0,) * (E.dim - 1) + (1.0,)
    target = SurfaceBall(args.center or (0.0,) * E.dim, args.radius)
    rows: List[Dict[str, Any]] = []
    if args.action == "omega":
        est = wos_harmonic_measure(domain, pole, target, cfg)
        rows.append({"target": _ball_label(target), **est.to_dict()})
    elif args.action == "kernel":
        est = poisson_density(domain, pole, target.center, args.s, cfg)
        rows.append({"target": f"k({','.join(f'{c:g}' for c in target.center)})", "mean": est.value,
                     "stderr": est.stderr, "walks": est.walks, "escaped": math.nan, "seed": cfg.seed})
    elif args.action == "green":
        Y = args.at or (0.0,) * (E.dim - 1) + (2.0,)
        est = green_function(domain, pole, Y, cfg)
        rows.append({"target": f"G({','.join(f'{c:g}' for c in Y)})", "mean": est.value, "stderr": est.stderr,
                     "walks": est.walks, "escaped": est.escaped, "seed": cfg.seed})
    else:
        bourgain = bourgain_check(domain, target.center, target.radius, cfg, seed=sc.seed)
        cfms = cfms_check(domain, target, pole, cfg)
        doubling = doubling_check(domain, target, pole, cfg)
        pole_change = pole_change_check(domain, target.scaled(0.25), target, pole, cfg)
        rows = [
            {"target": "bourgain", "mean": bourgain["min"], "stderr": bourgain["min_stderr"], "walks": cfg.walks,
             "escaped": math.nan, "seed": cfg.seed},
            {"target": "cfms", "mean": cfms["ratio"], "stderr": cfms["ratio_stderr"], "walks": cfg.walks,
             "escaped": math.nan, "seed": cfg.seed},
            {"target": "doubling", "mean": doubling["ratio"], "stderr": doubling["stderr"], "walks": cfg.walks,
             "escaped": doubling["escaped"], "seed": cfg.seed},
            {"target": "pole-change", "mean": pole_change["factor"], "stderr": pole_change["lhs_stderr"],
             "walks": cfg.walks, "escaped": math.nan, "seed": cfg.seed},
        ]
        write_json({"bourgain": bourgain, "cfms": cfms, "doubling": doubling, "pole_change": pole_change},
                   output_path(sc, "hm_diag.json"))
    path = write_csv(rows, output_path(sc, f"hm_{args.action}.csv"), HM_COLUMNS)
    status(f"Medida armónica {args.action}: {len(rows)} filas en {path}")
    return 0


# ---------------------------------------------------------------------------
# Funcionales
# ---------------------------------------------------------------------------

def harmonic_field(name: str, dim: int):
    if name == "height":
        return LinearField.height(dim)
    if name == "constant":
        return ConstantField(1.0, dim)
    if name == "poisson-disk":
        return PoissonDiskField((0.0,) * (dim - 1), 1.0, dim)
    raise ArgumentError(f"campo desconocido: {name}")


def cmd_func(args: argparse.Namespace) -> int:
    sc = scenario_for(args)
    E = sc.boundary_model()
    q = sc.functionals["q"]
    root = args.root or (sc.functionals["generations"][0],) + (0,) * E.n
    if args.action in ("rh", "ainfty"):
        domain = Domain(E, "interior")
        ball = SurfaceBall(args.center or (0.0,) * E.dim, args.radius)
        cfg = sc.walk_config()
        if args.action == "rh":
            report = rh_check(domain, ball, sc.functionals["p"], cfg, variant=args.variant or "lq", seed=sc.seed)
        else:
            variant = args.variant or "classic"
            grid = dyadic_grid(sc, E) if variant == "dyadic" else None
            report = ainfty_check(domain, ball, cfg, variant=variant, grid=grid,
                                  key=root if variant == "dyadic" else None, seed=sc.seed)
        save_report(sc, f"func_{args.action}", report)
        return 0
    factory = cone_factory(sc, E, sc.seed)
    u = harmonic_field(args.field, E.dim)
    if args.action == "goodlambda":
        report = good_lambda_experiment(u, factory, root, q=q, truncations=tuple(sc.functionals["generations"]),
                                        seed=sc.seed)
    elif args.action == "tb":
        report = tb_conditions(factory, root, q=q, cfg=sc.walk_config(), seed=sc.seed)
    else:
        x = args.center or tuple(float(v) for v in factory.grid.cube(root).center)
        if args.action == "square":
            value = square_function(u, factory, root, x, variant=args.variant or "gamma", depth=args.depth)
        else:
            value = nt_max(u, factory, root, x, depth=args.depth)
        report = FunctionalReport(f"{args.action}-{args.field}", value, 1.0, value, passed=math.isfinite(value),
                                  scale=math.ldexp(1.0, -root[0]),
                                  details={"root": list(root), "x": list(x), "depth": args.depth})
    save_report(sc, f"func_{args.action}", report)
    return 0


# ---------------------------------------------------------------------------
# Analizador
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="semilla maestra")
    common.add_argument("--workers", type=int, default=None, help="trabajadores (prevalece sobre RECTILAB_WORKERS)")
    common.add_argument("--paper-constants", "--reference-constants", dest="reference_constants",
                        action="store_true", help="constantes de Whitney grandes (C₀ ≥ 1000√n)")
    common.add_argument("--out", default=None, help="directorio de salida")
    common.add_argument("--boundary", default=None,
                        help=f"archivo JSON o borde interno ({', '.join(BOUNDARIES)}, cantor-N)")

    parser = argparse.ArgumentParser(prog="rectilab", description="Laboratorio de rectificabilidad uniforme "
                                     "y medida armónica")
    parser.add_argument("--quiet", action="store_true", help="silencia los mensajes de estado")
    parser.add_argument("--ini", default=CONFIG_FILE, help="archivo de valores por defecto")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="ejecuta un escenario")
    p.add_argument("scenario", help="escenario JSON o nombre interno")
    p.set_defaults(func=cmd_run)
    sub.add_parser("list-builtins", help="escenarios internos").set_defaults(func=cmd_list_builtins)
    sub.add_parser("list-checks", help="verificaciones registradas").set_defaults(func=cmd_list_checks)

    p = sub.add_parser("grid", parents=[common], help="rejilla diádica")
    p.add_argument("action", choices=("build", "stats"))
    p.add_argument("--max-cubes", type=int, default=10_000)
    p.set_defaults(func=cmd_grid)

    for name, func in (("whitney", cmd_whitney), ("sawtooth", cmd_sawtooth)):
        p = sub.add_parser(name, parents=[common], help=f"descomposición {name}")
        p.add_argument("action", choices=("build",))
        p.add_argument("--side", choices=("interior", "exterior"), default="interior")
        p.add_argument("--min-side", type=float, default=1.0 / 16.0)
        p.add_argument("--pad", type=float, default=1.0, help="margen alrededor de la ventana del borde")
        if name == "sawtooth":
            p.add_argument("--family", required=True, help="JSON {keys, root, depth}")
        p.set_defaults(func=func)

    p = sub.add_parser("approx", parents=[common], help="dominio aproximante Ω_N y su frontera en PLY")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--face-subdivision", type=int, default=2)
    p.add_argument("--text", action="store_true", help="PLY en ASCII")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("connectivity", parents=[common], help="sacacorchos y cadenas de Harnack")
    p.add_argument("action", choices=("corkscrew", "chain", "diag"))
    p.add_argument("--side", choices=("interior", "exterior"), default="interior")
    p.add_argument("--center", type=point, default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--from", dest="start", type=point, default=None)
    p.add_argument("--to", dest="end", type=point, default=None)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--scale", type=float, action="append")
    p.add_argument("--centers", type=int, default=3)
    p.set_defaults(func=cmd_connectivity)

    p = sub.add_parser("potential", parents=[common], help="capa simple, Carleson UR, SIO y Ñ de la extensión")
    p.add_argument("action", choices=("slayer", "carleson", "sio", "ntmax"))
    p.add_argument("--at", type=point, action="append")
    p.add_argument("--center", type=point, default=None)
    p.add_argument("--radius", type=float, action="append")
    p.add_argument("--eps", type=float, action="append")
    p.add_argument("--order", type=int, default=0, choices=(0, 1, 2))
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--cutoff", choices=("c2", "cinf"), default="c2")
    p.add_argument("--h", type=float, default=None, help="espaciado de la cuadratura")
    p.add_argument("--targets", type=int, default=32)
    p.add_argument("--no-refine", action="store_true")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("hm", parents=[common], help="medida armónica por caminatas sobre esferas")
    p.add_argument("action", choices=("omega", "kernel", "green", "diag"))
    p.add_argument("--side", choices=("interior", "exterior"), default="interior")
    p.add_argument("--pole", type=point, default=None)
    p.add_argument("--center", type=point, default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--at", type=point, default=None, help="segundo punto de G")
    p.add_argument("--s", type=float, default=0.2, help="radio de diferenciación del núcleo")
    p.add_argument("--walks", type=int, default=None)
    p.set_defaults(func=cmd_hm)

    p = sub.add_parser("func", parents=[common], help="funcionales cuantitativos")
    p.add_argument("action", choices=("square", "ntmax", "goodlambda", "rh", "ainfty", "tb"))
    p.add_argument("--field", choices=("height", "constant", "poisson-disk"), default="height")
    p.add_argument("--root", type=cube_key, default=None)
    p.add_argument("--center", type=point, default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--variant", default=None)
    p.add_argument("--depth", type=int, default=3)
    p.set_defaults(func=cmd_func)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.quiet:
        set_verbose(False)
    try:
        return args.func(args)
    except RectilabError as exc:
        print(f"    Error {type(exc).__name__}: {exc}")
        return 1
    except OSError as exc:
        print(f"    Error de archivo: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
