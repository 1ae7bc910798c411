"""
Ejemplo de uso para Rectilab
Recorre los módulos del laboratorio con casos de fórmula cerrada
"""

import math
import os

import numpy as np


def print_banner():
    """Imprime el banner del proyecto"""
    print("=" * 70)
    print(" Rectilab - Rectificabilidad uniforme y medida armónica")
    print("   Ejemplo de uso y configuración")
    print("=" * 70)


def check_requirements():
    """Verifica que los requisitos estén instalados"""
    print(" Verificando requisitos...")
    missing_modules = []
    for module in ("numpy", "scipy", "plyfile"):
        try:
            __import__(module)
            print(f"    {module}")
        except ImportError:
            print(f"    {module} - No encontrado")
            missing_modules.append(module)
    if missing_modules:
        print(f"\n Faltan módulos: {', '.join(missing_modules)}")
        print("   Ejecuta: python setup.py")
        return False
    print(" Todos los requisitos están instalados")
    return True


def demonstrate_dyadic_grid():
    """Cuadrados diádicos del parche [0,1]² y la franja de borde fino"""
    print("\n Rejilla diádica del parche plano...")
    from rectilab_dyadic import FlatDyadicGrid, thin_boundary_check, verify_grid
    from rectilab_geometry import HyperplanePatch

    grid = FlatDyadicGrid(HyperplanePatch(3, 0.0, 1.0, infinite=False), 0, 4)
    counts = verify_grid(grid, sigma_total=1.0)
    print(f"    {counts['cubes']} cubos, violaciones: "
          f"{sum(v for k, v in counts.items() if k != 'cubes')}")
    for tau in (0.05, 0.1, 0.2):
        print(f"    τ = {tau}: σ(franja)/σ(Q) = {thin_boundary_check(grid, (2, 0, 0), tau):.4f}")


def demonstrate_whitney():
    """Descomposición de Whitney del semiespacio y aproximante Ω_4 en PLY"""
    print("\n Whitney y aproximantes...")
    from boundary_ply_io import write_polyhedral_ply
    from rectilab_geometry import HyperplanePatch
    from rectilab_whitney import check_whitney_inequality, halfspace_approximant, whitney_decompose

    plane = HyperplanePatch(3)
    decomp = whitney_decompose(plane, ([-1.0, -1.0, 0.0], [1.0, 1.0, 2.0]), min_side=1.0 / 8.0)
    print(f"    {len(decomp)} cubos de Whitney, {check_whitney_inequality(decomp)} violaciones")
    A = halfspace_approximant(4)
    os.makedirs("data", exist_ok=True)
    faces = write_polyhedral_ply(A.boundary, os.path.join("data", "omega_4.ply"))
    print(f"    ∂Ω_4: {faces} caras, área {A.boundary.total_area:.4f}")


def demonstrate_single_layer():
    """Teorema de la capa esférica: 𝒮1 = 1/|X| fuera de la esfera y 1 dentro"""
    print("\n Capa simple sobre la esfera unidad...")
    from rectilab_geometry import SphereBoundary
    from rectilab_potential import single_layer

    sphere = SphereBoundary(3)
    X = [[0.0, 0.0, 2.0], [0.0, 0.0, 0.0]]
    closed = single_layer(sphere, 1.0, X)
    quad = single_layer(sphere, 1.0, X, h=0.035, method="points")
    for x, a, b in zip(X, closed.value, quad.value):
        print(f"    X = {x}: cerrada {a:.6f}, cuadratura {b:.6f}")


def demonstrate_harmonic_measure():
    """ω^X del disco unidad desde (0,0,1) y de un casquete desde el centro de la bola"""
    print("\n Medida armónica por caminatas sobre esferas...")
    from rectilab_geometry import Domain, HyperplanePatch, SphereBoundary, SurfaceBall
    from rectilab_harmonic import WalkConfig, wos_harmonic_measure

    cfg = WalkConfig(walks=20_000, seed=1)
    est = wos_harmonic_measure(Domain(HyperplanePatch(3), "interior"), (0.0, 0.0, 1.0),
                               SurfaceBall((0.0, 0.0, 0.0), 1.0), cfg)
    print(f"    semiespacio: {est.mean:.4f} ± {est.stderr:.4f} (exacto {1.0 - 1.0 / math.sqrt(2.0):.4f})")
    sphere = SphereBoundary(3)
    cap = SurfaceBall((0.0, 0.0, 1.0), 1.0)
    est = wos_harmonic_measure(Domain(sphere, "interior"), (0.0, 0.0, 0.0), cap, cfg)
    print(f"    bola: {est.mean:.4f} ± {est.stderr:.4f} (exacto {sphere.cap_area(1.0) / (4.0 * np.pi):.4f})")


def show_builtins():
    """Muestra los escenarios internos"""
    from rectilab_config import BUILTINS

    print("\n Escenarios internos:")
    for name, factory in BUILTINS.items():
        print(f"   {name}: {', '.join(factory().get('checks', [])) or '-'}")


def run_builtin(name):
    """Ejecuta un escenario interno y guarda el informe en results/"""
    from rectilab_config import builtin_scenario
    from rectilab_runner import emit, run

    report = run(builtin_scenario(name))
    emit(report, "results")
    print(f"    {name}: {'pasa' if report.passed else 'falla'}")


def main():
    """Función principal"""
    print_banner()
    if not check_requirements():
        return
    demonstrate_dyadic_grid()
    demonstrate_whitney()
    demonstrate_single_layer()
    demonstrate_harmonic_measure()
    show_builtins()

    while True:
        print("\n" + "=" * 50)
        print(" ¿Qué quieres hacer?")
        print("   1. Ejecutar sphere-geometry")
        print("   2. Ejecutar harmonic-diagnostics")
        print("   3. Ejecutar halfspace-acceptance (lento)")
        print("   4. Salir")
        try:
            choice = input("\n   Selecciona una opción (1-4): ").strip()
            if choice == "1":
                run_builtin("sphere-geometry")
            elif choice == "2":
                run_builtin("harmonic-diagnostics")
            elif choice == "3":
                run_builtin("halfspace-acceptance")
            elif choice == "4":
                print("\n ¡Gracias por usar Rectilab!")
                break
            else:
                print("    Opción no válida")
        except KeyboardInterrupt:
            print("\n\n ¡Hasta luego!")
            break
        except Exception as e:
            print(f"    Error: {e}")


if __name__ == "__main__":
    main()
