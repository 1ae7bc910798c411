"""
Test Script - Verificación rápida del proyecto Rectilab
Importaciones, PLY y una ejecución mínima de extremo a extremo
"""

import os
import sys
import tempfile

from rectilab_log import set_verbose

set_verbose(False)


def test_imports():
    """Prueba las importaciones principales"""
    print(" Probando importaciones...")
    import numpy
    import plyfile
    import scipy.spatial
    import rectilab
    import rectilab_runner

    assert numpy.__version__
    assert hasattr(scipy.spatial, "cKDTree")
    assert hasattr(plyfile, "PlyData")
    assert callable(rectilab.main)
    assert rectilab_runner.REGISTRY


def test_ply_model():
    """Prueba la escritura y lectura de una frontera en PLY"""
    print(" Probando modelo PLY...")
    from plyfile import PlyData

    from boundary_ply_io import write_polyhedral_ply
    from rectilab_geometry import CantorBoundary

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cantor.ply")
        count = write_polyhedral_ply(CantorBoundary(1), path)
        plydata = PlyData.read(path)
    assert len(plydata["edge"]) == count
    assert len(plydata["vertex"]) == 2 * count


def test_end_to_end():
    """Escenario mínimo: rejilla plana y franja de borde fino"""
    print(" Probando ejecución de un escenario...")
    from rectilab_config import Scenario
    from rectilab_runner import emit, run

    sc = Scenario.from_dict({"schema_version": 1, "name": "humo", "checks": ["dyadic-plane", "thin-boundary"]})
    report = run(sc)
    with tempfile.TemporaryDirectory() as tmp:
        paths = emit(report, tmp)
        assert all(os.path.exists(p) for p in paths)
    assert report.passed


def main():
    """Función principal de pruebas"""
    print(" Rectilab - Test de Verificación")
    print("=" * 50)
    tests = [test_imports, test_ply_model, test_end_to_end]
    passed = 0
    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"    Error en {test.__name__}: {e}")
    print("\n" + "=" * 50)
    print(f" Resultados: {passed}/{len(tests)} pruebas pasaron")
    if passed == len(tests):
        print(" ¡Todas las pruebas pasaron! El laboratorio está listo para usar.")
        print("\n Para ejecutar un escenario:")
        print("   python rectilab.py run halfspace-acceptance")
    else:
        print(" Algunas pruebas fallaron. Revisa los errores anteriores.")
        print("\n Para instalar dependencias faltantes:")
        print("   pip install -r requirements.txt")
    return passed == len(tests)


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
