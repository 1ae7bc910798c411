"""
Test Boundary PLY IO - Caras de ∂Ω_N, aristas del Cantor y nubes con pesos
"""

import os
import sys
import tempfile

import numpy as np
import pytest

from boundary_ply_io import read_cloud_ply, read_polyhedral_ply, write_cloud_ply, write_polyhedral_ply
from rectilab_errors import ArgumentError
from rectilab_geometry import CantorBoundary, PolyhedralBoundary, SphereBoundary
from rectilab_log import set_verbose
from rectilab_whitney import halfspace_approximant

set_verbose(False)


def test_approximant_faces():
    """∂Ω_4 guardado y recargado conserva área y distancias"""
    print(" Probando PLY de ∂Ω_N...")
    A = halfspace_approximant(4)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "omega_4.ply")
        count = write_polyhedral_ply(A.boundary, path)
        loaded = read_polyhedral_ply(path, A.union.contains)
    assert count == len(A.boundary.lo)
    assert loaded.name == "approx-4"
    assert loaded.total_area == pytest.approx(A.boundary.total_area, rel=1e-12)
    assert np.array_equal(loaded.axis, A.boundary.axis)
    probes = np.array([[0.0, 0.0, 0.2], [0.1, -0.05, 0.5], [0.3, 0.3, -0.1]])
    d0, _ = A.boundary.distance(probes)
    d1, _ = loaded.distance(probes)
    assert np.allclose(d0, d1)


def test_cantor_edges_text_format():
    print(" Probando PLY de aristas del Cantor...")
    C = CantorBoundary(2)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cantor.ply")
        write_polyhedral_ply(C, path, text=True)
        with open(path, "rb") as fh:
            header = fh.read(200)
        loaded = read_polyhedral_ply(path, C.interior)
    assert header.startswith(b"ply\nformat ascii")
    assert loaded.dim == 2
    assert loaded.total_area == pytest.approx(4.0)
    assert np.array_equal(loaded.face_ids, C.face_ids)


def test_cloud_weights():
    print(" Probando PLY de nubes de borde...")
    cloud = SphereBoundary(3).sample(0.2)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "sphere.ply")
        assert write_cloud_ply(cloud, path) == len(cloud.points)
        loaded = read_cloud_ply(path)
    assert loaded.spacing == pytest.approx(0.2)
    assert loaded.total_weight == pytest.approx(cloud.total_weight)
    assert np.allclose(loaded.points, cloud.points)


def test_rejects_high_dimension():
    lo = np.zeros((1, 4))
    hi = np.ones((1, 4))
    hi[0, 3] = 0.0
    E = PolyhedralBoundary([3], lo, hi, lambda X: X[:, 3] > 0.0)
    with tempfile.TemporaryDirectory() as tmp:
        with pytest.raises(ArgumentError):
            write_polyhedral_ply(E, os.path.join(tmp, "r4.ply"))


def main():
    """Ejecutar todas las pruebas de PLY"""
    print(" Ejecutando pruebas de PLY")
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
