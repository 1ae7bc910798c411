"""
Boundary PLY IO - Exportación e importación de fronteras en formato PLY
Caras poliédricas de ∂Ω_N (y segmentos en el plano) y nubes de borde con pesos de σ
"""

from typing import Callable, List, Optional

import numpy as np
from plyfile import PlyData, PlyElement

from rectilab_errors import ArgumentError
from rectilab_geometry import PointCloudBoundary, PolyhedralBoundary
from rectilab_log import status


def _lift(points: np.ndarray) -> np.ndarray:
    """Coordenadas de R² se guardan con z = 0"""
    if points.shape[1] == 3:
        return points
    if points.shape[1] == 2:
        return np.column_stack([points, np.zeros(len(points))])
    raise ArgumentError(f"PLY solo admite d = 2, 3 (d = {points.shape[1]})")


def _vertex_element(points: np.ndarray, weights: Optional[np.ndarray] = None) -> PlyElement:
    xyz = _lift(points)
    fields = [("x", "f8"), ("y", "f8"), ("z", "f8")]
    if weights is not None:
        fields.append(("weight", "f8"))
    data = np.empty(len(xyz), dtype=fields)
    data["x"], data["y"], data["z"] = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    if weights is not None:
        data["weight"] = weights
    return PlyElement.describe(data, "vertex")


def _rectangle_corners(axis: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Cuatro esquinas de una celda plana, en orden cíclico"""
    p, q = [b for b in range(3) if b != axis]
    corners = np.repeat(lo[None, :], 4, axis=0)
    corners[[1, 2], p] = hi[p]
    corners[[2, 3], q] = hi[q]
    return corners


def write_polyhedral_ply(boundary: PolyhedralBoundary, filename: str, text: bool = False) -> int:
    """Guarda las celdas de la frontera: caras (d = 3) o aristas (d = 2)"""
    dim = boundary.dim
    count = len(boundary.lo)
    comments = [f"rectilab {boundary.name}", f"dim {dim}"]
    if dim == 3:
        verts = np.vstack([_rectangle_corners(int(a), lo, hi)
                           for a, lo, hi in zip(boundary.axis, boundary.lo, boundary.hi)])
        faces = np.empty(count, dtype=[("vertex_indices", "i4", (4,)), ("axis", "u1"), ("face_id", "i4")])
        faces["vertex_indices"] = np.arange(4 * count).reshape(count, 4)
        faces["axis"] = boundary.axis
        faces["face_id"] = boundary.face_ids
        elements = [_vertex_element(verts), PlyElement.describe(faces, "face")]
    elif dim == 2:
        verts = np.empty((2 * count, 2))
        verts[0::2] = boundary.lo
        verts[1::2] = boundary.hi
        edges = np.empty(count, dtype=[("vertex1", "i4"), ("vertex2", "i4"), ("axis", "u1"), ("face_id", "i4")])
        edges["vertex1"] = np.arange(0, 2 * count, 2)
        edges["vertex2"] = np.arange(1, 2 * count, 2)
        edges["axis"] = boundary.axis
        edges["face_id"] = boundary.face_ids
        elements = [_vertex_element(verts), PlyElement.describe(edges, "edge")]
    else:
        raise ArgumentError(f"PLY solo admite d = 2, 3 (d = {dim})")
    PlyData(elements, text=text, comments=comments).write(filename)
    status(f"PLY guardado: {len(verts)} vértices, {count} celdas en {filename}")
    return count


def _comment_value(plydata: PlyData, key: str) -> Optional[str]:
    for comment in plydata.comments:
        parts = comment.split()
        if len(parts) == 2 and parts[0] == key:
            return parts[1]
    return None


def read_polyhedral_ply(filename: str, inside: Callable[[np.ndarray], np.ndarray],
                        name: Optional[str] = None) -> PolyhedralBoundary:
    """Reconstruye la frontera poliédrica; Ω lo da el oráculo `inside`"""
    plydata = PlyData.read(filename)
    vertex = plydata["vertex"]
    dim = int(_comment_value(plydata, "dim") or 3)
    xyz = np.column_stack([vertex["x"], vertex["y"], vertex["z"]]).astype(float)[:, :dim]
    if dim == 3:
        cells = plydata["face"]
        corners = np.stack([xyz[np.asarray(v, dtype=int)] for v in cells["vertex_indices"]])
    else:
        cells = plydata["edge"]
        corners = np.stack([xyz[np.asarray(cells["vertex1"], dtype=int)],
                            xyz[np.asarray(cells["vertex2"], dtype=int)]], axis=1)
    lo = corners.min(axis=1)
    hi = corners.max(axis=1)
    axis = np.asarray(cells["axis"], dtype=int)
    face_ids = np.asarray(cells["face_id"], dtype=int)
    label = name or _comment_value(plydata, "rectilab") or "polyhedral"
    status(f"PLY cargado: {len(xyz)} vértices, {len(lo)} celdas")
    return PolyhedralBoundary(axis, lo, hi, inside, face_ids=face_ids, name=label)


def write_cloud_ply(cloud: PointCloudBoundary, filename: str, text: bool = False) -> int:
    """Guarda una nube de borde con su peso de σ por punto"""
    comments = ["rectilab point-cloud", f"dim {cloud.dim}", f"spacing {cloud.spacing!r}"]
    PlyData([_vertex_element(cloud.points, cloud.weights)], text=text, comments=comments).write(filename)
    status(f"PLY guardado: {len(cloud.points)} puntos en {filename}")
    return len(cloud.points)


def read_cloud_ply(filename: str, spacing: Optional[float] = None) -> PointCloudBoundary:
    """Carga una nube; sin pesos, reparte σ = 1 por punto"""
    plydata = PlyData.read(filename)
    vertex = plydata["vertex"]
    names: List[str] = list(vertex.data.dtype.names)
    dim = int(_comment_value(plydata, "dim") or 3)
    points = np.column_stack([vertex["x"], vertex["y"], vertex["z"]]).astype(float)[:, :dim]
    weights = np.asarray(vertex["weight"], dtype=float) if "weight" in names else np.ones(len(points))
    if spacing is None:
        stored = _comment_value(plydata, "spacing")
        spacing = float(stored) if stored is not None else 1.0
    status(f"PLY cargado: {len(points)} puntos")
    return PointCloudBoundary(points, weights, spacing=spacing)
