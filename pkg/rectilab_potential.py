"""
Rectilab Potential - Solución fundamental, potencial de capa simple y operadores singulares
Funcional de Carleson UR, integrales singulares truncadas y maximales no tangenciales
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rectilab_errors import ArgumentError, ProximityError
from rectilab_geometry import (BoundaryModel, CantorBoundary, HyperplanePatch, PolyhedralBoundary,
                               SphereBoundary, SurfaceBall, as_points, unit_ball_volume, unit_sphere_area)
from rectilab_log import status
from rectilab_whitney import WhitneyConfig, WhitneyOracle, cube_boxes, whitney_decompose

Density = Union[float, Callable[[np.ndarray], np.ndarray]]

CHUNK = 4_000_000
QUADRATURE_RATIO = 1.0


class FundamentalSolution:
    """ℰ(X) = c_n |X|^{1-n}, con ℰ = -log|X|/(2π) en el plano"""

    def __init__(self, dim: int = 3):
        if dim < 2:
            raise ArgumentError(f"dimensión ambiente {dim} < 2")
        self.dim = dim
        self.n = dim - 1
        self.omega = unit_sphere_area(dim)

    @property
    def c_n(self) -> float:
        if self.dim == 2:
            return 1.0 / (2.0 * math.pi)
        return 1.0 / ((self.dim - 2) * self.omega)

    def value(self, R: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.atleast_2d(R), axis=1)
        if self.dim == 2:
            return -np.log(r) / (2.0 * math.pi)
        return self.c_n * r ** (2 - self.dim)

    def gradient(self, R: np.ndarray) -> np.ndarray:
        R = np.atleast_2d(R)
        r = np.linalg.norm(R, axis=1)
        return -R / (self.omega * r ** self.dim)[:, None]

    def hessian(self, R: np.ndarray) -> np.ndarray:
        R = np.atleast_2d(R)
        r2 = np.sum(R * R, axis=1)
        rd = r2 ** (self.dim / 2.0)
        outer = R[:, :, None] * R[:, None, :]
        eye = np.eye(self.dim)[None, :, :]
        return -(eye / rd[:, None, None] - self.dim * outer / (rd * r2)[:, None, None]) / self.omega

    def flux_check(self, radius: float = 1.0, points: int = 4000) -> float:
        """∮_{∂B(0,ρ)} ∇ℰ·ν dσ, igual a -1 si Δℰ = -δ₀"""
        sphere = SphereBoundary(self.dim, radius)
        cloud = sphere.sample((sphere.total_area / points) ** (1.0 / self.n))
        nu = cloud.points / radius
        flux = np.sum(self.gradient(cloud.points) * nu, axis=1)
        return float(np.sum(flux * cloud.weights))


@dataclass
class SingleLayerResult:
    """Valor (orden 0), gradiente (orden 1) o hessiano (orden 2) de 𝒮f"""
    value: np.ndarray
    error: np.ndarray
    order: int
    method: str
    sources: int
    margin: float

    def to_dict(self) -> Dict[str, Any]:
        return {"order": self.order, "method": self.method, "sources": self.sources,
                "margin": self.margin, "max_error": float(np.max(self.error)) if self.error.size else 0.0}


def _density(f: Density, points: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.asarray(f(points), dtype=float).reshape(len(points))
    return np.full(len(points), float(f))


def _chunks(targets: int, sources: int) -> List[slice]:
    step = max(1, CHUNK // max(1, sources))
    return [slice(i, min(i + step, targets)) for i in range(0, targets, step)]


def point_quadrature(X: np.ndarray, points: np.ndarray, weights: np.ndarray, order: int) -> np.ndarray:
    """Σ_y K_order(X - y) w_y sobre una nube"""
    dim = X.shape[1]
    kernel = FundamentalSolution(dim)
    shape = {0: (), 1: (dim,), 2: (dim, dim)}[order]
    out = np.zeros((len(X),) + shape)
    for sl in _chunks(len(X), len(points)):
        R = (X[sl, None, :] - points[None, :, :]).reshape(-1, dim)
        if order == 0:
            K = kernel.value(R)
        elif order == 1:
            K = kernel.gradient(R)
        else:
            K = kernel.hessian(R)
        K = K.reshape((sl.stop - sl.start, len(points)) + shape)
        out[sl] = np.einsum("j,ij...->i...", weights, K)
    return out


def _log_plus(v: np.ndarray, R: np.ndarray, rest2: np.ndarray) -> np.ndarray:
    """log(v + R) estable para v < 0"""
    safe = np.where(v >= 0.0, v + R, 1.0)
    neg = np.where(v < 0.0, rest2 / np.maximum(R - v, 1e-300), 1.0)
    return np.where(v >= 0.0, np.log(safe), np.log(np.maximum(neg, 1e-300)))


def _inv_plus(v: np.ndarray, R: np.ndarray, rest2: np.ndarray) -> np.ndarray:
    """1/(v + R) estable para v < 0"""
    return np.where(v >= 0.0, 1.0 / np.maximum(v + R, 1e-300), (R - v) / np.maximum(rest2, 1e-300))


def _rectangles(X: np.ndarray, axis: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                dens: np.ndarray, order: int) -> np.ndarray:
    """Integrales exactas de ℰ, ∇ℰ, ∇²ℰ sobre paneles rectangulares de R³"""
    shape = {0: (), 1: (3,), 2: (3, 3)}[order]
    out = np.zeros((len(X),) + shape)
    for a in range(3):
        sel = np.nonzero(axis == a)[0]
        if len(sel) == 0:
            continue
        p, q = [b for b in range(3) if b != a]
        for sl in _chunks(len(X), 4 * len(sel)):
            x = X[sl]
            u = np.stack([lo[sel, p][None, :] - x[:, p:p + 1], hi[sel, p][None, :] - x[:, p:p + 1]])
            v = np.stack([lo[sel, q][None, :] - x[:, q:q + 1], hi[sel, q][None, :] - x[:, q:q + 1]])
            z = x[:, a:a + 1] - lo[sel, a][None, :]
            w = dens[sel][None, :] / (4.0 * math.pi)
            acc = np.zeros((len(x), len(sel)) + shape)
            for i, j, sign in ((1, 1, 1.0), (0, 1, -1.0), (1, 0, -1.0), (0, 0, 1.0)):
                U, V = u[i], v[j]
                R = np.sqrt(U * U + V * V + z * z)
                uz2 = U * U + z * z
                vz2 = V * V + z * z
                if order == 0:
                    atan = np.arctan2(U * V, np.abs(z) * R)
                    term = U * _log_plus(V, R, uz2) + V * _log_plus(U, R, vz2) - np.abs(z) * atan
                    acc += sign * term
                elif order == 1:
                    g = np.empty(U.shape + (3,))
                    g[..., p] = -_log_plus(V, R, uz2)
                    g[..., q] = -_log_plus(U, R, vz2)
                    g[..., a] = -np.arctan2(U * V * np.sign(z), np.abs(z) * R)
                    acc += sign * g
                else:
                    iv = _inv_plus(V, R, uz2)
                    iu = _inv_plus(U, R, vz2)
                    H = np.empty(U.shape + (3, 3))
                    H[..., p, p] = U * iv / R
                    H[..., q, q] = V * iu / R
                    H[..., p, q] = H[..., q, p] = 1.0 / R
                    H[..., p, a] = H[..., a, p] = -z * iv / R
                    H[..., q, a] = H[..., a, q] = -z * iu / R
                    H[..., a, a] = -(H[..., p, p] + H[..., q, q])
                    acc += sign * H
            out[sl] += np.einsum("ij,ij...->i...", w, acc)
    return out


def _segments(X: np.ndarray, axis: np.ndarray, lo: np.ndarray, hi: np.ndarray,
              dens: np.ndarray, order: int) -> np.ndarray:
    """Integrales exactas de ℰ, ∇ℰ, ∇²ℰ sobre segmentos alineados de R²"""
    shape = {0: (), 1: (2,), 2: (2, 2)}[order]
    out = np.zeros((len(X),) + shape)
    for a in range(2):
        sel = np.nonzero(axis == a)[0]
        if len(sel) == 0:
            continue
        p = 1 - a
        for sl in _chunks(len(X), 2 * len(sel)):
            x = X[sl]
            z = x[:, a:a + 1] - lo[sel, a][None, :]
            w = -dens[sel][None, :] / (2.0 * math.pi)
            acc = np.zeros((len(x), len(sel)) + shape)
            for end, sign in ((hi, 1.0), (lo, -1.0)):
                U = end[sel, p][None, :] - x[:, p:p + 1]
                R2 = U * U + z * z
                atan = np.arctan2(U * np.sign(z), np.abs(z))
                if order == 0:
                    acc += sign * (0.5 * U * np.log(np.maximum(R2, 1e-300)) - U
                                   + np.abs(z) * np.arctan2(U, np.abs(z)))
                elif order == 1:
                    g = np.empty(U.shape + (2,))
                    g[..., p] = -0.5 * np.log(np.maximum(R2, 1e-300))
                    g[..., a] = atan
                    acc += sign * g
                else:
                    H = np.empty(U.shape + (2, 2))
                    H[..., p, p] = U / R2
                    H[..., p, a] = H[..., a, p] = -z / R2
                    H[..., a, a] = -U / R2
                    acc += sign * H
            out[sl] += np.einsum("ij,ij...->i...", w, acc)
    return out


def panel_quadrature(X: np.ndarray, axis: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                     dens: np.ndarray, order: int) -> np.ndarray:
    """Densidad constante por celda con integración exacta del núcleo"""
    if X.shape[1] == 3:
        return _rectangles(X, axis, lo, hi, dens, order)
    if X.shape[1] == 2:
        return _segments(X, axis, lo, hi, dens, order)
    raise ArgumentError("paneles exactos solo en d = 2, 3")


def _split_cells(axis: np.ndarray, lo: np.ndarray, hi: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Subdivide celdas alineadas en paneles de lado ≤ h"""
    out_axis, out_lo, out_hi = [], [], []
    dim = lo.shape[1]
    for i in range(len(lo)):
        free = [b for b in range(dim) if b != axis[i]]
        counts = [max(1, int(math.ceil((hi[i, b] - lo[i, b]) / h - 1e-9))) for b in free]
        edges = [np.linspace(lo[i, b], hi[i, b], c + 1) for b, c in zip(free, counts)]
        grid = np.stack(np.meshgrid(*[np.arange(c) for c in counts], indexing="ij"), axis=-1).reshape(-1, len(free))
        plo = np.repeat(lo[i][None, :], len(grid), axis=0)
        phi = np.repeat(hi[i][None, :], len(grid), axis=0)
        for col, (b, e) in enumerate(zip(free, edges)):
            plo[:, b] = e[grid[:, col]]
            phi[:, b] = e[grid[:, col] + 1]
        out_axis.append(np.full(len(grid), axis[i]))
        out_lo.append(plo)
        out_hi.append(phi)
    return np.concatenate(out_axis), np.vstack(out_lo), np.vstack(out_hi)


def _plane_cells(E: HyperplanePatch, X: np.ndarray, window: Optional[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if E.infinite:
        if window is None:
            raise ArgumentError("plano infinito: se requiere la semiancho 'window' del parche")
        center = np.mean(X[:, :-1], axis=0)
        lo = np.append(center - window, 0.0)
        hi = np.append(center + window, 0.0)
    else:
        lo = np.append(np.full(E.n, E.lo), 0.0)
        hi = np.append(np.full(E.n, E.hi), 0.0)
    return np.array([E.dim - 1]), lo[None, :], hi[None, :]


def single_layer(E: BoundaryModel, f: Density, X: Any, order: int = 0, h: Optional[float] = None,
                 method: str = "auto", window: Optional[float] = None) -> SingleLayerResult:
    """𝒮f(X), ∇𝒮f(X) o ∇²𝒮f(X) por cuadratura sobre E"""
    if order not in (0, 1, 2):
        raise ArgumentError(f"orden {order} no soportado", {"order": order})
    pts = as_points(X, E.dim)
    delta, _ = E.distance(pts)
    constant = not callable(f)
    if method == "auto":
        if constant and isinstance(E, SphereBoundary) and E.dim == 3:
            method = "analytic"
        elif isinstance(E, (HyperplanePatch, PolyhedralBoundary)) and E.dim in (2, 3):
            method = "panels"
        else:
            method = "points"
    if h is None:
        extent = E.diameter if math.isfinite(E.diameter) else float(window or 1.0)
        h = extent / 64.0
    if method == "analytic":
        if not (constant and isinstance(E, SphereBoundary) and E.dim == 3):
            raise ArgumentError("fórmula cerrada solo para densidad constante sobre esferas de R³")
        margin = E.tolerance(E.radius)
        _check_margin(delta, margin, pts)
        value = _sphere_closed_form(E, float(f), pts, order)
        return SingleLayerResult(value, np.zeros(len(pts)), order, method, 0, margin)
    if method == "panels":
        if isinstance(E, HyperplanePatch):
            axis, lo, hi = _plane_cells(E, pts, window)
        elif isinstance(E, PolyhedralBoundary):
            axis, lo, hi = E.axis, E.lo, E.hi
        else:
            raise ArgumentError("paneles exactos requieren una frontera poliédrica o plana")
        if not constant:
            axis, lo, hi = _split_cells(axis, lo, hi, h)
        mid = 0.5 * (lo + hi)
        dens = _density(f, mid)
        margin = 2.0 * h if not constant else E.tolerance(1.0)
        _check_margin(delta, margin, pts)
        value = panel_quadrature(pts, axis, lo, hi, dens, order)
        if constant:
            error = np.zeros(len(pts))
        else:
            ca, cl, ch = _split_cells(axis, lo, hi, 2.0 * h)
            coarse = panel_quadrature(pts, ca, cl, ch, _density(f, 0.5 * (cl + ch)), order)
            error = _norm_rows(value - coarse)
        return SingleLayerResult(value, error, order, method, len(lo), margin)
    if method != "points":
        raise ArgumentError(f"método desconocido: {method}")
    margin = 2.0 * h
    _check_margin(delta, margin, pts)
    cloud = E.sample(h)
    weights = cloud.weights * _density(f, cloud.points)
    value = point_quadrature(pts, cloud.points, weights, order)
    coarse_cloud = cloud.sample(2.0 * h)
    coarse = point_quadrature(pts, coarse_cloud.points,
                              coarse_cloud.weights * _density(f, coarse_cloud.points), order)
    return SingleLayerResult(value, _norm_rows(value - coarse), order, method, len(cloud.points), margin)


def hessian_checks(E: BoundaryModel, f: Density, X: Any, h: Optional[float] = None,
                   step: float = 1e-4, window: Optional[float] = None) -> Dict[str, float]:
    """Simetría, traza y contraste por diferencias centradas del hessiano analítico"""
    pts = as_points(X, E.dim)
    H = single_layer(E, f, pts, 2, h=h, window=window).value
    scale = np.max(np.abs(H), axis=(1, 2)) + 1e-300
    asym = np.max(np.abs(H - np.transpose(H, (0, 2, 1))), axis=(1, 2)) / scale
    trace = np.abs(np.trace(H, axis1=1, axis2=2)) / scale
    fd = np.zeros_like(H)
    for j in range(E.dim):
        e = np.zeros(E.dim)
        e[j] = step
        plus = single_layer(E, f, pts + e, 1, h=h, window=window).value
        minus = single_layer(E, f, pts - e, 1, h=h, window=window).value
        fd[:, :, j] = (plus - minus) / (2.0 * step)
    fd_error = np.max(np.abs(fd - H), axis=(1, 2)) / scale
    return {"asymmetry": float(asym.max()), "trace": float(trace.max()), "fd_error": float(fd_error.max())}


def _norm_rows(A: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(A.reshape(len(A), -1) ** 2, axis=1))


def _check_margin(delta: np.ndarray, margin: float, pts: np.ndarray) -> None:
    bad = delta < margin
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        raise ProximityError(f"X a distancia {delta[i]:.3e} de E, menor que el margen", margin,
                             {"X": pts[i].tolist()})


def _sphere_closed_form(E: SphereBoundary, c: float, X: np.ndarray, order: int) -> np.ndarray:
    """Teorema de la capa de Newton: 𝒮c = cR²/|X| fuera, cR dentro"""
    R = E.radius
    V = X - E.center
    r = np.linalg.norm(V, axis=1)
    outside = r > R
    mass = c * R * R
    if order == 0:
        return np.where(outside, mass / np.where(outside, r, 1.0), c * R)
    kernel = FundamentalSolution(3)
    Vs = np.where(outside[:, None], V, 1.0)
    scale = 4.0 * math.pi * mass
    if order == 1:
        return np.where(outside[:, None], scale * kernel.gradient(Vs), 0.0)
    return np.where(outside[:, None, None], scale * kernel.hessian(Vs), 0.0)


@dataclass
class CarlesonReport:
    """Funcional de Carleson UR sobre una bola"""
    ball: SurfaceBall
    value: float
    ratio: float
    resolution: int
    collar: float
    points: int
    refined_ratio: Optional[float] = None
    err_est: Optional[float] = None
    extrapolated: Optional[float] = None
    patch: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"center": list(self.ball.center), "radius": self.ball.radius, "value": self.value,
                "ratio": self.ratio, "resolution": self.resolution, "collar": self.collar,
                "points": self.points, "refined_ratio": self.refined_ratio, "err_est": self.err_est,
                "extrapolated": self.extrapolated, "patch": self.patch}


def volume_nodes(E: BoundaryModel, lo: np.ndarray, hi: np.ndarray, min_side: float,
                 subdivide: int = 2, side: str = "both") -> Tuple[np.ndarray, np.ndarray, float]:
    """Nodos de punto medio sobre cubos de Whitney finos de la ventana"""
    cfg = WhitneyConfig(ratio=QUADRATURE_RATIO)
    decomp = whitney_decompose(E, (lo, hi), side=side, cfg=cfg, min_side=min_side, check=False)
    blo, bhi = decomp.boxes()
    dim = E.dim
    offs = (np.stack(np.meshgrid(*([np.arange(subdivide)] * dim), indexing="ij"), axis=-1)
            .reshape(-1, dim) + 0.5) / subdivide
    span = bhi - blo
    nodes = (blo[:, None, :] + offs[None, :, :] * span[:, None, :]).reshape(-1, dim)
    vol = np.repeat(np.prod(span, axis=1) / subdivide ** dim, len(offs))
    inside = np.all((nodes > lo) & (nodes < hi), axis=1)
    collar = float(decomp.sides.min()) if len(decomp) else min_side
    return nodes[inside], vol[inside], collar


def _carleson_once(E: BoundaryModel, ball: SurfaceBall, level: int, depth: int,
                   subdivide: int, h: Optional[float]) -> Tuple[float, float, int, Optional[float]]:
    x0 = np.asarray(ball.center, dtype=float)
    r = ball.radius
    lo, hi = x0 - r, x0 + r
    min_side = r * 2.0 ** (-(depth + level))
    nodes, vol, collar = volume_nodes(E, lo, hi, min_side, subdivide)
    keep = np.linalg.norm(nodes - x0, axis=1) < r
    nodes, vol = nodes[keep], vol[keep]
    if len(nodes) == 0:
        return 0.0, collar, 0, None
    delta, _ = E.distance(nodes)
    patch = None
    if isinstance(E, HyperplanePatch) and E.infinite:
        patch = 32.0 * r * 4.0 ** level
        H = single_layer(E, 1.0, nodes, 2, window=patch).value
    else:
        hq = h if h is not None else 0.5 * min_side
        H = single_layer(E, 1.0, nodes, 2, h=hq).value
    energy = np.sum(H * H, axis=(1, 2))
    return float(np.sum(energy * delta * vol)), collar, len(nodes), patch


def carleson_ur_functional(E: BoundaryModel, ball: SurfaceBall, resolution: int = 0,
                           refine: bool = True, depth: int = 5, subdivide: int = 2,
                           h: Optional[float] = None) -> CarlesonReport:
    """∬_{B∖E} |∇²𝒮1|² δ dX / r^n con estimación de Richardson"""
    x0 = np.asarray(ball.center, dtype=float)
    d0, _ = E.distance(x0)
    if d0[0] > E.tolerance(ball.radius):
        raise ArgumentError(f"la bola no está centrada en E (δ = {d0[0]:.3e})", {"center": x0.tolist()})
    if math.isfinite(E.diameter) and ball.radius > E.diameter * (1 + 1e-12):
        raise ArgumentError(f"r = {ball.radius} > diam(E) = {E.diameter:.4g}")
    n = E.n
    value, collar, count, patch = _carleson_once(E, ball, resolution, depth, subdivide, h)
    report = CarlesonReport(ball, value, value / ball.radius ** n, resolution, collar, count, patch=patch)
    if refine:
        fine, _, _, _ = _carleson_once(E, ball, resolution + 1, depth, subdivide,
                                       None if h is None else 0.5 * h)
        report.refined_ratio = fine / ball.radius ** n
        report.err_est = abs(report.refined_ratio - report.ratio)
        report.extrapolated = report.refined_ratio + (report.refined_ratio - report.ratio) / 3.0
    status(f"Carleson UR r={ball.radius:.3g}: razón {report.ratio:.4e} ({count} nodos)")
    return report


@dataclass
class GlobalL2Report:
    """Comparación ∬|∇²𝒮f|²δ frente a ∫|f|²dσ y su forma cónica"""
    lhs: float
    rhs: float
    ratio: float
    conical: float
    cone_ratio: float
    resolution: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def global_l2_check(E: BoundaryModel, f: Density, resolution: int = 0,
                    window: Optional[Tuple[Any, Any]] = None, depth: int = 4,
                    h: Optional[float] = None, aperture: float = 2.0) -> GlobalL2Report:
    """Cota L² global de ∇²𝒮f y comparabilidad vertical/cónica"""
    if window is None:
        wlo, whi = E.window()
        pad = 0.5 * float(np.max(whi - wlo))
        window = (wlo - pad, whi + pad)
    lo = np.asarray(window[0], dtype=float)
    hi = np.asarray(window[1], dtype=float)
    extent = float(np.max(hi - lo))
    min_side = extent * 2.0 ** (-(depth + resolution))
    hq = h if h is not None else 0.5 * min_side
    cloud = E.sample(hq)
    fy = _density(f, cloud.points)
    rhs = float(np.sum(fy * fy * cloud.weights))
    nodes, vol, _ = volume_nodes(E, lo, hi, min_side)
    if rhs == 0.0 or len(nodes) == 0:
        return GlobalL2Report(0.0, rhs, 0.0, 0.0, 0.0, resolution)
    delta, _ = E.distance(nodes)
    method = "points" if isinstance(E, SphereBoundary) else "auto"
    H = single_layer(E, f, nodes, 2, h=hq, method=method).value
    energy = np.sum(H * H, axis=(1, 2))
    lhs = float(np.sum(energy * delta * vol))
    shadow = _cone_shadow(cloud, nodes, aperture * delta, math.sqrt(aperture ** 2 - 1.0) * delta)
    conical = float(np.sum(energy * delta ** (1 - E.n) * shadow * vol))
    return GlobalL2Report(lhs, rhs, lhs / rhs, conical, conical / lhs if lhs > 0 else 0.0, resolution)


def _cone_shadow(cloud: Any, X: np.ndarray, radius: np.ndarray, flat: np.ndarray) -> np.ndarray:
    """σ(E ∩ B(X, aperture·δ)) por la nube; aproximación plana bajo la resolución"""
    hits = cloud.index.tree.query_ball_point(X, radius)
    mass = np.array([float(cloud.weights[i].sum()) if len(i) else 0.0 for i in hits])
    n = cloud.dim - 1
    coarse = radius < 2.0 * cloud.spacing
    mass[coarse] = unit_ball_volume(n) * flat[coarse] ** n
    return mass


def smoothstep(rho: np.ndarray) -> np.ndarray:
    """Corte C²: 0 en ρ ≤ 1, 1 en ρ ≥ 2"""
    s = np.clip(rho - 1.0, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def smooth_bump(rho: np.ndarray) -> np.ndarray:
    """Corte C^∞ por cociente de exponenciales"""
    s = np.clip(rho - 1.0, 0.0, 1.0)
    a = np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
    b = np.where(s < 1.0, np.exp(-1.0 / np.where(s < 1.0, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


@dataclass
class CZKernel:
    """Núcleo de Riesz K(x) = x/|x|^{n+1} con corte suave Φ(|x|/ε)"""
    dim: int = 3
    cutoff: str = "c2"
    name: str = "riesz"

    def __post_init__(self):
        if self.cutoff not in ("c2", "cinf"):
            raise ArgumentError(f"corte desconocido: {self.cutoff}")

    @property
    def n(self) -> int:
        return self.dim - 1

    def phi(self, rho: np.ndarray) -> np.ndarray:
        return smoothstep(rho) if self.cutoff == "c2" else smooth_bump(rho)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        r = np.linalg.norm(x, axis=1)
        return x / (r ** self.dim)[:, None]

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """∂_j K_i"""
        x = np.atleast_2d(x)
        d = self.dim
        r2 = np.sum(x * x, axis=1)
        rd = r2 ** (d / 2.0)
        eye = np.eye(d)[None, :, :]
        return eye / rd[:, None, None] - d * x[:, :, None] * x[:, None, :] / (rd * r2)[:, None, None]

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """∂_k ∂_j K_i"""
        x = np.atleast_2d(x)
        d = self.dim
        r2 = np.sum(x * x, axis=1)
        r_d2 = r2 ** (d / 2.0 + 1.0)
        r_d4 = r_d2 * r2
        eye = np.eye(d)
        sym = (eye[None, :, :, None] * x[:, None, None, :] + eye[None, :, None, :] * x[:, None, :, None]
               + eye[None, None, :, :] * x[:, :, None, None])
        cube = x[:, :, None, None] * x[:, None, :, None] * x[:, None, None, :]
        return -d * sym / r_d2[:, None, None, None] + d * (d + 2) * cube / r_d4[:, None, None, None]

    def truncated(self, x: np.ndarray, eps: float) -> np.ndarray:
        x = np.atleast_2d(x)
        r = np.linalg.norm(x, axis=1)
        weight = self.phi(r / eps)
        safe = np.where(r > 0.0, 1.0, 0.0)[:, None]
        xs = np.where(r[:, None] > 0.0, x, 1.0)
        return weight[:, None] * safe * self.evaluate(xs)

    def oddness(self, samples: int = 64, seed: int = 0) -> float:
        x = np.random.default_rng(seed).standard_normal((samples, self.dim))
        return float(np.max(np.abs(self.evaluate(x) + self.evaluate(-x))))


def kernel_size_constants(K: CZKernel, radii: Optional[Sequence[float]] = None,
                          directions: int = 64, seed: int = 0) -> Dict[int, float]:
    """C_m = max |∇^m K(x)|·|x|^{n+m}, m = 0, 1, 2"""
    if radii is None:
        radii = np.logspace(-3, 3, 13)
    g = np.random.default_rng(seed).standard_normal((directions, K.dim))
    unit = g / np.linalg.norm(g, axis=1, keepdims=True)
    consts = {0: 0.0, 1: 0.0, 2: 0.0}
    for r in radii:
        x = r * unit
        for m, values in ((0, K.evaluate(x)), (1, K.gradient(x)), (2, K.hessian(x))):
            size = np.sqrt(np.sum(values.reshape(len(x), -1) ** 2, axis=1))
            consts[m] = max(consts[m], float(np.max(size)) * r ** (K.n + m))
    return consts


@dataclass
class SioReport:
    """Barrido en ε de ‖T_ε f‖²/‖f‖²"""
    eps: List[float]
    ratios: List[float]
    sup_ratio: float
    targets: int
    spacing: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def truncated_sio(E: BoundaryModel, K: CZKernel, f: Density, eps: float, h: float,
                  targets: Optional[Any] = None, max_targets: int = 2048, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """T_ε f(x) = Σ_y K_ε(x - y) f(y) w_y; devuelve (x, T_ε f(x))"""
    if not eps > 2.0 * h:
        raise ArgumentError(f"ε = {eps} por debajo de la resolución 2h = {2.0 * h}", {"eps": eps, "h": h})
    cloud = E.sample(h)
    fy = _density(f, cloud.points) * cloud.weights
    if targets is None:
        x = cloud.points
        if len(x) > max_targets:
            pick = np.random.default_rng(seed).choice(len(x), max_targets, replace=False)
            x = x[np.sort(pick)]
    else:
        x = as_points(targets, E.dim)
    out = np.zeros((len(x), E.dim))
    for sl in _chunks(len(x), len(cloud.points)):
        R = (x[sl, None, :] - cloud.points[None, :, :]).reshape(-1, E.dim)
        Kv = K.truncated(R, eps).reshape(sl.stop - sl.start, len(cloud.points), E.dim)
        out[sl] = np.einsum("j,ijk->ik", fy, Kv)
    return x, out


def sio_sup_check(E: BoundaryModel, K: CZKernel, f: Density, eps_grid: Sequence[float], h: float,
                  max_targets: int = 2048, seed: int = 0) -> SioReport:
    """sup_ε ‖T_ε f‖²_{L²(σ)} / ‖f‖²_{L²(σ)} sobre la nube"""
    cloud = E.sample(h)
    fy = _density(f, cloud.points)
    norm_f = float(np.sum(fy * fy * cloud.weights))
    if norm_f == 0.0:
        raise ArgumentError("f idénticamente nula en la muestra")
    idx = np.arange(len(cloud.points))
    if len(idx) > max_targets:
        idx = np.sort(np.random.default_rng(seed).choice(len(idx), max_targets, replace=False))
    w = cloud.weights[idx] * cloud.weights.sum() / cloud.weights[idx].sum()
    ratios = []
    for eps in eps_grid:
        _, T = truncated_sio(E, K, f, eps, h, targets=cloud.points[idx])
        ratios.append(float(np.sum(np.sum(T * T, axis=1) * w)) / norm_f)
    report = SioReport(list(map(float, eps_grid)), ratios, max(ratios), len(idx), h)
    status(f"SIO truncada: sup razón {report.sup_ratio:.4e} sobre {len(eps_grid)} valores de ε")
    return report


@dataclass
class CantorContrastReport:
    """Carleson UR y sup de la SIO del Cantor frente a la recta, por profundidad"""
    depths: List[int]
    carleson: List[float]
    sio: List[float]
    plane: List[float]
    plane_sio: List[float]

    @property
    def plane_drift(self) -> float:
        """max/min del funcional de Carleson de la recta entre profundidades"""
        lo = min(self.plane)
        return max(self.plane) / lo if lo > 0 else math.inf

    @property
    def sio_factor(self) -> float:
        """sup de la SIO del Cantor sobre el de la recta en la profundidad más fina"""
        return self.sio[-1] / self.plane_sio[-1] if self.plane_sio[-1] > 0 else math.inf

    def to_dict(self) -> Dict[str, Any]:
        doc = dict(self.__dict__)
        doc.update(plane_drift=self.plane_drift, sio_factor=self.sio_factor)
        return doc


def cantor_contrast(depths: Sequence[int], depth: int = 5, subdivide: int = 2, max_targets: int = 1024,
                    seed: int = 0) -> CantorContrastReport:
    """Cantor de cuatro esquinas y recta medidos con la misma cuadratura en cada profundidad m"""
    if not depths:
        raise ArgumentError("se requiere al menos una profundidad de Cantor")
    ball = SurfaceBall((0.0, 0.0), 0.5)
    line = HyperplanePatch(2)
    kernel = CZKernel(dim=2)
    report = CantorContrastReport([], [], [], [], [])
    for m in depths:
        C = CantorBoundary(m)
        # celdas de cuadratura de lado ℓ/4 sobre los cuadrados de la generación m
        level_depth = max(depth, 2 * int(m) + 1)
        h = C.side / 4.0
        eps = [3.0 * h * 2.0 ** j for j in range(max(0, int(math.log2(0.5 / (3.0 * h)))) + 1)]
        for E, carleson, sio in ((C, report.carleson, report.sio), (line, report.plane, report.plane_sio)):
            carleson.append(carleson_ur_functional(E, ball, depth=level_depth, subdivide=subdivide,
                                                   refine=False).ratio)
            sio.append(sio_sup_check(E, kernel, 1.0, eps, h, max_targets=max_targets, seed=seed).sup_ratio)
        report.depths.append(int(m))
        status(f"Cantor m={m}: Carleson {report.carleson[-1]:.4e} (recta {report.plane[-1]:.4e}), "
               f"SIO {report.sio[-1]:.4e} (recta {report.plane_sio[-1]:.4e})")
    return report


def extension_operator(E: BoundaryModel, K: CZKernel, f: Density, X: Any, h: float) -> np.ndarray:
    """𝒯_E f(X) = ∫_E K(X - y) f(y) dσ(y) para X fuera de E"""
    pts = as_points(X, E.dim)
    delta, _ = E.distance(pts)
    _check_margin(delta, 2.0 * h, pts)
    cloud = E.sample(h)
    fy = _density(f, cloud.points) * cloud.weights
    out = np.zeros((len(pts), E.dim))
    for sl in _chunks(len(pts), len(cloud.points)):
        R = (pts[sl, None, :] - cloud.points[None, :, :]).reshape(-1, E.dim)
        out[sl] = np.einsum("j,ijk->ik", fy, K.evaluate(R).reshape(sl.stop - sl.start, -1, E.dim))
    return out


def default_tau(dim: int, cfg: Optional[WhitneyConfig] = None) -> float:
    cfg = cfg or WhitneyConfig()
    return cfg.max_ratio * 2.0 * math.sqrt(dim)


@dataclass
class NonTangentialRegion:
    """Υ_τ(x) = ∪ I* con dist(I, x) < τ ℓ(I)"""
    boundary: BoundaryModel
    x: np.ndarray
    tau: float
    oracle: WhitneyOracle

    def contains(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.boundary.dim)
        G, k, idx = self.oracle.fattened_candidates(pts, 1.0)
        out = np.zeros(len(pts), dtype=bool)
        if len(G):
            lo, hi = cube_boxes(k, idx)
            gap = np.maximum(0.0, np.maximum(lo - self.x, self.x - hi))
            ok = np.linalg.norm(gap, axis=1) < self.tau * np.ldexp(1.0, -k)
            out[G[ok]] = True
        return out

    def cubes(self, k_lo: int, k_hi: int, max_candidates: int = 3_000_000) -> Tuple[np.ndarray, np.ndarray]:
        """Cubos de Whitney de Υ con niveles en [k_lo, k_hi]"""
        dim = self.boundary.dim
        ks, ids = [], []
        for k in range(k_lo, k_hi + 1):
            s = math.ldexp(1.0, -k)
            a = np.floor((self.x - self.tau * s) / s).astype(np.int64)
            b = np.floor((self.x + self.tau * s) / s).astype(np.int64)
            if np.prod(b - a + 1) > max_candidates:
                raise ArgumentError(f"demasiados candidatos en el nivel {k}", {"tau": self.tau})
            idx = np.stack(np.meshgrid(*[np.arange(p, q + 1) for p, q in zip(a, b)], indexing="ij"),
                           axis=-1).reshape(-1, dim)
            kk = np.full(len(idx), k)
            lo, hi = cube_boxes(kk, idx)
            gap = np.maximum(0.0, np.maximum(lo - self.x, self.x - hi))
            near = np.linalg.norm(gap, axis=1) < self.tau * s
            idx, kk = idx[near], kk[near]
            if len(idx) == 0:
                continue
            lo, hi = cube_boxes(kk, idx)
            lk, lidx, valid = self.oracle.locate(0.5 * (lo + hi))
            maximal = valid & (lk == k)
            ks.append(kk[maximal])
            ids.append(idx[maximal])
        if not ks:
            return np.zeros(0, dtype=int), np.zeros((0, dim), dtype=np.int64)
        return np.concatenate(ks), np.vstack(ids)

    def samples(self, k_lo: int, k_hi: int, vertices: bool = True) -> np.ndarray:
        k, idx = self.cubes(k_lo, k_hi)
        if len(k) == 0:
            return np.zeros((0, self.boundary.dim))
        lo, hi = cube_boxes(k, idx, self.oracle.cfg.lam)
        pts = [0.5 * (lo + hi)]
        if vertices:
            dim = self.boundary.dim
            corners = np.stack(np.meshgrid(*([[0.0, 1.0]] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
            shrink = 1.0 - 1e-9
            mid = 0.5 * (lo + hi)
            for c in corners:
                pts.append(mid + shrink * (lo + c * (hi - lo) - mid))
        return np.vstack(pts)


def nontangential_region(E: BoundaryModel, x: Any, tau: Optional[float] = None,
                         cfg: Optional[WhitneyConfig] = None) -> NonTangentialRegion:
    tau = default_tau(E.dim, cfg) if tau is None else tau
    if not tau > 0:
        raise ArgumentError(f"τ = {tau} debe ser positivo")
    return NonTangentialRegion(E, np.asarray(x, dtype=float), float(tau), WhitneyOracle(E, None, cfg))


def nt_max(F: Callable[[np.ndarray], np.ndarray], E: BoundaryModel, x: Any, tau: Optional[float] = None,
           levels: Tuple[int, int] = (0, 4), vertices: bool = True,
           cfg: Optional[WhitneyConfig] = None) -> float:
    """N_{*,τ}F(x) = sup |F| sobre las muestras de Υ_τ(x)"""
    region = nontangential_region(E, x, tau, cfg)
    pts = region.samples(levels[0], levels[1], vertices)
    if len(pts) == 0:
        return 0.0
    values = np.asarray(F(pts), dtype=float)
    size = np.sqrt(np.sum(values.reshape(len(pts), -1) ** 2, axis=1))
    return float(np.max(size))


def nt_max_extension(E: BoundaryModel, K: CZKernel, f: Density, h: float, tau: Optional[float] = None,
                     levels: Tuple[int, int] = (0, 4), targets: int = 32, seed: int = 0,
                     cfg: Optional[WhitneyConfig] = None) -> Dict[str, float]:
    """‖N_{*,τ}(𝒯f)‖² frente a ‖f‖² sobre una submuestra de E"""
    cloud = E.sample(h)
    fy = _density(f, cloud.points)
    norm_f = float(np.sum(fy * fy * cloud.weights))
    if norm_f == 0.0:
        raise ArgumentError("f idénticamente nula en la muestra")
    pick = np.arange(len(cloud.points))
    if len(pick) > targets:
        pick = np.sort(np.random.default_rng(seed).choice(len(pick), targets, replace=False))
    w = cloud.weights[pick] * cloud.weights.sum() / cloud.weights[pick].sum()
    values = []
    for x in cloud.points[pick]:
        region = nontangential_region(E, x, tau, cfg)
        pts = region.samples(levels[0], levels[1], vertices=False)
        if len(pts) == 0:
            values.append(0.0)
            continue
        pts = pts[E.distance(pts)[0] >= 2.0 * h]
        T = extension_operator(E, K, f, pts, h) if len(pts) else np.zeros((0, E.dim))
        values.append(float(np.max(np.linalg.norm(T, axis=1))) if len(T) else 0.0)
    values = np.asarray(values)
    lhs = float(np.sum(values ** 2 * w))
    return {"lhs": lhs, "rhs": norm_f, "C_tau": lhs / norm_f, "targets": len(pick)}
