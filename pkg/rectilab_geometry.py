"""
Rectilab Geometry - Modelos de borde, medida de superficie y distancias
Primitivas del espacio ambiente, bolas de superficie y verificador ADR
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import betainc, gamma

from rectilab_errors import ArgumentError, DomainError

ANALYTIC_TOLERANCE = 1e-9
QUERY_CHUNK = 2048


def unit_ball_volume(n: int) -> float:
    """Volumen de la bola unidad de R^n"""
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


def unit_sphere_area(d: int) -> float:
    """Área de la esfera unidad de R^d (ω_d)"""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def as_points(X: Any, dim: int) -> np.ndarray:
    """Convierte a un arreglo (m, dim) de puntos finitos"""
    pts = np.atleast_2d(np.asarray(X, dtype=float))
    if pts.shape[-1] != dim:
        raise ArgumentError(f"se esperaban puntos de dimensión {dim}, llegó {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ArgumentError("coordenadas no finitas")
    return pts


def box_gap(lo_a: np.ndarray, hi_a: np.ndarray, lo_b: np.ndarray, hi_b: np.ndarray) -> np.ndarray:
    """Distancia euclídea entre cajas alineadas (vectorizada)"""
    gap = np.maximum(0.0, np.maximum(lo_b - hi_a, lo_a - hi_b))
    return np.sqrt(np.sum(gap * gap, axis=-1))


def _lexicographic_first(groups: np.ndarray, dist: np.ndarray, points: np.ndarray,
                         n_groups: int) -> np.ndarray:
    """Índice del candidato más cercano por grupo, empates por orden lexicográfico"""
    dmin = np.full(n_groups, np.inf)
    np.minimum.at(dmin, groups, dist)
    tie = dist <= dmin[groups] * (1.0 + 1e-12) + 1e-15
    keys = [points[:, a] for a in range(points.shape[1] - 1, -1, -1)]
    order = np.lexsort(tuple(keys) + (~tie, groups))
    sorted_groups = groups[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_groups[1:] != sorted_groups[:-1]
    chosen = np.full(n_groups, -1, dtype=int)
    chosen[sorted_groups[first]] = order[first]
    return chosen


class BoxIndex:
    """Índice KD sobre cajas alineadas (puntos, celdas de caras)"""

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.centers = 0.5 * (self.lo + self.hi)
        half = 0.5 * np.linalg.norm(self.hi - self.lo, axis=1)
        self.reach = float(half.max()) if len(half) else 0.0
        self.tree = cKDTree(self.centers)

    def _candidates(self, qlo: np.ndarray, qhi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        centers = 0.5 * (qlo + qhi)
        half = 0.5 * np.linalg.norm(qhi - qlo, axis=1)
        d_c, _ = self.tree.query(centers)
        radius = d_c * (1.0 + 1e-12) + half + self.reach + 1e-15
        lists = self.tree.query_ball_point(centers, radius)
        sizes = np.fromiter((len(c) for c in lists), dtype=int, count=len(lists))
        groups = np.repeat(np.arange(len(lists)), sizes)
        idx = np.fromiter((i for c in lists for i in c), dtype=int, count=int(sizes.sum()))
        return groups, idx

    def box_distance(self, qlo: Any, qhi: Any) -> np.ndarray:
        """Distancia exacta de cada caja consulta a la caja indexada más cercana"""
        qlo = np.atleast_2d(np.asarray(qlo, dtype=float))
        qhi = np.atleast_2d(np.asarray(qhi, dtype=float))
        out = np.empty(len(qlo))
        for start in range(0, len(qlo), QUERY_CHUNK):
            sl = slice(start, start + QUERY_CHUNK)
            groups, idx = self._candidates(qlo[sl], qhi[sl])
            dist = box_gap(qlo[sl][groups], qhi[sl][groups], self.lo[idx], self.hi[idx])
            best = np.full(len(qlo[sl]), np.inf)
            np.minimum.at(best, groups, dist)
            out[sl] = best
        return out

    def nearest(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distancia, punto más cercano e índice de caja para cada punto"""
        X = np.atleast_2d(X)
        dist_out = np.empty(len(X))
        near_out = np.empty_like(X)
        index_out = np.empty(len(X), dtype=int)
        for start in range(0, len(X), QUERY_CHUNK):
            sl = slice(start, start + QUERY_CHUNK)
            Xc = X[sl]
            groups, idx = self._candidates(Xc, Xc)
            proj = np.clip(Xc[groups], self.lo[idx], self.hi[idx])
            dist = np.linalg.norm(Xc[groups] - proj, axis=1)
            chosen = _lexicographic_first(groups, dist, proj, len(Xc))
            dist_out[sl] = dist[chosen]
            near_out[sl] = proj[chosen]
            index_out[sl] = idx[chosen]
        return dist_out, near_out, index_out


@dataclass(frozen=True)
class Ball:
    """Bola abierta B(center, radius)"""
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ArgumentError(f"radio no positivo: {self.radius}")

    def contains(self, X: Any) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(pts - np.asarray(self.center), axis=1) < self.radius


@dataclass(frozen=True)
class SurfaceBall:
    """Bola de superficie Δ(x, r) = B(x, r) ∩ E"""
    center: Tuple[float, ...]
    radius: float
    boundary_id: str = ""

    def __post_init__(self):
        if not self.radius > 0:
            raise ArgumentError(f"radio no positivo: {self.radius}")

    def scaled(self, factor: float) -> "SurfaceBall":
        return SurfaceBall(self.center, self.radius * factor, self.boundary_id)

    @property
    def point(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


class BoundaryModel:
    """Conjunto de borde n-dimensional en R^(n+1) con medida σ = H^n"""

    variant = "abstract"

    def __init__(self, dim: int, diameter: float = math.inf):
        if dim < 2:
            raise ArgumentError(f"dimensión ambiente d={dim} < 2")
        self.dim = int(dim)
        self.diameter = float(diameter)

    @property
    def n(self) -> int:
        return self.dim - 1

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.diameter)

    @property
    def identity(self) -> str:
        return f"{self.variant}:{id(self)}"

    def tolerance(self, scale: float = 1.0) -> float:
        """Tolerancia de pertenencia al borde"""
        return ANALYTIC_TOLERANCE * max(scale, 1e-300)

    def window(self) -> Tuple[np.ndarray, np.ndarray]:
        """Caja que acota la parte relevante del borde"""
        raise NotImplementedError

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        """δ(X) y punto más cercano x̂ (vectorizado)"""
        raise NotImplementedError

    def box_distance(self, lo: Any, hi: Any) -> np.ndarray:
        """Distancia exacta de cajas alineadas al borde"""
        raise NotImplementedError

    def sigma_ball(self, x: Any, r: float) -> float:
        """σ(B(x, r) ∩ E) sin verificar el centro"""
        raise NotImplementedError

    def interior(self, X: np.ndarray) -> np.ndarray:
        """Pertenencia al lado designado como Ω"""
        raise NotImplementedError

    def contains(self, X: Any, side: str = "interior") -> np.ndarray:
        """X ∈ Ω (interior) o X ∈ R^d \\ cl(Ω) (exterior)"""
        pts = as_points(X, self.dim)
        delta, _ = self.distance(pts)
        off = delta > 0.0
        inside = self.interior(pts)
        if side == "interior":
            return inside & off
        if side == "exterior":
            return ~inside & off
        raise ArgumentError(f"lado desconocido: {side}")

    def normal(self, x: Any, side: str = "interior") -> Optional[np.ndarray]:
        """Normal unitaria hacia el lado pedido, si existe"""
        return None

    def sample(self, h: float, seed: int = 0) -> "PointCloudBoundary":
        """Nube cuasi-uniforme de espaciado h con pesos de σ"""
        raise NotImplementedError

    def _check_spacing(self, h: float) -> None:
        if not h > 0:
            raise ArgumentError(f"espaciado no positivo: {h}")
        if self.bounded and h > self.diameter:
            raise ArgumentError(f"espaciado {h} mayor que el diámetro {self.diameter}")

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "params": {"dim": self.dim}}


@dataclass(frozen=True)
class Domain:
    """Dominio Ω dado por un borde y el lado elegido"""
    boundary: BoundaryModel
    side: str = "interior"

    @property
    def dim(self) -> int:
        return self.boundary.dim

    def contains(self, X: Any) -> np.ndarray:
        return self.boundary.contains(X, self.side)

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        return self.boundary.distance(X)

    def opposite(self) -> "Domain":
        return Domain(self.boundary, "exterior" if self.side == "interior" else "interior")


class HyperplanePatch(BoundaryModel):
    """Plano {x_d = 0}; infinito o restringido a la ventana [lo, hi]^n"""

    variant = "hyperplane-patch"

    def __init__(self, dim: int = 3, lo: float = -1.0, hi: float = 1.0, infinite: bool = True):
        diameter = math.inf if infinite else (hi - lo) * math.sqrt(dim - 1)
        super().__init__(dim, diameter)
        if not hi > lo:
            raise ArgumentError(f"ventana vacía [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        self.infinite = infinite

    def window(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.dim, self.lo)
        hi = np.full(self.dim, self.hi)
        lo[-1] = hi[-1] = 0.0
        return lo, hi

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        pts = as_points(X, self.dim)
        near = pts.copy()
        near[:, -1] = 0.0
        if not self.infinite:
            near[:, :-1] = np.clip(near[:, :-1], self.lo, self.hi)
        return np.linalg.norm(pts - near, axis=1), near

    def box_distance(self, lo: Any, hi: Any) -> np.ndarray:
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        wlo, whi = self.window()
        if self.infinite:
            wlo = np.where(np.arange(self.dim) < self.dim - 1, -np.inf, 0.0)
            whi = np.where(np.arange(self.dim) < self.dim - 1, np.inf, 0.0)
        gap = np.maximum(0.0, np.maximum(wlo - hi, lo - whi))
        return np.sqrt(np.sum(gap * gap, axis=1))

    def sigma_ball(self, x: Any, r: float) -> float:
        if self.infinite:
            return unit_ball_volume(self.n) * r ** self.n
        x = np.asarray(x, dtype=float)
        m = 512
        axes = [np.linspace(x[a] - r, x[a] + r, m, endpoint=False) + r / m for a in range(self.n)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        inside = np.sum((grid - x[:-1]) ** 2, axis=1) < r * r
        inside &= np.all((grid >= self.lo) & (grid <= self.hi), axis=1)
        return float(inside.sum()) * (2.0 * r / m) ** self.n

    def interior(self, X: np.ndarray) -> np.ndarray:
        return X[:, -1] > 0.0

    def normal(self, x: Any, side: str = "interior") -> np.ndarray:
        e = np.zeros(self.dim)
        e[-1] = 1.0 if side == "interior" else -1.0
        return e

    def sample(self, h: float, seed: int = 0) -> "PointCloudBoundary":
        self._check_spacing(h)
        cells = max(1, int(round((self.hi - self.lo) / h)))
        step = (self.hi - self.lo) / cells
        axis = self.lo + step * (np.arange(cells) + 0.5)
        grid = np.stack(np.meshgrid(*([axis] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        points = np.hstack([grid, np.zeros((len(grid), 1))])
        weights = np.full(len(points), step ** self.n)
        return PointCloudBoundary(points, weights, spacing=step, source=self)

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant,
                "params": {"dim": self.dim, "lo": self.lo, "hi": self.hi, "infinite": self.infinite}}


class SphereBoundary(BoundaryModel):
    """Esfera de radio R; Ω es la bola (lado interior)"""

    variant = "sphere"

    def __init__(self, dim: int = 3, radius: float = 1.0, center: Optional[Sequence[float]] = None):
        super().__init__(dim, 2.0 * radius)
        if not radius > 0:
            raise ArgumentError(f"radio no positivo: {radius}")
        self.radius = float(radius)
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    @property
    def total_area(self) -> float:
        return unit_sphere_area(self.dim) * self.radius ** self.n

    def window(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.center - self.radius, self.center + self.radius

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        pts = as_points(X, self.dim)
        v = pts - self.center
        rho = np.linalg.norm(v, axis=1)
        at_center = rho == 0.0
        direction = np.where(at_center[:, None], 0.0, v / np.where(at_center, 1.0, rho)[:, None])
        direction[at_center, 0] = -1.0
        near = self.center + self.radius * direction
        return np.abs(rho - self.radius), near

    def box_distance(self, lo: Any, hi: Any) -> np.ndarray:
        lo = np.atleast_2d(np.asarray(lo, dtype=float)) - self.center
        hi = np.atleast_2d(np.asarray(hi, dtype=float)) - self.center
        gap = np.maximum(0.0, np.maximum(lo, -hi))
        dmin = np.sqrt(np.sum(gap * gap, axis=1))
        far = np.maximum(np.abs(lo), np.abs(hi))
        dmax = np.sqrt(np.sum(far * far, axis=1))
        return np.maximum(0.0, np.maximum(dmin - self.radius, self.radius - dmax))

    def cap_area(self, r: float) -> float:
        """Área del casquete a distancia cordal < r"""
        R = self.radius
        if r >= 2.0 * R:
            return self.total_area
        cos_t = 1.0 - r * r / (2.0 * R * R)
        sin2 = 1.0 - cos_t * cos_t
        half = 0.5 * self.total_area * betainc(self.n / 2.0, 0.5, sin2)
        return half if cos_t >= 0.0 else self.total_area - half

    def sigma_ball(self, x: Any, r: float) -> float:
        return self.cap_area(r)

    def interior(self, X: np.ndarray) -> np.ndarray:
        return np.linalg.norm(X - self.center, axis=1) < self.radius

    def normal(self, x: Any, side: str = "interior") -> np.ndarray:
        v = (self.center - np.asarray(x, dtype=float)) / self.radius
        return v if side == "interior" else -v

    def sample(self, h: float, seed: int = 0) -> "PointCloudBoundary":
        self._check_spacing(h)
        count = max(4, int(round(self.total_area / h ** self.n)))
        if self.dim == 2:
            theta = 2.0 * math.pi * (np.arange(count) + 0.5) / count
            unit = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        elif self.dim == 3:
            i = np.arange(count) + 0.5
            z = 1.0 - 2.0 * i / count
            phi = math.pi * (1.0 + math.sqrt(5.0)) * i
            rho = np.sqrt(1.0 - z * z)
            unit = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
        else:
            g = np.random.default_rng(seed).standard_normal((count, self.dim))
            unit = g / np.linalg.norm(g, axis=1, keepdims=True)
        points = self.center + self.radius * unit
        weights = np.full(count, self.total_area / count)
        return PointCloudBoundary(points, weights, spacing=h, source=self)

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant,
                "params": {"dim": self.dim, "radius": self.radius, "center": self.center.tolist()}}


class PointCloudBoundary(BoundaryModel):
    """Nube de puntos con pesos de σ; índice KD para consultas de bola"""

    variant = "point-cloud"

    def __init__(self, points: Any, weights: Any, spacing: float,
                 source: Optional[BoundaryModel] = None, up_axis: int = -1):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float)
        if len(points) == 0 or len(points) != len(weights):
            raise ArgumentError("nube vacía o pesos inconsistentes")
        lo, hi = points.min(axis=0), points.max(axis=0)
        diameter = source.diameter if source is not None else float(np.linalg.norm(hi - lo))
        super().__init__(points.shape[1], diameter)
        self.points = points
        self.weights = weights
        self.spacing = float(spacing)
        self.source = source
        self.up_axis = up_axis
        self.index = BoxIndex(points, points)

    def tolerance(self, scale: float = 1.0) -> float:
        return 0.5 * self.spacing

    def window(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        pts = as_points(X, self.dim)
        dist, near, _ = self.index.nearest(pts)
        return dist, near

    def nearest_index(self, X: Any) -> np.ndarray:
        return self.index.nearest(as_points(X, self.dim))[2]

    def box_distance(self, lo: Any, hi: Any) -> np.ndarray:
        return self.index.box_distance(lo, hi)

    def members(self, x: Any, r: float) -> np.ndarray:
        return np.asarray(self.index.tree.query_ball_point(np.asarray(x, dtype=float), r), dtype=int)

    def sigma_ball(self, x: Any, r: float) -> float:
        idx = self.members(x, r)
        if len(idx) == 0:
            return 0.0
        inside = np.linalg.norm(self.points[idx] - np.asarray(x, dtype=float), axis=1) < r
        return float(self.weights[idx[inside]].sum())

    def interior(self, X: np.ndarray) -> np.ndarray:
        if self.source is not None:
            return self.source.interior(X)
        _, near = self.distance(X)
        return (X - near)[:, self.up_axis] > 0.0

    def normal(self, x: Any, side: str = "interior") -> Optional[np.ndarray]:
        return None if self.source is None else self.source.normal(x, side)

    def sample(self, h: float, seed: int = 0) -> "PointCloudBoundary":
        self._check_spacing(h)
        if h <= self.spacing:
            return self
        keys = np.floor(self.points / h).astype(np.int64)
        _, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        count = inverse.max() + 1
        weights = np.bincount(inverse, weights=self.weights, minlength=count)
        reps = np.full(count, len(inverse))
        np.minimum.at(reps, inverse, np.arange(len(inverse)))
        return PointCloudBoundary(self.points[reps], weights, spacing=h,
                                  source=self.source, up_axis=self.up_axis)

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "params": {"dim": self.dim, "spacing": self.spacing},
                "samples": [[p.tolist(), float(w)] for p, w in zip(self.points, self.weights)]}


class LipschitzGraph(BoundaryModel):
    """Grafo t = φ(x') de una función Lipschitz sobre R^n"""

    variant = "lipschitz-graph"

    def __init__(self, phi: Callable[[np.ndarray], np.ndarray],
                 grad: Callable[[np.ndarray], np.ndarray], lipschitz: float,
                 dim: int = 3, lo: float = -1.0, hi: float = 1.0, resolution: int = 256,
                 name: str = "custom"):
        super().__init__(dim, math.inf)
        self.phi = phi
        self.grad = grad
        self.lipschitz = float(lipschitz)
        self.lo = float(lo)
        self.hi = float(hi)
        self.name = name
        self.resolution = int(resolution)
        margin = 0.25 * (hi - lo)
        self._fine = self._grid_cloud(lo - margin, hi + margin,
                                      (hi - lo) / resolution)

    @classmethod
    def abs_ridge(cls, slope: float = 0.5, dim: int = 3, lo: float = -1.0, hi: float = 1.0,
                  resolution: int = 256) -> "LipschitzGraph":
        """Cresta φ(x) = slope·|x₁|"""
        def phi(x: np.ndarray) -> np.ndarray:
            return slope * np.abs(x[:, 0])

        def grad(x: np.ndarray) -> np.ndarray:
            g = np.zeros_like(x)
            g[:, 0] = slope * np.sign(x[:, 0])
            return g

        graph = cls(phi, grad, slope, dim, lo, hi, resolution, name="abs-ridge")
        graph.slope = slope
        return graph

    def tolerance(self, scale: float = 1.0) -> float:
        return 0.5 * self._fine.spacing * math.sqrt(1.0 + self.lipschitz ** 2)

    def window(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.dim, self.lo)
        hi = np.full(self.dim, self.hi)
        lo[-1] = -self.lipschitz * max(abs(self.lo), abs(self.hi)) * math.sqrt(self.n)
        hi[-1] = -lo[-1]
        return lo, hi

    def _grid_cloud(self, lo: float, hi: float, h: float) -> PointCloudBoundary:
        cells = max(1, int(round((hi - lo) / h)))
        step = (hi - lo) / cells
        axis = lo + step * (np.arange(cells) + 0.5)
        base = np.stack(np.meshgrid(*([axis] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        heights = self.phi(base)
        jac = np.sqrt(1.0 + np.sum(self.grad(base) ** 2, axis=1))
        points = np.hstack([base, heights[:, None]])
        return PointCloudBoundary(points, step ** self.n * jac, spacing=step, source=self)

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        return self._fine.distance(X)

    def box_distance(self, lo: Any, hi: Any) -> np.ndarray:
        return self._fine.box_distance(lo, hi)

    def sigma_ball(self, x: Any, r: float) -> float:
        return self._fine.sigma_ball(x, r)

    def interior(self, X: np.ndarray) -> np.ndarray:
        return X[:, -1] > self.phi(X[:, :-1])

    def normal(self, x: Any, side: str = "interior") -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = self.grad(x[:, :-1])[0]
        v = np.append(-g, 1.0)
        v /= np.linalg.norm(v)
        return v if side == "interior" else -v

    def sample(self, h: float, seed: int = 0) -> PointCloudBoundary:
        self._check_spacing(h)
        return self._grid_cloud(self.lo, self.hi, h)

    def to_dict(self) -> Dict[str, Any]:
        params = {"dim": self.dim, "lo": self.lo, "hi": self.hi, "name": self.name,
                  "lipschitz": self.lipschitz, "resolution": self.resolution}
        if hasattr(self, "slope"):
            params["slope"] = self.slope
        return {"variant": self.variant, "params": params}


class PolyhedralBoundary(BoundaryModel):
    """Unión de celdas de caras alineadas; Ω dado por un oráculo de pertenencia

    Sin oráculo, Ω es el interior de la superficie cerrada por paridad de cruces.
    """

    variant = "polyhedral"

    def __init__(self, axis: Any, lo: Any, hi: Any, inside: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 face_ids: Optional[Any] = None, name: str = "polyhedral"):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        if len(lo) == 0:
            raise ArgumentError("frontera poliédrica sin celdas")
        dim = lo.shape[1]
        super().__init__(dim, float(np.linalg.norm(hi.max(axis=0) - lo.min(axis=0))))
        self.axis = np.asarray(axis, dtype=int)
        self.lo = lo
        self.hi = hi
        self.inside_oracle = inside or self.parity_inside
        self.face_ids = np.arange(len(lo)) if face_ids is None else np.asarray(face_ids)
        self.name = name
        extent = hi - lo
        extent[np.arange(len(lo)), self.axis] = 1.0
        self.areas = np.prod(extent, axis=1)
        self.index = BoxIndex(lo, hi)
        self.cell_size = float(np.max(hi - lo))

    def tolerance(self, scale: float = 1.0) -> float:
        return ANALYTIC_TOLERANCE * max(scale, self.cell_size)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def window(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.lo.min(axis=0), self.hi.max(axis=0)

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        dist, near, _ = self.index.nearest(as_points(X, self.dim))
        return dist, near

    def nearest_cell(self, X: Any) -> np.ndarray:
        return self.index.nearest(as_points(X, self.dim))[2]

    def box_distance(self, lo: Any, hi: Any) -> np.ndarray:
        return self.index.box_distance(lo, hi)

    def sigma_ball(self, x: Any, r: float) -> float:
        x = np.asarray(x, dtype=float)
        idx = np.asarray(self.index.tree.query_ball_point(x, r + self.index.reach), dtype=int)
        if len(idx) == 0:
            return 0.0
        near = box_gap(x[None, :], x[None, :], self.lo[idx], self.hi[idx]) < r
        idx = idx[near]
        far = np.linalg.norm(np.maximum(np.abs(self.lo[idx] - x), np.abs(self.hi[idx] - x)), axis=1)
        full = far <= r
        total = float(self.areas[idx[full]].sum())
        for i in idx[~full]:
            total += self._partial_area(int(i), x, r)
        return total

    def _partial_area(self, i: int, x: np.ndarray, r: float, m: int = 16) -> float:
        free = [a for a in range(self.dim) if a != self.axis[i]]
        axes = [self.lo[i, a] + (self.hi[i, a] - self.lo[i, a]) * (np.arange(m) + 0.5) / m for a in free]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(free))
        pts = np.empty((len(grid), self.dim))
        pts[:, free] = grid
        pts[:, self.axis[i]] = self.lo[i, self.axis[i]]
        frac = np.mean(np.linalg.norm(pts - x, axis=1) < r)
        return float(frac * self.areas[i])

    def interior(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.inside_oracle(X), dtype=bool)

    def parity_inside(self, X: Any) -> np.ndarray:
        """Rayo en +x₁: número impar de celdas normales a x₁ atravesadas"""
        pts = as_points(X, self.dim)
        walls = np.nonzero(self.axis == 0)[0]
        lo, hi = self.lo[walls], self.hi[walls]
        out = np.zeros(len(pts), dtype=bool)
        for start in range(0, len(pts), QUERY_CHUNK):
            P = pts[start:start + QUERY_CHUNK, None, :]
            hit = lo[None, :, 0] > P[:, :, 0]
            hit &= np.all((lo[None, :, 1:] <= P[:, :, 1:]) & (P[:, :, 1:] < hi[None, :, 1:]), axis=2)
            out[start:start + QUERY_CHUNK] = hit.sum(axis=1) % 2 == 1
        return out

    def normal(self, x: Any, side: str = "interior") -> Optional[np.ndarray]:
        x = np.asarray(x, dtype=float)
        i = int(self.nearest_cell(x)[0])
        e = np.zeros(self.dim)
        e[self.axis[i]] = 1.0
        probe = 1e-6 * self.cell_size
        up = bool(self.interior((x + probe * e)[None, :])[0])
        down = bool(self.interior((x - probe * e)[None, :])[0])
        if up == down:
            return None
        inward = e if up else -e
        return inward if side == "interior" else -inward

    def sample(self, h: float, seed: int = 0) -> PointCloudBoundary:
        self._check_spacing(h)
        points: List[np.ndarray] = []
        weights: List[np.ndarray] = []
        for i in range(len(self.lo)):
            free = [a for a in range(self.dim) if a != self.axis[i]]
            counts = [max(1, int(math.ceil((self.hi[i, a] - self.lo[i, a]) / h))) for a in free]
            axes = [self.lo[i, a] + (self.hi[i, a] - self.lo[i, a]) * (np.arange(c) + 0.5) / c
                    for a, c in zip(free, counts)]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(free))
            pts = np.empty((len(grid), self.dim))
            pts[:, free] = grid
            pts[:, self.axis[i]] = self.lo[i, self.axis[i]]
            points.append(pts)
            weights.append(np.full(len(pts), self.areas[i] / len(pts)))
        return PointCloudBoundary(np.vstack(points), np.concatenate(weights), spacing=h, source=self)

    def to_dict(self) -> Dict[str, Any]:
        # el oráculo no se serializa: al releer, Ω se recupera por paridad
        return {"variant": self.variant, "params": {"dim": self.dim, "name": self.name},
                "cells": [{"axis": int(a), "lo": l.tolist(), "hi": h.tolist(), "face_id": int(f)}
                          for a, l, h, f in zip(self.axis, self.lo, self.hi, self.face_ids)]}


class CantorBoundary(PolyhedralBoundary):
    """Conjunto de Cantor de cuatro esquinas en profundidad m (n = 1)"""

    variant = "four-corner-cantor"

    def __init__(self, depth: int):
        if depth < 0:
            raise ArgumentError(f"profundidad negativa: {depth}")
        self.depth = int(depth)
        self.side = 4.0 ** (-depth)
        corners = np.zeros((1, 2))
        for j in range(1, depth + 1):
            offsets = 3.0 * 4.0 ** (-j) * np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
            corners = (corners[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
        order = np.lexsort((corners[:, 1], corners[:, 0]))
        self.corners = corners[order]
        cells = np.rint(self.corners / self.side).astype(np.int64)
        self._lattice = np.zeros((4 ** depth, 4 ** depth), dtype=bool)
        self._lattice[cells[:, 0], cells[:, 1]] = True
        s = self.side
        lo_list, hi_list, axis_list = [], [], []
        for c in self.corners:
            lo_list += [c, c + [0.0, s], c, c + [s, 0.0]]
            hi_list += [c + [s, 0.0], c + [s, s], c + [0.0, s], c + [s, s]]
            axis_list += [1, 1, 0, 0]
        super().__init__(axis_list, lo_list, hi_list, self._outside_squares,
                         face_ids=np.repeat(np.arange(len(self.corners)), 4), name=f"cantor-{depth}")

    def _outside_squares(self, X: np.ndarray) -> np.ndarray:
        idx = np.floor(X / self.side).astype(np.int64)
        size = self._lattice.shape[0]
        valid = np.all((idx >= 0) & (idx < size), axis=1)
        inside = np.zeros(len(X), dtype=bool)
        inside[valid] = self._lattice[idx[valid, 0], idx[valid, 1]]
        frac = X / self.side - idx
        interior = inside & np.all((frac > 0.0) & (frac < 1.0), axis=1)
        return ~interior

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "params": {"depth": self.depth}}


class SlitBoundary(BoundaryModel):
    """Semiplano {t = 0, x₁ ≥ 0}; Ω = R^d menos la rendija (control negativo)"""

    variant = "slit"

    def __init__(self, dim: int = 3, extent: float = 4.0):
        super().__init__(dim, math.inf)
        self.extent = float(extent)

    def window(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.dim, -self.extent)
        hi = np.full(self.dim, self.extent)
        lo[0] = 0.0
        lo[-1] = hi[-1] = 0.0
        return lo, hi

    def distance(self, X: Any) -> Tuple[np.ndarray, np.ndarray]:
        pts = as_points(X, self.dim)
        near = pts.copy()
        near[:, -1] = 0.0
        near[:, 0] = np.maximum(near[:, 0], 0.0)
        return np.linalg.norm(pts - near, axis=1), near

    def box_distance(self, lo: Any, hi: Any) -> np.ndarray:
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        gap_t = np.maximum(0.0, np.maximum(lo[:, -1], -hi[:, -1]))
        gap_1 = np.maximum(0.0, -hi[:, 0])
        return np.sqrt(gap_t ** 2 + gap_1 ** 2)

    def sigma_ball(self, x: Any, r: float) -> float:
        c = float(np.asarray(x, dtype=float)[0])
        if self.n == 1:
            return r + min(c, r)
        if self.n != 2:
            raise ArgumentError("la rendija solo mide bolas en d = 2, 3")
        if c >= r:
            return math.pi * r * r
        return r * r * math.acos(-c / r) + c * math.sqrt(r * r - c * c)

    def interior(self, X: np.ndarray) -> np.ndarray:
        return np.ones(len(X), dtype=bool)

    def sample(self, h: float, seed: int = 0) -> PointCloudBoundary:
        self._check_spacing(h)
        lo, hi = self.window()
        axes = [np.arange(lo[a] + h / 2, hi[a], h) for a in range(self.n)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        points = np.hstack([grid, np.zeros((len(grid), 1))])
        return PointCloudBoundary(points, np.full(len(points), h ** self.n), spacing=h, source=self)

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "params": {"dim": self.dim, "extent": self.extent}}


@dataclass
class AdrReport:
    """Resultado del verificador Ahlfors-David"""
    centers: List[List[float]]
    radii: List[float]
    ratios: np.ndarray
    worst_lower: float
    worst_upper: float
    constant: float
    bound: Optional[float] = None
    violations: List[Dict[str, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {"worst_lower": self.worst_lower, "worst_upper": self.worst_upper,
                "constant": self.constant, "bound": self.bound, "violations": self.violations}


def sigma_of_ball(E: BoundaryModel, ball: SurfaceBall) -> float:
    """σ(Δ) con verificación de que el centro está en el borde"""
    x = np.asarray(ball.center, dtype=float)
    delta, _ = E.distance(x)
    if delta[0] > E.tolerance(ball.radius):
        raise DomainError(f"centro fuera del borde (δ = {delta[0]:.3e})", {"center": x.tolist()})
    return E.sigma_ball(x, ball.radius)


def distance_to_boundary(E: BoundaryModel, X: Any) -> Tuple[float, np.ndarray]:
    """δ(X) y un punto x̂ que la realiza"""
    delta, near = E.distance(X)
    return float(delta[0]), near[0]


def sample_boundary(E: BoundaryModel, h: float, seed: int = 0) -> PointCloudBoundary:
    """Muestra cuasi-uniforme del borde con pesos de σ"""
    return E.sample(h, seed)


def adr_check(E: BoundaryModel, centers: Any, radii: Sequence[float],
              bound: Optional[float] = None) -> AdrReport:
    """Cocientes σ(Δ(x, r))/r^n sobre todos los pares centro-radio"""
    radii = [float(r) for r in radii]
    pts = np.atleast_2d(np.asarray(centers, dtype=float)) if len(centers) else np.empty((0, E.dim))
    if len(pts) == 0 or not radii:
        raise ArgumentError("muestras vacías para la verificación ADR")
    for r in radii:
        if not (0.0 < r <= E.diameter):
            raise ArgumentError(f"radio {r} fuera de (0, diam E]", {"radius": r})
    ratios = np.empty((len(pts), len(radii)))
    for i, x in enumerate(pts):
        for j, r in enumerate(radii):
            ratios[i, j] = sigma_of_ball(E, SurfaceBall(tuple(x), r)) / r ** E.n
    lower = float(ratios.min())
    upper = float(ratios.max())
    constant = max(upper, 1.0 / lower) if lower > 0 else math.inf
    violations = []
    if bound is not None:
        for i, j in zip(*np.nonzero((ratios > bound) | (ratios < 1.0 / bound))):
            violations.append({"center": pts[i].tolist(), "radius": radii[j], "ratio": float(ratios[i, j])})
    return AdrReport(pts.tolist(), radii, ratios, lower, upper, constant, bound, violations)


def boundary_from_dict(doc: Dict[str, Any]) -> BoundaryModel:
    """Reconstruye un modelo de borde desde su forma serializada"""
    variant = doc.get("variant")
    params = dict(doc.get("params", {}))
    if variant == "hyperplane-patch":
        return HyperplanePatch(**params)
    if variant == "sphere":
        return SphereBoundary(**params)
    if variant == "four-corner-cantor":
        return CantorBoundary(**params)
    if variant == "slit":
        return SlitBoundary(**params)
    if variant == "lipschitz-graph":
        slope = params.pop("slope", params.pop("lipschitz", 0.5))
        params.pop("name", None)
        return LipschitzGraph.abs_ridge(slope=slope, **params)
    if variant == "polyhedral":
        cells = doc.get("cells") or []
        if not cells:
            raise ArgumentError("frontera poliédrica sin celdas")
        return PolyhedralBoundary([c["axis"] for c in cells], [c["lo"] for c in cells], [c["hi"] for c in cells],
                                  face_ids=[c.get("face_id", i) for i, c in enumerate(cells)],
                                  name=params.get("name", "polyhedral"))
    if variant == "point-cloud":
        samples = doc.get("samples") or []
        pts = [s[0] for s in samples]
        wts = [s[1] for s in samples]
        return PointCloudBoundary(pts, wts, spacing=params.get("spacing", 1.0))
    raise ArgumentError(f"variante de borde desconocida: {variant}")
