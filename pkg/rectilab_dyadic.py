"""
Rectilab Dyadic - Rejilla diádica de cubos de Christ sobre el borde
Regiones de Carleson discretizadas, dientes de sierra y bolas de cubo
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.spatial import cKDTree

from rectilab_errors import ArgumentError, GridConstructionError
from rectilab_geometry import (Ball, BoundaryModel, HyperplanePatch, PointCloudBoundary,
                               SurfaceBall, adr_check, box_gap)
from rectilab_log import status

CubeKey = Tuple[Any, ...]

SLIVER_FRACTION = 0.25
PROBE_CAP = 64
OWNER_SAMPLES = 512


@dataclass
class DyadicCube:
    """Cubo diádico Q con centro, radios y medida"""
    key: CubeKey
    k: int
    ell: float
    center: np.ndarray
    r_in: float
    r_out: float
    sigma: float
    lo: np.ndarray
    hi: np.ndarray
    rim: bool = False
    parent: Optional[CubeKey] = None
    children: Tuple[CubeKey, ...] = ()

    @property
    def containment_constant(self) -> float:
        return self.r_out / self.r_in if self.r_in > 0 else math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {"id": list(self.key), "k": self.k, "parent": None if self.parent is None else list(self.parent),
                "center": self.center.tolist(), "r": self.r_in, "sigma": self.sigma}


@dataclass(frozen=True)
class CubeBall:
    """Bolas asociadas a un cubo: Δ(x_Q, r) ⊂ Q ⊂ Δ(x_Q, C r)"""
    ball: Ball
    surface_ball: SurfaceBall
    inner_radius: float
    containment_constant: float


class FlatDyadicGrid:
    """Cuadrados diádicos euclídeos sobre el plano {x_d = 0}"""

    method = "flat"

    def __init__(self, boundary: HyperplanePatch, k_min: int = 0, k_max: Optional[int] = None):
        if k_max is not None and k_max < k_min:
            raise ArgumentError(f"niveles invertidos {k_min} > {k_max}")
        self.boundary = boundary
        self.dim = boundary.dim
        self.n = boundary.n
        self.k_min = int(k_min)
        self.k_max = None if k_max is None else int(k_max)
        self.a0 = 0.5
        self.a0_nominal = 0.5
        self.C1 = math.sqrt(self.n)
        self.eta = 1.0
        self._cache: Dict[CubeKey, DyadicCube] = {}

    def diameter_bound(self, k: int) -> float:
        """C₁ a priori: diagonal del cuadrado"""
        return math.sqrt(self.n)

    @property
    def a0_floor(self) -> float:
        return 0.5

    @staticmethod
    def side(k: int) -> float:
        return 2.0 ** (-k)

    def level_range(self) -> range:
        if self.k_max is None:
            raise ArgumentError("la rejilla plana no tiene nivel máximo")
        return range(self.k_min, self.k_max + 1)

    def has_level(self, k: int) -> bool:
        return k >= self.k_min and (self.k_max is None or k <= self.k_max)

    def locate_index(self, X: Any, k: int) -> np.ndarray:
        """Índices de retícula (m, n) del cubo de nivel k que contiene x̂"""
        pts = np.atleast_2d(np.asarray(X, dtype=float))
        return np.floor(pts[:, :-1] / self.side(k)).astype(np.int64)

    def locate(self, x: Any, k: int) -> CubeKey:
        idx = self.locate_index(x, k)[0]
        return (int(k),) + tuple(int(i) for i in idx)

    def level_keys(self, k: int) -> List[CubeKey]:
        s = self.side(k)
        lo = int(math.floor(self.boundary.lo / s + 1e-9))
        hi = int(math.ceil(self.boundary.hi / s - 1e-9))
        axes = [range(lo, hi)] * self.n
        grid = np.stack(np.meshgrid(*[np.arange(a.start, a.stop) for a in axes], indexing="ij"),
                        axis=-1).reshape(-1, self.n)
        return [(int(k),) + tuple(int(i) for i in row) for row in grid]

    def parent(self, key: CubeKey) -> Optional[CubeKey]:
        if key[0] <= self.k_min:
            return None
        return (key[0] - 1,) + tuple(int(i) >> 1 for i in key[1:])

    def children(self, key: CubeKey) -> Tuple[CubeKey, ...]:
        if self.k_max is not None and key[0] >= self.k_max:
            return ()
        base = [2 * int(i) for i in key[1:]]
        offsets = np.stack(np.meshgrid(*([[0, 1]] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        return tuple((key[0] + 1,) + tuple(int(b + o) for b, o in zip(base, row)) for row in offsets)

    def box(self, key: CubeKey) -> Tuple[np.ndarray, np.ndarray]:
        s = self.side(key[0])
        idx = np.asarray(key[1:], dtype=float)
        lo = np.append(idx * s, 0.0)
        hi = np.append((idx + 1.0) * s, 0.0)
        return lo, hi

    def is_rim(self, key: CubeKey) -> bool:
        if self.boundary.infinite:
            return False
        lo, hi = self.box(key)
        return bool(np.any(np.isclose(lo[:-1], self.boundary.lo)) or np.any(np.isclose(hi[:-1], self.boundary.hi)))

    def cube(self, key: CubeKey) -> DyadicCube:
        key = tuple(int(v) for v in key)
        if not self.has_level(key[0]):
            raise ArgumentError(f"cubo fuera de los niveles de la rejilla: {key}")
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        s = self.side(key[0])
        lo, hi = self.box(key)
        cube = DyadicCube(key=key, k=key[0], ell=s, center=0.5 * (lo + hi), r_in=0.5 * s,
                          r_out=0.5 * s * math.sqrt(self.n), sigma=s ** self.n, lo=lo, hi=hi,
                          rim=self.is_rim(key), parent=self.parent(key), children=self.children(key))
        if len(self._cache) < 200000:
            self._cache[key] = cube
        return cube

    def cube_distance(self, key: CubeKey, lo: Any, hi: Any) -> np.ndarray:
        """dist(J, Q) exacta para cajas J"""
        qlo, qhi = self.box(key)
        return box_gap(np.atleast_2d(lo), np.atleast_2d(hi), qlo, qhi)

    def cubes_near(self, k: int, lo: Any, hi: Any, radius: float) -> List[CubeKey]:
        """Cubos de nivel k a distancia ≤ radius de la caja [lo, hi]"""
        s = self.side(k)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if max(0.0, lo[-1], -hi[-1]) > radius:
            return []
        a = np.floor((lo[:-1] - radius) / s).astype(np.int64)
        b = np.floor((hi[:-1] + radius) / s).astype(np.int64)
        grid = np.stack(np.meshgrid(*[np.arange(x, y + 1) for x, y in zip(a, b)], indexing="ij"),
                        axis=-1).reshape(-1, self.n)
        clo = np.hstack([grid * s, np.zeros((len(grid), 1))])
        chi = np.hstack([(grid + 1) * s, np.zeros((len(grid), 1))])
        ok = box_gap(lo[None, :], hi[None, :], clo, chi) <= radius
        return [(int(k),) + tuple(int(i) for i in row) for row in grid[ok]]

    def is_ancestor(self, anc: CubeKey, key: CubeKey) -> bool:
        """anc ⊇ key"""
        shift = key[0] - anc[0]
        if shift < 0:
            return False
        return all((int(i) >> shift) == int(j) for i, j in zip(key[1:], anc[1:]))


class DyadicGrid:
    """Jerarquía explícita de cubos de Christ sobre una nube muestreada"""

    def __init__(self, cloud: PointCloudBoundary, k_min: int, k_max: int, method: str,
                 labels: Dict[int, np.ndarray], centers: Dict[int, np.ndarray]):
        self.cloud = cloud
        self.boundary = cloud.source if cloud.source is not None else cloud
        self.dim = cloud.dim
        self.n = cloud.n
        self.k_min = int(k_min)
        self.k_max = int(k_max)
        self.method = method
        self.labels = labels
        self.center_index = centers
        self._cubes: Dict[CubeKey, DyadicCube] = {}
        self._probes: Dict[CubeKey, np.ndarray] = {}
        self._members: Dict[int, List[np.ndarray]] = {}
        self._level_trees: Dict[int, cKDTree] = {}
        self._finish()

    @staticmethod
    def side(k: int) -> float:
        return 2.0 ** (-k)

    def level_range(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def has_level(self, k: int) -> bool:
        return self.k_min <= k <= self.k_max

    def _finish(self) -> None:
        pts = self.cloud.points
        w = self.cloud.weights
        h = self.cloud.spacing
        tree = self.cloud.index.tree
        wlo, whi = self.cloud.window()
        unbounded = not self.boundary.bounded
        r_in_ratio = []
        c1_ratio = []
        for k in self.level_range():
            lab = self.labels[k]
            count = int(lab.max()) + 1
            order = np.argsort(lab, kind="stable")
            splits = np.cumsum(np.bincount(lab, minlength=count))[:-1]
            members = np.split(order, splits)
            self._members[k] = members
            s = self.side(k)
            sigma = np.bincount(lab, weights=w, minlength=count)
            parents = self.labels[k - 1] if k > self.k_min else None
            for j, idx in enumerate(members):
                c = pts[self.center_index[k][j]]
                dist = np.linalg.norm(pts[idx] - c, axis=1)
                r_out = float(dist.max()) + 0.5 * h
                near = np.asarray(tree.query_ball_point(c, r_out + 2.0 * h), dtype=int)
                outside = near[lab[near] != j]
                if len(outside):
                    r_in = max(float(np.linalg.norm(pts[outside] - c, axis=1).min()) - 0.5 * h, 0.0)
                else:
                    r_in = r_out
                lo = pts[idx].min(axis=0) - 0.5 * h
                hi = pts[idx].max(axis=0) + 0.5 * h
                rim = bool(unbounded and (np.any(lo[:-1] <= wlo[:-1] + 0.5 * h + 1e-12)
                                          or np.any(hi[:-1] >= whi[:-1] - 0.5 * h - 1e-12)))
                parent = None if parents is None else (k - 1, int(parents[idx[0]]))
                key = (k, j)
                self._cubes[key] = DyadicCube(key=key, k=k, ell=s, center=c, r_in=r_in, r_out=r_out,
                                              sigma=float(sigma[j]), lo=lo, hi=hi, rim=rim, parent=parent)
                if not rim:
                    r_in_ratio.append(r_in / s)
                    c1_ratio.append(2.0 * r_out / s)
        for key, cube in self._cubes.items():
            if cube.parent is not None:
                par = self._cubes[cube.parent]
                par.children = par.children + (key,)
        self.a0 = float(min(r_in_ratio)) if r_in_ratio else 0.0
        self.C1 = float(max(c1_ratio)) if c1_ratio else math.inf
        self.eta = math.nan
        self.a0_nominal = 0.5

    def diameter_bound(self, k: int) -> float:
        """C₁ a priori de la construcción en el nivel k

        Red: todo punto dista menos de 2^-k de su centro. Celdas: el centro es miembro de su celda de lado 2^-k.
        """
        h = self.cloud.spacing / self.side(k)
        return (2.0 if self.method == "net" else 2.0 * math.sqrt(self.dim)) + h

    @property
    def a0_floor(self) -> float:
        # sin cota a priori de bola interior en nubes: se usa la alcanzada
        return self.a0

    def level_keys(self, k: int) -> List[CubeKey]:
        return [(k, j) for j in range(len(self._members[k]))]

    def cube(self, key: CubeKey) -> DyadicCube:
        key = (int(key[0]), int(key[1]))
        if key not in self._cubes:
            raise ArgumentError(f"cubo desconocido: {key}")
        return self._cubes[key]

    def members(self, key: CubeKey) -> np.ndarray:
        return self._members[key[0]][key[1]]

    def parent(self, key: CubeKey) -> Optional[CubeKey]:
        return self.cube(key).parent

    def children(self, key: CubeKey) -> Tuple[CubeKey, ...]:
        return self.cube(key).children

    def locate(self, x: Any, k: int) -> CubeKey:
        i = int(self.cloud.nearest_index(x)[0])
        return (int(k), int(self.labels[k][i]))

    def box(self, key: CubeKey) -> Tuple[np.ndarray, np.ndarray]:
        cube = self.cube(key)
        return cube.lo, cube.hi

    def is_rim(self, key: CubeKey) -> bool:
        return self.cube(key).rim

    def probes(self, key: CubeKey) -> np.ndarray:
        """Representantes de los miembros a espaciado ℓ/8"""
        if key not in self._probes:
            pts = self.cloud.points[self.members(key)]
            cell = self.side(key[0]) / 8.0
            _, first = np.unique(np.floor(pts / cell).astype(np.int64), axis=0, return_index=True)
            reps = pts[np.sort(first)]
            if len(reps) > PROBE_CAP:
                reps = reps[np.linspace(0, len(reps) - 1, PROBE_CAP).astype(int)]
            self._probes[key] = reps
        return self._probes[key]

    def cube_distance(self, key: CubeKey, lo: Any, hi: Any) -> np.ndarray:
        """dist(J, Q) contra los representantes del cubo"""
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        reps = self.probes(key)
        out = np.full(len(lo), np.inf)
        for p in reps:
            out = np.minimum(out, box_gap(lo, hi, p, p))
        return np.maximum(out - 0.5 * self.cloud.spacing, 0.0)

    def cubes_near(self, k: int, lo: Any, hi: Any, radius: float) -> List[CubeKey]:
        if k not in self._level_trees:
            cs = np.array([self._cubes[(k, j)].center for j in range(len(self._members[k]))])
            self._level_trees[k] = cKDTree(cs)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        c = 0.5 * (lo + hi)
        reach = radius + 0.5 * float(np.linalg.norm(hi - lo)) + self.C1 * self.side(k)
        cand = self._level_trees[k].query_ball_point(c, reach)
        out = []
        for j in sorted(cand):
            if self.cube_distance((k, j), lo, hi)[0] <= radius:
                out.append((k, int(j)))
        return out

    def is_ancestor(self, anc: CubeKey, key: CubeKey) -> bool:
        if key[0] < anc[0]:
            return False
        cur: Optional[CubeKey] = (int(key[0]), int(key[1]))
        while cur is not None and cur[0] > anc[0]:
            cur = self.cube(cur).parent
        return cur == (int(anc[0]), int(anc[1]))


def _greedy_net(pts: np.ndarray, order: np.ndarray, sep: float, first: Optional[int] = None) -> List[int]:
    """Red 2^-k separada en orden lexicográfico, empezando por `first`"""
    tree = cKDTree(pts)
    covered = np.zeros(len(pts), dtype=bool)
    chosen: List[int] = []
    seq = ([first] if first is not None else []) + order.tolist()
    for i in seq:
        if covered[i]:
            continue
        chosen.append(i)
        covered[tree.query_ball_point(pts[i], sep * (1.0 - 1e-12))] = True
    return chosen


def _build_net_levels(cloud: PointCloudBoundary, k_min: int, k_max: int) -> Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray]]:
    pts = cloud.points
    lex = np.lexsort(pts.T[::-1])
    rank = np.empty(len(pts), dtype=int)
    rank[lex] = np.arange(len(pts))
    labels: Dict[int, np.ndarray] = {}
    centers: Dict[int, np.ndarray] = {}
    parents = np.zeros(len(pts), dtype=int)
    parent_centers = [None]
    for k in range(k_min, k_max + 1):
        sep = 2.0 ** (-k)
        lab = np.empty(len(pts), dtype=int)
        level_centers: List[int] = []
        for p in range(int(parents.max()) + 1):
            idx = np.nonzero(parents == p)[0]
            idx = idx[np.argsort(rank[idx])]
            local = pts[idx]
            start = None
            if parent_centers[p] is not None:
                start = int(np.nonzero(idx == parent_centers[p])[0][0])
            net = _greedy_net(local, np.arange(len(idx)), sep, start)
            _, nearest = cKDTree(local[net]).query(local)
            lab[idx] = len(level_centers) + nearest
            level_centers.extend(int(idx[i]) for i in net)
        labels[k] = lab
        centers[k] = np.asarray(level_centers, dtype=int)
        parents = lab
        parent_centers = level_centers
    return labels, centers


def _build_ambient_levels(cloud: PointCloudBoundary, k_min: int, k_max: int) -> Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray]]:
    pts = cloud.points
    w = cloud.weights
    labels: Dict[int, np.ndarray] = {}
    centers: Dict[int, np.ndarray] = {}
    prev = np.zeros(len(pts), dtype=np.int64)
    for k in range(k_min, k_max + 1):
        s = 2.0 ** (-k)
        cell = np.floor(pts / s).astype(np.int64)
        key = np.hstack([prev[:, None], cell])
        _, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.ravel()
        count = int(inv.max()) + 1
        sig = np.bincount(inv, weights=w, minlength=count)
        centroid = np.stack([np.bincount(inv, weights=pts[:, a], minlength=count) for a in range(pts.shape[1])], axis=1)
        centroid /= np.bincount(inv, minlength=count)[:, None]
        first = np.full(count, len(inv))
        np.minimum.at(first, inv, np.arange(len(inv)))
        owner = prev[first]
        target = np.arange(count)
        small = sig < SLIVER_FRACTION * s ** cloud.n
        for p in np.nonzero(small)[0]:
            siblings = np.nonzero((owner == owner[p]) & ~small)[0]
            if len(siblings):
                target[p] = siblings[np.argmin(np.linalg.norm(centroid[siblings] - centroid[p], axis=1))]
        _, lab = np.unique(target[inv], return_inverse=True)
        lab = lab.ravel()
        labels[k] = lab
        m = int(lab.max()) + 1
        cen = np.stack([np.bincount(lab, weights=pts[:, a], minlength=m) for a in range(pts.shape[1])], axis=1)
        cen /= np.bincount(lab, minlength=m)[:, None]
        rep = np.empty(m, dtype=int)
        for j in range(m):
            idx = np.nonzero(lab == j)[0]
            rep[j] = idx[np.argmin(np.linalg.norm(pts[idx] - cen[j], axis=1))]
        centers[k] = rep
        prev = lab.astype(np.int64)
    return labels, centers


def build_grid(E: BoundaryModel, k_min: int, k_max: Optional[int], method: str = "auto",
               spacing: Optional[float] = None, adr_bound: float = 32.0, seed: int = 0):
    """Construye la rejilla diádica de niveles k_min..k_max"""
    if k_max is not None and k_max < k_min:
        raise ArgumentError(f"niveles invertidos {k_min} > {k_max}")
    if isinstance(E, HyperplanePatch) and method in ("auto", "flat"):
        return FlatDyadicGrid(E, k_min, k_max)
    if k_max is None:
        raise ArgumentError("una rejilla explícita requiere k_max")
    if isinstance(E, PointCloudBoundary):
        cloud = E
    else:
        cloud = E.sample(spacing or 2.0 ** (-k_max) / 4.0, seed)
    if method == "auto":
        method = "ambient" if isinstance(cloud.source, HyperplanePatch) else "net"
    if method not in ("ambient", "net"):
        raise ArgumentError(f"método de rejilla desconocido: {method}")
    rng = np.random.default_rng(seed)
    probe = cloud.points[rng.choice(len(cloud.points), size=min(8, len(cloud.points)), replace=False)]
    for k in range(k_min, k_max + 1):
        r = 2.0 ** (-k)
        if r > cloud.diameter:
            continue
        report = adr_check(cloud, probe, [r], bound=adr_bound)
        if not report.passed:
            raise GridConstructionError("el borde no es ADR en la escala pedida", r,
                                        {"violations": report.violations[:4]})
    status(f"Construyendo rejilla diádica ({method}) niveles {k_min}..{k_max} sobre {len(cloud.points)} muestras...")
    if method == "ambient":
        labels, centers = _build_ambient_levels(cloud, k_min, k_max)
    else:
        labels, centers = _build_net_levels(cloud, k_min, k_max)
    grid = DyadicGrid(cloud, k_min, k_max, method, labels, centers)
    status(f"Rejilla lista: a0={grid.a0:.3f}, C1={grid.C1:.3f}")
    return grid


def descendants(grid, key: CubeKey, depth: Optional[int] = None) -> List[CubeKey]:
    """Q y todos sus descendientes hasta `depth` generaciones"""
    last = grid.k_max if depth is None else key[0] + depth
    if last is None:
        raise ArgumentError("profundidad requerida en una rejilla sin nivel máximo")
    out = [tuple(key)]
    frontier = [tuple(key)]
    while frontier and frontier[0][0] < last:
        frontier = [c for q in frontier for c in grid.children(q)]
        out.extend(frontier)
    return out


def discretized_carleson(grid, key: CubeKey, depth: Optional[int] = None) -> List[CubeKey]:
    """𝔻_Q = {Q' ⊆ Q}"""
    cube = grid.cube(key)
    return descendants(grid, cube.key, depth)


class CubeFamily:
    """Familia de cubos disjuntos dos a dos"""

    def __init__(self, grid, keys: Iterable[CubeKey]):
        self.grid = grid
        self.keys: Set[CubeKey] = {tuple(int(v) for v in k) for k in keys}
        ordered = sorted(self.keys)
        for a in ordered:
            cur = grid.parent(a)
            while cur is not None:
                if tuple(cur) in self.keys:
                    raise ArgumentError(f"familia con solapamiento: {cur} contiene {a}")
                cur = grid.parent(cur)
        self.levels = sorted({k[0] for k in self.keys})

    def __len__(self) -> int:
        return len(self.keys)

    def covers(self, key: CubeKey) -> bool:
        """Q ⊆ Q_j para algún Q_j de la familia"""
        if not self.keys:
            return False
        cur: Optional[CubeKey] = tuple(key)
        lowest = self.levels[0]
        while cur is not None and cur[0] >= lowest:
            if cur in self.keys:
                return True
            cur = self.grid.parent(cur)
        return False

    @classmethod
    def generation(cls, grid, k: int) -> "CubeFamily":
        return cls(grid, grid.level_keys(k))


def discretized_sawtooth(grid, family: CubeFamily, root: Optional[CubeKey] = None,
                         depth: Optional[int] = None) -> List[CubeKey]:
    """𝔻_F (o 𝔻_{F,Q0}): cubos no contenidos en ningún miembro de F"""
    if root is not None:
        pool = discretized_carleson(grid, root, depth)
    else:
        last = grid.k_max if depth is None else grid.k_min + depth
        if last is None:
            raise ArgumentError("profundidad requerida en una rejilla sin nivel máximo")
        pool = [key for k in range(grid.k_min, last + 1) for key in grid.level_keys(k)]
    return [key for key in pool if not family.covers(key)]


def cube_ball(grid, key: CubeKey) -> CubeBall:
    """B_Q y Δ_Q con la constante de contención alcanzada"""
    cube = grid.cube(key)
    center = tuple(float(v) for v in cube.center)
    return CubeBall(ball=Ball(center, cube.r_out),
                    surface_ball=SurfaceBall(center, cube.r_in, grid.boundary.identity),
                    inner_radius=cube.r_in,
                    containment_constant=cube.containment_constant)


def thin_boundary_check(grid, key: CubeKey, tau: float) -> float:
    """σ({x ∈ Q: dist(x, E \\ Q) ≤ τ ℓ(Q)}) / σ(Q)"""
    a0 = grid.a0_nominal
    if not (0.0 < tau < a0):
        raise ArgumentError(f"τ={tau} fuera de (0, a0={a0:.3f})")
    cube = grid.cube(key)
    if isinstance(grid, FlatDyadicGrid):
        core = 1.0
        for a in range(grid.n):
            sides = 2
            if not grid.boundary.infinite:
                sides = int(cube.lo[a] > grid.boundary.lo + 1e-12) + int(cube.hi[a] < grid.boundary.hi - 1e-12)
            core *= 1.0 - sides * tau
        return 1.0 - core
    pts = grid.cloud.points
    w = grid.cloud.weights
    idx = grid.members(key)
    lab = grid.labels[key[0]]
    near = np.asarray(grid.cloud.index.tree.query_ball_point(cube.center, cube.r_out + tau * cube.ell + 2.0 * grid.cloud.spacing), dtype=int)
    others = near[lab[near] != key[1]]
    if len(others) == 0:
        return 0.0
    dist, _ = cKDTree(pts[others]).query(pts[idx])
    band = (dist - 0.5 * grid.cloud.spacing) <= tau * cube.ell
    return float(w[idx][band].sum() / w[idx].sum())


def fit_thin_exponent(grid, keys: Sequence[CubeKey], taus: Sequence[float]) -> Tuple[float, float]:
    """Ajusta (C, η) de la cota ratio ≤ C τ^η en escala log-log"""
    worst = np.array([max(thin_boundary_check(grid, key, t) for key in keys) for t in taus])
    mask = worst > 0
    if mask.sum() < 2:
        return 0.0, math.inf
    slope, intercept = np.polyfit(np.log(np.asarray(taus)[mask]), np.log(worst[mask]), 1)
    eta = float(slope)
    const = float(np.max(worst[mask] / np.asarray(taus)[mask] ** eta))
    return const, eta


def _owner_counts(grid, k: int, keys: Sequence[CubeKey], seed: int = 0) -> int:
    """Puntos de E sin exactamente un cubo dueño en el nivel k"""
    if isinstance(grid, FlatDyadicGrid):
        E = grid.boundary
        pts = np.random.default_rng(seed).uniform(E.lo, E.hi, size=(OWNER_SAMPLES, grid.n))
        boxes = np.array([grid.box(key)[0][:-1] for key in keys])
        s = grid.side(k)
        inside = np.all((pts[:, None, :] >= boxes[None, :, :]) & (pts[:, None, :] < boxes[None, :, :] + s), axis=2)
        return int(np.count_nonzero(inside.sum(axis=1) != 1))
    owners = np.zeros(len(grid.cloud.points), dtype=int)
    for key in keys:
        np.add.at(owners, grid.members(key), 1)
    return int(np.count_nonzero(owners != 1))


def _contained(grid, child: CubeKey, parent: CubeKey) -> bool:
    if isinstance(grid, FlatDyadicGrid):
        clo, chi = grid.box(child)
        plo, phi = grid.box(parent)
        return bool(np.all(clo >= plo) and np.all(chi <= phi))
    return bool(np.all(grid.labels[parent[0]][grid.members(child)] == parent[1]))


def verify_grid(grid, max_cubes: int = 10 ** 4, sigma_total: Optional[float] = None,
                a0: Optional[float] = None, C1: Optional[float] = None) -> Dict[str, Any]:
    """Barrido de las propiedades (i)-(v): recuentos de violaciones

    C₁ es la cota a priori de la construcción salvo que se indique otra.
    """
    counts = {"partition": 0, "ownership": 0, "nesting": 0, "diameter": 0, "inner_ball": 0, "cubes": 0}
    a0 = grid.a0_floor if a0 is None else a0
    previous_total = None
    for k in grid.level_range():
        keys = grid.level_keys(k)
        counts["cubes"] += len(keys)
        if counts["cubes"] > max_cubes:
            break
        counts["ownership"] += _owner_counts(grid, k, keys)
        bound = grid.diameter_bound(k) if C1 is None else C1
        total = 0.0
        for key in keys:
            cube = grid.cube(key)
            total += cube.sigma
            kids = grid.children(key)
            if kids:
                if abs(sum(grid.cube(c).sigma for c in kids) - cube.sigma) > 1e-9 * max(cube.sigma, 1e-300):
                    counts["nesting"] += 1
                if any(grid.parent(c) != tuple(key) or not _contained(grid, c, key) for c in kids):
                    counts["nesting"] += 1
            if cube.rim:
                continue
            if 2.0 * cube.r_out > bound * cube.ell * (1.0 + 1e-9):
                counts["diameter"] += 1
            if cube.r_in < a0 * cube.ell * (1.0 - 1e-9):
                counts["inner_ball"] += 1
        reference = sigma_total if sigma_total is not None else previous_total
        if reference is not None and abs(total - reference) > 1e-9 * max(reference, 1.0):
            counts["partition"] += 1
        previous_total = total
    return counts
