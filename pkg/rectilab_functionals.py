"""
Rectilab Functionals - Conos diádicos, funciones cuadradas y maximales no tangenciales
Experimento good-λ, Hölder inversa, A∞ y condiciones de prueba Tb locales
"""

import copy
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from rectilab_connectivity import achieved_c, halfspace_poisson
from rectilab_dyadic import CubeKey, FlatDyadicGrid
from rectilab_errors import ArgumentError, PreconditionError, check_range
from rectilab_geometry import Domain, HyperplanePatch, SurfaceBall, adr_check, as_points
from rectilab_harmonic import LOW_CONFIDENCE, WalkConfig, WalkResult, corkscrew_pole, exit_points
from rectilab_log import status
from rectilab_potential import CHUNK, FundamentalSolution, single_layer, smoothstep
from rectilab_whitney import OFFSET, BoxUnion, WhitneyOracle, cube_boxes, encode_keys, w_Q

HARMONIC_TOL = 1e-3
STABLE_BAND = (0.8, 1.2)
THETA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
AINFTY_CAP = 4.0
POLE_FACTOR = 6.0
CELL_FRACTION = 1.0 / 16.0
GOLDEN = 0.6180339887498949
RADIAL_NODES = 96
ANGULAR_NODES = 48

CONE_FACTORS = {"gamma": 1.0, "gamma_tilde": 2.0, "lambda": 0.0, "lambda_ext": 0.0, "lambda_tilde": 0.0}
CONE_SIDES = {"gamma": ("interior",), "gamma_tilde": ("interior",), "lambda": ("interior",),
              "lambda_ext": ("exterior",), "lambda_tilde": ("interior", "exterior")}


@dataclass
class FunctionalReport:
    """Desigualdad evaluada: lados, constante implícita y barrido de escalas"""
    check_id: str
    lhs: float
    rhs: float
    constant: float
    tolerance: float = math.inf
    passed: bool = True
    stderr: float = 0.0
    scale: float = 1.0
    sweep: List[Dict[str, Any]] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    def rows(self) -> List[Dict[str, Any]]:
        """Filas (check_id, scale, lhs, rhs, constant, stderr, pass) para CSV"""
        out = [{"check_id": self.check_id, "scale": self.scale, "lhs": self.lhs, "rhs": self.rhs,
                "constant": self.constant, "stderr": self.stderr, "pass": self.passed}]
        for i, row in enumerate(self.sweep):
            out.append({"check_id": f"{self.check_id}[{i}]", "scale": row.get("scale", self.scale),
                        "lhs": row.get("lhs", math.nan), "rhs": row.get("rhs", math.nan),
                        "constant": row.get("constant", math.nan), "stderr": row.get("stderr", 0.0),
                        "pass": row.get("pass", self.passed)})
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {"check_id": self.check_id, "lhs": self.lhs, "rhs": self.rhs, "constant": self.constant,
                "tolerance": self.tolerance, "passed": self.passed, "stderr": self.stderr,
                "scale": self.scale, "sweep": list(self.sweep), "flags": list(self.flags),
                "details": dict(self.details)}


def nondecreasing(values: Sequence[float], rtol: float = 1e-12) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) >= -rtol * np.maximum(np.abs(v[1:]), 1e-300)))


def _row_chunks(rows: int, per_row: int) -> List[slice]:
    step = max(1, CHUNK // max(1, per_row))
    return [slice(i, min(i + step, rows)) for i in range(0, rows, step)]


# ---------------------------------------------------------------------------
# Campos armónicos
# ---------------------------------------------------------------------------

class HarmonicField:
    """Evaluador de u y ∇u en Ω"""

    name = "field"

    def __init__(self, dim: int, pole: Optional[np.ndarray] = None):
        self.dim = dim
        self.pole = None if pole is None else np.asarray(pole, dtype=float)
        self.flags: List[str] = []

    def value(self, Y: Any) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, Y: Any) -> np.ndarray:
        raise NotImplementedError

    def gradient_energy(self, Y: Any) -> np.ndarray:
        """|∇u|² en los puntos"""
        g = self.gradient(Y)
        return np.sum(g * g, axis=1)

    def hessian(self, Y: Any, step: Any) -> np.ndarray:
        """∇²u por diferencias centradas del gradiente"""
        pts = as_points(Y, self.dim)
        h = np.broadcast_to(np.asarray(step, dtype=float), (len(pts),))
        H = np.zeros((len(pts), self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            shift = h[:, None] * e
            H[:, :, j] = (self.gradient(pts + shift) - self.gradient(pts - shift)) / (2.0 * h[:, None])
        return H


class ConstantField(HarmonicField):
    name = "constant"

    def __init__(self, c: float, dim: int = 3):
        super().__init__(dim)
        self.c = float(c)

    def value(self, Y: Any) -> np.ndarray:
        return np.full(len(as_points(Y, self.dim)), self.c)

    def gradient(self, Y: Any) -> np.ndarray:
        return np.zeros((len(as_points(Y, self.dim)), self.dim))


class LinearField(HarmonicField):
    """u(Y) = a·Y + b"""

    name = "linear"

    def __init__(self, coef: Sequence[float], offset: float = 0.0):
        coef = np.asarray(coef, dtype=float)
        super().__init__(len(coef))
        self.coef = coef
        self.offset = float(offset)

    @classmethod
    def height(cls, dim: int = 3) -> "LinearField":
        e = np.zeros(dim)
        e[-1] = 1.0
        return cls(e)

    def value(self, Y: Any) -> np.ndarray:
        return as_points(Y, self.dim) @ self.coef + self.offset

    def gradient(self, Y: Any) -> np.ndarray:
        return np.tile(self.coef, (len(as_points(Y, self.dim)), 1))


class PoissonDiskField(HarmonicField):
    """Extensión de Poisson al semiespacio del indicador de un disco del borde"""

    name = "poisson-disk"

    def __init__(self, center: Sequence[float], radius: float, dim: int = 3, edges: int = 512):
        super().__init__(dim)
        if dim not in (2, 3):
            raise ArgumentError("extensión de Poisson cerrada solo en d = 2, 3")
        self.center = np.asarray(center, dtype=float)[:dim - 1]
        self.radius = float(radius)
        if dim == 3:
            angle = 2.0 * math.pi * np.arange(edges) / edges
            self.vertices = np.stack([self.center[0] + radius * np.cos(angle),
                                      self.center[1] + radius * np.sin(angle), np.zeros(edges)], axis=1)

    def _solid_angle(self, P: np.ndarray) -> np.ndarray:
        """Ángulo sólido del polígono inscrito por abanico de triángulos"""
        V = self.vertices
        C = np.append(self.center, 0.0)
        out = np.empty(len(P))
        for sl in _row_chunks(len(P), 8 * len(V)):
            Y = P[sl]
            a = np.broadcast_to((C - Y)[:, None, :], (len(Y), len(V), 3))
            b = V[None, :, :] - Y[:, None, :]
            c = np.roll(b, -1, axis=1)
            la = np.linalg.norm(a, axis=2)
            lb = np.linalg.norm(b, axis=2)
            lc = np.linalg.norm(c, axis=2)
            num = np.einsum("ijk,ijk->ij", a, np.cross(b, c))
            den = (la * lb * lc + np.einsum("ijk,ijk->ij", a, b) * lc
                   + np.einsum("ijk,ijk->ij", a, c) * lb + np.einsum("ijk,ijk->ij", b, c) * la)
            out[sl] = np.abs(2.0 * np.arctan2(num, den).sum(axis=1))
        return out

    def value(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.dim)
        t = pts[:, -1]
        if self.dim == 2:
            x = pts[:, 0]
            a, b = self.center[0] - self.radius, self.center[0] + self.radius
            return (np.arctan((b - x) / t) - np.arctan((a - x) / t)) / math.pi
        return self._solid_angle(pts) / (2.0 * math.pi)

    def gradient(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.dim)
        t = pts[:, -1]
        if self.dim == 2:
            x = pts[:, 0]
            sa = self.center[0] - self.radius - x
            sb = self.center[0] + self.radius - x
            gx = (-t / (t * t + sb * sb) + t / (t * t + sa * sa)) / math.pi
            gt = (-sb / (t * t + sb * sb) + sa / (t * t + sa * sa)) / math.pi
            return np.stack([gx, gt], axis=1)
        h = 1e-6 * t
        out = np.zeros((len(pts), 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            out[:, j] = (self.value(pts + h[:, None] * e) - self.value(pts - h[:, None] * e)) / (2.0 * h)
        return out


class GreenDerivativeField(HarmonicField):
    """u(Y) = ∂_{Y_j} G(Y, X̂) con muestras de ω^{X̂} en caché"""

    name = "green-derivative"

    def __init__(self, domain: Domain, pole: Any, axis: int = -1, cfg: Optional[WalkConfig] = None,
                 walks: Optional[int] = None):
        pole = as_points(pole, domain.dim)[0]
        super().__init__(domain.dim, pole)
        cfg = cfg or WalkConfig()
        self.domain = domain
        self.axis = axis % domain.dim
        self.walk: WalkResult = exit_points(domain, pole, cfg, walks)
        self.kernel = FundamentalSolution(domain.dim)
        self._select(np.arange(self.walk.count))
        if self.walk.escaped_fraction > 0.01:
            self.flags.append("escaped>1%")
        status(f"Campo ∂G: {self.M} muestras de ω^X̂ en caché")

    def _select(self, ids: np.ndarray) -> None:
        # caminatas escapadas cuentan en M y no aportan fuente
        self.ids = ids
        self.M = len(ids)
        self.sources = self._sources(ids)

    def _sources(self, ids: np.ndarray) -> np.ndarray:
        return self.walk.exits[ids[~self.walk.escaped[ids]]]

    def batches(self, parts: int) -> List["GreenDerivativeField"]:
        """Campos sobre lotes disjuntos de caminatas independientes"""
        if parts < 2 or parts > self.M:
            raise ArgumentError(f"número de lotes {parts} fuera de [2, {self.M}]")
        out = []
        for ids in np.array_split(self.ids, parts):
            part = copy.copy(self)
            part.flags = list(self.flags)
            part._select(ids)
            out.append(part)
        return out

    def _moments(self, Y: np.ndarray, fn: Callable[[np.ndarray], np.ndarray], width: int,
                 sources: Optional[np.ndarray] = None,
                 count: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        Z = self.sources if sources is None else sources
        M = self.M if count is None else count
        s1 = np.zeros((len(Y), width))
        s2 = np.zeros((len(Y), width))
        for sl in _row_chunks(len(Y), max(len(Z), 1) * self.dim * self.dim):
            R = (Y[sl, None, :] - Z[None, :, :]).reshape(-1, self.dim)
            K = fn(R).reshape(sl.stop - sl.start, len(Z), width)
            s1[sl] = K.sum(axis=1)
            s2[sl] = (K * K).sum(axis=1)
        return s1 / M, s2 / M

    def _first(self, R: np.ndarray) -> np.ndarray:
        return self.kernel.gradient(R)[:, self.axis:self.axis + 1]

    def _second(self, R: np.ndarray) -> np.ndarray:
        return self.kernel.hessian(R)[:, self.axis, :]

    def value(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.dim)
        mean, _ = self._moments(pts, self._first, 1)
        return self._first(pts - self.pole)[:, 0] - mean[:, 0]

    def gradient(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.dim)
        mean, _ = self._moments(pts, self._second, self.dim)
        return self._second(pts - self.pole) - mean

    def gradient_energy(self, Y: Any) -> np.ndarray:
        """|∇u|² sin sesgo de ruido: producto de las estimaciones de dos mitades independientes"""
        pts = as_points(Y, self.dim)
        if self.M < 2:
            return super().gradient_energy(pts)
        near = self._second(pts - self.pole)
        halves = [near - self._moments(pts, self._second, self.dim, self._sources(ids), len(ids))[0]
                  for ids in np.array_split(self.ids, 2)]
        return np.sum(halves[0] * halves[1], axis=1)

    def stderr(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.dim)
        mean, second = self._moments(pts, self._first, 1)
        var = np.maximum(second[:, 0] - mean[:, 0] ** 2, 0.0)
        return np.sqrt(var / max(self.M - 1, 1))


def check_harmonic(u: HarmonicField, probes: Any, scale: Any, tol: float = HARMONIC_TOL) -> float:
    """|Δu| ≤ tol·|∇²u| en las sondas; ArgumentError si falla"""
    pts = as_points(probes, u.dim)
    if len(pts) == 0:
        return 0.0
    step = 1e-3 * np.broadcast_to(np.asarray(scale, dtype=float), (len(pts),))
    H = u.hessian(pts, step)
    trace = np.abs(np.trace(H, axis1=1, axis2=2))
    norm = np.sqrt(np.sum(H * H, axis=(1, 2)))
    floor = 1e-8 * np.linalg.norm(u.gradient(pts), axis=1) / step
    bad = trace > tol * norm + floor
    if bad.any():
        raise ArgumentError(f"campo no armónico: |Δu| > {tol:g}·|∇²u| en {int(bad.sum())} sondas",
                            {"field": u.name, "probe": pts[np.argmax(bad)].tolist()})
    active = norm > floor
    return float(np.max(trace[active] / norm[active])) if active.any() else 0.0


# ---------------------------------------------------------------------------
# Conos diádicos
# ---------------------------------------------------------------------------

@dataclass
class DyadicCone:
    """Unión de cubos de Whitney (engordados) de los ancestros de x dentro de Q₀"""
    root: CubeKey
    apex: np.ndarray
    variant: str
    lam: float
    levels: List[int]
    stages: List[Tuple[np.ndarray, np.ndarray]]
    boundary: Any
    _union: Optional[BoxUnion] = None

    @property
    def factor(self) -> float:
        return CONE_FACTORS[self.variant] * self.lam

    @property
    def cubes(self) -> Tuple[np.ndarray, np.ndarray]:
        dim = self.boundary.dim
        ks = [k for k, _ in self.stages if len(k)]
        if not ks:
            return np.zeros(0, dtype=int), np.zeros((0, dim), dtype=np.int64)
        return np.concatenate(ks), np.vstack([i for k, i in self.stages if len(k)])

    def __len__(self) -> int:
        return int(sum(len(k) for k, _ in self.stages))

    def union(self) -> BoxUnion:
        if self._union is None:
            k, idx = self.cubes
            self._union = BoxUnion(k, idx, self.factor)
        return self._union

    def contains(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.boundary.dim)
        if len(self) == 0:
            return np.zeros(len(pts), dtype=bool)
        return self.union().contains(pts)

    def truncated(self, k: int) -> "DyadicCone":
        keep = [j for j, level in enumerate(self.levels) if level <= k]
        return DyadicCone(self.root, self.apex, self.variant, self.lam, [self.levels[j] for j in keep],
                          [self.stages[j] for j in keep], self.boundary)

    def nodes(self, sub: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nodos de cuadratura con pesos de la unión, acumulables por nivel"""
        dim = self.boundary.dim
        offsets = (np.stack(np.meshgrid(*([np.arange(sub)] * dim), indexing="ij"), axis=-1)
                   .reshape(-1, dim) + 0.5) / sub
        pts_all: List[np.ndarray] = []
        w_all: List[np.ndarray] = []
        stage_all: List[np.ndarray] = []
        prev_k: List[np.ndarray] = []
        prev_idx: List[np.ndarray] = []
        for j, (k, idx) in enumerate(self.stages):
            if len(k) == 0:
                continue
            lo, hi = cube_boxes(k, idx, self.factor)
            span = hi - lo
            P = (lo[:, None, :] + offsets[None, :, :] * span[:, None, :]).reshape(-1, dim)
            vol = np.repeat(np.prod(span, axis=1) / len(offsets), len(offsets))
            mult = np.maximum(BoxUnion(k, idx, self.factor).multiplicity(P), 1)
            w = vol / mult
            if prev_k:
                fresh = ~BoxUnion(np.concatenate(prev_k), np.vstack(prev_idx), self.factor).contains(P)
                P, w = P[fresh], w[fresh]
            pts_all.append(P)
            w_all.append(w)
            stage_all.append(np.full(len(P), j))
            prev_k.append(k)
            prev_idx.append(idx)
        if not pts_all:
            return np.zeros((0, dim)), np.zeros(0), np.zeros(0, dtype=int)
        return np.vstack(pts_all), np.concatenate(w_all), np.concatenate(stage_all)

    def samples(self, vertices: bool = True) -> np.ndarray:
        """Centros y vértices de las cajas engordadas"""
        k, idx = self.cubes
        dim = self.boundary.dim
        if len(k) == 0:
            return np.zeros((0, dim))
        lo, hi = cube_boxes(k, idx, self.factor)
        mid = 0.5 * (lo + hi)
        pts = [mid]
        if vertices:
            corners = np.stack(np.meshgrid(*([[0.0, 1.0]] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
            shrink = 1.0 - 1e-9
            for c in corners:
                pts.append(mid + shrink * (lo + c * (hi - lo) - mid))
        return np.vstack(pts)


class ConeFactory:
    """Construye conos diádicos reutilizando las familias 𝒲_Q ya calculadas"""

    def __init__(self, grid, oracle: WhitneyOracle, exterior: Optional[WhitneyOracle] = None):
        self.grid = grid
        self.interior = oracle
        self.exterior = exterior
        self.boundary = oracle.boundary
        self.cfg = oracle.cfg
        self._families: Dict[Tuple[str, CubeKey], Tuple[np.ndarray, np.ndarray]] = {}

    def oracle(self, side: str) -> WhitneyOracle:
        if side == "interior":
            return self.interior
        if self.exterior is None:
            self.exterior = WhitneyOracle(self.boundary, "exterior", self.cfg)
        return self.exterior

    def family(self, key: CubeKey, side: str = "interior") -> Tuple[np.ndarray, np.ndarray]:
        tag = (side, tuple(key))
        if tag not in self._families:
            self._families[tag] = w_Q(self.grid, self.oracle(side), key)
        return self._families[tag]

    def cone(self, root: CubeKey, x: Any, variant: str = "gamma", k: Optional[int] = None,
             depth: int = 3) -> DyadicCone:
        """Γ, Γ̃, Λ, Λ^ext, Λ̃ o la truncación Γ^k (k absoluto)"""
        if variant not in CONE_FACTORS:
            raise ArgumentError(f"variante de cono desconocida: {variant}")
        x = as_points(x, self.boundary.dim)[0]
        root = tuple(int(v) for v in root)
        top = root[0] + depth if k is None else int(k)
        if top < root[0]:
            raise ArgumentError(f"truncación k={top} por encima de Q₀", {"k": top, "root": list(root)})
        seen = set()
        levels: List[int] = []
        stages: List[Tuple[np.ndarray, np.ndarray]] = []
        for level in range(root[0], top + 1):
            if not self.grid.has_level(level):
                break
            Q = self.grid.locate(x, level)
            if not self.grid.is_ancestor(root, Q):
                raise ArgumentError("el vértice x no pertenece a Q₀", {"x": x.tolist(), "root": list(root)})
            new_k: List[int] = []
            new_idx: List[np.ndarray] = []
            for side in CONE_SIDES[variant]:
                kk, ii = self.family(Q, side)
                for a, row in zip(kk.tolist(), ii.tolist()):
                    tag = (side, a, *row)
                    if tag not in seen:
                        seen.add(tag)
                        new_k.append(a)
                        new_idx.append(row)
            dim = self.boundary.dim
            stages.append((np.asarray(new_k, dtype=int),
                           np.asarray(new_idx, dtype=np.int64).reshape(-1, dim)))
            levels.append(level)
        return DyadicCone(root, x, variant, self.cfg.lam, levels, stages, self.boundary)


def cone_monotonicity_check(factory: ConeFactory, inner: CubeKey, outer: CubeKey, x: Any,
                            k: int, sub: int = 1) -> Dict[str, Any]:
    """Q ⊆ Q' ⇒ Γ_Q(x) ⊆ Γ_{Q'}(x) sobre los nodos del cono interior"""
    small = factory.cone(inner, x, "gamma", k=k)
    big = factory.cone(outer, x, "gamma", k=k)
    pts, _, _ = small.nodes(sub)
    inside = big.contains(pts)
    return {"samples": int(len(pts)), "violations": int(np.sum(~inside)), "passed": bool(inside.all())}


def cone_splitting_check(factory: ConeFactory, root: CubeKey, P0: CubeKey, x: Any, z: Any,
                         k: int, sub: int = 1) -> Dict[str, Any]:
    """Γ_{Q₀}(x) ⊆ Γ_{P₀}(x) ∪ Γ_{Q₀}(z) con x ∈ P₀ ⊆ Q₀ y z en el padre de P₀"""
    grid = factory.grid
    parent = grid.parent(tuple(P0))
    if parent is None or not grid.is_ancestor(parent, grid.locate(z, parent[0])):
        raise ArgumentError("z no pertenece al padre de P₀", {"P0": list(P0)})
    full = factory.cone(root, x, "gamma", k=k)
    pts, _, _ = full.nodes(sub)
    covered = factory.cone(P0, x, "gamma", k=k).contains(pts) | factory.cone(root, z, "gamma", k=k).contains(pts)
    return {"samples": int(len(pts)), "violations": int(np.sum(~covered)), "passed": bool(covered.all())}


def cone_inclusion_check(factory: ConeFactory, root: CubeKey, x: Any, depth: int = 3,
                         sub: int = 1) -> Dict[str, Any]:
    """Γ ⊆ Γ̃ y radio de Γ̃ relativo a ℓ(Q₀)"""
    gamma = factory.cone(root, x, "gamma", depth=depth)
    tilde = factory.cone(root, x, "gamma_tilde", depth=depth)
    pts, _, _ = gamma.nodes(sub)
    inside = tilde.contains(pts)
    cube = factory.grid.cube(root)
    reach = np.linalg.norm(tilde.samples() - cube.center, axis=1)
    return {"violations": int(np.sum(~inside)), "kappa0": float(reach.max() / cube.ell) if len(reach) else 0.0,
            "passed": bool(inside.all())}


# ---------------------------------------------------------------------------
# Funciones cuadradas y maximales
# ---------------------------------------------------------------------------

@dataclass
class SquareProfile:
    """S^k acumulada por nivel del cono"""
    levels: List[int]
    values: np.ndarray
    nodes: int
    cube_sum: float

    @property
    def total(self) -> float:
        return float(self.values[-1]) if len(self.values) else 0.0

    def at(self, k: int) -> float:
        pick = [v for level, v in zip(self.levels, self.values) if level <= k]
        return float(pick[-1]) if pick else 0.0


def _require_pole_outside(u: HarmonicField, cone: DyadicCone) -> None:
    if u.pole is not None and bool(cone.contains(u.pole[None, :])[0]):
        raise ArgumentError("el polo del campo está dentro del cono", {"pole": u.pole.tolist()})


def square_profile(u: HarmonicField, cone: DyadicCone, sub: int = 1) -> SquareProfile:
    """(∬_cono |∇u|² δ^{1-n} dY)^{1/2} acumulada nivel a nivel"""
    _require_pole_outside(u, cone)
    n = cone.boundary.dim - 1
    pts, w, stage = cone.nodes(sub)
    per_stage = np.zeros(len(cone.stages))
    if len(pts):
        delta, _ = cone.boundary.distance(pts)
        dens = u.gradient_energy(pts) * delta ** (1 - n)
        per_stage = np.bincount(stage, weights=w * dens, minlength=len(cone.stages))
    k, idx = cone.cubes
    cube_sum = 0.0
    if len(k):
        lo, hi = cube_boxes(k, idx)
        delta_c, _ = cone.boundary.distance(0.5 * (lo + hi))
        cube_sum = float(np.sum(np.ldexp(1.0, -k) ** (n + 1) * delta_c ** (1 - n)))
    # la energía estimada por mitades puede ser negativa en una etapa
    totals = np.sqrt(np.maximum(np.cumsum(per_stage), 0.0))
    return SquareProfile(list(cone.levels), totals, int(len(pts)), cube_sum)


def square_function(u: HarmonicField, factory: ConeFactory, root: CubeKey, x: Any,
                    variant: str = "gamma", k: Optional[int] = None, depth: int = 3, sub: int = 1) -> float:
    """S_{Q₀}u(x) o su truncación S^k (cubos con ℓ(Q) ≥ 2^-k)"""
    return square_profile(u, factory.cone(root, x, variant, k=k, depth=depth), sub).total


def nt_max(u: HarmonicField, factory: ConeFactory, root: CubeKey, x: Any, depth: int = 3,
           vertices: bool = True) -> float:
    """Ñ_{Q₀,*}u(x) = sup |u| sobre centros y vértices de I** en Γ̃_{Q₀}(x)"""
    cone = factory.cone(root, x, "gamma_tilde", depth=depth)
    pts = cone.samples(vertices)
    if len(pts) == 0:
        return 0.0
    return float(np.max(np.abs(u.value(pts))))


def cube_samples(grid, key: CubeKey, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Muestras de σ sobre Q con pesos que suman σ(Q)"""
    cube = grid.cube(key)
    if isinstance(grid, FlatDyadicGrid):
        s = cube.ell / m
        axes = [cube.lo[a] + s * (np.arange(m) + 0.5) for a in range(grid.n)]
        flat = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.n)
        pts = np.hstack([flat, np.zeros((len(flat), 1))])
        return pts, np.full(len(pts), cube.sigma / len(pts))
    members = np.asarray(grid.members(cube.key))
    pts = grid.cloud.points[members]
    w = grid.cloud.weights[members]
    limit = m ** grid.n
    if len(pts) > limit:
        pick = np.linspace(0, len(pts) - 1, limit).astype(int)
        pts, w = pts[pick], w[pick]
    return pts, w * cube.sigma / w.sum()


def dyadic_max(f: Callable[[np.ndarray], np.ndarray], grid, root: CubeKey, x: Any, depth: int = 4,
               resolution: int = 3) -> float:
    """𝓜_{Q₀}f(x) = sup de promedios de |f| sobre Q ∋ x con Q ⊆ Q₀"""
    x = np.asarray(x, dtype=float)
    best = 0.0
    for level in range(root[0], root[0] + depth + 1):
        if not grid.has_level(level):
            break
        Q = grid.locate(x, level)
        if not grid.is_ancestor(root, Q):
            raise ArgumentError("x no pertenece a Q₀", {"x": x.tolist(), "root": list(root)})
        pts, w = cube_samples(grid, Q, 2 ** resolution)
        best = max(best, float(np.sum(w * np.abs(f(pts))) / np.sum(w)))
    return best


def _lq(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    return float(np.sum(weights * np.abs(values) ** q) ** (1.0 / q))


def good_lambda_experiment(u: HarmonicField, factory: ConeFactory, root: CubeKey, q: float = 2.0,
                           truncations: Sequence[int] = (1, 2, 3), apex_side: int = 4, sub: int = 1,
                           probes: int = 16, seed: int = 0) -> FunctionalReport:
    """‖S^k_{Q₀}u‖_q / ‖Ñ_{Q₀,*}u‖_q para cada truncación k (relativa a Q₀)"""
    check_range("q", q, (0.0, math.inf))
    if not truncations:
        raise ArgumentError("lista de truncaciones vacía")
    depth = max(truncations)
    apexes, weights = cube_samples(factory.grid, root, apex_side)
    cone = factory.cone(root, apexes[0], "gamma", depth=depth)
    pts, _, _ = cone.nodes(sub)
    if len(pts):
        pick = np.random.default_rng(seed).choice(len(pts), min(probes, len(pts)), replace=False)
        delta, _ = factory.boundary.distance(pts[pick])
        check_harmonic(u, pts[pick], delta)
    S = np.zeros((len(apexes), len(truncations)))
    N = np.zeros(len(apexes))
    for i, x in enumerate(apexes):
        cone = factory.cone(root, x, "gamma", depth=depth)
        profile = square_profile(u, cone, sub)
        S[i] = [profile.at(root[0] + t) for t in truncations]
        N[i] = nt_max(u, factory, root, x, depth=depth)
    norm_N = _lq(N, weights, q)
    norm_S = np.array([_lq(S[:, j], weights, q) for j in range(len(truncations))])
    scale = factory.grid.cube(root).ell
    flags = list(u.flags)
    if not norm_S.any():
        flags.append("trivial")
        sweep = [{"scale": scale, "lhs": 0.0, "rhs": norm_N, "constant": 0.0, "truncation": t, "pass": True}
                 for t in truncations]
        return FunctionalReport("good-lambda", 0.0, norm_N, 0.0, passed=True, scale=scale, sweep=sweep,
                                flags=flags, details={"q": q, "truncations": list(truncations)})
    C = norm_S / norm_N if norm_N > 0 else np.full(len(norm_S), math.inf)
    median = float(np.median(C))
    stable = bool(np.all(np.isfinite(C)) and np.all(C >= STABLE_BAND[0] * median)
                  and np.all(C <= STABLE_BAND[1] * median))
    sweep = [{"scale": scale, "lhs": float(s), "rhs": norm_N, "constant": float(c), "truncation": t,
              "pass": bool(np.isfinite(c))} for s, c, t in zip(norm_S, C, truncations)]
    status(f"good-λ en Q₀={root}: C_k = {np.round(C, 4).tolist()}")
    return FunctionalReport("good-lambda", float(norm_S[-1]), norm_N, float(C.max()), passed=stable,
                            scale=scale, sweep=sweep, flags=flags,
                            details={"q": q, "truncations": list(truncations), "median": median,
                                     "monotone": nondecreasing(norm_S)})


def good_lambda_sweep(fields: Sequence[Tuple[CubeKey, HarmonicField]], factory: ConeFactory, q: float = 2.0,
                      truncations: Sequence[int] = (1, 2, 3), apex_side: int = 2, batches: int = 4,
                      seed: int = 0) -> FunctionalReport:
    """Constantes good-λ por generación y truncación, dentro de ±20% de la mediana salvo 3·stderr

    Los campos con lotes (Monte Carlo) llevan error estándar por medias de lotes.
    """
    if not fields:
        raise ArgumentError("barrido good-λ sin generaciones")
    rows: List[Dict[str, Any]] = []
    flags: List[str] = []
    for root, u in fields:
        full = good_lambda_experiment(u, factory, root, q, truncations, apex_side, seed=seed)
        flags.extend(full.flags)
        se = np.zeros(len(truncations))
        if hasattr(u, "batches"):
            parts = [good_lambda_experiment(b, factory, root, q, truncations, apex_side, seed=seed)
                     for b in u.batches(batches)]
            Cb = np.array([[row["constant"] for row in p.sweep] for p in parts], dtype=float)
            se = Cb.std(axis=0, ddof=1) / math.sqrt(batches)
        for t, s, row in zip(truncations, se, full.sweep):
            rows.append({"scale": row["scale"], "lhs": row["lhs"], "rhs": row["rhs"], "constant": row["constant"],
                         "stderr": float(s), "truncation": t, "root": list(root)})
    C = np.array([row["constant"] for row in rows], dtype=float)
    finite = bool(np.all(np.isfinite(C)))
    median = float(np.median(C)) if finite else math.inf
    width = 0.5 * (STABLE_BAND[1] - STABLE_BAND[0])
    for row in rows:
        row["pass"] = finite and abs(row["constant"] - median) <= width * median + 3.0 * row["stderr"]
    spread = float(C.max() / C.min()) if finite and C.min() > 0 else math.inf
    within = bool(finite and np.all(np.abs(C - median) <= width * median))
    passed = finite and median > 0 and all(row["pass"] for row in rows)
    status(f"good-λ: mediana {median:.4g}, dispersión max/min {spread:.4g}")
    return FunctionalReport("good-lambda", float(C.max()), float(C.min()), spread, tolerance=1.0 + width,
                            passed=passed, stderr=float(max(row["stderr"] for row in rows)), sweep=rows,
                            flags=sorted(set(flags)),
                            details={"q": q, "median": median, "spread": spread, "within_band": within,
                                     "truncations": list(truncations), "batches": batches})


def generation_sweep(reports: Sequence[FunctionalReport], band: float = 2.0,
                     check_id: Optional[str] = None) -> FunctionalReport:
    """Uniformidad de la constante entre generaciones: max/min ≤ band"""
    if not reports:
        raise ArgumentError("barrido de generaciones vacío")
    values = np.array([r.constant for r in reports], dtype=float)
    finite = bool(np.all(np.isfinite(values)))
    lo, hi = float(values.min()), float(values.max())
    spread = hi / lo if lo > 0 else (1.0 if hi == 0 else math.inf)
    sweep = [{"scale": r.scale, "lhs": r.lhs, "rhs": r.rhs, "constant": r.constant, "stderr": r.stderr,
              "pass": r.passed} for r in reports]
    flags = sorted({f for r in reports for f in r.flags})
    return FunctionalReport(check_id or f"{reports[0].check_id}-sweep", hi, lo, spread, tolerance=band,
                            passed=finite and spread <= band and all(r.passed for r in reports),
                            sweep=sweep, flags=flags)


# ---------------------------------------------------------------------------
# Polo X̂_Q y función b_Q
# ---------------------------------------------------------------------------

def local_cone_kappa(factory: ConeFactory, key: CubeKey) -> float:
    """Menor κ₁ con ∪_{x∈Q} Λ̃(x) ⊂ B(x_Q, κ₁ℓ(Q))"""
    grid = factory.grid
    cube = grid.cube(key)
    reach = cube.r_out
    dim = factory.boundary.dim
    corners = np.stack(np.meshgrid(*([[0.0, 1.0]] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    for Q in (cube.key,) + tuple(grid.children(cube.key)):
        for side in ("interior", "exterior"):
            k, idx = factory.family(Q, side)
            lo, hi = cube_boxes(k, idx)
            for c in corners:
                far = np.linalg.norm(lo + c * (hi - lo) - cube.center, axis=1)
                reach = max(reach, float(far.max()))
    return reach * (1.0 + 1e-9) / cube.ell


def _halfspace_kernel(pole: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def kernel(y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(y)
        rows = np.hstack([y[:, :-1], np.full((len(y), 1), pole[-1])])
        return halfspace_poisson(rows, pole)
    return kernel


class CellKernel:
    """k^X constante por celdas a partir de muestras de ω^X"""

    def __init__(self, cells: "BoundaryCells", omega: np.ndarray):
        self.cells = cells
        self.density = np.where(cells.sigma > 0, omega / np.maximum(cells.sigma, 1e-300), 0.0)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        owner = self.cells.assign(np.atleast_2d(y))
        return np.where(owner >= 0, self.density[np.maximum(owner, 0)], 0.0)


@dataclass
class TbFunction:
    """b_Q = σ(Q)·η_Q·k^{X̂_Q}"""
    key: CubeKey
    x_Q: np.ndarray
    ell: float
    sigma_Q: float
    kappa1: float
    kappa2: float
    c: float
    R_hat: float
    pole: np.ndarray
    kernel: Callable[[np.ndarray], np.ndarray]
    flags: List[str] = field(default_factory=list)

    @property
    def support_radius(self) -> float:
        return 5.0 * self.R_hat

    def eta(self, y: np.ndarray) -> np.ndarray:
        """≡1 en 4B̂_Q, soporte en 5B̂_Q, |∇η| ≤ 1.875/R̂"""
        rho = np.linalg.norm(np.atleast_2d(y) - self.x_Q, axis=1) / self.R_hat
        return 1.0 - smoothstep(rho - 3.0)

    def g(self, y: np.ndarray) -> np.ndarray:
        return self.eta(y) * self.kernel(y)

    def density(self, y: np.ndarray) -> np.ndarray:
        return self.sigma_Q * self.g(y)

    def to_dict(self) -> Dict[str, Any]:
        return {"cube": list(self.key), "kappa1": self.kappa1, "kappa2": self.kappa2, "c": self.c,
                "R_hat": self.R_hat, "pole": self.pole.tolist(), "flags": list(self.flags)}


def tb_function(factory: ConeFactory, key: CubeKey, cfg: Optional[WalkConfig] = None) -> TbFunction:
    """Construye b_Q con κ₂ = 6/c y X̂_Q ∉ 6B̃_Q"""
    grid = factory.grid
    cube = grid.cube(key)
    domain = Domain(factory.boundary, "interior")
    kappa1 = local_cone_kappa(factory, cube.key)
    x_Q = cube.center
    tilde = SurfaceBall(tuple(float(v) for v in x_Q), kappa1 * cube.ell)
    c = float(achieved_c(domain, tilde, corkscrew_pole(domain, tilde))[0])
    if not c > 0:
        raise PreconditionError("sin punto de sacacorchos en B̃_Q", "X_{B̃_Q} ∈ Ω", {"cube": list(cube.key)})
    kappa2 = POLE_FACTOR / c
    R_hat = kappa2 * kappa1 * cube.ell
    pole = corkscrew_pole(domain, SurfaceBall(tilde.center, R_hat))
    gap = float(np.linalg.norm(pole - x_Q))
    if gap < POLE_FACTOR * kappa1 * cube.ell * (1.0 - 1e-9):
        raise PreconditionError("X̂_Q dentro de 6B̃_Q", "X̂_Q ∉ 6B̃_Q",
                                {"pole": pole.tolist(), "kappa1": kappa1, "c": c})
    flags: List[str] = []
    E = factory.boundary
    if isinstance(E, HyperplanePatch) and E.infinite:
        kernel: Callable[[np.ndarray], np.ndarray] = _halfspace_kernel(pole)
    else:
        cells, omega, walk = _kernel_cells(domain, SurfaceBall(tilde.center, 5.0 * R_hat), pole,
                                           cfg or WalkConfig(), CELL_FRACTION / 2.0)
        if walk.escaped_fraction > 0.01:
            flags.append("escaped>1%")
        kernel = CellKernel(cells, omega)
    return TbFunction(cube.key, x_Q, cube.ell, cube.sigma, kappa1, kappa2, c, R_hat, pole, kernel, flags)


def _disk_hessian(t: np.ndarray, rho: float, n: int) -> np.ndarray:
    """∇²𝒮[1_{disco(ŷ, ρ)}] en Y = ŷ + t e_d"""
    if n == 2:
        f2 = 0.5 * rho * rho / (rho * rho + t * t) ** 1.5
    else:
        f2 = rho / (math.pi * (rho * rho + t * t))
    H = np.zeros((len(t), n + 1, n + 1))
    for a in range(n):
        H[:, a, a] = -f2 / n
    H[:, n, n] = f2
    return H


def _flat_layer_hessian(tb: TbFunction, Y: np.ndarray) -> np.ndarray:
    """∇²𝒮b sobre el plano: término constante cerrado más cuadratura polar graduada"""
    dim = Y.shape[1]
    n = dim - 1
    kernel = FundamentalSolution(dim)
    t = Y[:, -1]
    at = np.abs(t)
    foot = Y.copy()
    foot[:, -1] = 0.0
    g0 = tb.g(foot)
    rho_max = tb.support_radius + float(np.max(np.linalg.norm(foot - tb.x_Q, axis=1))) + tb.ell
    if n == 2:
        theta = 2.0 * math.pi * (np.arange(ANGULAR_NODES) + 0.5) / ANGULAR_NODES
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        dtheta = 2.0 * math.pi / ANGULAR_NODES
    else:
        dirs = np.array([[1.0], [-1.0]])
        dtheta = 1.0
    out = np.zeros((len(Y), dim, dim))
    per = RADIAL_NODES * len(dirs)
    for sl in _row_chunks(len(Y), per * dim * dim):
        tt = at[sl]
        top = np.arcsinh(rho_max / tt)
        frac = (np.arange(RADIAL_NODES) + 0.5) / RADIAL_NODES
        u = top[:, None] * frac[None, :]
        rho = tt[:, None] * np.sinh(u)
        jac = tt[:, None] * np.cosh(u) * (top[:, None] / RADIAL_NODES) * rho ** (n - 1) * dtheta
        offs = rho[:, :, None, None] * dirs[None, None, :, :]
        Ysrc = np.zeros((len(tt), RADIAL_NODES, len(dirs), dim))
        Ysrc[..., :n] = foot[sl, None, None, :n] + offs
        src = Ysrc.reshape(-1, dim)
        gy = tb.g(src).reshape(len(tt), RADIAL_NODES, len(dirs)) - g0[sl, None, None]
        R = (Y[sl, None, None, :] - Ysrc).reshape(-1, dim)
        K = kernel.hessian(R).reshape(len(tt), RADIAL_NODES, len(dirs), dim, dim)
        w = (gy * jac[:, :, None])[..., None, None]
        out[sl] = np.sum(w * K, axis=(1, 2))
    disk = _disk_hessian(t, rho_max, n)
    return tb.sigma_Q * (out + g0[:, None, None] * disk)


def layer_hessian(E, tb: TbFunction, Y: Any) -> np.ndarray:
    """∇²𝒮b_Q(Y) fuera del borde"""
    pts = as_points(Y, E.dim)
    if isinstance(E, HyperplanePatch) and E.infinite and E.dim in (2, 3):
        return _flat_layer_hessian(tb, pts)
    delta, _ = E.distance(pts)
    h = max(float(delta.min()) / 3.0, 1e-3 * tb.ell)
    return single_layer(E, tb.density, pts, 2, h=h, method="points").value


def tb_conditions(factory: ConeFactory, key: CubeKey, q: float = 2.0, cfg: Optional[WalkConfig] = None,
                  apex_side: int = 2, depth: int = 1, sub: int = 1, samples: int = 32,
                  seed: int = 0) -> FunctionalReport:
    """(a) ∫|b|^q/σ(Q), (b) |∫_Q b|/σ(Q), (c) prueba L^q de la función cuadrada; 𝔸₀ = max(a, 1/b, c)"""
    check_range("q", q, (1.0, 2.0), closed=(False, True))
    E = factory.boundary
    grid = factory.grid
    n = E.dim - 1
    tb = tb_function(factory, key, cfg)
    pts, w = _local_cloud(E, tb.x_Q, tb.support_radius, tb.R_hat / 32.0)
    a = float(np.sum(w * np.abs(tb.density(pts)) ** q)) / tb.sigma_Q
    qp, qw = cube_samples(grid, tb.key, 8)
    b = abs(float(np.sum(qw * tb.density(qp)))) / tb.sigma_Q
    apexes, aw = cube_samples(grid, tb.key, apex_side)
    S2 = np.zeros(len(apexes))
    nodes = 0
    for i, x in enumerate(apexes):
        cone = factory.cone(tb.key, x, "lambda_tilde", depth=depth)
        P, W, _ = cone.nodes(sub)
        if len(P) == 0:
            continue
        nodes += len(P)
        delta, _ = E.distance(P)
        H = layer_hessian(E, tb, P)
        S2[i] = float(np.sum(W * np.sum(H * H, axis=(1, 2)) * delta ** (1 - n)))
    # ∫_Q (S²)^{q/2} dσ con el peso de cada ápice
    c_val = float(np.sum(aw * S2 ** (q / 2.0))) / tb.sigma_Q
    flags = list(tb.flags)
    if nodes == 0:
        flags.append("cone-underresolved")
    hess = tb_hessian_bound(factory, tb, samples, seed)
    A0 = max(a, 1.0 / b if b > 0 else math.inf, c_val)
    passed = math.isfinite(A0) and math.isfinite(hess["C"])
    status(f"Tb en Q={tb.key}: a={a:.4e}, b={b:.4e}, c={c_val:.4e}, 𝔸₀={A0:.4e}")
    return FunctionalReport("tb", A0, 1.0, A0, passed=passed, scale=tb.ell, flags=flags,
                            sweep=[{"scale": tb.ell, "lhs": a, "rhs": 1.0, "constant": a},
                                   {"scale": tb.ell, "lhs": b, "rhs": 1.0, "constant": 1.0 / b if b > 0 else math.inf},
                                   {"scale": tb.ell, "lhs": c_val, "rhs": 1.0, "constant": c_val}],
                            details={"a": a, "b": b, "c": c_val, "q": q, "nodes": nodes,
                                     "apex_square": S2.tolist(), "apex_weights": aw.tolist(),
                                     "hessian_C": hess["C"], "tb": tb.to_dict()})


def tb_hessian_bound(factory: ConeFactory, tb: TbFunction, samples: int = 32, seed: int = 0) -> Dict[str, Any]:
    """max |∇²𝒮b_Q(X)|·ℓ(Q) sobre muestras de B̂_Q ∩ Ω_ext"""
    E = factory.boundary
    rng = np.random.default_rng(seed)
    kept: List[np.ndarray] = []
    for _ in range(64):
        g = rng.standard_normal((4 * samples, E.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        X = tb.x_Q + tb.R_hat * rng.random(len(g))[:, None] ** (1.0 / E.dim) * g
        delta, _ = E.distance(X)
        ok = E.contains(X, "exterior") & (delta >= 0.25 * tb.ell)
        kept.extend(X[ok])
        if len(kept) >= samples:
            break
    if not kept:
        return {"C": 0.0, "samples": 0}
    X = np.array(kept[:samples])
    H = layer_hessian(E, tb, X)
    size = np.sqrt(np.sum(H * H, axis=(1, 2)))
    return {"C": float(size.max() * tb.ell), "samples": int(len(X))}


# ---------------------------------------------------------------------------
# Cota no tangencial de la derivada de Green
# ---------------------------------------------------------------------------

def nt_green_bound(factory: ConeFactory, key: CubeKey, q: float = 2.0, cfg: Optional[WalkConfig] = None,
                   apex_side: int = 2, depth: int = 2, walks: Optional[int] = None, spot: int = 10,
                   seed: int = 0) -> FunctionalReport:
    """‖Ñ_{Q,*}(∂_t G(·, X̂_Q))‖^q_{L^q(Q)} · σ(Q)^{q-1}"""
    check_range("q", q, (1.0, math.inf))
    tb = tb_function(factory, key, cfg)
    domain = Domain(factory.boundary, "interior")
    u = GreenDerivativeField(domain, tb.pole, -1, cfg, walks)
    apexes, aw = cube_samples(factory.grid, tb.key, apex_side)
    N = np.zeros(len(apexes))
    worst = None
    cloud: List[np.ndarray] = []
    for i, x in enumerate(apexes):
        cone = factory.cone(tb.key, x, "gamma_tilde", depth=depth)
        _require_pole_outside(u, cone)
        pts = cone.samples(vertices=False)
        if len(pts) == 0:
            continue
        values = np.abs(u.value(pts))
        j = int(np.argmax(values))
        N[i] = values[j]
        if worst is None or values[j] > worst[1]:
            worst = (pts[j], values[j])
        cloud.append(pts)
    value = float(np.sum(aw * N ** q)) * tb.sigma_Q ** (q - 1.0)
    flags = list(u.flags)
    stderr = 0.0
    if worst is not None:
        err = float(u.stderr(worst[0][None, :])[0])
        stderr = value * q * err / max(worst[1], 1e-300)
        if err > LOW_CONFIDENCE * worst[1]:
            flags.append("low-confidence")
    spot_rows = _green_spot_check(u, factory.boundary, np.vstack(cloud) if cloud else np.zeros((0, u.dim)),
                                  spot, seed)
    if any(not math.isfinite(r["ratio"]) for r in spot_rows):
        flags.append("low-confidence")
    ratios = [r["ratio"] for r in spot_rows if math.isfinite(r["ratio"])]
    return FunctionalReport("nt-green", value, tb.sigma_Q ** (1.0 - q), value, passed=math.isfinite(value),
                            stderr=stderr, scale=tb.ell, flags=sorted(set(flags)),
                            details={"q": q, "spot": spot_rows,
                                     "spot_min": min(ratios) if ratios else math.nan,
                                     "spot_max": max(ratios) if ratios else math.nan,
                                     "tb": tb.to_dict()})


def _green_spot_check(u: GreenDerivativeField, E, pts: np.ndarray, count: int, seed: int) -> List[Dict[str, Any]]:
    """|u(Y)|·δ(Y)^n frente a ω^{X̂}(Δ_Y) en puntos del cono"""
    if len(pts) == 0 or count <= 0:
        return []
    pick = np.random.default_rng(seed).choice(len(pts), min(count, len(pts)), replace=False)
    Y = pts[pick]
    delta, near = E.distance(Y)
    values = np.abs(u.value(Y))
    n = E.dim - 1
    rows = []
    for y, d, x, v in zip(Y, delta, near, values):
        hits = int(np.sum(np.linalg.norm(u.sources - x, axis=1) < d))
        omega = hits / u.M
        ratio = v * d ** n / omega if hits >= 10 else math.inf
        rows.append({"Y": y.tolist(), "delta": float(d), "omega": omega, "hits": hits, "ratio": float(ratio)})
    return rows


# ---------------------------------------------------------------------------
# Hölder inversa y A∞
# ---------------------------------------------------------------------------

@dataclass
class BoundaryCells:
    """Trozo del borde partido por una retícula ambiente de lado fijo"""
    side: float
    origin: np.ndarray
    codes: np.ndarray
    sigma: np.ndarray
    centers: np.ndarray

    @classmethod
    def build(cls, points: np.ndarray, weights: np.ndarray, side: float, origin: np.ndarray) -> "BoundaryCells":
        keys = np.floor((points - origin) / side).astype(np.int64)
        codes = encode_keys(np.zeros(len(keys), dtype=int), keys)
        uniq, inverse = np.unique(codes, return_inverse=True)
        sigma = np.bincount(inverse, weights=weights, minlength=len(uniq))
        centers = np.stack([np.bincount(inverse, weights=weights * points[:, a], minlength=len(uniq))
                            for a in range(points.shape[1])], axis=1) / sigma[:, None]
        return cls(side, origin, uniq, sigma, centers)

    def __len__(self) -> int:
        return len(self.codes)

    def assign(self, Z: np.ndarray) -> np.ndarray:
        """Índice de celda de cada punto, -1 fuera de la partición"""
        scaled = np.floor((Z - self.origin) / self.side)
        inside = np.all((scaled >= 0) & (scaled < OFFSET), axis=1)
        keys = np.where(inside[:, None], scaled, 0).astype(np.int64)
        codes = encode_keys(np.zeros(len(keys), dtype=int), keys)
        pos = np.minimum(np.searchsorted(self.codes, codes), len(self.codes) - 1)
        return np.where(inside & (self.codes[pos] == codes), pos, -1)


def _local_cloud(E, center: np.ndarray, radius: float, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Muestra ponderada de E ∩ B(center, radius)"""
    center = np.asarray(center, dtype=float)
    if isinstance(E, HyperplanePatch) and E.infinite:
        lo = float(np.min(center[:-1])) - radius
        hi = float(np.max(center[:-1])) + radius
        cloud = HyperplanePatch(E.dim, lo, hi, infinite=False).sample(h)
    else:
        cloud = E.sample(h)
    keep = np.linalg.norm(cloud.points - center, axis=1) < radius
    return cloud.points[keep], cloud.weights[keep]


def _kernel_cells(domain: Domain, ball: SurfaceBall, pole: np.ndarray, cfg: WalkConfig,
                  cell_fraction: float) -> Tuple[BoundaryCells, np.ndarray, WalkResult]:
    """ω̂^X por celda de lado r·cell_fraction dentro de Δ"""
    E = domain.boundary
    x = ball.point
    r = ball.radius
    side = cell_fraction * r
    pts, w = _local_cloud(E, x, r, side / 4.0)
    if len(pts) == 0:
        raise ArgumentError("Δ no contiene muestras del borde", {"center": list(ball.center), "radius": r})
    cells = BoundaryCells.build(pts, w, side, x - (r + GOLDEN * side))
    walk = exit_points(domain, pole, cfg)
    owner = cells.assign(walk.exits)
    owner[walk.escaped | (np.linalg.norm(walk.exits - x, axis=1) >= r)] = -1
    counts = np.bincount(owner[owner >= 0], minlength=len(cells)).astype(float)
    return cells, counts / walk.count, walk


def _lp_integral(omega: np.ndarray, sigma: np.ndarray, p: float, M: int) -> Tuple[float, float]:
    """∫ k^p dσ con estimador insesgado para p = 2 y error por el método delta multinomial"""
    if p == 2.0:
        vals = (M * omega ** 2 - omega) / ((M - 1) * sigma)
    else:
        vals = omega ** p * sigma ** (1.0 - p)
    g = p * omega ** (p - 1.0) * sigma ** (1.0 - p)
    var = (float(np.sum(g * g * omega)) - float(np.sum(g * omega)) ** 2) / M
    return float(vals.sum()), math.sqrt(max(var, 0.0))


def _sub_centers(cells: BoundaryCells, x: np.ndarray, allowed: float, count: int,
                 rng: np.random.Generator) -> List[np.ndarray]:
    dist = np.linalg.norm(cells.centers - x, axis=1)
    pool = np.nonzero(dist <= allowed)[0]
    out = [x]
    if len(pool):
        out.extend(cells.centers[rng.choice(pool, min(count, len(pool)), replace=False)])
    return out


def rh_check(domain: Domain, ball: SurfaceBall, p: float = 2.0, cfg: Optional[WalkConfig] = None,
             variant: str = "lq", pole: Optional[Any] = None, cell_fraction: float = CELL_FRACTION,
             subballs: int = 4, seed: int = 0) -> FunctionalReport:
    """Hölder inversa del núcleo de Poisson: ∫_Δ (k^{X_Δ})^p dσ · σ(Δ)^{p-1} y variantes"""
    check_range("p", p, (1.0, math.inf))
    cfg = cfg or WalkConfig()
    pole = corkscrew_pole(domain, ball) if pole is None else as_points(pole, domain.dim)[0]
    cells, omega, walk = _kernel_cells(domain, ball, pole, cfg, cell_fraction)
    flags = ["escaped>1%"] if walk.escaped_fraction > 0.01 else []
    sigma_D = float(cells.sigma.sum())
    x = ball.point
    r = ball.radius
    if variant == "lq":
        integral, err = _lp_integral(omega, cells.sigma, p, walk.count)
        value = integral * sigma_D ** (p - 1.0)
        status(f"RH_{p:g}: ∫k^p σ(Δ)^(p-1) = {value:.5f} ± {err * sigma_D ** (p - 1.0):.5f}")
        return FunctionalReport("rh-lq", integral, sigma_D ** (1.0 - p), value,
                                stderr=err * sigma_D ** (p - 1.0), scale=r, flags=flags,
                                passed=math.isfinite(value),
                                details={"p": p, "sigma": sigma_D, "omega": float(omega.sum()),
                                         "cells": len(cells), "walks": walk.count,
                                         "pole": pole.tolist()})
    k = np.where(cells.sigma > 0, omega / cells.sigma, 0.0)
    rng = np.random.default_rng(seed)

    def average(center: np.ndarray, radius: float, power: float) -> float:
        mask = np.linalg.norm(cells.centers - center, axis=1) < radius
        s = cells.sigma[mask]
        return float(np.sum(s * k[mask] ** power) / s.sum()) if s.sum() > 0 else math.nan

    rows = []
    if variant == "classic":
        shapes = [(c, 0.25 * r, 0.25 * r) for c in _sub_centers(cells, x, 0.75 * r, subballs, rng)]
    elif variant == "weak":
        shapes = [(c, 0.25 * r, 0.5 * r) for c in _sub_centers(cells, x, 0.5 * r, subballs, rng)]
    elif variant == "pole-fixed":
        shapes = []
        for j in (1, 2, 3):
            rr = r * 2.0 ** -j
            shapes.extend((c, rr, rr) for c in _sub_centers(cells, x, r - rr, subballs, rng))
    else:
        raise ArgumentError(f"variante RH desconocida: {variant}")
    for c, r_in, r_out in shapes:
        lhs = average(c, r_in, p) ** (1.0 / p)
        rhs = average(c, r_out, 1.0)
        if not (math.isfinite(lhs) and math.isfinite(rhs)) or rhs == 0.0:
            continue
        rows.append({"scale": r_in, "lhs": lhs, "rhs": rhs, "constant": lhs / rhs, "center": c.tolist()})
    if not rows:
        raise ArgumentError("ninguna sub-bola con masa estimada", {"variant": variant})
    C = max(row["constant"] for row in rows)
    return FunctionalReport(f"rh-{variant}", max(row["lhs"] for row in rows), min(row["rhs"] for row in rows), C,
                            passed=math.isfinite(C), scale=r, sweep=rows, flags=flags,
                            details={"p": p, "walks": walk.count, "pole": pole.tolist()})


def fit_ainfty(omega_F: Any, sigma_F: Any, omega_D: Any, sigma_D: Any,
               theta_grid: Sequence[float] = THETA_GRID, cap: float = AINFTY_CAP) -> Dict[str, Any]:
    """Ajuste (θ, C) de ω(F)/ω(Δ') ≤ C (σ(F)/σ(Δ'))^θ: el mayor θ con C(θ) ≤ cap"""
    wF, sF, wD, sD = (np.asarray(v, dtype=float) for v in (omega_F, sigma_F, omega_D, sigma_D))
    ok = (sF > 0) & (sD > 0) & (wD > 0)
    rw = wF[ok] / wD[ok]
    rs = sF[ok] / sD[ok]
    table = []
    for theta in theta_grid:
        C = float(np.max(rw / rs ** theta)) if len(rw) else math.nan
        table.append({"theta": float(theta), "C": C})
    good = [row for row in table if math.isfinite(row["C"]) and row["C"] <= cap]
    best = good[-1] if good else table[0]
    return {"theta": best["theta"], "C": best["C"], "within_cap": bool(good), "table": table,
            "samples": int(ok.sum())}


def _random_sets(rng: np.random.Generator, positions: np.ndarray, count: int) -> List[np.ndarray]:
    """Uniones aleatorias de celdas: Bernoulli y racimos"""
    m = len(positions)
    extent = float(np.max(np.linalg.norm(positions - positions.mean(axis=0), axis=1))) + 1e-300
    out = []
    for i in range(count):
        if i % 2 == 0:
            mask = rng.random(m) < (0.1, 0.3, 0.5)[(i // 2) % 3]
        else:
            seed_cell = positions[rng.integers(m)]
            mask = np.linalg.norm(positions - seed_cell, axis=1) <= rng.random() * extent
        if mask.any():
            out.append(mask)
    return out


def ainfty_check(domain: Domain, ball: Optional[SurfaceBall] = None, cfg: Optional[WalkConfig] = None,
                 variant: str = "classic", grid: Any = None, key: Optional[CubeKey] = None, sets: int = 48,
                 theta_grid: Sequence[float] = THETA_GRID, cap: float = AINFTY_CAP,
                 cell_fraction: float = CELL_FRACTION, seed: int = 0) -> FunctionalReport:
    """ω ∈ A∞(Δ) clásica, diádica o débil con (θ, C) ajustados"""
    cfg = cfg or WalkConfig()
    rng = np.random.default_rng(seed)
    wF: List[float] = []
    sF: List[float] = []
    wD: List[float] = []
    sD: List[float] = []
    if variant == "dyadic":
        if not isinstance(grid, FlatDyadicGrid) or key is None:
            raise ArgumentError("la variante diádica requiere una rejilla plana y un cubo Q")
        cube = grid.cube(key)
        pole = corkscrew_pole(domain, SurfaceBall(tuple(float(v) for v in cube.center), cube.ell))
        fine = cube.k + 3
        base = np.asarray(cube.key[1:], dtype=np.int64) * 8
        walk = exit_points(domain, pole, cfg)
        local = grid.locate_index(walk.exits, fine) - base
        inside = np.all((local >= 0) & (local < 8), axis=1) & ~walk.escaped
        shape = (8,) * grid.n
        counts = np.zeros(shape)
        np.add.at(counts, tuple(local[inside].T), 1.0)
        omega = counts / walk.count
        sigma_cell = math.ldexp(1.0, -fine) ** grid.n
        subs = [(slice(0, 8),) * grid.n]
        corners = np.stack(np.meshgrid(*([[0, 4]] * grid.n), indexing="ij"), axis=-1).reshape(-1, grid.n)
        subs += [tuple(slice(int(c), int(c) + 4) for c in corner) for corner in corners]
        for region in subs:
            w_cells = omega[region].ravel()
            positions = np.stack(np.meshgrid(*[np.arange(s.start, s.stop) for s in region], indexing="ij"),
                                 axis=-1).reshape(-1, grid.n).astype(float)
            for mask in _random_sets(rng, positions, sets):
                wF.append(float(w_cells[mask].sum()))
                sF.append(float(mask.sum()) * sigma_cell)
                wD.append(float(w_cells.sum()))
                sD.append(len(w_cells) * sigma_cell)
        scale = cube.ell
        flags = ["escaped>1%"] if walk.escaped_fraction > 0.01 else []
    else:
        if ball is None:
            raise ArgumentError("se requiere la bola Δ")
        pole = corkscrew_pole(domain, ball)
        cells, omega, walk = _kernel_cells(domain, ball, pole, cfg, cell_fraction)
        x = ball.point
        r = ball.radius
        if variant == "classic":
            shapes = [(x, r, r)] + [(c, 0.5 * r, 0.5 * r) for c in _sub_centers(cells, x, 0.5 * r, 3, rng)[1:]]
        elif variant == "weak":
            shapes = [(c, 0.25 * r, 0.5 * r) for c in _sub_centers(cells, x, 0.5 * r, 3, rng)]
        else:
            raise ArgumentError(f"variante A∞ desconocida: {variant}")
        for c, r_in, r_out in shapes:
            dist = np.linalg.norm(cells.centers - c, axis=1)
            members = np.nonzero(dist < r_in)[0]
            if len(members) == 0:
                continue
            outer = float(omega[dist < r_out].sum())
            for mask in _random_sets(rng, cells.centers[members], sets):
                wF.append(float(omega[members][mask].sum()))
                sF.append(float(cells.sigma[members][mask].sum()))
                wD.append(outer)
                sD.append(float(cells.sigma[members].sum()))
        scale = r
        flags = ["escaped>1%"] if walk.escaped_fraction > 0.01 else []
    fit = fit_ainfty(wF, sF, wD, sD, theta_grid, cap)
    if not fit["within_cap"]:
        flags.append("theta-above-cap")
    return FunctionalReport(f"ainfty-{variant}", fit["C"], cap, fit["C"], tolerance=cap,
                            passed=math.isfinite(fit["C"]), scale=scale, flags=flags,
                            sweep=[{"scale": scale, "lhs": row["theta"], "rhs": cap, "constant": row["C"]}
                                   for row in fit["table"]],
                            details={"theta": fit["theta"], "samples": fit["samples"], "walks": walk.count})


# ---------------------------------------------------------------------------
# Bola τ₀ de medida pequeña
# ---------------------------------------------------------------------------

def tau0(C1: float, n: int) -> float:
    """τ₀ = (2C₁²)^{-1/n}"""
    return (2.0 * C1 * C1) ** (-1.0 / n)


@dataclass
class TauBall:
    """Δ(x_Q, τ₀ r_Q) con sus cotas de medida"""
    surface_ball: SurfaceBall
    tau0: float
    sigma: float
    lower: float
    upper: float
    contained: bool

    @property
    def passed(self) -> bool:
        return self.contained and self.lower <= self.sigma <= self.upper

    @property
    def slack(self) -> Tuple[float, float]:
        return self.sigma / self.lower - 1.0, 1.0 - self.sigma / self.upper


def tau0_ball(grid, key: CubeKey, C1: Optional[float] = None, C2: Optional[float] = None) -> TauBall:
    """Bola con clausura ⊂ Q y (2C₁⁴C₂ⁿ)^{-1}σ(Q) ≤ σ ≤ (3/4)σ(Q)"""
    key = tuple(int(v) for v in key)
    if grid.is_rim(key):
        raise ArgumentError("cubo degenerado en el borde de la ventana", {"cube": list(key)})
    cube = grid.cube(key)
    E = grid.boundary
    n = grid.n
    r_Q = cube.r_in
    if C1 is None:
        C1 = adr_check(E, [cube.center], [r_Q, cube.ell]).constant
    if C2 is None:
        C2 = cube.containment_constant
    t0 = tau0(C1, n)
    ball = SurfaceBall(tuple(float(v) for v in cube.center), t0 * r_Q)
    sigma = E.sigma_ball(cube.center, t0 * r_Q)
    lower = cube.sigma / (2.0 * C1 ** 4 * C2 ** n)
    return TauBall(ball, t0, sigma, lower, 0.75 * cube.sigma, t0 < 1.0)
