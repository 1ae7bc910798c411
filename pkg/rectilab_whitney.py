"""
Rectilab Whitney - Descomposición de Whitney y dominios de dientes de sierra
Regiones U_Q, cajas de Carleson T_Q y T_Δ, Ω_F, Ω_{F,Q} y dominios aproximantes Ω_N
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from rectilab_dyadic import CubeFamily, CubeKey, FlatDyadicGrid
from rectilab_errors import ArgumentError, ConfigurationError, GridConstructionError
from rectilab_geometry import (BoundaryModel, Domain, HyperplanePatch, PolyhedralBoundary,
                               SurfaceBall, as_points, box_gap)
from rectilab_log import status

OFFSET = 1 << 20
BASE = 1 << 21


@dataclass
class WhitneyConfig:
    """Constantes de Whitney y de las regiones"""
    ratio: float = 5.5
    lam: float = 0.05
    c0_factor: float = 8.0
    m0: int = 2
    reference: bool = False

    def __post_init__(self):
        if not (0.0 < self.lam <= 0.1):
            raise ArgumentError(f"λ={self.lam} fuera de (0, λ0/2] con λ0 = 0.2", {"lam": self.lam})
        if self.m0 < 0:
            raise ArgumentError(f"m0={self.m0} negativo")

    def C0(self, dim: int) -> float:
        if self.reference:
            return max(1000.0 * math.sqrt(dim - 1), self.c0_factor * math.sqrt(dim))
        return self.c0_factor * math.sqrt(dim)

    def kappa0(self, dim: int, c1: float) -> float:
        """κ0 a priori: alcance de T̃_Q0 en unidades de ℓ(Q0) para cubos de diámetro ≤ c1·ℓ"""
        return self.C0(dim) + 0.5 * c1 + (1.0 + 2.0 * self.lam) * math.sqrt(dim) * 2 ** self.m0

    @property
    def max_ratio(self) -> float:
        return 2.0 * self.ratio + 2.0

    def to_dict(self) -> Dict[str, Any]:
        return {"ratio": self.ratio, "lam": self.lam, "c0_factor": self.c0_factor,
                "m0": self.m0, "reference": self.reference}


def encode_keys(k: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Codifica (k, idx) en enteros de 64 bits por nivel"""
    code = np.zeros(len(idx), dtype=np.int64)
    for a in range(idx.shape[1] - 1, -1, -1):
        code = code * BASE + (idx[:, a] + OFFSET)
    return code


def cube_boxes(k: np.ndarray, idx: np.ndarray, factor: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Cajas (1 + factor) I de los cubos diádicos (k, idx)"""
    s = np.ldexp(1.0, -np.asarray(k, dtype=int))[:, None]
    lo = idx * s
    hi = (idx + 1) * s
    if factor:
        pad = 0.5 * factor * s
        lo = lo - pad
        hi = hi + pad
    return lo, hi


def fatten(k: int, idx: Sequence[int], lam: float) -> Tuple[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """(I*, I**) = ((1+λ)I, (1+2λ)I)"""
    if not (0.0 < lam <= 0.1):
        raise ArgumentError(f"λ={lam} fuera de (0, 0.1]")
    kk = np.array([k])
    ii = np.atleast_2d(np.asarray(idx, dtype=np.int64))
    one = cube_boxes(kk, ii, lam)
    two = cube_boxes(kk, ii, 2.0 * lam)
    return (one[0][0], one[1][0]), (two[0][0], two[1][0])


class WhitneyOracle:
    """Localiza el cubo de Whitney maximal que contiene cada punto"""

    def __init__(self, boundary: BoundaryModel, side: str = "interior", cfg: Optional[WhitneyConfig] = None):
        self.boundary = boundary
        self.side = side
        self.cfg = cfg or WhitneyConfig()
        self.dim = boundary.dim
        self.sqrt_d = math.sqrt(self.dim)

    def satisfies(self, k: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """dist(I, E) ≥ a·diam(I)"""
        if len(k) == 0:
            return np.zeros(0, dtype=bool)
        lo, hi = cube_boxes(k, idx)
        dist = self.boundary.box_distance(lo, hi)
        return dist >= self.cfg.ratio * np.ldexp(1.0, -k) * self.sqrt_d

    def locate(self, Y: Any) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(k, idx, válido) del cubo de Whitney que contiene Y"""
        pts = as_points(Y, self.dim)
        delta, _ = self.boundary.distance(pts)
        valid = delta > 0.0
        if self.side is not None:
            valid &= self.boundary.interior(pts) == (self.side == "interior")
        k = np.zeros(len(pts), dtype=int)
        s_lo = np.where(valid, delta, 1.0) / ((self.cfg.ratio + 1.0) * self.sqrt_d)
        k[:] = np.ceil(-np.log2(s_lo)).astype(int)
        idx = np.floor(pts / np.ldexp(1.0, -k)[:, None]).astype(np.int64)
        ok = self.satisfies(k, idx)
        for _ in range(6):
            bad = valid & ~ok
            if not bad.any():
                break
            k[bad] += 1
            idx[bad] = np.floor(pts[bad] / np.ldexp(1.0, -k[bad])[:, None]).astype(np.int64)
            ok[bad] = self.satisfies(k[bad], idx[bad])
        active = valid & ok
        for _ in range(8):
            if not active.any():
                break
            trial_k = k[active] - 1
            trial_idx = np.floor(pts[active] / np.ldexp(1.0, -trial_k)[:, None]).astype(np.int64)
            good = self.satisfies(trial_k, trial_idx)
            where = np.nonzero(active)[0]
            up = where[good]
            k[up] = trial_k[good]
            idx[up] = trial_idx[good]
            active[where[~good]] = False
        return k, idx, valid & ok

    def fattened_candidates(self, Y: Any, factor: float = 1.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pares (grupo, k, idx) con Y en el interior de (1 + factor·λ)J"""
        pts = as_points(Y, self.dim)
        k0, idx0, valid0 = self.locate(pts)
        lam = self.cfg.lam
        dirs = np.stack(np.meshgrid(*([[-1, 0, 1]] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        dirs = dirs[np.any(dirs != 0, axis=1)].astype(float)
        ell = np.ldexp(1.0, -k0)
        scales = [factor * lam * ell * 0.5, 2.0 * factor * lam * ell]
        probes = [pts]
        groups = [np.arange(len(pts))]
        for t in scales:
            t = np.where(valid0, t, 0.0) * (1.0 + 1e-7)
            probes.append((pts[:, None, :] + t[:, None, None] * dirs[None, :, :]).reshape(-1, self.dim))
            groups.append(np.repeat(np.arange(len(pts)), len(dirs)))
        P = np.vstack(probes)
        G = np.concatenate(groups)
        k, idx, valid = self.locate(P)
        G, k, idx = G[valid], k[valid], idx[valid]
        code = encode_keys(k, idx)
        table = np.stack([G, k, code], axis=1)
        _, first = np.unique(table, axis=0, return_index=True)
        G, k, idx = G[first], k[first], idx[first]
        lo, hi = cube_boxes(k, idx, factor * lam)
        inside = np.all((pts[G] > lo) & (pts[G] < hi), axis=1)
        return G[inside], k[inside], idx[inside]

    def tag(self, k: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """True si el cubo está del lado interior"""
        lo, hi = cube_boxes(k, idx)
        return self.boundary.interior(0.5 * (lo + hi))


@dataclass
class WhitneyDecomposition:
    """Cubos de Whitney explícitos que cubren una ventana"""
    boundary: BoundaryModel
    k: np.ndarray
    idx: np.ndarray
    interior: np.ndarray
    window: Tuple[np.ndarray, np.ndarray]
    min_side: float
    cfg: WhitneyConfig

    def __len__(self) -> int:
        return len(self.k)

    @property
    def sides(self) -> np.ndarray:
        return np.ldexp(1.0, -self.k)

    def boxes(self, factor: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        return cube_boxes(self.k, self.idx, factor)

    @property
    def centers(self) -> np.ndarray:
        lo, hi = self.boxes()
        return 0.5 * (lo + hi)

    def select(self, mask: np.ndarray) -> "WhitneyDecomposition":
        return WhitneyDecomposition(self.boundary, self.k[mask], self.idx[mask], self.interior[mask],
                                    self.window, self.min_side, self.cfg)

    def keys(self) -> List[Tuple[int, ...]]:
        return [(int(k),) + tuple(int(i) for i in row) for k, row in zip(self.k, self.idx)]

    def lookup(self, X: np.ndarray) -> np.ndarray:
        """Índice del cubo de la descomposición que contiene cada punto, o -1"""
        X = np.atleast_2d(X)
        out = np.full(len(X), -1, dtype=int)
        for level in np.unique(self.k):
            members = np.nonzero(self.k == level)[0]
            codes = encode_keys(self.k[members], self.idx[members])
            order = np.argsort(codes)
            sorted_codes = codes[order]
            q_idx = np.floor(X / math.ldexp(1.0, -int(level))).astype(np.int64)
            q = encode_keys(np.full(len(X), level), q_idx)
            pos = np.clip(np.searchsorted(sorted_codes, q), 0, len(sorted_codes) - 1)
            hit = (sorted_codes[pos] == q) & (out < 0)
            out[hit] = members[order[pos[hit]]]
        return out


def whitney_decompose(E: BoundaryModel, window: Tuple[Any, Any], side: str = "interior",
                      cfg: Optional[WhitneyConfig] = None, min_side: Optional[float] = None,
                      max_cubes: int = 2_000_000,
                      prune: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
                      check: bool = True) -> WhitneyDecomposition:
    """Cubos diádicos maximales con dist(I, E) ≥ a·diam(I) que cubren la ventana"""
    cfg = cfg or WhitneyConfig()
    lo = np.asarray(window[0], dtype=float)
    hi = np.asarray(window[1], dtype=float)
    if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)) or np.any(hi <= lo):
        raise ArgumentError("la ventana debe ser una caja acotada no vacía")
    dim = E.dim
    extent = float(np.max(hi - lo))
    k0 = -int(math.ceil(math.log2(extent)))
    if min_side is None:
        min_side = extent / 256.0
    k_stop = int(math.floor(-math.log2(min_side)))
    oracle = WhitneyOracle(E, None, cfg)
    s0 = math.ldexp(1.0, -k0)
    a = np.floor(lo / s0).astype(np.int64)
    b = np.ceil(hi / s0).astype(np.int64)
    cur_idx = np.stack(np.meshgrid(*[np.arange(x, y) for x, y in zip(a, b)], indexing="ij"), axis=-1).reshape(-1, dim)
    cur_k = np.full(len(cur_idx), k0, dtype=int)
    found_k: List[np.ndarray] = []
    found_idx: List[np.ndarray] = []
    offsets = np.stack(np.meshgrid(*([[0, 1]] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    total = 0
    while len(cur_k):
        ok = oracle.satisfies(cur_k, cur_idx)
        if ok.any():
            blo, bhi = cube_boxes(cur_k[ok], cur_idx[ok])
            lk, lidx, _ = oracle.locate(0.5 * (blo + bhi))
            found_k.append(lk)
            found_idx.append(lidx)
            total += len(lk)
        rest_k = cur_k[~ok]
        rest_idx = cur_idx[~ok]
        if len(rest_k) == 0 or rest_k[0] >= k_stop:
            break
        child_idx = (2 * rest_idx[:, None, :] + offsets[None, :, :]).reshape(-1, dim)
        child_k = np.repeat(rest_k + 1, len(offsets))
        clo, chi = cube_boxes(child_k, child_idx)
        keep = np.all((clo < hi) & (chi > lo), axis=1)
        if prune is not None and keep.any():
            keep[keep] = ~prune(child_k[keep], child_idx[keep])
        cur_k, cur_idx = child_k[keep], child_idx[keep]
        if total + len(cur_k) > max_cubes:
            raise GridConstructionError("descomposición de Whitney demasiado grande", math.ldexp(1.0, -int(cur_k[0])))
    if not found_k:
        raise GridConstructionError("ningún cubo de Whitney en la ventana", min_side)
    k = np.concatenate(found_k)
    idx = np.concatenate(found_idx)
    table = np.hstack([k[:, None], idx])
    table = np.unique(table, axis=0)
    k, idx = table[:, 0].astype(int), table[:, 1:].astype(np.int64)
    interior = oracle.tag(k, idx)
    keep = interior if side == "interior" else (~interior if side == "exterior" else np.ones(len(k), dtype=bool))
    decomp = WhitneyDecomposition(E, k[keep], idx[keep], interior[keep], (lo, hi), min_side, cfg)
    if check:
        check_whitney_inequality(decomp)
    status(f"Descomposición de Whitney: {len(decomp)} cubos (lado {side})")
    return decomp


def whitney_inequality_ratios(E: BoundaryModel, k: np.ndarray, idx: np.ndarray) -> Dict[str, np.ndarray]:
    """dist(4I)/diam, dist(I)/diam para cada cubo"""
    lo, hi = cube_boxes(k, idx)
    lo4, hi4 = cube_boxes(k, idx, 3.0)
    diam = np.ldexp(1.0, -k) * math.sqrt(E.dim)
    d1 = E.box_distance(lo, hi)
    d4 = E.box_distance(lo4, hi4)
    return {"diam": diam, "dist": d1, "dist4": d4}


def check_whitney_inequality(decomp: WhitneyDecomposition) -> int:
    """4 diam(I) ≤ dist(4I, E) ≤ dist(I, E) ≤ 40 diam(I) para todos los cubos"""
    r = whitney_inequality_ratios(decomp.boundary, decomp.k, decomp.idx)
    bad = ~((4.0 * r["diam"] <= r["dist4"] * (1 + 1e-12)) & (r["dist4"] <= r["dist"] * (1 + 1e-12))
            & (r["dist"] <= 40.0 * r["diam"]))
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        raise ConfigurationError("cubo de Whitney fuera de 4diam ≤ dist(4I) ≤ dist(I) ≤ 40diam",
                                 "whitney.ratio", {"k": int(decomp.k[i]), "idx": decomp.idx[i].tolist()})
    return 0


def candidate_pairs(k: np.ndarray, idx: np.ndarray, reach: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Pares (i < j) con |Δc|∞ ≤ (1 + reach)(ℓ_i + ℓ_j)/2"""
    lo, hi = cube_boxes(k, idx)
    centers = 0.5 * (lo + hi)
    levels = np.unique(k)
    members = {int(l): np.nonzero(k == l)[0] for l in levels}
    trees = {l: cKDTree(centers[m]) for l, m in members.items()}
    left: List[np.ndarray] = []
    right: List[np.ndarray] = []
    for la, ma in members.items():
        for lb, mb in members.items():
            if lb < la:
                continue
            r = (1.0 + reach) * 0.5 * (math.ldexp(1.0, -la) + math.ldexp(1.0, -lb)) * (1.0 + 1e-12)
            hits = trees[lb].query_ball_point(centers[ma], r, p=np.inf)
            sizes = np.fromiter((len(h) for h in hits), dtype=int, count=len(hits))
            a = np.repeat(ma, sizes)
            b = mb[np.fromiter((j for h in hits for j in h), dtype=int, count=int(sizes.sum()))]
            keep = a < b if la == lb else np.ones(len(a), dtype=bool)
            left.append(a[keep])
            right.append(b[keep])
    if not left:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    i = np.concatenate(left)
    j = np.concatenate(right)
    swap = i > j
    i[swap], j[swap] = j[swap], i[swap]
    return i, j


def touching(k: np.ndarray, idx: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    lo, hi = cube_boxes(k, idx)
    return np.all((lo[i] <= hi[j]) & (lo[j] <= hi[i]), axis=1)


def face_adjacent(k: np.ndarray, idx: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Cubos que comparten un trozo de cara de dimensión d-1"""
    lo, hi = cube_boxes(k, idx)
    overlap = np.minimum(hi[i], hi[j]) - np.maximum(lo[i], lo[j])
    flat = overlap == 0.0
    return (np.sum(flat, axis=1) == 1) & np.all(overlap >= 0.0, axis=1)


def neighbor_ratio_check(decomp: WhitneyDecomposition) -> Dict[str, Any]:
    """Cociente de lados entre cubos que se tocan"""
    i, j = candidate_pairs(decomp.k, decomp.idx)
    t = touching(decomp.k, decomp.idx, i, j)
    ratio = np.ldexp(1.0, np.abs(decomp.k[i[t]] - decomp.k[j[t]]))
    worst = float(ratio.max()) if len(ratio) else 1.0
    return {"pairs": int(t.sum()), "max_ratio": worst, "violations": int(np.sum(ratio > 4.0))}


def pairwise_fattening_check(decomp: WhitneyDecomposition, lam: float) -> Dict[str, Any]:
    """int(I*) ∩ int(J*) ≠ ∅ ⟺ ∂I ∩ ∂J ≠ ∅, y τ ∈ (1/2, 1) con τJ ∩ I* = ∅"""
    if not (0.0 < lam <= 0.1):
        raise ArgumentError(f"λ={lam} fuera de (0, 0.1]")
    k, idx = decomp.k, decomp.idx
    i, j = candidate_pairs(k, idx, reach=4.0 * lam + 0.5)
    lo, hi = cube_boxes(k, idx)
    c = 0.5 * (lo + hi)
    li = np.ldexp(1.0, -k[i])[:, None]
    lj = np.ldexp(1.0, -k[j])[:, None]
    dc = np.abs(c[i] - c[j])
    touch = np.all(dc <= 0.5 * (li + lj), axis=1)
    overlap = np.all(dc < 0.5 * (1.0 + lam) * (li + lj), axis=1)
    mismatch = int(np.sum(touch != overlap))
    tau_ij = np.max((2.0 * dc - (1.0 + lam) * li) / lj, axis=1)
    tau_ji = np.max((2.0 * dc - (1.0 + lam) * lj) / li, axis=1)
    tau_star = float(min(tau_ij.min(), tau_ji.min())) if len(i) else 1.0
    gap = np.max(dc - 0.5 * (li + lj), axis=1)
    small = np.minimum(li, lj)[:, 0]
    wide = (~touch) & (gap >= 0.25 * small)
    return {"pairs": int(len(i)), "touching": int(touch.sum()), "overlap_mismatch": mismatch,
            "tau_star": tau_star, "tau_ok": tau_star > 0.5,
            "wide_gap_overlaps": int(np.sum(wide & overlap))}


class BoxUnion:
    """Unión de cajas concéntricas por nivel con consultas en norma del supremo"""

    def __init__(self, k: np.ndarray, idx: np.ndarray, factor: float):
        self.k = np.asarray(k, dtype=int)
        self.idx = np.asarray(idx, dtype=np.int64)
        self.factor = factor
        lo, hi = cube_boxes(self.k, self.idx)
        self.centers = 0.5 * (lo + hi)
        self.groups: Dict[int, Tuple[np.ndarray, cKDTree, float]] = {}
        for level in np.unique(self.k):
            members = np.nonzero(self.k == level)[0]
            half = 0.5 * (1.0 + factor) * math.ldexp(1.0, -int(level))
            self.groups[int(level)] = (members, cKDTree(self.centers[members]), half)

    def contains(self, X: Any) -> np.ndarray:
        """Punto en el interior de alguna caja"""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(len(X), dtype=bool)
        for members, tree, half in self.groups.values():
            todo = np.nonzero(~out)[0]
            if len(todo) == 0:
                break
            d, _ = tree.query(X[todo], k=1, p=np.inf, distance_upper_bound=half)
            out[todo[d < half]] = True
        return out

    def multiplicity(self, X: Any) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(len(X), dtype=int)
        for members, tree, half in self.groups.values():
            out += np.asarray(tree.query_ball_point(X, half * (1.0 - 1e-12), p=np.inf, return_length=True))
        return out


class SawtoothDomain:
    """Región abierta = interior de una unión de cubos de Whitney engordados"""

    def __init__(self, kind: str, oracle: WhitneyOracle, predicate: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 factor: float = 1.0, label: str = "", extra: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                 center: Optional[np.ndarray] = None, radius_hint: float = 1.0):
        self.kind = kind
        self.oracle = oracle
        self.predicate = predicate
        self.factor = factor
        self.label = label
        self.dim = oracle.dim
        self.extra = None if extra is None or len(extra[0]) == 0 else BoxUnion(extra[0], extra[1], factor * oracle.cfg.lam)
        self.center = center
        self.radius_hint = radius_hint

    def contains(self, Y: Any) -> np.ndarray:
        pts = as_points(Y, self.dim)
        out = np.zeros(len(pts), dtype=bool)
        G, k, idx = self.oracle.fattened_candidates(pts, self.factor)
        if len(G):
            ok = self.predicate(k, idx)
            out[np.unique(G[ok])] = True
        if self.extra is not None:
            out |= self.extra.contains(pts)
        return out

    def delta_derived(self, Y: Any, seed: int = 0, random_dirs: int = 32, steps: int = 16) -> np.ndarray:
        """Distancia al complemento de la región por sondeo direccional y bisección"""
        pts = as_points(Y, self.dim)
        base = np.stack(np.meshgrid(*([[-1, 0, 1]] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        base = base[np.any(base != 0, axis=1)].astype(float)
        base /= np.linalg.norm(base, axis=1, keepdims=True)
        g = np.random.default_rng(seed).standard_normal((random_dirs, self.dim))
        dirs = np.vstack([base, g / np.linalg.norm(g, axis=1, keepdims=True)])
        delta, _ = self.oracle.boundary.distance(pts)
        out = np.empty(len(pts))
        for i, (p, dmax) in enumerate(zip(pts, delta)):
            t = dmax * np.arange(1, steps + 1) / steps
            probe = (p[None, None, :] + t[None, :, None] * dirs[:, None, :]).reshape(-1, self.dim)
            inside = self.contains(probe).reshape(len(dirs), steps)
            best = dmax
            for d_i in range(len(dirs)):
                miss = np.nonzero(~inside[d_i])[0]
                if len(miss) == 0:
                    continue
                hi_t = t[miss[0]]
                lo_t = 0.0 if miss[0] == 0 else t[miss[0] - 1]
                if lo_t >= best:
                    continue
                for _ in range(24):
                    mid = 0.5 * (lo_t + hi_t)
                    if self.contains(p + mid * dirs[d_i])[0]:
                        lo_t = mid
                    else:
                        hi_t = mid
                best = min(best, hi_t)
            out[i] = best
        return out


def _cube_level_distance(grid, Qkey: CubeKey, k: np.ndarray, idx: np.ndarray) -> np.ndarray:
    lo, hi = cube_boxes(k, idx)
    return grid.cube_distance(Qkey, lo, hi)


def w_Q_predicate(grid, Qkey: CubeKey, cfg: WhitneyConfig, dim: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    kq = int(Qkey[0])
    ell = math.ldexp(1.0, -kq)
    C0 = cfg.C0(dim)

    def predicate(k: np.ndarray, idx: np.ndarray) -> np.ndarray:
        ok = (k >= kq - cfg.m0) & (k <= kq + 1)
        if ok.any():
            ok[ok] = _cube_level_distance(grid, Qkey, k[ok], idx[ok]) <= C0 * ell
        return ok
    return predicate


def t_Q_predicate(grid, Qkey: CubeKey, cfg: WhitneyConfig, dim: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    kq = int(Qkey[0])
    C0 = cfg.C0(dim)
    kmax = grid.k_max

    def predicate(k: np.ndarray, idx: np.ndarray) -> np.ndarray:
        kp = np.maximum(k - 1, kq)
        top = k + cfg.m0 if kmax is None else np.minimum(k + cfg.m0, kmax)
        ok = kp <= top
        if ok.any():
            ok[ok] = _cube_level_distance(grid, Qkey, k[ok], idx[ok]) <= C0 * np.ldexp(1.0, -kp[ok])
        return ok
    return predicate


def _explicit_candidates(oracle: WhitneyOracle, grid, Qkey: CubeKey, levels: Sequence[int],
                         reach: float) -> Tuple[np.ndarray, np.ndarray]:
    """Cubos de Whitney maximales de los niveles dados cerca de Q"""
    qlo, qhi = grid.box(Qkey)
    out_k: List[np.ndarray] = []
    out_idx: List[np.ndarray] = []
    dim = oracle.dim
    for level in levels:
        s = math.ldexp(1.0, -level)
        a = np.floor((qlo - reach) / s).astype(np.int64)
        b = np.floor((qhi + reach) / s).astype(np.int64)
        idx = np.stack(np.meshgrid(*[np.arange(x, y + 1) for x, y in zip(a, b)], indexing="ij"), axis=-1).reshape(-1, dim)
        k = np.full(len(idx), level, dtype=int)
        ok = oracle.satisfies(k, idx)
        k, idx = k[ok], idx[ok]
        parent_ok = oracle.satisfies(k - 1, np.floor_divide(idx, 2))
        k, idx = k[~parent_ok], idx[~parent_ok]
        if len(k):
            on_side = oracle.tag(k, idx) == (oracle.side == "interior")
            k, idx = k[on_side], idx[on_side]
        out_k.append(k)
        out_idx.append(idx)
    return np.concatenate(out_k), np.concatenate(out_idx) if out_idx else np.zeros((0, dim), dtype=np.int64)


def w_Q(grid, oracle: WhitneyOracle, Qkey: CubeKey, cfg: Optional[WhitneyConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """𝒲_Q = {I : k(Q)-m0 ≤ k_I ≤ k(Q)+1, dist(I, Q) ≤ C0 2^-k(Q)}"""
    cfg = cfg or oracle.cfg
    cube = grid.cube(Qkey)
    kq = cube.k
    C0 = cfg.C0(oracle.dim)
    k, idx = _explicit_candidates(oracle, grid, cube.key, range(kq - cfg.m0, kq + 2), C0 * cube.ell)
    if len(k):
        keep = _cube_level_distance(grid, cube.key, k, idx) <= C0 * cube.ell
        k, idx = k[keep], idx[keep]
    if len(k) == 0:
        raise ConfigurationError(f"𝒲_Q vacío para Q={cube.key} con C0={C0:.3f}, m0={cfg.m0}",
                                 "whitney", {"C0": C0, "m0": cfg.m0, "cube": list(cube.key)})
    return k, idx


def whitney_region(grid, oracle: WhitneyOracle, Qkey: CubeKey,
                   extra: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> Tuple[SawtoothDomain, SawtoothDomain]:
    """(U_Q, U_Q*) como oráculos de pertenencia"""
    cube = grid.cube(Qkey)
    pred = w_Q_predicate(grid, cube.key, oracle.cfg, oracle.dim)
    hint = oracle.cfg.C0(oracle.dim) * cube.ell
    U = SawtoothDomain("U_Q", oracle, pred, 1.0, f"U{cube.key}", extra, cube.center, hint)
    U2 = SawtoothDomain("U_Q*", oracle, pred, 2.0, f"U*{cube.key}", extra, cube.center, hint)
    return U, U2


def carleson_box(grid, oracle: WhitneyOracle, Qkey: CubeKey, factor: float = 1.0) -> SawtoothDomain:
    """T_Q = int(∪_{Q' ⊆ Q} U_Q')"""
    cube = grid.cube(Qkey)
    pred = t_Q_predicate(grid, cube.key, oracle.cfg, oracle.dim)
    return SawtoothDomain("T_Q" if factor == 1.0 else "T_Q~", oracle, pred, factor, f"T{cube.key}",
                          center=cube.center, radius_hint=oracle.cfg.C0(oracle.dim) * cube.ell)


def ball_box_cubes(grid, ball: SurfaceBall) -> Tuple[int, List[CubeKey]]:
    """k(Δ) con 2^-k-1 < 200r ≤ 2^-k y los cubos de ese nivel que cortan 2Δ"""
    k = int(math.floor(-math.log2(200.0 * ball.radius)))
    if not grid.has_level(k):
        raise ArgumentError(f"nivel k(Δ)={k} fuera de la rejilla")
    x = ball.point
    keys = grid.cubes_near(k, x, x, 2.0 * ball.radius * (1.0 - 1e-12))
    return k, keys


def carleson_box_ball(grid, oracle: WhitneyOracle, ball: SurfaceBall, factor: float = 1.0) -> SawtoothDomain:
    """T_Δ = int(∪_{Q ∈ 𝔻^Δ} cl(T_Q))"""
    _, keys = ball_box_cubes(grid, ball)
    preds = [t_Q_predicate(grid, key, oracle.cfg, oracle.dim) for key in keys]

    def predicate(k: np.ndarray, idx: np.ndarray) -> np.ndarray:
        out = np.zeros(len(k), dtype=bool)
        for p in preds:
            todo = ~out
            if not todo.any():
                break
            out[todo] = p(k[todo], idx[todo])
        return out
    return SawtoothDomain("T_Delta", oracle, predicate, factor, "T_Delta", center=ball.point,
                          radius_hint=200.0 * ball.radius * oracle.cfg.C0(oracle.dim))


def sawtooth(grid, oracle: WhitneyOracle, family: CubeFamily, root: Optional[CubeKey] = None,
             depth: Optional[int] = None, factor: float = 1.0) -> SawtoothDomain:
    """Ω_F = int(∪_{Q ∈ 𝔻_F} U_Q), o Ω_{F,Q0} si se da la raíz"""
    cfg = oracle.cfg
    C0 = cfg.C0(oracle.dim)
    k_lo = grid.k_min if root is None else int(root[0])
    if depth is not None:
        k_hi = k_lo + depth
    else:
        k_hi = grid.k_max
    if k_hi is None:
        raise ArgumentError("profundidad requerida para Ω_F en una rejilla sin nivel máximo")

    def admissible(key: CubeKey) -> bool:
        if family.covers(key):
            return False
        return root is None or grid.is_ancestor(tuple(root), key)

    def predicate(k: np.ndarray, idx: np.ndarray) -> np.ndarray:
        out = np.zeros(len(k), dtype=bool)
        lo, hi = cube_boxes(k, idx)
        for i in range(len(k)):
            for kq in range(max(int(k[i]) - 1, k_lo), min(int(k[i]) + cfg.m0, k_hi) + 1):
                near = grid.cubes_near(kq, lo[i], hi[i], C0 * math.ldexp(1.0, -kq))
                if any(admissible(q) for q in near):
                    out[i] = True
                    break
        return out
    kind = "Omega_F" if root is None else "Omega_FQ"
    return SawtoothDomain(kind, oracle, predicate, factor, kind)


@dataclass
class AugmentedRegion:
    """𝒲*_Q obtenido trazando caminos de cubos hacia X_Q"""
    key: CubeKey
    members: Tuple[np.ndarray, np.ndarray]
    augmented: Tuple[np.ndarray, np.ndarray]
    k_star: int
    K0: float
    root_index: int
    chains: Dict[int, List[Tuple[np.ndarray, float]]] = field(default_factory=dict)
    verified: bool = True
    added: int = 0

    def metadata(self) -> Dict[str, Any]:
        return {"rule": "dijkstra-face-adjacency", "member_weight": 1, "outside_weight": 10,
                "k_star": self.k_star, "K0": self.K0, "added": self.added}


def _face_neighbors(oracle: WhitneyOracle, k: np.ndarray, idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = cube_boxes(k, idx)
    c = 0.5 * (lo + hi)
    ell = np.ldexp(1.0, -k)
    probes = []
    for a in range(oracle.dim):
        for sgn in (-1.0, 1.0):
            p = c.copy()
            p[:, a] += sgn * (0.5 + 1.0 / 64.0) * ell
            probes.append(p)
    P = np.vstack(probes)
    nk, nidx, valid = oracle.locate(P)
    return nk[valid], nidx[valid]


def augment_w_Q(grid, oracle: WhitneyOracle, Qkey: CubeKey, root_point: np.ndarray,
                sample: int = 16, seed: int = 0) -> AugmentedRegion:
    """𝒲*_Q: 𝒲_Q más los cubos de caminos por adyacencia de caras hasta el cubo de X_Q"""
    cube = grid.cube(Qkey)
    mk, midx = w_Q(grid, oracle, cube.key)
    rk, ridx, rvalid = oracle.locate(root_point)
    if not rvalid[0]:
        raise ConfigurationError("X_Q no está en el dominio", "whitney", {"X_Q": np.asarray(root_point).tolist()})
    nk, nidx = _face_neighbors(oracle, mk, midx)
    all_k = np.concatenate([mk, rk, nk])
    all_idx = np.vstack([midx, ridx, nidx])
    table = np.unique(np.hstack([all_k[:, None], all_idx]), axis=0)
    k, idx = table[:, 0].astype(int), table[:, 1:].astype(np.int64)
    codes = encode_keys(k, idx) * 64 + (k + 32)
    member_codes = set((encode_keys(mk, midx) * 64 + (mk + 32)).tolist())
    is_member = np.array([c in member_codes for c in codes.tolist()], dtype=bool)
    root_code = int(encode_keys(rk, ridx)[0] * 64 + (rk[0] + 32))
    root = int(np.nonzero(codes == root_code)[0][0])
    is_member[root] = True
    i, j = candidate_pairs(k, idx)
    adj = face_adjacent(k, idx, i, j)
    i, j = i[adj], j[adj]
    w_ij = np.where(is_member[j], 1.0, 10.0)
    w_ji = np.where(is_member[i], 1.0, 10.0)
    graph = csr_matrix((np.concatenate([w_ij, w_ji]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                       shape=(len(k), len(k)))
    dist, pred = dijkstra(graph, directed=True, indices=root, return_predecessors=True)
    keep = np.zeros(len(k), dtype=bool)
    unreachable = 0
    for m in np.nonzero(is_member)[0]:
        if not np.isfinite(dist[m]):
            unreachable += 1
            keep[m] = True
            continue
        cur = int(m)
        while cur >= 0 and not keep[cur]:
            keep[cur] = True
            cur = int(pred[cur])
    ak, aidx = k[keep], idx[keep]
    k_star = int(np.max(np.abs(ak - cube.k)))
    K0 = float(np.max(_cube_level_distance(grid, cube.key, ak, aidx)) / cube.ell)
    region = AugmentedRegion(cube.key, (mk, midx), (ak, aidx), k_star, K0, root,
                             added=int(keep.sum() - is_member.sum()), verified=unreachable == 0)
    rng = np.random.default_rng(seed)
    members = np.nonzero(is_member & np.isfinite(dist))[0]
    chosen = members if len(members) <= sample else rng.choice(members, size=sample, replace=False)
    union = BoxUnion(ak, aidx, oracle.cfg.lam)
    for m in chosen:
        path = []
        cur = int(m)
        while cur >= 0:
            path.append(cur)
            cur = int(pred[cur])
        balls = chain_along_path(oracle, k, idx, path)
        region.chains[int(m)] = balls
        pts = np.array([b[0] for b in balls])
        rad = np.array([b[1] for b in balls])
        probe = np.vstack([pts] + [pts + 0.999 * rad[:, None] * e for e in np.vstack([np.eye(oracle.dim), -np.eye(oracle.dim)])])
        if not union.contains(probe).all():
            region.verified = False
    status(f"𝒲*_Q: {len(ak)} cubos (añadidos {region.added}), k*={k_star}, K0={K0:.2f}")
    return region


def chain_along_path(oracle: WhitneyOracle, k: np.ndarray, idx: np.ndarray,
                     path: Sequence[int]) -> List[Tuple[np.ndarray, float]]:
    """Bolas sobre centros de cubos y de trozos de cara compartidos"""
    lo, hi = cube_boxes(k, idx)
    c = 0.5 * (lo + hi)
    waypoints: List[Tuple[np.ndarray, float]] = [(c[path[0]], 0.25 * math.ldexp(1.0, -int(k[path[0]])))]
    for a, b in zip(path[:-1], path[1:]):
        small = a if k[a] >= k[b] else b
        ell = math.ldexp(1.0, -int(k[small]))
        flo = np.maximum(lo[a], lo[b])
        fhi = np.minimum(hi[a], hi[b])
        waypoints.append((0.5 * (flo + fhi), 0.25 * ell))
        waypoints.append((c[b], 0.25 * ell))
    balls: List[Tuple[np.ndarray, float]] = []
    for (p, r_p), (q, r_q) in zip(waypoints[:-1], waypoints[1:]):
        r = min(r_p, r_q)
        length = float(np.linalg.norm(q - p))
        steps = max(1, int(math.ceil(length / r)))
        for s in range(steps):
            z = p + (q - p) * (s / steps)
            delta, _ = oracle.boundary.distance(z)
            balls.append((z, min(r, 0.5 * float(delta[0]))))
    last = waypoints[-1]
    delta, _ = oracle.boundary.distance(last[0])
    balls.append((last[0], min(last[1], 0.5 * float(delta[0]))))
    return balls


@dataclass
class ApproxDomain:
    """Dominio aproximante Ω_N con su frontera poliédrica"""
    N: int
    k: np.ndarray
    idx: np.ndarray
    union: BoxUnion
    boundary: PolyhedralBoundary
    grid: Any
    cfg: WhitneyConfig

    @property
    def domain(self) -> Domain:
        return Domain(self.boundary, "interior")

    def contains(self, X: Any) -> np.ndarray:
        return self.union.contains(X)

    @property
    def scale(self) -> float:
        return math.ldexp(1.0, -self.N)


def _approx_keep(grid, E: BoundaryModel, k: np.ndarray, idx: np.ndarray, N: int, cfg: WhitneyConfig) -> np.ndarray:
    C0 = cfg.C0(E.dim)
    kq = np.maximum(k - 1, grid.k_min)
    top = np.minimum(k + cfg.m0, N - 1)
    if grid.k_max is not None:
        top = np.minimum(top, grid.k_max)
    ok = kq <= top
    lo, hi = cube_boxes(k, idx)
    if isinstance(grid, FlatDyadicGrid):
        wlo = np.full(E.dim, grid.boundary.lo)
        whi = np.full(E.dim, grid.boundary.hi)
        wlo[-1] = whi[-1] = 0.0
        dist = box_gap(lo, hi, wlo, whi)
    else:
        dist = E.box_distance(lo, hi)
    return ok & (dist <= C0 * np.ldexp(1.0, -kq))


def approx_domain(grid, E: BoundaryModel, N: int, cfg: Optional[WhitneyConfig] = None,
                  side: str = "interior", face_subdivision: int = 2) -> ApproxDomain:
    """Ω_N = Ω_{F_N} con F_N = 𝔻_N y su frontera de caras de I*"""
    cfg = cfg or WhitneyConfig()
    if N <= grid.k_min:
        raise ArgumentError(f"N={N} debe superar k_min={grid.k_min}")
    C0 = cfg.C0(E.dim)
    reach = C0 * math.ldexp(1.0, -grid.k_min) + 8.0 * math.ldexp(1.0, -grid.k_min + cfg.m0)
    if isinstance(grid, FlatDyadicGrid):
        wlo = np.full(E.dim, grid.boundary.lo - reach)
        whi = np.full(E.dim, grid.boundary.hi + reach)
        wlo[-1] = 0.0 if side == "interior" else -reach
        whi[-1] = reach if side == "interior" else 0.0
    else:
        blo, bhi = E.window()
        wlo, whi = blo - reach, bhi + reach
    top_reach = C0 * math.ldexp(1.0, -grid.k_min)

    def prune(k: np.ndarray, idx: np.ndarray) -> np.ndarray:
        lo, hi = cube_boxes(k, idx)
        if isinstance(grid, FlatDyadicGrid):
            plo = np.full(E.dim, grid.boundary.lo)
            phi = np.full(E.dim, grid.boundary.hi)
            plo[-1] = phi[-1] = 0.0
            dist = box_gap(lo, hi, plo, phi)
        else:
            dist = E.box_distance(lo, hi)
        return dist > np.minimum(2.0 * C0 * np.ldexp(1.0, -k), top_reach)

    decomp = whitney_decompose(E, (wlo, whi), side, cfg, min_side=math.ldexp(1.0, -N), prune=prune)
    keep = _approx_keep(grid, E, decomp.k, decomp.idx, N, cfg)
    k, idx = decomp.k[keep], decomp.idx[keep]
    if len(k) == 0:
        raise GridConstructionError("Ω_N vacío", math.ldexp(1.0, -N))
    union = BoxUnion(k, idx, cfg.lam)
    boundary = _union_faces(k, idx, union, cfg.lam, face_subdivision, N)
    status(f"Ω_{N}: {len(k)} cubos, {len(boundary.lo)} celdas de frontera")
    return ApproxDomain(N, k, idx, union, boundary, grid, cfg)


def _union_faces(k: np.ndarray, idx: np.ndarray, union: BoxUnion, lam: float, sub: int, N: int) -> PolyhedralBoundary:
    """Celdas de las caras de I* que quedan expuestas en la unión"""
    dim = idx.shape[1]
    lo, hi = cube_boxes(k, idx, lam)
    ell = np.ldexp(1.0, -k)
    eps = 1e-6 * ell
    frac = (np.arange(sub) + 0.5) / sub
    cells_axis: List[np.ndarray] = []
    cells_lo: List[np.ndarray] = []
    cells_hi: List[np.ndarray] = []
    for a in range(dim):
        free = [b for b in range(dim) if b != a]
        grid_f = np.stack(np.meshgrid(*([frac] * len(free)), indexing="ij"), axis=-1).reshape(-1, len(free))
        for sgn in (-1.0, 1.0):
            plane = hi[:, a] if sgn > 0 else lo[:, a]
            span = hi[:, free] - lo[:, free]
            mids = lo[:, None, free] + grid_f[None, :, :] * span[:, None, :]
            P = np.empty((len(k), len(grid_f), dim))
            P[:, :, free] = mids
            P[:, :, a] = plane[:, None] + sgn * eps[:, None]
            outside = ~union.contains(P.reshape(-1, dim)).reshape(len(k), len(grid_f))
            ci, cj = np.nonzero(outside)
            if len(ci) == 0:
                continue
            cell = span[ci] / sub
            clo = np.empty((len(ci), dim))
            chi = np.empty((len(ci), dim))
            clo[:, free] = mids[ci, cj] - 0.5 * cell
            chi[:, free] = mids[ci, cj] + 0.5 * cell
            clo[:, a] = chi[:, a] = plane[ci]
            cells_axis.append(np.full(len(ci), a))
            cells_lo.append(clo)
            cells_hi.append(chi)
    return PolyhedralBoundary(np.concatenate(cells_axis), np.vstack(cells_lo), np.vstack(cells_hi),
                              union.contains, name=f"approx-{N}")


def halfspace_approximant(N: int, dim: int = 3, depth: int = 3, cfg: Optional[WhitneyConfig] = None,
                          face_subdivision: int = 2) -> ApproxDomain:
    """Ω_N del semiespacio con niveles N-depth..N-1 y ventana proporcional a 2^-N"""
    k_min = N - depth
    half = math.ldexp(1.0, -k_min)
    E = HyperplanePatch(dim, -half, half, infinite=True)
    grid = FlatDyadicGrid(E, k_min, N - 1)
    return approx_domain(grid, E, N, cfg, "interior", face_subdivision)


def sample_region(region: Any, lo: Any, hi: Any, count: int, seed: int = 0,
                  delta_floor: float = 0.0, boundary: Optional[BoundaryModel] = None,
                  max_rounds: int = 64) -> np.ndarray:
    """Muestreo por rechazo de puntos de la región dentro de una caja"""
    rng = np.random.default_rng(seed)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    found: List[np.ndarray] = []
    total = 0
    for _ in range(max_rounds):
        P = lo + (hi - lo) * rng.random((max(4 * count, 1024), len(lo)))
        ok = region(P)
        if boundary is not None and delta_floor > 0:
            d, _ = boundary.distance(P)
            ok &= d >= delta_floor
        found.append(P[ok])
        total += int(ok.sum())
        if total >= count:
            break
    pts = np.vstack(found) if found else np.zeros((0, len(lo)))
    return pts[:count]


def resolution_floor(grid, cfg: WhitneyConfig, dim: int) -> float:
    """δ mínima con cubos de Whitney dentro de los niveles de la rejilla"""
    if grid.k_max is None:
        return 0.0
    return (2.0 * cfg.ratio + 3.0) * math.sqrt(dim) * math.ldexp(1.0, -(grid.k_max + 1))


def ball_box_check(grid, oracle: WhitneyOracle, ball: SurfaceBall, samples: int = 10_000,
                   seed: int = 0) -> Dict[str, Any]:
    """(5/4)B_Δ ∩ Ω ⊂ T_Δ y cl(T_Δ) ⊂ κ0 B_Δ por muestreo de rechazo"""
    T = carleson_box_ball(grid, oracle, ball)
    x = ball.point
    r = ball.radius
    floor = resolution_floor(grid, oracle.cfg, oracle.dim)
    dom = Domain(oracle.boundary, oracle.side)

    def in_big_ball(P: np.ndarray) -> np.ndarray:
        return (np.linalg.norm(P - x, axis=1) < 1.25 * r) & dom.contains(P)
    pts = sample_region(in_big_ball, x - 1.25 * r, x + 1.25 * r, samples, seed, floor, oracle.boundary)
    miss = ~T.contains(pts)
    _, keys = ball_box_cubes(grid, ball)
    C0 = oracle.cfg.C0(oracle.dim)
    extent = 0.0
    for key in keys:
        cube = grid.cube(key)
        reach = cube.r_out + C0 * cube.ell + (1.0 + 2.0 * oracle.cfg.lam) * math.sqrt(oracle.dim) * cube.ell * 2 ** oracle.cfg.m0
        extent = max(extent, float(np.linalg.norm(cube.center - x)) + reach)
    kappa0 = extent / r
    return {"samples": int(len(pts)), "counterexamples": int(miss.sum()), "kappa0": kappa0,
            "witness": pts[miss][:4].tolist(), "delta_floor": floor}


def kappa0_check(grid, oracle: WhitneyOracle, Qkey: CubeKey, samples: int = 10_000, seed: int = 0,
                 kappa0: Optional[float] = None) -> Dict[str, Any]:
    """T̃_Q0 ⊂ B(x_Q0, κ0 ℓ(Q0)) ∩ cl(Ω) por muestreo de rechazo en una caja fija"""
    cube = grid.cube(Qkey)
    cfg = oracle.cfg
    C0 = cfg.C0(oracle.dim)
    if kappa0 is None:
        kappa0 = cfg.kappa0(oracle.dim, grid.diameter_bound(cube.k))
    T = carleson_box(grid, oracle, cube.key, factor=2.0)
    box = max(2.0 * C0, 1.25 * kappa0) * cube.ell
    pts = sample_region(T.contains, cube.center - box, cube.center + box, samples, seed)
    dom = Domain(oracle.boundary, oracle.side)
    d, _ = oracle.boundary.distance(pts) if len(pts) else (np.zeros(0), None)
    in_closure = dom.contains(pts) | (d <= 0.0) if len(pts) else np.zeros(0, dtype=bool)
    inside_ball = np.linalg.norm(pts - cube.center, axis=1) < kappa0 * cube.ell if len(pts) else np.zeros(0, dtype=bool)
    bad = ~(in_closure & inside_ball)
    return {"samples": int(len(pts)), "counterexamples": int(bad.sum()), "kappa0": kappa0,
            "box": box / cube.ell}


def region_inclusion_check(inner: Any, outer: Any, lo: Any, hi: Any, samples: int = 10_000,
                           seed: int = 0) -> Dict[str, Any]:
    """Inclusión de oráculos de pertenencia sobre una muestra uniforme"""
    rng = np.random.default_rng(seed)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    P = lo + (hi - lo) * rng.random((samples, len(lo)))
    a = inner(P)
    b = outer(P)
    bad = a & ~b
    return {"samples": samples, "inner": int(a.sum()), "counterexamples": int(bad.sum()),
            "witness": P[bad][:4].tolist()}
