"""
Rectilab Connectivity - Puntos sacacorchos y cadenas de Harnack
Diagnósticos NTA de un lado y de sacacorchos exterior cualitativo
"""

import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from rectilab_errors import ArgumentError, ConnectivityError, CorkscrewError
from rectilab_geometry import Domain, SurfaceBall, as_points, unit_sphere_area
from rectilab_log import status
from rectilab_whitney import WhitneyConfig, WhitneyOracle, chain_along_path, cube_boxes, w_Q

C_MIN = 0.05
RAY_STEPS = 32
SEARCH_SAMPLES = 256
NODE_BUDGET = 20000
CHAIN_ERRORS = (ArgumentError, ConnectivityError)


@dataclass
class CorkscrewResult:
    """Punto X_Δ con B(X_Δ, c r) ⊂ B(x, r) ∩ Ω"""
    ball: SurfaceBall
    point: np.ndarray
    c: float
    side: str
    delta: float
    certified: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {"center": list(self.ball.center), "r": self.ball.radius, "point": self.point.tolist(),
                "c": self.c, "side": self.side, "delta": self.delta, "certified": self.certified}


@dataclass
class HarnackChain:
    """Bolas B_1..B_N con X ∈ B_1, X' ∈ B_N"""
    centers: np.ndarray
    radii: np.ndarray
    X: np.ndarray
    X2: np.ndarray
    route: str
    ratio: float = 0.0
    cubes: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.radii)

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "route": self.route, "ratio": self.ratio,
                "X": self.X.tolist(), "X2": self.X2.tolist()}


def achieved_c(domain: Domain, ball: SurfaceBall, X: Any) -> np.ndarray:
    """c(X) = min(δ(X), r - |X - x|) / r, 0 fuera de Ω"""
    pts = as_points(X, domain.dim)
    x = ball.point
    delta, _ = domain.distance(pts)
    c = np.minimum(delta, ball.radius - np.linalg.norm(pts - x, axis=1)) / ball.radius
    c[~domain.contains(pts)] = 0.0
    return np.maximum(c, 0.0)


def _best(domain: Domain, ball: SurfaceBall, cand: np.ndarray) -> Tuple[int, np.ndarray, np.ndarray]:
    c = achieved_c(domain, ball, cand)
    delta, _ = domain.distance(cand)
    keys = [cand[:, a] for a in range(cand.shape[1] - 1, -1, -1)]
    order = np.lexsort(tuple(keys) + (-delta, -c))
    return int(order[0]), c, delta


def _pattern_search(domain: Domain, ball: SurfaceBall, X: np.ndarray, c: float) -> Tuple[np.ndarray, float]:
    step = ball.radius / 8.0
    eye = np.vstack([np.eye(domain.dim), -np.eye(domain.dim)])
    while step > ball.radius / 1024.0:
        trial = X + step * eye
        tc = achieved_c(domain, ball, trial)
        j = int(np.argmax(tc))
        if tc[j] > c * (1.0 + 1e-12):
            X, c = trial[j], float(tc[j])
        else:
            step *= 0.5
    return X, c


def certify(domain: Domain, ball: SurfaceBall, X: np.ndarray, c: float, samples: int = 512,
            seed: int = 0) -> bool:
    """Muestreo de B(X, c r): dentro de Ω y de B(x, r)"""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, domain.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = 0.999 * c * ball.radius * rng.random(samples) ** (1.0 / domain.dim)
    P = X + rad[:, None] * g
    ok = domain.contains(P) & (np.linalg.norm(P - ball.point, axis=1) < ball.radius)
    return bool(ok.all())


def corkscrew(domain: Domain, ball: SurfaceBall, c_min: float = C_MIN, seed: int = 0,
              samples: int = SEARCH_SAMPLES, oracle: Optional[WhitneyOracle] = None) -> CorkscrewResult:
    """Maximiza la constante sacacorchos sobre rayos, muestras y centros de Whitney"""
    E = domain.boundary
    r = ball.radius
    if E.bounded and r >= E.diameter:
        raise CorkscrewError(f"r={r:g} no es menor que diam(∂Ω)={E.diameter:g}", 0.0,
                             {"r": r, "diameter": E.diameter, "side": domain.side})
    x = ball.point
    cand: List[np.ndarray] = []
    nrm = E.normal(x, domain.side)
    if nrm is not None:
        t = r * np.arange(1, RAY_STEPS) / RAY_STEPS
        cand.append(x + t[:, None] * nrm[None, :])
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, domain.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    P = x + (r * rng.random(samples) ** (1.0 / domain.dim))[:, None] * g
    P = P[domain.contains(P)]
    cand.append(P)
    if len(P):
        _, nearest = E.distance(P[:8])
        t = r * np.arange(1, RAY_STEPS) / RAY_STEPS
        for p, foot in zip(P[:8], nearest):
            ray = p - foot
            length = float(np.linalg.norm(ray))
            if length > 0:
                cand.append(foot + t[:, None] * (ray / length)[None, :])
    if oracle is not None and len(P):
        k, idx, valid = oracle.locate(P)
        lo, hi = cube_boxes(k[valid], idx[valid])
        cand.append(0.5 * (lo + hi))
    C = np.vstack([c for c in cand if len(c)]) if any(len(c) for c in cand) else np.zeros((0, domain.dim))
    if len(C) == 0:
        raise CorkscrewError("sin candidatos dentro de Ω", 0.0, {"center": list(ball.center), "r": r})
    j, c, delta = _best(domain, ball, C)
    X, best = _pattern_search(domain, ball, C[j], float(c[j]))
    if best < c_min:
        raise CorkscrewError(f"mejor c={best:.4f} < c_min={c_min}", best,
                             {"center": list(ball.center), "r": r, "side": domain.side})
    ok = certify(domain, ball, X, best, seed=seed)
    while not ok and best >= c_min:
        best *= 0.99
        ok = certify(domain, ball, X, best, seed=seed)
    if not ok:
        raise CorkscrewError("contención no certificada", best, {"center": list(ball.center), "r": r})
    d, _ = domain.distance(X)
    return CorkscrewResult(ball, X, best, domain.side, float(d[0]), ok)


def _ball_chain_on_segment(domain: Domain, A: np.ndarray, B: np.ndarray,
                           floor: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Bolas de radio δ/2 espaciadas su radio sobre [A, B], o None si el segmento sale"""
    length = float(np.linalg.norm(B - A))
    centers = [A]
    delta, _ = domain.distance(A)
    radii = [0.5 * float(delta[0])]
    pos = 0.0
    while pos < length:
        step = radii[-1]
        if step < floor:
            return None
        pos = min(length, pos + step)
        p = A + (B - A) * (pos / length)
        if not domain.contains(p)[0]:
            return None
        d, _ = domain.distance(p)
        centers.append(p)
        radii.append(0.5 * float(d[0]))
    return np.array(centers), np.array(radii)


def _astar_cubes(oracle: WhitneyOracle, X: np.ndarray, X2: np.ndarray,
                 allowed: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]],
                 budget: int) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    """A* sobre la adyacencia por caras de cubos de Whitney"""
    dim = oracle.dim
    k0, i0, v0 = oracle.locate(np.vstack([X, X2]))
    if not v0.all():
        raise ConnectivityError("extremo fuera del dominio", {"X": X.tolist(), "X2": X2.tolist()})
    start = (int(k0[0]),) + tuple(int(v) for v in i0[0])
    goal = (int(k0[1]),) + tuple(int(v) for v in i0[1])

    def center(key: Tuple[int, ...]) -> np.ndarray:
        s = math.ldexp(1.0, -key[0])
        return (np.asarray(key[1:], dtype=float) + 0.5) * s

    goal_c = center(goal)
    keys: List[Tuple[int, ...]] = [start]
    index = {start: 0}
    parent = {0: -1}
    cost = {0: 0.0}
    heap = [(float(np.linalg.norm(center(start) - goal_c)), 0)]
    closed = set()
    while heap:
        _, node = heapq.heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        if keys[node] == goal:
            path = []
            cur = node
            while cur >= 0:
                path.append(cur)
                cur = parent[cur]
            path.reverse()
            kk = np.array([keys[p][0] for p in path], dtype=int)
            ii = np.array([keys[p][1:] for p in path], dtype=np.int64)
            return kk, ii, list(range(len(path)))
        if len(keys) > budget:
            break
        key = keys[node]
        c = center(key)
        ell = math.ldexp(1.0, -key[0])
        probes = []
        for a in range(dim):
            for sgn in (-1.0, 1.0):
                for off in _face_offsets(dim, a):
                    p = c.copy()
                    p[a] += sgn * (0.5 + 1.0 / 64.0) * ell
                    p += off * ell
                    probes.append(p)
        P = np.array(probes)
        nk, ni, nv = oracle.locate(P)
        if allowed is not None and nv.any():
            nv[nv] = allowed(nk[nv], ni[nv])
        for kk_, ii_ in zip(nk[nv], ni[nv]):
            nb = (int(kk_),) + tuple(int(v) for v in ii_)
            if nb == key:
                continue
            if nb not in index:
                index[nb] = len(keys)
                keys.append(nb)
            j = index[nb]
            step = float(np.linalg.norm(center(nb) - c))
            new = cost[node] + step
            if new < cost.get(j, math.inf):
                cost[j] = new
                parent[j] = node
                heapq.heappush(heap, (new + float(np.linalg.norm(center(nb) - goal_c)), j))
    raise ConnectivityError(f"sin camino de cubos tras {len(keys)} nodos",
                            {"X": X.tolist(), "X2": X2.tolist(), "budget": budget})


def _face_offsets(dim: int, axis: int) -> List[np.ndarray]:
    """Desplazamientos laterales para hallar vecinos menores en una cara"""
    free = [b for b in range(dim) if b != axis]
    out = [np.zeros(dim)]
    for combo in np.stack(np.meshgrid(*([[-0.25, 0.25]] * len(free)), indexing="ij"), axis=-1).reshape(-1, len(free)):
        v = np.zeros(dim)
        v[free] = combo
        out.append(v)
    return out


def harnack_chain(domain: Domain, X: Any, X2: Any, rho: float, Lam: float,
                  cfg: Optional[WhitneyConfig] = None,
                  allowed: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
                  budget: int = NODE_BUDGET) -> HarnackChain:
    """Cadena de Harnack: segmento recto si cabe, si no A* sobre cubos de Whitney"""
    X = as_points(X, domain.dim)[0]
    X2 = as_points(X2, domain.dim)[0]
    if not rho > 0:
        raise ArgumentError(f"ρ={rho} no positivo")
    d = domain.distance(np.vstack([X, X2]))[0]
    if not domain.contains(np.vstack([X, X2])).all():
        raise ArgumentError("extremos fuera de Ω")
    if d.min() < rho * (1.0 - 1e-12):
        raise ArgumentError(f"δ(X), δ(X')={d.tolist()} menores que ρ={rho}")
    if np.linalg.norm(X - X2) > Lam * rho * (1.0 + 1e-12):
        raise ArgumentError(f"|X - X'| > Λρ con Λ={Lam}")
    if np.array_equal(X, X2):
        chain = HarnackChain(X[None, :], np.array([0.5 * d[0]]), X, X2, "single")
    else:
        seg = None if allowed is not None else _ball_chain_on_segment(domain, X, X2, 0.25 * rho / max(Lam, 1.0))
        if seg is not None:
            chain = HarnackChain(seg[0], seg[1], X, X2, "segment")
        else:
            oracle = WhitneyOracle(domain.boundary, domain.side, cfg)
            kk, ii, path = _astar_cubes(oracle, X, X2, allowed, budget)
            balls = chain_along_path(oracle, kk, ii, path)
            head = _ball_chain_on_segment(domain, X, balls[0][0], 0.0)
            tail = _ball_chain_on_segment(domain, balls[-1][0], X2, 0.0)
            centers = [c for c in head[0]] + [b[0] for b in balls] + [c for c in tail[0]]
            radii = list(head[1]) + [b[1] for b in balls] + list(tail[1])
            chain = HarnackChain(np.array(centers), np.array(radii), X, X2, "astar",
                                 cubes=[(int(a),) + tuple(int(v) for v in b) for a, b in zip(kk, ii)])
    report = verify_chain(domain, chain)
    if not report["valid"]:
        raise ConnectivityError("cadena inválida según el verificador", report)
    chain.ratio = report["C"]
    return chain


def verify_chain(domain: Domain, chain: HarnackChain) -> Dict[str, Any]:
    """Verificador independiente: extremos, intersecciones y cociente diámetro/distancia"""
    c = chain.centers
    r = chain.radii
    first = float(np.linalg.norm(chain.X - c[0])) < r[0]
    last = float(np.linalg.norm(chain.X2 - c[-1])) < r[-1]
    gaps = np.linalg.norm(np.diff(c, axis=0), axis=1)
    linked = bool(np.all(gaps < r[:-1] + r[1:])) if len(r) > 1 else True
    delta, _ = domain.distance(c)
    dist_ball = delta - r
    inside = bool(np.all(dist_ball > 0) and domain.contains(c).all())
    diam = 2.0 * r
    ratio = np.maximum(diam / np.maximum(dist_ball, 1e-300), dist_ball / diam)
    C = float(ratio.max()) if inside else math.inf
    return {"valid": bool(first and last and linked and inside), "X_in_first": first,
            "X2_in_last": last, "linked": linked, "inside": inside, "C": C, "N": int(len(r))}


def halfspace_poisson(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Núcleo de Poisson del semiespacio superior"""
    X = np.atleast_2d(X)
    n = X.shape[1] - 1
    t = X[:, -1]
    diff = X.copy()
    diff[:, -1] = 0.0
    diff[:, :-1] -= y[:n]
    return 2.0 * t / (unit_sphere_area(n + 1) * (np.sum(diff * diff, axis=1) + t * t) ** ((n + 1) / 2.0))


def harnack_kernel_check(chain: HarnackChain, y: Any) -> Dict[str, Any]:
    """max/min del núcleo de Poisson del semiespacio a lo largo de la cadena frente a 3^N"""
    y = np.asarray(y, dtype=float)
    P = halfspace_poisson(chain.centers, y)
    ratio = float(P.max() / P.min())
    return {"ratio": ratio, "bound": 3.0 ** chain.N, "passed": ratio <= 3.0 ** chain.N}


@dataclass
class CubeCorkscrew:
    """X_Q como centro de un cubo de Whitney cercano a Q"""
    key: Tuple[int, ...]
    point: np.ndarray
    whitney: Tuple[int, ...]
    delta_ratio: float
    dist_ratio: float

    def to_dict(self) -> Dict[str, Any]:
        return {"cube": list(self.key), "point": self.point.tolist(), "whitney": list(self.whitney),
                "delta_over_diam": self.delta_ratio, "dist_over_diam": self.dist_ratio}


def cube_corkscrew(grid, oracle: WhitneyOracle, key: Tuple[int, ...]) -> CubeCorkscrew:
    """Centro del cubo de 𝒲_Q con k(Q) - m0 ≤ k_I ≤ k(Q) + 1 más próximo a x_Q"""
    cube = grid.cube(key)
    k, idx = w_Q(grid, oracle, cube.key)
    lo, hi = cube_boxes(k, idx)
    centers = 0.5 * (lo + hi)
    d = np.linalg.norm(centers - cube.center, axis=1)
    keys = [centers[:, a] for a in range(centers.shape[1] - 1, -1, -1)]
    j = int(np.lexsort(tuple(keys) + (d,))[0])
    X = centers[j]
    delta, _ = oracle.boundary.distance(X)
    diam = 2.0 * cube.r_out
    dist = float(grid.cube_distance(cube.key, X, X)[0])
    return CubeCorkscrew(cube.key, X, (int(k[j]),) + tuple(int(v) for v in idx[j]),
                         float(delta[0]) / diam, dist / diam)


def corkscrew_inverse_check(domain: Domain, points: Any, K: float = 2.0) -> Dict[str, Any]:
    """Todo X con δ(X) < diam es sacacorchos de Δ(x̂, K δ(X))"""
    pts = as_points(points, domain.dim)
    delta, near = domain.distance(pts)
    E = domain.boundary
    keep = domain.contains(pts) & (delta < E.diameter)
    cs = []
    for X, d, x in zip(pts[keep], delta[keep], near[keep]):
        ball = SurfaceBall(tuple(float(v) for v in x), K * float(d), E.identity)
        cs.append(float(achieved_c(domain, ball, X)[0]))
    c = np.array(cs)
    return {"points": int(keep.sum()), "min_c": float(c.min()) if len(c) else math.nan,
            "expected": 1.0 / K, "passed": bool(len(c) and c.min() >= (1.0 / K) * (1.0 - 1e-9))}


def _partner(domain: Domain, X: np.ndarray, rho: float, Lam: float) -> Optional[np.ndarray]:
    for a in range(domain.dim):
        for sgn in (1.0, -1.0):
            e = np.zeros(domain.dim)
            e[a] = sgn
            Y = X + Lam * rho * e
            if domain.contains(Y)[0] and domain.distance(Y)[0][0] >= rho:
                return Y
    return None


def nta_diagnostics(domain: Domain, centers: Any, scales: Sequence[float],
                    lambdas: Sequence[float] = (2.0, 4.0, 8.0), c_min: float = C_MIN,
                    pairs: Optional[Sequence[Tuple[Any, Any, float]]] = None,
                    cfg: Optional[WhitneyConfig] = None, seed: int = 0) -> Dict[str, Any]:
    """Tabla por escala de c alcanzada y N(Λ) de cadenas de Harnack"""
    pts = as_points(centers, domain.dim)
    rows: List[Dict[str, Any]] = []
    for r in scales:
        for x in pts:
            row: Dict[str, Any] = {"center": x.tolist(), "r": float(r)}
            ball = SurfaceBall(tuple(float(v) for v in x), float(r), domain.boundary.identity)
            try:
                res = corkscrew(domain, ball, c_min, seed)
                row["c"] = res.c
            except CorkscrewError as exc:
                row["c"] = exc.best_c
                row["error"] = str(exc)
                rows.append(row)
                continue
            rho = res.delta
            for Lam in lambdas:
                Y = _partner(domain, res.point, rho, Lam)
                if Y is None:
                    row[f"N_{Lam:g}"] = None
                    continue
                try:
                    row[f"N_{Lam:g}"] = harnack_chain(domain, res.point, Y, rho, Lam, cfg).N
                except CHAIN_ERRORS as exc:
                    row[f"N_{Lam:g}"] = None
                    row["error"] = str(exc)
            rows.append(row)
    chains: List[Dict[str, Any]] = []
    for X, Y, rho in (pairs or []):
        Xa = as_points(X, domain.dim)[0]
        Ya = as_points(Y, domain.dim)[0]
        Lam = float(np.linalg.norm(Xa - Ya)) / rho
        try:
            ch = harnack_chain(domain, Xa, Ya, rho, max(Lam, 1.0), cfg)
            chains.append({"rho": rho, "Lambda": Lam, "N": ch.N, "route": ch.route})
        except CHAIN_ERRORS as exc:
            chains.append({"rho": rho, "Lambda": Lam, "N": None, "error": str(exc)})
    cvals = [row["c"] for row in rows if "c" in row]
    status(f"Diagnóstico NTA: {len(rows)} filas, c mínima {min(cvals) if cvals else float('nan'):.3f}")
    return {"rows": rows, "pairs": chains, "min_c": min(cvals) if cvals else math.nan}
