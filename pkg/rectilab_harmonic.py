"""
Rectilab Harmonic - Medida armónica por caminatas sobre esferas
Densidad de Poisson, función de Green y diagnósticos de Bourgain, CFMS, duplicación y cambio de polo
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rectilab_connectivity import corkscrew
from rectilab_errors import ArgumentError, DomainError, PreconditionError
from rectilab_geometry import Domain, HyperplanePatch, SphereBoundary, SurfaceBall, as_points
from rectilab_log import status
from rectilab_potential import FundamentalSolution

Target = Union[SurfaceBall, Callable[[np.ndarray], np.ndarray]]

ESCAPE_WARNING = 0.01
LOW_CONFIDENCE = 0.25
RHO_EXACT = 0.75


@dataclass
class WalkConfig:
    """Parámetros de las caminatas sobre esferas"""
    eps_shell: float = 1e-3
    max_steps: int = 10_000
    walks: int = 20_000
    seed: int = 0
    attribution: str = "nearest"
    kill_factor: float = 64.0
    chunk: int = 8192
    workers: int = 1
    exact: bool = True
    scale: Optional[float] = None

    def __post_init__(self):
        if not self.eps_shell > 0:
            raise ArgumentError(f"ε_shell = {self.eps_shell} debe ser positivo")
        if self.max_steps < 1:
            raise ArgumentError(f"max_steps = {self.max_steps} < 1")
        if self.walks < 2:
            raise ArgumentError(f"se requieren al menos 2 caminatas, no {self.walks}")
        if self.attribution != "nearest":
            raise ArgumentError(f"regla de atribución desconocida: {self.attribution}")

    def replace(self, **changes: Any) -> "WalkConfig":
        params = dict(self.__dict__)
        params.update(changes)
        return WalkConfig(**params)

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class MeasureEstimate:
    """Estimación de Monte Carlo de ω^X(Δ)"""
    mean: float
    stderr: float
    walks: int
    escaped: float
    seed: int
    flags: List[str] = field(default_factory=list)

    def interval(self, k: float = 3.0) -> Tuple[float, float]:
        return self.mean - k * self.stderr, self.mean + k * self.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean, "stderr": self.stderr, "walks": self.walks,
                "escaped": self.escaped, "seed": self.seed, "flags": list(self.flags)}


@dataclass
class DensityEstimate:
    """k̂^X(y) por diferenciación de Lebesgue con extrapolación de Richardson"""
    value: float
    stderr: float
    coarse: float
    fine: float
    radius: float
    low_confidence: bool
    walks: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class GreenEstimate:
    """G(X, Y) = ℰ(X - Y) - E[ℰ(X - Z)], Z ~ ω^Y"""
    value: float
    stderr: float
    singular: float
    boundary_term: float
    walks: int
    escaped: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class WalkResult:
    """Puntos de salida y máscara de caminatas escapadas"""
    exits: np.ndarray
    escaped: np.ndarray
    steps: int

    @property
    def count(self) -> int:
        return len(self.escaped)

    @property
    def escaped_fraction(self) -> float:
        return float(np.mean(self.escaped)) if self.count else 0.0


def _unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _halfspace_exits(domain: Domain, X: np.ndarray, count: int, rng: np.random.Generator,
                     antithetic: bool) -> np.ndarray:
    """Muestreo exacto del núcleo de Poisson del semiespacio (ley de Cauchy)"""
    t = abs(X[-1])
    n = domain.dim - 1
    half = (count + 1) // 2 if antithetic else count
    N = rng.standard_normal((half, n))
    g = np.abs(rng.standard_normal(half))
    step = t * N / g[:, None]
    if antithetic:
        step = np.vstack([step, -step])[:count]
    exits = np.zeros((count, domain.dim))
    exits[:, :-1] = X[:-1] + step
    return exits


def _ball_exits(domain: Domain, X: np.ndarray, count: int, rng: np.random.Generator,
                antithetic: bool) -> np.ndarray:
    """Muestreo exacto del núcleo de Poisson de la bola por rechazo"""
    E = domain.boundary
    R = E.radius
    d = domain.dim
    V = X - E.center
    rho = float(np.linalg.norm(V)) / R
    if rho == 0.0:
        half = (count + 1) // 2 if antithetic else count
        U = _unit_vectors(rng, half, d)
        if antithetic:
            U = np.vstack([U, -U])[:count]
        return E.center + R * U
    bound = (1.0 + rho) / (1.0 - rho) ** (d - 1)
    out = np.empty((0, d))
    while len(out) < count:
        need = count - len(out)
        U = _unit_vectors(rng, int(need * bound * 1.2) + 16, d)
        Y = E.center + R * U
        ratio = R ** (d - 2) * (R * R - float(V @ V)) / np.linalg.norm(Y - X, axis=1) ** d
        accept = rng.random(len(Y)) * bound < ratio
        out = np.vstack([out, Y[accept]])
    return out[:count]


def _exact_kind(domain: Domain, X: np.ndarray) -> Optional[str]:
    E = domain.boundary
    if isinstance(E, HyperplanePatch) and E.infinite:
        return "halfspace"
    if isinstance(E, SphereBoundary) and domain.side == "interior":
        rho = float(np.linalg.norm(X - E.center)) / E.radius
        if rho == 0.0 or rho <= RHO_EXACT:
            return "ball"
    return None


def _walk_chunk(domain: Domain, X: np.ndarray, count: int, rng: np.random.Generator,
                shell: float, kill: float, max_steps: int, antithetic: bool) -> WalkResult:
    """Caminatas sobre esferas vectorizadas sobre un bloque de caminantes"""
    E = domain.boundary
    d = domain.dim
    P = np.repeat(X[None, :], count, axis=0)
    exits = np.zeros((count, d))
    escaped = np.zeros(count, dtype=bool)
    active = np.arange(count)
    steps = 0
    half = count // 2 if antithetic else 0
    while len(active) and steps < max_steps:
        delta, near = E.distance(P[active])
        done = delta < shell
        if done.any():
            exits[active[done]] = near[done]
        if math.isfinite(kill):
            far = ~done & (np.linalg.norm(P[active] - X, axis=1) > kill)
            escaped[active[far]] = True
            done |= far
        keep = ~done
        active, delta = active[keep], delta[keep]
        if not len(active):
            break
        U = _unit_vectors(rng, count, d)
        if half:
            U[half:2 * half] = -U[:half]
        P[active] += delta[:, None] * U[active]
        steps += 1
    if len(active):
        escaped[active] = True
    return WalkResult(exits, escaped, steps)


def exit_points(domain: Domain, X: Any, cfg: WalkConfig, walks: Optional[int] = None,
                seed: Optional[int] = None, antithetic: bool = False) -> WalkResult:
    """Muestras de ω^X: puntos de absorción en ∂Ω (o escape)"""
    X = as_points(X, domain.dim)[0]
    if not bool(domain.contains(X[None, :])[0]):
        raise DomainError("X no pertenece a Ω", {"X": X.tolist()})
    E = domain.boundary
    delta = float(E.distance(X)[0][0])
    scale = cfg.scale if cfg.scale is not None else (E.diameter if E.bounded else delta)
    shell = cfg.eps_shell * scale
    if not delta > shell:
        raise DomainError(f"δ(X) = {delta:.3e} no supera ε_shell = {shell:.3e}", {"X": X.tolist()})
    total = cfg.walks if walks is None else int(walks)
    seed = cfg.seed if seed is None else seed
    sizes = [min(cfg.chunk, total - i) for i in range(0, total, cfg.chunk)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    kind = _exact_kind(domain, X) if cfg.exact else None
    unbounded = not (E.bounded and domain.side == "interior")
    kill = cfg.kill_factor * scale if unbounded else math.inf

    def run(job: Tuple[int, np.random.SeedSequence]) -> WalkResult:
        size, child = job
        rng = np.random.default_rng(child)
        if kind == "halfspace":
            return WalkResult(_halfspace_exits(domain, X, size, rng, antithetic), np.zeros(size, dtype=bool), 1)
        if kind == "ball":
            return WalkResult(_ball_exits(domain, X, size, rng, antithetic), np.zeros(size, dtype=bool), 1)
        return _walk_chunk(domain, X, size, rng, shell, kill, cfg.max_steps, antithetic)

    jobs = list(zip(sizes, children))
    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    return WalkResult(np.vstack([p.exits for p in parts]), np.concatenate([p.escaped for p in parts]),
                      max(p.steps for p in parts))


def _indicator(target: Target, Z: np.ndarray) -> np.ndarray:
    if isinstance(target, SurfaceBall):
        return np.linalg.norm(Z - np.asarray(target.center, dtype=float), axis=1) < target.radius
    return np.asarray(target(Z), dtype=bool)


def _estimate(values: np.ndarray, result: WalkResult, seed: int) -> MeasureEstimate:
    M = len(values)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(M))
    flags = []
    if result.escaped_fraction > ESCAPE_WARNING:
        flags.append("escaped>1%")
    return MeasureEstimate(mean, stderr, M, result.escaped_fraction, seed, flags)


def wos_harmonic_measure(domain: Domain, X: Any, target: Target, cfg: Optional[WalkConfig] = None) -> MeasureEstimate:
    """ω̂^X(Δ): fracción de caminatas absorbidas en Δ"""
    cfg = cfg or WalkConfig()
    result = exit_points(domain, X, cfg)
    hits = (_indicator(target, result.exits) & ~result.escaped).astype(float)
    estimate = _estimate(hits, result, cfg.seed)
    status(f"Medida armónica: {estimate.mean:.5f} ± {estimate.stderr:.5f} ({estimate.walks} caminatas)")
    return estimate


def wos_partition(domain: Domain, X: Any, cells: Sequence[Target], cfg: Optional[WalkConfig] = None) -> Dict[str, Any]:
    """Masa de una partición disjunta; las sumas más el escape valen exactamente 1"""
    cfg = cfg or WalkConfig()
    result = exit_points(domain, X, cfg)
    landed = ~result.escaped
    owner = np.full(result.count, -1)
    for i, cell in enumerate(cells):
        inside = _indicator(cell, result.exits) & landed & (owner < 0)
        owner[inside] = i
    counts = np.bincount(owner[owner >= 0], minlength=len(cells)).astype(float)
    outside = float(np.sum(landed & (owner < 0)))
    escaped = float(np.sum(result.escaped))
    total = result.count
    return {"masses": (counts / total).tolist(), "outside": outside / total, "escaped": escaped / total,
            "total": float((counts.sum() + outside + escaped) / total), "walks": total}


def poisson_density(domain: Domain, X: Any, y: Any, s: float, cfg: Optional[WalkConfig] = None) -> DensityEstimate:
    """k̂ = ω̂^X(Δ(y, s))/σ(Δ(y, s)) extrapolado con s y s/2"""
    cfg = cfg or WalkConfig()
    E = domain.boundary
    y = np.asarray(y, dtype=float)
    dy, _ = E.distance(y)
    if dy[0] > E.tolerance(s):
        raise DomainError(f"y fuera de ∂Ω (δ = {dy[0]:.3e})", {"y": y.tolist()})
    X = as_points(X, domain.dim)[0]
    delta = float(E.distance(X)[0][0])
    scale = cfg.scale if cfg.scale is not None else (E.diameter if E.bounded else delta)
    if s < 5.0 * cfg.eps_shell * scale:
        raise ArgumentError(f"s = {s} menor que 5·ε_shell", {"s": s})
    result = exit_points(domain, X, cfg)
    dist = np.linalg.norm(result.exits - y, axis=1)
    landed = ~result.escaped
    sig_s = E.sigma_ball(y, s)
    sig_h = E.sigma_ball(y, 0.5 * s)
    coarse = ((dist < s) & landed) / sig_s
    fine = ((dist < 0.5 * s) & landed) / sig_h
    combined = (4.0 * fine - coarse) / 3.0
    value = float(combined.mean())
    stderr = float(combined.std(ddof=1) / math.sqrt(len(combined)))
    low = value <= 0.0 or stderr > LOW_CONFIDENCE * abs(value)
    return DensityEstimate(value, stderr, float(coarse.mean()), float(fine.mean()), s, bool(low), len(combined))


def green_function(domain: Domain, X: Any, Y: Any, cfg: Optional[WalkConfig] = None) -> GreenEstimate:
    """G(X, Y) con caminatas antitéticas desde Y"""
    cfg = cfg or WalkConfig()
    X = as_points(X, domain.dim)[0]
    Y = as_points(Y, domain.dim)[0]
    scale = cfg.scale if cfg.scale is not None else 1.0
    if np.linalg.norm(X - Y) < cfg.eps_shell * scale:
        raise ArgumentError("|X - Y| menor que ε_shell", {"X": X.tolist(), "Y": Y.tolist()})
    if not bool(domain.contains(X[None, :])[0]):
        raise DomainError("X no pertenece a Ω", {"X": X.tolist()})
    kernel = FundamentalSolution(domain.dim)
    singular = float(kernel.value(X - Y)[0])
    result = exit_points(domain, Y, cfg, antithetic=True)
    values = np.zeros(result.count)
    landed = ~result.escaped
    values[landed] = kernel.value(X - result.exits[landed])
    half = result.count // 2
    paired = 0.5 * (values[:half] + values[half:2 * half])
    if result.count % 2:
        paired = np.append(paired, values[-1])
    boundary_term = float(paired.mean())
    stderr = float(paired.std(ddof=1) / math.sqrt(len(paired)))
    return GreenEstimate(singular - boundary_term, stderr, singular, boundary_term, result.count,
                         result.escaped_fraction)


def green_symmetry(domain: Domain, X: Any, Y: Any, cfg: Optional[WalkConfig] = None) -> Dict[str, Any]:
    """G(X, Y) frente a G(Y, X) dentro de 3 errores estándar"""
    cfg = cfg or WalkConfig()
    a = green_function(domain, X, Y, cfg)
    b = green_function(domain, Y, X, cfg.replace(seed=cfg.seed + 1))
    spread = math.hypot(a.stderr, b.stderr)
    return {"G_xy": a.value, "G_yx": b.value, "difference": a.value - b.value,
            "stderr": spread, "passed": abs(a.value - b.value) <= 3.0 * spread}


def green_lower_bound_check(domain: Domain, X: Any, cfg: Optional[WalkConfig] = None,
                            theta: float = 0.5, samples: int = 4, seed: int = 0) -> Dict[str, Any]:
    """c = min G(X, Y)·|X - Y|^{n-1} para |X - Y| ≤ θ δ(X)"""
    cfg = cfg or WalkConfig()
    X = as_points(X, domain.dim)[0]
    delta = float(domain.distance(X)[0][0])
    rng = np.random.default_rng(seed)
    n = domain.dim - 1
    rows = []
    for r in theta * delta * np.linspace(0.25, 1.0, samples):
        Y = X + r * _unit_vectors(rng, 1, domain.dim)[0]
        G = green_function(domain, X, Y, cfg)
        scale = r ** (n - 1) if n > 1 else 1.0 / max(math.log(delta / r), 1e-12)
        rows.append({"distance": float(r), "G": G.value, "stderr": G.stderr, "c": G.value * scale})
    c_min = min(row["c"] for row in rows)
    return {"rows": rows, "c_min": c_min, "passed": c_min > 0.0}


def _measures(domain: Domain, X: Any, targets: Sequence[Target], cfg: WalkConfig) -> Tuple[np.ndarray, WalkResult]:
    result = exit_points(domain, X, cfg)
    landed = ~result.escaped
    hits = np.stack([(_indicator(t, result.exits) & landed).astype(float) for t in targets])
    return hits, result


def _ratio(num: np.ndarray, den: np.ndarray) -> Tuple[float, float]:
    """Cociente de medias con error estándar por el método delta"""
    M = len(num)
    a, b = float(num.mean()), float(den.mean())
    if b == 0.0:
        return math.inf, math.inf
    cov = np.cov(num, den, ddof=1)
    var = (cov[0, 0] / b ** 2 - 2.0 * a * cov[0, 1] / b ** 3 + a * a * cov[1, 1] / b ** 4) / M
    return a / b, float(math.sqrt(max(var, 0.0)))


def corkscrew_pole(domain: Domain, ball: SurfaceBall) -> np.ndarray:
    """Punto de sacacorchos X_Δ sobre la normal (o corkscrew numérico)"""
    x = np.asarray(ball.center, dtype=float)
    nu = domain.boundary.normal(x, domain.side)
    if nu is not None:
        P = x + 0.5 * ball.radius * nu
        if bool(domain.contains(P[None, :])[0]):
            return P
    return corkscrew(domain, ball).point


def _far_pole(domain: Domain, ball: SurfaceBall, X: np.ndarray, factor: float, label: str) -> None:
    gap = float(np.linalg.norm(X - np.asarray(ball.center, dtype=float)))
    if gap < factor * ball.radius:
        raise PreconditionError(f"el polo está dentro de {factor:g}B", f"X ∉ B(x, {factor:g}r) [{label}]",
                                {"X": X.tolist(), "center": list(ball.center), "radius": ball.radius})


def bourgain_check(domain: Domain, x: Any, r: float, cfg: Optional[WalkConfig] = None, c: float = 0.1,
                   samples: int = 8, seed: int = 0) -> Dict[str, Any]:
    """min_{Y ∈ Ω ∩ B(x, cr)} ω^Y(Δ(x, r)) y el corolario en X_Δ"""
    cfg = cfg or WalkConfig()
    E = domain.boundary
    x = np.asarray(x, dtype=float)
    if E.bounded and r >= E.diameter:
        raise PreconditionError(f"r = {r} ≥ diam ∂Ω", "r < diam(∂Ω)", {"r": r})
    ball = SurfaceBall(tuple(x.tolist()), r)
    rng = np.random.default_rng(seed)
    nu = E.normal(x, domain.side)
    poles = []
    if nu is not None:
        poles.append(x + c * r * nu * (1.0 - 1e-9))
    while len(poles) < samples:
        cand = x + c * r * rng.random() ** (1.0 / domain.dim) * _unit_vectors(rng, 1, domain.dim)[0]
        delta = float(E.distance(cand)[0][0])
        if bool(domain.contains(cand[None, :])[0]) and delta > 10.0 * cfg.eps_shell * c * r:
            poles.append(cand)
    rows = []
    for i, Y in enumerate(poles):
        est = wos_harmonic_measure(domain, Y, ball, cfg.replace(seed=cfg.seed + i, scale=cfg.scale or r))
        rows.append({"Y": Y.tolist(), "mean": est.mean, "stderr": est.stderr})
    worst = min(rows, key=lambda row: row["mean"])
    pole = corkscrew_pole(domain, ball)
    cork = wos_harmonic_measure(domain, pole, ball, cfg.replace(seed=cfg.seed + len(poles), scale=cfg.scale or r))
    return {"rows": rows, "min": worst["mean"], "min_stderr": worst["stderr"], "C": 1.0 / max(worst["mean"], 1e-300),
            "corkscrew": cork.mean, "corkscrew_stderr": cork.stderr,
            "corkscrew_C": 1.0 / max(cork.mean, 1e-300)}


def cfms_check(domain: Domain, ball: SurfaceBall, X: Any, cfg: Optional[WalkConfig] = None) -> Dict[str, Any]:
    """r^{n-1} G(X_Δ, X) frente a ω^X(Δ) con X fuera de 4B"""
    cfg = cfg or WalkConfig()
    X = as_points(X, domain.dim)[0]
    _far_pole(domain, ball, X, 4.0, "CFMS")
    n = domain.dim - 1
    pole = corkscrew_pole(domain, ball)
    G = green_function(domain, X, pole, cfg)
    omega = wos_harmonic_measure(domain, X, ball, cfg.replace(seed=cfg.seed + 1))
    lhs = ball.radius ** (n - 1) * G.value
    ratio = omega.mean / lhs if lhs > 0 else math.inf
    rel = math.hypot(omega.stderr / max(omega.mean, 1e-300), G.stderr / max(abs(G.value), 1e-300))
    return {"green": G.value, "green_stderr": G.stderr, "omega": omega.mean, "omega_stderr": omega.stderr,
            "lhs": lhs, "ratio": ratio, "ratio_stderr": ratio * rel, "pole": pole.tolist()}


def doubling_check(domain: Domain, ball: SurfaceBall, X: Any, cfg: Optional[WalkConfig] = None) -> Dict[str, Any]:
    """ω^X(2Δ)/ω^X(Δ) sobre las mismas caminatas"""
    cfg = cfg or WalkConfig()
    X = as_points(X, domain.dim)[0]
    _far_pole(domain, ball, X, 4.0, "duplicación")
    hits, result = _measures(domain, X, [ball.scaled(2.0), ball], cfg)
    ratio, stderr = _ratio(hits[0], hits[1])
    return {"omega_2": float(hits[0].mean()), "omega_1": float(hits[1].mean()), "ratio": ratio,
            "stderr": stderr, "escaped": result.escaped_fraction}


def pole_change_check(domain: Domain, inner: SurfaceBall, outer: SurfaceBall, X: Any,
                      cfg: Optional[WalkConfig] = None) -> Dict[str, Any]:
    """ω^X(Δ')/ω^X(Δ) frente a ω^{X_Δ}(Δ') para Δ' ⊂ Δ"""
    cfg = cfg or WalkConfig()
    X = as_points(X, domain.dim)[0]
    gap = float(np.linalg.norm(np.asarray(inner.center) - np.asarray(outer.center)))
    if gap + inner.radius > outer.radius * (1.0 + 1e-12):
        raise PreconditionError("Δ' no está contenida en Δ", "Δ' ⊂ Δ",
                                {"inner": [list(inner.center), inner.radius],
                                 "outer": [list(outer.center), outer.radius]})
    _far_pole(domain, outer, X, 4.0, "cambio de polo")
    hits, _ = _measures(domain, X, [inner, outer], cfg)
    lhs, lhs_err = _ratio(hits[0], hits[1])
    pole = corkscrew_pole(domain, outer)
    rhs = wos_harmonic_measure(domain, pole, inner, cfg.replace(seed=cfg.seed + 1))
    factor = lhs / rhs.mean if rhs.mean > 0 else math.inf
    return {"lhs": lhs, "lhs_stderr": lhs_err, "rhs": rhs.mean, "rhs_stderr": rhs.stderr,
            "factor": factor, "pole": pole.tolist()}


def harnack_measure_check(domain: Domain, chain: Any, target: Target,
                          cfg: Optional[WalkConfig] = None) -> Dict[str, Any]:
    """ω̂^X(Δ)/ω̂^{X'}(Δ) ≤ 3^N a lo largo de una cadena de Harnack"""
    cfg = cfg or WalkConfig()
    a = wos_harmonic_measure(domain, chain.X, target, cfg)
    b = wos_harmonic_measure(domain, chain.X2, target, cfg.replace(seed=cfg.seed + 1))
    bound = 3.0 ** chain.N
    hi = (a.mean + 3.0 * a.stderr) / max(b.mean - 3.0 * b.stderr, 1e-300)
    lo = max(a.mean - 3.0 * a.stderr, 1e-300) / (b.mean + 3.0 * b.stderr)
    return {"ratio": a.mean / max(b.mean, 1e-300), "bound": bound,
            "passed": lo <= bound and 1.0 / hi <= bound}


def stderr_scaling(domain: Domain, X: Any, target: Target, cfg: Optional[WalkConfig] = None,
                   factor: int = 4) -> Dict[str, float]:
    """Cociente de errores estándar al multiplicar las caminatas por factor"""
    cfg = cfg or WalkConfig()
    small = wos_harmonic_measure(domain, X, target, cfg)
    large = wos_harmonic_measure(domain, X, target, cfg.replace(walks=cfg.walks * factor, seed=cfg.seed + 1))
    observed = small.stderr / large.stderr if large.stderr > 0 else math.inf
    expected = math.sqrt(factor)
    return {"observed": observed, "expected": expected, "relative_error": abs(observed / expected - 1.0)}
