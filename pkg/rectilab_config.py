"""
Rectilab Config - Escenarios JSON versionados y valores por defecto de config.ini
Precedencia: bandera CLI > RECTILAB_WORKERS > escenario > config.ini > valor interno
"""

import configparser
import copy
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

from rectilab_errors import ArgumentError, ConfigurationError
from rectilab_geometry import BoundaryModel, boundary_from_dict
from rectilab_harmonic import WalkConfig
from rectilab_whitney import WhitneyConfig

SCHEMA_VERSION = 1
CONFIG_FILE = "config.ini"
WORKERS_ENV = "RECTILAB_WORKERS"

# Identificadores de verificación, en orden de dependencia
KNOWN_CHECKS = (
    "adr", "dyadic-grid", "dyadic-plane", "dyadic-sphere", "thin-boundary",
    "whitney-suite", "approximant-adr",
    "corkscrew", "nta-halfspace",
    "carleson-plane", "carleson-ur", "shell-theorem", "sio-sphere", "cantor-contrast",
    "wos-halfspace-disk", "wos-ball-center", "poisson-halfspace", "green-halfspace", "green-symmetry",
    "bourgain", "cfms", "doubling", "pole-change",
    "rh-halfspace", "rh-approximants", "ainfty", "good-lambda", "tb-conditions", "nt-green",
)

DEFAULTS: Dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "name": "custom",
    "boundary": {"variant": "hyperplane-patch", "params": {"dim": 3}, "samples": []},
    "geometry": {"c_min": 0.05, "adr_bound": 4.0},
    "grid": {"k_min": 0, "k_max": 4, "spacing": 0.05},
    "whitney": {"ratio": 5.5, "lam": 0.05, "c0_factor": 8.0, "m0": 2, "reference": False},
    "walks": {"eps_shell": 1e-3, "max_steps": 10_000, "walks": 20_000, "kill_factor": 64.0,
              "chunk": 8192, "exact": True},
    "quadrature": {"resolution": 0, "depth": 5, "subdivide": 2, "spacing": 0.035},
    "functionals": {"p": 2.0, "q": 2.0, "generations": [1, 2, 3], "approximants": [4, 5, 6],
                    "cantor_depths": [2, 3, 4, 5, 6], "cone_c0_factor": 4.0},
    "checks": [],
    "seed": 0,
    "workers": 1,
    "output": "results",
}

# Bloques libres: su contenido lo valida quien lo consume
OPEN_BLOCKS = ("boundary.params",)

INI_SECTIONS = {
    "Geometry": "geometry",
    "Whitney": "whitney",
    "Walks": "walks",
    "Quadrature": "quadrature",
    "Functionals": "functionals",
    "Run": "",
}

RUN_KEYS = ("seed", "workers", "output")


def _kind(value: Any) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "str"
    if isinstance(value, list):
        return "list"
    if isinstance(value, dict):
        return "dict"
    return type(value).__name__


def _compatible(expected: Any, value: Any) -> bool:
    want, got = _kind(expected), _kind(value)
    return want == got or (want == "float" and got == "int")


def validate(doc: Mapping[str, Any], template: Mapping[str, Any] = DEFAULTS, path: str = "") -> None:
    """Rechaza claves desconocidas y tipos incompatibles con la ruta completa"""
    if not isinstance(doc, Mapping):
        raise ConfigurationError("se esperaba un objeto", path or "<raíz>")
    for key, value in doc.items():
        where = f"{path}.{key}" if path else key
        if key not in template:
            raise ConfigurationError("clave desconocida", where)
        expected = template[key]
        if not _compatible(expected, value):
            raise ConfigurationError(f"tipo {_kind(value)} no válido, se esperaba {_kind(expected)}", where)
        if isinstance(expected, dict) and where not in OPEN_BLOCKS:
            validate(value, expected, where)


def merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Mezcla recursiva; las listas y valores se sustituyen enteros"""
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict) and key != "params":
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _check_exponent(name: str, value: float) -> None:
    if not (1.0 < value < math.inf):
        raise ConfigurationError(f"se requiere 1 < {name.split('.')[-1]} < ∞ (valor {value!r})", name)


def _check_semantics(doc: Mapping[str, Any]) -> None:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"versión de esquema {doc.get('schema_version')!r} no soportada, se esperaba "
                                 f"{SCHEMA_VERSION}", "schema_version")
    _check_exponent("functionals.p", float(doc["functionals"]["p"]))
    _check_exponent("functionals.q", float(doc["functionals"]["q"]))
    grid = doc["grid"]
    if grid["k_max"] < grid["k_min"]:
        raise ConfigurationError(f"niveles invertidos {grid['k_min']} > {grid['k_max']}", "grid.k_max")
    if doc["workers"] < 1:
        raise ConfigurationError("se requiere al menos un trabajador", "workers")
    for i, check in enumerate(doc["checks"]):
        if check not in KNOWN_CHECKS:
            raise ConfigurationError(f"verificación desconocida {check!r}", f"checks[{i}]")
    if "variant" not in doc["boundary"]:
        raise ConfigurationError("falta la variante del borde", "boundary.variant")
    for key in ("generations", "approximants", "cantor_depths"):
        if not doc["functionals"][key]:
            raise ConfigurationError("la lista no puede estar vacía", f"functionals.{key}")


@dataclass
class Scenario:
    """Escenario completo: determina una ejecución"""
    name: str
    boundary: Dict[str, Any]
    geometry: Dict[str, Any]
    grid: Dict[str, Any]
    whitney: Dict[str, Any]
    walks: Dict[str, Any]
    quadrature: Dict[str, Any]
    functionals: Dict[str, Any]
    checks: List[str] = field(default_factory=list)
    seed: int = 0
    workers: int = 1
    output: str = "results"

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], defaults: Optional[Mapping[str, Any]] = None) -> "Scenario":
        validate(doc)
        full = merge(defaults if defaults is not None else DEFAULTS, doc)
        if "boundary" in doc:
            # otra variante no hereda los parámetros del borde por defecto
            full["boundary"] = merge({"params": {}, "samples": []}, doc["boundary"])
        validate(full)
        _check_semantics(full)
        full.pop("schema_version")
        scenario = cls(**full)
        scenario.whitney_config()
        scenario.walk_config()
        return scenario

    def to_dict(self) -> Dict[str, Any]:
        doc = {"schema_version": SCHEMA_VERSION}
        doc.update(copy.deepcopy(self.__dict__))
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    def replace(self, **changes: Any) -> "Scenario":
        doc = self.to_dict()
        doc.update(changes)
        return Scenario.from_dict(doc)

    def boundary_model(self) -> BoundaryModel:
        try:
            return boundary_from_dict(self.boundary)
        except (ArgumentError, TypeError) as exc:
            raise ConfigurationError(str(exc), "boundary") from exc

    def whitney_config(self) -> WhitneyConfig:
        try:
            return WhitneyConfig(**self.whitney)
        except ArgumentError as exc:
            raise ConfigurationError(str(exc), "whitney") from exc

    def walk_config(self, seed: Optional[int] = None) -> WalkConfig:
        try:
            return WalkConfig(seed=self.seed if seed is None else seed, workers=self.workers, **self.walks)
        except ArgumentError as exc:
            raise ConfigurationError(str(exc), "walks") from exc


def _ini_value(parser: configparser.ConfigParser, section: str, key: str, expected: Any) -> Any:
    kind = _kind(expected)
    try:
        if kind == "bool":
            return parser.getboolean(section, key)
        if kind == "int":
            return parser.getint(section, key)
        if kind == "float":
            return parser.getfloat(section, key)
        if kind == "list":
            return json.loads(parser.get(section, key))
    except (ValueError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"valor no válido: {exc}", f"config.ini:[{section}].{key}") from exc
    return parser.get(section, key)


def load_ini(filename: str = CONFIG_FILE) -> Dict[str, Any]:
    """Valores por defecto desde config.ini; archivo ausente → {}"""
    parser = configparser.ConfigParser()
    if not parser.read(filename, encoding="utf-8"):
        return {}
    out: Dict[str, Any] = {}
    for section in parser.sections():
        if section not in INI_SECTIONS:
            raise ConfigurationError("sección desconocida", f"config.ini:[{section}]")
        block = INI_SECTIONS[section]
        template = DEFAULTS[block] if block else {k: DEFAULTS[k] for k in RUN_KEYS}
        target = out.setdefault(block, {}) if block else out
        for key in parser[section]:
            if key not in template:
                raise ConfigurationError("clave desconocida", f"config.ini:[{section}].{key}")
            target[key] = _ini_value(parser, section, key, template[key])
    return out


def ini_text(defaults: Mapping[str, Any] = DEFAULTS) -> str:
    """Contenido de config.ini con los valores internos"""
    parser = configparser.ConfigParser()
    for section, block in INI_SECTIONS.items():
        values = defaults[block] if block else {k: defaults[k] for k in RUN_KEYS}
        parser[section] = {k: json.dumps(v) if isinstance(v, list) else str(v).lower() if isinstance(v, bool)
                           else str(v) for k, v in values.items()}
    header = "# Configuración de Rectilab\n# Valores por defecto de los escenarios\n\n"
    buffer = io.StringIO()
    parser.write(buffer)
    return header + buffer.getvalue()


def load_defaults(filename: str = CONFIG_FILE) -> Dict[str, Any]:
    """DEFAULTS con config.ini aplicado encima"""
    return merge(DEFAULTS, load_ini(filename))


def load_scenario(filename: str, ini: str = CONFIG_FILE) -> Scenario:
    """Lee un escenario JSON; errores de esquema con su ruta"""
    try:
        with open(filename, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"JSON no válido: {exc.msg} (línea {exc.lineno})", filename) from exc
    return Scenario.from_dict(doc, load_defaults(ini))


def resolve_workers(flag: Optional[int], scenario_value: int,
                    env: Optional[Mapping[str, str]] = None) -> int:
    """Bandera > RECTILAB_WORKERS > escenario"""
    if flag is not None:
        workers = flag
    else:
        raw = (os.environ if env is None else env).get(WORKERS_ENV)
        if raw:
            try:
                workers = int(raw)
            except ValueError as exc:
                raise ConfigurationError(f"valor no entero {raw!r}", WORKERS_ENV) from exc
        else:
            workers = scenario_value
    if workers < 1:
        raise ConfigurationError(f"se requiere al menos un trabajador (valor {workers})", "workers")
    return workers


def apply_overrides(scenario: Scenario, seed: Optional[int] = None, workers: Optional[int] = None,
                    reference: bool = False, output: Optional[str] = None,
                    env: Optional[Mapping[str, str]] = None) -> Scenario:
    """Aplica banderas de línea de comandos y entorno sobre el escenario"""
    changes: Dict[str, Any] = {"workers": resolve_workers(workers, scenario.workers, env)}
    if seed is not None:
        changes["seed"] = seed
    if output is not None:
        changes["output"] = output
    if reference:
        changes["whitney"] = dict(scenario.whitney, reference=True)
    return scenario.replace(**changes)


def _halfspace_acceptance() -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": "halfspace-acceptance",
        "boundary": {"variant": "hyperplane-patch", "params": {"dim": 3}},
        "checks": ["dyadic-plane", "dyadic-sphere", "thin-boundary", "whitney-suite", "approximant-adr",
                   "nta-halfspace", "carleson-plane", "shell-theorem", "cantor-contrast",
                   "wos-halfspace-disk", "wos-ball-center", "green-halfspace", "green-symmetry",
                   "rh-halfspace", "rh-approximants", "good-lambda", "tb-conditions", "nt-green"],
    }


BUILTINS = {
    "halfspace-acceptance": _halfspace_acceptance,
    "harmonic-diagnostics": lambda: {
        "schema_version": SCHEMA_VERSION, "name": "harmonic-diagnostics",
        "checks": ["poisson-halfspace", "bourgain", "cfms", "doubling", "pole-change", "ainfty"],
    },
    "sphere-geometry": lambda: {
        "schema_version": SCHEMA_VERSION, "name": "sphere-geometry",
        "boundary": {"variant": "sphere", "params": {"dim": 3}},
        "grid": {"k_min": 0, "k_max": 3},
        "checks": ["adr", "dyadic-grid", "corkscrew", "carleson-ur", "sio-sphere"],
    },
    "empty": lambda: {"schema_version": SCHEMA_VERSION, "name": "empty", "checks": []},
}


def builtin_scenario(name: str, ini: str = CONFIG_FILE) -> Scenario:
    if name not in BUILTINS:
        raise ConfigurationError(f"escenario interno desconocido {name!r}", "scenario")
    return Scenario.from_dict(BUILTINS[name](), load_defaults(ini))
