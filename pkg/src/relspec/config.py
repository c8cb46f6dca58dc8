"""json run configs: model families, numeric controls and sweep settings"""

import copy
import inspect
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Union

from .bogolyubov import HEAT_QUADRATURE_CONTROL, Flavor, Route
from .errors import ConfigError, DomainError, RelspecError
from .quadrature import QuadratureControl
from .specfun import DEFAULT_SERIES_CONTROL, SeriesControl
from .spectral import (
    GeometryPair,
    OperatorPair,
    build_dirac_circle_pair,
    build_schrodinger_circle_pair,
    build_torus_pair,
    circle_laplace_spectrum,
    constant_shift_pair,
)


def _constant_shift_model(
    M_sq: float, cutoff: int = 32, scale: float = 1.0, m: float = 1.0
) -> OperatorPair:
    """H_- = -scale^2 d^2/dx^2 on the circle and H_+ = H_- + M_sq"""
    return constant_shift_pair(
        circle_laplace_spectrum(cutoff, scale), M_sq, m, GeometryPair.circle(scale, scale)
    )


MODEL_FAMILIES: Dict[str, Callable[..., OperatorPair]] = {
    "torus": build_torus_pair,
    "schrodinger_circle": build_schrodinger_circle_pair,
    "dirac_circle": build_dirac_circle_pair,
    "constant_shift": _constant_shift_model,
}

# every family needs the mass in the config file, even though builders default it
_REQUIRED_FOR_ALL = ("m",)

# scale parameters for the circle: a, b stand for g_plus = a^2, g_minus = b^2 with n = 1
_TORUS_ALIASES = {"a": "g_plus", "b": "g_minus"}

SWEEP_ROUTES = ("spectral", "heat", "both", "pairwise")

# routes a sweep route name runs
ROUTES_BY_NAME: Dict[str, List[Route]] = {
    "spectral": [Route.SPECTRAL],
    "heat": [Route.HEAT_INTEGRAL],
    "both": [Route.SPECTRAL, Route.HEAT_INTEGRAL],
    "pairwise": [Route.PAIRWISE],
}

DEFAULT_CONFIG: Dict[str, Any] = {
    "model": {
        "family": "torus",
        "n": 1,
        "g_plus": 4.0,
        "g_minus": 1.0,
        "q_plus": 0.0,
        "q_minus": 0.0,
        "cutoff": 64,
        "m": 1.0,
    },
    "controls": {
        "series": asdict(DEFAULT_SERIES_CONTROL),
        "quadrature": asdict(HEAT_QUADRATURE_CONTROL),
    },
    "sweep": {"betas": [0.5, 1.0, 2.0], "route": "spectral", "flavor": None},
}


def default_config() -> Dict[str, Any]:
    """A fresh copy of every default setting"""
    return copy.deepcopy(DEFAULT_CONFIG)


def _required_params(builder: Callable[..., OperatorPair]) -> List[str]:
    return [
        p.name
        for p in inspect.signature(builder).parameters.values()
        if p.default is inspect.Parameter.empty
    ]


def get_model(name: str, **params) -> OperatorPair:
    """
    Build a pair from a registered model family

    Parameters
    ----------
    name: str
        one of the keys of MODEL_FAMILIES
    **params
        builder parameters; for "torus", `a` and `b` may replace `g_plus`
        and `g_minus` as circle scales (n = 1)

    Returns
    -------
    OperatorPair

    Raises
    ------
    ConfigError
        unknown family, unknown or missing parameter, or a value the builder rejects
    """
    try:
        builder = MODEL_FAMILIES[name]
    except KeyError as e:
        raise ConfigError(
            "model.family", f"unknown model family '{name}'; choose from {sorted(MODEL_FAMILIES)}"
        ) from e

    params = dict(params)
    if name == "torus":
        for alias, target in _TORUS_ALIASES.items():
            if alias in params:
                if target in params:
                    raise ConfigError(f"model.{alias}", f"'{alias}' and '{target}' are exclusive")
                params[target] = float(params.pop(alias)) ** 2
                params.setdefault("n", 1)

    accepted = set(inspect.signature(builder).parameters)
    for key in params:
        if key not in accepted:
            raise ConfigError(f"model.{key}", f"unknown parameter for family '{name}'")
    for key in list(_REQUIRED_FOR_ALL) + _required_params(builder):
        if key not in params:
            raise ConfigError(f"model.{key}", f"missing required parameter for family '{name}'")

    try:
        return builder(**params)
    except (RelspecError, TypeError) as e:
        raise ConfigError("model", str(e)) from e


def _control(cls, data: Optional[Mapping[str, Any]], path: str, default):
    if data is None:
        return default
    known = set(default.__dataclass_fields__)
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown control field")
    try:
        return cls(**{**asdict(default), **data})
    except (DomainError, TypeError) as e:
        raise ConfigError(path, str(e)) from e


@dataclass
class RunConfig:
    """
    A parsed run config

    Attributes
    ----------
    model: Dict[str, Any]
        family name under "family" plus builder parameters
    series: SeriesControl
    quadrature: QuadratureControl
    betas: List[float]
    route: str
        spectral, heat, both or pairwise
    flavor: Flavor, optional
        None picks the flavor matching the pair kind
    geometry: GeometryPair, optional
        explicit leading symbols for coefficient reports
    """

    model: Dict[str, Any]
    series: SeriesControl = DEFAULT_SERIES_CONTROL
    quadrature: QuadratureControl = HEAT_QUADRATURE_CONTROL
    betas: List[float] = field(default_factory=lambda: list(DEFAULT_CONFIG["sweep"]["betas"]))
    route: str = "spectral"
    flavor: Optional[Flavor] = None
    geometry: Optional[GeometryPair] = None

    @property
    def family(self) -> str:
        """Model family name"""
        return self.model["family"]

    def build_pair(self) -> OperatorPair:
        """Build the configured pair"""
        params = {k: v for k, v in self.model.items() if k != "family"}
        return get_model(self.family, **params)

    def flavor_for(self, pair: OperatorPair) -> Flavor:
        """Configured flavor, or the one matching the pair kind"""
        if self.flavor is not None:
            return self.flavor
        return Flavor.FERMI if pair.is_dirac else Flavor.BOSE

    @property
    def routes(self) -> List[Route]:
        """Routes the sweep runs"""
        return ROUTES_BY_NAME[self.route]


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    """
    Validate a config mapping

    Only the "model" section is required; everything else falls back to
    DEFAULT_CONFIG. Model parameters are checked by building the pair.

    Raises
    ------
    ConfigError
        naming the dotted path of the first invalid field
    """
    if not isinstance(data, Mapping):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in data:
        if key not in ("model", "geometry", "controls", "sweep"):
            raise ConfigError(key, "unknown section")

    model = data.get("model")
    if not isinstance(model, Mapping):
        raise ConfigError("model", "missing model section")
    if "family" not in model:
        raise ConfigError("model.family", "missing model family")
    model = dict(model)
    get_model(model["family"], **{k: v for k, v in model.items() if k != "family"})

    controls = data.get("controls", {}) or {}
    series = _control(
        SeriesControl, controls.get("series"), "controls.series", DEFAULT_SERIES_CONTROL
    )
    quadrature = _control(
        QuadratureControl,
        controls.get("quadrature"),
        "controls.quadrature",
        HEAT_QUADRATURE_CONTROL,
    )

    sweep = {**DEFAULT_CONFIG["sweep"], **(data.get("sweep") or {})}
    for key in sweep:
        if key not in DEFAULT_CONFIG["sweep"]:
            raise ConfigError(f"sweep.{key}", "unknown sweep field")
    try:
        betas = [float(b) for b in sweep["betas"]]
    except (TypeError, ValueError) as e:
        raise ConfigError("sweep.betas", "betas must be a list of numbers") from e
    if not betas or any(not (b > 0 and math.isfinite(b)) for b in betas):
        raise ConfigError("sweep.betas", "betas must be a nonempty list of positive numbers")
    if sweep["route"] not in SWEEP_ROUTES:
        raise ConfigError("sweep.route", f"route must be one of {SWEEP_ROUTES}")
    flavor = None
    if sweep["flavor"] is not None:
        try:
            flavor = Flavor(sweep["flavor"])
        except ValueError as e:
            raise ConfigError("sweep.flavor", "flavor must be 'bose' or 'fermi'") from e

    geometry = None
    if data.get("geometry") is not None:
        try:
            geometry = GeometryPair.from_json_dict(data["geometry"])
        except (KeyError, DomainError, TypeError, ValueError) as e:
            raise ConfigError("geometry", str(e)) from e

    return RunConfig(model, series, quadrature, betas, sweep["route"], flavor, geometry)


def load_config(path: Union[str, os.PathLike]) -> RunConfig:
    """
    Read and validate a JSON config file

    Raises
    ------
    ConfigError
        unreadable file, invalid JSON or an invalid field
    """
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError("<file>", f"cannot read config '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON in '{path}': {e}") from e
    return parse_config(data)
