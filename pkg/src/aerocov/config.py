"""Sweep configuration: YAML ingestion, defaults, validation and unit conversion.

Configs use human units (dB, degrees, per km^2).  Every value is converted to
linear scale exactly once, in ``build_point``; nothing downstream sees dB.

Layering, lowest to highest priority: built-in defaults, an optional preset
shipped in ``aerocov/presets``, the user's config file, then CLI overrides.
"""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import yaml

from .analytic import QuadratureConfig
from .antenna import AntennaKind, SectorAntennaParams, UavAntenna
from .channel import NetworkParams
from .environment import EnvironmentParams
from .montecarlo import DeploymentKind, TrialConfig
from .scenario import Scenario, gs_uptilt

PRESETS = ("fig2", "fig3", "fig4")
ENGINES = ("analytic", "mc")
DEPLOYMENTS = ("gs", "bs")

DEFAULT_BEAMWIDTH_DEG = {"fixed": 165.0, "steerable": 60.0}

_NETWORK_DEFAULTS = {
    "height_m": 30.0,
    "tx_power_w": 40.0,
    "near_field_loss_db": -38.4,
    "noise_w": 8e-13,
    "alpha_los": 2.1,
    "alpha_nlos": 4.0,
    "m_los": 1,
    "m_nlos": 1,
    "horizontal_gain_db": -5.0,
    "vertical_beamwidth_deg": 10.0,
    "sidelobe_db": 20.0,
}

DEFAULTS: dict = {
    "preset": None,
    "environment": {"beta_per_km2": 300.0, "delta": 0.5, "kappa_m": 20.0},
    "network": {**_NETWORK_DEFAULTS, "density_per_km2": 1.0, "tilt_deg": "auto"},
    "terrestrial": {
        **_NETWORK_DEFAULTS,
        "density_per_km2": 5.0,
        "tilt_deg": -6.0,
        "association": "nearest",
    },
    "antenna": {"kind": "omni", "beamwidth_deg": None, "serving_lobe_exclusion": False},
    "scenario": {"uav_height_m": 120.0, "threshold_db": None},
    "sweep": {"axes": [], "runs": ["gs/analytic", "gs/mc"], "workers": 1},
    "montecarlo": {"trials": 100_000, "seed": 0, "sim_radius_m": None, "workers": 1},
    "quadrature": {"rel_tol": 1e-6, "abs_tol": 1e-9, "max_fading_order": 5},
    "output": {"path": None, "format": "csv", "timing": False},
}

# Sections whose keys may be swept.
_SWEEPABLE = ("environment", "network", "terrestrial", "antenna", "scenario")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# raw dict handling


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(path, "unknown field")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected a mapping")
            out[key] = _merge(base[key], value, path + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _read_yaml(path, label: str) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(label, f"not valid YAML ({exc})") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(label, "top level must be a mapping")
    return data


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("aerocov.presets").joinpath(f"{name}.yaml").read_text()
    return yaml.safe_load(text)


def _get(raw: dict, path: str):
    node = raw
    for part in path.split("."):
        node = node[part]
    return node


def _set(raw: dict, path: str, value) -> None:
    parts = path.split(".")
    node = raw
    for part in parts[:-1]:
        node = node[part]
    node[parts[-1]] = value


# ---------------------------------------------------------------------------
# typed field readers


def _num(raw, path, *, check=None, invariant="", integer=False, allow_none=False):
    value = _get(raw, path)
    if value is None:
        if allow_none:
            return None
        raise ConfigError(path, "required field is missing")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    value = int(value) if integer else float(value)
    if not math.isfinite(value) or (check is not None and not check(value)):
        raise ConfigError(path, f"value {value!r} violates {invariant}")
    return value


def _choice(raw, path, options):
    value = _get(raw, path)
    if value not in options:
        raise ConfigError(path, f"expected one of {', '.join(map(str, options))}, got {value!r}")
    return value


def _db(x: float) -> float:
    return 10.0 ** (x / 10.0)


# ---------------------------------------------------------------------------
# conversion of one grid point


def _environment(raw) -> EnvironmentParams:
    return EnvironmentParams(
        beta=_num(raw, "environment.beta_per_km2", check=lambda v: v > 0, invariant="beta > 0"),
        delta=_num(raw, "environment.delta", check=lambda v: 0 < v < 1, invariant="0 < delta < 1"),
        kappa=_num(raw, "environment.kappa_m", check=lambda v: v > 0, invariant="kappa > 0"),
    )


def _tilt(raw, section, dg, density):
    value = _get(raw, f"{section}.tilt_deg")
    if value == "auto":
        return gs_uptilt(dg, density), True
    deg = _num(raw, f"{section}.tilt_deg", check=lambda v: -90 <= v <= 90,
               invariant="-90 <= tilt_deg <= 90 (or 'auto')")
    return math.radians(deg), False


def _network(raw, section, uav_height) -> NetworkParams:
    s = section
    pos = dict(check=lambda v: v > 0)
    density = _num(raw, f"{s}.density_per_km2", invariant="density_per_km2 > 0", **pos) * 1e-6
    height = _num(raw, f"{s}.height_m", check=lambda v: v >= 0, invariant="height_m >= 0")
    tilt, _ = _tilt(raw, s, uav_height - height, density)
    sector = SectorAntennaParams(
        horizontal_gain=_db(_num(raw, f"{s}.horizontal_gain_db")),
        tilt_rad=tilt,
        vertical_3db_beamwidth_rad=math.radians(_num(
            raw, f"{s}.vertical_beamwidth_deg", invariant="vertical_beamwidth_deg > 0", **pos)),
        sidelobe_floor_db=_num(raw, f"{s}.sidelobe_db", check=lambda v: v > 0,
                               invariant="sidelobe_db > 0"),
    )
    m_check = dict(check=lambda v: v >= 1, integer=True)
    return NetworkParams(
        density_per_m2=density,
        station_height_m=height,
        tx_power_w=_num(raw, f"{s}.tx_power_w", invariant="tx_power_w > 0", **pos),
        near_field_loss=_db(_num(raw, f"{s}.near_field_loss_db")),
        noise_w=_num(raw, f"{s}.noise_w", check=lambda v: v >= 0, invariant="noise_w >= 0"),
        alpha_los=_num(raw, f"{s}.alpha_los", invariant="alpha_los > 0", **pos),
        alpha_nlos=_num(raw, f"{s}.alpha_nlos", invariant="alpha_nlos > 0", **pos),
        m_los=_num(raw, f"{s}.m_los", invariant="m_los >= 1 integer", **m_check),
        m_nlos=_num(raw, f"{s}.m_nlos", invariant="m_nlos >= 1 integer", **m_check),
        sector=sector,
    )


def _antenna(raw) -> UavAntenna:
    kind = _choice(raw, "antenna.kind", [k.value for k in AntennaKind])
    if kind == "omni":
        return UavAntenna.omni()
    width = _get(raw, "antenna.beamwidth_deg")
    if width is None:
        width = DEFAULT_BEAMWIDTH_DEG[kind]
    else:
        width = _num(raw, "antenna.beamwidth_deg", check=lambda v: 0 < v < 360,
                     invariant="0 < beamwidth_deg < 360")
    exclusion = _get(raw, "antenna.serving_lobe_exclusion")
    if not isinstance(exclusion, bool):
        raise ConfigError("antenna.serving_lobe_exclusion", "expected true or false")
    if kind == "fixed":
        return UavAntenna.fixed(width, exclusion)
    return UavAntenna.steerable(width)


def antenna_label(antenna: UavAntenna) -> str:
    if antenna.kind is AntennaKind.OMNI:
        return "omni"
    label = f"{antenna.kind.value}-{math.degrees(antenna.beamwidth_rad):g}deg"
    if antenna.serving_lobe_exclusion:
        label += "-excl"
    return label


@dataclass(frozen=True)
class RunSpec:
    deployment: str  # "gs" | "bs"
    engine: str  # "analytic" | "mc"

    @property
    def label(self) -> str:
        return f"{self.deployment}/{self.engine}"


@dataclass(frozen=True)
class GridPoint:
    """One cross-product point with everything both engines need."""

    index: int
    values: tuple  # axis values in axis order, as written in the config
    scenario: Scenario  # dedicated-GS scenario
    terrestrial: DeploymentKind
    threshold_db: float
    gs_label: str
    bs_label: str


def build_point(raw: dict, index: int = 0, values: tuple = ()) -> GridPoint:
    env = _environment(raw)
    uav_height = _num(raw, "scenario.uav_height_m", check=lambda v: v >= 0,
                      invariant="uav_height_m >= 0")
    threshold_db = _num(raw, "scenario.threshold_db")
    net = _network(raw, "network", uav_height)
    bs_net = _network(raw, "terrestrial", uav_height)
    association = _choice(raw, "terrestrial.association", ("nearest", "strongest"))
    scn = Scenario(env, net, _antenna(raw), uav_height, _db(threshold_db))

    gs_tilt = math.degrees(net.sector.tilt_rad)
    gs_label = "gs" if _get(raw, "network.tilt_deg") == "auto" else f"gs(tilt={gs_tilt:g}deg)"
    bs_tilt = math.degrees(bs_net.sector.tilt_rad)
    if _get(raw, "terrestrial.tilt_deg") == "auto":
        bs_label = f"bs(tilt=auto,{association})"
    else:
        bs_label = f"bs(tilt={bs_tilt:g}deg,{association})"
    return GridPoint(index, values, scn, DeploymentKind.terrestrial_bs(bs_net, association),
                     threshold_db, gs_label, bs_label)


# ---------------------------------------------------------------------------
# the full spec


@dataclass
class SweepSpec:
    preset: str  # label written to the ``preset`` column
    raw: dict  # merged config in human units, kept for the output metadata
    scenario_base: Scenario
    axes: list  # [(path, [values...]), ...]
    runs: list  # [RunSpec, ...]
    points: list  # [GridPoint, ...] in row-major axis order
    trial: TrialConfig
    quadrature: QuadratureConfig
    workers: int = 1
    output_path: Optional[str] = None
    output_format: str = "csv"
    timing: bool = False
    warnings: list = field(default_factory=list)

    @property
    def engines(self):
        return sorted({r.engine for r in self.runs}, key=ENGINES.index)


def _parse_axes(raw) -> list:
    axes = _get(raw, "sweep.axes")
    if not isinstance(axes, list):
        raise ConfigError("sweep.axes", "expected a list of {path, values} entries")
    out = []
    for i, axis in enumerate(axes):
        where = f"sweep.axes[{i}]"
        if not isinstance(axis, dict) or set(axis) != {"path", "values"}:
            raise ConfigError(where, "each axis needs exactly the keys 'path' and 'values'")
        path, values = axis["path"], axis["values"]
        section = path.split(".")[0] if isinstance(path, str) else None
        if section not in _SWEEPABLE or path.count(".") != 1:
            raise ConfigError(f"{where}.path", f"cannot sweep {path!r}")
        try:
            _get(DEFAULTS, path)
        except KeyError:
            raise ConfigError(f"{where}.path", f"unknown field {path!r}") from None
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{where}.values", "value list must be non-empty")
        if path in (p for p, _ in out):
            raise ConfigError(f"{where}.path", f"{path!r} is swept twice")
        out.append((path, values))
    if not out:
        raise ConfigError("sweep.axes", "at least one axis is required")
    return out


def _parse_runs(raw) -> list:
    runs = _get(raw, "sweep.runs")
    if not isinstance(runs, list) or not runs:
        raise ConfigError("sweep.runs", "expected a non-empty list such as [gs/analytic, gs/mc]")
    out = []
    for i, item in enumerate(runs):
        where = f"sweep.runs[{i}]"
        parts = str(item).split("/")
        if len(parts) != 2 or parts[0] not in DEPLOYMENTS or parts[1] not in ENGINES:
            raise ConfigError(where, f"expected '<gs|bs>/<analytic|mc>', got {item!r}")
        run = RunSpec(*parts)
        if run == RunSpec("bs", "analytic"):
            raise ConfigError(where, "the analytic engine does not support the terrestrial (bs) deployment")
        if run not in out:
            out.append(run)
    return out


def select_engines(runs: list, engine: str) -> list:
    """Re-target the runs at ``engine`` (analytic | mc | both), keeping deployment order.

    Terrestrial runs have no analytic counterpart and are dropped when only the
    analytic engine is requested.
    """
    engines = {"analytic": ("analytic",), "mc": ("mc",), "both": ENGINES}[engine]
    deployments = list(dict.fromkeys(r.deployment for r in runs))
    out = [RunSpec(d, e) for d in deployments for e in engines
           if not (d == "bs" and e == "analytic")]
    if not out:
        raise ConfigError("sweep.runs", f"no runs left for --engine {engine}")
    return out


def spec_from_dict(user: dict, preset: Optional[str] = None, label: Optional[str] = None,
                   overrides: Optional[dict] = None) -> SweepSpec:
    """Validate a config mapping (optionally layered on a preset) into a SweepSpec."""
    preset = preset or user.get("preset")
    raw = copy.deepcopy(DEFAULTS)
    if preset is not None:
        raw = _merge(raw, preset_dict(preset))
    raw = _merge(raw, user)
    if overrides:
        raw = _merge(raw, overrides)
    raw["preset"] = preset

    axes = _parse_axes(raw)
    runs = _parse_runs(raw)

    points = []
    grid = itertools.product(*(values for _, values in axes))
    for index, values in enumerate(grid):
        point_raw = copy.deepcopy(raw)
        for (path, _), value in zip(axes, values):
            _set(point_raw, path, value)
        try:
            points.append(build_point(point_raw, index, tuple(values)))
        except ConfigError as exc:
            swept = dict(zip((p for p, _ in axes), values))
            if exc.path in swept:
                raise ConfigError(exc.path, f"swept value {swept[exc.path]!r} invalid: "
                                  f"{str(exc).split(': ', 1)[1]}") from None
            raise
        except ValueError as exc:
            raise ConfigError("config", str(exc)) from None

    mc = "montecarlo"
    trial = TrialConfig(
        n_trials=_num(raw, f"{mc}.trials", check=lambda v: v >= 1, invariant="trials >= 1",
                      integer=True),
        sim_radius_m=_num(raw, f"{mc}.sim_radius_m", check=lambda v: v > 0,
                          invariant="sim_radius_m > 0", allow_none=True),
        seed=_num(raw, f"{mc}.seed", check=lambda v: v >= 0, invariant="seed >= 0", integer=True),
        workers=_num(raw, f"{mc}.workers", check=lambda v: v >= 1, invariant="workers >= 1",
                     integer=True),
    )
    qd = "quadrature"
    quad = QuadratureConfig(
        rel_tol=_num(raw, f"{qd}.rel_tol", check=lambda v: v > 0, invariant="rel_tol > 0"),
        abs_tol=_num(raw, f"{qd}.abs_tol", check=lambda v: v > 0, invariant="abs_tol > 0"),
        max_fading_order=_num(raw, f"{qd}.max_fading_order", check=lambda v: v >= 1,
                              invariant="max_fading_order >= 1", integer=True),
    )
    workers = _num(raw, "sweep.workers", check=lambda v: v >= 1, invariant="workers >= 1",
                   integer=True)
    fmt = _choice(raw, "output.format", ("csv", "json"))
    out_path = _get(raw, "output.path")
    if out_path is not None and not isinstance(out_path, str):
        raise ConfigError("output.path", "expected a file path")
    timing = _get(raw, "output.timing")
    if not isinstance(timing, bool):
        raise ConfigError("output.timing", "expected true or false")

    return SweepSpec(
        preset=label or preset or "custom",
        raw=raw,
        scenario_base=points[0].scenario,
        axes=axes,
        runs=runs,
        points=points,
        trial=trial,
        quadrature=quad,
        workers=workers,
        output_path=out_path,
        output_format=fmt,
        timing=timing,
    )


def load_config(path=None, preset: Optional[str] = None, overrides: Optional[dict] = None) -> SweepSpec:
    """Load and validate a sweep config file, optionally layered on a preset.

    With ``path=None`` the preset alone defines the sweep.
    """
    if path is None and preset is None:
        raise ConfigError("config", "need a config file or a preset")
    user = {}
    label = None
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"file not found: {path}")
        user = _read_yaml(path, str(path))
        label = user.get("preset") or preset or path.stem
    return spec_from_dict(user, preset=preset, label=label, overrides=overrides)
