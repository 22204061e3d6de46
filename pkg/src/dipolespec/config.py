"""Experiment configuration: JSON parsing, presets, and resolution.

All external I/O is in nm and Gamma_inf units; conversion to internal units
(reduced wavelengths) happens here, once, against the configured transition.
``resolve`` materializes every derived quantity (fitted detuning, achieved
permittivity, distance grids) so the run's sidecar states exactly what was
computed.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .angular import TransitionScheme
from .cloud import DEFAULT_R_MIN
from .geometry import Box, CombPCW, Cylinder, Geometry, Slab
from .medium import REFRACTIVE_INDEX_PRESETS, MediumModel, fit_detuning, permittivity

__all__ = ["ConfigError", "ExperimentConfig", "SCHEME_PRESETS", "PRESETS",
           "load_config", "preset_config"]


class ConfigError(ValueError):
    pass


SCHEME_PRESETS = {
    # closed D2-line transitions; wavelengths in nm, linewidths in 2pi MHz
    "rb87-tripod": dict(F_excited=0, F_ground=1, lambda0=780.241, gamma_inf=6.0666),
    "rb87-f3f2": dict(F_excited=3, F_ground=2, lambda0=780.241, gamma_inf=6.0666),
    "cs133-f5f4": dict(F_excited=5, F_ground=4, lambda0=852.347, gamma_inf=5.234),
    "v-type": dict(F_excited=1, F_ground=0, lambda0=780.241, gamma_inf=6.0666),
}


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _scheme_from_block(block) -> TransitionScheme:
    if isinstance(block, str):
        _require(block in SCHEME_PRESETS, f"unknown scheme preset {block!r}")
        d = dict(SCHEME_PRESETS[block])
        return TransitionScheme(label=block, **d)
    _require(isinstance(block, dict), "scheme must be a preset name or a dict")
    try:
        return TransitionScheme(
            F_excited=block["F_excited"], F_ground=block["F_ground"],
            lambda0=block["lambda0_nm"], gamma_inf=block.get("gamma_inf", 1.0),
            label=block.get("label", "custom"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad scheme block: {exc}") from exc


def _geometry_from_block(block: dict, lam_bar: float) -> Geometry:
    _require(isinstance(block, dict) and "kind" in block, "geometry block needs a 'kind'")
    kind = block["kind"]
    n = lambda key, default=None: (  # nm -> internal
        block[key] / lam_bar if key in block else default)
    try:
        if kind == "cylinder":
            length = n("length_nm")
            if length is None:
                _require("length_lambda0" in block, "cylinder needs length_nm or length_lambda0")
                length = block["length_lambda0"] * 2.0 * np.pi
            return Cylinder(radius=n("radius_nm"), length=length)
        if kind == "comb":
            period = n("period_nm")
            _require(period is not None, "comb needs period_nm")
            return CombPCW(
                period=period,
                tooth_height=n("tooth_height_nm", block.get("tooth_height_ratio", 1.5) * period),
                tooth_width=n("tooth_width_nm", block.get("tooth_width_ratio", 0.5) * period),
                backbone_width=n("backbone_width_nm", block.get("backbone_width_ratio", 1.0) * period),
                backbone_thickness=n("backbone_thickness_nm",
                                     block.get("backbone_thickness_ratio", 1.5) * period),
                n_periods=int(block.get("n_periods", 7)))
        if kind == "box":
            return Box(lo=tuple(np.asarray(block["lo_nm"], float) / lam_bar),
                       hi=tuple(np.asarray(block["hi_nm"], float) / lam_bar))
        if kind == "slab":
            return Slab(thickness=n("thickness_nm"),
                        extent_x=n("extent_x_nm"), extent_y=n("extent_y_nm"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad geometry block: {exc}") from exc
    raise ConfigError(f"unknown geometry kind {kind!r}")


def _distances_nm(sweep: dict) -> np.ndarray:
    if "distances_nm" in sweep:
        d = np.asarray(sweep["distances_nm"], dtype=float)
        _require(d.ndim == 1 and len(d) >= 1, "distances_nm must be a non-empty list")
        _require(np.all(np.diff(d) >= 0), "distances_nm must be sorted ascending")
        return d
    for key in ("start_nm", "stop_nm", "points"):
        _require(key in sweep, f"sweep needs distances_nm or start_nm/stop_nm/points ({key} missing)")
    n = int(sweep["points"])
    _require(n >= 1, "sweep points must be >= 1")
    if sweep.get("spacing", "geometric") == "geometric":
        return np.geomspace(sweep["start_nm"], sweep["stop_nm"], n)
    return np.linspace(sweep["start_nm"], sweep["stop_nm"], n)


@dataclass
class ExperimentConfig:
    """Parsed and resolved experiment description."""

    raw: dict
    scheme: TransitionScheme
    geometry: Geometry
    model: MediumModel
    placement_mode: str
    seed: int
    realizations: int
    r_min: float
    atom_placement: str
    distances_nm: np.ndarray
    cluster_tol: float
    include_medium_linewidth: bool
    min_clearance_nm: float
    memory_budget_bytes: int
    vdw_enabled: bool
    vdw_quad_tol: float
    out_dir: str = "out"

    @property
    def distances_internal(self) -> np.ndarray:
        return self.distances_nm / self.scheme.lambda_bar_nm

    @property
    def min_clearance_internal(self) -> float:
        return self.min_clearance_nm / self.scheme.lambda_bar_nm

    def resolved_dict(self) -> dict:
        """Fully materialized config for the run sidecar."""
        eps0 = permittivity(self.model, 0.0)
        d = copy.deepcopy(self.raw)
        d["resolved"] = {
            "scheme_label": self.scheme.label,
            "lambda_bar_nm": self.scheme.lambda_bar_nm,
            "n0": self.model.n0,
            "delta_M_over_gamma_inf": self.model.delta_M,
            "gamma_e_over_gamma_inf": self.model.gamma_e,
            "f0_sq": self.model.f0_sq,
            "eps_at_omega0": [eps0.real, eps0.imag],
            "target_eps": self.model.target_eps,
            "placement": self.placement_mode,
            "seed": self.seed,
            "realizations": self.realizations,
            "r_min": self.r_min,
            "atom_placement": self.atom_placement,
            "distances_nm": [float(x) for x in self.distances_nm],
            "cluster_tol": self.cluster_tol,
            "include_medium_linewidth": self.include_medium_linewidth,
            "min_clearance_nm": self.min_clearance_nm,
            "memory_budget_bytes": self.memory_budget_bytes,
            "vdw_enabled": self.vdw_enabled,
            "vdw_quad_tol": self.vdw_quad_tol,
        }
        return d


def parse_config(data: dict) -> ExperimentConfig:
    _require(isinstance(data, dict), "config must be a JSON object")
    scheme = _scheme_from_block(data.get("scheme", "rb87-tripod"))
    lam_bar = scheme.lambda_bar_nm

    med = data.get("medium")
    _require(isinstance(med, dict), "config needs a medium block")
    n0 = med.get("density")
    _require(isinstance(n0, (int, float)) and n0 > 0, "medium.density must be positive")
    gamma_e = float(med.get("gamma_e", 1.0))
    given = [k for k in ("target_eps", "delta_m", "index_preset") if k in med]
    _require(len(given) == 1,
             "medium must give exactly one of target_eps / delta_m / index_preset")
    if "index_preset" in med:
        name = med["index_preset"]
        _require(name in REFRACTIVE_INDEX_PRESETS, f"unknown index preset {name!r}")
        target_eps = REFRACTIVE_INDEX_PRESETS[name] ** 2
        model = MediumModel.calibrated(float(n0), target_eps, gamma_e)
    elif "target_eps" in med:
        target_eps = float(med["target_eps"])
        _require(target_eps > 1.0, "target_eps must exceed 1")
        model = MediumModel.calibrated(float(n0), target_eps, gamma_e)
    else:
        try:
            model = MediumModel(n0=float(n0), delta_M=float(med["delta_m"]), gamma_e=gamma_e)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    geometry = _geometry_from_block(data.get("geometry", {}), lam_bar)

    pl = data.get("placement", {})
    mode = pl.get("mode", "ordered")
    _require(mode in ("ordered", "disordered"), "placement.mode must be ordered|disordered")
    realizations = int(pl.get("realizations", 1))
    _require(realizations >= 1, "placement.realizations must be >= 1")

    sweep = data.get("sweep", {})
    distances_nm = _distances_nm(sweep)
    atom_placement = sweep.get("atom_placement", "radial")

    solver = data.get("solver", {})
    cluster_tol = float(solver.get("cluster_tol",
                                   1e-3 if mode == "ordered" else 1e-2))
    _require(cluster_tol > 0, "solver.cluster_tol must be positive")
    budget_gb = float(solver.get("memory_budget_gb", 8.0))

    vdw_block = data.get("vdw", {})

    return ExperimentConfig(
        raw=data,
        scheme=scheme,
        geometry=geometry,
        model=model,
        placement_mode=mode,
        seed=int(pl.get("seed", 0)),
        realizations=realizations,
        r_min=float(pl.get("r_min", DEFAULT_R_MIN)),
        atom_placement=atom_placement,
        distances_nm=distances_nm,
        cluster_tol=cluster_tol,
        include_medium_linewidth=bool(solver.get("include_medium_linewidth", False)),
        min_clearance_nm=float(solver.get("min_clearance_nm", 100.0)),
        memory_budget_bytes=int(budget_gb * 2**30),
        vdw_enabled=bool(vdw_block.get("enabled", False)),
        vdw_quad_tol=float(vdw_block.get("quad_tol", 1e-6)),
        out_dir=data.get("output", {}).get("dir", "out"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def _fig2_distances() -> list:
    close = np.linspace(250.0, 800.0, 34)
    far = np.array([1000.0, 1200.0, 1600.0, 2000.0])
    return [float(x) for x in np.concatenate([close, far])]


# Desk-scale presets run in minutes on a laptop; *-paper presets reproduce the
# production-scale geometry and are flagged long-running in the CLI help.
PRESETS: dict[str, dict] = {
    "fig2-desk": {
        "scheme": "rb87-tripod",
        "geometry": {"kind": "cylinder", "radius_nm": 200.0, "length_lambda0": 2.0},
        "medium": {"density": 10.0, "gamma_e": 1.0, "index_preset": "silica"},
        "placement": {"mode": "ordered", "seed": 1},
        "sweep": {"distances_nm": _fig2_distances(), "atom_placement": "radial"},
        "solver": {"cluster_tol": 1e-3, "min_clearance_nm": 40.0},
        "vdw": {"enabled": True, "quad_tol": 1e-6},
    },
    "fig2-paper": {
        "scheme": "rb87-tripod",
        "geometry": {"kind": "cylinder", "radius_nm": 200.0, "length_lambda0": 4.0},
        "medium": {"density": 20.0, "gamma_e": 1.0, "index_preset": "silica"},
        "placement": {"mode": "ordered", "seed": 1},
        "sweep": {"distances_nm": _fig2_distances(), "atom_placement": "radial"},
        "solver": {"cluster_tol": 1e-3, "min_clearance_nm": 40.0},
        "vdw": {"enabled": True, "quad_tol": 1e-6},
    },
    "fig3-desk": {
        "scheme": "cs133-f5f4",
        "geometry": {"kind": "cylinder", "radius_nm": 200.0, "length_lambda0": 4.0},
        "medium": {"density": 20.0, "gamma_e": 1.0, "index_preset": "silica"},
        "placement": {"mode": "ordered", "seed": 1},
        "sweep": {"distances_nm": [300.0, 305.0, 310.0, 315.0, 320.0],
                  "atom_placement": "radial"},
        "solver": {"cluster_tol": 5e-3, "min_clearance_nm": 50.0,
                   "memory_budget_gb": 16.0},
    },
    "fig5-desk": {
        "scheme": "cs133-f5f4",
        "geometry": {"kind": "comb", "period_nm": 393.0, "n_periods": 7,
                     "tooth_height_ratio": 1.5, "tooth_width_ratio": 0.5,
                     "backbone_width_ratio": 0.6, "backbone_thickness_ratio": 0.8},
        "medium": {"density": 10.0, "gamma_e": 1.0, "index_preset": "ingap"},
        "placement": {"mode": "ordered", "seed": 1},
        "sweep": {"distances_nm": [150.0, 200.0, 250.0, 300.0, 350.0, 400.0],
                  "atom_placement": "behind_tooth"},
        "solver": {"cluster_tol": 5e-3, "min_clearance_nm": 100.0,
                   "memory_budget_gb": 16.0},
    },
    "fig7-desk": {
        "scheme": "rb87-f3f2",
        "geometry": {"kind": "comb", "period_nm": 360.0, "n_periods": 7,
                     "tooth_height_ratio": 1.5, "tooth_width_ratio": 0.5,
                     "backbone_width_ratio": 0.6, "backbone_thickness_ratio": 0.8},
        "medium": {"density": 10.0, "gamma_e": 1.0, "index_preset": "ingap"},
        "placement": {"mode": "ordered", "seed": 1},
        "sweep": {"distances_nm": [150.0, 200.0, 250.0, 300.0, 350.0, 400.0],
                  "atom_placement": "behind_tooth"},
        "solver": {"cluster_tol": 5e-3, "min_clearance_nm": 100.0,
                   "memory_budget_gb": 16.0},
    },
    "fig11-desk": {
        "scheme": "rb87-tripod",
        "geometry": {"kind": "cylinder", "radius_nm": 200.0, "length_lambda0": 2.0},
        "medium": {"density": 10.0, "gamma_e": 1.0, "index_preset": "silica"},
        # r_min keeps near-field pair resonances away from the medium detuning
        "placement": {"mode": "disordered", "seed": 11, "realizations": 8, "r_min": 0.3},
        "sweep": {"start_nm": 250.0, "stop_nm": 800.0, "points": 12,
                  "spacing": "geometric", "atom_placement": "radial"},
        "solver": {"cluster_tol": 1e-2, "min_clearance_nm": 40.0},
    },
    "fig10-fit": {
        "scheme": "rb87-tripod",
        "geometry": {"kind": "cylinder", "radius_nm": 200.0, "length_lambda0": 2.0},
        "medium": {"density": 20.0, "gamma_e": 1.0, "index_preset": "silica"},
        "placement": {"mode": "ordered", "seed": 1},
        "sweep": {"distances_nm": [400.0], "atom_placement": "radial"},
    },
}

LONG_RUNNING_PRESETS = {"fig2-paper"}


def preset_config(name: str) -> ExperimentConfig:
    _require(name in PRESETS, f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return parse_config(copy.deepcopy(PRESETS[name]))
