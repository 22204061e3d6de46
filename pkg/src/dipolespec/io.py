"""CSV and sidecar writers.

CSV bytes are a pure function of the results: fixed column order, fixed
float formatting, no timestamps.  Every CSV starts with comment lines
carrying the package version and the hash of the resolved configuration;
wall-clock data lives only in the JSON sidecar.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["config_hash", "format_float", "write_scan_csv", "write_vdw_csv",
           "write_converge_csv", "write_fit_csv", "write_sidecar"]

SCAN_COLUMNS = ["distance_nm", "label", "multiplicity", "gamma_over_gamma_inf",
                "delta_over_gamma_inf", "stderr_gamma", "stderr_delta",
                "n_realizations"]
VDW_COLUMNS = ["distance_nm", "vdw_shift_over_gamma_inf", "quad_error_estimate"]
FIT_COLUMNS = ["omega_over_gamma_inf", "re_eps", "im_eps"]


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def format_float(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.12g}"


def _header_lines(resolved: dict, kind: str) -> list[str]:
    return [
        f"# dipolespec {__version__} {kind}",
        f"# config-hash: {config_hash(resolved)}",
    ]


def _write(path, lines: list[str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def write_scan_csv(path, scan_result, scheme, resolved: dict,
                   vdw_rows: dict | None = None) -> None:
    """One row per (distance, cluster); optional parallel vdW column."""
    cols = list(SCAN_COLUMNS)
    if vdw_rows is not None:
        cols += ["vdw_shift_over_gamma_inf", "vdw_quad_error"]
    lines = _header_lines(resolved, "scan") + [",".join(cols)]
    for point in scan_result.points:
        d_nm = point.distance * scheme.lambda_bar_nm
        for cl in point.clusters:
            row = [
                format_float(d_nm),
                "" if cl.label is None else str(cl.label),
                str(cl.multiplicity),
                format_float(cl.gamma),
                format_float(cl.delta),
                format_float(cl.stderr_gamma),
                format_float(cl.stderr_delta),
                str(point.n_realizations),
            ]
            if vdw_rows is not None:
                shift, err = vdw_rows[round(float(d_nm), 9)]
                row += [format_float(shift), format_float(err)]
            lines.append(",".join(row))
    _write(path, lines)


def write_vdw_csv(path, rows, resolved: dict) -> None:
    lines = _header_lines(resolved, "vdw") + [",".join(VDW_COLUMNS)]
    for d_nm, shift, err in rows:
        lines.append(",".join([format_float(d_nm), format_float(shift), format_float(err)]))
    _write(path, lines)


def write_fit_csv(path, omegas, eps, resolved: dict) -> None:
    lines = _header_lines(resolved, "fit") + [",".join(FIT_COLUMNS)]
    for om, e in zip(omegas, eps):
        lines.append(",".join([format_float(om), format_float(e.real), format_float(e.imag)]))
    _write(path, lines)


def write_converge_csv(path, distances_nm, curves: dict[str, np.ndarray],
                       errors: dict[str, np.ndarray], resolved: dict) -> None:
    """Aligned mean-decay-rate curves, one pair of columns per density."""
    keys = sorted(curves, key=float)
    cols = ["distance_nm"]
    for k in keys:
        cols += [f"gamma_mean_n0_{k}", f"stderr_n0_{k}"]
    lines = _header_lines(resolved, "converge") + [",".join(cols)]
    for i, d in enumerate(distances_nm):
        row = [format_float(d)]
        for k in keys:
            row += [format_float(curves[k][i]), format_float(errors[k][i])]
        lines.append(",".join(row))
    _write(path, lines)


def write_sidecar(path, resolved: dict, extras: dict) -> None:
    payload = dict(resolved)
    payload["run"] = extras
    payload["version"] = __version__
    payload["config_hash"] = config_hash(resolved)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
