"""Serialization: JSON with fixed float formatting, CSV, and legacy VTK.

Every float is written with 17 significant digits so values round-trip
exactly and repeated runs produce identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = FLOAT_FMT % x
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and 17-digit floats; NaN and inf become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating, bool)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path


def write_csv(path, grid) -> Path:
    """One row per lattice point: y1,y2,y3,phihat_norm2,energy,quality (y3 fastest)."""
    path = Path(path)
    lat = grid.lattice
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y1", "y2", "y3", "phihat_norm2", "energy", "quality"])
        for (i, j, t), (a, b, c) in lat.points():
            w.writerow([FLOAT_FMT % a, FLOAT_FMT % b, FLOAT_FMT % c,
                        FLOAT_FMT % grid.phihat_norm2[i, j, t],
                        FLOAT_FMT % grid.energy[i, j, t], int(grid.quality[i, j, t])])
    return path


VTK_HEADER = """# vtk DataFile Version 3.0
{title}
ASCII
DATASET STRUCTURED_POINTS
DIMENSIONS {n1} {n2} {n3}
ORIGIN {o1} {o2} {o3}
SPACING {h1} {h2} {h3}
POINT_DATA {npts}
"""


def _vtk_scalars(name: str, values: np.ndarray) -> str:
    # VTK orders points with the first axis fastest
    flat = np.nan_to_num(values, nan=0.0).transpose(2, 1, 0).ravel()
    lines = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    for start in range(0, flat.size, 6):
        lines.append(" ".join(FLOAT_FMT % v for v in flat[start:start + 6]))
    return "\n".join(lines) + "\n"


def write_vtk(path, grid, title: str = "monochain energy density") -> Path:
    """Legacy ASCII STRUCTURED_POINTS with point scalars ``energy`` and ``phihat_norm2``.

    Energy is undefined on the lattice boundary and written there as 0.
    """
    path = Path(path)
    lat = grid.lattice
    n1, n2, n3 = lat.shape
    h1, h2, h3 = lat.spacing
    head = VTK_HEADER.format(title=title.replace("\n", " ")[:255], n1=n1, n2=n2, n3=n3,
                             o1=FLOAT_FMT % lat.y1[0], o2=FLOAT_FMT % lat.y2[0],
                             o3=FLOAT_FMT % lat.y3[0], h1=FLOAT_FMT % h1, h2=FLOAT_FMT % h2,
                             h3=FLOAT_FMT % h3, npts=n1 * n2 * n3)
    with open(path, "w") as fh:
        fh.write(head)
        fh.write(_vtk_scalars("energy", grid.energy))
        fh.write(_vtk_scalars("phihat_norm2", grid.phihat_norm2))
    return path


def grid_summary(grid, periodicity: float | None = None) -> dict:
    """Extrema, energy maxima per y3-period and periodicity residual of a scan."""
    from .nahm import maxima_summary

    lat = grid.lattice
    out = {"shape": list(lat.shape), "lattice": lat.to_dict()}
    for name, arr in (("energy", grid.energy), ("phihat_norm2", grid.phihat_norm2)):
        if np.all(np.isnan(arr)):
            out[name] = None
            continue
        imax = np.unravel_index(np.nanargmax(arr), arr.shape)
        imin = np.unravel_index(np.nanargmin(arr), arr.shape)
        loc = lambda ix: [float(lat.y1[ix[0]]), float(lat.y2[ix[1]]), float(lat.y3[ix[2]])]
        out[name] = {"max": float(arr[imax]), "argmax": loc(imax),
                     "min": float(arr[imin]), "argmin": loc(imin)}
    out["maxima"] = maxima_summary(grid) if not np.all(np.isnan(grid.energy)) else None
    out["periodicity_residual"] = periodicity
    out["quality_counts"] = {str(q): int(np.sum(grid.quality == q)) for q in (0, 1, 2)}
    return out
