"""Report, table and mesh writers.  Every float is written with 17 significant
digits, which round-trips IEEE doubles exactly."""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calculus import DisplacementField
from .errors import ConfigError
from .grid import Field, ParamDomain
from .strain import COMPONENTS, StrainField
from .surface import FrameField


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


_FLOAT_TOKEN = re.compile(r'"@@float:([^"@]*)@@"')


def _mark_floats(obj):
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return f"@@float:{fmt(obj)}@@"
    if isinstance(obj, np.ndarray):
        return _mark_floats(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _mark_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_mark_floats(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json_number(token: str) -> str:
    return {"nan": "NaN", "inf": "Infinity", "-inf": "-Infinity"}.get(token, token)


def dumps_json(obj) -> str:
    text = json.dumps(_mark_floats(obj), indent=2, sort_keys=False)
    return _FLOAT_TOKEN.sub(lambda m: _json_number(m.group(1)), text) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj), encoding="utf-8")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _grid_rows(domain: ParamDomain, columns: Sequence[np.ndarray]):
    alpha, beta = domain.mesh()
    cols = [alpha.ravel(), beta.ravel()] + [np.broadcast_to(c, domain.shape).ravel() for c in columns]
    for vals in zip(*cols):
        yield [float(v) for v in vals]


FRAME_COLUMNS = ("alpha", "beta", "x", "y", "z", "A1", "A2", "kappa1", "kappa2", "H", "K")


def write_frame_csv(path, field: FrameField) -> Path:
    """One row per node: alpha, beta, r, A1, A2, kappa1, kappa2, H, K (row-major, alpha outer)."""
    r = field.r.values
    cols = [r[..., 0], r[..., 1], r[..., 2]] + [getattr(field, n).values for n in
                                                ("A1", "A2", "kappa1", "kappa2", "H", "K")]
    return write_csv(path, FRAME_COLUMNS, _grid_rows(field.domain, cols))


def write_displacement_csv(path, disp: DisplacementField) -> Path:
    vals = disp.grid_values()
    return write_csv(path, ("alpha", "beta", "v1", "v2", "vn"),
                     _grid_rows(disp.domain, [vals[..., 0], vals[..., 1], vals[..., 2]]))


def write_strain_csv(path, strains: StrainField) -> Path:
    arr = strains.as_arrays()
    return write_csv(path, ("alpha", "beta") + COMPONENTS,
                     _grid_rows(strains.domain, [arr[n] for n in COMPONENTS]))


def write_scalar_csv(path, domain: ParamDomain, name: str, values) -> Path:
    return write_csv(path, ("alpha", "beta", name), _grid_rows(domain, [np.asarray(values)]))


def load_displacement_csv(path, domain: ParamDomain) -> DisplacementField:
    """Displacement grid written by :func:`write_displacement_csv` on the same domain."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read displacement grid {path}: {exc}") from exc
    header, body = rows[0], rows[1:]
    want = ["alpha", "beta", "v1", "v2", "vn"]
    if header != want:
        raise ConfigError(f"{path}: expected columns {want}, got {header}")
    if len(body) != domain.n_alpha * domain.n_beta:
        raise ConfigError(f"{path}: {len(body)} rows do not match a {domain.shape} grid")
    data = np.array([[float(v) for v in row] for row in body]).reshape(domain.shape + (5,))
    alpha, beta = domain.mesh()
    if not (np.allclose(data[..., 0], alpha, rtol=0, atol=1e-12)
            and np.allclose(data[..., 1], beta, rtol=0, atol=1e-12)):
        raise ConfigError(f"{path}: node coordinates do not match the configured domain")
    return DisplacementField.from_components(*(Field(domain, data[..., k]) for k in (2, 3, 4)))


def write_obj(path, field: FrameField) -> Path:
    """Quad mesh of the node positions.

    Periodic directions wrap around; pole rows keep one vertex per node, so
    quads touching a pole collapse to triangles fanning into a point.
    """
    d = field.domain
    na, nb = d.shape
    idx = np.arange(na * nb).reshape(na, nb) + 1
    ia = np.arange(na if d.periodic_alpha else na - 1)
    ib = np.arange(nb if d.periodic_beta else nb - 1)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {na} x {nb} grid\n")
        for p in field.r.values.reshape(-1, 3):
            fh.write("v %s %s %s\n" % (fmt(p[0]), fmt(p[1]), fmt(p[2])))
        for i in ia:
            i2 = (i + 1) % na
            for j in ib:
                j2 = (j + 1) % nb
                fh.write(f"f {idx[i, j]} {idx[i2, j]} {idx[i2, j2]} {idx[i, j2]}\n")
    return path


def read_obj_counts(path) -> tuple[int, int]:
    nv = nf = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("v "):
                nv += 1
            elif line.startswith("f "):
                nf += 1
    return nv, nf
