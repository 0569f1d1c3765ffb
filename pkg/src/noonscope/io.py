"""
File formats.

CSV files start with ``# key=value`` metadata lines, then one header row of
column names, then data rows. Reals are written with 10 significant digits.
2D images go to 16-bit binary PGM (P5, big-endian) after linear min-max
scaling; the scaling is recorded in the PGM comment line.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .interference import InterferenceModel, PhotonBudget
from .optics import BeamGeometry, MaterialModel
from .scan import ScanConfig, ScanRecord

SCAN_FORMAT = "noonscope-scan"
SCAN_VERSION = 1


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.10g}"
    return str(value)


def write_csv(path, columns: dict, metadata: dict | None = None) -> Path:
    """Write equal-length ``columns`` (name -> sequence) with a metadata header."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    lines = [f"# {k}={fmt(v)}" for k, v in (metadata or {}).items()]
    lines.append(",".join(names))
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[dict, dict]:
    """Return (metadata, columns) with columns as float arrays."""
    path = Path(path)
    meta, header, rows = {}, None, []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if header is not None:
                    raise SchemaError(f"{path}:{lineno}: metadata line after the column header")
                key, sep, value = line[1:].strip().partition("=")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = [h.strip() for h in line.split(",")]
                continue
            fields = line.split(",")
            if len(fields) != len(header):
                raise SchemaError(
                    f"{path}:{lineno}: row has {len(fields)} fields, expected {len(header)} ({','.join(header)})"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                bad = next(h for h, f in zip(header, fields) if not _is_float(f))
                raise SchemaError(f"{path}:{lineno}: column '{bad}' is not numeric") from None
    if header is None:
        raise SchemaError(f"{path}: no column header found")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return meta, {h: data[:, i] for i, h in enumerate(header)}


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------- scan records


def config_metadata(config: ScanConfig, material: MaterialModel | None = None) -> dict:
    m, g, b = config.model, config.geometry, config.budget
    meta = {
        "seed": int(config.rng_seed),
        "model.n_photons": m.n_photons,
        "model.visibility": m.visibility,
        "model.bias_phase": m.bias_phase,
        "geometry.sigma_um": g.sigma,
        "geometry.separation_um": g.separation,
        "budget.k": b.k,
        "budget.total_photons": b.total_photons,
        "axis": config.axis,
        "stride": config.stride,
    }
    if material is not None:
        meta.update({
            "material.refractive_index": material.refractive_index,
            "material.wavelength_nm": material.wavelength_nm,
            "material.passes": material.passes,
        })
    return meta


def write_scan_csv(path, record: ScanRecord, extra: dict | None = None,
                   material: MaterialModel | None = None) -> Path:
    meta = {"format": SCAN_FORMAT, "version": SCAN_VERSION, "dims": 2 if record.is_2d else 1}
    meta.update(extra or {})
    meta.update(config_metadata(record.config, material))
    if record.is_2d:
        meta["shape"] = f"{record.shape[0]}x{record.shape[1]}"
        cols = {"x": record.positions[:, 0], "y": record.positions[:, 1]}
    else:
        cols = {"x": record.positions}
    cols.update({
        "expected_p": record.expected_probability,
        "expected_counts": record.expected_counts,
        "sampled_counts": record.sampled_counts,
    })
    return write_csv(path, cols, meta)


_REQUIRED_META = ("model.n_photons", "model.visibility", "model.bias_phase",
                  "geometry.sigma_um", "geometry.separation_um", "budget.k")


def _meta_float(meta, key, path):
    if key not in meta:
        raise SchemaError(f"{path}: missing metadata '{key}'")
    try:
        return float(meta[key])
    except ValueError:
        raise SchemaError(f"{path}: metadata '{key}' is not numeric: {meta[key]!r}") from None


def read_scan_csv(path) -> tuple[ScanRecord, MaterialModel | None, dict]:
    """Load a scan CSV back into a ScanRecord (plus material and raw metadata)."""
    meta, cols = read_csv(path)
    if meta.get("format", SCAN_FORMAT) != SCAN_FORMAT:
        raise SchemaError(f"{path}: unexpected format '{meta['format']}'")
    if "version" in meta and int(float(meta["version"])) > SCAN_VERSION:
        raise SchemaError(f"{path}: unsupported version {meta['version']}")
    dims = int(_meta_float(meta, "dims", path)) if "dims" in meta else (2 if "y" in cols else 1)
    required = ["x"] + (["y"] if dims == 2 else []) + ["sampled_counts"]
    for name in required:
        if name not in cols:
            raise SchemaError(f"{path}: missing column '{name}'")
    n = len(cols["x"])
    if n == 0:
        raise SchemaError(f"{path}: no data rows")
    counts = cols["sampled_counts"]
    bad = np.flatnonzero((counts < 0) | (counts != np.round(counts)))
    if bad.size:
        raise SchemaError(f"{path}: column 'sampled_counts' row {int(bad[0]) + 1} is not a nonnegative integer")

    vals = {k: _meta_float(meta, k, path) for k in _REQUIRED_META}
    try:
        model = InterferenceModel(int(vals["model.n_photons"]), vals["model.visibility"],
                                  vals["model.bias_phase"])
        geometry = BeamGeometry(vals["geometry.sigma_um"], vals["geometry.separation_um"])
        budget = PhotonBudget(vals["budget.k"], model.n_photons)
    except ValueError as exc:
        raise SchemaError(f"{path}: invalid metadata: {exc}") from None
    seed = int(meta.get("seed", 0))
    pos = cols["x"] if dims == 1 else np.column_stack([cols["x"], cols["y"]])
    config = ScanConfig(model, geometry, budget, pos if dims == 1 else None, seed,
                        meta.get("axis", "x"))
    p = cols.get("expected_p", np.full(n, np.nan))
    mu = cols.get("expected_counts", budget.k * p)
    shape = None
    if dims == 2 and "shape" in meta:
        r, c = (int(v) for v in meta["shape"].split("x"))
        shape = (r, c)
    material = None
    if "material.refractive_index" in meta:
        material = MaterialModel(float(meta["material.refractive_index"]),
                                 float(meta["material.wavelength_nm"]),
                                 int(float(meta.get("material.passes", 1))))
    record = ScanRecord(pos, p, mu, counts.astype(np.int64), config, shape)
    return record, material, meta


# ---------------------------------------------------------------- PGM


def write_pgm(path, image: np.ndarray, comment: str = "") -> Path:
    """Linear min-max scale to 0..65535 and write binary 16-bit PGM."""
    img = np.asarray(image, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    span = hi - lo
    scaled = np.zeros_like(img) if span == 0 else (img - lo) / span * 65535.0
    data = np.round(scaled).astype(">u2")
    rows, cols = img.shape
    note = f"# linear min-max scaling: 0 -> {fmt(lo)}, 65535 -> {fmt(hi)}"
    if comment:
        note += f"; {comment}"
    header = f"P5\n{note}\n{cols} {rows}\n65535\n".encode("ascii")
    path = Path(path)
    path.write_bytes(header + data.tobytes())
    return path


def read_pgm(path) -> tuple[np.ndarray, str]:
    """Read a 16-bit P5 PGM written by ``write_pgm``; returns raw levels and comment."""
    raw = Path(path).read_bytes()
    tokens, comments, pos = [], [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            end = raw.index(b"\n", pos)
            comments.append(raw[pos + 1:end].decode("ascii").strip())
            pos = end + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end].decode("ascii"))
        pos = end
    pos += 1  # single whitespace after maxval
    if tokens[0] != "P5":
        raise SchemaError(f"{path}: not a binary PGM")
    cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    img = np.frombuffer(raw[pos:], dtype=dtype, count=rows * cols).reshape(rows, cols)
    return img.astype(np.int64), "\n".join(comments)
