"""Binary grid formats and CSV exports.

Three binary envelopes share one layout: a 16-byte magic header, u32 grid
size, f64 spacing, payload arrays, then a u32-length-prefixed UTF-8 JSON
metadata trailer. All integers and floats are little-endian.

  SFGrid v1   scalar field     payload n*n f64 values, row-major
  DFGrid v1   distance field   payload n*n f64 dist then n*n i64 parent
  RMask  v1   region mask      payload ceil(n*n/8) packed bits, row-major

CSV exports: boundary cycles (index,x,y,arc_label), confluence reports
(t,s,n_hit_points,coalescence_radius,winding_spread,seed), geodesic
polylines (path,point,x,y), and the append-only probe results ledger
(probe,params,estimate,std_error,n,seed_range).
"""

import csv
import json
import struct

import numpy as np

from .ball import BoundaryCycle, RegionMask
from .errors import InvalidSpec
from .field import ScalarField
from .metric import DistanceField

MAGIC_FIELD = b"SFGrid v1\x00\x00\x00\x00\x00\x00\x00"
MAGIC_DIST = b"DFGrid v1\x00\x00\x00\x00\x00\x00\x00"
MAGIC_MASK = b"RMask v1\x00\x00\x00\x00\x00\x00\x00\x00"

LEDGER_COLUMNS = ("probe", "params", "estimate", "std_error", "n",
                  "seed_range")
CONFLUENCE_COLUMNS = ("t", "s", "n_hit_points", "coalescence_radius",
                      "winding_spread", "seed")


def _write_envelope(fh, magic, n, spacing, payloads, meta):
    fh.write(magic)
    fh.write(struct.pack("<I", n))
    fh.write(struct.pack("<d", spacing))
    for arr in payloads:
        fh.write(arr.tobytes(order="C"))
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    fh.write(struct.pack("<I", len(blob)))
    fh.write(blob)


def _read_exact(fh, count, what):
    data = fh.read(count)
    if len(data) != count:
        raise InvalidSpec(f"truncated file: expected {count} bytes of {what}")
    return data


def _read_envelope(fh, magic, payload_dtypes):
    got = fh.read(len(magic))
    if got != magic:
        raise InvalidSpec(
            f"bad magic {got[:12]!r}, expected {magic[:12]!r}")
    n = struct.unpack("<I", _read_exact(fh, 4, "grid size"))[0]
    spacing = struct.unpack("<d", _read_exact(fh, 8, "spacing"))[0]
    payloads = []
    for dtype, count in payload_dtypes(n):
        raw = _read_exact(fh, count * dtype.itemsize, str(dtype))
        payloads.append(np.frombuffer(raw, dtype=dtype))
    size = struct.unpack("<I", _read_exact(fh, 4, "trailer length"))[0]
    try:
        meta = json.loads(_read_exact(fh, size, "trailer").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InvalidSpec(f"bad metadata trailer: {e}") from None
    return n, spacing, payloads, meta


def write_field(path, field_, extra_meta=None):
    """Write a scalar field as SFGrid v1."""
    meta = {
        "normalization": field_.normalization,
        **{k: v for k, v in field_.meta.items()},
        **(extra_meta or {}),
    }
    with open(path, "wb") as fh:
        _write_envelope(fh, MAGIC_FIELD, field_.n, field_.spacing,
                        [field_.values.astype("<f8")], meta)


def read_field(path):
    with open(path, "rb") as fh:
        n, spacing, (vals,), meta = _read_envelope(
            fh, MAGIC_FIELD, lambda n: [(np.dtype("<f8"), n * n)])
    normalization = meta.pop("normalization", {})
    return ScalarField(n, spacing, vals.reshape(n, n).copy(),
                       normalization, meta)


def write_distance_field(path, df, extra_meta=None):
    """Write a distance field as DFGrid v1 (dist f64, parent i64, -1 roots).

    Infinite distances are stored as IEEE +inf and survive the round trip."""
    src = df.source
    meta = {
        "source": list(src) if isinstance(src, tuple) and len(src) == 2
        and not isinstance(src[0], tuple) else [list(v) for v in src],
        **(extra_meta or {}),
    }
    with open(path, "wb") as fh:
        _write_envelope(fh, MAGIC_DIST, df.n, df.spacing,
                        [df.dist.astype("<f8"), df.parent.astype("<i8")],
                        meta)


def read_distance_field(path):
    """Read a DFGrid v1 file. The reconstructed field carries no metric
    object (metric is None); dist/parent/source round-trip exactly."""
    with open(path, "rb") as fh:
        n, spacing, (dist, parent), meta = _read_envelope(
            fh, MAGIC_DIST,
            lambda n: [(np.dtype("<f8"), n * n), (np.dtype("<i8"), n * n)])
    raw = meta.pop("source", None)
    if raw is None:
        raise InvalidSpec("distance-field trailer lacks a source")
    if raw and isinstance(raw[0], list):
        source = tuple(tuple(int(c) for c in v) for v in raw)
    else:
        source = tuple(int(c) for c in raw)
    return DistanceField(n, spacing, source,
                         dist.reshape(n, n).copy(),
                         parent.reshape(n, n).astype(np.int64).copy(),
                         None)


def write_mask(path, mask, extra_meta=None):
    """Write a region mask as RMask v1 (row-major packed bits)."""
    packed = np.packbits(mask.bits.astype(np.uint8).ravel())
    meta = {**{k: v for k, v in mask.meta.items()}, **(extra_meta or {})}
    with open(path, "wb") as fh:
        _write_envelope(fh, MAGIC_MASK, mask.n, mask.spacing, [packed], meta)


def read_mask(path):
    with open(path, "rb") as fh:
        n, spacing, (packed,), meta = _read_envelope(
            fh, MAGIC_MASK,
            lambda n: [(np.dtype("u1"), (n * n + 7) // 8)])
    bits = np.unpackbits(packed, count=n * n).astype(bool).reshape(n, n)
    return RegionMask(n, spacing, bits, meta)


def write_boundary_csv(path, cycle, config_hash=None):
    """Boundary cycle rows: index,x,y,arc_label (-1 when unlabeled)."""
    labels = cycle.arc_labels or [-1] * len(cycle)
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config {config_hash}\n")
        w = csv.writer(fh)
        w.writerow(("index", "x", "y", "arc_label"))
        for i, ((x, y), a) in enumerate(zip(cycle.vertices, labels)):
            w.writerow((i, x, y, a))


def _data_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)
                if r and not r[0].startswith("#")]
    if not rows:
        raise InvalidSpec(f"{path} has no rows")
    return rows[0], rows[1:]


def read_boundary_csv(path):
    header, rows = _data_rows(path)
    if header != list(("index", "x", "y", "arc_label")):
        raise InvalidSpec(f"unexpected boundary header {header}")
    vertices = [(int(r[1]), int(r[2])) for r in rows]
    labels = [int(r[3]) for r in rows]
    cycle = BoundaryCycle(vertices, simple=True)
    if any(a >= 0 for a in labels):
        cycle.arc_labels = labels
    return cycle


def write_confluence_csv(path, rows, config_hash=None, partial=None):
    """Confluence sweep rows; `partial` appends an abort marker comment."""
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config {config_hash}\n")
        w = csv.writer(fh)
        w.writerow(CONFLUENCE_COLUMNS)
        for row in rows:
            w.writerow([row[k] for k in CONFLUENCE_COLUMNS])
        if partial:
            fh.write(f"# partial {partial}\n")


def read_confluence_csv(path):
    header, rows = _data_rows(path)
    if header != list(CONFLUENCE_COLUMNS):
        raise InvalidSpec(f"unexpected confluence header {header}")
    out = []
    for r in rows:
        out.append({
            "t": float(r[0]),
            "s": float(r[1]),
            "n_hit_points": int(r[2]),
            "coalescence_radius": float(r[3]),
            "winding_spread": float(r[4]),
            "seed": int(r[5]),
        })
    return out


def write_polylines_csv(path, paths, config_hash=None):
    """Geodesic polylines: path,point,x,y per row."""
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config {config_hash}\n")
        w = csv.writer(fh)
        w.writerow(("path", "point", "x", "y"))
        for pi, p in enumerate(paths):
            for qi, (x, y) in enumerate(p.vertices):
                w.writerow((pi, qi, x, y))


def append_probe_ledger(path, probe, params, result):
    """Append one probe result row, writing the header on first use.

    params is a short free-form string (no commas are escaped; the csv
    module quotes as needed); seed_range renders as first..last+1."""
    seeds = result.seeds
    if seeds and seeds == tuple(range(seeds[0], seeds[-1] + 1)):
        seed_range = f"{seeds[0]}..{seeds[-1] + 1}"
    else:
        seed_range = ";".join(str(s) for s in seeds)
    import os

    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if fresh:
            w.writerow(LEDGER_COLUMNS)
        w.writerow((probe, params, repr(result.estimate),
                    repr(result.std_error), result.n_samples, seed_range))


def read_probe_ledger(path):
    header, rows = _data_rows(path)
    if header != list(LEDGER_COLUMNS):
        raise InvalidSpec(f"unexpected ledger header {header}")
    return [dict(zip(LEDGER_COLUMNS, r)) for r in rows]
