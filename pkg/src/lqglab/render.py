"""Deterministic binary image output (PPM P6 / PGM P5) plus report figures.

The pixel writers are byte-stable: same array, same comment, same file.
Provenance goes into a header comment line, which both formats allow.
Grid vertex (x, y) maps to image column x, row y (row 0 rendered on top).

Report figures are matplotlib conveniences for human review; the CSV files
remain the machine-readable record. matplotlib is imported lazily with the
Agg backend so headless runs and non-figure paths never touch a display.
"""

import numpy as np

from .errors import InvalidSpec

BALL_TINT = (70, 130, 180)
CONTOUR_COLOR = (255, 200, 40)
GEODESIC_COLOR = (220, 40, 40)
HIT_COLOR = (40, 220, 90)
SOURCE_COLOR = (255, 255, 255)


def _as_u8(img, channels):
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise InvalidSpec(f"image dtype must be uint8, got {arr.dtype}")
    if channels == 1 and arr.ndim != 2:
        raise InvalidSpec(f"grayscale image must be 2-d, got {arr.ndim}-d")
    if channels == 3 and (arr.ndim != 3 or arr.shape[2] != 3):
        raise InvalidSpec(f"color image must be (h, w, 3), got {arr.shape}")
    return arr


def write_pgm(path, gray, comment=None):
    """Write an 8-bit grayscale image as binary PGM (P5)."""
    arr = _as_u8(gray, 1)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        if comment:
            fh.write(f"# {comment}\n".encode("ascii"))
        fh.write(f"{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes(order="C"))


def write_ppm(path, rgb, comment=None):
    """Write an 8-bit RGB image as binary PPM (P6)."""
    arr = _as_u8(rgb, 3)
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n")
        if comment:
            fh.write(f"# {comment}\n".encode("ascii"))
        fh.write(f"{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes(order="C"))


def field_image(field_):
    """Min-max grayscale of the field values; constant fields go mid-gray."""
    v = field_.values
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        return np.full(v.shape, 128, dtype=np.uint8)
    scaled = (v - lo) * (255.0 / (hi - lo))
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def _blend(base, color, alpha, where):
    for c in range(3):
        chan = base[:, :, c]
        chan[where] = np.rint(
            (1 - alpha) * chan[where] + alpha * color[c]).astype(np.uint8)


def ball_image(field_, ball, boundary=None):
    """Field backdrop with the ball tinted and its contour traced."""
    img = np.repeat(field_image(field_)[:, :, None], 3, axis=2)
    _blend(img, BALL_TINT, 0.45, ball.bits)
    if boundary is not None:
        for x, y in boundary.vertices:
            img[y, x] = CONTOUR_COLOR
    return img


def draw_paths(img, paths, color=GEODESIC_COLOR):
    """Stamp 4-adjacent lattice polylines onto an RGB image in place."""
    for p in paths:
        for x, y in p.vertices:
            img[y, x] = color
    return img


def confluence_image(field_, ball, paths, hit_points=(), boundary=None):
    """Fig-style composite: ball, geodesic bundle, crossing set, source."""
    img = ball_image(field_, ball, boundary)
    draw_paths(img, paths)
    for x, y in hit_points:
        img[y, x] = HIT_COLOR
    if paths:
        sx, sy = paths[0].source
        img[sy, sx] = SOURCE_COLOR
    return img


def read_pnm(path):
    """Read back a P5/P6 file written here; returns (array, comment)."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields, comment, pos = [], None, 2
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise InvalidSpec(f"not a binary PNM file: magic {magic!r}")
    while len(fields) < 3:
        if data[pos:pos + 1].isspace():
            pos += 1
        elif data[pos:pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comment = data[pos + 1:end].decode("ascii").strip()
            pos = end + 1
        else:
            end = pos
            while not data[end:end + 1].isspace():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise InvalidSpec(f"unsupported maxval {maxval}")
    shape = (h, w) if magic == b"P5" else (h, w, 3)
    count = int(np.prod(shape))
    raw = data[pos:pos + count]
    if len(raw) != count:
        raise InvalidSpec("truncated pixel payload")
    return np.frombuffer(raw, dtype=np.uint8).reshape(shape), comment


def confluence_figure(rows, path):
    """Plot hit-point count and coalescence radius against s, per seed."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    by_seed = {}
    for r in rows:
        by_seed.setdefault(r["seed"], []).append(r)
    for seed, rs in sorted(by_seed.items()):
        rs = sorted(rs, key=lambda r: r["s"])
        ss = [r["s"] for r in rs]
        ax1.plot(ss, [r["n_hit_points"] for r in rs], "o-", ms=3,
                 label=f"seed {seed}")
        ax2.plot(ss, [r["coalescence_radius"] for r in rs], "o-", ms=3)
    ax1.set_xlabel("s")
    ax1.set_ylabel("crossing-set size N(t, s)")
    ax2.set_xlabel("s")
    ax2.set_ylabel("coalescence radius")
    if len(by_seed) <= 8:
        ax1.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def probe_figure(result, title, path):
    """Bar-with-errorbar summary of one probe estimate."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar([0], [result.estimate], yerr=[3 * result.std_error],
           capsize=6, width=0.5, color="#4682b4")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xticks([])
    ax.set_title(f"{title}  (n={result.n_samples}, ±3 SE)", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
