"""Image I/O, point-set extraction, text tables and the L1 metric."""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np

from .core import GmmInterpError, PointSet, ShapeMismatch


class UnsupportedFormat(GmmInterpError, ValueError):
    pass


class CorruptFile(GmmInterpError, ValueError):
    pass


class InvalidFactor(GmmInterpError, ValueError):
    pass


class InvalidCount(GmmInterpError, ValueError):
    pass


# --- raster I/O -------------------------------------------------------------

def _read_pnm(data: bytes, path) -> np.ndarray:
    magic = data[:2]
    channels = {b"P5": 1, b"P6": 3}[magic]
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        begin = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if begin == pos:
            raise CorruptFile(f"{path}: truncated header")
        try:
            fields.append(int(data[begin:pos]))
        except ValueError:
            raise CorruptFile(f"{path}: bad header field {data[begin:pos]!r}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormat(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte before the raster
    n = width * height * channels
    raster = data[pos:pos + n]
    if width < 1 or height < 1 or len(raster) != n:
        raise CorruptFile(f"{path}: expected {n} raster bytes, found {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)


def load_image(path) -> np.ndarray:
    """Read an 8-bit PGM/PPM (P5/P6) or PNG as a float ``(H, W, C)`` array, C in {1, 3}."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P6"):
        raw = _read_pnm(data, path)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image

        try:
            with Image.open(io.BytesIO(data)) as im:
                im.load()
                if im.mode not in ("L", "RGB"):
                    if im.mode in ("LA", "I;16", "I"):
                        raise UnsupportedFormat(f"{path}: unsupported PNG mode {im.mode}")
                    im = im.convert("RGB")
                raw = np.asarray(im, dtype=np.uint8)
        except (OSError, SyntaxError) as e:
            raise CorruptFile(f"{path}: {e}") from None
        if raw.ndim == 2:
            raw = raw[:, :, None]
    else:
        raise UnsupportedFormat(f"{path}: not a P5/P6 pixmap or PNG")
    return raw.astype(np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def save_image(img: np.ndarray, path) -> None:
    """Write as binary PGM/PPM, or PNG when the suffix is ``.png``."""
    path = Path(path)
    raw = to_uint8(img)
    if raw.ndim == 2:
        raw = raw[:, :, None]
    h, w, c = raw.shape
    if c not in (1, 3):
        raise UnsupportedFormat(f"cannot save {c}-channel image")
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(raw[:, :, 0] if c == 1 else raw).save(path, format="PNG")
        return
    magic = b"P5" if c == 1 else b"P6"
    path.write_bytes(magic + b"\n%d %d\n255\n" % (w, h) + raw.tobytes())


IMAGE_SUFFIXES = (".ppm", ".pgm", ".pnm", ".png")


def list_images(directory) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


# --- point sets -------------------------------------------------------------

def block_average(img: np.ndarray, factor: int) -> np.ndarray:
    """Mean of each ``factor x factor`` block; partial edge blocks use their true extent."""
    if int(factor) != factor or factor < 1:
        raise InvalidFactor(f"factor must be a positive integer, got {factor}")
    h, w, c = img.shape
    hb, wb = -(-h // factor), -(-w // factor)
    out = np.zeros((hb, wb, c))
    for br in range(hb):
        for bc in range(wb):
            block = img[br * factor:(br + 1) * factor, bc * factor:(bc + 1) * factor]
            out[br, bc] = block.reshape(-1, c).mean(axis=0)
    return out


def grid_subsample(img: np.ndarray, factor: int) -> PointSet:
    """One point per ``factor x factor`` block: mean color at the block's center."""
    small = block_average(img, factor)
    hb, wb, c = small.shape
    rows, cols = np.mgrid[0:hb, 0:wb]
    # Uniform lattice even for partial edge blocks, so the points stay a grid.
    offset = (factor - 1) / 2.0
    pos = np.stack([cols * factor + offset, rows * factor + offset], axis=-1).reshape(-1, 2)
    return PointSet(pos, small.reshape(-1, c))


def random_subsample(img: np.ndarray, n: int, seed: int) -> PointSet:
    """``n`` points uniform over ``[-0.5, W - 0.5) x [-0.5, H - 0.5)``, colored
    by the nearest pixel.

    Uses numpy's Philox counter-based generator so point sets reproduce
    across platforms.
    """
    if int(n) != n or n < 1:
        raise InvalidCount(f"number of points must be a positive integer, got {n}")
    h, w, _ = img.shape
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((int(n), 2))
    pos = np.empty_like(u)
    pos[:, 0] = u[:, 0] * w - 0.5
    pos[:, 1] = u[:, 1] * h - 0.5
    cols = np.clip(np.floor(pos[:, 0] + 0.5).astype(np.int64), 0, w - 1)
    rows = np.clip(np.floor(pos[:, 1] + 0.5).astype(np.int64), 0, h - 1)
    return PointSet(pos, img[rows, cols])


def synthetic_blob_image(height: int, width: int, seed: int, n_blobs: int = 6, channels: int = 3) -> np.ndarray:
    """Smooth test image: a seeded sum of colored 2D Gaussian blobs in [0, 1]."""
    rng = np.random.Generator(np.random.Philox(seed))
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.tile(rng.uniform(0.1, 0.5, channels), (height, width, 1))
    scale = min(height, width)
    for _ in range(n_blobs):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        s = rng.uniform(0.08, 0.25) * scale
        amp = rng.uniform(-0.5, 0.5, channels)
        g = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * s * s))
        img += g[..., None] * amp
    return np.clip(img, 0.0, 1.0)


# --- text tables ------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def save_points(ps: PointSet, path) -> None:
    """Write a point file with header ``x,y,r,g,b`` (or ``x,y,v`` for one channel)."""
    header = ["x", "y", "r", "g", "b"] if ps.num_channels == 3 else ["x", "y", "v"]
    with open(path, "w", newline="", encoding="utf-8") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(header)
        for p, c in zip(ps.positions, ps.colors):
            wr.writerow([_fmt(v) for v in (*p, *c)])


def load_points(path) -> PointSet:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise CorruptFile(f"{path}: empty point file")
    header = [h.strip().lower() for h in rows[0]]
    if header not in (["x", "y", "r", "g", "b"], ["x", "y", "v"]):
        raise CorruptFile(f"{path}: header must be x,y,r,g,b (or x,y,v), got {','.join(rows[0])}")
    body = [r for r in rows[1:] if r]
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError as e:
        raise CorruptFile(f"{path}: {e}") from None
    if data.size == 0:
        data = np.zeros((0, len(header)))
    if data.ndim != 2 or data.shape[1] != len(header):
        raise CorruptFile(f"{path}: every row needs {len(header)} values")
    return PointSet(data[:, :2], data[:, 2:])


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


# --- metrics ----------------------------------------------------------------

def l1_metric(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference over all pixels and channels."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def ensure_dir(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
