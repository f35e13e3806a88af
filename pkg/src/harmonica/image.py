"""Image ingestion, patch extraction, and normalization onto (S^{d-1})^n.

Patches are r x r windows flattened row-major and scaled to unit Euclidean
norm; a patched image is the tuple of those unit vectors. Locations are
1-based (i, j) with 1 <= i <= h-r+1, 1 <= j <= w-r+1, window rows
i..i+r-1. File formats: a plain-text matrix ("h w" header line, then h rows
of w reals) and single-channel portable graymaps (P2/P5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePatchError, StructuralError

NORM_TOL = 1e-12


@dataclass(frozen=True)
class Image:
    pixels: np.ndarray  # (h, w), finite reals

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2 or px.size == 0:
            raise StructuralError("image must be a nonempty h x w matrix")
        if not np.all(np.isfinite(px)):
            raise ValueError("image has non-finite pixels")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def h(self) -> int:
        return self.pixels.shape[0]

    @property
    def w(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class PatchConfig:
    """Patch side r (so d = r^2) plus the list of extraction locations."""

    r: int
    locations: tuple

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("patch side r must be >= 2 (d = r^2 >= 2)")
        locs = tuple((int(i), int(j)) for i, j in self.locations)
        if not locs:
            raise ValueError("need at least one extraction location")
        object.__setattr__(self, "locations", locs)

    @property
    def d(self) -> int:
        return self.r * self.r

    @property
    def n(self) -> int:
        return len(self.locations)

    def validate_for(self, img: Image) -> None:
        for (i, j) in self.locations:
            if not (1 <= i <= img.h - self.r + 1 and 1 <= j <= img.w - self.r + 1):
                raise StructuralError(
                    f"location ({i},{j}) outside valid grid for "
                    f"{img.h}x{img.w} image with r={self.r}")


def grid_locations(h: int, w: int, r: int, stride: int | None = None) -> list:
    """Stride-based grid of 1-based window origins; default stride r gives
    disjoint patches."""
    s = r if stride is None else int(stride)
    if s < 1:
        raise ValueError("stride must be >= 1")
    return [(i, j) for i in range(1, h - r + 2, s)
            for j in range(1, w - r + 2, s)]


@dataclass(frozen=True)
class PatchedImage:
    """An element of (S^{d-1})^n: n unit-norm patch vectors."""

    patches: np.ndarray  # (n, d)

    def __post_init__(self):
        p = np.asarray(self.patches, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 2:
            raise StructuralError("patches must form an (n, d>=2) matrix")
        norms = np.linalg.norm(p, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise ValueError("patch norms deviate from 1 beyond tolerance")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "patches", p)

    @property
    def n(self) -> int:
        return self.patches.shape[0]

    @property
    def d(self) -> int:
        return self.patches.shape[1]


def extract_patches(img: Image, cfg: PatchConfig) -> PatchedImage:
    """Flatten each configured r x r window row-major and normalize it.

    A zero-norm window is a degenerate-patch error: such images fall outside
    the normalized image space.
    """
    cfg.validate_for(img)
    r = cfg.r
    rows = []
    for (i, j) in cfg.locations:
        win = img.pixels[i - 1:i - 1 + r, j - 1:j - 1 + r].reshape(-1)
        nrm = math.sqrt(float(np.dot(win, win)))
        if nrm == 0.0:
            raise DegeneratePatchError(f"zero-norm window at ({i},{j})")
        rows.append(win / nrm)
    return PatchedImage(np.asarray(rows))


def sample_uniform(n: int, d: int, seed) -> PatchedImage:
    """n independent uniform points on S^{d-1}, deterministic per seed."""
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    rng = np.random.default_rng(seed)
    return PatchedImage(_normalize_rows(rng.standard_normal((n, d))))


def sample_uniform_batch(count: int, n: int, d: int, seed) -> list:
    """A reproducible batch of uniform product-sphere points."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n, d))
    return [PatchedImage(_normalize_rows(g[i])) for i in range(count)]


def _normalize_rows(a: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=-1, keepdims=True)
    # regenerating on an exact zero draw is astronomically unlikely; guard anyway
    norms[norms == 0.0] = 1.0
    return a / norms


def stack_patches(xs) -> np.ndarray:
    """(count, n, d) array view of a list of PatchedImage."""
    return np.stack([x.patches for x in xs])


def load_image_text(path) -> Image:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise StructuralError(f"{path}: first line must be 'h w'")
        h, w = int(header[0]), int(header[1])
        data = np.loadtxt(fh, dtype=float, ndmin=2)
    if data.shape != (h, w):
        raise StructuralError(
            f"{path}: expected {h}x{w} values, found {data.shape}")
    return Image(data)


def save_image_text(img: Image, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{img.h} {img.w}\n")
        for row in img.pixels:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_image_pgm(path) -> Image:
    """P2 (ascii) or P5 (binary) single-channel portable graymap."""
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = _pgm_tokens(raw)
    magic = next(tokens)
    if magic not in (b"P2", b"P5"):
        raise StructuralError(f"{path}: not a P2/P5 graymap")
    w = int(next(tokens))
    h = int(next(tokens))
    maxval = int(next(tokens))
    if maxval <= 0:
        raise StructuralError(f"{path}: bad maxval {maxval}")
    if magic == b"P2":
        vals = [int(next(tokens)) for _ in range(h * w)]
        data = np.asarray(vals, dtype=float).reshape(h, w)
    else:
        offset = _pgm_binary_offset(raw)
        width = 1 if maxval < 256 else 2
        dt = np.dtype(">u1") if width == 1 else np.dtype(">u2")
        flat = np.frombuffer(raw, dtype=dt, count=h * w, offset=offset)
        data = flat.astype(float).reshape(h, w)
    return Image(data)


def load_image(path) -> Image:
    p = str(path)
    if p.endswith(".pgm"):
        return load_image_pgm(p)
    return load_image_text(p)


def _pgm_tokens(raw: bytes):
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i:i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            while i < n and raw[i:i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < n and raw[j:j + 1] not in b" \t\r\n":
                j += 1
            yield raw[i:j]
            i = j


def _pgm_binary_offset(raw: bytes) -> int:
    # binary payload starts after exactly one whitespace byte past maxval
    seen = 0
    i = 0
    while seen < 4:
        while raw[i:i + 1] in b" \t\r\n":
            i += 1
        if raw[i:i + 1] == b"#":
            while raw[i:i + 1] != b"\n":
                i += 1
            continue
        while raw[i:i + 1] not in b" \t\r\n":
            i += 1
        seen += 1
    return i + 1
