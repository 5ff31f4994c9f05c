"""Edit-distance image signatures.

A photo is reduced to a small square grid of quantized gray symbols. The
grid is carved into 3 concentric rings (A = inner disc, B and C = annuli
out to the inscribed circle) and 4 quadrant wedges offset by a rotation
gap ``psi``. Each ring/wedge region is read as a symbol sequence spiraling
outward from the grid center, and two images are compared by the
Levenshtein distance between the sequences of randomly drawn regions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from io import BytesIO
from typing import Iterable, Mapping

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ConfigError,
    DecodeError,
    EmptyRegionError,
    UndefinedSimilarityError,
)

RINGS = ("A", "B", "C")
N_WEDGES = 4
_HALF_PI = math.pi / 2.0
_TWO_PI = 2.0 * math.pi

DEFAULT_GRID_SIZE = 63
DEFAULT_LEVELS = 8
DEFAULT_TRIALS = 32


@dataclass(frozen=True)
class RegionSpec:
    """One ring/wedge sector. ``psi`` rotates wedge boundaries and the
    spiral start edge together."""

    ring: str
    wedge: int
    psi: float = 0.0

    def __post_init__(self):
        if self.ring not in RINGS:
            raise ConfigError(f"unknown ring {self.ring!r}")
        if not 0 <= self.wedge < N_WEDGES:
            raise ConfigError(f"wedge must be in 0..3, got {self.wedge}")
        if not 0.0 <= self.psi < _HALF_PI:
            raise ConfigError(f"psi must be in [0, pi/2), got {self.psi}")

    @property
    def key(self) -> str:
        return f"{self.ring}{self.wedge}"


@dataclass(eq=False)
class IntensityGrid:
    """Square grid of quantized gray symbols in ``{0..levels-1}``."""

    cells: np.ndarray
    levels: int

    def __post_init__(self):
        self.cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if self.cells.ndim != 2 or self.cells.shape[0] != self.cells.shape[1]:
            raise ConfigError(f"grid must be square, got shape {self.cells.shape}")
        if self.cells.size and int(self.cells.max()) >= self.levels:
            raise ConfigError("grid contains symbols outside {0..levels-1}")

    @property
    def size(self) -> int:
        return self.cells.shape[0]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.size}:{self.levels}:".encode())
        h.update(self.cells.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class PixelSequence:
    """Region symbols in spiral order (radius asc, then angle from the
    wedge start edge, ties by row-major index)."""

    symbols: tuple
    region: RegionSpec

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class SignatureConfig:
    grid_size: int = DEFAULT_GRID_SIZE
    levels: int = DEFAULT_LEVELS
    trials: int = DEFAULT_TRIALS
    aggregate: str = "mean"

    def __post_init__(self):
        if self.grid_size < 9:
            raise ConfigError("grid_size must be >= 9 so every region is non-empty")
        if not 2 <= self.levels <= 256:
            raise ConfigError("levels must be in 2..256")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.aggregate not in ("mean", "max"):
            raise ConfigError("aggregate must be 'mean' or 'max'")


# ---------------------------------------------------------------------------
# quantization

def _decode_rgb(image_bytes: bytes) -> np.ndarray:
    try:
        with Image.open(BytesIO(image_bytes)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float64)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc


def _resize_bilinear(plane: np.ndarray, size: int) -> np.ndarray:
    # Pixel-center sampling: src = (dst + 0.5) * scale - 0.5, edges clamped.
    src_h, src_w = plane.shape

    def axis_coords(n_src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(size) + 0.5) * (n_src / size) - 0.5
        pos = np.clip(pos, 0.0, n_src - 1.0)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, n_src - 1)
        return lo, hi, pos - lo

    y0, y1, wy = axis_coords(src_h)
    x0, x1, wx = axis_coords(src_w)
    top = plane[y0][:, x0] * (1 - wx) + plane[y0][:, x1] * wx
    bot = plane[y1][:, x0] * (1 - wx) + plane[y1][:, x1] * wx
    return top * (1 - wy[:, None]) + bot * wy[:, None]


def quantize_image(image_bytes: bytes, size: int, levels: int) -> IntensityGrid:
    """Decode, gray, center-crop to square, resize to ``size`` and quantize.

    Gray is ``floor(0.299R + 0.587G + 0.114B + 0.5)``; the quantizer is
    ``floor(gray * levels / 256)``. Both are fixed so grids are bit-exact
    reproducible from the same bytes.
    """
    if size < 1:
        raise ConfigError(f"size must be >= 1, got {size}")
    if not 2 <= levels <= 256:
        raise ConfigError(f"levels must be in 2..256, got {levels}")
    rgb = _decode_rgb(image_bytes)
    gray = np.floor(rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114 + 0.5)
    h, w = gray.shape
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    gray = gray[top:top + side, left:left + side]
    resized = _resize_bilinear(gray, size)
    symbols = np.clip(np.floor(resized * levels / 256.0), 0, levels - 1)
    return IntensityGrid(cells=symbols.astype(np.uint8), levels=levels)


# ---------------------------------------------------------------------------
# region geometry

class _Geometry:
    """Per-grid-size polar coordinates of all cell centers."""

    def __init__(self, size: int):
        half = (size - 1) / 2.0
        rows, cols = np.indices((size, size))
        x = cols - half
        y = half - rows
        self.radius = np.hypot(x, y).ravel()
        phi = np.mod(np.arctan2(y, x).ravel(), _TWO_PI)
        self.center_mask = self.radius == 0.0
        self.phi = phi
        self.rowmajor = np.arange(size * size)
        outer = size / 2.0
        ring = np.full(size * size, -1, dtype=np.int64)
        ring[self.radius < outer / 3.0] = 0
        ring[(self.radius >= outer / 3.0) & (self.radius < 2.0 * outer / 3.0)] = 1
        ring[(self.radius >= 2.0 * outer / 3.0) & (self.radius <= outer)] = 2
        self.ring = ring


_GEOMETRY_CACHE: dict[int, _Geometry] = {}


def _geometry(size: int) -> _Geometry:
    geo = _GEOMETRY_CACHE.get(size)
    if geo is None:
        geo = _GEOMETRY_CACHE[size] = _Geometry(size)
    return geo


def region_order(size: int, region: RegionSpec) -> np.ndarray:
    """Flat cell indices of ``region`` in spiral order.

    The center cell carries relative angle 0, so it always belongs to
    wedge 0 and leads that wedge's spiral.
    """
    geo = _geometry(size)
    rel = np.mod(geo.phi - region.psi, _TWO_PI)
    rel[rel >= _TWO_PI] = 0.0
    rel[geo.center_mask] = 0.0
    wedge_of = np.minimum(np.floor(rel / _HALF_PI).astype(np.int64), N_WEDGES - 1)
    mask = (geo.ring == RINGS.index(region.ring)) & (wedge_of == region.wedge)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptyRegionError(f"region {region.ring}{region.wedge} empty at size {size}")
    in_wedge = rel[idx] - wedge_of[idx] * _HALF_PI
    order = np.lexsort((geo.rowmajor[idx], in_wedge, geo.radius[idx]))
    return idx[order]


def extract_sequence(grid: IntensityGrid, region: RegionSpec) -> PixelSequence:
    idx = region_order(grid.size, region)
    return PixelSequence(symbols=tuple(int(s) for s in grid.cells.ravel()[idx]), region=region)


# ---------------------------------------------------------------------------
# Levenshtein distance

def _as_symbol_array(seq) -> np.ndarray:
    symbols = seq.symbols if isinstance(seq, PixelSequence) else seq
    return np.asarray(symbols, dtype=np.int64)


def levenshtein(s, t) -> int:
    """Edit distance (insert/delete/substitute, unit cost) between two
    symbol sequences, in O(|s||t|) time and O(min(|s|,|t|)) memory."""
    a, b = _as_symbol_array(s), _as_symbol_array(t)
    if a.size < b.size:
        a, b = b, a
    if b.size == 0:
        return int(a.size)
    n = b.size
    steps = np.arange(n + 1, dtype=np.int64)
    prev = steps.copy()
    cur = np.empty(n + 1, dtype=np.int64)
    for i in range(1, a.size + 1):
        # substitution/insertion candidates are independent per column;
        # the deletion chain collapses to a prefix-min over (cand - j).
        cur[0] = i
        np.minimum(prev[:-1] + (b != a[i - 1]), prev[1:] + 1, out=cur[1:])
        np.minimum.accumulate(cur - steps, out=cur)
        cur += steps
        prev, cur = cur, prev
    return int(prev[n])


def sequence_similarity(s, t) -> float:
    a, b = _as_symbol_array(s), _as_symbol_array(t)
    longest = max(a.size, b.size)
    if longest == 0:
        raise UndefinedSimilarityError("similarity of two empty sequences")
    return 1.0 - levenshtein(a, b) / longest


# ---------------------------------------------------------------------------
# signatures

def _psi_zero_sequences(grid: IntensityGrid) -> dict[str, tuple]:
    out = {}
    for ring in RINGS:
        for wedge in range(N_WEDGES):
            region = RegionSpec(ring, wedge, 0.0)
            out[region.key] = extract_sequence(grid, region).symbols
    return out


@dataclass(eq=False)
class ImageSignature:
    """Quantized grid plus the 12 cached psi=0 region sequences. Sequences
    at arbitrary psi are recomputed from the grid per similarity trial."""

    image_id: str
    grid: IntensityGrid
    sequences: dict[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sequences:
            self.sequences = _psi_zero_sequences(self.grid)

    @property
    def grid_size(self) -> int:
        return self.grid.size

    @property
    def levels(self) -> int:
        return self.grid.levels

    def grid_hash(self) -> str:
        return self.grid.digest()


def build_signature(image_id: str, image_bytes: bytes, cfg: SignatureConfig) -> ImageSignature:
    grid = quantize_image(image_bytes, cfg.grid_size, cfg.levels)
    return ImageSignature(image_id=image_id, grid=grid)


@dataclass
class LandmarkSet:
    landmarks: list

    def __post_init__(self):
        if not self.landmarks:
            raise ConfigError("landmark set must not be empty")
        ids = [lid for lid, _ in self.landmarks]
        if len(set(ids)) != len(ids):
            raise ConfigError("landmark ids must be unique")

    def sorted_ids(self) -> list[str]:
        return sorted(lid for lid, _ in self.landmarks)

    def get(self, landmark_id: str) -> ImageSignature:
        for lid, sig in self.landmarks:
            if lid == landmark_id:
                return sig
        raise KeyError(landmark_id)


def signature_similarity(a: ImageSignature, b: ImageSignature, trials: int,
                         rng: np.random.Generator, aggregate: str = "mean") -> float:
    """Mean (or max) sequence similarity over ``trials`` randomly drawn
    regions. Each trial draws psi ~ U[0, pi/2) and a uniform ring/wedge;
    the draw order never depends on the operands, so the score is
    symmetric in (a, b) for a fixed seed."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if a.grid_size != b.grid_size or a.levels != b.levels:
        raise ConfigError("signatures built with different grid size or levels")
    if aggregate not in ("mean", "max"):
        raise ConfigError("aggregate must be 'mean' or 'max'")
    flat_a = a.grid.cells.ravel()
    flat_b = b.grid.cells.ravel()
    scores = np.empty(trials)
    for trial in range(trials):
        psi = rng.uniform(0.0, _HALF_PI)
        ring = RINGS[int(rng.integers(len(RINGS)))]
        wedge = int(rng.integers(N_WEDGES))
        idx = region_order(a.grid_size, RegionSpec(ring, wedge, psi))
        scores[trial] = sequence_similarity(flat_a[idx], flat_b[idx])
    return float(scores.max() if aggregate == "max" else scores.mean())


def landmark_similarity_vector(sig: ImageSignature, landmarks: LandmarkSet, trials: int,
                               rng: np.random.Generator, aggregate: str = "mean") -> dict[str, float]:
    """Similarity of ``sig`` against every landmark, keyed by landmark id.

    Landmarks are scored in sorted-id order on independently split RNG
    streams, so each landmark's score does not depend on which other
    landmarks are present."""
    ids = landmarks.sorted_ids()
    streams = rng.spawn(len(ids))
    return {
        lid: signature_similarity(sig, landmarks.get(lid), trials, stream, aggregate)
        for lid, stream in zip(ids, streams)
    }


def landmark_similarity(sig: ImageSignature, landmarks: LandmarkSet, trials: int,
                        rng: np.random.Generator, aggregate: str = "mean") -> tuple[str, float]:
    """Best-matching landmark id and its score; ties go to the
    lexicographically smallest id."""
    scores = landmark_similarity_vector(sig, landmarks, trials, rng, aggregate)
    best_id = None
    best = -1.0
    for lid in sorted(scores):
        if scores[lid] > best:
            best_id, best = lid, scores[lid]
    return best_id, best


# ---------------------------------------------------------------------------
# signature cache file

CACHE_FORMAT = "signature-cache/1"


def cache_record(sig: ImageSignature) -> dict:
    return {
        "image_id": sig.image_id,
        "grid_size": sig.grid_size,
        "levels": sig.levels,
        "grid_hash": sig.grid_hash(),
        "sequences": {key: ",".join(str(s) for s in seq)
                      for key, seq in sorted(sig.sequences.items())},
    }


def dump_cache(signatures: Iterable[ImageSignature]) -> str:
    doc = {"format": CACHE_FORMAT,
           "signatures": [cache_record(sig) for sig in signatures]}
    return json.dumps(doc, indent=2, sort_keys=True)


def load_cache(text: str) -> list[dict]:
    """Parse a cache document back into records. Round-trips bit-exactly:
    ``load_cache(dump_cache(sigs)) == [cache_record(s) for s in sigs]``."""
    doc = json.loads(text)
    if doc.get("format") != CACHE_FORMAT:
        raise ConfigError(f"unexpected cache format {doc.get('format')!r}")
    records = []
    for raw in doc["signatures"]:
        records.append({
            "image_id": raw["image_id"],
            "grid_size": int(raw["grid_size"]),
            "levels": int(raw["levels"]),
            "grid_hash": raw["grid_hash"],
            "sequences": {key: value for key, value in sorted(raw["sequences"].items())},
        })
    return records


def load_landmarks(manifest_path, cfg: SignatureConfig) -> LandmarkSet:
    """Read a landmark manifest (JSON mapping landmark_id -> image filename,
    relative to the manifest's directory) and build signatures."""
    from pathlib import Path

    manifest_path = Path(manifest_path)
    mapping: Mapping[str, str] = json.loads(manifest_path.read_text())
    if not mapping:
        raise ConfigError(f"empty landmark manifest {manifest_path}")
    landmarks = []
    for lid in sorted(mapping):
        image_path = manifest_path.parent / mapping[lid]
        landmarks.append((lid, build_signature(lid, image_path.read_bytes(), cfg)))
    return LandmarkSet(landmarks=landmarks)
