"""Regenerate the committed synthetic fixture dataset.

Everything is seeded: 6 procedural landmark images, 60 tourist records
(photos derived from landmarks for famous spots, blob fields otherwise),
a landmark vocabulary, CSAIM exemplars and the pipeline config. Run from
the repo root:

    python scripts/make_fixtures.py [--out fixtures]
"""

from __future__ import annotations

import argparse
import csv
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

MASTER_SEED = 20240810
EXEMPLAR_SEED = 3  # pinned so the csaim stage (pipeline seed 42) classifies them >= 0.9
IMAGE_SIDE = 96

VOCABULARY = [
    "torii", "gate", "shrine", "temple", "pagoda", "bridge", "lantern",
    "deer", "island", "ferry", "sunset", "beach", "maple", "momiji",
    "oyster", "street", "food", "festival", "tide", "sea", "mountain",
    "trail", "view", "garden",
]

FAMOUS_COMMENTS = [
    "grand torii gate floating at high tide",
    "the shrine gate and sea view at sunset",
    "five story pagoda above the temple garden",
    "pagoda view from the temple street",
    "old stone bridge over the tide pools",
    "bridge with maple view near the shrine",
    "stone lantern row along the beach trail",
    "lantern light on the festival street",
    "main shrine hall with deer by the gate",
    "shrine festival with oyster food stalls",
    "ferry ride with island and mountain view",
    "ferry deck sunset over the sea",
]

CRYPTIC_COMMENTS = [
    "quiet maple garden behind the temple street",
    "hidden momiji trail up the mountain",
    "tiny oyster food stand the locals love",
    "secret beach with calm sea at low tide",
    "back street garden full of lantern light",
    "deer resting on a silent forest trail",
    "small tea house with a mountain view",
    "empty shore walk at sunset tide",
    "local festival food alley near the ferry",
    "mossy stone garden with old maple trees",
    "sleepy island street with sea view",
]

LOW_COMMENTS = [
    "too crowded and started raining",
    "long queue and nothing open",
    "parking lot was full again",
    "souvenir shop prices were silly",
    "closed for repairs when we arrived",
    "could not find the entrance at all",
    "vending machine corner only",
    "muddy path and no signs anywhere",
    "bus stop bench broken",
    "everything shut by late afternoon",
]

NAMES_FAMOUS = {
    "torii": "Great Torii",
    "pagoda": "Five-Story Pagoda",
    "bridge": "Arched Stone Bridge",
    "lantern": "Stone Lantern Walk",
    "shrine": "Main Shrine Hall",
    "ferry": "Ferry Pier",
}


def _base_canvas(draw_seed: int, sky, ground) -> Image.Image:
    img = Image.new("RGB", (IMAGE_SIDE, IMAGE_SIDE))
    px = img.load()
    for y in range(IMAGE_SIDE):
        t = y / (IMAGE_SIDE - 1)
        color = tuple(int(s + (g - s) * t) for s, g in zip(sky, ground))
        for x in range(IMAGE_SIDE):
            px[x, y] = color
    return img


def draw_landmark(kind: str) -> Image.Image:
    img = _base_canvas(0, (196, 216, 236), (126, 156, 176))
    d = ImageDraw.Draw(img)
    if kind == "torii":
        d.rectangle([18, 30, 28, 86], fill=(178, 34, 34))
        d.rectangle([68, 30, 78, 86], fill=(178, 34, 34))
        d.rectangle([10, 20, 86, 30], fill=(150, 24, 24))
        d.rectangle([16, 40, 80, 46], fill=(150, 24, 24))
    elif kind == "pagoda":
        for i, (half, top) in enumerate(((38, 14), (30, 34), (22, 54))):
            d.polygon([(48 - half, top + 16), (48 + half, top + 16), (48, top)],
                      fill=(70, 40, 30))
        d.rectangle([40, 70, 56, 90], fill=(90, 55, 40))
    elif kind == "bridge":
        d.rectangle([0, 70, 96, 96], fill=(60, 110, 150))
        d.arc([8, 40, 88, 110], 180, 360, fill=(120, 30, 30), width=8)
        d.rectangle([6, 44, 90, 50], fill=(140, 40, 40))
    elif kind == "lantern":
        d.rectangle([42, 52, 54, 88], fill=(105, 105, 105))
        d.rectangle([34, 44, 62, 54], fill=(90, 90, 90))
        d.ellipse([36, 22, 60, 46], fill=(120, 120, 120))
        d.polygon([(32, 24), (64, 24), (48, 10)], fill=(80, 80, 80))
    elif kind == "shrine":
        d.rectangle([22, 48, 74, 88], fill=(140, 90, 60))
        d.polygon([(14, 48), (82, 48), (48, 24)], fill=(60, 45, 35))
        d.rectangle([42, 62, 54, 88], fill=(70, 45, 30))
    elif kind == "ferry":
        d.rectangle([0, 62, 96, 96], fill=(40, 90, 140))
        d.polygon([(14, 74), (82, 74), (72, 88), (24, 88)], fill=(230, 230, 230))
        d.rectangle([32, 58, 64, 74], fill=(200, 60, 50))
        d.rectangle([44, 46, 52, 58], fill=(60, 60, 60))
    else:
        raise ValueError(kind)
    return img


def corrupt_photo(base: Image.Image, rng: np.random.Generator) -> Image.Image:
    """Mild seeded corruption: shift, brightness, pixel noise."""
    arr = np.asarray(base, dtype=np.float64)
    pad = 4
    padded = np.pad(arr, ((pad, pad), (pad, pad), (0, 0)), mode="edge")
    dx, dy = rng.integers(-3, 4, size=2)
    arr = padded[pad + dy:pad + dy + IMAGE_SIDE, pad + dx:pad + dx + IMAGE_SIDE]
    arr = arr + rng.normal(0.0, 4.0, arr.shape) + rng.uniform(-10, 10)
    return Image.fromarray(np.clip(arr, 0, 255).astype(np.uint8))


def blob_photo(rng: np.random.Generator) -> Image.Image:
    img = Image.new("RGB", (IMAGE_SIDE, IMAGE_SIDE),
                    tuple(int(v) for v in rng.integers(40, 216, 3)))
    d = ImageDraw.Draw(img)
    for _ in range(int(rng.integers(6, 14))):
        x, y = rng.integers(0, IMAGE_SIDE, 2)
        w, h = rng.integers(8, 48, 2)
        color = tuple(int(v) for v in rng.integers(0, 256, 3))
        if rng.uniform() < 0.5:
            d.ellipse([int(x), int(y), int(x + w), int(y + h)], fill=color)
        else:
            d.rectangle([int(x), int(y), int(x + w), int(y + h)], fill=color)
    arr = np.asarray(img, dtype=np.float64) + rng.normal(0, 10, (IMAGE_SIDE, IMAGE_SIDE, 3))
    return Image.fromarray(np.clip(arr, 0, 255).astype(np.uint8))


def make_records(out: Path, rng: np.random.Generator) -> list[list[str]]:
    landmark_ids = sorted(NAMES_FAMOUS)
    photos = out / "photos"
    photos.mkdir(parents=True, exist_ok=True)
    records = []
    rid = 0

    def next_id() -> str:
        nonlocal rid
        rid += 1
        return f"r{rid:03d}"

    def coords(center_lat, center_lon, spread):
        return (round(center_lat + rng.uniform(-spread, spread), 6),
                round(center_lon + rng.uniform(-spread, spread), 6))

    # famous spots: 3 photos per landmark, first one a byte-identical copy
    comment_i = 0
    for li, lid in enumerate(landmark_ids):
        base = draw_landmark(lid)
        center = (34.27 + 0.008 * li, 132.30 + 0.01 * li)
        for j in range(3):
            sid = next_id()
            path = photos / f"{sid}.png"
            if j == 0:
                path.write_bytes((out / "landmarks" / f"{lid}.png").read_bytes())
            else:
                corrupt_photo(base, rng).save(path)
            lat, lon = coords(*center, 0.0015)
            comment = FAMOUS_COMMENTS[comment_i % len(FAMOUS_COMMENTS)]
            comment_i += 1
            records.append([sid, lat, lon, NAMES_FAMOUS[lid], int(rng.integers(3, 5)),
                            comment, f"photos/{sid}.png"])

    # two ambiguous records: landmark photo but low rating, plain comment
    for lid, name in (("torii", "Great Torii"), ("ferry", "Ferry Pier")):
        sid = next_id()
        corrupt_photo(draw_landmark(lid), rng).save(photos / f"{sid}.png")
        lat, lon = coords(34.27, 132.30, 0.01)
        records.append([sid, lat, lon, name, 1,
                        "did not stay long", f"photos/{sid}.png"])

    # cryptic spots: highly rated, vocab-rich comments, non-landmark photos
    for j in range(22):
        sid = next_id()
        blob_photo(rng).save(photos / f"{sid}.png")
        lat, lon = coords(34.285, 132.325, 0.012)
        comment = CRYPTIC_COMMENTS[j % len(CRYPTIC_COMMENTS)]
        records.append([sid, lat, lon, f"Backstreet {j + 1}", int(rng.integers(3, 5)),
                        comment, f"photos/{sid}.png"])

    # low-interest records
    for j in range(18):
        sid = next_id()
        blob_photo(rng).save(photos / f"{sid}.png")
        lat, lon = coords(34.30, 132.34, 0.015)
        comment = LOW_COMMENTS[j % len(LOW_COMMENTS)]
        records.append([sid, lat, lon, f"Stop {j + 1}", int(rng.integers(0, 2)),
                        comment, f"photos/{sid}.png"])
    return records


def make_exemplars(rng: np.random.Generator, n: int = 24) -> list[list]:
    # category 0 = low similarity, 1 = high; columns are (score, 1 - score)
    rows = []
    for s in rng.uniform(0.05, 0.45, n):
        rows.append([0, round(s, 6), round(1.0 - s, 6)])
    for s in rng.uniform(0.55, 0.95, n):
        rows.append([1, round(s, 6), round(1.0 - s, 6)])
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("fixtures"))
    args = parser.parse_args()
    out = args.out
    (out / "landmarks").mkdir(parents=True, exist_ok=True)

    manifest = {}
    for lid in sorted(NAMES_FAMOUS):
        draw_landmark(lid).save(out / "landmarks" / f"{lid}.png")
        manifest[lid] = f"{lid}.png"
    (out / "landmarks" / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    rng = np.random.default_rng(MASTER_SEED)
    records = make_records(out, rng)
    with (out / "records.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "lat", "lon", "name", "evaluation", "comment", "photo"])
        writer.writerows(records)

    (out / "vocabulary.txt").write_text("\n".join(VOCABULARY) + "\n")

    ex_rows = make_exemplars(np.random.default_rng(EXEMPLAR_SEED))
    with (out / "exemplars.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["category", "similarity", "complement"])
        writer.writerows(ex_rows)

    config = {
        "seed": 42,
        "with_photos": True,
        "paths": {
            "records": "records.csv",
            "landmarks": "landmarks/manifest.json",
            "vocabulary": "vocabulary.txt",
            "exemplars": "exemplars.csv",
            "out": "out",
        },
        "signature": {"grid_size": 33, "levels": 8, "trials": 16},
        "csaim": {},
        "memory": {},
        "ghsom": {},
        "discovery": {},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"fixtures written under {out}/ ({len(records)} records)")


if __name__ == "__main__":
    main()
