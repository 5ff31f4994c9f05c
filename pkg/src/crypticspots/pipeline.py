"""Batch pipeline: signatures -> immune classification -> map hierarchy ->
discovery report. Every stage derives its RNG from (config seed, stage
name), writes fixed filenames under the output directory, and is
byte-identical across reruns with the same inputs and seed.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import corpus, ghsom, immune, signature
from .errors import ConfigError, DecodeError

STAGE_ORDER = ("signatures", "csaim", "ghsom", "discover")

SIGNATURES_FILE = "signatures.json"
SIMILARITY_FILE = "landmark_similarity.csv"
CELLS_FILE = "memory_cells.json"
CLASSIFICATION_FILE = "csaim_classification.csv"
TREE_FILE = "ghsom_tree.json"
TREE_TEXT_FILE = "ghsom_tree.txt"
REPORT_FILE = "discovery_report.csv"

UNRECOGNIZED = "Unrecognized"


@dataclass(frozen=True)
class PipelinePaths:
    records: Path
    landmarks: Path
    vocabulary: Path
    exemplars: Path
    out: Path

    def require_inputs(self) -> None:
        for name in ("records", "landmarks", "vocabulary", "exemplars"):
            p = getattr(self, name)
            if not p.exists():
                raise ConfigError(f"{name} path does not exist: {p}")


@dataclass(frozen=True)
class PipelineConfig:
    paths: PipelinePaths
    seed: int
    with_photos: bool = True
    signature: signature.SignatureConfig = field(default_factory=signature.SignatureConfig)
    csaim: immune.CsaimConfig = field(default_factory=immune.CsaimConfig)
    memory: immune.MemoryConfig = field(default_factory=immune.MemoryConfig)
    ghsom: ghsom.GhsomConfig = field(default_factory=ghsom.GhsomConfig)
    discovery: corpus.DiscoveryThresholds = field(default_factory=corpus.DiscoveryThresholds)


def _build_section(cls, raw: dict, section: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in section {section!r}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad section {section!r}: {exc}") from exc


def config_from_dict(doc: dict, base_dir: Path, seed_override: int | None = None,
                     out_override: Path | None = None) -> PipelineConfig:
    """Build a config from the documented JSON layout. Relative paths are
    resolved against the config file's directory; the seed is mandatory
    (no wall-clock fallback)."""
    seed = seed_override if seed_override is not None else doc.get("seed")
    if seed is None:
        raise ConfigError("seed is mandatory: set it in the config file or pass --seed")
    raw_paths = doc.get("paths")
    if not raw_paths:
        raise ConfigError("config needs a 'paths' section")
    missing = {"records", "landmarks", "vocabulary", "exemplars", "out"} - set(raw_paths)
    if missing:
        raise ConfigError(f"paths section missing {sorted(missing)}")

    def resolve(key: str) -> Path:
        p = Path(raw_paths[key])
        return p if p.is_absolute() else base_dir / p

    paths = PipelinePaths(records=resolve("records"), landmarks=resolve("landmarks"),
                          vocabulary=resolve("vocabulary"), exemplars=resolve("exemplars"),
                          out=out_override or resolve("out"))
    return PipelineConfig(
        paths=paths,
        seed=int(seed),
        with_photos=bool(doc.get("with_photos", True)),
        signature=_build_section(signature.SignatureConfig, doc.get("signature", {}), "signature"),
        csaim=_build_section(immune.CsaimConfig, doc.get("csaim", {}), "csaim"),
        memory=_build_section(immune.MemoryConfig, doc.get("memory", {}), "memory"),
        ghsom=_build_section(ghsom.GhsomConfig, doc.get("ghsom", {}), "ghsom"),
        discovery=_build_section(corpus.DiscoveryThresholds, doc.get("discovery", {}), "discovery"),
    )


def load_config(path: Path, seed_override: int | None = None,
                out_override: Path | None = None,
                overrides: list[str] | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    doc = json.loads(path.read_text())
    for item in overrides or []:
        _apply_override(doc, item)
    return config_from_dict(doc, path.parent.resolve(), seed_override, out_override)


def _apply_override(doc: dict, item: str) -> None:
    # --set section.key=value (value parsed as JSON, falling back to string)
    key, sep, value = item.partition("=")
    if not sep:
        raise ConfigError(f"--set expects section.key=value, got {item!r}")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    node = doc
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set cannot descend into {part!r} of {item!r}")
    node[parts[-1]] = parsed


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    if stage not in STAGE_ORDER:
        raise ConfigError(f"unknown stage {stage!r}")
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, STAGE_ORDER.index(stage)])))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _csv_text(header: list[str], rows: list[list]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def _read_records(cfg: PipelineConfig) -> list[corpus.SubjectiveRecord]:
    return corpus.parse_records(cfg.paths.records.read_text())


# ---------------------------------------------------------------------------
# stage: signatures

def run_signatures(cfg: PipelineConfig) -> int:
    """Write the signature cache and the per-record landmark similarity
    table. Returns the number of undecodable photos (logged, not fatal)."""
    cfg.paths.require_inputs()
    records = _read_records(cfg)
    landmarks = signature.load_landmarks(cfg.paths.landmarks, cfg.signature)
    landmark_ids = landmarks.sorted_ids()
    rng = stage_rng(cfg.seed, "signatures")

    with_photo = sorted((r for r in records if r.photo), key=lambda r: r.id)
    streams = rng.spawn(len(with_photo)) if with_photo else []
    failures = 0
    sims_rows = []
    cache_sigs = [landmarks.get(lid) for lid in landmark_ids]
    for record, stream in zip(with_photo, streams):
        photo_path = cfg.paths.records.parent / record.photo
        try:
            sig = signature.build_signature(record.id, photo_path.read_bytes(), cfg.signature)
        except (DecodeError, OSError) as exc:
            print(f"[signatures] skipping {record.id}: {exc}", file=sys.stderr)
            failures += 1
            continue
        cache_sigs.append(sig)
        scores = signature.landmark_similarity_vector(
            sig, landmarks, cfg.signature.trials, stream, cfg.signature.aggregate)
        best_id = min(scores, key=lambda lid: (-scores[lid], lid))
        others = [scores[lid] for lid in landmark_ids if lid != best_id]
        background = float(np.mean(others)) if others else 0.0
        contrast = scores[best_id] - background
        sims_rows.append([record.id, best_id, repr(scores[best_id]), repr(contrast),
                          repr(background)] + [repr(scores[lid]) for lid in landmark_ids])

    header = ["id", "best_landmark", "best_score", "contrast", "background"]
    header += [f"sim_{lid}" for lid in landmark_ids]
    _write(cfg.paths.out / SIMILARITY_FILE, _csv_text(header, sims_rows))
    _write(cfg.paths.out / SIGNATURES_FILE, signature.dump_cache(cache_sigs))
    return failures


def read_similarities(out_dir: Path) -> dict:
    """Parse the similarity table into {record_id: row dict of floats}."""
    path = out_dir / SIMILARITY_FILE
    if not path.exists():
        raise ConfigError(f"missing {path}; run the signatures stage first")
    rows = {}
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {k: (v if k in ("id", "best_landmark") else float(v))
                      for k, v in row.items()}
            rows[row["id"]] = parsed
    return rows


# ---------------------------------------------------------------------------
# stage: csaim

def read_exemplars(path: Path) -> tuple[np.ndarray, np.ndarray]:
    if not path.exists():
        raise ConfigError(f"exemplars file does not exist: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "category":
            raise ConfigError(f"exemplars file needs a 'category,...' header: {path}")
        labels, rows = [], []
        for row in reader:
            labels.append(int(row[0]))
            rows.append([float(v) for v in row[1:]])
    if not rows:
        raise ConfigError(f"exemplars file has no rows: {path}")
    return np.asarray(rows), np.asarray(labels)


def similarity_vector(row: dict) -> np.ndarray:
    """CSAIM input for one record: the best landmark similarity embedded as
    (score, 1 - score). The classifier's range normalization needs at
    least two components, and the complement embedding keeps the high/low
    similarity categories on near-orthogonal rays it can separate."""
    best = row["best_score"]
    return np.array([best, 1.0 - best])


def run_csaim(cfg: PipelineConfig) -> list[immune.MemoryCell]:
    """Train memory cells on the exemplar file and classify every record's
    similarity vector."""
    X, labels = read_exemplars(cfg.paths.exemplars)
    rng = stage_rng(cfg.seed, "csaim")
    cells = immune.build_memory_cells(X, labels, cfg.csaim, cfg.memory, rng)
    _write(cfg.paths.out / CELLS_FILE, immune.dump_cells(cells))

    sims = read_similarities(cfg.paths.out)
    rows = []
    for rid in sorted(sims):
        category = immune.classify(cells, similarity_vector(sims[rid]), cfg.memory)
        rows.append([rid, UNRECOGNIZED if category is None else str(category)])
    _write(cfg.paths.out / CLASSIFICATION_FILE, _csv_text(["id", "category"], rows))
    return cells


def read_classification(out_dir: Path) -> dict:
    path = out_dir / CLASSIFICATION_FILE
    if not path.exists():
        raise ConfigError(f"missing {path}; run the csaim stage first")
    with path.open(newline="") as fh:
        return {row["id"]: row["category"] for row in csv.DictReader(fh)}


# ---------------------------------------------------------------------------
# stage: ghsom

def _features(cfg: PipelineConfig) -> tuple[list[str], dict]:
    records = _read_records(cfg)
    vocab = corpus.load_vocabulary(cfg.paths.vocabulary.read_text(),
                                   source=str(cfg.paths.vocabulary))
    if cfg.with_photos:
        sims = read_similarities(cfg.paths.out)
        landmark_sims = {rid: row["best_score"] for rid, row in sims.items()}
    else:
        landmark_sims = {}
    pairs = corpus.build_features(records, landmark_sims, vocab, cfg.with_photos)
    return [rid for rid, _ in pairs], dict(pairs)


def run_ghsom(cfg: PipelineConfig) -> ghsom.GhsomTree:
    ids, features = _features(cfg)
    X = np.stack([features[rid].as_array() for rid in ids])
    tree = ghsom.grow_hierarchy(ids, X, cfg.ghsom, stage_rng(cfg.seed, "ghsom"))
    _write(cfg.paths.out / TREE_FILE, ghsom.dump_tree(tree))
    _write(cfg.paths.out / TREE_TEXT_FILE, ghsom.render_text(tree))
    return tree


# ---------------------------------------------------------------------------
# stage: discover

def run_discover(cfg: PipelineConfig) -> corpus.DiscoveryResult:
    tree_path = cfg.paths.out / TREE_FILE
    if not tree_path.exists():
        raise ConfigError(f"missing {tree_path}; run the ghsom stage first")
    tree = ghsom.import_tree(json.loads(tree_path.read_text()), cfg.ghsom)
    ids, features = _features(cfg)
    result = corpus.discover(tree, features, cfg.discovery)
    categories = read_classification(cfg.paths.out)
    rows = []
    for rid in sorted(ids):
        fv = features[rid]
        rows.append([
            rid,
            result.record_units.get(rid, ""),
            result.record_groups[rid].value,
            repr(fv.image_sim),
            categories.get(rid, UNRECOGNIZED),
            repr(fv.tfidf),
            repr(fv.evaluation),
        ])
    header = ["id", "unit", "group", "image_sim", "csaim_category", "tfidf", "evaluation"]
    _write(cfg.paths.out / REPORT_FILE, _csv_text(header, rows))
    return result


# ---------------------------------------------------------------------------
# full pipeline

def run_pipeline(cfg: PipelineConfig) -> int:
    """All four stages in order, with per-stage timings on stderr. Returns
    the signatures stage's decode-failure count (pipeline exit status
    mirrors cmd_signatures)."""
    failures = 0
    for name, stage in (("signatures", run_signatures), ("csaim", run_csaim),
                        ("ghsom", run_ghsom), ("discover", run_discover)):
        t0 = time.perf_counter()
        out = stage(cfg)
        if name == "signatures":
            failures = out
        print(f"[{name}] {time.perf_counter() - t0:.2f}s ok", file=sys.stderr)
    return failures
