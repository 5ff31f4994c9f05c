"""Subjective-record data model, comment scoring and spot discovery.

Records are one tourist observation each (GPS, name, 0..4 rating, free
comment, optional photo). Comments are scored against a landmark
vocabulary with tf-idf, records become normalized feature vectors for
the map hierarchy, and the three-group rule tags each record as a
famous spot, a cryptic spot (highly rated and talked about, but not
matching any landmark photo) or low interest.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, MissingFeatureError, ParseError, RangeError
from . import ghsom

RECORD_HEADER = ["id", "lat", "lon", "name", "evaluation", "comment", "photo"]

_TOKEN = re.compile(r"[^\W\d_]+", re.UNICODE)


@dataclass(frozen=True)
class SubjectiveRecord:
    id: str
    lat: float
    lon: float
    location_name: str
    evaluation: int
    comment: str
    photo: str | None = None


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple
    source: str = ""

    def __post_init__(self):
        lowered = [t.lower() for t in self.terms]
        if len(set(lowered)) != len(lowered):
            raise ConfigError("vocabulary terms must be unique")
        object.__setattr__(self, "terms", tuple(lowered))


@dataclass(frozen=True)
class FeatureVector:
    """Normalized per-record input: (geo_lat, geo_lon, tfidf, evaluation,
    image_sim), each in [0, 1]. Without photos image_sim is fixed at 0,
    which drops it from every Euclidean distance."""

    geo: tuple
    tfidf: float
    evaluation: float
    image_sim: float

    def as_array(self) -> np.ndarray:
        return np.array([self.geo[0], self.geo[1], self.tfidf,
                         self.evaluation, self.image_sim])


@dataclass(frozen=True)
class DiscoveryThresholds:
    sim_hi: float = 0.6
    tfidf_hi: float = 0.5
    eval_hi: float = 0.75

    def __post_init__(self):
        for name in ("sim_hi", "tfidf_hi", "eval_hi"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"{name} must be in (0, 1), got {v}")


class SpotGroup(str, Enum):
    FAMOUS = "FamousSpot"
    CRYPTIC = "CrypticSpot"
    LOW_INTEREST = "LowInterest"
    MIXED = "Mixed"


# ---------------------------------------------------------------------------
# record files

def parse_records(text: str) -> list[SubjectiveRecord]:
    """Parse the records CSV. Malformed rows raise ParseError / RangeError
    carrying the 1-based file line number. A file with no rows (or only a
    header) yields an empty list."""
    stripped = text.strip()
    if not stripped:
        return []
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if [c.strip() for c in rows[0]] != RECORD_HEADER:
        raise ParseError(1, f"expected header {','.join(RECORD_HEADER)}")
    records = []
    seen = set()
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(RECORD_HEADER):
            raise ParseError(line_no, f"expected {len(RECORD_HEADER)} fields, got {len(row)}")
        rid, lat_s, lon_s, name, eval_s, comment, photo = row
        if not rid:
            raise ParseError(line_no, "empty record id")
        if rid in seen:
            raise ParseError(line_no, f"duplicate record id {rid!r}")
        seen.add(rid)
        try:
            lat, lon = float(lat_s), float(lon_s)
        except ValueError:
            raise ParseError(line_no, f"bad coordinates {lat_s!r},{lon_s!r}") from None
        if not -90.0 <= lat <= 90.0:
            raise RangeError(line_no, f"latitude {lat} outside [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            raise RangeError(line_no, f"longitude {lon} outside [-180, 180]")
        if not eval_s.isdigit() or not 0 <= int(eval_s) <= 4:
            raise RangeError(line_no, f"evaluation {eval_s!r} outside 0..4")
        records.append(SubjectiveRecord(id=rid, lat=lat, lon=lon, location_name=name,
                                        evaluation=int(eval_s), comment=comment,
                                        photo=photo or None))
    return records


def serialize_records(records: list[SubjectiveRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in records:
        writer.writerow([r.id, repr(r.lat), repr(r.lon), r.location_name,
                         str(r.evaluation), r.comment, r.photo or ""])
    return out.getvalue()


def load_vocabulary(text: str, source: str = "") -> Vocabulary:
    terms = []
    seen = set()
    for line in text.splitlines():
        term = line.strip().lower()
        if term and term not in seen:
            seen.add(term)
            terms.append(term)
    return Vocabulary(terms=tuple(terms), source=source)


# ---------------------------------------------------------------------------
# tf-idf comment scoring

def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _raw_tfidf(tokens: list[str], doc_freq: dict, n_docs: int, vocab: Vocabulary) -> float:
    if not tokens:
        n_tokens = 1
    else:
        n_tokens = len(tokens)
    score = 0.0
    for term in vocab.terms:
        count = tokens.count(term)
        if count == 0:
            continue
        tf = count / n_tokens
        idf = math.log(n_docs / (1 + doc_freq.get(term, 0))) + 1.0
        score += tf * idf
    return score


def tfidf_scores(comments: list[str], vocab: Vocabulary) -> list[float]:
    """Vocabulary-restricted tf-idf of every comment, scaled so the
    highest-scoring comment is exactly 1.0 (all zeros stay zero)."""
    if not comments:
        raise ConfigError("tf-idf needs a non-empty corpus")
    token_lists = [tokenize(c) for c in comments]
    doc_freq: dict[str, int] = {}
    for term in vocab.terms:
        doc_freq[term] = sum(1 for toks in token_lists if term in toks)
    raw = [_raw_tfidf(toks, doc_freq, len(comments), vocab) for toks in token_lists]
    top = max(raw)
    if top == 0.0:
        return [0.0] * len(raw)
    return [r / top for r in raw]


def tfidf_score(comment: str, corpus: list[str], vocab: Vocabulary) -> float:
    """Score of one comment against the given corpus (the comment must be
    scored with, not added to, the corpus statistics)."""
    if not corpus:
        raise ConfigError("tf-idf needs a non-empty corpus")
    token_lists = [tokenize(c) for c in corpus]
    doc_freq = {t: sum(1 for toks in token_lists if t in toks) for t in vocab.terms}
    raw_corpus = [_raw_tfidf(toks, doc_freq, len(corpus), vocab) for toks in token_lists]
    raw = _raw_tfidf(tokenize(comment), doc_freq, len(corpus), vocab)
    top = max(raw_corpus)
    if top == 0.0:
        return 0.0
    return raw / top


# ---------------------------------------------------------------------------
# feature assembly

def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def build_features(records: list[SubjectiveRecord], landmark_sims: dict,
                   vocab: Vocabulary, with_photos: bool) -> list[tuple]:
    """(record_id, FeatureVector) pairs in record order. Geo components are
    min-max normalized over the dataset; evaluation is raw/4; image_sim is
    the record's landmark similarity score (0 without photos)."""
    if len(records) < 2:
        raise ConfigError("feature normalization needs at least 2 records")
    if with_photos:
        for r in records:
            if r.id not in landmark_sims:
                raise MissingFeatureError(r.id)
    lat = _minmax(np.array([r.lat for r in records]))
    lon = _minmax(np.array([r.lon for r in records]))
    tfidf = tfidf_scores([r.comment for r in records], vocab)
    out = []
    for i, r in enumerate(records):
        sim = float(landmark_sims[r.id]) if with_photos else 0.0
        out.append((r.id, FeatureVector(geo=(float(lat[i]), float(lon[i])),
                                        tfidf=tfidf[i],
                                        evaluation=r.evaluation / 4.0,
                                        image_sim=sim)))
    return out


# ---------------------------------------------------------------------------
# discovery

def group_of(fv: FeatureVector, th: DiscoveryThresholds) -> SpotGroup:
    sim_hi = fv.image_sim >= th.sim_hi
    tfidf_hi = fv.tfidf >= th.tfidf_hi
    eval_hi = fv.evaluation >= th.eval_hi
    if sim_hi and tfidf_hi and eval_hi:
        return SpotGroup.FAMOUS
    if not sim_hi and tfidf_hi and eval_hi:
        return SpotGroup.CRYPTIC
    if not sim_hi and not tfidf_hi and not eval_hi:
        return SpotGroup.LOW_INTEREST
    return SpotGroup.MIXED


@dataclass
class DiscoveryResult:
    record_groups: dict       # record id -> SpotGroup
    unit_groups: dict         # leaf unit path label -> SpotGroup
    record_units: dict        # record id -> leaf unit path label


def _walk_leaves(som: ghsom.SomMap, hops: tuple, out: list) -> None:
    for unit in som.units():
        unit_hops = hops + ((unit.col, unit.row),)
        child = som.children.get((unit.row, unit.col))
        if child is None:
            out.append((unit_hops, list(unit.mapped)))
        else:
            _walk_leaves(child, unit_hops, out)


def discover(tree: ghsom.GhsomTree, features: dict,
             th: DiscoveryThresholds) -> DiscoveryResult:
    """Tag every record with its group and every leaf unit with the modal
    group of its records (ties and empty units render as Mixed)."""
    record_groups = {rid: group_of(fv, th) for rid, fv in features.items()}
    leaves: list[tuple] = []
    _walk_leaves(tree.root, (), leaves)
    unit_groups = {}
    record_units = {}
    for hops, sample_ids in leaves:
        label = ghsom.format_unit_label(hops, len(sample_ids))
        for rid in sample_ids:
            record_units[rid] = label
        tally: dict[SpotGroup, int] = {}
        for rid in sample_ids:
            g = record_groups[rid]
            tally[g] = tally.get(g, 0) + 1
        if not tally:
            unit_groups[label] = SpotGroup.MIXED
            continue
        top = max(tally.values())
        winners = [g for g, n in tally.items() if n == top]
        unit_groups[label] = winners[0] if len(winners) == 1 else SpotGroup.MIXED
    return DiscoveryResult(record_groups=record_groups, unit_groups=unit_groups,
                           record_units=record_units)
