"""Interactive session service.

Serves the trained pipeline state over HTTP and applies user-driven unit
expansions, one mutation at a time per session. Unit paths travel as
percent-encoded bracket labels ("[R][01]" -> "%5BR%5D%5B01%5D").

Endpoints:
  POST /sessions                          create from a pipeline config
  GET  /sessions/{sid}/tree               tree export + revision
  GET  /sessions/{sid}/units/{path}       unit detail
  POST /sessions/{sid}/units/{path}/expand
  GET  /sessions/{sid}/events             append-only mutation log
"""

from __future__ import annotations

import copy
import hashlib
import json
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import corpus, ghsom, pipeline
from .errors import CrypticSpotsError, EmptyUnitError, PathError


def expand_rng(seed: int, revision: int, path_label: str) -> np.random.Generator:
    """Deterministic per-expansion stream so replaying the event log
    reproduces the tree exactly."""
    digest = hashlib.sha256(path_label.encode()).digest()
    entropy = [seed, revision, int.from_bytes(digest[:8], "big")]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass
class SessionState:
    session_id: str
    config: pipeline.PipelineConfig
    tree: ghsom.GhsomTree
    initial_tree: ghsom.GhsomTree
    records: dict
    features: dict
    revision: int = 0
    events: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def discovery(self) -> corpus.DiscoveryResult:
        return corpus.discover(self.tree, self.features, self.config.discovery)


def build_session_state(cfg: pipeline.PipelineConfig, session_id: str) -> SessionState:
    """Train (or reuse) the pipeline artifacts this session explores. The
    similarity table is computed on the fly when the signatures stage has
    not run yet."""
    records = {r.id: r for r in corpus.parse_records(cfg.paths.records.read_text())}
    if cfg.with_photos and not (cfg.paths.out / pipeline.SIMILARITY_FILE).exists():
        pipeline.run_signatures(cfg)
    ids, features = pipeline._features(cfg)
    X = np.stack([features[rid].as_array() for rid in ids])
    tree = ghsom.grow_hierarchy(ids, X, cfg.ghsom, pipeline.stage_rng(cfg.seed, "ghsom"))
    return SessionState(session_id=session_id, config=cfg, tree=tree,
                        initial_tree=copy.deepcopy(tree), records=records,
                        features=features)


def replay_events(state: SessionState) -> ghsom.GhsomTree:
    """Re-apply the event log to a copy of the initial tree; the result
    must match the live tree bit for bit."""
    tree = copy.deepcopy(state.initial_tree)
    for event in state.events:
        hops, _ = ghsom.parse_path(event["path"])
        ghsom.expand_unit(tree, hops,
                          expand_rng(state.config.seed, event["revision"], event["path"]))
    return tree


def tree_digest(tree: ghsom.GhsomTree) -> str:
    return hashlib.sha256(ghsom.dump_tree(tree).encode()).hexdigest()


class CreateSessionRequest(BaseModel):
    config_path: str | None = None
    config: dict | None = None
    base_dir: str | None = None
    seed: int | None = None


def create_app(snapshot_dir: Path | None = None) -> FastAPI:
    sessions: dict[str, SessionState] = {}

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        if snapshot_dir is not None:
            snapshot_dir.mkdir(parents=True, exist_ok=True)
            for sid, state in sessions.items():
                doc = {"session_id": sid, "revision": state.revision,
                       "events": state.events, "tree": ghsom.export_tree(state.tree)}
                (snapshot_dir / f"{sid}.json").write_text(json.dumps(doc, sort_keys=True))

    app = FastAPI(title="crypticspots session service", lifespan=lifespan)
    counter = {"n": 0}
    registry_lock = threading.Lock()

    def get_session(sid: str) -> SessionState:
        state = sessions.get(sid)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid!r}")
        return state

    def parse_unit_path(raw: str) -> tuple:
        try:
            hops, _ = ghsom.parse_path(raw)
        except PathError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return hops

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            if req.config_path:
                cfg = pipeline.load_config(Path(req.config_path), seed_override=req.seed)
            elif req.config is not None:
                base = Path(req.base_dir) if req.base_dir else Path.cwd()
                cfg = pipeline.config_from_dict(req.config, base, seed_override=req.seed)
            else:
                raise HTTPException(status_code=422,
                                    detail="provide config_path or config")
            with registry_lock:
                counter["n"] += 1
                sid = f"s-{counter['n']:04d}"
            state = build_session_state(cfg, sid)
        except CrypticSpotsError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        sessions[sid] = state
        return {"session_id": sid, "revision": state.revision}

    @app.get("/sessions/{sid}/tree")
    def get_tree(sid: str, revision: int | None = None):
        state = get_session(sid)
        with state.lock:
            export = ghsom.export_tree(state.tree)
            groups = {label: group.value
                      for label, group in state.discovery().unit_groups.items()}
            return {"session_id": sid, "revision": state.revision, "tree": export,
                    "dominant_groups": groups}

    @app.get("/sessions/{sid}/units/{path}")
    def get_unit(sid: str, path: str):
        state = get_session(sid)
        hops = parse_unit_path(path)
        with state.lock:
            disc = state.discovery()
            if not hops:  # "[R]": the root map summary
                ids = sorted(state.features)
                return {"path": "[R]", "label": "[R]", "count": len(ids),
                        "qe": state.tree.qe_root, "sample_ids": ids,
                        "records": [_record_payload(state, rid, disc) for rid in ids],
                        "has_child": True}
            try:
                som, row, col = ghsom.resolve_unit(state.tree, hops)
            except PathError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            unit = som.unit(row, col)
            label = ghsom.format_unit_label(hops, unit.n_mapped)
            return {
                "path": ghsom.format_path(hops),
                "label": label,
                "count": unit.n_mapped,
                "qe": unit.qe,
                "weight": [float(v) for v in unit.weight],
                "sample_ids": list(unit.mapped),
                "records": [_record_payload(state, rid, disc) for rid in unit.mapped],
                "dominant_group": disc.unit_groups.get(label, corpus.SpotGroup.MIXED).value
                if unit.child is None else None,
                "has_child": unit.child is not None,
            }

    @app.post("/sessions/{sid}/units/{path}/expand")
    def post_expand(sid: str, path: str):
        state = get_session(sid)
        hops = parse_unit_path(path)
        if not hops:
            raise HTTPException(status_code=422, detail="the root map cannot be expanded")
        if not state.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail={
                "message": "another mutation is in flight", "revision": state.revision})
        try:
            label = ghsom.format_path(hops)
            rng = expand_rng(state.config.seed, state.revision + 1, label)
            try:
                _, changed = ghsom.expand_unit(state.tree, hops, rng)
            except (PathError, EmptyUnitError, CrypticSpotsError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            state.revision += 1
            state.events.append({"revision": state.revision, "operation": "expand",
                                 "path": label})
            return {"revision": state.revision, "changed_paths": changed}
        finally:
            state.lock.release()

    @app.get("/sessions/{sid}/events")
    def get_events(sid: str):
        state = get_session(sid)
        with state.lock:
            return {"session_id": sid, "revision": state.revision,
                    "events": list(state.events)}

    app.state.sessions = sessions
    return app


def _record_payload(state: SessionState, rid: str, disc: corpus.DiscoveryResult) -> dict:
    r = state.records[rid]
    fv = state.features[rid]
    return {
        "id": rid,
        "name": r.location_name,
        "lat": r.lat,
        "lon": r.lon,
        "evaluation": r.evaluation,
        "comment": r.comment,
        "group": disc.record_groups[rid].value,
        "image_sim": fv.image_sim,
        "tfidf": fv.tfidf,
    }
