"""Session-oriented HTTP/JSON facade over the toolkit.

Each session is an isolated what-if world: its own grid, seed, policy
directive, mechanism, and simulation state. Requests within a session
serialize on a per-session lock; sessions never share mutable state.
"""
from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .audit import audit_geo_ind, audit_infinity, audit_location_set, audit_policy
from .grid import GridWorld, Partition, block_partition
from .ingest import synth_walk
from .mechanism import MechanismConfig, graph_exponential_matrix, identity_matrix, perturb
from .policy import (
    PolicyGraph,
    build_complete_policy,
    build_contact_policy,
    build_grid_policy,
    build_partition_policy,
    isolated_policy,
    random_policy,
)
from .seir import SeirParams
from .sim import BASELINE, ContactRule, ResendPendingError, World

DEFAULT_SIM_USERS = 10
DEFAULT_SIM_EPSILON = 1.0
DEFAULT_TICKS_PER_DAY = 24


def api_error(status: int, code: str, message: str, field_name: str | None = None):
    raise HTTPException(status, {"error_code": code, "message": message, "field": field_name})


class GridSpec(BaseModel):
    width: int
    height: int
    cell_size: float = 1.0


class CreateSession(BaseModel):
    grid: GridSpec
    seed: int = 0


class PolicyRequest(BaseModel):
    kind: str
    params: dict = {}


class PerturbRequest(BaseModel):
    cell: int
    epsilon: float
    seed: int | None = None


class AuditRequest(BaseModel):
    epsilon: float
    check: str
    cells: list[int] | None = None
    mechanism: str = "exponential"


class SimulateRequest(BaseModel):
    ticks: int
    users: int | None = None
    epsilon: float | None = None
    ticks_per_day: int | None = None
    contact_threshold: int | None = None


class TraceRequest(BaseModel):
    patient_id: int


@dataclass
class Session:
    id: str
    grid: GridWorld
    seed: int
    lock: threading.Lock = field(default_factory=threading.Lock)
    policy: PolicyGraph | None = None
    policy_epoch: int = 0
    policy_reason: str = BASELINE
    world: World | None = None
    perturb_count: int = 0
    trace_result: dict | None = None


class SessionRegistry:
    def __init__(self) -> None:
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, grid: GridWorld, seed: int) -> Session:
        session = Session(id=secrets.token_hex(8), grid=grid, seed=seed)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            api_error(404, "unknown_session", f"no session {sid!r}")
        return session


def _build_policy(session: Session, kind: str, params: dict) -> PolicyGraph:
    grid = session.grid
    if kind == "grid":
        return build_grid_policy(grid)
    if kind == "complete":
        cells = params.get("cells", list(grid.cells()))
        for c in cells:
            grid.require_cell(c)
        return build_complete_policy(cells)
    if kind == "partition":
        if "areas" in params:
            labels = params["areas"]
            if len(labels) != grid.n_cells:
                api_error(400, "bad_partition", "areas must list one label per cell", "params.areas")
            part = Partition.from_labels(labels)
        else:
            part = block_partition(grid, int(params.get("block", 2)))
        return build_partition_policy(grid, part)
    if kind == "contact":
        if session.policy is None:
            api_error(400, "no_policy", "contact policy needs a current base policy", "params")
        infected = params.get("infected", [])
        return build_contact_policy(session.policy, infected)
    if kind == "isolated":
        return isolated_policy(grid.cells())
    if kind == "random":
        prob = float(params.get("edge_prob", 0.5))
        seed = int(params.get("seed", session.seed))
        return random_policy(grid.cells(), prob, seed)
    if kind == "custom":
        nodes = params.get("nodes", list(grid.cells()))
        edges = params.get("edges", [])
        for c in nodes:
            grid.require_cell(c)
        return PolicyGraph.build(nodes, [tuple(e) for e in edges])
    api_error(400, "bad_kind", f"unknown policy kind {kind!r}", "kind")


def create_app() -> FastAPI:
    app = FastAPI(title="panda", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    registry = SessionRegistry()

    @app.exception_handler(HTTPException)
    async def _http_error(_request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"error_code": "error", "message": str(detail), "field": None}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", []) if p != "body")
        return JSONResponse(
            status_code=400,
            content={
                "error_code": "validation",
                "message": first.get("msg", "invalid request"),
                "field": loc or None,
            },
        )

    @app.post("/sessions")
    def create_session(body: CreateSession):
        try:
            grid = GridWorld(body.grid.width, body.grid.height, body.grid.cell_size)
        except ValueError as exc:
            api_error(400, "bad_grid", str(exc), "grid")
        session = registry.create(grid, body.seed)
        return {"session_id": session.id}

    def _policy_doc(session: Session) -> dict:
        doc = session.policy.to_dict() if session.policy else {"nodes": [], "edges": []}
        doc["epoch"] = session.policy_epoch
        doc["reason"] = session.policy_reason
        return doc

    @app.put("/sessions/{sid}/policy")
    def put_policy(sid: str, body: PolicyRequest):
        session = registry.get(sid)
        with session.lock:
            try:
                graph = _build_policy(session, body.kind, body.params)
            except ValueError as exc:
                api_error(400, "bad_policy", str(exc), "params")
            session.policy = graph
            session.policy_epoch += 1
            session.policy_reason = BASELINE
            if session.world is not None:
                try:
                    session.world.issue_policy(graph, reason=BASELINE)
                except ValueError as exc:
                    api_error(400, "bad_policy", str(exc), "params")
            return _policy_doc(session)

    @app.get("/sessions/{sid}/policy")
    def get_policy(sid: str):
        session = registry.get(sid)
        with session.lock:
            if session.policy is None:
                api_error(400, "no_policy", "no policy has been configured")
            return _policy_doc(session)

    @app.post("/sessions/{sid}/reject-policy")
    def reject_policy(sid: str):
        session = registry.get(sid)
        with session.lock:
            session.policy = None
            session.policy_epoch += 1
            if session.world is not None:
                session.world.reject_policy()
            return {"cleared": True, "epoch": session.policy_epoch}

    @app.post("/sessions/{sid}/perturb")
    def perturb_cell(sid: str, body: PerturbRequest):
        session = registry.get(sid)
        with session.lock:
            if session.policy is None:
                api_error(400, "no_policy", "configure a policy before perturbing")
            if body.epsilon < 0:
                api_error(400, "bad_epsilon", "epsilon must be nonnegative", "epsilon")
            if body.cell not in session.policy.nodes:
                api_error(400, "bad_cell", f"cell {body.cell} not in the policy graph", "cell")
            if body.seed is not None:
                seed = np.random.SeedSequence(body.seed)
            else:
                seed = np.random.SeedSequence(entropy=session.seed, spawn_key=(4, session.perturb_count))
                session.perturb_count += 1
            config = MechanismConfig(body.epsilon, session.policy)
            return {"released_cell": perturb(config, body.cell, seed)}

    @app.post("/sessions/{sid}/audit")
    def audit(sid: str, body: AuditRequest):
        session = registry.get(sid)
        with session.lock:
            if session.policy is None:
                api_error(400, "no_policy", "configure a policy before auditing")
            if body.epsilon < 0:
                api_error(400, "bad_epsilon", "epsilon must be nonnegative", "epsilon")
            if body.mechanism == "exponential":
                matrix = graph_exponential_matrix(MechanismConfig(body.epsilon, session.policy))
            elif body.mechanism == "identity":
                matrix = identity_matrix(session.policy.nodes)
            else:
                api_error(400, "bad_mechanism", f"unknown mechanism {body.mechanism!r}", "mechanism")
            try:
                if body.check == "policy":
                    report = audit_policy(matrix, session.policy, body.epsilon)
                elif body.check == "infinity":
                    report = audit_infinity(matrix, session.policy, body.epsilon)
                elif body.check == "geo":
                    report = audit_geo_ind(matrix, session.grid, body.epsilon)
                elif body.check == "set":
                    if not body.cells:
                        api_error(400, "bad_cells", "set check needs a cell list", "cells")
                    report = audit_location_set(matrix, body.cells, body.epsilon)
                else:
                    api_error(400, "bad_check", f"unknown check {body.check!r}", "check")
            except ValueError as exc:
                api_error(400, "bad_audit", str(exc))
            return report.to_dict()

    @app.post("/sessions/{sid}/simulate")
    def simulate(sid: str, body: SimulateRequest):
        session = registry.get(sid)
        with session.lock:
            if body.ticks < 1:
                api_error(400, "bad_ticks", "ticks must be >= 1", "ticks")
            if session.world is None:
                if session.policy is None:
                    api_error(400, "no_policy", "configure a policy before simulating")
                users = body.users or DEFAULT_SIM_USERS
                epsilon = DEFAULT_SIM_EPSILON if body.epsilon is None else body.epsilon
                horizon = max(body.ticks, 4096)  # walks extend by holding last position
                walks = synth_walk(session.grid, users, horizon, session.seed)
                try:
                    session.world = World(
                        session.grid,
                        walks,
                        session.policy,
                        epsilon,
                        session.seed,
                        ticks_per_day=body.ticks_per_day or DEFAULT_TICKS_PER_DAY,
                        contact_rule=ContactRule(body.contact_threshold or 2),
                    )
                except ValueError as exc:
                    api_error(400, "bad_world", str(exc))
            try:
                start, end = session.world.run(body.ticks)
            except ResendPendingError as exc:
                api_error(409, "resend_pending", str(exc))
            return {"start": start, "end": end}

    @app.post("/sessions/{sid}/trace")
    def trace(sid: str, body: TraceRequest):
        session = registry.get(sid)
        with session.lock:
            if session.world is None:
                api_error(400, "no_simulation", "simulate before tracing")
            try:
                result = session.world.trace(body.patient_id)
            except ValueError as exc:
                api_error(400, "bad_patient", str(exc), "patient_id")
            doc = {
                "patient": result.patient,
                "contacts": list(result.contacts),
                "at_risk": list(result.at_risk),
                "infected_cells": sorted(result.infected_cells),
                "disclosures": [
                    {"user": r.user, "tick": r.tick, "cell": r.cell} for r in result.disclosures
                ],
                "log": list(result.log),
            }
            session.trace_result = doc
            return doc

    @app.get("/sessions/{sid}/metrics")
    def metrics(sid: str):
        session = registry.get(sid)
        with session.lock:
            if session.world is None:
                api_error(400, "no_simulation", "simulate before fetching metrics")
            partition = block_partition(session.grid, 2)
            seir = SeirParams(0.3, 0.2, 0.1, 1000.0)
            return session.world.metrics(partition, seir)

    @app.get("/sessions/{sid}/stream")
    def stream(sid: str, start: int = 0, end: int | None = None):
        session = registry.get(sid)
        with session.lock:
            if session.world is None:
                api_error(400, "no_simulation", "simulate before fetching the stream")
            world = session.world
            last = world.now - 1 if end is None else end
            released = {(r.user, r.tick): r.cell for r in world.observed}
            records = [
                {
                    "user": r.user,
                    "tick": r.tick,
                    "true_cell": r.cell,
                    "released_cell": released.get((r.user, r.tick)),
                }
                for r in world.true_records
                if start <= r.tick <= last
            ]
            return {"start": start, "end": last, "records": records}

    return app


app = create_app()
