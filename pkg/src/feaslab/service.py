"""Local HTTP/JSON service for interactive multi-pass sessions.

One JSON document per session under --state-dir; passes execute
synchronously under a per-session lock.  All endpoints live under /v1.
Error bodies are {"code", "message", "field"?}: 400 for schema violations,
422 for domain violations, 404 unknown session, 409 for out-of-order or
concurrent passes.
"""

from __future__ import annotations

import datetime as _dt
import threading
import uuid
from fractions import Fraction
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .engine import create_session, run_first_pass, run_later_pass
from .harness import _build_source  # shared source construction
from .multipass import Heuristic
from .odds import Classification, ErrorSplitScheme, classify
from .streams import StreamKey
from .types import (
    Decision,
    PassPlan,
    PassResult,
    ProblemSpec,
    SamplingMode,
    SessionState,
    SystemState,
    threshold_str,
)

_DECISION_TEXT = {1: "feasible", 0: "infeasible", -1: "pending"}
_LAST_TEXT = {0: "none", 1: "lb", 2: "ub"}


class DomainError(ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ConflictError(RuntimeError):
    pass


class NotFoundError(KeyError):
    pass


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class SessionRecord:
    """One stored session plus its runtime lock and status."""

    def __init__(self, sid: str, session: SessionState, source_body: dict,
                 truth: list[list[float]] | None, created: str,
                 first_plan: list[list[str]] | None = None):
        self.id = sid
        self.session = session
        self.source_body = source_body
        self.truth = truth
        self.created = created
        self.updated = created
        self.status = "idle"  # idle | running_pass | complete
        self.first_plan = first_plan  # pass-1 thresholds, until the pass runs
        self.lock = threading.Lock()

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        spec = self.session.spec
        return {
            "version": 1,
            "id": self.id,
            "created": self.created,
            "updated": self.updated,
            "status": "idle" if self.status == "running_pass" else self.status,
            "spec": {
                "k": spec.k,
                "s": spec.s,
                "alpha": spec.alpha,
                "theta": list(spec.theta),
                "sampling": spec.sampling_mode.value,
                "split_scheme": spec.split_scheme.value,
                "expect_more_passes": spec.expect_more_passes,
                "obs_cap": spec.obs_cap,
            },
            "source": self.source_body,
            "truth": self.truth,
            "first_plan": self.first_plan,
            "halfwidths": list(self.session.halfwidths),
            "budgets": [repr(b) for b in self.session.budgets],
            "states": [_state_to_json(st) for st in self.session.states],
            "history": [_pass_to_json(p) for p in self.session.history],
        }

    @classmethod
    def from_json(cls, body: dict) -> "SessionRecord":
        spec_body = body["spec"]
        spec = ProblemSpec(
            k=spec_body["k"],
            s=spec_body["s"],
            alpha=spec_body["alpha"],
            theta=tuple(spec_body["theta"]),
            sampling_mode=SamplingMode(spec_body["sampling"]),
            split_scheme=ErrorSplitScheme(spec_body["split_scheme"]),
            expect_more_passes=spec_body["expect_more_passes"],
            obs_cap=spec_body["obs_cap"],
        )
        session = SessionState(
            spec=spec,
            halfwidths=list(body["halfwidths"]),
            budgets=[float(Fraction(b)) for b in body["budgets"]],
            states=[_state_from_json(st, spec.s) for st in body["states"]],
        )
        rec = cls(
            sid=body["id"],
            session=session,
            source_body=body["source"],
            truth=body.get("truth"),
            created=body["created"],
            first_plan=body.get("first_plan"),
        )
        rec.updated = body["updated"]
        rec.status = body["status"]
        for p in body["history"]:
            session.record(_pass_from_json(p))
        return rec


def _state_to_json(st: SystemState) -> dict:
    return {
        "r": st.r,
        "sum_y": st.sum_y,
        "v_lb": [{"num": n, "den": d} for n, d in zip(st.lb_num, st.lb_den)],
        "v_ub": [{"num": n, "den": d} for n, d in zip(st.ub_num, st.ub_den)],
        "last": [_LAST_TEXT[v] for v in st.last],
        "seeds": {
            "y": {"seed": str(st.y_key.seed), "stream_id": str(st.y_key.stream_id)},
            "u": {"seed": str(st.u_key.seed), "stream_id": str(st.u_key.stream_id)},
        },
    }


def _state_from_json(body: dict, s: int) -> SystemState:
    inv_last = {v: k for k, v in _LAST_TEXT.items()}
    return SystemState(
        r=body["r"],
        sum_y=list(body["sum_y"]),
        lb_num=[f["num"] for f in body["v_lb"]],
        lb_den=[f["den"] for f in body["v_lb"]],
        ub_num=[f["num"] for f in body["v_ub"]],
        ub_den=[f["den"] for f in body["v_ub"]],
        last=[inv_last[v] for v in body["last"]],
        y_key=StreamKey(int(body["seeds"]["y"]["seed"]), int(body["seeds"]["y"]["stream_id"])),
        u_key=StreamKey(int(body["seeds"]["u"]["seed"]), int(body["seeds"]["u"]["stream_id"])),
    )


def _pass_to_json(p: PassResult) -> dict:
    return {
        "pass_index": p.pass_index,
        "heuristic": p.heuristic,
        "thresholds": [[threshold_str(h) for h in row] for row in p.plan.thresholds],
        "decisions": [
            [[_DECISION_TEXT[z] for z in row] for row in sys_rows] for sys_rows in p.decisions
        ],
        "stages": p.stages,
        "decided_by": p.decided_by,
        "obs_new": p.obs_new,
        "r_after": p.r_after,
        "capped": p.capped,
    }


def _pass_from_json(body: dict) -> PassResult:
    inv = {v: k for k, v in _DECISION_TEXT.items()}
    plan = PassPlan.parse(body["thresholds"], pass_index=body["pass_index"])
    return PassResult(
        pass_index=body["pass_index"],
        heuristic=body["heuristic"],
        plan=plan,
        decisions=[[[inv[z] for z in row] for row in sys_rows] for sys_rows in body["decisions"]],
        stages=body["stages"],
        decided_by=body["decided_by"],
        obs_new=body["obs_new"],
        r_after=body["r_after"],
        capped=body["capped"],
    )


class SessionStore:
    def __init__(self, state_dir: str | Path):
        self.dir = Path(state_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._records: dict[str, SessionRecord] = {}
        self._store_lock = threading.Lock()

    def persist(self, rec: SessionRecord) -> None:
        import json

        rec.updated = _now()
        path = self.dir / f"{rec.id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(rec.to_json(), indent=None, sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def get(self, sid: str) -> SessionRecord:
        import json

        with self._store_lock:
            if sid in self._records:
                return self._records[sid]
            path = self.dir / f"{sid}.json"
            if not path.exists():
                raise NotFoundError(sid)
            rec = SessionRecord.from_json(json.loads(path.read_text(encoding="utf-8")))
            self._records[sid] = rec
            return rec

    def add(self, rec: SessionRecord) -> None:
        with self._store_lock:
            self._records[rec.id] = rec
        self.persist(rec)


def _parse_plan_body(body: Any, s: int, pass_index: int) -> PassPlan:
    if not isinstance(body, dict) or "thresholds" not in body:
        raise DomainError("plan requires a thresholds field", "plan.thresholds")
    rows = body["thresholds"]
    if not isinstance(rows, list) or len(rows) != s:
        raise DomainError(f"need one threshold list per constraint ({s})", "plan.thresholds")
    try:
        return PassPlan.parse(rows, pass_index=pass_index)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(str(exc), "plan.thresholds") from exc


def _annotations(rec: SessionRecord) -> list | None:
    """Per (system, constraint, threshold) truth classification when a truth
    matrix is configured."""
    if rec.truth is None:
        return None
    spec = rec.session.spec
    out = []
    for p in rec.session.history:
        entry = []
        for i in range(spec.k):
            rows = []
            for ell, row in enumerate(p.plan.thresholds):
                labels = []
                for h in row:
                    cls = classify(rec.truth[i][ell], float(h), spec.theta[ell])
                    labels.append(
                        {
                            Classification.DESIRABLE: "desirable",
                            Classification.ACCEPTABLE: "acceptable",
                            Classification.UNACCEPTABLE: "unacceptable",
                        }[cls]
                    )
                rows.append(labels)
            entry.append(rows)
        out.append(entry)
    return out


def snapshot(rec: SessionRecord) -> dict:
    body = rec.to_json()
    body["status"] = rec.status
    body["obs_cumulative"] = [st.r for st in rec.session.states]
    ann = _annotations(rec)
    if ann is not None:
        body["truth_classes"] = ann
    return body


def create_app(state_dir: str | Path = "feaslab-sessions") -> FastAPI:
    app = FastAPI(title="feaslab session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["http://localhost", "http://127.0.0.1"],
        allow_origin_regex=r"http://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(state_dir)
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def _schema_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "schema_violation", "message": str(exc.errors()[:1])},
        )

    @app.exception_handler(DomainError)
    async def _domain_error(_req: Request, exc: DomainError):
        body = {"code": "domain_violation", "message": str(exc)}
        if exc.field:
            body["field"] = exc.field
        return JSONResponse(status_code=422, content=body)

    @app.exception_handler(NotFoundError)
    async def _not_found(_req: Request, exc: NotFoundError):
        return JSONResponse(
            status_code=404,
            content={"code": "not_found", "message": f"unknown session {exc.args[0]}"},
        )

    @app.exception_handler(ConflictError)
    async def _conflict(_req: Request, exc: ConflictError):
        return JSONResponse(status_code=409, content={"code": "conflict", "message": str(exc)})

    @app.get("/v1/healthz")
    async def healthz():
        from .backend import backend_name

        return {"status": "ok", "backend": backend_name()}

    @app.post("/v1/sessions", status_code=201)
    async def create(body: dict):
        missing = [f for f in ("spec", "source", "plan") if f not in body]
        if missing:
            return JSONResponse(
                status_code=400,
                content={
                    "code": "schema_violation",
                    "message": f"missing required fields: {', '.join(missing)}",
                    "field": missing[0],
                },
            )
        spec_body = body["spec"]
        try:
            source = _build_source(body["source"])
        except (KeyError, ValueError) as exc:
            raise DomainError(str(exc), "source") from exc
        try:
            spec = ProblemSpec(
                k=source.k,
                s=source.s,
                alpha=float(spec_body["alpha"]),
                theta=tuple(float(t) for t in spec_body["theta"]),
                sampling_mode=SamplingMode(spec_body.get("sampling", "independent")),
                split_scheme=ErrorSplitScheme(
                    spec_body.get("split_scheme", "per-constraint")
                ),
                expect_more_passes=bool(spec_body.get("expect_more_passes", True)),
                obs_cap=spec_body.get("obs_cap"),
            )
        except (KeyError, TypeError) as exc:
            return JSONResponse(
                status_code=400,
                content={"code": "schema_violation", "message": str(exc), "field": "spec"},
            )
        except ValueError as exc:
            raise DomainError(str(exc), "spec") from exc
        plan = _parse_plan_body(body["plan"], spec.s, 1)
        truth = body.get("truth")
        if truth is not None:
            if len(truth) != spec.k or any(len(row) != spec.s for row in truth):
                raise DomainError("truth matrix must be k x s", "truth")
        seed = int(body.get("seed", 0))
        session = create_session(spec, source, plan.counts, seed)
        sid = uuid.uuid4().hex[:12]
        rec = SessionRecord(
            sid, session, body["source"], truth, _now(),
            first_plan=[[threshold_str(h) for h in row] for row in plan.thresholds],
        )
        store.add(rec)
        return {"id": sid}

    def _first_plan(rec: SessionRecord) -> PassPlan | None:
        if rec.first_plan is not None:
            return PassPlan.parse(rec.first_plan, pass_index=1)
        return None

    @app.post("/v1/sessions/{sid}/passes")
    async def run_pass(sid: str, body: dict | None = None):
        rec = store.get(sid)
        body = body or {}
        if not rec.lock.acquire(blocking=False):
            raise ConflictError("a pass is already running for this session")
        try:
            if rec.status == "running_pass":
                raise ConflictError("a pass is already running for this session")
            next_index = rec.session.next_pass_index
            requested = body.get("pass_index")
            if requested is not None and int(requested) != next_index:
                raise ConflictError(
                    f"next pass is {next_index}, got request for pass {requested}"
                )
            source = _build_source(rec.source_body)
            rec.status = "running_pass"
            try:
                if next_index == 1:
                    plan = (
                        _parse_plan_body(body["plan"], rec.session.spec.s, 1)
                        if "plan" in body
                        else _first_plan(rec)
                    )
                    if plan is None:
                        raise DomainError("pass 1 needs a plan", "plan")
                    result = run_first_pass(rec.session, plan, source)
                else:
                    if "plan" not in body:
                        raise DomainError("later passes need a plan", "plan")
                    if "heuristic" not in body:
                        raise DomainError("later passes need a heuristic", "heuristic")
                    try:
                        heuristic = Heuristic(str(body["heuristic"]).lower())
                    except ValueError as exc:
                        raise DomainError(
                            f"unknown heuristic {body['heuristic']!r}", "heuristic"
                        ) from exc
                    plan = _parse_plan_body(body["plan"], rec.session.spec.s, next_index)
                    import warnings as _w

                    with _w.catch_warnings():
                        _w.simplefilter("ignore")
                        result = run_later_pass(rec.session, plan, heuristic, source)
            finally:
                rec.status = "idle"
            store.persist(rec)
            return _pass_to_json(result)
        finally:
            rec.lock.release()

    @app.get("/v1/sessions/{sid}")
    async def get_session(sid: str):
        return snapshot(store.get(sid))

    @app.get("/v1/sessions/{sid}/passes/{w}")
    async def get_pass(sid: str, w: int):
        rec = store.get(sid)
        if w < 1 or w > len(rec.session.history):
            raise NotFoundError(f"{sid}/passes/{w}")
        return _pass_to_json(rec.session.history[w - 1])

    return app


def main(argv=None) -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="feaslab session service")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--state-dir", default="feaslab-sessions")
    args = parser.parse_args(argv)
    uvicorn.run(create_app(args.state_dir), host="127.0.0.1", port=args.port)


if __name__ == "__main__":
    main()
