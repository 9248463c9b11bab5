"""HTTP session service: live embedding sessions for interactive clients.

Each session owns a dataset, its fuzzy graph, one embedding state and one
optimizer task. Clients create a session, watch frames stream while the
layout optimizes, submit must-link/cannot-link records (which cancel the
current run at an epoch boundary and warm-restart), then trigger clustering
and read per-cluster explanations.

Endpoints:
    POST   /sessions                      create (dataset upload or generator spec)
    GET    /sessions/{id}                 status and metadata
    GET    /sessions/{id}/frames          NDJSON frame stream
    POST   /sessions/{id}/constraints     per-record verdicts, schedules warm restart
    POST   /sessions/{id}/cluster         DBSCAN + explanations
    DELETE /sessions/{id}

The listen port comes from the IPBC_PORT environment variable (default 8787).
"""

from __future__ import annotations

import json
import os
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .clustering import DEFAULT_MIN_PTS, dbscan, suggest_eps
from .constraints import (
    CANNOT_LINK,
    MUST_LINK,
    Constraint,
    ConstraintConflictError,
    ConstraintError,
    ConstraintSet,
)
from .dataset import Dataset, DatasetError, generate_blobs, load_csv
from .embedding import (
    EmbeddingState,
    Frame,
    OptimizerParams,
    init_layout,
    optimize,
    total_loss_breakdown,
    warm_restart,
)
from .explain import ExplainError, explain_cluster
from .neighbors import DEFAULT_N_NEIGHBORS, build_knn, fuzzy_symmetrize

DEFAULT_PORT = 8787
MAX_SESSIONS = 4
MAX_POINTS = 20000
MIN_EXPLAIN = 2

# Frame fan-out throttle: at most 10 frames per second per session, final
# frames always delivered.
MIN_FRAME_INTERVAL_S = 0.1

IDLE = "idle"
OPTIMIZING = "optimizing"
ERROR = "error"


class Subscriber:
    """Per-client frame queue with a strictly-increasing epoch guard.

    The guard lives here rather than in the HTTP layer so every consumer,
    including white-box tests, observes monotone epochs across warm
    restarts (the restart's first snapshot repeats the cancelled run's
    final epoch and must be dropped).
    """

    __slots__ = ("queue", "last_epoch")

    def __init__(self, last_epoch: int = -1):
        self.queue: queue.Queue = queue.Queue()
        self.last_epoch = last_epoch

    def offer(self, payload: dict | None) -> None:
        if payload is None:
            self.queue.put(None)
            return
        if payload["epoch"] > self.last_epoch:
            self.last_epoch = payload["epoch"]
            self.queue.put(payload)


def _frame_payload(session_id: str, frame: Frame) -> dict:
    coords32 = frame.coords.astype(np.float32)
    return {
        "session_id": session_id,
        "epoch": frame.epoch,
        "coords": [[float(x), float(y)] for x, y in coords32],
        "loss_total": frame.loss_total,
        "loss_umap": frame.loss_umap,
        "loss_ml": frame.loss_ml,
        "loss_cl": frame.loss_cl,
    }


@dataclass
class Session:
    session_id: str
    dataset: Dataset
    graph: object
    state: EmbeddingState
    cs: ConstraintSet
    params: OptimizerParams
    min_pts: int = DEFAULT_MIN_PTS
    status: str = IDLE
    error: str | None = None
    lock: threading.RLock = field(default_factory=threading.RLock)
    # Serializes whole mutation operations (submit/cluster/delete); the inner
    # `lock` only guards short state reads so the optimizer's frame fan-out
    # never waits on a long-running endpoint.
    ops_lock: threading.Lock = field(default_factory=threading.Lock)
    stop_event: threading.Event = field(default_factory=threading.Event)
    closed: threading.Event = field(default_factory=threading.Event)
    thread: threading.Thread | None = None
    subscribers: list[Subscriber] = field(default_factory=list)
    last_frame: dict | None = None
    last_emit: float = 0.0
    last_cluster: dict | None = None
    id_to_index: dict[str, int] = field(default_factory=dict)

    def emit(self, frame: Frame, force: bool = False) -> None:
        payload = _frame_payload(self.session_id, frame)
        with self.lock:
            now = time.monotonic()
            self.last_frame = payload
            if not force and now - self.last_emit < MIN_FRAME_INTERVAL_S:
                return
            self.last_emit = now
            for sub in self.subscribers:
                sub.offer(payload)

    def subscribe(self) -> tuple[Subscriber, dict]:
        """Attach a frame consumer, handing it the latest frame directly."""
        with self.lock:
            first = self.last_frame or _frame_payload(
                self.session_id, self.current_frame())
            sub = Subscriber(last_epoch=first["epoch"])
            self.subscribers.append(sub)
            return sub, first

    def unsubscribe(self, sub: Subscriber) -> None:
        with self.lock:
            if sub in self.subscribers:
                self.subscribers.remove(sub)

    def current_frame(self) -> Frame:
        breakdown = total_loss_breakdown(self.state, self.graph, self.cs)
        return Frame(
            epoch=self.state.epoch,
            coords=self.state.snapshot(),
            loss_umap=breakdown.umap,
            loss_ml=breakdown.ml,
            loss_cl=breakdown.cl,
            loss_total=breakdown.total,
        )

    def _run(self, warm: bool) -> None:
        final_epoch = self.state.epoch + (self.params.epochs if not warm else 0)

        def on_frame(frame: Frame) -> None:
            self.emit(frame, force=(frame.epoch == final_epoch))

        failure = None
        try:
            if warm:
                warm_restart(self.state, self.graph, lambda: self.cs, self.params,
                             on_frame=on_frame, stop_signal=self.stop_event)
            else:
                optimize(self.state, self.graph, lambda: self.cs, self.params,
                         on_frame=on_frame, stop_signal=self.stop_event)
        except Exception as exc:  # surfaced via session status
            failure = str(exc)
        finally:
            # Final frame goes out before the status flip, so a drained queue
            # plus a non-optimizing status implies the last frame was seen.
            self.emit(self.current_frame(), force=True)
            with self.lock:
                if failure is None:
                    self.status = IDLE
                else:
                    self.status = ERROR
                    self.error = failure

    def start_run(self, warm: bool) -> None:
        """Launch the single optimizer task; callers hold the session lock."""
        self.stop_event.clear()
        self.status = OPTIMIZING
        self.thread = threading.Thread(target=self._run, args=(warm,), daemon=True)
        self.thread.start()

    def cancel_run(self) -> None:
        thread = self.thread
        if thread is not None and thread.is_alive():
            self.stop_event.set()
            thread.join()
        self.stop_event.clear()


def _build_dataset(spec: dict) -> Dataset:
    if "csv_text" in spec:
        import tempfile

        # load_csv wants a path; stage the upload in a temp file.
        with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False) as fh:
            fh.write(spec["csv_text"])
            tmp = fh.name
        try:
            return load_csv(tmp, spec.get("label_column"))
        finally:
            os.unlink(tmp)
    if "path" in spec:
        return load_csv(spec["path"], spec.get("label_column"))
    if "blobs" in spec:
        b = spec["blobs"]
        overlap = b.get("overlap_pair")
        return generate_blobs(
            n_per_cluster=int(b.get("n_per_cluster", 100)),
            d=int(b.get("d", 10)),
            k=int(b.get("k", 4)),
            centers_separation=float(b.get("centers_separation", 10.0)),
            noise_scale=float(b.get("noise_scale", 1.0)),
            overlap_pair=tuple(overlap) if overlap else None,
            seed=int(b.get("seed", 0)),
        )
    if "features" in spec:
        return Dataset(
            features=np.asarray(spec["features"], dtype=np.float64),
            labels=np.asarray(spec["labels"], dtype=np.int64) if spec.get("labels") else None,
            feature_names=spec.get("feature_names") or [],
            point_ids=[str(p) for p in spec.get("point_ids") or []],
        )
    raise DatasetError(
        "dataset spec needs one of: csv_text, path, blobs, features"
    )


class SessionManager:
    def __init__(self, max_sessions: int = MAX_SESSIONS):
        self.max_sessions = max_sessions
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def get(self, session_id: str) -> Session:
        with self.lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    def create(self, body: dict) -> Session:
        with self.lock:
            if len(self.sessions) >= self.max_sessions:
                raise HTTPException(
                    status_code=429,
                    detail=f"session capacity reached ({self.max_sessions})",
                )
        try:
            dataset = _build_dataset(body.get("dataset") or {})
        except DatasetError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if dataset.n > MAX_POINTS:
            raise HTTPException(
                status_code=400,
                detail=f"dataset has {dataset.n} points, cap is {MAX_POINTS}",
            )
        p = body.get("params") or {}
        try:
            params = OptimizerParams(
                epochs=int(p.get("epochs", OptimizerParams.epochs)),
                initial_lr=float(p.get("initial_lr", OptimizerParams.initial_lr)),
                negative_samples=int(p.get("negative_samples",
                                           OptimizerParams.negative_samples)),
                min_dist=float(p.get("min_dist", OptimizerParams.min_dist)),
                spread=float(p.get("spread", OptimizerParams.spread)),
                seed=int(p.get("seed", 0)),
            )
            n_neighbors = int(p.get("n_neighbors", DEFAULT_N_NEIGHBORS))
            n_neighbors = min(n_neighbors, dataset.n - 1)
            graph = fuzzy_symmetrize(build_knn(dataset, n_neighbors))
            state = init_layout(graph, p.get("init", "spectral"), params.seed,
                                params.min_dist, params.spread)
            state.rng_seed = params.seed
            cs = ConstraintSet(
                n_points=dataset.n,
                margin=float(p.get("margin", ConstraintSet.margin)),
                lambda_ml=float(p.get("lambda_ml", ConstraintSet.lambda_ml)),
                lambda_cl=float(p.get("lambda_cl", ConstraintSet.lambda_cl)),
            )
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            dataset=dataset,
            graph=graph,
            state=state,
            cs=cs,
            params=params,
            min_pts=int(p.get("min_pts", DEFAULT_MIN_PTS)),
            id_to_index={pid: i for i, pid in enumerate(dataset.point_ids)},
        )
        with self.lock:
            if len(self.sessions) >= self.max_sessions:
                raise HTTPException(
                    status_code=429,
                    detail=f"session capacity reached ({self.max_sessions})",
                )
            self.sessions[session.session_id] = session
        with session.lock:
            if params.epochs > 0:
                session.start_run(warm=False)
        return session

    def delete(self, session_id: str) -> None:
        session = self.get(session_id)
        with session.ops_lock:
            session.closed.set()
            session.cancel_run()
            with session.lock:
                for sub in session.subscribers:
                    sub.offer(None)
        with self.lock:
            self.sessions.pop(session_id, None)


def _constraint_from_record(session: Session, record: dict) -> Constraint:
    kind = record.get("kind")
    if kind not in (MUST_LINK, CANNOT_LINK):
        raise ConstraintError(f"unknown constraint kind {kind!r}")
    missing = [key for key in ("i", "j") if key not in record]
    if missing:
        raise ConstraintError(f"record missing fields: {missing}")
    idx = {}
    for key in ("i", "j"):
        pid = str(record[key])
        if pid not in session.id_to_index:
            raise KeyError(pid)
        idx[key] = session.id_to_index[pid]
    return Constraint(kind=kind, i=idx["i"], j=idx["j"],
                      weight=float(record.get("weight", 1.0)))


def create_app(manager: SessionManager | None = None) -> FastAPI:
    app = FastAPI(title="ipbc session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    mgr = manager or SessionManager()
    app.state.manager = mgr

    @app.post("/sessions")
    def create_session(body: dict):
        session = mgr.create(body)
        return {
            "session_id": session.session_id,
            "n_points": session.dataset.n,
            "point_ids": session.dataset.point_ids,
            "feature_names": session.dataset.feature_names,
            "status": session.status,
            "frame": _frame_payload(session.session_id, session.current_frame()),
        }

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        session = mgr.get(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "status": session.status,
                "error": session.error,
                "epoch": session.state.epoch,
                "n_points": session.dataset.n,
                "n_constraints": len(session.cs),
                "cluster": session.last_cluster,
            }

    @app.get("/sessions/{session_id}/frames")
    def stream_frames(session_id: str, follow: bool = True):
        """NDJSON frame stream; blank lines are keep-alives.

        With ``follow=false`` the stream ends once the session is no longer
        optimizing and all queued frames were delivered; the default keeps it
        open across warm restarts until the session is deleted.
        """
        session = mgr.get(session_id)
        sub, first = session.subscribe()

        def gen():
            try:
                yield json.dumps(first) + "\n"
                while not session.closed.is_set():
                    try:
                        payload = sub.queue.get(timeout=0.25)
                    except queue.Empty:
                        if not follow:
                            with session.lock:
                                running = session.status == OPTIMIZING
                            if not running and sub.queue.empty():
                                break
                        # Keep-alive; also the point where a client disconnect
                        # can surface and stop the generator.
                        yield "\n"
                        continue
                    if payload is None:
                        break
                    yield json.dumps(payload) + "\n"
            finally:
                session.unsubscribe(sub)

        return StreamingResponse(gen(), media_type="application/x-ndjson")

    @app.post("/sessions/{session_id}/constraints")
    def submit_constraints(session_id: str, records: list[dict]):
        session = mgr.get(session_id)
        verdicts = []
        accepted = 0
        # ops_lock serializes whole submissions so concurrent batches chain
        # on one another instead of both extending the same old snapshot.
        with session.ops_lock:
            if session.closed.is_set():
                raise HTTPException(status_code=404,
                                    detail=f"unknown session {session_id}")
            cs = session.cs
            for record in records:
                try:
                    c = _constraint_from_record(session, record)
                except KeyError as exc:
                    verdicts.append({"accepted": False, "reason": "unknown_point",
                                     "point_id": exc.args[0]})
                    continue
                except ConstraintError as exc:
                    verdicts.append({"accepted": False, "reason": "invalid",
                                     "detail": str(exc)})
                    continue
                try:
                    new_cs = cs.add(c)
                except ConstraintConflictError as exc:
                    verdicts.append({
                        "accepted": False,
                        "reason": "conflict",
                        "existing": {
                            "kind": exc.existing.kind,
                            "i": session.dataset.point_ids[exc.existing.i],
                            "j": session.dataset.point_ids[exc.existing.j],
                        },
                    })
                    continue
                except ConstraintError as exc:
                    verdicts.append({"accepted": False, "reason": "invalid",
                                     "detail": str(exc)})
                    continue
                if new_cs is cs:
                    verdicts.append({"accepted": True, "duplicate": True})
                else:
                    verdicts.append({"accepted": True})
                    accepted += 1
                cs = new_cs
            if accepted:
                # Cancel any current run at its epoch boundary, then warm
                # restart from the cancelled coordinates.
                session.cancel_run()
                with session.lock:
                    session.cs = cs
                    session.emit(session.current_frame(), force=True)
                    session.start_run(warm=True)
        return {"accepted": accepted,
                "rejected": sum(1 for v in verdicts if not v["accepted"]),
                "verdicts": verdicts}

    @app.post("/sessions/{session_id}/cluster")
    def run_clustering(session_id: str, body: dict | None = None):
        session = mgr.get(session_id)
        with session.ops_lock:
            with session.lock:
                if session.status == OPTIMIZING:
                    raise HTTPException(status_code=409,
                                        detail="session is optimizing; wait or cancel")
                coords = session.state.snapshot()
            body = body or {}
            min_pts = int(body.get("min_pts", session.min_pts))
            eps = body.get("eps")
            eps = float(eps) if eps is not None else suggest_eps(coords, min_pts)
            result = dbscan(coords, eps, min_pts)
            explanations = []
            warning = None
            if result.k_found < 2:
                warning = f"found {result.k_found} cluster(s); nothing to separate"
            for cid in range(result.k_found):
                members = int((result.labels == cid).sum())
                if members < MIN_EXPLAIN:
                    continue
                try:
                    exp = explain_cluster(session.dataset, result, cid)
                except ExplainError:
                    continue
                explanations.append({
                    "cluster_id": exp.cluster_id,
                    "size": members,
                    "train_accuracy": exp.train_accuracy,
                    "top_features": [
                        {"feature": name, "importance": imp, "rule": rule}
                        for name, imp, rule in exp.top_features
                    ],
                })
            payload = {
                "cluster": {
                    "labels": [int(v) for v in result.labels],
                    "eps": result.eps,
                    "min_pts": result.min_pts,
                    "k_found": result.k_found,
                    "n_noise": int((result.labels == -1).sum()),
                },
                "explanations": explanations,
            }
            if warning:
                payload["warning"] = warning
            with session.lock:
                session.last_cluster = payload["cluster"]
            return payload

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        mgr.delete(session_id)
        return {"deleted": True}

    return app


def resolve_port(override: int | None = None) -> int:
    if override is not None:
        return override
    return int(os.environ.get("IPBC_PORT", DEFAULT_PORT))


def serve(port: int | None = None, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted."""
    import uvicorn

    port = resolve_port(port)
    print(f"ipbc session service listening on http://{host}:{port}")
    uvicorn.run(create_app(), host=host, port=port, log_level="warning")
