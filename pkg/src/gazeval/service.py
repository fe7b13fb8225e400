"""Session HTTP API: interactive exploration of the value-map dynamics.

A session wraps one PredictionContext. Mutations (append fixation, undo,
patch params) serialize per session, bump a revision counter, and return
the fully recomputed state: all four maps, the fixation list, and the
predicted next fixation. Sessions are in-memory only and evicted after an
idle timeout.

Request bodies are validated by the package's own loaders so schema
problems surface as 400 with a diagnostic, 404 covers unknown sessions,
and 409 signals a stale expected_revision on compare-and-set mutations.
"""

from __future__ import annotations

import base64
import binascii
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException

from .dataio import params_from_dict, params_to_dict, profile_from_dict, read_raster_bytes
from .engine import PredictionContext, component_maps
from .errors import DataError, GazevalError
from .grid import Grid, PixelCoord, argmax
from .presets import default_cost_profile

DEFAULT_IDLE_TIMEOUT = 1800.0  # seconds


@dataclass
class _Session:
    ctx: PredictionContext
    revision: int = 0
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _map_payload(g: Grid) -> dict:
    values = g.values.tolist()
    return {
        "width": g.width,
        "height": g.height,
        "values": values,
        "min": float(g.data.min()),
        "max": float(g.data.max()),
    }


def _state_payload(ctx: PredictionContext, revision: int) -> dict:
    maps = component_maps(ctx)
    pred = argmax(maps.value)
    return {
        "revision": revision,
        "fixations": [{"x": p.x, "y": p.y} for p in ctx.history],
        "params": params_to_dict(ctx.params),
        "maps": {
            "s": _map_payload(maps.saliency),
            "c": _map_payload(maps.cost),
            "e": _map_payload(maps.exploration),
            "v": _map_payload(maps.value),
        },
        "prediction": {"x": pred.x, "y": pred.y},
    }


def _parse_saliency(doc) -> Grid:
    if not isinstance(doc, dict):
        raise HTTPException(400, "saliency must be an object")
    if "smr_base64" in doc:
        try:
            blob = base64.b64decode(doc["smr_base64"], validate=True)
        except (binascii.Error, TypeError) as exc:
            raise HTTPException(400, f"smr_base64 does not decode: {exc}") from exc
        try:
            return read_raster_bytes(blob)
        except DataError as exc:
            raise HTTPException(400, str(exc)) from exc
    try:
        width, height = int(doc["width"]), int(doc["height"])
        values = doc["values"]
        return Grid.from_flat(width, height, values)
    except KeyError as exc:
        raise HTTPException(400, f"saliency missing field {exc}") from exc
    except (TypeError, ValueError, GazevalError) as exc:
        raise HTTPException(400, f"bad saliency payload: {exc}") from exc


def _require_number(doc, key) -> float:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise HTTPException(400, f"{key} must be a number")
    return float(v)


def create_app(idle_timeout: float = DEFAULT_IDLE_TIMEOUT) -> FastAPI:
    app = FastAPI(title="gazeval explorer service")
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()

    def evict_idle() -> None:
        cutoff = time.monotonic() - idle_timeout
        with registry_lock:
            for sid in [s for s, v in sessions.items() if v.last_access < cutoff]:
                del sessions[sid]

    def get_session(sid: str) -> _Session:
        evict_idle()
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(404, f"no session {sid!r}")
        sess.last_access = time.monotonic()
        return sess

    @app.post("/sessions")
    def create_session(body: dict = Body(...)):
        evict_idle()
        if "saliency" not in body or "params" not in body:
            raise HTTPException(400, "body needs saliency and params")
        saliency = _parse_saliency(body["saliency"])
        try:
            params = params_from_dict(body["params"])
            profile = (
                profile_from_dict(body["profile"])
                if body.get("profile") is not None
                else default_cost_profile()
            )
            ctx = PredictionContext(saliency, (), params, profile)
        except GazevalError as exc:
            raise HTTPException(400, str(exc)) from exc
        sid = uuid.uuid4().hex
        with registry_lock:
            sessions[sid] = _Session(ctx=ctx)
        return {"id": sid, "revision": 0}

    @app.get("/sessions/{sid}")
    def read_session(sid: str):
        sess = get_session(sid)
        with sess.lock:
            ctx, revision = sess.ctx, sess.revision
        return _state_payload(ctx, revision)

    @app.post("/sessions/{sid}/fixations")
    def append_fixation(sid: str, body: dict = Body(...)):
        sess = get_session(sid)
        x = _require_number(body, "x")
        y = _require_number(body, "y")
        expected = body.get("expected_revision")
        with sess.lock:
            if expected is not None and expected != sess.revision:
                raise HTTPException(
                    409, f"expected revision {expected}, session is at {sess.revision}"
                )
            try:
                sess.ctx = sess.ctx.extended(PixelCoord(x, y))
            except GazevalError as exc:
                raise HTTPException(400, str(exc)) from exc
            sess.revision += 1
            ctx, revision = sess.ctx, sess.revision
        return _state_payload(ctx, revision)

    @app.delete("/sessions/{sid}/fixations/last")
    def undo_fixation(sid: str):
        sess = get_session(sid)
        with sess.lock:
            if not sess.ctx.history:
                raise HTTPException(400, "no fixation to undo")
            sess.ctx = PredictionContext(
                sess.ctx.saliency,
                sess.ctx.history[:-1],
                sess.ctx.params,
                sess.ctx.profile,
            )
            sess.revision += 1
            ctx, revision = sess.ctx, sess.revision
        return _state_payload(ctx, revision)

    @app.patch("/sessions/{sid}/params")
    def patch_params(sid: str, body: dict = Body(...)):
        sess = get_session(sid)
        if not isinstance(body, dict) or not body:
            raise HTTPException(400, "params patch must be a non-empty object")
        with sess.lock:
            merged = params_to_dict(sess.ctx.params)
            merged.update(body)
            try:
                params = params_from_dict(merged)
            except GazevalError as exc:
                raise HTTPException(400, str(exc)) from exc
            sess.ctx = PredictionContext(
                sess.ctx.saliency, sess.ctx.history, params, sess.ctx.profile
            )
            sess.revision += 1
            ctx, revision = sess.ctx, sess.revision
        return _state_payload(ctx, revision)

    return app
