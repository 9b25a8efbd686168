"""HTTP preview/tuning service.

Endpoint contract (JSON bodies; images travel as base64-encoded PNG/JPEG):

- POST   /sessions                 {style, frames[, frame_rate, keyframes]} -> session + params + schema
- GET    /sessions/{id}            fine-tune status + loss trace
- POST   /sessions/{id}/finetune   {iters?} -> 202; progress polled via GET
- GET    /sessions/{id}/params     current params (bare seven-field object)
- POST   /sessions/{id}/preview    {params, frame_index} -> PNG bytes
- GET    /sessions/{id}/lut.cube   ?size=N -> .cube of current params
- DELETE /sessions/{id}

Previews are pure functions of (frame, params): identical requests return
byte-identical PNGs. A preview's params override also becomes the session's
current params so that /params and /lut.cube always reflect what the tuning
UI is showing.
"""

from __future__ import annotations

import base64
import secrets
import threading
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .color_ops import PARAM_RANGES, GradingParams, apply_params
from .imaging import VideoFrames, decode_png, encode_png
from .lut import MAX_LUT_SIZE, MIN_LUT_SIZE, bake_lut, cube_text
from .predictor import ParamPredictor, build_encoder, load_checkpoint
from .training import TrainConfig, finetune, select_keyframes


def param_schema() -> dict:
    return {
        name: {"min": lo, "max": hi, "identity": ident}
        for name, (lo, hi, ident) in PARAM_RANGES.items()
    }


@dataclass
class Session:
    id: str
    frames: list[np.ndarray]
    style: np.ndarray
    keyframes: list[np.ndarray]
    model: ParamPredictor
    predicted: GradingParams
    current: GradingParams
    status: str = "idle"  # idle | running | done | failed
    iters_done: int = 0
    iters_total: int = 0
    error: str | None = None
    losses: list[float] = dc_field(default_factory=list)
    lock: threading.Lock = dc_field(default_factory=threading.Lock)


class CreateSessionBody(BaseModel):
    style: str = Field(description="base64 PNG/JPEG")
    frames: list[str] = Field(min_length=1, description="base64 PNG/JPEG frames")
    frame_rate: float = 25.0
    keyframes: int | None = None


class FinetuneBody(BaseModel):
    iters: int | None = Field(default=None, ge=1)


class PreviewBody(BaseModel):
    params: dict
    frame_index: int = 0


def _decode_b64_image(data: str, what: str) -> np.ndarray:
    try:
        return decode_png(base64.b64decode(data, validate=True))
    except Exception as exc:
        raise HTTPException(status_code=422, detail=f"could not decode {what}: {exc}") from exc


def create_app(checkpoint: str | Path | None = None,
               config: TrainConfig | None = None,
               ui_dir: str | Path | None = None) -> FastAPI:
    cfg = config or TrainConfig()
    if checkpoint is not None:
        base_model, enc_ref = load_checkpoint(checkpoint)
        encoder = build_encoder(enc_ref)
    else:
        import torch

        torch.manual_seed(cfg.seed)  # fresh-model service stays reproducible
        base_model = ParamPredictor()
        encoder = build_encoder(cfg.encoder_ref())

    app = FastAPI(title="chromagrade preview service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        with store_lock:
            sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return sess

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        frames = [_decode_b64_image(f, f"frame {i}") for i, f in enumerate(body.frames)]
        style = _decode_b64_image(body.style, "style image")
        if len({f.shape for f in frames}) != 1:
            raise HTTPException(status_code=422, detail="frames have mixed sizes")
        video = VideoFrames.from_list(frames, frame_rate=body.frame_rate)
        k = min(body.keyframes or cfg.keyframe_count, len(frames))
        keyset = select_keyframes(video, k)
        keyframes = [frames[i] for i in keyset.indices]

        # iters=0 fine-tune = the mean prediction over keyframes on a model copy.
        model, predicted = finetune(base_model, keyframes, style,
                                    cfg.replace(iters_finetune=0), encoder=encoder)
        sess = Session(
            id=secrets.token_hex(8), frames=frames, style=style, keyframes=keyframes,
            model=model, predicted=predicted, current=predicted,
        )
        with store_lock:
            sessions[sess.id] = sess
        return {
            "session_id": sess.id,
            "params": {name: getattr(predicted, name) for name in PARAM_RANGES},
            "keyframe_indices": list(keyset.indices),
            "frame_count": len(frames),
            "schema": param_schema(),
        }

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            return {
                "status": sess.status,
                "iters_done": sess.iters_done,
                "iters_total": sess.iters_total,
                "progress": (sess.iters_done / sess.iters_total) if sess.iters_total else 0.0,
                "loss": sess.losses[-200:],
                "error": sess.error,
            }

    @app.post("/sessions/{session_id}/finetune", status_code=202)
    def start_finetune(session_id: str, body: FinetuneBody):
        sess = get_session(session_id)
        with sess.lock:
            if sess.status == "running":
                raise HTTPException(status_code=409, detail="fine-tune already running")
            iters = body.iters or cfg.iters_finetune
            sess.status = "running"
            sess.iters_done = 0
            sess.iters_total = iters
            sess.losses = []
            sess.error = None
            run_cfg = cfg.replace(iters_finetune=iters)

        def progress(it: int, parts: dict) -> None:
            with sess.lock:
                sess.iters_done = it + 1
                sess.losses.append(parts["total"])

        def job() -> None:
            try:
                adapted, params = finetune(sess.model, sess.keyframes, sess.style,
                                           run_cfg, encoder=encoder, progress=progress)
                with sess.lock:
                    sess.model = adapted
                    sess.predicted = params
                    sess.current = params
                    sess.status = "done"
            except Exception as exc:  # surfaced via GET status
                with sess.lock:
                    sess.status = "failed"
                    sess.error = str(exc)

        threading.Thread(target=job, daemon=True).start()
        return {"status": "running", "iters": iters}

    @app.get("/sessions/{session_id}/params")
    def get_params(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            return {name: getattr(sess.current, name) for name in PARAM_RANGES}

    @app.post("/sessions/{session_id}/preview")
    def preview(session_id: str, body: PreviewBody):
        sess = get_session(session_id)
        try:
            params = GradingParams.from_dict(body.params)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        with sess.lock:
            if not 0 <= body.frame_index < len(sess.frames):
                raise HTTPException(status_code=422,
                                    detail=f"frame_index {body.frame_index} out of range")
            frame = sess.frames[body.frame_index]
            sess.current = params
        png = encode_png(apply_params(frame, params))
        return Response(content=png, media_type="image/png")

    @app.get("/sessions/{session_id}/lut.cube")
    def get_lut(session_id: str, size: int = 33):
        if not MIN_LUT_SIZE <= size <= MAX_LUT_SIZE:
            raise HTTPException(status_code=422,
                                detail=f"size must be in [{MIN_LUT_SIZE}, {MAX_LUT_SIZE}]")
        sess = get_session(session_id)
        with sess.lock:
            params = sess.current
        text = cube_text(bake_lut(params, size), title=f"chromagrade session {session_id}")
        return Response(content=text, media_type="text/plain",
                        headers={"Content-Disposition": 'attachment; filename="grade.cube"'})

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        with store_lock:
            if session_id not in sessions:
                raise HTTPException(status_code=404, detail=f"no session {session_id}")
            del sessions[session_id]
        return Response(status_code=204)

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path and ui_path.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_path), html=True), name="ui")

    return app


def serve(port: int, checkpoint: str | Path | None = None,
          config: TrainConfig | None = None, host: str = "127.0.0.1",
          ui_dir: str | Path | None = None) -> None:
    """Run the preview service (blocking)."""
    import uvicorn

    app = create_app(checkpoint=checkpoint, config=config, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
