"""HTTP + WebSocket service around teleoperation sessions.

Protocol (all JSON):

* ``POST /sessions {"model": name, "task": name}`` -> ``{"id": ...}``
* ``GET /models`` / ``GET /tasks`` -> name lists
* ``WS /session/{id}``: client sends ``{"type":"input","z":[...],"t":ms}``
  or ``{"type":"pause"|"resume"|"reset"}``; server pushes
  ``{"type":"state",...}``, ``{"type":"fault",...}``, ``{"type":"warn_ood",...}``
  and lifecycle events.

One asyncio task per session runs the control loop at the configured tick
rate; WebSocket handlers only touch the latest-wins input register, so the
loop never blocks on a client.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from . import datagen
from .config import load_task_config
from .errors import DimensionError, LatactError
from .models import load_model
from .teleop import TeleopConfig, TeleopSession


class ServiceState:
    def __init__(self, models: dict[str, Path], tasks: dict[str, Path]):
        self.model_paths = models
        self.task_paths = tasks
        self.sessions: dict[str, TeleopSession] = {}
        self.loops: dict[str, asyncio.Task] = {}

    def create_session(self, model_name: str, task_name: str) -> TeleopSession:
        if model_name not in self.model_paths:
            raise KeyError(f"unknown model {model_name!r}")
        if task_name not in self.task_paths:
            raise KeyError(f"unknown task {task_name!r}")
        spec, extras = load_task_config(self.task_paths[task_name])
        model = load_model(self.model_paths[model_name], expect_n=spec.geometry.n)
        config = TeleopConfig(
            tick_rate=float(extras.get("tick_rate", 50.0)),
            deadzone=float(extras.get("deadzone", 0.05)),
            action_cap=float(extras.get("action_cap", 1.0)),
            ood_radius=float(extras["ood_radius"]) if "ood_radius" in extras else None,
        )
        training_states = None
        if "dataset" in extras and config.ood_radius is not None:
            try:
                training_states = datagen.load(extras["dataset"]).states
            except (OSError, LatactError):
                training_states = None
        if "alignment" in extras:
            model.set_alignment(np.asarray(extras["alignment"], dtype=float))
        session = TeleopSession(model, spec, config, training_states=training_states)
        self.sessions[session.id] = session
        return session


def build_app(models: dict[str, Path], tasks: dict[str, Path], static_dir=None) -> FastAPI:
    app = FastAPI(title="latact teleoperation service")
    state = ServiceState(models, tasks)
    app.state.service = state

    @app.get("/models")
    def list_models():
        return sorted(state.model_paths)

    @app.get("/tasks")
    def list_tasks():
        return sorted(state.task_paths)

    @app.get("/tasks/{name}")
    def task_detail(name: str):
        if name not in state.task_paths:
            raise HTTPException(status_code=404, detail=f"unknown task {name!r}")
        spec, _ = load_task_config(state.task_paths[name])
        return spec.to_json_dict()

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        try:
            session = state.create_session(body.get("model", ""), body.get("task", ""))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (LatactError, DimensionError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"id": session.id, "latent_dim": session.model.latent_dim,
                "arm_count": session.geometry.arm_count, "paused": session.paused}

    @app.websocket("/session/{session_id}")
    async def session_socket(ws: WebSocket, session_id: str):
        session = state.sessions.get(session_id)
        if session is None:
            await ws.close(code=4004, reason="unknown session")
            return
        await ws.accept()
        subscription = session.subscribe()
        if session_id not in state.loops or state.loops[session_id].done():
            state.loops[session_id] = asyncio.create_task(_control_loop(session))
        session.resume()

        async def pump():
            while True:
                for event in subscription.drain():
                    await ws.send_text(json.dumps(event))
                if subscription.overflowed:
                    return
                await asyncio.sleep(1.0 / session.config.tick_rate / 2)

        pump_task = asyncio.create_task(pump())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps({"type": "error", "reason": "bad json"}))
                    continue
                kind = msg.get("type")
                try:
                    if kind == "input":
                        ack = session.submit_input(
                            np.asarray(msg.get("z", []), dtype=float), msg.get("t")
                        )
                        await ws.send_text(json.dumps(ack))
                    elif kind == "pause":
                        session.pause()
                    elif kind == "resume":
                        session.resume()
                    elif kind == "reset":
                        session.reset()
                    else:
                        await ws.send_text(
                            json.dumps({"type": "error", "reason": f"unknown type {kind!r}"})
                        )
                except (LatactError, DimensionError, ValueError) as exc:
                    await ws.send_text(json.dumps({"type": "error", "reason": str(exc)}))
        except WebSocketDisconnect:
            pass
        finally:
            pump_task.cancel()

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    @app.on_event("shutdown")
    async def shutdown():
        for session in state.sessions.values():
            session.pause()
        for task in state.loops.values():
            task.cancel()

    return app


async def _control_loop(session: TeleopSession):
    period = 1.0 / session.config.tick_rate
    try:
        while True:
            session.tick()
            await asyncio.sleep(period)
    except asyncio.CancelledError:
        pass


def run_server(app: FastAPI, host: str, port: int) -> int:
    import uvicorn

    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except SystemExit as exc:
        return int(exc.code or 0)
    except OSError as exc:
        print(f"cannot bind {host}:{port}: {exc}")
        return 1
    return 0
