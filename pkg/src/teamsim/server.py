"""Websocket operator service.

One session, any number of connected consoles.  Inbound frames: ``say``,
``abort``, ``select_task``.  Outbound: every session event as it happens
plus a world snapshot whenever the simulation clock moved.  A background
driver maps wall time onto the session's virtual clock, so a served
session runs in real time while staying on the same deterministic loop
the headless modes use.
"""

from __future__ import annotations

import asyncio
import json
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .events import SessionEvent
from .session import Session
from .world import NotFound


def build_app(session: Session, real_tick_s: float = 0.025) -> FastAPI:
    clients: set[WebSocket] = set()
    outbox: list[SessionEvent] = []
    session.log.listeners.append(outbox.append)

    async def broadcast(frame: dict) -> None:
        text = json.dumps(frame, ensure_ascii=False)
        dead = []
        for ws in list(clients):
            try:
                await ws.send_text(text)
            except Exception:
                dead.append(ws)
        for ws in dead:
            clients.discard(ws)

    async def drive() -> None:
        last_wall = time.monotonic()
        last_clock: float | None = None
        while True:
            await asyncio.sleep(real_tick_s)
            now_wall = time.monotonic()
            session.loop.advance_to(session.loop.now + (now_wall - last_wall))
            last_wall = now_wall
            while outbox:
                event = outbox.pop(0)
                await broadcast({"type": "event", **event.to_json()})
            clock = None if session.world is None else session.world.clock
            if clients and clock != last_clock:
                last_clock = clock
                await broadcast({"type": "snapshot", "world": session.world_snapshot()})

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        driver = asyncio.create_task(drive())
        try:
            yield
        finally:
            driver.cancel()
            session.close()

    app = FastAPI(lifespan=lifespan)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        clients.add(ws)
        await ws.send_text(json.dumps({"type": "snapshot", "world": session.world_snapshot()}, ensure_ascii=False))
        try:
            while True:
                try:
                    frame = await ws.receive_json()
                except (ValueError, KeyError):
                    # ValueError: malformed JSON.  KeyError: binary frame on the text channel.
                    await ws.send_text(json.dumps({"type": "error", "text": "frames must be JSON objects"}))
                    continue
                error = handle_frame(session, frame)
                if error is not None:
                    await ws.send_text(json.dumps({"type": "error", "text": error}, ensure_ascii=False))
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(ws)

    return app


def handle_frame(session: Session, frame: object) -> str | None:
    """Apply one client frame; returns an error string for bad frames."""
    if not isinstance(frame, dict):
        return "frames must be JSON objects"
    kind = frame.get("type")
    if kind == "say":
        text = frame.get("text")
        if not isinstance(text, str) or not text.strip():
            return "say frame needs non-empty 'text'"
        if session.task is None:
            return "select a task before speaking"
        session.submit_utterance(text)
        return None
    if kind == "abort":
        session.abort()
        return None
    if kind == "select_task":
        task_id = frame.get("id")
        if not isinstance(task_id, int):
            return "select_task frame needs integer 'id'"
        try:
            session.select_task(task_id)
        except NotFound:
            return f"unknown task id {task_id}"
        return None
    return f"unknown frame type {kind!r}"


def serve(session: Session, host: str, port: int) -> None:
    import uvicorn

    uvicorn.run(build_app(session), host=host, port=port, log_level="warning")
