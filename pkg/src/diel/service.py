"""WebSocket service around one engine.

Every client feeds the same engine; events are serialized through a lock,
wallclock-stamped at receipt, and every output change is broadcast to all
connected clients. Rows travel in the same canonical encoding the snapshot
files use, so a wire capture and a trace replay are comparable line for
line.

Protocol, one JSON object per text frame:
  server -> client  {"type":"catalog","inputs":[...],"outputs":[...]}
                    {"type":"output","name":...,"timestep":n,"rows":[...]}
                    {"type":"rejected","input":...,"violations":[...]}
                    {"type":"error","message":...}
  client -> server  {"type":"input","name":...,"values":{...}}
"""
from __future__ import annotations

import asyncio
import json
import socket
import time
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .database import Relation
from .errors import DielError
from .jsonio import snapshot_rows
from .runtime import Engine, Event

WS_PATH = "/ws"


def _dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"))


def catalog_message(engine: Engine) -> dict:
    catalog = engine.catalog
    inputs = [
        {
            "name": table.name,
            "columns": [{"name": c.name, "type": c.type}
                        for c in table.user_columns()],
        }
        for table in (catalog.tables[n.lower()] for n in catalog.inputs)
    ]
    outputs = [
        {
            "name": view.name,
            "columns": [{"name": c.name, "type": c.type} for c in view.schema],
        }
        for view in (catalog.views[n.lower()] for n in catalog.outputs)
    ]
    return {"type": "catalog", "inputs": inputs, "outputs": outputs}


def output_message(timestep: int, name: str, relation: Relation) -> str:
    return _dumps({"type": "output", "name": name, "timestep": timestep,
                   "rows": snapshot_rows(relation)})


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI()
    clients: set[WebSocket] = set()
    lock = asyncio.Lock()

    # Outputs are collected through the same upcall path a local embedding
    # uses, so the wire stream matches a replay of the same events.
    pending: list[tuple[str, Relation]] = []
    for name in engine.catalog.outputs:
        engine.bind_output(name, lambda rel, _n=name: pending.append((_n, rel)))

    catalog_text = _dumps(catalog_message(engine))

    async def broadcast(text: str) -> None:
        for ws in list(clients):
            try:
                await ws.send_text(text)
            except Exception:
                clients.discard(ws)

    async def send_error(ws: WebSocket, message: str) -> None:
        await ws.send_text(_dumps({"type": "error", "message": message}))

    async def handle(ws: WebSocket, raw: str) -> None:
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            await send_error(ws, f"malformed JSON: {exc}")
            return
        if not isinstance(msg, dict) or msg.get("type") != "input":
            await send_error(ws, 'expected {"type":"input",...}')
            return
        name = msg.get("name")
        values = msg.get("values", {})
        if not isinstance(name, str) or not isinstance(values, dict):
            await send_error(ws, "input message needs a name and a values object")
            return
        stamp = time.time() * 1000.0

        async with lock:
            try:
                result = engine.ingest(Event(name, values, stamp))
            except (DielError, TypeError) as exc:
                await send_error(ws, str(exc))
                return
            if result.committed:
                messages = [output_message(result.timestep, n, rel)
                            for n, rel in pending]
                pending.clear()
                for text in messages:
                    await broadcast(text)
            else:
                pending.clear()
                await ws.send_text(_dumps({
                    "type": "rejected",
                    "input": name,
                    "violations": [str(v) for v in result.violations],
                }))

    @app.websocket(WS_PATH)
    async def endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_text(catalog_text)
        clients.add(ws)
        try:
            while True:
                await handle(ws, await ws.receive_text())
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(ws)

    return app


def serve_forever(engine: Engine, host: str, port: int) -> None:
    """Run until interrupted. Raises OSError when the port cannot be bound."""
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    finally:
        probe.close()

    import uvicorn

    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")
