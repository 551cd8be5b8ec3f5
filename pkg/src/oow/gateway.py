"""Real-time WebSocket session server.

Protocol (text frames, JSON):

    client -> server:
        {"t":"input","seq":N,"ts":S,"axes":{"lx":F,"ly":F,"rx":F,"ry":F},
         "buttons":["L2", ...]}
    server -> client:
        {"t":"hello","scenario":{...},"config":{...},"tick_rate":50}
        {"t":"state", ...snapshot fields...}
        {"t":"event", ...session event fields...}
        {"t":"error","msg":"..."}
        {"t":"bye","reason":"docked|timeout|disconnect|aborted"}

One operator per session: a second concurrent connection is refused with an
error frame. Client timestamps are anchored to the engine clock on first
input so the latency buffer sees a consistent timeline.
"""
from __future__ import annotations

import asyncio
import json
import os
from pathlib import Path

from websockets.asyncio.server import serve as ws_serve

from .control import InputCommand, OrderingError
from .engine import SNAPSHOT_DECIMATION, TICK_RATE, Engine, Session, dump_inputs
from .mission import TrialConfig
from .scenario import Scenario
from .telemetry import export_log

DEFAULT_PORT = int(os.environ.get("OOW_PORT", "8765"))


def decode_input(raw: str) -> InputCommand:
    msg = json.loads(raw)
    if msg.get("t") != "input":
        raise ValueError(f"unexpected message type {msg.get('t')!r}")
    axes = msg.get("axes", {})
    return InputCommand(
        timestamp=float(msg["ts"]), seq=int(msg["seq"]),
        lx=float(axes.get("lx", 0.0)), ly=float(axes.get("ly", 0.0)),
        rx=float(axes.get("rx", 0.0)), ry=float(axes.get("ry", 0.0)),
        buttons=frozenset(msg.get("buttons", [])))


class GatewayServer:
    """Owns one engine and fans its state out to the single operator."""

    def __init__(self, scenario: Scenario, config: TrialConfig,
                 out_dir: str | Path | None = None, session_name: str = "live"):
        self.scenario = scenario
        self.config = config
        self.engine = Engine(scenario, config,
                             snapshot_decimation=SNAPSHOT_DECIMATION)
        self.out_dir = Path(out_dir) if out_dir else None
        self.session_name = session_name
        self._operator = None
        self._ts_offset: float | None = None
        self._finished = asyncio.Event()
        self.session: Session | None = None

    async def handler(self, websocket):
        if self._operator is not None:
            await websocket.send(json.dumps(
                {"t": "error", "msg": "session already has an operator"}))
            await websocket.close()
            return
        self._operator = websocket
        await websocket.send(json.dumps(
            {"t": "hello", "scenario": self.scenario.to_dict(),
             "config": self.config.to_dict(), "tick_rate": TICK_RATE}))
        try:
            async for raw in websocket:
                try:
                    cmd = decode_input(raw)
                except (ValueError, KeyError, TypeError) as exc:
                    await websocket.send(json.dumps(
                        {"t": "error", "msg": f"bad input: {exc}"}))
                    continue
                if self._ts_offset is None:
                    self._ts_offset = cmd.timestamp - self.engine.time
                cmd = InputCommand(cmd.timestamp - self._ts_offset, cmd.seq,
                                   lx=cmd.lx, ly=cmd.ly, rx=cmd.rx, ry=cmd.ry,
                                   buttons=cmd.buttons)
                try:
                    self.engine.submit(cmd)
                except OrderingError as exc:
                    await websocket.send(json.dumps(
                        {"t": "error", "msg": str(exc)}))
        finally:
            if not self.engine.done:
                self.engine.abort("disconnect")
                self._finish()
            self._operator = None

    async def tick_loop(self):
        loop = asyncio.get_running_loop()
        next_time = loop.time()
        logged = 1  # trial_start already recorded
        while not self.engine.done:
            next_time += 1.0 / TICK_RATE
            snap = self.engine.tick()
            ws = self._operator
            if ws is not None:
                try:
                    for ev in self.engine.log.events[logged:]:
                        await ws.send(json.dumps(
                            {"t": "event", "time": ev.time, "kind": ev.kind,
                             **ev.payload}))
                    if snap is not None:
                        await ws.send(json.dumps(snap))
                except Exception:
                    pass  # socket going down; handler does the cleanup
            logged = len(self.engine.log.events)
            delay = next_time - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
        self._finish()
        ws = self._operator
        if ws is not None:
            try:
                await ws.send(json.dumps(
                    {"t": "bye",
                     "reason": self.engine.log.events[-1].payload["reason"]}))
                await ws.close()
            except Exception:
                pass

    def _finish(self):
        if self.session is not None:
            return
        self.session = Session(self.engine.log, self.engine.inputs, [],
                               self.config, self.scenario.digest())
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            base = self.out_dir / self.session_name
            Path(f"{base}.session.jsonl").write_text(export_log(self.engine.log))
            Path(f"{base}.inputs.jsonl").write_text(
                dump_inputs(self.session, self.scenario))
        self._finished.set()

    async def run(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                  ready: asyncio.Event | None = None):
        """Serve one trial; resolves when the trial ends."""
        async with ws_serve(self.handler, host, port):
            if ready is not None:
                ready.set()
            ticker = asyncio.create_task(self.tick_loop())
            await self._finished.wait()
            ticker.cancel()


def serve(scenario: Scenario, config: TrialConfig, host: str = "127.0.0.1",
          port: int = DEFAULT_PORT, out_dir: str | Path | None = None,
          session_name: str = "live") -> Session:
    """Blocking entry point: serve a single trial, return its session."""
    server = GatewayServer(scenario, config, out_dir, session_name)
    asyncio.run(server.run(host=host, port=port))
    return server.session
