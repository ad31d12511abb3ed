"""Live steering server: streams frames over WebSocket, applies control
messages atomically between simulation steps.

The deterministic core is `SessionEngine`: it owns the scenario run, applies
validated control batches, advances in fixed blocks of steps and encodes
binary frames.  Every applied message is recorded as (batch, step, msg), so
`replay_log` can regenerate the byte-identical frame stream from the initial
scenario plus the log — the worker thread and the network layer add only
scheduling and transport around that core.

Protocol (version 1):
  on connect   -> JSON hello {type, protocol_version, scenario, dim,
                  tweakables: [{path, min, max, value}], steps_per_frame,
                  paused}
  client sends -> JSON control messages:
                  {type: "set_param", path, value} | {type: "load_preset",
                  name} | {type: "pause"} | {type: "resume"} |
                  {type: "step", n} | {type: "reset"} |
                  {type: "set_speed", frames_per_second}
  server sends -> per control: {type: "ack"|"error", ...} to the sender;
                  per broadcast: JSON {type: "frame_meta", step, time,
                  params, paused, steps_per_frame} followed by one binary
                  frame:  magic "MPS1", u32 step, f32 time, u8 dim,
                  u32 count, count*dim f32 positions, count u16 material
                  ids (little-endian).

Slow viewers never stall the simulation: their frame queues drop the oldest
entry, so step numbers per connection are strictly increasing.
"""

from __future__ import annotations

import hashlib
import json
import math
import queue
import struct
import threading
import time
from contextlib import asynccontextmanager

import anyio
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .engine import DivergenceError
from .scenarios import PRESETS, Scenario, ScenarioRun, preset
from .state import TWEAK_RANGES

PROTOCOL_VERSION = 1
MAGIC = b"MPS1"
_HEADER = struct.Struct("<4sIfBI")

_POLL_AGAIN = object()

GRAVITY_RANGE = (-1000.0, 1000.0)
AMBIENT_RANGE = (0.0, 1000.0)
DEFAULT_PHYSICS_RATE = 1050.0
DEFAULT_FPS = 25.0


def encode_frame(state) -> bytes:
    head = _HEADER.pack(MAGIC, state.step_count, float(state.time),
                        state.dim, state.n_particles)
    return (head
            + state.positions.astype("<f4").tobytes()
            + state.material_ids.astype("<u2").tobytes())


def decode_frame(buf: bytes) -> dict:
    import numpy as np
    magic, step, t, dim, count = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    off = _HEADER.size
    positions = np.frombuffer(buf, "<f4", count * dim, off).reshape(count, dim).copy()
    off += 4 * count * dim
    material_ids = np.frombuffer(buf, "<u2", count, off).copy()
    return {"step": step, "time": t, "dim": dim, "count": count,
            "positions": positions, "material_ids": material_ids}


class SessionEngine:
    """Deterministic state machine behind the server (and the replayer)."""

    def __init__(self, scenario: Scenario, cadence_fps: float = DEFAULT_FPS):
        self.scenario_name = scenario.name
        self._baseline = scenario
        self.run = ScenarioRun(scenario)
        self.paused = False
        self.steps_per_frame = max(1, round((1.0 / scenario.dt) / cadence_fps))
        self.log: list[dict] = []
        self._batch = 0

    # -- tweakable registry ------------------------------------------------

    def tweakables(self) -> list[dict]:
        state = self.run.state
        out = []
        for name, law in state.materials.items():
            for fieldname, (lo, hi) in TWEAK_RANGES.items():
                out.append({
                    "path": f"materials.{name}.{fieldname}",
                    "min": lo, "max": hi,
                    "value": getattr(law, fieldname),
                })
        for axis in "xyz"[: state.dim]:
            out.append({"path": f"gravity.{axis}",
                        "min": GRAVITY_RANGE[0], "max": GRAVITY_RANGE[1],
                        "value": float(state.gravity["xyz".index(axis)])})
        out.append({"path": "ambient_viscosity",
                    "min": AMBIENT_RANGE[0], "max": AMBIENT_RANGE[1],
                    "value": state.ambient_viscosity})
        return out

    def param_snapshot(self) -> dict:
        return {t["path"]: t["value"] for t in self.tweakables()}

    def hello(self) -> dict:
        return {
            "type": "hello",
            "protocol_version": PROTOCOL_VERSION,
            "engine_version": __version__,
            "scenario": self.scenario_name,
            "dim": self.run.state.dim,
            "tweakables": self.tweakables(),
            "steps_per_frame": self.steps_per_frame,
            "paused": self.paused,
        }

    # -- control -----------------------------------------------------------

    def apply(self, msg: dict, record: bool = True) -> dict:
        """Validate and apply one control message; never partial.

        The log records the step count *before* the message's own effect:
        that is the scheduling anchor replay needs (step/reset/load_preset
        move the step counter themselves).
        """
        step_before = self.run.state.step_count
        try:
            kind = msg.get("type")
            if kind == "set_param":
                self._set_param(str(msg["path"]), msg["value"])
            elif kind == "load_preset":
                name = str(msg["name"])
                if name not in PRESETS:
                    return self._err(f"unknown preset {name!r}")
                scenario = preset(name)
                self._baseline = scenario
                self.scenario_name = scenario.name
                self.run = ScenarioRun(scenario)
                self.steps_per_frame = max(
                    1, round((1.0 / scenario.dt) / DEFAULT_FPS))
            elif kind == "pause":
                self.paused = True
            elif kind == "resume":
                self.paused = False
            elif kind == "step":
                n = int(msg.get("n", 1))
                if not 1 <= n <= 100_000:
                    return self._err(f"step count {n} outside [1, 100000]")
                for _ in range(n):
                    self.run.step()
            elif kind == "reset":
                self.run = ScenarioRun(self._baseline)
            elif kind == "set_speed":
                fps = float(msg["frames_per_second"])
                if not (math.isfinite(fps) and fps > 0):
                    return self._err(f"bad frames_per_second {fps!r}")
                self.steps_per_frame = max(
                    1, round((1.0 / self.run.state.dt) / fps))
            else:
                return self._err(f"unknown message type {kind!r}")
        except _Rejected as rej:
            return self._err(str(rej))
        except (KeyError, TypeError, ValueError) as err:
            return self._err(f"malformed message: {err}")
        if record:
            self.log.append({"batch": self._batch, "step": step_before,
                             "msg": msg})
        return {"type": "ack", "applied": msg.get("type"),
                "step": self.run.state.step_count}

    def apply_batch(self, msgs: list[dict]) -> tuple[list[dict], bool]:
        """Apply a drained batch; returns (replies, any_applied)."""
        replies = []
        applied = False
        for msg in msgs:
            reply = self.apply(msg)
            replies.append(reply)
            applied = applied or reply["type"] == "ack"
        if applied:
            self._batch += 1
        return replies, applied

    def _set_param(self, path: str, value):
        value = float(value)
        if not math.isfinite(value):
            raise _Rejected(f"non-finite value for {path}")
        state = self.run.state
        parts = path.split(".")
        if parts[0] == "materials" and len(parts) == 3:
            name, fieldname = parts[1], parts[2]
            if name not in state.materials or fieldname not in TWEAK_RANGES:
                raise _Rejected(f"not a tweakable path: {path}")
            lo, hi = TWEAK_RANGES[fieldname]
            if not lo <= value <= hi:
                raise _Rejected(f"{path}={value} outside [{lo}, {hi}]")
            from dataclasses import replace
            try:
                state.set_material(name, replace(state.materials[name],
                                                 **{fieldname: value}))
            except ValueError as err:
                raise _Rejected(str(err)) from err
            return
        if parts[0] == "gravity" and len(parts) == 2 and parts[1] in "xyz":
            axis = "xyz".index(parts[1])
            if axis >= state.dim:
                raise _Rejected(f"gravity axis {parts[1]} outside dim {state.dim}")
            lo, hi = GRAVITY_RANGE
            if not lo <= value <= hi:
                raise _Rejected(f"{path}={value} outside [{lo}, {hi}]")
            state.gravity[axis] = value
            return
        if path == "ambient_viscosity":
            lo, hi = AMBIENT_RANGE
            if not lo <= value <= hi:
                raise _Rejected(f"{path}={value} outside [{lo}, {hi}]")
            state.ambient_viscosity = value
            return
        raise _Rejected(f"not a tweakable path: {path}")

    @staticmethod
    def _err(reason: str) -> dict:
        return {"type": "error", "reason": reason}

    # -- stepping & frames ---------------------------------------------------

    def advance_block(self) -> bool:
        """One broadcast block of physics; False when paused."""
        if self.paused:
            return False
        self.run.run(self.steps_per_frame)
        return True

    def frame_meta(self, with_metrics: bool = False) -> dict:
        state = self.run.state
        meta = {"type": "frame_meta", "step": state.step_count,
                "time": state.time, "params": self.param_snapshot(),
                "paused": self.paused,
                "steps_per_frame": self.steps_per_frame}
        if with_metrics:
            from .metrics import compute_report
            hints = self._baseline.analysis
            report = compute_report(state, hints.ground_height,
                                    hints.flow_axis, hints.contact_radius)
            meta["metrics"] = {
                "label": report.label,
                "repose_angle_deg": report.repose_angle_deg,
                "largest_cluster_fraction": report.largest_cluster_fraction,
                "stress_cv": report.stress_cv,
                "kinetic_energy_per_particle": report.kinetic_energy_per_particle,
            }
        return meta

    def encode(self) -> bytes:
        return encode_frame(self.run.state)


class _Rejected(Exception):
    pass


def replay_log(scenario: Scenario, log: list[dict], final_step: int,
               cadence_fps: float = DEFAULT_FPS) -> list[str]:
    """Regenerate the frame hash sequence from the initial scenario and a
    recorded control log.  Bit-identical to the live session's stream."""
    eng = SessionEngine(scenario, cadence_fps)
    hashes = []

    def emit():
        hashes.append(hashlib.sha256(eng.encode()).hexdigest())

    idx = 0
    while idx < len(log):
        batch_id = log[idx]["batch"]
        target = log[idx]["step"]
        # run blocks until the recorded application step is reached
        while not eng.paused and eng.run.state.step_count < target:
            eng.advance_block()
            emit()
        batch = []
        while idx < len(log) and log[idx]["batch"] == batch_id:
            batch.append(log[idx]["msg"])
            idx += 1
        eng.apply_batch(batch)
        emit()
    while not eng.paused and eng.run.state.step_count < final_step:
        eng.advance_block()
        emit()
    return hashes


class SimWorker(threading.Thread):
    """Single owner of the simulation state; talks to the network handlers
    only through queues (commands in, frames out)."""

    def __init__(self, engine: SessionEngine, cadence_fps: float = DEFAULT_FPS,
                 metrics_every: int = 0):
        super().__init__(daemon=True)
        self.engine = engine
        self.cadence_fps = cadence_fps
        self.metrics_every = metrics_every
        self._broadcast_count = 0
        self.commands: queue.Queue = queue.Queue()
        self.subscribers: dict[int, queue.Queue] = {}
        self._next_sub = 0
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self.frame_hashes: list[str] = []
        self.diverged: str | None = None

    def subscribe(self) -> tuple[int, queue.Queue]:
        with self._lock:
            sid = self._next_sub
            self._next_sub += 1
            q = queue.Queue(maxsize=4)
            self.subscribers[sid] = q
        return sid, q

    def unsubscribe(self, sid: int):
        with self._lock:
            self.subscribers.pop(sid, None)

    def submit(self, msg: dict) -> dict:
        """Send a control message and wait for the worker's reply."""
        reply_q: queue.Queue = queue.Queue(maxsize=1)
        self.commands.put((msg, reply_q))
        return reply_q.get(timeout=30.0)

    def stop(self):
        self._stop.set()

    def _broadcast(self):
        self._broadcast_count += 1
        with_metrics = (self.metrics_every > 0
                        and self._broadcast_count % self.metrics_every == 0)
        meta = json.dumps(self.engine.frame_meta(with_metrics))
        frame = self.engine.encode()
        self.frame_hashes.append(hashlib.sha256(frame).hexdigest())
        with self._lock:
            for q in self.subscribers.values():
                item = (meta, frame)
                try:
                    q.put_nowait(item)
                except queue.Full:
                    try:
                        q.get_nowait()  # drop the stale frame, keep order
                    except queue.Empty:
                        pass
                    q.put_nowait(item)

    def run(self):
        period = 1.0 / self.cadence_fps if self.cadence_fps > 0 else 0.0
        while not self._stop.is_set():
            start = time.monotonic()
            batch = []
            while True:
                try:
                    batch.append(self.commands.get_nowait())
                except queue.Empty:
                    break
            if batch:
                results, applied = self.engine.apply_batch([m for m, _ in batch])
                for (_, reply_q), result in zip(batch, results):
                    reply_q.put(result)
                if applied:
                    self._broadcast()
            try:
                if self.engine.advance_block():
                    self._broadcast()
            except DivergenceError as err:
                self.diverged = str(err)
                self.engine.paused = True
            if period:
                remaining = period - (time.monotonic() - start)
                if remaining > 0:
                    time.sleep(remaining)
            elif not batch and self.engine.paused:
                time.sleep(0.001)  # idle spin guard


def create_app(scenario: Scenario, cadence_fps: float = DEFAULT_FPS,
               metrics_every: int = 25):
    """FastAPI application exposing /ws; the worker lives in the lifespan."""
    engine = SessionEngine(scenario, DEFAULT_FPS)
    worker = SimWorker(engine, cadence_fps, metrics_every)

    @asynccontextmanager
    async def lifespan(app):
        worker.start()
        yield
        worker.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.worker = worker

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        await websocket.send_json(engine.hello())
        sid, frame_q = worker.subscribe()

        def poll_frame():
            # short timeout so task cancellation is never blocked on the get
            try:
                return frame_q.get(timeout=0.2)
            except queue.Empty:
                return _POLL_AGAIN

        async def sender():
            while True:
                item = await anyio.to_thread.run_sync(poll_frame)
                if item is None:
                    return
                if item is _POLL_AGAIN:
                    continue
                meta, frame = item
                await websocket.send_text(meta)
                await websocket.send_bytes(frame)

        async def receiver():
            while True:
                try:
                    text = await websocket.receive_text()
                except WebSocketDisconnect:
                    return
                try:
                    msg = json.loads(text)
                    if not isinstance(msg, dict):
                        raise ValueError("control message must be an object")
                except ValueError as err:
                    await websocket.send_json({"type": "error",
                                               "reason": f"malformed JSON: {err}"})
                    continue
                reply = await anyio.to_thread.run_sync(worker.submit, msg)
                await websocket.send_json(reply)

        try:
            async with anyio.create_task_group() as tg:
                tg.start_soon(sender)
                await receiver()
                tg.cancel_scope.cancel()
        finally:
            worker.unsubscribe(sid)

    return app


def serve(scenario: Scenario, port: int, cadence_fps: float = DEFAULT_FPS,
          metrics_every: int = 25):
    """Blocking entry point used by `mesop serve`."""
    import uvicorn

    app = create_app(scenario, cadence_fps, metrics_every)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
