"""Live steering endpoint: a websocket server wrapping the simulation loop.

Wire protocol: one JSON object per text frame.
  server -> client: {"type":"hello", ...config echo...}
                    {"type":"telemetry", ...TelemetryRecord fields..., "wall": s}
                    {"type":"claimed","arm":k} / {"type":"released","arm":k}
                    {"type":"error","message":...}
  client -> server: {"type":"claim","arm":k}
                    {"type":"command","arm":k,"t":[x,y,z],"r":[w,x,y,z],
                     "grip":0..1,"stamp_ms":...}

Commands carry operator-side translations; the authoritative motion-scaled
mapping to patient-side targets happens here, anchored at claim time. One
writer per arm: the first claimer owns it, later claims are rejected and
those clients stay read-only spectators.

The tick loop never does I/O: telemetry fans out through bounded per-client
queues (drop-oldest) and command ingestion only flips per-arm slots that
the loop reads at tick start.
"""

from __future__ import annotations

import asyncio
import collections
import json
import logging
import math
import time

import numpy as np

from . import _kernels as K
from .config import RunConfig, build_sim
from .sim import scale_target
from .telemetry import write_csv_records
from .trajectories import LiveSource

log = logging.getLogger("teleokin.server")

QUEUE_DEPTH = 32          # telemetry frames buffered per client before drop
COMMAND_UNIT_TOL = 1e-6   # rotation unit-norm tolerance on the wire


class CommandValidationError(Exception):
    pass


def parse_command(msg: dict, n_arms: int):
    """Validate a command frame; returns (arm, t, r, grip, stamp_ms)."""
    try:
        arm = int(msg["arm"])
    except (KeyError, TypeError, ValueError):
        raise CommandValidationError("command needs an integer 'arm'")
    if not 1 <= arm <= n_arms:
        raise CommandValidationError(f"arm must be in 1..{n_arms}")
    try:
        t = np.asarray(msg["t"], dtype=float)
        r = np.asarray(msg["r"], dtype=float)
    except (KeyError, TypeError, ValueError):
        raise CommandValidationError("command needs numeric 't' and 'r'")
    if t.shape != (3,) or not np.all(np.isfinite(t)):
        raise CommandValidationError("'t' must be 3 finite numbers")
    if r.shape != (4,) or not np.all(np.isfinite(r)):
        raise CommandValidationError("'r' must be 4 finite numbers")
    if abs(np.linalg.norm(r) - 1.0) > COMMAND_UNIT_TOL:
        raise CommandValidationError("'r' must be unit within 1e-6")
    grip = float(msg.get("grip", 0.0))
    if not (0.0 <= grip <= 1.0) or not math.isfinite(grip):
        raise CommandValidationError("'grip' must be in [0, 1]")
    stamp = float(msg.get("stamp_ms", 0.0))
    return arm, t, r / np.linalg.norm(r), grip, stamp


class _Client:
    _next_id = 0

    def __init__(self, socket):
        self.socket = socket
        self.queue = collections.deque(maxlen=QUEUE_DEPTH)
        self.wakeup = asyncio.Event()
        _Client._next_id += 1
        self.id = _Client._next_id

    def push(self, text):
        self.queue.append(text)      # deque drops oldest when full
        self.wakeup.set()


class ServeSession:
    def __init__(self, config: RunConfig, out_path=None, max_ticks=None):
        self.config = config
        self.out_path = out_path or config.out
        self.max_ticks = max_ticks
        self.sources = [LiveSource() for _ in config.arms]
        self.sim = build_sim(config, sources=self.sources)
        self.clients = set()
        self.claims = {}            # arm index (1-based) -> client id
        self.anchors = {}           # arm index -> (anchor_ps, anchor_os)
        self.pending = {}           # arm index -> (t_d, r_d) applied at tick start
        self.records = []
        self.command_log = []
        self.tick_wall = collections.deque(maxlen=512)
        self._stop = asyncio.Event()
        self._started = asyncio.Event()
        self.port = None

    # ------------------------------------------------------------------
    def hello_frame(self):
        return {
            "type": "hello",
            "version": 1,
            "dt": self.sim.dt,
            "decimation": self.config.decimation,
            "motion_scaling": self.config.operator.motion_scaling,
            "arms": [
                {
                    "arm": i + 1,
                    "d_safe": a.spheres[0].d_safe if a.spheres else None,
                    "eta_d": a.spheres[0].eta_d if a.spheres else None,
                    "sphere_center": list(map(float, a.spheres[0].center))
                    if a.spheres else None,
                    "claimed": (i + 1) in self.claims,
                    "shaft_length": a.model.shaft_length,
                    "t0": [float(v) for v in a.t],
                    "r0": [float(v) for v in a.prev_r],
                }
                for i, a in enumerate(self.sim.arms)
            ],
        }

    def _broadcast(self, frame: dict):
        text = json.dumps(frame)
        for c in self.clients:
            c.push(text)

    async def _send_error(self, client, message):
        try:
            await client.socket.send(json.dumps({"type": "error",
                                                 "message": message}))
        except Exception:
            pass

    # ------------------------------------------------------------------
    async def handle_client(self, socket):
        client = _Client(socket)
        self.clients.add(client)
        sender = asyncio.create_task(self._sender(client))
        try:
            await socket.send(json.dumps(self.hello_frame()))
            async for raw in socket:
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict):
                        raise ValueError("frame must be an object")
                except ValueError as e:
                    await self._send_error(client, f"bad frame: {e}")
                    continue
                kind = msg.get("type")
                if kind == "claim":
                    await self._handle_claim(client, msg)
                elif kind == "command":
                    await self._handle_command(client, msg)
                else:
                    await self._send_error(client, f"unknown frame type {kind!r}")
        except Exception:
            pass
        finally:
            self.clients.discard(client)
            sender.cancel()
            released = [a for a, cid in self.claims.items() if cid == client.id]
            for a in released:
                del self.claims[a]
                self.anchors.pop(a, None)
                self._broadcast({"type": "released", "arm": a})

    async def _handle_claim(self, client, msg):
        try:
            arm = int(msg.get("arm"))
        except (TypeError, ValueError):
            await self._send_error(client, "claim needs an integer 'arm'")
            return
        if not 1 <= arm <= len(self.sim.arms):
            await self._send_error(client, f"no such arm {arm}")
            return
        if arm in self.claims and self.claims[arm] != client.id:
            await self._send_error(client,
                                   f"arm {arm} already claimed; spectating")
            return
        self.claims[arm] = client.id
        self.anchors.pop(arm, None)  # anchors bind on the first command
        await client.socket.send(json.dumps({"type": "claimed", "arm": arm}))

    async def _handle_command(self, client, msg):
        try:
            arm, t_raw, r_d, grip, stamp = parse_command(msg, len(self.sim.arms))
        except CommandValidationError as e:
            await self._send_error(client, str(e))
            return
        if self.claims.get(arm) != client.id:
            await self._send_error(client, f"arm {arm} not claimed by you")
            return
        if arm not in self.anchors:
            # clutch-in: current hold target is the patient-side anchor
            src = self.sources[arm - 1]
            anchor_ps = src.target(self.sim.clock)[0].copy()
            self.anchors[arm] = (anchor_ps, t_raw.copy())
        anchor_ps, anchor_os = self.anchors[arm]
        t_d = scale_target(t_raw, self.config.operator.motion_scaling,
                           anchor_ps, anchor_os)
        self.pending[arm] = (t_d, r_d, grip, stamp)

    async def _sender(self, client):
        while True:
            await client.wakeup.wait()
            client.wakeup.clear()
            while client.queue:
                text = client.queue.popleft()
                await client.socket.send(text)

    # ------------------------------------------------------------------
    async def _loop(self):
        dt = self.sim.dt
        loop = asyncio.get_running_loop()
        next_deadline = loop.time()
        k = 0
        while not self._stop.is_set():
            if self.max_ticks is not None and k >= self.max_ticks:
                break
            # apply freshest commands at tick start (zero-order hold)
            for arm, (t_d, r_d, grip, stamp) in self.pending.items():
                self.sources[arm - 1].push(t_d, r_d)
                self.command_log.append({
                    "tick": k, "arm": arm, "t": [float(v) for v in t_d],
                    "r": [float(v) for v in r_d], "grip": grip,
                    "stamp_ms": stamp})
            self.pending.clear()
            records = self.sim.step()
            self.records.extend(records)
            self.tick_wall.append(loop.time())
            if k % self.config.decimation == 0:
                wall = time.time()
                for rec, arm, src in zip(records, self.sim.arms, self.sources):
                    frame = rec.to_frame()
                    frame["wall"] = wall
                    # shaft geometry so clients can draw truth, not predict it
                    rs, ts = K._fk_frames(arm.model.dh, arm.model.kind,
                                          arm.q, arm.model.base_r,
                                          arm.model.base_t)
                    p, l = K._shaft(rs, ts, arm.model.shaft_joint_index)
                    frame["tip"] = [float(v) for v in ts[9]]
                    frame["shaft_p"] = [float(v) for v in p]
                    frame["shaft_l"] = [float(v) for v in l]
                    tgt_t, tgt_r = src.target(self.sim.clock)
                    frame["target"] = [float(v) for v in tgt_t]
                    self._broadcast(frame)
            k += 1
            next_deadline += dt
            delay = next_deadline - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            elif delay < -1.0:
                # fell badly behind (debugger, swap); drop the backlog
                next_deadline = loop.time()

    async def run(self, bind: str):
        from websockets.asyncio.server import serve as ws_serve
        host, _, port = bind.rpartition(":")
        if not host:
            raise ValueError(f"bind address must be host:port, got {bind!r}")
        async with ws_serve(self.handle_client, host, int(port),
                            close_timeout=0.5) as server:
            self.port = server.sockets[0].getsockname()[1]
            self._started.set()
            log.info("serving on %s:%d (dt=%g s, decimation=%d)",
                     host, self.port, self.sim.dt, self.config.decimation)
            try:
                await self._loop()
            finally:
                self.flush()

    def stop(self):
        self._stop.set()

    def flush(self):
        if self.out_path:
            write_csv_records(self.out_path, self.records)
            log.info("flushed %d records to %s", len(self.records), self.out_path)
        if self.config.command_log:
            with open(self.config.command_log, "w") as f:
                for entry in self.command_log:
                    f.write(json.dumps(entry) + "\n")


def read_command_log(path, arm=None):
    """Command log entries as (tick, t, r) tuples, optionally one arm's."""
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            e = json.loads(line)
            if arm is None or int(e["arm"]) == arm:
                out.append((int(e["tick"]), e["t"], e["r"]))
    return out


def serve_forever(config: RunConfig, bind: str, out_path=None) -> int:
    session = ServeSession(config, out_path=out_path)
    try:
        asyncio.run(session.run(bind))
    except KeyboardInterrupt:
        log.info("interrupted; telemetry flushed")
        return 0
    except OSError as e:
        log.error("cannot bind %s: %s", bind, e)
        return 3
    return 0
