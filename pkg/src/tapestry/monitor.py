"""Live HTTP monitoring and steering.

A small threaded HTTP server runs beside the evolution loop. GET
endpoints serve the latest published snapshot and introspection tables;
POSTs queue steering and control requests, which the loop applies only
at iteration boundaries, so a step in flight is never perturbed. While
paused, the loop keeps republishing snapshots (uptime advances) and
keeps honouring control requests, including terminate.

Endpoints: GET /status /params /timers /log /reduce?var=&op=, POST
/params {"name","value"}, POST /control {"action"}. All responses carry
permissive CORS headers so a browser dashboard served from anywhere can
talk to a local run.
"""

from __future__ import annotations

import json
import threading
import time as _time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .unigrid import REDUCTION_OPS


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        pass

    @property
    def mon(self) -> "Monitor":
        return self.server.monitor

    def _respond(self, code: int, payload: bytes,
                 content_type="application/json"):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(payload)

    def _json(self, code: int, obj):
        self._respond(code, json.dumps(obj).encode())

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/status":
            self._respond(200, self.mon.snapshot_bytes())
        elif url.path == "/params":
            self._json(200, self.mon.param_table())
        elif url.path == "/timers":
            self._json(200, self.mon.sim.flesh.timer_report())
        elif url.path == "/log":
            self._json(200, {
                "steering": list(self.mon.sim.flesh.steering_log),
                "events": list(self.mon.sim.events),
            })
        elif url.path == "/reduce":
            q = parse_qs(url.query)
            var = q.get("var", [""])[0]
            op = q.get("op", ["l2"])[0]
            self._do_reduce(var, op)
        else:
            self._json(404, {"error": f"no such endpoint: {url.path}"})

    def _do_reduce(self, var, op):
        if op not in REDUCTION_OPS:
            self._json(400, {"error": f"unknown reduction '{op}'",
                             "ops": list(REDUCTION_OPS)})
            return
        try:
            group, leaf = self.mon.sim.resolve_variable(var)
        except KeyError as e:
            self._json(404, {"error": str(e),
                             "variables": self.mon.sim.variable_names()})
            return
        req = _ReduceRequest(group, leaf, op)
        self.mon.reduce_queue.append(req)
        if req.done.wait(timeout=30.0):
            self._json(200, {"var": var, "op": op, "value": req.value,
                             "iteration": req.iteration})
        else:
            self._json(503, {"error": "reduction not serviced; is the run "
                                      "loop active?"})

    def _read_body(self):
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length)

    def do_POST(self):
        url = urlparse(self.path)
        try:
            body = json.loads(self._read_body().decode() or "{}")
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
        except ValueError as e:
            self._json(400, {"error": f"malformed request body: {e}"})
            return
        if url.path == "/params":
            self._post_param(body)
        elif url.path == "/control":
            self._post_control(body)
        else:
            self._json(404, {"error": f"no such endpoint: {url.path}"})

    def _post_param(self, body):
        name = body.get("name")
        if not name or "value" not in body:
            self._json(400, {"error": "need 'name' and 'value'"})
            return
        sim = self.mon.sim
        spec = sim.flesh.params.get(name)
        if spec is None:
            self._json(404, {"error": f"unknown parameter {name!r}"})
            return
        if not spec.steerable:
            self._json(403, {"error": f"{name} is not steerable"})
            return
        raw = body["value"]
        if isinstance(raw, bool):
            raw = "true" if raw else "false"
        raw = str(raw)
        try:
            spec.coerce(raw)
        except Exception as e:
            self._json(400, {"error": f"bad value for {name}: {e}"})
            return
        self.mon.steer_queue.append((name, raw))
        self._json(202, {"queued": True, "name": name, "value": raw,
                         "applies_after_iteration": sim.iteration})

    def _post_control(self, body):
        action = body.get("action")
        if action not in ("pause", "resume", "checkpoint", "terminate"):
            self._json(400, {"error": f"unknown action {action!r}"})
            return
        self.mon.control_queue.append(action)
        self._json(202, {"queued": True, "action": action})


class _ReduceRequest:
    def __init__(self, group, var, op):
        self.group = group
        self.var = var
        self.op = op
        self.value = None
        self.iteration = None
        self.done = threading.Event()


class Monitor:
    def __init__(self, sim, port: int = 0):
        self.sim = sim
        self.steer_queue: deque = deque()
        self.control_queue: deque = deque()
        self.reduce_queue: deque = deque()
        self._snapshot = b"{}"
        self._lock = threading.Lock()
        self.server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self.server.daemon_threads = True
        self.server.monitor = self
        self.port = self.server.server_address[1]
        self._thread = threading.Thread(
            target=self.server.serve_forever, name="tapestry-monitor",
            daemon=True)

    def start(self):
        self._thread.start()
        self.publish()

    def stop(self):
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5.0)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    # -- called from the HTTP threads ---------------------------------------

    def snapshot_bytes(self) -> bytes:
        with self._lock:
            return self._snapshot

    def param_table(self):
        f = self.sim.flesh
        rows = []
        for name in sorted(f.params):
            spec = f.params[name]
            rows.append({
                "name": name,
                "kind": spec.kind,
                "value": f.get(name),
                "default": spec.default,
                "steerable": spec.steerable,
                "choices": list(spec.choices),
                "low": spec.low,
                "high": spec.high,
                "description": spec.description,
            })
        return {"params": rows}

    # -- called from the run loop at iteration boundaries --------------------

    def publish(self):
        data = json.dumps(self.sim.state_dict(), sort_keys=True).encode()
        with self._lock:
            self._snapshot = data

    def _drain(self):
        sim = self.sim
        while self.control_queue:
            action = self.control_queue.popleft()
            if action == "pause":
                if not sim.paused:
                    sim.paused = True
                    sim.events.append(f"{sim.iteration} pause")
            elif action == "resume":
                if sim.paused:
                    sim.paused = False
                    sim.events.append(f"{sim.iteration} resume")
            elif action == "checkpoint":
                sim.checkpoint()
            elif action == "terminate":
                sim.terminating = True
                sim.paused = False
                sim.events.append(f"{sim.iteration} terminate")
        while self.steer_queue:
            name, raw = self.steer_queue.popleft()
            try:
                sim.flesh.steer(name, raw, sim.iteration)
            except Exception as e:
                sim.events.append(f"{sim.iteration} steer-reject {name}: {e}")
        while self.reduce_queue:
            req = self.reduce_queue.popleft()
            try:
                req.value = sim.driver.reduce(req.group, req.var, req.op)
            except Exception:
                req.value = None
            req.iteration = sim.iteration
            req.done.set()

    def service(self):
        """Apply queued requests; if paused, idle here (still publishing
        fresh snapshots and honouring requests) until resumed."""
        self._drain()
        self.publish()
        while self.sim.paused and not self.sim.terminating:
            _time.sleep(0.01)
            self._drain()
            self.publish()
