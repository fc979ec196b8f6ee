"""Execution targets: in-process simulator and an HTTP job service with client.

Wire format is JSON.  ``POST /jobs`` takes ``{program, shots, seed, noise}``
and answers ``{"id": ...}``; ``GET /jobs/<id>`` answers a job record
``{id, status, result?, error?}`` whose ``result`` carries
``{shots, seed, clbits, bitstrings}``; ``GET /device`` answers the device.
"""
from __future__ import annotations

import json
import logging
import threading
import time
import urllib.error
import urllib.request
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .circuit import Circuit, parse_program
from .compiler import DeviceSpec, agave8
from .simulator import NoiseModel, ShotResult, sample_shots

log = logging.getLogger(__name__)

SERVICE_ENV = "HYBRIDQC_SERVICE_URL"


class BackendError(RuntimeError):
    pass


class JobFailed(BackendError):
    pass


class JobNotFound(BackendError):
    pass


@dataclass(frozen=True)
class JobRequest:
    program: str
    shots: int
    noise: NoiseModel | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {"program": self.program, "shots": self.shots, "seed": self.seed,
                "noise": self.noise.to_dict() if self.noise else None}

    @classmethod
    def from_dict(cls, data) -> JobRequest:
        if not isinstance(data, dict):
            raise ValueError("job request must be an object")
        for key in ("program", "shots"):
            if key not in data:
                raise ValueError(f"job request is missing {key!r}")
        seed = data.get("seed")
        return cls(str(data["program"]), int(data["shots"]),
                   NoiseModel.from_dict(data.get("noise")), None if seed is None else int(seed))

    def parse(self) -> Circuit:
        """Parse and validate; raises ``ValueError`` on a bad request."""
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.seed is not None and self.seed < 0:
            raise ValueError("seed must be non-negative")
        circuit = parse_program(self.program)
        if not circuit.is_physical:
            raise ValueError("program uses abstract qubits")
        if circuit.free_symbols:
            raise ValueError(f"program has unbound symbols: {', '.join(sorted(circuit.free_symbols))}")
        if not circuit.measurements:
            raise ValueError("program has no measurements")
        return circuit


@dataclass
class JobRecord:
    id: str
    status: str = "queued"
    result: ShotResult | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        out = {"id": self.id, "status": self.status}
        if self.result is not None:
            out["result"] = self.result.to_dict()
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_dict(cls, data) -> JobRecord:
        result = data.get("result")
        return cls(data["id"], data["status"], ShotResult.from_dict(result) if result else None, data.get("error"))


def check_device(circuit: Circuit, device: DeviceSpec) -> None:
    """Reject programs that do not fit the device's qubits or coupling graph."""
    for q in circuit.qubits:
        if q.index >= device.n_qubits:
            raise ValueError(f"qubit {q.index} is not on {device.name}")
    for ins in circuit.instructions:
        if len(ins.qubits) == 2 and not device.connected(*(q.index for q in ins.qubits)):
            raise ValueError(f"{ins} is not on a {device.name} edge")


def run_request(request: JobRequest, device: DeviceSpec | None, default_noise: NoiseModel | None) -> ShotResult:
    circuit = request.parse()
    if device is not None:
        check_device(circuit, device)
    noise = request.noise if request.noise is not None else default_noise
    return sample_shots(circuit, request.shots, noise, request.seed)


class LocalBackend:
    """Runs requests in-process with the same checks the job service applies."""

    def __init__(self, device: DeviceSpec | None = None, default_noise: NoiseModel | None = None):
        self.device = device or agave8()
        self.default_noise = default_noise

    def execute(self, request: JobRequest) -> ShotResult:
        return run_request(request, self.device, self.default_noise)

    def __repr__(self):
        return f"LocalBackend({self.device.name})"


class RemoteBackend:
    """Client for the job service: submit, then poll until done."""

    def __init__(self, url: str, timeout: float = 60.0, poll_interval: float = 0.005):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.poll_interval = poll_interval
        self._device: DeviceSpec | None = None

    def _call(self, method: str, path: str, body: dict | None = None) -> dict:
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(self.url + path, data=data, method=method,
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read())
        except urllib.error.HTTPError as exc:
            try:
                message = json.loads(exc.read()).get("error", exc.reason)
            except ValueError:
                message = exc.reason
            if exc.code == HTTPStatus.NOT_FOUND:
                raise JobNotFound(message) from None
            raise BackendError(f"{exc.code}: {message}") from None
        except (urllib.error.URLError, OSError) as exc:
            raise BackendError(f"cannot reach {self.url}: {exc}") from None

    @property
    def device(self) -> DeviceSpec:
        if self._device is None:
            self._device = DeviceSpec.from_dict(self._call("GET", "/device"))
        return self._device

    def submit(self, request: JobRequest) -> str:
        request.parse()  # fail before the round trip
        return self._call("POST", "/jobs", request.to_dict())["id"]

    def status(self, job_id: str) -> JobRecord:
        return JobRecord.from_dict(self._call("GET", f"/jobs/{job_id}"))

    def wait(self, job_id: str) -> ShotResult:
        deadline = time.monotonic() + self.timeout
        delay = self.poll_interval
        while True:
            record = self.status(job_id)
            if record.status == "done":
                return record.result
            if record.status == "failed":
                raise JobFailed(record.error or "job failed")
            if time.monotonic() > deadline:
                raise BackendError(f"job {job_id} still {record.status} after {self.timeout}s")
            time.sleep(delay)
            delay = min(delay * 2, 0.2)

    def execute(self, request: JobRequest) -> ShotResult:
        return self.wait(self.submit(request))

    def __repr__(self):
        return f"RemoteBackend({self.url})"


def execute(backend, request: JobRequest) -> ShotResult:
    return backend.execute(request)


class JobService:
    """Threaded HTTP job service; jobs run on a worker pool."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, device: DeviceSpec | None = None,
                 default_noise: NoiseModel | None = None, workers: int = 4):
        self.device = device or agave8()
        self.default_noise = default_noise
        self._jobs: dict[str, JobRecord] = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="job")
        self._httpd = ThreadingHTTPServer((host, port), self._handler())
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def submit(self, request: JobRequest) -> str:
        request.parse()
        if request.seed is None:
            seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)
            request = JobRequest(request.program, request.shots, request.noise, seed)
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = JobRecord(job_id)
        self._pool.submit(self._run, job_id, request)
        return job_id

    def _run(self, job_id: str, request: JobRequest) -> None:
        with self._lock:
            self._jobs[job_id].status = "running"
        try:
            result = run_request(request, self.device, self.default_noise)
        except Exception as exc:  # job failures are reported, never raised
            log.warning("job %s failed: %s", job_id, exc)
            with self._lock:
                self._jobs[job_id] = JobRecord(job_id, "failed", error=str(exc))
            return
        with self._lock:
            self._jobs[job_id] = JobRecord(job_id, "done", result=result)

    def record(self, job_id: str) -> JobRecord:
        with self._lock:
            rec = self._jobs.get(job_id)
            if rec is None:
                raise JobNotFound(f"unknown job {job_id}")
            return JobRecord(rec.id, rec.status, rec.result, rec.error)

    def _handler(self):
        service = self

        class Handler(BaseHTTPRequestHandler):
            def _send(self, code: int, body: dict):
                payload = json.dumps(body).encode()
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def do_GET(self):
                parts = self.path.strip("/").split("/")
                if parts == ["device"]:
                    return self._send(HTTPStatus.OK, service.device.to_dict())
                if len(parts) == 2 and parts[0] == "jobs":
                    try:
                        return self._send(HTTPStatus.OK, service.record(parts[1]).to_dict())
                    except JobNotFound as exc:
                        return self._send(HTTPStatus.NOT_FOUND, {"error": str(exc)})
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})

            def do_POST(self):
                if self.path.rstrip("/") != "/jobs":
                    return self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})
                try:
                    length = int(self.headers.get("Content-Length", 0))
                    request = JobRequest.from_dict(json.loads(self.rfile.read(length)))
                    job_id = service.submit(request)
                except (ValueError, TypeError, KeyError) as exc:
                    return self._send(HTTPStatus.BAD_REQUEST, {"error": str(exc)})
                self._send(HTTPStatus.CREATED, {"id": job_id})

            def log_message(self, fmt, *args):
                log.debug("%s - %s", self.address_string(), fmt % args)

        return Handler

    def start(self) -> JobService:
        self._thread = threading.Thread(target=self._httpd.serve_forever, name="job-service", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._pool.shutdown(wait=True)

    def __enter__(self) -> JobService:
        return self.start()

    def __exit__(self, *exc):
        self.shutdown()


def serve(host: str = "127.0.0.1", port: int = 0, device: DeviceSpec | None = None,
          default_noise: NoiseModel | None = None) -> JobService:
    """Bind and start the job service in a background thread."""
    return JobService(host, port, device, default_noise).start()
