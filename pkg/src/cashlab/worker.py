"""Client side of the external-evaluator wire protocol.

Workers are subprocesses speaking newline-delimited JSON over their
standard streams. On startup the worker emits a handshake line
``{"protocol": 1, "max_concurrency": n}``; afterwards each request line
``{"id", "model", "params", "resource", "seed"}`` is answered by a
response line ``{"id", "loss", "status"}`` (``status`` is ``ok`` or
``error``; error responses may add a ``message``).
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
from typing import Any, Mapping, Sequence

from .configspace import Configuration, ConfigurationSpace

PROTOCOL_VERSION = 1


class WorkerError(RuntimeError):
    """Base class for external-worker failures."""


class WorkerCrashError(WorkerError):
    """The worker process exited or closed its stream mid-conversation."""


class WorkerTimeoutError(WorkerError):
    """No response arrived within the deadline."""


class WorkerProtocolError(WorkerError):
    """Malformed handshake or response line."""


class WorkerResponseMismatch(WorkerError):
    """A response carried an id that does not match the pending request."""


class WorkerReportedError(WorkerError):
    """The worker answered with status=error."""


class WorkerLossError(WorkerError):
    """The worker reported a non-finite loss."""


def _reader(stream, lines: queue.Queue) -> None:
    for line in stream:
        lines.put(line)
    lines.put(None)


class WorkerClient:
    """Own one worker subprocess and exchange evaluation requests with it."""

    def __init__(self, command: str | Sequence[str], timeout: float = 60.0):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = float(timeout)
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        self._reader_thread = threading.Thread(
            target=_reader, args=(self._proc.stdout, self._lines), daemon=True
        )
        self._reader_thread.start()
        self._lock = threading.Lock()
        self._next_id = 0
        handshake = self._read_json(self.timeout, "handshake")
        if handshake.get("protocol") != PROTOCOL_VERSION:
            raise WorkerProtocolError(
                f"worker announced protocol {handshake.get('protocol')!r}, "
                f"expected {PROTOCOL_VERSION}"
            )
        self.max_concurrency = int(handshake.get("max_concurrency", 1))

    def _read_json(self, timeout: float, what: str) -> Mapping[str, Any]:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise WorkerTimeoutError(f"timed out after {timeout}s waiting for {what}")
        if line is None:
            raise WorkerCrashError(f"worker closed its output while awaiting {what}")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WorkerProtocolError(f"unparseable {what} line: {line!r}") from exc
        if not isinstance(obj, dict):
            raise WorkerProtocolError(f"{what} line is not an object: {line!r}")
        return obj

    def evaluate(
        self,
        model: str,
        params: Mapping[str, Any],
        resource: float,
        seed: int,
    ) -> float:
        """Send one request and return the loss from the matching response."""
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            request = {
                "id": request_id,
                "model": model,
                "params": dict(params),
                "resource": resource,
                "seed": int(seed),
            }
            try:
                self._proc.stdin.write(json.dumps(request) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError) as exc:
                raise WorkerCrashError(
                    f"worker pipe closed while sending request {request_id}"
                ) from exc
            response = self._read_json(self.timeout, f"response to request {request_id}")
        if response.get("id") != request_id:
            raise WorkerResponseMismatch(
                f"response id {response.get('id')!r} != request id {request_id}"
            )
        status = response.get("status")
        if status == "error":
            raise WorkerReportedError(
                f"worker reported an error for request {request_id}: "
                f"{response.get('message', '(no message)')}"
            )
        if status != "ok" or "loss" not in response:
            raise WorkerProtocolError(f"malformed response: {response!r}")
        loss = response["loss"]
        if not isinstance(loss, (int, float)) or not math.isfinite(float(loss)):
            raise WorkerLossError(
                f"worker returned non-finite loss {loss!r} for request {request_id}"
            )
        return float(loss)

    def evaluator(self, space: ConfigurationSpace):
        """Adapt this client to the engine's evaluator contract."""
        client = self

        class _WorkerEvaluator:
            max_concurrency = client.max_concurrency

            def __call__(self, config: Configuration, resource: float, trial_seed: int) -> float:
                model = space.models[config.model_index].name
                return client.evaluate(model, config.values, resource, trial_seed)

        return _WorkerEvaluator()

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "WorkerClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_evaluate(
    worker_command: str | Sequence[str],
    space: ConfigurationSpace,
    configuration: Configuration,
    resource: float,
    trial_seed: int,
    timeout: float = 60.0,
) -> float:
    """One-shot evaluation: launch a worker, evaluate, shut it down."""
    with WorkerClient(worker_command, timeout=timeout) as client:
        model = space.models[configuration.model_index].name
        return client.evaluate(model, configuration.values, resource, trial_seed)
