"""Line-delimited subprocess protocol for user-supplied objectives.

The evaluator is any executable that reads one JSON request per line on
stdin and writes one JSON response per line on stdout:

    request:  {"id": <int>, "point": {"<dim name>": <value>, ...}}
    response: {"id": <int>, "y": <float>}
              {"id": <int>, "error": "<message>"}

Responses must carry the request id. A crash, a malformed line, a
mismatched id, a non-numeric y or a timeout raises EvaluationError; the
caller records the acquisition as failed and proposes again.
"""

from __future__ import annotations

import json
import subprocess
import threading
import queue

from .space import SearchSpace

__all__ = ["EvaluationError", "ExternalBlackBox"]


class EvaluationError(RuntimeError):
    """The external evaluator failed to produce a usable value."""


class ExternalBlackBox:
    """Callable black-box backed by a child process speaking the line protocol."""

    def __init__(self, command, space: SearchSpace, timeout: float = 60.0):
        self.space = space
        self.timeout = timeout
        self._next_id = 0
        self.proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def __call__(self, point) -> float:
        self.space.validate(point)
        if self.proc.poll() is not None:
            raise EvaluationError("evaluator process has exited")
        req_id = self._next_id
        self._next_id += 1
        request = {"id": req_id, "point": self.space.as_dict(point)}
        try:
            self.proc.stdin.write(json.dumps(request) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise EvaluationError(f"evaluator pipe broken: {e}") from e
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise EvaluationError(f"evaluator timed out after {self.timeout}s")
        if line is None:
            raise EvaluationError("evaluator closed its output")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as e:
            raise EvaluationError(f"malformed response line: {line!r}") from e
        if resp.get("id") != req_id:
            raise EvaluationError(f"response id {resp.get('id')} != request id {req_id}")
        if "error" in resp:
            raise EvaluationError(f"evaluator error: {resp['error']}")
        y = resp.get("y")
        if not isinstance(y, (int, float)) or isinstance(y, bool):
            raise EvaluationError(f"non-numeric y in response: {y!r}")
        return float(y)

    def close(self):
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
