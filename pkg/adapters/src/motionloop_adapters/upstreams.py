"""Upstream bridges: HTTP JSON endpoints and subprocess JSON-line processes.

Every upstream exposes ``call(payload: dict) -> dict``. Transient failures
are retried up to the configured count before surfacing UpstreamUnavailable;
the raised message records how many attempts were made.
"""

from __future__ import annotations

import json
import subprocess
import threading
import time
import urllib.error
import urllib.request

from .wire import UpstreamUnavailable


class RetryingUpstream:
    """Wraps a raw ``call`` with bounded retries and a small backoff."""

    def __init__(self, inner, retries: int = 2, backoff_seconds: float = 0.05):
        self.inner = inner
        self.retries = retries
        self.backoff_seconds = backoff_seconds

    def call(self, payload: dict) -> dict:
        attempts = self.retries + 1
        last_error = None
        for attempt in range(attempts):
            try:
                return self.inner.call(payload)
            except (UpstreamUnavailable, TimeoutError, ConnectionError, OSError) as exc:
                last_error = exc
                if attempt + 1 < attempts:
                    time.sleep(self.backoff_seconds * (attempt + 1))
        raise UpstreamUnavailable(
            f"upstream failed after {attempts} attempts: {last_error}"
        ) from last_error


class HttpJsonUpstream:
    """POSTs a JSON payload and expects a JSON object back."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def call(self, payload: dict) -> dict:
        data = json.dumps(payload).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=data, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = response.read()
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise UpstreamUnavailable(f"{self.url}: {exc}") from exc
        try:
            return json.loads(body.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise UpstreamUnavailable(f"{self.url}: non-JSON reply ({exc})") from exc


class SubprocessJsonUpstream:
    """Keeps a child process alive and exchanges one JSON line per call."""

    def __init__(self, command: list[str], timeout: float = 60.0):
        self.command = command
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True
                )
            except OSError as exc:
                raise UpstreamUnavailable(f"cannot start {self.command}: {exc}") from exc
        return self._proc

    def call(self, payload: dict) -> dict:
        with self._lock:
            proc = self._ensure()
            try:
                proc.stdin.write(json.dumps(payload) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise UpstreamUnavailable(f"subprocess upstream failed: {exc}") from exc
        if not line:
            raise UpstreamUnavailable("subprocess upstream closed its stream")
        try:
            return json.loads(line)
        except ValueError as exc:
            raise UpstreamUnavailable(f"subprocess upstream sent non-JSON: {line!r}") from exc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None


class CallableUpstream:
    """Adapts a plain function; the stub of choice in tests and dry runs."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def call(self, payload: dict) -> dict:
        self.calls += 1
        return self.fn(payload)
