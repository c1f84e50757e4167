"""HTTP client for an external logits server, plus a stub server for tests.

Protocol: ``POST /logprobs`` with ``{"tokens": [...]}`` returns
``{"logprobs": [[64 floats], ...]}``, one row per input position, row ``t``
conditioning on tokens ``<= t``.  Failures answer non-2xx with
``{"error": "..."}``.  Zero probabilities travel as ``-Infinity``.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ContractError, ProtocolError, TransportError
from .model import EvalSession, LocalModel, Model
from .tokenizer import BOS, VOCAB_SIZE

log = logging.getLogger(__name__)

TIMEOUT_ENV = "PXS_REMOTE_TIMEOUT_MS"
ROW_TOLERANCE = 1e-4


def default_timeout() -> float:
    return float(os.environ.get(TIMEOUT_ENV, "30000")) / 1000.0


@dataclass
class RemoteModel(Model):
    url: str
    timeout: float = field(default_factory=default_timeout)
    retries: int = 3
    backoff: float = 0.05
    kind = "remote"

    def __post_init__(self):
        self.url = self.url.rstrip("/")
        self.requests = 0

    def session(self) -> EvalSession:
        return RemoteSession(self)

    def describe(self):
        return f"remote:{self.url}"

    def handshake(self) -> None:
        self.fetch([BOS])

    def fetch(self, tokens: Sequence[int]) -> np.ndarray:
        """Positionwise log-probabilities for ``tokens``, shape (len, 64)."""
        body = json.dumps({"tokens": [int(t) for t in tokens]}).encode()
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            req = urllib.request.Request(
                self.url + "/logprobs", data=body, headers={"Content-Type": "application/json"}
            )
            try:
                self.requests += 1
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = resp.read()
                break
            except urllib.error.HTTPError as e:
                detail = _error_text(e)
                if 400 <= e.code < 500:
                    raise ProtocolError(f"server rejected request ({e.code}): {detail}") from None
                last = f"HTTP {e.code}: {detail}"
            except (urllib.error.URLError, OSError) as e:
                last = str(getattr(e, "reason", e))
            log.debug("remote attempt %d failed: %s", attempt + 1, last)
        else:
            raise TransportError(f"{self.url}: {last} (after {self.retries + 1} attempts)")
        return _parse_rows(payload, len(tokens))


def _error_text(e: urllib.error.HTTPError) -> str:
    try:
        return json.loads(e.read())["error"]
    except Exception:
        return e.reason


def _parse_rows(payload: bytes, n: int) -> np.ndarray:
    try:
        rows = json.loads(payload)["logprobs"]
        a = np.asarray(rows, dtype=float)
    except (ValueError, KeyError, TypeError) as e:
        raise ProtocolError(f"malformed reply: {e}") from None
    if a.shape != (n, VOCAB_SIZE):
        raise ProtocolError(f"expected {n}x{VOCAB_SIZE} logprobs, got shape {a.shape}")
    if np.any(np.isnan(a)) or np.any(a > ROW_TOLERANCE):
        raise ProtocolError("log-probabilities must be finite-or--inf and <= 0")
    err = np.abs(logsumexp(a, axis=1))
    if np.any(err > ROW_TOLERANCE):
        raise ProtocolError(f"row not normalized (|log sum| = {err.max():.2e})")
    return a


class RemoteSession(EvalSession):
    """Keeps the rows of the last fetched sequence; any prefix of it is free."""

    def __init__(self, model: RemoteModel):
        self.model = model
        self.tokens: list[int] = []
        self.rows = np.empty((0, VOCAB_SIZE))

    def _ensure(self, seq: list[int]) -> None:
        n = len(seq)
        if n <= len(self.tokens) and self.tokens[:n] == seq:
            return
        self.rows = self.model.fetch(seq)
        self.tokens = seq

    def next_distribution(self, prefix):
        prefix = list(prefix)
        if not prefix or prefix[0] != BOS:
            raise ContractError("prefix must be non-empty and start with bos")
        self._ensure(prefix)
        return self.rows[len(prefix) - 1]

    def continuation_logprobs(self, prompt, continuation):
        seq = list(prompt) + list(continuation)
        self._ensure(seq[:-1])
        start = len(prompt) - 1
        return np.array([self.rows[start + t][tok] for t, tok in enumerate(continuation)])


# ---------------------------------------------------------------------------
# stub server


class StubServer:
    """Serves a local model over the wire protocol on a background thread.

    ``fail_first`` makes the first N requests answer 503, for retry tests.
    """

    def __init__(self, model: LocalModel, host: str = "127.0.0.1", port: int = 0, fail_first: int = 0):
        self.model = model
        self.fail_remaining = fail_first
        self.served = 0
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                log.debug("stub: " + fmt, *args)

            def _reply(self, code, obj):
                data = json.dumps(obj).encode()
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self):
                if self.path != "/logprobs":
                    return self._reply(404, {"error": f"unknown path {self.path}"})
                length = int(self.headers.get("Content-Length", 0))
                with stub._lock:
                    stub.served += 1
                    if stub.fail_remaining > 0:
                        stub.fail_remaining -= 1
                        return self._reply(503, {"error": "injected failure"})
                try:
                    tokens = json.loads(self.rfile.read(length))["tokens"]
                    if not tokens or any(not isinstance(t, int) or not 0 <= t < VOCAB_SIZE for t in tokens):
                        raise ValueError("tokens must be a non-empty list of ids 0..63")
                except (ValueError, KeyError, TypeError) as e:
                    return self._reply(400, {"error": str(e)})
                rows = stub.positionwise(tokens)
                self._reply(200, {"logprobs": rows})

        self.httpd = ThreadingHTTPServer((host, port), Handler)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def positionwise(self, tokens):
        sess = self.model.session()
        return [sess.next_distribution(tokens[: t + 1]).tolist() for t in range(len(tokens))]

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> StubServer:
        self.thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    import argparse

    from .model import make_backend

    ap = argparse.ArgumentParser(description="Serve a local model over the logprobs protocol.")
    ap.add_argument("--model", default="table:seed=0")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8765)
    args = ap.parse_args(argv)
    server = StubServer(make_backend(args.model), args.host, args.port)
    print(f"serving {args.model} at {server.url}", flush=True)
    try:
        server.httpd.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
