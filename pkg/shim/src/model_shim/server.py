"""Protocol-v1 transports: newline-delimited JSON over stdio, and HTTP.

Both transports answer the same bodies. Handshake:
``{"hello":{"protocol":1}}`` -> ``{"hello":{"protocol":1,"name":"<backend>"}}``.
Repair: ``{"id","code_tokens","comment_tokens","beam"}`` ->
``{"id","candidates":[{"tokens","score"}]}``. A malformed request produces
``{"id": <echoed or null>, "error": "<message>"}`` and the server keeps
serving; it never dies on bad input.
"""

from __future__ import annotations

import json
import sys
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class ShimConfig:
    transport: str = "stdio"  # or "http"
    port: int = 8080
    backend: str = "echo"
    beam_default: int = 5

    def __post_init__(self):
        if self.transport not in ("stdio", "http"):
            raise ValueError(f"transport must be stdio or http, got {self.transport!r}")
        if self.transport == "http" and not 1024 <= self.port <= 65535:
            raise ValueError(f"port must be in [1024, 65535], got {self.port}")
        if self.beam_default < 1:
            raise ValueError(f"beam default must be >= 1, got {self.beam_default}")


def hello_body(backend) -> dict:
    return {"hello": {"protocol": PROTOCOL_VERSION, "name": backend.name}}


def handle_request(doc, backend, beam_default: int, lock: threading.Lock | None) -> dict:
    """One request object in, one response object out; errors stay in-band."""
    if not isinstance(doc, dict):
        return {"id": None, "error": "request must be a JSON object"}
    if "hello" in doc:
        return hello_body(backend)
    req_id = doc.get("id")
    if not isinstance(req_id, str):
        return {"id": None, "error": "missing or non-string id"}
    code = doc.get("code_tokens")
    comment = doc.get("comment_tokens")
    if not isinstance(code, list) or not isinstance(comment, list):
        return {"id": req_id, "error": "code_tokens and comment_tokens must be lists"}
    beam = doc.get("beam", beam_default)
    if not isinstance(beam, int) or beam < 1:
        return {"id": req_id, "error": "beam must be a positive integer"}
    try:
        if lock is not None:
            with lock:
                candidates = backend.repair(code, comment, beam)
        else:
            candidates = backend.repair(code, comment, beam)
    except Exception as exc:  # backend bugs become protocol errors, not crashes
        return {"id": req_id, "error": f"backend failure: {exc}"}
    return {"id": req_id, "candidates": candidates[:beam]}


def serve_stdio(backend, beam_default: int, stdin=None, stdout=None) -> None:
    """Strictly serial request handling: one line in, one line out."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"id": None, "error": f"malformed JSON: {exc.msg}"}
        else:
            response = handle_request(doc, backend, beam_default, lock=None)
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


def make_http_server(backend, beam_default: int, port: int) -> ThreadingHTTPServer:
    # Non-reentrant backends get serialized behind a lock even though the
    # HTTP layer itself is threaded.
    lock = None if getattr(backend, "reentrant", False) else threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def _send(self, status: int, body: dict) -> None:
            payload = json.dumps(body, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def do_GET(self):
            if self.path == "/v1/hello":
                self._send(200, hello_body(backend))
            else:
                self._send(404, {"error": f"no such path {self.path}"})

        def do_POST(self):
            if self.path != "/v1/repair":
                self._send(404, {"error": f"no such path {self.path}"})
                return
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                doc = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                self._send(200, {"id": None, "error": "malformed JSON body"})
                return
            self._send(200, handle_request(doc, backend, beam_default, lock))

        def log_message(self, fmt, *args):
            pass

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve(cfg: ShimConfig, backend=None) -> None:
    """Run until terminated."""
    from .backends import load_backend

    backend = backend if backend is not None else load_backend(cfg.backend)
    if cfg.transport == "stdio":
        serve_stdio(backend, cfg.beam_default)
    else:
        server = make_http_server(backend, cfg.beam_default, cfg.port)
        print(json.dumps({"listening": server.server_address[1]}), flush=True)
        server.serve_forever()
