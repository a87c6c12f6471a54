"""Black-box access to repair models over in-process, subprocess, and HTTP transports.

Wire protocol v1 (both remote transports speak the same JSON bodies):

* subprocess: newline-delimited JSON over stdin/stdout. The adapter opens
  with ``{"hello":{"protocol":1}}`` and expects
  ``{"hello":{"protocol":1,"name":"<str>"}}`` back. Requests are
  ``{"id":"<str>","code_tokens":[...],"comment_tokens":[...],"beam":<int>}``
  and responses ``{"id":"<str>","candidates":[{"tokens":[...],"score":<float>}]}``,
  one object per line, UTF-8, id echoed verbatim.
* HTTP: ``GET /v1/hello`` for the handshake, ``POST /v1/repair`` with the
  request body above.

Responses are cached per (model identity, canonical input serialization,
beam), so re-querying heavily overlapping perturbed inputs skips the
transport entirely.
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
import threading
import urllib.error
import urllib.request
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from queue import Empty, Queue

from .errors import QueryError, QueryTimeout
from .tokens import Stream, TokenSequence

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class ProgramInput:
    code: TokenSequence
    comment: TokenSequence

    def __post_init__(self):
        if self.code.stream is not Stream.CODE or self.comment.stream is not Stream.COMMENT:
            raise ValueError("ProgramInput streams must be (code, comment)")
        if len(self.code) == 0 and len(self.comment) == 0:
            raise ValueError("ProgramInput must carry at least one non-empty stream")


@dataclass(frozen=True)
class RepairCandidate:
    tokens: TokenSequence
    model_score: float

    @property
    def texts(self) -> list[str]:
        return self.tokens.texts


@dataclass(frozen=True)
class RepairOutput:
    candidates: tuple[RepairCandidate, ...]

    @property
    def top(self) -> RepairCandidate:
        return self.candidates[0]

    @staticmethod
    def from_raw(raw, beam: int) -> "RepairOutput":
        """Sort (stable, score-descending), drop duplicate sequences, cap at beam."""
        parsed = []
        for entry in raw:
            texts, score = entry
            if not texts:
                raise QueryError("candidate with empty token list")
            score = float(score)
            if not math.isfinite(score):
                raise QueryError(f"non-finite candidate score {score!r}")
            parsed.append((texts, score))
        parsed.sort(key=lambda pair: -pair[1])
        seen = set()
        out = []
        for texts, score in parsed:
            key = tuple(texts)
            if key in seen:
                continue
            seen.add(key)
            out.append(
                RepairCandidate(tokens=TokenSequence.from_texts(texts, Stream.CODE), model_score=score)
            )
            if len(out) >= beam:
                break
        if not out:
            raise QueryError("model returned no candidates")
        return RepairOutput(candidates=tuple(out))


def canonical_request(program_input: ProgramInput, beam: int) -> str:
    return json.dumps(
        {"code": program_input.code.texts, "comment": program_input.comment.texts, "beam": beam},
        separators=(",", ":"),
        ensure_ascii=False,
    )


class ResponseCache:
    """In-memory response cache with optional content-addressed disk spill."""

    def __init__(self, spill_dir: str | Path | None = None):
        self._lock = threading.Lock()
        self._mem: dict[str, RepairOutput] = {}
        self._dir = Path(spill_dir) if spill_dir else None
        if self._dir:
            self._dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def _digest(key: str) -> str:
        return hashlib.sha256(key.encode("utf-8")).hexdigest()

    def get(self, key: str) -> RepairOutput | None:
        with self._lock:
            hit = self._mem.get(key)
        if hit is not None or self._dir is None:
            return hit
        path = self._dir / (self._digest(key) + ".json")
        if not path.exists():
            return None
        doc = json.loads(path.read_text("utf-8"))
        out = RepairOutput(
            candidates=tuple(
                RepairCandidate(
                    tokens=TokenSequence.from_texts(c["tokens"], Stream.CODE),
                    model_score=c["score"],
                )
                for c in doc["candidates"]
            )
        )
        with self._lock:
            self._mem[key] = out
        return out

    def put(self, key: str, output: RepairOutput) -> None:
        with self._lock:
            self._mem[key] = output
        if self._dir is not None:
            doc = {
                "candidates": [
                    {"tokens": c.texts, "score": c.model_score} for c in output.candidates
                ]
            }
            path = self._dir / (self._digest(key) + ".json")
            path.write_text(json.dumps(doc, ensure_ascii=False), "utf-8")

    def __len__(self) -> int:
        with self._lock:
            return len(self._mem)


class ModelHandle:
    """One reachable model: identity, transport, and its response cache."""

    name: str = "unknown"
    max_inflight: int = 1

    def __init__(self, cache: ResponseCache | None = None):
        self.cache = cache if cache is not None else ResponseCache()

    @property
    def identity(self) -> str:
        raise NotImplementedError

    def transport_request(self, code_tokens, comment_tokens, beam):
        """Return raw [(texts, score), ...] for one request."""
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class InProcessModel(ModelHandle):
    """Wraps a plain callable (code_tokens, comment_tokens, beam) -> raw candidates."""

    def __init__(self, fn, name: str, max_inflight: int = 1, cache: ResponseCache | None = None):
        super().__init__(cache)
        self.fn = fn
        self.name = name
        self.max_inflight = max_inflight
        self.calls = 0
        self._lock = threading.Lock()

    @property
    def identity(self) -> str:
        return f"inproc:{self.name}"

    def transport_request(self, code_tokens, comment_tokens, beam):
        with self._lock:
            self.calls += 1
        return self.fn(code_tokens, comment_tokens, beam)


class SubprocessModel(ModelHandle):
    """Protocol-v1 model behind a line-oriented child process."""

    max_inflight = 1

    def __init__(self, cmd, timeout: float = DEFAULT_TIMEOUT, cache: ResponseCache | None = None):
        super().__init__(cache)
        self.cmd = cmd
        self.timeout = timeout
        self._lock = threading.Lock()
        self._counter = 0
        self._stderr_tail: deque[str] = deque(maxlen=20)
        try:
            self._proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise QueryError(f"failed to spawn model process {cmd!r}: {exc}") from exc
        self._lines: Queue = Queue()
        self._reader = threading.Thread(target=self._pump_stdout, daemon=True)
        self._reader.start()
        self._errpump = threading.Thread(target=self._pump_stderr, daemon=True)
        self._errpump.start()
        reply = self._roundtrip({"hello": {"protocol": PROTOCOL_VERSION}})
        hello = reply.get("hello") if isinstance(reply, dict) else None
        if not hello or hello.get("protocol") != PROTOCOL_VERSION or "name" not in hello:
            raise QueryError(f"bad handshake reply: {reply!r}{self._diag()}")
        self.name = hello["name"]

    def _pump_stdout(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _pump_stderr(self):
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _diag(self) -> str:
        tail = "".join(f"\n  stderr: {l}" for l in self._stderr_tail)
        rc = self._proc.poll()
        state = f" (exit code {rc})" if rc is not None else ""
        return state + tail

    def _roundtrip(self, message: dict) -> dict:
        with self._lock:
            try:
                self._proc.stdin.write(json.dumps(message, ensure_ascii=False) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError) as exc:
                raise QueryError(f"model process pipe closed: {exc}{self._diag()}") from exc
            try:
                line = self._lines.get(timeout=self.timeout)
            except Empty:
                raise QueryTimeout(f"no reply within {self.timeout}s{self._diag()}") from None
            if line is None:
                raise QueryError(f"model process closed stdout{self._diag()}")
            try:
                return json.loads(line)
            except json.JSONDecodeError as exc:
                raise QueryError(f"malformed JSON from model: {line!r}{self._diag()}") from exc

    @property
    def identity(self) -> str:
        return f"cmd:{self.name}"

    def transport_request(self, code_tokens, comment_tokens, beam):
        self._counter += 1
        req_id = f"q{self._counter}"
        reply = self._roundtrip(
            {"id": req_id, "code_tokens": code_tokens, "comment_tokens": comment_tokens, "beam": beam}
        )
        return _parse_response(reply, req_id)

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class HttpModel(ModelHandle):
    """Protocol-v1 model behind an HTTP endpoint."""

    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_inflight: int = 4,
        cache: ResponseCache | None = None,
    ):
        super().__init__(cache)
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_inflight = max_inflight
        self._counter = 0
        self._lock = threading.Lock()
        hello = self._get("/v1/hello").get("hello", {})
        if hello.get("protocol") != PROTOCOL_VERSION or "name" not in hello:
            raise QueryError(f"bad handshake reply from {self.base_url}: {hello!r}")
        self.name = hello["name"]

    def _get(self, path: str) -> dict:
        try:
            with urllib.request.urlopen(self.base_url + path, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raise QueryError(f"GET {path} -> HTTP {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError) as exc:
            raise QueryError(f"GET {path} failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise QueryError(f"malformed JSON from GET {path}") from exc

    def _post(self, path: str, body: dict) -> dict:
        data = json.dumps(body, ensure_ascii=False).encode("utf-8")
        req = urllib.request.Request(
            self.base_url + path, data=data, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raise QueryError(f"POST {path} -> HTTP {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError) as exc:
            raise QueryError(f"POST {path} failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise QueryError(f"malformed JSON from POST {path}") from exc

    @property
    def identity(self) -> str:
        return f"http:{self.name}@{self.base_url}"

    def transport_request(self, code_tokens, comment_tokens, beam):
        with self._lock:
            self._counter += 1
            req_id = f"q{self._counter}"
        reply = self._post(
            "/v1/repair",
            {"id": req_id, "code_tokens": code_tokens, "comment_tokens": comment_tokens, "beam": beam},
        )
        return _parse_response(reply, req_id)


def _parse_response(reply: dict, req_id: str):
    if not isinstance(reply, dict):
        raise QueryError(f"non-object response: {reply!r}")
    if "error" in reply:
        raise QueryError(f"model error: {reply['error']}")
    if reply.get("id") != req_id:
        raise QueryError(f"id mismatch: sent {req_id!r}, got {reply.get('id')!r}")
    cands = reply.get("candidates")
    if not isinstance(cands, list):
        raise QueryError(f"missing candidates list in response: {reply!r}")
    raw = []
    for c in cands:
        if not isinstance(c, dict) or "tokens" not in c or "score" not in c:
            raise QueryError(f"malformed candidate: {c!r}")
        raw.append((list(c["tokens"]), c["score"]))
    return raw


def query(model: ModelHandle, program_input: ProgramInput, beam: int = 5) -> RepairOutput:
    """Query the model once, via the cache."""
    if beam < 1:
        raise QueryError(f"beam must be >= 1, got {beam}")
    key = f"{model.identity}|{canonical_request(program_input, beam)}"
    hit = model.cache.get(key)
    if hit is not None:
        return hit
    raw = model.transport_request(program_input.code.texts, program_input.comment.texts, beam)
    output = RepairOutput.from_raw(raw, beam)
    model.cache.put(key, output)
    return output


def query_batch(model: ModelHandle, inputs, beam: int = 5):
    """Query many inputs; failures are returned positionally as QueryError values."""
    inputs = list(inputs)

    def one(program_input):
        try:
            return query(model, program_input, beam)
        except QueryError as exc:
            return exc

    if model.max_inflight <= 1 or len(inputs) <= 1:
        return [one(p) for p in inputs]

    # Pre-resolve duplicates so concurrent workers do not race the same key
    # through the transport.
    results: list = [None] * len(inputs)
    first_seen: dict[str, int] = {}
    followers: dict[int, int] = {}
    unique = []
    for idx, p in enumerate(inputs):
        key = canonical_request(p, beam)
        if key in first_seen:
            followers[idx] = first_seen[key]
        else:
            first_seen[key] = idx
            unique.append(idx)
    with ThreadPoolExecutor(max_workers=model.max_inflight) as pool:
        for idx, res in zip(unique, pool.map(lambda i: one(inputs[i]), unique)):
            results[idx] = res
    for idx, src in followers.items():
        results[idx] = results[src]
    return results
