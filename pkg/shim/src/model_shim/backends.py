"""Model backends the shim can serve.

A backend is any object with a ``name`` string, a ``reentrant`` flag, and a
``repair(code_tokens, comment_tokens, beam)`` method returning a list of
``{"tokens": [...], "score": <float>}`` dicts. The echo backend returns the
request's code tokens unchanged; the plugin backend forwards to a
user-supplied ``module:function`` callable, which keeps model weights out of
this repository entirely.
"""

from __future__ import annotations

import importlib


class EchoBackend:
    name = "echo"
    reentrant = True

    def repair(self, code_tokens, comment_tokens, beam):
        return [{"tokens": list(code_tokens), "score": 0.0}]


class PluginBackend:
    reentrant = False

    def __init__(self, spec: str):
        module_name, _, attr = spec.partition(":")
        if not module_name or not attr:
            raise ValueError(f"plugin spec must look like module:function, got {spec!r}")
        module = importlib.import_module(module_name)
        self.fn = getattr(module, attr)
        self.name = f"plugin:{spec}"
        self.reentrant = bool(getattr(self.fn, "reentrant", False))

    def repair(self, code_tokens, comment_tokens, beam):
        out = []
        for cand in self.fn(code_tokens, comment_tokens, beam):
            if isinstance(cand, dict):
                out.append({"tokens": list(cand["tokens"]), "score": float(cand["score"])})
            else:
                tokens, score = cand
                out.append({"tokens": list(tokens), "score": float(score)})
        return out


def load_backend(spec: str):
    if spec == "echo":
        return EchoBackend()
    if spec.startswith("plugin:"):
        return PluginBackend(spec[len("plugin:"):])
    raise ValueError(f"unknown backend {spec!r} (use echo or plugin:module:function)")
