"""Reference protocol-v1 shim: wrap any callable repair model behind stdio or HTTP."""

from .backends import EchoBackend, load_backend
from .server import ShimConfig, serve

__version__ = "0.1.0"
