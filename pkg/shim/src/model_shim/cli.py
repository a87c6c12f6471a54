import argparse
import sys

from .backends import load_backend
from .server import ShimConfig, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="model-shim",
        description="Serve a repair model over wire-protocol v1 (stdio or HTTP).",
    )
    parser.add_argument("--transport", default="stdio", choices=["stdio", "http"])
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--backend", default="echo",
                        help="echo, or plugin:module:function for a user-supplied model")
    parser.add_argument("--beam-default", type=int, default=5)
    args = parser.parse_args(argv)
    try:
        cfg = ShimConfig(
            transport=args.transport, port=args.port,
            backend=args.backend, beam_default=args.beam_default,
        )
        backend = load_backend(cfg.backend)
    except (ValueError, ImportError, AttributeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        serve(cfg, backend)
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
