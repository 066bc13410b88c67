from __future__ import annotations

import logging
import sys
from typing import List, Optional

from . import create_parser
from .core.artifacts import ArtifactStore, canonical_json
from .core.config import load_config
from .core.errors import CausalNetError

logger = logging.getLogger("causalnet")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# argparse bookkeeping that is not configuration
_NOT_FLAGS = {"stage", "handler", "config"}


def main(argv: Optional[List[str]] = None) -> int:
    parser = create_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_FLAGS}
    debug = False
    try:
        cfg = load_config(flags, args.config)
        debug = cfg.log_level == "DEBUG"
        level = getattr(logging, cfg.log_level, logging.INFO)
        logging.basicConfig(level=level, format=LOG_FORMAT)
        logging.getLogger().setLevel(level)
        cfg.validate(args.stage)
        summary = args.handler(cfg, ArtifactStore(cfg.output_dir))
    except CausalNetError as e:
        if debug:
            logger.exception("%s failed", args.stage)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (ValueError, OSError) as e:
        if debug:
            logger.exception("%s failed", args.stage)
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(canonical_json({"stage": args.stage, "summary": summary}), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
