# tollsub/main.py
import logging
import sys
from typing import List, Optional

from tollsub.cli.app import build_parser
from tollsub.core.errors import InstanceParseError, TollSubError
from tollsub.core.logging import setup_logging

logger = logging.getLogger(__name__)


def _report(exc: TollSubError) -> None:
    print(f"error: {exc.message}", file=sys.stderr)
    if isinstance(exc, InstanceParseError):
        for d in exc.diagnostics:
            loc = ".".join(str(p) for p in d.get("loc", ()))
            print(f"  {loc}: {d.get('msg')} [{d.get('type')}]", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        setup_logging(args.log_level)
        return int(args.handler(args) or 0)
    except TollSubError as exc:
        logger.debug("exit %d", exc.exit_code, exc_info=True)
        _report(exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
