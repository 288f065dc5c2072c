import sys
from typing import List, Optional

from .core import config_from_args, init_from_args, mcp, run
from .exceptions import MsrCertError
# Importing registers tools and command runners
from . import commands  # noqa: F401


def main(argv: Optional[List[str]] = None) -> int:
    args = init_from_args(argv)
    if args.command == "serve":
        mcp.run()
        return 0
    try:
        run_config = config_from_args(args)
    except MsrCertError as e:
        print(f"msrcert: {e}", file=sys.stderr)
        return e.exit_code
    return run(run_config)


if __name__ == "__main__":
    sys.exit(main())
