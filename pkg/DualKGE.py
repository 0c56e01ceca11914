"""DualKGE command-line entrypoint.

Builds the argparse interface, registers the subcommands and maps failures
to exit codes (0 ok, 1 usage/config, 2 data, 3 runtime/numeric).
Configuration is provided via flags, `--config` files and environment
variables loaded from .env when present.
"""

import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

from functionality.dual_kge.commands import register_commands
from functionality.dual_kge.commands.common import CliParser, SharedContext, exit_code_for


def build_parser(shared: SharedContext) -> CliParser:
	parser = CliParser(prog="DualKGE", description="Dual positive/negative knowledge graph embeddings")
	subparsers = parser.add_subparsers(dest="command", parser_class=CliParser)
	subparsers.required = True
	register_commands(subparsers, shared)
	return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
	# Load .env before reading any DUALKGE_* variable
	load_dotenv()
	try:
		shared = SharedContext.from_env()
		args = build_parser(shared).parse_args(argv)
		return int(args.func(args, shared))
	except KeyboardInterrupt:
		print("⚠️ Interrupted.", file=sys.stderr)
		return 3
	except Exception as exc:
		code = exit_code_for(exc)
		print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
		return code


if __name__ == "__main__":
	sys.exit(main())
