from functionality.dual_kge.commands import register_commands
from functionality.dual_kge.commands.common import CliParser, SharedContext


def test_register_commands_adds_expected():
	# Build a parser with an explicit context (no environment lookups)
	parser = CliParser(prog="DualKGE")
	subparsers = parser.add_subparsers(dest="command", parser_class=CliParser)
	names = set(register_commands(subparsers, SharedContext(threads=1, output_dir="runs", progress=False)))
	expected = {
		"build-dataset",
		"train",
		"eval",
		"sweep",
		"export",
		"compare",
	}
	assert expected.issubset(names)
	args = parser.parse_args(["export", "--checkpoint", "c.json", "--out", "e.tsv"])
	assert args.which == "pos" and callable(args.func)
