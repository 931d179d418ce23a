from tollsub import __version__
from tollsub.cli.commands import check, figures, poa, solve
from tollsub.cli.deps import ArgumentParser
from tollsub.core.config import settings


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="tollsub", description=f"{settings.PROJECT_NAME}: tolls, subsidies and the price of anarchy")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")

    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    solve.register(subparsers)
    poa.register(subparsers)
    figures.register(subparsers)
    check.register(subparsers)
    return parser
