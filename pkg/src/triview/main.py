from typing import Annotated

import typer

from .__version__ import version_line
from .experiments.commands import EXPERIMENT_SPEC, CommandTable

app = typer.Typer(
    name="triview",
    help="Multi-view dimension reduction experiments on simulated Gaussian three-view data.",
    no_args_is_help=True,
)


def _show_version(value: bool):
    if value:
        typer.echo(version_line())
        raise typer.Exit()


@app.callback()
def main(
    version: Annotated[
        bool, typer.Option("--version", callback=_show_version, is_eager=True, help="Print version and exit.")
    ] = False,
):
    pass


COMMANDS = CommandTable.register(app, EXPERIMENT_SPEC)


if __name__ == "__main__":
    app()
