from enum import Enum
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.console import Console
from rich.table import Table

from ..core.defaults import sim_defaults
from ..core.errors import ConfigError
from ..core.log import configure_logging
from . import harness
from .config import ExperimentConfig, load_config
from .records import write_results


class CommandTable:
    """
    Register CLI subcommands on a typer app from a declarative spec.

    Spec format:
    experiment_spec = [
        {
            "name": "exp1",                 # subcommand name
            "experiment": "exp1",           # ExperimentConfig.experiment
            "runner": "run_exp1",           # function in triview.experiments.harness
            "help": "...",
        },
        ...
    ]
    """

    @staticmethod
    def register(app: typer.Typer, experiment_spec: list[dict], console: Console | None = None) -> dict:
        """
        Adds one subcommand per spec entry.
        Returns a registry mapping command name to its callback.
        """
        console = console or Console()
        registry = {}

        def _resolve_runner(target):
            """
            target can be:
              - callable
              - str: name of a function in the harness module
            """
            if callable(target):
                return target
            runner = getattr(harness, target, None)
            if not callable(runner):
                raise ValueError(f"unknown experiment runner {target!r}")
            return runner

        for entry in experiment_spec:
            command = _build_command(entry["experiment"], _resolve_runner(entry["runner"]), console)
            command.__doc__ = entry.get("help")
            app.command(name=entry["name"], help=entry.get("help"))(command)
            registry[entry["name"]] = command
        return registry


class EvalMode(str, Enum):
    population = "population"
    holdout = "holdout"


def _build_command(experiment: str, runner, console: Console):
    def command(
        config_path: Annotated[Optional[Path], typer.Option("--config", help="TOML file of config keys.")] = None,
        seed: Annotated[Optional[int], typer.Option("--seed", help="Master seed.")] = None,
        trials: Annotated[Optional[int], typer.Option("--trials", help="Trials per group.")] = None,
        out: Annotated[Optional[Path], typer.Option("--out", help="Output directory.")] = None,
        eval_mode: Annotated[Optional[EvalMode], typer.Option("--eval", help="Loss evaluation.")] = None,
        holdout_n: Annotated[Optional[int], typer.Option("--holdout-n", help="Holdout rows for --eval holdout.")] = None,
        k: Annotated[Optional[int], typer.Option("--k", help="Hidden dimension.")] = None,
        workers: Annotated[Optional[int], typer.Option("--workers", help="Parallel trial workers (-1: all cores).")] = None,
        exact_moments: Annotated[bool, typer.Option("--exact-moments", help="Fit and regress on exact moments.")] = False,
        smoke: Annotated[bool, typer.Option("--smoke", help="Reduced trial counts.")] = False,
        quiet: Annotated[bool, typer.Option("--quiet", help="Only warnings and errors.")] = False,
        verbose: Annotated[bool, typer.Option("--verbose", help="Debug logging.")] = False,
    ):
        configure_logging(quiet=quiet, verbose=verbose)
        if smoke and trials is None:
            trials = sim_defaults.TRIALS_SMOKE
        overrides = {
            "master_seed": seed,
            "trials": trials,
            "output_dir": out,
            "eval_mode": eval_mode.value if eval_mode else None,
            "holdout_n": holdout_n,
            "k": k,
            "workers": workers,
            "exact_moments": exact_moments or None,
        }
        try:
            config = load_config(experiment, config_path, overrides)
        except ConfigError as exc:
            console.print(f"[red]invalid configuration:[/red] {exc}")
            raise typer.Exit(code=2)

        result = runner(config)
        summary = harness.build_summary(config, result)
        if isinstance(result, harness.OracleSummary):
            write_results(config.output_dir, result.records, summary, result.projections)
        else:
            write_results(config.output_dir, result, summary)
        if not quiet:
            console.print(summary_table(config, summary))
        if summary.get("passed") is False:
            raise typer.Exit(code=1)

    return command


def _fmt(value) -> str:
    return "-" if value is None else f"{value:.4g}"


def summary_table(config: ExperimentConfig, summary: dict) -> Table:
    table = Table(title=f"{config.experiment}: {config.trials} trial(s) per group, seed {config.master_seed}")
    table.add_column("group")
    table.add_column("set")
    table.add_column("median loss", justify="right")
    table.add_column("IQR", justify="right")
    table.add_column("median ratio to S1", justify="right")
    table.add_column("failed", justify="right")
    for group in summary["groups"]:
        for name, stats in group["loss"].items():
            ratio = group["ratio_to_s1"].get(name, {}).get("median")
            iqr = None if stats["q1"] is None else stats["q3"] - stats["q1"]
            table.add_row(
                group["group_label"] or "all", name.upper(), _fmt(stats["median"]), _fmt(iqr), _fmt(ratio),
                str(group["failed"]),
            )
    return table


EXPERIMENT_SPEC = [
    {
        "name": "exp1",
        "experiment": "exp1",
        "runner": "run_exp1",
        "help": "Square loss of raw views (S1), fused features (S2) and summed views (S3).",
    },
    {
        "name": "exp2",
        "experiment": "exp2",
        "runner": "run_exp2",
        "help": "Loss of the fused features as the unlabeled sample size grows.",
    },
    {
        "name": "exp3",
        "experiment": "exp3",
        "runner": "run_exp3",
        "help": "Raw views vs fused features when labeled data is scarce.",
    },
    {
        "name": "oracle-check",
        "experiment": "oracle_check",
        "runner": "run_oracle_check",
        "help": "Fit on exact moments and compare with the optimal subspace; exits 1 above tolerance.",
    },
]
