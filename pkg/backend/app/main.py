# backend/app/main.py
import functools
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from app.config import settings
from app.core.exceptions import ConfigError, NotFoundException, UnisolverError
from app.db.checkpoint import load_checkpoint
from app.db.dataset_file import load_dataset, save_dataset
from app.db.records import export_csv, read_report, write_report
from app.schemas.pde_components import Family, SplitTag
from app.schemas.reports import EvalReport
from app.schemas.task_spec import TaskSpec
from app.schemas.train_config import RunConfig
from app.services.dataset_service import generate_dataset
from app.services.evaluation_service import (
    check_declared_config,
    evaluation_service,
    model_from_checkpoint,
)
from app.services.sample_layout import layout_target, sample_layout_service
from app.services.training_service import train as train_model
from app.utils.config_files import dump_config, load_config

logger = logging.getLogger(__name__)
console = Console()

cli_app = typer.Typer(help=f"{settings.PROJECT_NAME} {settings.PROJECT_VERSION}", no_args_is_help=True)


def handle_errors(func):
    """Report library errors in red and exit with status 1."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (UnisolverError, OSError) as exc:
            message = exc.message if isinstance(exc, UnisolverError) else str(exc)
            console.print(f"[bold red]Error:[/bold red] {escape(message)}")
            raise typer.Exit(code=1)
    return wrapper


def report_table(report: EvalReport) -> Table:
    table = Table(title=f"Relative L2 ({report.name})")
    table.add_column("condition")
    table.add_column("split")
    table.add_column("n", justify="right")
    table.add_column("rel. L2", justify="right")
    table.add_column("promotion", justify="right")
    for entry in report.entries:
        group = ", ".join(f"{k}={v}" for k, v in entry.group.items()) or "-"
        table.add_row(
            group,
            entry.split.value,
            str(entry.count),
            "absent" if entry.rel_l2 is None else f"{entry.rel_l2:.4e}",
            "" if entry.promotion is None else f"{entry.promotion:.1%}",
        )
    return table


@cli_app.callback()
def configure(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level")):
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.LOG_LEVEL,
        format=settings.LOG_FORMAT,
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@cli_app.command()
@handle_errors
def generate(
    family: Family = typer.Argument(..., help="string, advection, family1d or heterns-mini"),
    config_path: Path = typer.Argument(..., help="TaskSpec JSON file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Overrides the seed in the config"),
    out: Path = typer.Option(Path("dataset.upde"), "--out", help="Output dataset file"),
):
    """Generate a dataset file from a task config."""
    task = load_config(config_path, TaskSpec)
    if task.family != family:
        raise ConfigError(f"config describes family '{task.family.value}', not '{family.value}'")
    dataset = generate_dataset(task, rng_seed=seed)
    save_dataset(out, dataset)
    console.print(f"samples: {len(dataset)}")
    console.print(f"retries: {dataset.header.retries}")
    console.print(f"condition groups: {len(dataset.header.condition_groups)}")
    console.print(f"written: {out}")


@cli_app.command()
@handle_errors
def train(config_path: Path = typer.Argument(..., help="RunConfig JSON file")):
    """Train a model; writes checkpoint, loss curve and summary into the run's output directory."""
    run = load_config(config_path, RunConfig)
    dataset = load_dataset(run.dataset)
    dump_config(run.output_dir / "run_config.json", run)
    result = train_model(run.model, run.train, dataset, run.output_dir, run.embedding_file)
    console.print(f"parameters: {result.summary.parameter_count}")
    console.print(f"best epoch: {result.summary.best_epoch}")
    console.print(f"final training loss: {result.summary.final_train_loss!r}")
    console.print(f"checkpoint: {result.checkpoint_path}")


@cli_app.command(name="eval")
@handle_errors
def eval_command(
    checkpoint: Path = typer.Argument(..., help="Checkpoint file"),
    dataset_path: Path = typer.Argument(..., help="Dataset file"),
    split: Optional[SplitTag] = typer.Option(None, "--split", help="Only evaluate ID or OOD samples"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="RunConfig that must agree with the checkpoint"),
    baseline: Optional[Path] = typer.Option(None, "--baseline-report", help="Report to compute promotions against"),
    oracle: bool = typer.Option(False, "--oracle", help="Score the ground truth itself (sanity check)"),
    embedding_file: Optional[Path] = typer.Option(None, "--embedding-file"),
    out: Path = typer.Option(Path("report.jsonl"), "--out", help="Report file (JSON lines)"),
):
    """Evaluate a checkpoint per condition group and split."""
    ckpt = load_checkpoint(checkpoint)
    dataset = load_dataset(dataset_path)
    if config_path is not None:
        check_declared_config(ckpt.model_config, load_config(config_path, RunConfig).model, dataset)
    report = evaluation_service.evaluate(
        ckpt,
        dataset,
        split,
        baseline_report=read_report(baseline) if baseline else None,
        predictor=(lambda samples: np.stack([layout_target(s) for s in samples])) if oracle else None,
        embedding_file=embedding_file,
    )
    write_report(out, report)
    console.print(report_table(report))
    console.print(f"overall mean: {report.overall_mean!r}")
    console.print(f"written: {out}")


@cli_app.command()
@handle_errors
def predict(
    checkpoint: Path = typer.Argument(..., help="Checkpoint file"),
    dataset_path: Path = typer.Argument(..., help="Dataset file"),
    index: int = typer.Option(0, "--index", help="Sample index"),
    embedding_file: Optional[Path] = typer.Option(None, "--embedding-file"),
    out: Path = typer.Option(Path("prediction.npy"), "--out", help="Output .npy file"),
):
    """Predict one sample and save the field with numpy."""
    ckpt = load_checkpoint(checkpoint)
    dataset = load_dataset(dataset_path)
    if not 0 <= index < len(dataset):
        raise NotFoundException(f"sample {index} not in dataset of {len(dataset)} samples")
    model = model_from_checkpoint(ckpt)
    sample_layout_service.check_compatible(model.config, dataset)
    embedder = sample_layout_service.make_symbol_embedder(model.config, embedding_file)
    prediction = evaluation_service.predict(model, [dataset.samples[index]], embedder)[0]
    out.parent.mkdir(parents=True, exist_ok=True)
    np.save(out, prediction)
    console.print(f"prediction {prediction.shape} written to {out}")


@cli_app.command()
@handle_errors
def export(
    records: Path = typer.Argument(..., help="Loss curve or report (JSON lines)"),
    csv_path: Path = typer.Option(..., "--csv", help="CSV file to write"),
):
    """Convert JSON-lines records to CSV."""
    rows = export_csv(records, csv_path)
    console.print(f"{rows} rows written to {csv_path}")


if __name__ == "__main__":
    cli_app()
