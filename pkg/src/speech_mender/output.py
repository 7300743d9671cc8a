"""Terminal output formatting."""

import json
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.table import Table

from .config_schema import AblationReport, EvalReport, PipelineReport
from .planner import EditPlan

console = Console()
error_console = Console(stderr=True, markup=False, highlight=False, soft_wrap=True)


def set_quiet(quiet: bool) -> None:
    """Silence progress output; errors still reach stderr."""
    console.quiet = quiet


def print_success(message: str) -> None:
    """Print a success message."""
    console.print(f"[bold green]✓[/bold green] {message}")


def print_warning(message: str) -> None:
    """Print a warning message."""
    console.print(f"[bold yellow]![/bold yellow] {message}")


def print_info(message: str) -> None:
    """Print an info message."""
    console.print(f"[bold blue]→[/bold blue] {message}")


def print_file_written(file_path: Path) -> None:
    """Print file written confirmation."""
    print_success(f"Wrote [bold]{file_path}[/bold]")


def print_error_payload(payload: dict[str, Any]) -> None:
    """Print a machine-readable error as one JSON line on stderr."""
    error_console.print(json.dumps(payload, default=str, ensure_ascii=False))


def print_plan(plan: EditPlan) -> None:
    """Print the edit regions of a plan."""
    if not plan.regions:
        print_info(f"{plan.utterance_id or 'utterance'}: nothing to edit ({plan.method})")
        return

    table = Table(title=f"{plan.utterance_id} · {plan.method}")
    table.add_column("Op", style="cyan")
    table.add_column("Start", justify="right")
    table.add_column("End", justify="right")
    table.add_column("Target")
    for region in plan.regions:
        table.add_row(
            region.op.value,
            f"{region.start:.3f}",
            f"{region.end:.3f}",
            " ".join(region.target_tokens) or "[dim]-[/dim]",
        )
    console.print(table)


def print_eval_report(report: EvalReport) -> None:
    """Print the aggregate row of an evaluation report."""
    table = Table(title=f"{report.kind} over {len(report.entries)} utterance(s)")
    table.add_column("Metric", style="cyan")
    table.add_column("Mean", justify="right")
    for name, value in report.aggregate.items():
        table.add_row(name, f"{value:.4f}")
    console.print(table)


def print_pipeline_report(report: PipelineReport) -> None:
    """Print the outcome of one correction."""
    print_info(
        f"{report.utterance_id}: {report.regions} region(s), "
        f"{report.input_duration:.3f}s -> {report.output_duration:.3f}s"
    )
    if report.mcd_input is not None and report.mcd_corrected is not None:
        print_info(
            f"MCD to reference: input {report.mcd_input:.3f} dB, "
            f"corrected {report.mcd_corrected:.3f} dB"
        )


def print_ablation(report: AblationReport) -> None:
    """Print the method x source MCD matrix."""
    sources = list(dict.fromkeys(cell.source for cell in report.cells))
    methods = list(dict.fromkeys(cell.method for cell in report.cells))
    cells = {(cell.method, cell.source): cell for cell in report.cells}

    table = Table(title="MCD (dB) to original, lower is better")
    table.add_column("Method", style="cyan")
    for source in sources:
        table.add_column(source, justify="right")
    for method in methods:
        row = []
        for source in sources:
            cell = cells.get((method, source))
            if cell is None or not cell.applicable:
                row.append("[dim]n/a[/dim]")
            elif cell.mcd is None:
                row.append("[dim]-[/dim]")
            else:
                row.append(f"{cell.mcd:.3f}")
        table.add_row(method, *row)
    console.print(table)
    if report.baseline_mcd is not None:
        print_info(f"Uncorrected perturbed audio: {report.baseline_mcd:.3f} dB")
