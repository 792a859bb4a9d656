from collections.abc import Mapping, Sequence
from io import StringIO

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from ..domain.models import DichotomyReport, DimensionEstimate


def format_number(value: float | int | None, digits: int = 4) -> str:
    if value is None:
        return "-"
    if isinstance(value, int):
        return str(value)
    return f"{value:.{digits}g}"


def _render(renderable: object, width: int, with_color: bool) -> str:
    """Render a rich object to a string; without color the output is plain text."""
    buffer = StringIO()
    if with_color:
        console = Console(file=buffer, force_terminal=True, color_system="standard", width=width)
        console.print(renderable)
        return buffer.getvalue()
    console = Console(file=buffer, record=True, width=width, color_system=None)
    console.print(renderable)
    return console.export_text()


def format_key_values(
    title: str, entries: Mapping[str, object], width: int = 72, with_color: bool = False
) -> str:
    table = Table.grid(padding=(0, 1))
    table.add_column(justify="right", style="bold")
    table.add_column()
    for key, value in entries.items():
        shown = format_number(value) if isinstance(value, float) or value is None else str(value)
        table.add_row(f"{key}:", shown)
    panel = Panel(table, title=title, border_style="cyan" if with_color else "white")
    return _render(panel, width, with_color)


def format_table(
    title: str,
    columns: Sequence[str],
    rows: Sequence[Sequence[object]],
    width: int = 100,
    with_color: bool = False,
) -> str:
    table = Table(title=title)
    for column in columns:
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(*(format_number(v) if isinstance(v, float) or v is None else str(v) for v in row))
    return _render(table, width, with_color)


def format_dimension_estimate(estimate: DimensionEstimate, with_color: bool = False) -> str:
    status = "reliable" if estimate.reliable else "unreliable (r2 below threshold)"
    if with_color:
        status = f"[green]{status}[/]" if estimate.reliable else f"[yellow]{status}[/]"
    return format_key_values(
        "Box-counting dimension",
        {
            "D": estimate.slope,
            "window": f"[{estimate.window[0]:.4g}, {estimate.window[1]:.4g}]",
            "r2": estimate.r2,
            "fit": status,
        },
        with_color=with_color,
    )


def format_dichotomy_report(report: DichotomyReport, with_color: bool = False) -> str:
    low, high = report.window
    rows = [
        (
            row.t,
            row.classification.value,
            row.q,
            row.n_plateaus,
            row.d_re,
            row.d_im,
            row.d_abs2,
            row.slope_g,
            row.slope_n,
        )
        for row in report.rows
    ]
    return format_table(
        f"Dichotomy (window [{low:.4g}, {high:.4g}], sigma0 = {report.sigma0:g})",
        ("t", "kind", "q", "plateaus", "D_re", "D_im", "D_abs2", "slope_g", "slope_N"),
        rows,
        with_color=with_color,
    )


def format_success_message(message: str) -> str:
    """Format a success message."""
    return f"✓ {message}"


def format_error_message(message: str) -> str:
    """Format an error message."""
    return f"✗ {message}"
