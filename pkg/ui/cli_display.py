import csv
import math
from typing import Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from spectralhmm.config import CONSOLE_WIDTH
from spectralhmm.evaluation import SweepReport
from spectralhmm.hmm import HmmParams
from spectralhmm.inference import StepRecord
from spectralhmm.moments import MomentStats
from spectralhmm.spectral import PsrModel, numerical_rank
from spectralhmm.storage import format_float


def make_console() -> Console:
    """Diagnostics console; machine output never goes through it."""
    return Console(stderr=True, width=CONSOLE_WIDTH)


def show_singular_values(console: Console, singular_values: np.ndarray, rank: int, threshold: float):
    """
    Displays the singular-value profile of P21, marking the kept rank and the
    numerical rank at the auto threshold.
    """
    detected = numerical_rank(singular_values, threshold)
    top = singular_values[0] if singular_values.size else 0.0
    table = Table(title="Singular values of P21", show_header=True, header_style="bold magenta")
    table.add_column("k", justify="right")
    table.add_column("sigma_k", justify="right")
    table.add_column("sigma_k / sigma_1", justify="right")
    table.add_column("Kept")

    for k, s in enumerate(singular_values, start=1):
        ratio = s / top if top > 0 else 0.0
        style = "" if k <= detected else "grey50"
        table.add_row(str(k), f"{s:.6e}", f"{ratio:.3e}", "yes" if k <= rank else "", style=style)
        if k == rank:
            table.add_section()

    console.print(table)
    if rank > detected:
        console.print(f"[yellow]Requested rank {rank} exceeds numerical rank {detected}[/yellow]")


def show_sweep_summary(console: Console, report: SweepReport):
    table = Table(
        title=f"Convergence sweep (m={report.hmm['m']}, n={report.hmm['n']}, t={report.eval_len}, {report.mode})",
        show_header=True, header_style="bold magenta",
    )
    table.add_column("N", justify="right")
    table.add_column("Median L1", justify="right")
    table.add_column("Q25", justify="right")
    table.add_column("Q75", justify="right")
    table.add_column("Degenerate", justify="right")

    previous = None
    for row in report.summary:
        median = f"{row.median_l1:.4e}"
        if previous is not None and not math.isnan(row.median_l1):
            color = "green" if row.median_l1 < previous else "red"
            median = f"[{color}]{median}[/{color}]"
        table.add_row(str(row.N), median, f"{row.q25:.4e}", f"{row.q75:.4e}", str(row.degenerate_count))
        previous = row.median_l1
    console.print(table)


def show_file_summary(console: Console, kind: str, obj, path: str):
    """One table describing an HMM, moments or model file."""
    table = Table(title=f"{kind}: {path}", show_header=False)
    table.add_column("Field", style="bold")
    table.add_column("Value")

    if isinstance(obj, HmmParams):
        table.add_row("hidden states m", str(obj.m))
        table.add_row("alphabet n", str(obj.n))
        sv = np.linalg.svd(obj.O, compute_uv=False)
        table.add_row("cond(O)", f"{sv[0] / sv[-1]:.3e}")
        table.add_row("pi", ", ".join(f"{p:.4f}" for p in obj.pi))
    elif isinstance(obj, MomentStats):
        table.add_row("alphabet n", str(obj.n))
        for key, value in obj.provenance.to_dict().items():
            table.add_row(key, str(value))
        sv = np.linalg.svd(obj.P21, compute_uv=False)
        table.add_row("singular values of P21", ", ".join(f"{s:.3e}" for s in sv))
    elif isinstance(obj, PsrModel):
        table.add_row("alphabet n", str(obj.n))
        table.add_row("dimension m", str(obj.m))
        for key, value in obj.provenance.to_dict().items():
            table.add_row(key, str(value))
        table.add_row("binf . b1", format_float(obj.binf @ obj.b1))
        if obj.singular_values is not None:
            table.add_row("singular values of P21", ", ".join(f"{s:.3e}" for s in obj.singular_values))
    console.print(table)


def format_step(record: StepRecord) -> str:
    """
    One streaming output line: tab-separated clamped next distribution,
    normalizer, cumulative log-probability and validity flag. Never emits NaN.
    """
    if record.distribution is None:
        dist = ["-"]
    else:
        dist = [format_float(p) for p in record.distribution]
    # + 0.0 prints a negative zero as 0
    alpha = "-" if not math.isfinite(record.alpha) else format_float(record.alpha + 0.0)
    log_prob = format_float(record.log_prob) if record.valid else "-inf"
    return "\t".join(dist + [alpha, log_prob, "valid" if record.valid else "invalid"])


def format_score(log_prob: float, valid: bool) -> str:
    return f"{format_float(log_prob) if valid else '-inf'}\t{'valid' if valid else 'invalid'}"


def _csv_float(value: float) -> str:
    return "nan" if math.isnan(value) else format_float(value)


def export_sweep_to_csv(report: SweepReport, detail_path: str, summary_path: Optional[str] = None):
    """
    Writes the per-cell detail CSV (N, seed, l1_error, degenerate_flag) and the
    per-N summary CSV (N, median_l1, q25, q75).
    """
    with open(detail_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["N", "seed", "l1_error", "degenerate_flag"])
        for r in report.records:
            writer.writerow([r.N, r.seed, _csv_float(r.l1_error), int(r.degenerate)])

    if summary_path:
        with open(summary_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["N", "median_l1", "q25", "q75"])
            for s in report.summary:
                writer.writerow([s.N, _csv_float(s.median_l1), _csv_float(s.q25), _csv_float(s.q75)])
