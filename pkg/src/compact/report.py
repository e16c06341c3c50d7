"""Figures for benchmark reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import REFERENCE_RATES, BenchReport  # noqa: E402

STATE_ORDER = ("created", "detached", "discharged", "violated", "expired", "satisfied")


def plot_throughput(report: BenchReport, path, with_reference: bool = True) -> Path:
    """Grouped bar chart of changes/s by norm and state, written to ``path``."""
    norms = list(dict.fromkeys(s.norm for s in report.stats))
    present = {s.state for s in report.stats}
    states = [s for s in STATE_ORDER if s in present]
    rate = {(s.norm, s.state): s.changes_per_second for s in report.stats}

    width = 0.8 / max(1, len(states))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for j, state in enumerate(states):
        placed = []
        for i, norm in enumerate(norms):
            if (norm, state) in rate:
                placed.append((i + (j - (len(states) - 1) / 2) * width, norm))
        ax.bar([x for x, _ in placed], [rate[(n, state)] for _, n in placed], width=width, label=state)
        ref = [(x, REFERENCE_RATES[(n, state)]) for x, n in placed if (n, state) in REFERENCE_RATES]
        if with_reference and ref:
            ax.scatter([x for x, _ in ref], [y for _, y in ref], marker="_", s=120, color="black",
                       zorder=3, label="reference" if j == 0 else None)
    ax.set_xticks(range(len(norms)))
    ax.set_xticklabels(norms)
    ax.set_ylabel("Changes per second")
    ax.set_ylim(bottom=0)
    ax.set_title(f"View construction throughput ({report.stats[0].docs_processed if report.stats else 0} histories)")
    ax.legend(fontsize=8, ncol=3)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_report(report: BenchReport, directory) -> dict[str, Path]:
    """Write ``bench.jsonl`` and ``throughput.png`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    jsonl = directory / "bench.jsonl"
    jsonl.write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
    png = plot_throughput(report, directory / "throughput.png")
    return {"jsonl": jsonl, "figure": png}
