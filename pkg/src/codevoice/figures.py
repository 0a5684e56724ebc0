"""Plots rendered next to the evaluation report files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport, render_rate


def write_figures(report: EvalReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [_wer_per_case(report, out), _exact_match(report, out)]


def _wer_per_case(report: EvalReport, out: Path) -> Path:
    xs = range(report.n_cases)
    fig, ax = plt.subplots(figsize=(8.0, 3.2))
    ax.plot(xs, [r.wer_before for r in report.rows], lw=1.0, color="0.65",
            label="before refinement")
    ax.plot(xs, [r.wer_after for r in report.rows], lw=1.3, color="#c0392b",
            label="after refinement")
    ax.set_xlabel("case")
    ax.set_ylabel("WER")
    ax.set_ylim(bottom=0)
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("word error rate per case")
    fig.tight_layout()
    path = out / "wer_per_case.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _exact_match(report: EvalReport, out: Path) -> Path:
    misses = report.n_cases - report.exact_count
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    bars = ax.bar(["exact", "inexact"], [report.exact_count, misses],
                  color=["#27ae60", "0.75"], width=0.6)
    for bar in bars:
        ax.annotate(f"{int(bar.get_height())}",
                    (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("cases")
    ax.set_title(f"exact match rate {render_rate(report.exact_match_rate)}")
    fig.tight_layout()
    path = out / "exact_match.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
