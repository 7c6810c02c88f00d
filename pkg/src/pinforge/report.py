"""Report rendering: delimited curve/outcome files plus matplotlib figures.

Data files carry a deterministic metadata header (seed, parameters,
version); wall-clock timings go to the human-readable summary only, so the
delimited outputs are byte-identical across reruns of the same plan.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import __version__
from .attack import write_curve, write_outcomes


def _meta_lines(report):
    plan = report.plan
    return [
        f"pinforge v{__version__} mode={report.mode}",
        f"seed={plan.seed} length={plan.pin_length} metric={plan.metric} "
        f"a={plan.a!r} b={plan.b!r} layout={plan.layout}",
        f"pins_per_level={plan.pins_per_level} entries_per_pin={plan.entries_per_pin} "
        f"noise_sd={plan.noise_sd} quantization={plan.quantization}",
    ]


def write_report(report, out_dir, figures=True):
    """Write outcomes, per-curve files, a text summary and (optionally) the
    success-curve figure into out_dir. Returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    meta = _meta_lines(report)
    paths = []

    p = os.path.join(out_dir, "outcomes.csv")
    write_outcomes(report.outcomes, p, meta_lines=meta)
    paths.append(p)

    p = os.path.join(out_dir, "curve_aggregate.csv")
    write_curve(report.aggregate_curve, p, meta_lines=meta)
    paths.append(p)

    p = os.path.join(out_dir, "curve_baseline.csv")
    write_curve(report.baseline_curve, p, meta_lines=meta)
    paths.append(p)

    for level, curve in sorted(report.per_level_curves.items()):
        p = os.path.join(out_dir, f"curve_level{level}.csv")
        write_curve(curve, p, meta_lines=meta)
        paths.append(p)

    p = os.path.join(out_dir, "report.txt")
    with open(p, "w", encoding="utf-8") as fh:
        fh.write(render_summary(report))
    paths.append(p)

    if figures:
        p = os.path.join(out_dir, "success_curves.png")
        plot_success_curves(report, p)
        paths.append(p)
    return paths


def render_summary(report):
    lines = [f"pinforge v{__version__} report: {report.mode}", ""]
    lines.append("aggregate success rate:")
    for x, rate in report.aggregate_curve:
        base = dict(report.baseline_curve)[x]
        ratio = report.improvement[x]
        lines.append(f"  x={x:>7}  success={rate:.6f}  baseline={base:.6g}  "
                     f"improvement={ratio:.1f}x")
    if report.per_level_curves:
        lines.append("")
        lines.append("per-level success rate:")
        for level, curve in sorted(report.per_level_curves.items()):
            label = f"level {level}" if level else "unlabeled"
            vals = "  ".join(f"x={x}:{r:.4f}" for x, r in curve)
            lines.append(f"  {label}: {vals}")
    if report.metadata:
        lines.append("")
        lines.append("metadata:")
        for k, v in report.metadata.items():
            lines.append(f"  {k} = {v}")
    if report.timings:
        lines.append("")
        lines.append("timings (informational, not reproducible):")
        for k, v in report.timings.items():
            lines.append(f"  {k} = {v:.3f}s")
    return "\n".join(lines) + "\n"


def plot_success_curves(report, path):
    """One axes: aggregate, per-level and baseline success vs attempts."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    xs = [x for x, _ in report.aggregate_curve]
    ax.plot(xs, [r for _, r in report.aggregate_curve],
            marker="o", color="black", label="aggregate")
    for level, curve in sorted(report.per_level_curves.items()):
        label = f"level {level}" if level else "unlabeled"
        ax.plot([x for x, _ in curve], [r for _, r in curve],
                marker=".", alpha=0.8, label=label)
    ax.plot([x for x, _ in report.baseline_curve],
            [r for _, r in report.baseline_curve],
            linestyle="--", color="gray", label="random guessing")
    ax.set_xscale("log")
    ax.set_xlabel("allowed attempts x")
    ax.set_ylabel("success rate")
    ax.set_title(f"{report.mode} attack, length {report.plan.pin_length}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_frequency_analysis(levels, path):
    """Bar chart of corpus mass share and mean per-PIN frequency by level.
    `levels` is the output of strength.frequency_analysis."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    names = [str(lvl) for lvl, _, _ in levels]
    ax1.bar(names, [prop for _, prop, _ in levels], color="steelblue")
    ax1.set_xlabel("strength level")
    ax1.set_ylabel("share of user-chosen PINs")
    ax2.bar(names, [mean for _, _, mean in levels], color="indianred")
    ax2.set_xlabel("strength level")
    ax2.set_ylabel("mean frequency per PIN")
    for ax in (ax1, ax2):
        ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
