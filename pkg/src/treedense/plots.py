"""Figure rendering for the report commands.

Figures are an optional side artifact next to the delimited output; the CSV
and JSON files remain the machine-readable contract. PNG output carries no
timestamps, so a fixed configuration renders identical bytes.
"""

from __future__ import annotations


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def save_mc_figure(result, path: str) -> None:
    """Observed branching-failure rates against their exact bounds."""
    plt = _pyplot()
    levels = [r.level for r in result.rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(levels, [float(r.source_bound) for r in result.rows], "C0--", label="source bound")
    ax.plot(levels, [r.source_defect_freq for r in result.rows], "C0o", label="source observed")
    ax.plot(levels, [float(r.image_bound) for r in result.rows], "C1--", label="image bound")
    ax.plot(levels, [r.image_defect_freq for r in result.rows], "C1s", label="image observed")
    ax.set_xlabel("level")
    ax.set_ylabel("single-child event rate")
    ax.set_yscale("log")
    ax.set_title(f"branching failures: {result.l_name} -> {result.m_name}, {result.samples} samples")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def save_series_figure(name: str, partials: list[tuple[int, float]], path: str) -> None:
    """Partial sums of the gap series against the term count."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot([n for n, _ in partials], [p for _, p in partials], "C0.-")
    ax.set_xlabel("terms")
    ax.set_ylabel("partial sum")
    ax.set_title(f"gap series for schedule {name}")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
