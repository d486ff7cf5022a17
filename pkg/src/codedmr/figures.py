"""Figure rendering for sweep results (written next to the CSV output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_sweep_figure(points, path, title: str | None = None) -> None:
    """Mean normalized load vs computation load, one line per mode, with the
    scheme expectation dashed and the converse dotted."""
    by_mode: dict[str, list] = {}
    for pt in points:
        by_mode.setdefault(pt.mode, []).append(pt)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    colors = {"uncoded": "tab:red", "coded": "tab:blue"}
    for mode, pts in sorted(by_mode.items()):
        pts = sorted(pts, key=lambda p: p.r)
        rs = [p.r for p in pts]
        ax.errorbar(rs, [p.mean_L for p in pts],
                    yerr=[3 * p.stderr_L for p in pts],
                    marker="o", capsize=3, label=f"{mode} (measured)",
                    color=colors.get(mode))
        ax.plot(rs, [p.theory_L for p in pts], linestyle="--",
                color=colors.get(mode), alpha=0.7, label=f"{mode} (theory)")
    lb_pts = sorted((p for p in by_mode.get("coded", ())
                     if p.lower_bound_L is not None), key=lambda p: p.r)
    if lb_pts:
        ax.plot([p.r for p in lb_pts], [p.lower_bound_L for p in lb_pts],
                linestyle=":", color="black", label="lower bound")
    ax.set_xlabel("computation load r")
    ax.set_ylabel("normalized communication load L")
    first = next(iter(by_mode.values()))[0]
    ax.set_title(title or f"{first.model} n={first.n} K={first.K} "
                          f"({first.seed_count} seeds)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
