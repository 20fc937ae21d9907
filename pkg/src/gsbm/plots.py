"""Figure rendering for bench reports.

Renders summary figures next to the CSV output. Uses the Agg backend so the
CLI works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _by_pi(rows):
    groups = {}
    for row in rows:
        groups.setdefault(row["pi"], []).append(row)
    for pi, group in groups.items():
        group.sort(key=lambda r: r["s"])
    return dict(sorted(groups.items()))


def save_detection_figure(rows, path, scenario):
    """Power and FDR against the number of outliers, one line per signal level."""
    fig, (ax_power, ax_fdr) = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
    for pi, group in _by_pi(rows).items():
        s_values = [r["s"] for r in group]
        ax_power.plot(s_values, [r["power"] for r in group], marker="o", label=f"pi={pi:g}")
        ax_fdr.plot(s_values, [r["fdr"] for r in group], marker="o", label=f"pi={pi:g}")
    ax_power.set_xlabel("outliers s")
    ax_fdr.set_xlabel("outliers s")
    ax_power.set_ylabel("power")
    ax_fdr.set_ylabel("FDR")
    ax_power.set_ylim(-0.05, 1.05)
    ax_fdr.set_ylim(-0.05, 1.05)
    ax_power.legend()
    fig.suptitle(f"{scenario} outlier detection")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_prediction_figure(rows, path, scenario):
    """Held-out prediction error of the model against the density baseline."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for pi, group in _by_pi(rows).items():
        s_values = [r["s"] for r in group]
        ax.plot(s_values, [r["pred_mse_model"] for r in group],
                marker="o", label=f"model, pi={pi:g}")
        ax.plot(s_values, [r["pred_mse_baseline"] for r in group],
                marker="s", linestyle="--", label=f"baseline, pi={pi:g}")
    ax.set_xlabel("outliers s")
    ax.set_ylabel("prediction MSE")
    ax.legend()
    fig.suptitle(f"{scenario} link prediction")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
