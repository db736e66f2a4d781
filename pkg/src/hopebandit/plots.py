"""Regret figures: one SVG per scenario, mean curve plus a one-std band.

Colors come from a stable hash of the policy name (with deterministic
probing on collisions), and the files are written with a fixed hash salt
and no timestamp metadata, so repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import ConfigError, _label_key

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

SVG_HASHSALT = "hopebandit"


def assign_colors(names) -> dict[str, str]:
    """Stable name -> color mapping, collision-probed in sorted name order."""
    colors: dict[str, str] = {}
    used: set[int] = set()
    for name in sorted(set(names)):
        idx = _label_key(name) % len(PALETTE)
        while idx in used:
            idx = (idx + 1) % len(PALETTE)
        used.add(idx)
        colors[name] = PALETTE[idx]
        if len(used) == len(PALETTE):
            used.clear()
    return colors


def render_scenario_figure(aggregates, out_path) -> Path:
    """One scenario's mean-regret curves with +-1 std bands, saved as SVG."""
    aggregates = list(aggregates)
    if not aggregates:
        raise ConfigError("no aggregates to plot")
    scenario = aggregates[0].scenario
    for agg in aggregates:
        if agg.scenario != scenario:
            raise ConfigError("render_scenario_figure got mixed scenarios")
    colors = assign_colors(agg.policy for agg in aggregates)

    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for agg in aggregates:
        rounds = range(1, agg.mean.shape[0] + 1)
        color = colors[agg.policy]
        line, = ax.plot(rounds, agg.mean, label=agg.policy, color=color, linewidth=1.6)
        line.set_gid(f"mean-{scenario}-{agg.policy}")
        band = ax.fill_between(rounds, agg.mean - agg.std, agg.mean + agg.std,
                               color=color, alpha=0.2, linewidth=0)
        band.set_gid(f"band-{scenario}-{agg.policy}")
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    ax.set_title(f"scenario {scenario}")
    ax.grid(alpha=0.3)
    ax.legend(loc="upper left")
    fig.tight_layout()
    with plt.rc_context({"svg.hashsalt": SVG_HASHSALT}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


def emit_plot(aggregates, out_dir) -> list[Path]:
    """Write regret_<scenario>.svg for every scenario present."""
    aggregates = list(aggregates)
    if not aggregates:
        raise ConfigError("no aggregates to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_scenario: dict[str, list] = {}
    for agg in aggregates:
        by_scenario.setdefault(agg.scenario, []).append(agg)
    paths = []
    for scenario, group in by_scenario.items():
        paths.append(render_scenario_figure(group, out_dir / f"regret_{scenario}.svg"))
    return paths
