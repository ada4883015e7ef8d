"""Figure rendering for pipeline reports.

Each helper draws one self-contained PNG next to the delimited tables.
Figures are a convenience view of data that is already in the CSV
output; nothing downstream reads them back.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_return_map(path: Path, breakpoints, values, attracting: float, repelling: float) -> None:
    """The return map over a pinching witness against the diagonal."""
    xs = np.asarray(breakpoints, dtype=float)
    vs = np.asarray(values, dtype=float)
    grid = np.concatenate([xs, [1.0]])
    lift = np.concatenate([vs, [vs[0] + 1.0]])
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    ax.plot(grid, np.mod(lift, 1.0 + 1e-15), ".-", lw=1.2, ms=3, label="return map")
    ax.plot([0, 1], [0, 1], "--", color="gray", lw=0.8, label="identity")
    ax.plot([attracting], [attracting], "o", color="tab:green", label="attracting")
    ax.plot([repelling], [repelling], "o", color="tab:red", label="repelling")
    ax.set_xlabel("p")
    ax.set_ylabel("g(p)")
    ax.set_title("return map at the pinching witness")
    ax.legend(loc="upper left", fontsize=7)
    _save(fig, path)


def save_exponent_figure(path: Path, sample_values, mean: float, stderr: float) -> None:
    """Histogram of per-sample contraction rates with the mean marked."""
    vals = np.asarray(sample_values, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.hist(vals, bins=max(8, vals.size // 8), color="tab:blue", alpha=0.75)
    ax.axvline(mean, color="tab:red", lw=1.2, label=f"mean {mean:.4g}")
    if stderr > 0:
        ax.axvspan(mean - 3 * stderr, mean + 3 * stderr, color="tab:red", alpha=0.15,
                   label="3 standard errors")
    ax.axvline(0.0, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("two-point contraction rate")
    ax.set_ylabel("samples")
    ax.set_title("measure exponent samples")
    ax.legend(fontsize=7)
    _save(fig, path)


def save_attractor_curve(path: Path, curves) -> None:
    """Per-step normalized log ratios a_n for each offset curve."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for eps, sign, values in curves:
        n = np.arange(1, len(values) + 1)
        label = f"eps={eps:g} {'+' if sign > 0 else '-'}"
        ax.plot(n, values, lw=0.9, label=label)
    ax.set_xlabel("n")
    ax.set_ylabel("log(d_n/d_0)/n")
    ax.set_title("contraction at the attractor")
    ax.legend(fontsize=6, ncol=2)
    _save(fig, path)


def save_defect_figure(path: Path, stable, unstable) -> None:
    """Per-pair transport gaps on each side of the defect score."""
    s = np.asarray(stable, dtype=float)
    u = np.asarray(unstable, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(np.arange(s.size), s, width=0.4, label="stable", color="tab:blue")
    ax.bar(np.arange(u.size) + 0.4, u, width=0.4, label="unstable", color="tab:orange")
    ax.set_xlabel("pair")
    ax.set_ylabel("transport distance")
    ax.set_title("state defect per sampled pair")
    ax.legend(fontsize=7)
    _save(fig, path)


def save_atoms_figure(path: Path, atom_sets) -> None:
    """Fiber atoms per sampled base point, one row of dots per point."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for row, (label, positions, weights) in enumerate(atom_sets):
        p = np.asarray(positions, dtype=float)
        w = np.asarray(weights, dtype=float)
        sizes = 4.0 + 400.0 * w
        ax.scatter(p, np.full(p.size, row), s=sizes, alpha=0.6, edgecolors="none")
    ax.set_yticks(range(len(atom_sets)))
    ax.set_yticklabels([label for label, _, _ in atom_sets], fontsize=6)
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("fiber position")
    ax.set_title("estimated fiber measures")
    _save(fig, path)


def save_bump_figure(path: Path, agreements, heights, delta: float) -> None:
    """The bump profile: turning angle against agreement with the center."""
    a = np.asarray(agreements, dtype=float)
    h = np.asarray(heights, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.step(a, h, where="post", color="tab:purple", label="bump value")
    ax.step(a, h * delta, where="post", color="tab:red", label=f"angle (delta={delta:g})")
    ax.set_xlabel("agreement radius with the center")
    ax.set_ylabel("value")
    ax.set_title("perturbation bump profile")
    ax.legend(fontsize=7)
    _save(fig, path)


def save_holonomy_figure(path: Path, rows) -> None:
    """Continuity scatter: holonomy movement against base distance."""
    if not rows:
        return
    base = np.asarray([r[1] for r in rows], dtype=float)
    move = np.asarray([max(r[2], 1e-17) for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.loglog(base, move, "o", ms=3, alpha=0.6)
    ax.set_xlabel("base distance of tail change")
    ax.set_ylabel("holonomy sup distance")
    ax.set_title("holonomy continuity modulus")
    _save(fig, path)
