"""Render response paths with bands to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLES = {
    "pointwise": dict(color="tab:blue", linestyle=":", label="pointwise"),
    "supt": dict(color="black", linestyle="--", label="sup-t"),
    "bonferroni": dict(color="tab:orange", linestyle="-.", label="union"),
}


def _split_by_variable(band, n_vars: int):
    H = band.center.size // n_vars
    for v in range(n_vars):
        yield slice(v * H, (v + 1) * H)


def plot_irf_bands(bands: dict, names: list[str], out_dir: str | Path,
                   prefix: str = "irf", truth: np.ndarray | None = None) -> list[Path]:
    """One figure per variable plus a combined grid.

    ``bands`` maps kind -> BandSet with variable-major labels over a
    common horizon range; ``truth`` is an optional (h2+1, n) overlay.
    Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    any_band = next(iter(bands.values()))
    n = len(names)
    H = any_band.center.size // n
    hgrid = np.arange(H)
    written = []

    ncol = min(n, 2)
    nrow = (n + ncol - 1) // ncol
    fig_all, axes = plt.subplots(nrow, ncol, figsize=(5.0 * ncol, 3.0 * nrow),
                                 squeeze=False)
    for v, name in enumerate(names):
        sel = slice(v * H, (v + 1) * H)
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for target in (ax, axes[v // ncol][v % ncol]):
            target.axhline(0.0, color="gray", linewidth=0.6)
            target.plot(hgrid, any_band.center[sel], color="tab:blue",
                        linewidth=1.6, label="estimate")
            for kind, band in bands.items():
                style = _STYLES.get(kind, dict(linestyle="--", label=kind))
                target.plot(hgrid, band.lower[sel], linewidth=1.0, **style)
                style_nolabel = {k: val for k, val in style.items() if k != "label"}
                target.plot(hgrid, band.upper[sel], linewidth=1.0, **style_nolabel)
            if truth is not None:
                target.plot(hgrid, truth[:H, v], color="goldenrod",
                            linewidth=1.4, label="truth")
            target.set_title(name)
            target.set_xlabel("horizon")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{prefix}_{name}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    axes[0][0].legend(loc="best", fontsize=8)
    for idx in range(n, nrow * ncol):
        axes[idx // ncol][idx % ncol].axis("off")
    fig_all.tight_layout()
    grid_path = out_dir / f"{prefix}_grid.png"
    fig_all.savefig(grid_path, dpi=150)
    plt.close(fig_all)
    written.append(grid_path)
    return written
